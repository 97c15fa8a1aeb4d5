// Copyright 2026 The EventGraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "evgraph/synthetic.hpp"

#include <array>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "evgraph/errors.hpp"

namespace evgraph {

namespace {

const std::vector<std::string> kEventTypes = {
    "Attack", "Die",          "Transport", "Meet",           "Injure",
    "Elect",  "Arrest-Jail",  "Sue",       "Transfer-Money", "Demonstrate"};

const std::vector<std::string> kRoles = {
    "Agent",  "Victim",      "Place",  "Instrument", "Target",
    "Entity", "Destination", "Origin", "Person",     "Attacker"};

// Four single-token triggers and one two-token trigger per event type.
const std::vector<std::array<const char*, 5>> kTriggers = {
    {"attacked", "bombed", "struck", "raided", "opened fire"},
    {"died", "perished", "succumbed", "drowned", "passed away"},
    {"traveled", "moved", "sailed", "flew", "set off"},
    {"met", "gathered", "convened", "assembled", "sat down"},
    {"injured", "wounded", "hurt", "maimed", "beat up"},
    {"elected", "chose", "voted", "appointed", "swore in"},
    {"arrested", "detained", "jailed", "captured", "locked up"},
    {"sued", "charged", "accused", "indicted", "took action"},
    {"paid", "donated", "funded", "lent", "paid off"},
    {"protested", "marched", "rallied", "demonstrated", "walked out"}};

const std::vector<std::string> kCues = {"by",   "against", "with", "in",
                                        "from", "for",     "into", "near",
                                        "toward", "under"};

const std::vector<std::string> kSyllables = {"ka", "lo", "mi", "ru", "ze", "ta",
                                             "vo", "ni", "sa", "pe", "du", "ko",
                                             "ra", "bi", "fu", "ge"};

const std::vector<std::string> kNouns = {
    "soldiers", "civilians", "journalist", "officials", "rebels",  "police",
    "villagers", "protesters", "doctors",  "students",  "workers", "leaders",
    "city",     "village",   "border",     "capital",   "hills",   "market",
    "harbor",   "airport",   "embassy",    "convoy",    "court",   "bank"};

const std::vector<std::string> kAdjectives = {
    "local", "foreign", "young", "several", "armed", "senior", "unidentified",
    "two",   "three",   "angry", "northern", "southern"};

const std::vector<std::string> kOrganizations = {
    "coalition", "army", "government", "militia", "company", "union", "ministry",
    "navy"};

const std::vector<std::array<const char*, 2>> kCompoundHeads = {
    {"fighter", "jets"},
    {"armored", "vehicles"},
    {"press", "office"},
    {"security", "forces"},
    {"patrol", "boats"}};

const std::vector<std::vector<std::string>> kLeads = {
    {"officials", "said"}, {"reports", "say"}, {"yesterday", ","},
    {"on", "monday", ","}, {"witnesses", "said"}};

const std::vector<std::vector<std::string>> kQuiet = {
    {"was", "quiet"},
    {"remained", "calm"},
    {"looked", "busy"},
    {"stayed", "closed"},
    {"seemed", "peaceful"}};

const std::vector<std::vector<std::string>> kJoiners = {
    {",", "and"}, {";", "then"}, {",", "while"}, {"and", "later"}};

std::string event_type_name(int t) {
  if (t < static_cast<int>(kEventTypes.size())) return kEventTypes[t];
  return "Event-" + std::to_string(t);
}

std::string role_name(int r) {
  if (r < static_cast<int>(kRoles.size())) return kRoles[r];
  return "Role-" + std::to_string(r);
}

std::string cue_word(int r) {
  if (r < static_cast<int>(kCues.size())) return kCues[r];
  return "via" + kSyllables[r % 16] + kSyllables[(r / 16) % 16];
}

// Returns the tokens of the k-th trigger (k in [0, 5)) of event type t.
std::vector<std::string> trigger_tokens(int t, int k) {
  std::string phrase;
  if (t < static_cast<int>(kTriggers.size())) {
    phrase = kTriggers[t][k];
  } else {
    auto word = [&](int j) {
      return kSyllables[t % 16] + kSyllables[(t / 16) % 16] + kSyllables[j] + "ed";
    };
    phrase = k < 4 ? word(k) : word(4) + " " + "out";
  }
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos <= phrase.size()) {
    std::size_t next = phrase.find(' ', pos);
    if (next == std::string::npos) next = phrase.size();
    tokens.push_back(phrase.substr(pos, next - pos));
    pos = next + 1;
  }
  return tokens;
}

class Builder {
 public:
  explicit Builder(std::uint64_t seed) : rng_(seed) {}

  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  bool chance(double p) {
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p;
  }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

  std::vector<std::string> tokens;

  Span append(const std::vector<std::string>& words) {
    const int start = static_cast<int>(tokens.size());
    tokens.insert(tokens.end(), words.begin(), words.end());
    return Span{start, static_cast<int>(tokens.size())};
  }
  Span append(const std::string& word) { return append(std::vector{word}); }

  // Noun phrase; occasionally longer than five tokens.
  Span noun_phrase() {
    const std::size_t shape = below(20);
    if (shape < 3) {
      return append({"the", pick(kAdjectives), pick(kAdjectives), pick(kNouns), "of",
                     "the", pick(kNouns)});
    }
    if (shape < 8) return append(pick(kNouns));
    if (shape < 14) return append({"the", pick(kNouns)});
    return append({"the", pick(kAdjectives), pick(kNouns)});
  }

 private:
  std::mt19937_64 rng_;
};

// Event types use their own slice of the role inventory.
std::vector<int> roles_of(int type, int n_roles) {
  std::vector<int> roles;
  for (int j = 0; j < std::min(3, n_roles); ++j) roles.push_back((type + j) % n_roles);
  return roles;
}

EventMention clause(Builder& b, int type, int n_roles) {
  const std::vector<int> roles = roles_of(type, n_roles);
  EventMention m;
  m.event_type = event_type_name(type);
  const bool nested = roles.size() >= 2 && b.chance(0.15);
  if (nested) {
    // "the coalition fighter jets": the organization token is an argument
    // of its own inside the larger argument.
    const auto& head = b.pick(kCompoundHeads);
    const Span whole = b.append({"the", b.pick(kOrganizations), head[0], head[1]});
    m.arguments.push_back(Argument{role_name(roles[0]), whole});
    m.arguments.push_back(
        Argument{role_name(roles[1]), Span{whole.start + 1, whole.start + 2}});
  } else if (b.chance(0.85)) {
    m.arguments.push_back(Argument{role_name(roles[0]), b.noun_phrase()});
  }
  const int k = b.chance(0.2) ? 4 : static_cast<int>(b.below(4));
  m.trigger = b.append(trigger_tokens(type, k));
  for (std::size_t j = nested ? 2 : 1; j < roles.size(); ++j) {
    if (!b.chance(0.5)) continue;
    b.append(cue_word(roles[j]));
    m.arguments.push_back(Argument{role_name(roles[j]), b.noun_phrase()});
  }
  if (m.arguments.empty()) {
    b.append(cue_word(roles.back()));
    m.arguments.push_back(Argument{role_name(roles.back()), b.noun_phrase()});
  }
  return m;
}

// "the rebels attacked and killed ...": one subject shared by two events.
std::vector<EventMention> shared_clause(Builder& b, int type_a, int type_b,
                                        int n_roles) {
  const std::vector<int> roles_a = roles_of(type_a, n_roles);
  const std::vector<int> roles_b = roles_of(type_b, n_roles);
  const Span subject = b.noun_phrase();
  EventMention a, c;
  a.event_type = event_type_name(type_a);
  c.event_type = event_type_name(type_b);
  a.trigger = b.append(trigger_tokens(type_a, static_cast<int>(b.below(4))));
  b.append("and");
  c.trigger = b.append(trigger_tokens(type_b, static_cast<int>(b.below(5))));
  a.arguments.push_back(Argument{role_name(roles_a[0]), subject});
  c.arguments.push_back(Argument{role_name(roles_b[0]), subject});
  if (roles_b.size() >= 2 && b.chance(0.6)) {
    b.append(cue_word(roles_b[1]));
    c.arguments.push_back(Argument{role_name(roles_b[1]), b.noun_phrase()});
  }
  return {a, c};
}

}  // namespace

Corpus gen_synthetic(std::uint64_t seed, std::size_t n_sentences,
                     int n_event_types, int n_roles) {
  if (n_sentences < 1 || n_event_types < 1 || n_roles < 1)
    throw ConfigError("gen_synthetic needs n_sentences >= 1 and ontology >= (1,1)");

  Corpus corpus;
  for (int t = 0; t < n_event_types; ++t) corpus.ontology.add_event_type(event_type_name(t));
  for (int r = 0; r < n_roles; ++r) corpus.ontology.add_role(role_name(r));

  Builder b(seed);
  for (std::size_t i = 0; i < n_sentences; ++i) {
    b.tokens.clear();
    AnnotatedSentence s;
    char id[64];
    std::snprintf(id, sizeof id, "syn-%llu-%05zu",
                  static_cast<unsigned long long>(seed), i);
    s.sentence.id = id;

    const std::size_t roll = b.below(100);
    const int n_events = roll < 15 ? 0 : roll < 55 ? 1 : roll < 85 ? 2 : 3;
    if (b.chance(0.3)) b.append(b.pick(kLeads));

    if (n_events == 0) {
      b.noun_phrase();
      b.append(b.pick(kQuiet));
    }
    int remaining = n_events;
    while (remaining > 0) {
      if (remaining < n_events) b.append(b.pick(kJoiners));
      const int type = static_cast<int>(b.below(n_event_types));
      if (remaining >= 2 && b.chance(0.35)) {
        const int other = static_cast<int>(b.below(n_event_types));
        for (EventMention& m : shared_clause(b, type, other, n_roles))
          s.events.push_back(std::move(m));
        remaining -= 2;
      } else {
        s.events.push_back(clause(b, type, n_roles));
        remaining -= 1;
      }
    }
    b.append(".");
    s.sentence.tokens = b.tokens;
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace evgraph
