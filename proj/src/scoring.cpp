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

#include "evgraph/scoring.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>
#include <vector>

#include "evgraph/errors.hpp"

namespace evgraph {

namespace {

struct ArgInstance {
  const std::string* event_type;
  const std::string* role;
  Span span;
};

std::vector<ArgInstance> arg_instances(const std::vector<EventMention>& events) {
  std::vector<ArgInstance> out;
  for (const EventMention& m : events)
    for (const Argument& a : m.arguments) out.push_back({&m.event_type, &a.role, a.span});
  return out;
}

// Pairs of (pred, gold) sentences in gold order.
std::vector<std::pair<const AnnotatedSentence*, const AnnotatedSentence*>> align(
    const Corpus& pred, const Corpus& gold) {
  std::unordered_map<std::string, const AnnotatedSentence*> by_id;
  for (const AnnotatedSentence& s : pred.sentences) by_id.emplace(s.sentence.id, &s);
  if (by_id.size() != gold.sentences.size()) {
    throw AlignmentError("prediction has " + std::to_string(pred.sentences.size()) +
                         " sentences, gold has " +
                         std::to_string(gold.sentences.size()));
  }
  std::vector<std::pair<const AnnotatedSentence*, const AnnotatedSentence*>> pairs;
  pairs.reserve(gold.sentences.size());
  for (const AnnotatedSentence& g : gold.sentences) {
    auto it = by_id.find(g.sentence.id);
    if (it == by_id.end())
      throw AlignmentError("sentence '" + g.sentence.id + "' missing from prediction");
    pairs.emplace_back(it->second, &g);
  }
  return pairs;
}

struct SentenceScores {
  Counts trg, arg_perfect, arg_overlap;
  std::size_t presence_correct = 0;
};

SentenceScores score_sentence(const AnnotatedSentence& p, const AnnotatedSentence& g) {
  SentenceScores s;
  s.trg = trigger_counts(p.events, g.events);
  s.arg_perfect = argument_counts(p.events, g.events, SpanMatch::kPerfect);
  s.arg_overlap = argument_counts(p.events, g.events, SpanMatch::kOverlap80);
  s.presence_correct = (p.events.empty() == g.events.empty()) ? 1 : 0;
  return s;
}

ScoreReport finish(const SentenceScores& total, std::size_t n_sentences) {
  ScoreReport r;
  r.trg_c = PRF::from_counts(total.trg);
  r.arg_c_perfect = PRF::from_counts(total.arg_perfect);
  r.arg_c_overlap = PRF::from_counts(total.arg_overlap);
  r.presence_accuracy =
      n_sentences == 0 ? 0.0 : static_cast<double>(total.presence_correct) / n_sentences;
  return r;
}

}  // namespace

PRF PRF::from_counts(const Counts& c) {
  PRF p;
  p.tp = c.tp;
  p.n_pred = c.n_pred;
  p.n_gold = c.n_gold;
  p.precision = c.n_pred ? static_cast<double>(c.tp) / c.n_pred : 0.0;
  p.recall = c.n_gold ? static_cast<double>(c.tp) / c.n_gold : 0.0;
  const double sum = p.precision + p.recall;
  p.f1 = sum > 0.0 ? 2.0 * p.precision * p.recall / sum : 0.0;
  return p;
}

bool spans_match(const Span& pred, const Span& gold, SpanMatch mode) {
  if (mode == SpanMatch::kPerfect || gold.length() <= 5) return pred == gold;
  const int overlap =
      std::max(0, std::min(pred.end, gold.end) - std::max(pred.start, gold.start));
  // overlap / |gold| >= 0.8 in integer arithmetic.
  return 5 * overlap >= 4 * gold.length();
}

std::size_t max_bipartite_matching(
    std::size_t n_left, std::size_t n_right,
    const std::function<bool(std::size_t, std::size_t)>& compatible) {
  std::vector<std::vector<std::size_t>> adj(n_left);
  for (std::size_t i = 0; i < n_left; ++i)
    for (std::size_t j = 0; j < n_right; ++j)
      if (compatible(i, j)) adj[i].push_back(j);

  constexpr std::size_t kFree = static_cast<std::size_t>(-1);
  std::vector<std::size_t> owner(n_right, kFree);
  std::vector<char> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t u) {
    for (std::size_t v : adj[u]) {
      if (visited[v]) continue;
      visited[v] = 1;
      if (owner[v] == kFree || augment(owner[v])) {
        owner[v] = u;
        return true;
      }
    }
    return false;
  };
  std::size_t size = 0;
  for (std::size_t u = 0; u < n_left; ++u) {
    if (adj[u].empty()) continue;
    visited.assign(n_right, 0);
    if (augment(u)) ++size;
  }
  return size;
}

Counts trigger_counts(const std::vector<EventMention>& pred,
                      const std::vector<EventMention>& gold) {
  Counts c;
  c.n_pred = pred.size();
  c.n_gold = gold.size();
  c.tp = max_bipartite_matching(pred.size(), gold.size(), [&](std::size_t i, std::size_t j) {
    return pred[i].trigger == gold[j].trigger && pred[i].event_type == gold[j].event_type;
  });
  return c;
}

Counts argument_counts(const std::vector<EventMention>& pred,
                       const std::vector<EventMention>& gold, SpanMatch mode) {
  const std::vector<ArgInstance> p = arg_instances(pred);
  const std::vector<ArgInstance> g = arg_instances(gold);
  Counts c;
  c.n_pred = p.size();
  c.n_gold = g.size();
  c.tp = max_bipartite_matching(p.size(), g.size(), [&](std::size_t i, std::size_t j) {
    return *p[i].event_type == *g[j].event_type && *p[i].role == *g[j].role &&
           spans_match(p[i].span, g[j].span, mode);
  });
  return c;
}

PRF score_triggers(const Corpus& pred, const Corpus& gold) {
  Counts total;
  for (const auto& [p, g] : align(pred, gold)) total += trigger_counts(p->events, g->events);
  return PRF::from_counts(total);
}

PRF score_arguments(const Corpus& pred, const Corpus& gold, SpanMatch mode) {
  Counts total;
  for (const auto& [p, g] : align(pred, gold))
    total += argument_counts(p->events, g->events, mode);
  return PRF::from_counts(total);
}

double presence_accuracy(const Corpus& pred, const Corpus& gold) {
  const auto pairs = align(pred, gold);
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& [p, g] : pairs) correct += (p->events.empty() == g->events.empty());
  return static_cast<double>(correct) / pairs.size();
}

ScoreReport score_report(const Corpus& pred, const Corpus& gold) {
  const auto pairs = align(pred, gold);
  const long n = static_cast<long>(pairs.size());
  std::size_t trg_tp = 0, trg_p = 0, trg_g = 0;
  std::size_t ap_tp = 0, ap_p = 0, ap_g = 0;
  std::size_t ao_tp = 0, ao_p = 0, ao_g = 0;
  std::size_t presence = 0;
#pragma omp parallel for schedule(dynamic, 16) if (n > 256)                  \
    reduction(+ : trg_tp, trg_p, trg_g, ap_tp, ap_p, ap_g, ao_tp, ao_p, ao_g, \
                  presence)
  for (long i = 0; i < n; ++i) {
    const SentenceScores s = score_sentence(*pairs[i].first, *pairs[i].second);
    trg_tp += s.trg.tp;
    trg_p += s.trg.n_pred;
    trg_g += s.trg.n_gold;
    ap_tp += s.arg_perfect.tp;
    ap_p += s.arg_perfect.n_pred;
    ap_g += s.arg_perfect.n_gold;
    ao_tp += s.arg_overlap.tp;
    ao_p += s.arg_overlap.n_pred;
    ao_g += s.arg_overlap.n_gold;
    presence += s.presence_correct;
  }
  SentenceScores total;
  total.trg = {trg_tp, trg_p, trg_g};
  total.arg_perfect = {ap_tp, ap_p, ap_g};
  total.arg_overlap = {ao_tp, ao_p, ao_g};
  total.presence_correct = presence;
  return finish(total, pairs.size());
}

namespace serial {

ScoreReport score_report(const Corpus& pred, const Corpus& gold) {
  const auto pairs = align(pred, gold);
  SentenceScores total;
  for (const auto& [p, g] : pairs) {
    const SentenceScores s = score_sentence(*p, *g);
    total.trg += s.trg;
    total.arg_perfect += s.arg_perfect;
    total.arg_overlap += s.arg_overlap;
    total.presence_correct += s.presence_correct;
  }
  return finish(total, pairs.size());
}

}  // namespace serial

nlohmann::ordered_json report_to_json(const ScoreReport& report) {
  auto prf = [](const PRF& p) {
    nlohmann::ordered_json j;
    j["p"] = p.precision;
    j["r"] = p.recall;
    j["f1"] = p.f1;
    j["tp"] = p.tp;
    j["n_pred"] = p.n_pred;
    j["n_gold"] = p.n_gold;
    return j;
  };
  nlohmann::ordered_json j;
  j["trg_c"] = prf(report.trg_c);
  j["arg_c_perfect"] = prf(report.arg_c_perfect);
  j["arg_c_overlap"] = prf(report.arg_c_overlap);
  j["presence_accuracy"] = report.presence_accuracy;
  return j;
}

std::string report_table(const ScoreReport& report) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %9s %9s %9s %7s %7s %7s\n", "metric", "P", "R",
                "F1", "tp", "pred", "gold");
  out += line;
  auto row = [&](const char* name, const PRF& p) {
    std::snprintf(line, sizeof line, "%-22s %9.3f %9.3f %9.3f %7zu %7zu %7zu\n", name,
                  p.precision, p.recall, p.f1, p.tp, p.n_pred, p.n_gold);
    out += line;
  };
  row("Trg-C", report.trg_c);
  row("Arg-C (perfect)", report.arg_c_perfect);
  row("Arg-C (80% overlap)", report.arg_c_overlap);
  std::snprintf(line, sizeof line, "%-22s %9.3f\n", "Event presence acc.",
                report.presence_accuracy);
  out += line;
  return out;
}

}  // namespace evgraph
