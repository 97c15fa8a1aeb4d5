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

#include "doctest.h"
#include "evgraph/errors.hpp"
#include "evgraph/scoring.hpp"
#include "evgraph/synthetic.hpp"
#include "support/fixtures.hpp"

using namespace evgraph;
using namespace evgraph::testing;

namespace {

Corpus one(std::vector<EventMention> ms, int n_tokens = 20, const std::string& id = "s") {
  Corpus c;
  c.sentences.push_back({Sentence{id, std::vector<std::string>(n_tokens, "t")}, std::move(ms)});
  return c;
}

EventMention attack_with(Span arg) { return EventMention{Span{0, 1}, "Attack", {{"Target", arg}}}; }

}  // namespace

TEST_CASE("identity scores 1.0") {
  const Corpus g{{figure1()}, {}};
  const ScoreReport r = score_report(g, g);
  CHECK(r.trg_c.f1 == 1.0);
  CHECK(r.arg_c_perfect.f1 == 1.0);
  CHECK(r.arg_c_overlap.f1 == 1.0);
  CHECK(r.presence_accuracy == 1.0);
  CHECK(r.trg_c.tp == 2);
}

TEST_CASE("one of two triggers correct") {
  auto wrong = figure1_mentions();
  wrong[1].event_type = "Die";
  const PRF p = score_triggers(Corpus{{{figure1_sentence(), wrong}}, {}}, Corpus{{figure1()}, {}});
  CHECK(p.precision == 0.5);
  CHECK(p.recall == 0.5);
  CHECK(p.f1 == 0.5);
}

TEST_CASE("duplicate predictions are credited once") {
  const EventMention m{Span{3, 4}, "Die", {}};
  const PRF p = score_triggers(one({m, m}), one({m}));
  CHECK(p.tp == 1);
  CHECK(p.precision == 0.5);
  CHECK(p.recall == 1.0);
}

TEST_CASE("overlap mode relaxes only long gold spans") {
  SUBCASE("six of seven gold tokens") {
    const Corpus gold = one({attack_with({3, 10})}), pred = one({attack_with({3, 9})});
    CHECK(score_arguments(pred, gold, SpanMatch::kPerfect).tp == 0);
    CHECK(score_arguments(pred, gold, SpanMatch::kOverlap80).tp == 1);
  }
  SUBCASE("three of four gold tokens") {
    const Corpus gold = one({attack_with({3, 7})}), pred = one({attack_with({3, 6})});
    CHECK(score_arguments(pred, gold, SpanMatch::kPerfect).tp == 0);
    CHECK(score_arguments(pred, gold, SpanMatch::kOverlap80).tp == 0);
  }
  SUBCASE("four of five tokens still needs a perfect match") {
    CHECK_FALSE(spans_match({3, 7}, {3, 8}, SpanMatch::kOverlap80));
    CHECK(spans_match({3, 8}, {3, 8}, SpanMatch::kOverlap80));
  }
  SUBCASE("threshold at six tokens") {
    CHECK(spans_match({0, 5}, {0, 6}, SpanMatch::kOverlap80));
    CHECK_FALSE(spans_match({0, 4}, {0, 6}, SpanMatch::kOverlap80));
    CHECK(spans_match({2, 12}, {2, 8}, SpanMatch::kOverlap80));
  }
  SUBCASE("brute force over span pairs") {
    for (int gs = 0; gs < 6; ++gs)
      for (int ge = gs + 1; ge <= 14; ++ge)
        for (int ps = 0; ps < 14; ++ps)
          for (int pe = ps + 1; pe <= 14; ++pe) {
            const Span p{ps, pe}, g{gs, ge};
            REQUIRE(spans_match(p, g, SpanMatch::kOverlap80) == overlap_oracle(p, g));
            REQUIRE(spans_match(p, g, SpanMatch::kPerfect) == (p == g));
          }
  }
}

TEST_CASE("arguments match on event type and role") {
  const Corpus gold = one({attack_with({3, 5})});
  EventMention other = attack_with({3, 5});
  other.trigger = Span{8, 9};
  CHECK(score_arguments(one({other}), gold, SpanMatch::kPerfect).tp == 1);
  other.event_type = "Die";
  CHECK(score_arguments(one({other}), gold, SpanMatch::kPerfect).tp == 0);
  EventMention role = attack_with({3, 5});
  role.arguments[0].role = "Victim";
  CHECK(score_arguments(one({role}), gold, SpanMatch::kPerfect).tp == 0);
}

TEST_CASE("presence accuracy") {
  const EventMention m{Span{0, 1}, "Die", {}};
  Corpus gold, pred;
  for (int i = 0; i < 4; ++i) {
    const std::string id = "s" + std::to_string(i);
    gold.sentences.push_back({Sentence{id, {"a", "b"}}, i < 2 ? std::vector{m} : std::vector<EventMention>{}});
    pred.sentences.push_back({Sentence{id, {"a", "b"}}, std::vector{m}});
  }
  CHECK(presence_accuracy(pred, gold) == 0.5);
  pred.sentences[2].events.clear();
  CHECK(presence_accuracy(pred, gold) == 0.75);
  CHECK(presence_accuracy(gold, gold) == 1.0);
}

TEST_CASE("misaligned corpora are rejected") {
  const Corpus a = one({}, 3, "a"), b = one({}, 3, "b");
  CHECK_THROWS_AS(score_report(a, b), AlignmentError);
  CHECK_THROWS_AS(presence_accuracy(a, b), AlignmentError);
  Corpus two = a;
  two.sentences.push_back(b.sentences[0]);
  CHECK_THROWS_AS(score_triggers(two, a), AlignmentError);
}

TEST_CASE("matching agrees with exhaustive enumeration") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t nl = rng() % 5, nr = rng() % 5;
    std::vector<std::vector<bool>> ok(nl, std::vector<bool>(nr));
    for (auto& row : ok)
      for (std::size_t j = 0; j < nr; ++j) row[j] = rng() % 3 == 0;
    auto f = [&](std::size_t i, std::size_t j) { return ok[i][j]; };
    REQUIRE(max_bipartite_matching(nl, nr, f) == exhaustive_matching(nl, nr, f));
  }
}

TEST_CASE("argument counts agree with the exhaustive oracle on small sentences") {
  std::mt19937_64 rng(11);
  int checked = 0;
  while (checked < 500) {
    const AnnotatedSentence g = random_mentions(rng, "x");
    const auto pred = perturb_mentions(g.events, rng, g.sentence.size());
    const auto gt = argument_tuples(g.events), pt = argument_tuples(pred);
    if (gt.size() > 4 || pt.size() > 4) continue;
    ++checked;
    for (SpanMatch mode : {SpanMatch::kPerfect, SpanMatch::kOverlap80}) {
      auto ok = [&](std::size_t i, std::size_t j) {
        const auto& [pt_type, pt_role, pt_span] = pt[i];
        const auto& [gt_type, gt_role, gt_span] = gt[j];
        return pt_type == gt_type && pt_role == gt_role &&
               (mode == SpanMatch::kPerfect ? pt_span == gt_span : overlap_oracle(pt_span, gt_span));
      };
      const Counts c = argument_counts(pred, g.events, mode);
      REQUIRE(c.tp == exhaustive_matching(pt.size(), gt.size(), ok));
      CHECK(c.n_pred == pt.size());
      CHECK(c.n_gold == gt.size());
    }
    std::size_t trig_oracle = exhaustive_matching(pred.size(), g.events.size(), [&](auto i, auto j) {
      return pred[i].trigger == g.events[j].trigger && pred[i].event_type == g.events[j].event_type;
    });
    CHECK(trigger_counts(pred, g.events).tp == trig_oracle);
  }
}

TEST_CASE("properties over a perturbed synthetic corpus") {
  const Corpus gold = gen_synthetic(21, 400, 5, 6);
  std::mt19937_64 rng(2);
  Corpus pred = gold;
  for (auto& s : pred.sentences) s.events = perturb_mentions(s.events, rng, s.sentence.size());

  const ScoreReport r = score_report(pred, gold);
  const ScoreReport swapped = score_report(gold, pred);
  CHECK(r.trg_c.precision == swapped.trg_c.recall);
  CHECK(r.trg_c.recall == swapped.trg_c.precision);
  CHECK(r.trg_c.f1 == doctest::Approx(swapped.trg_c.f1));
  CHECK(r.arg_c_perfect.f1 == doctest::Approx(swapped.arg_c_perfect.f1));
  CHECK(r.arg_c_overlap.tp >= r.arg_c_perfect.tp);
  CHECK(r.arg_c_overlap.f1 >= r.arg_c_perfect.f1);
  for (const PRF& p : {r.trg_c, r.arg_c_perfect, r.arg_c_overlap}) {
    CHECK(p.f1 >= std::min(p.precision, p.recall));
    CHECK(p.f1 <= std::max(p.precision, p.recall));
    CHECK(p.precision <= 1.0);
    CHECK(p.recall <= 1.0);
  }

  const ScoreReport s = serial::score_report(pred, gold);
  CHECK(s.trg_c.tp == r.trg_c.tp);
  CHECK(s.arg_c_perfect.tp == r.arg_c_perfect.tp);
  CHECK(s.arg_c_overlap.tp == r.arg_c_overlap.tp);
  CHECK(s.presence_accuracy == r.presence_accuracy);
}

TEST_CASE("PRF from counts") {
  const PRF z = PRF::from_counts(Counts{0, 0, 0});
  CHECK(z.precision == 0.0);
  CHECK(z.recall == 0.0);
  CHECK(z.f1 == 0.0);
  const PRF p = PRF::from_counts(Counts{2, 4, 3});
  CHECK(p.precision == 0.5);
  CHECK(p.recall == doctest::Approx(2.0 / 3.0));
  CHECK(p.f1 == doctest::Approx(4.0 / 7.0));
}

TEST_CASE("report JSON keys") {
  const Corpus g{{figure1()}, {}};
  const auto j = report_to_json(score_report(g, g));
  for (const char* k : {"trg_c", "arg_c_perfect", "arg_c_overlap"})
    for (const char* f : {"p", "r", "f1", "tp", "n_pred", "n_gold"}) CHECK(j.at(k).contains(f));
  CHECK(j.at("presence_accuracy") == 1.0);
  CHECK(report_table(score_report(g, g)).find("1.000") != std::string::npos);
}
