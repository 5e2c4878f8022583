#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cfgadapt/harness.hpp"

using namespace cfgadapt::harness;

namespace {

std::vector<ManifestRecord> two_class_manifest(int per_class,
                                               const std::string& domain) {
  std::vector<ManifestRecord> out;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < per_class; ++i) {
      ManifestRecord r;
      r.sample_id = domain + "-" + std::to_string(c) + "-" + std::to_string(i);
      r.path = r.sample_id + ".json";
      r.label = c;
      r.family = c == 0 ? "benign" : "fam" + std::to_string(i % 3);
      r.domain = domain;
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::map<int, int> class_counts(const std::vector<ManifestRecord>& recs) {
  std::map<int, int> out;
  for (const auto& r : recs) out[r.label]++;
  return out;
}

}  // namespace

TEST_CASE("manifest: JSONL round trip with optional fields") {
  std::vector<ManifestRecord> recs;
  ManifestRecord a;
  a.sample_id = "s1";
  a.path = "a.asm";
  a.label = 1;
  a.family = "zeus";
  a.timestamp = 1700000000;
  a.domain = "source";
  a.cluster = 4;
  recs.push_back(a);
  ManifestRecord b;
  b.sample_id = "s2";
  b.path = "b.asm";
  b.label = 0;
  b.family = "benign";
  recs.push_back(b);

  std::string text = manifest_to_jsonl(recs);
  auto back = manifest_from_jsonl(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].sample_id == "s1");
  CHECK(back[0].timestamp.value() == 1700000000);
  CHECK(back[0].cluster.value() == 4);
  CHECK(back[0].domain.value() == "source");
  CHECK_FALSE(back[1].timestamp.has_value());
  CHECK(manifest_to_jsonl(back) == text);
}

TEST_CASE("manifest: duplicate sample ids rejected") {
  std::string text =
      "{\"sample_id\":\"x\",\"path\":\"a\",\"label\":0,\"family\":\"f\"}\n"
      "{\"sample_id\":\"x\",\"path\":\"b\",\"label\":1,\"family\":\"g\"}\n";
  CHECK_THROWS(manifest_from_jsonl(text));
}

TEST_CASE("split: 75/25 preserves a 100+100 class balance exactly") {
  auto manifest = two_class_manifest(100, "source");
  SplitSpec spec;
  spec.mode = SplitMode::Fixed;
  spec.seed = 1;
  SplitResult res = split(manifest, spec);
  CHECK(res.source_train.size() == 150);
  CHECK(res.source_test.size() == 50);
  auto train_counts = class_counts(res.source_train);
  CHECK(train_counts[0] == 75);
  CHECK(train_counts[1] == 75);
  auto test_counts = class_counts(res.source_test);
  CHECK(test_counts[0] == 25);
  CHECK(test_counts[1] == 25);
}

TEST_CASE("split: class ratio within one sample on odd pools") {
  std::vector<ManifestRecord> manifest;
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < (c == 0 ? 31 : 17); ++i) {
      ManifestRecord r;
      r.sample_id = std::to_string(c) + "_" + std::to_string(i);
      r.path = r.sample_id;
      r.label = c;
      r.family = "f";
      r.domain = "source";
      manifest.push_back(r);
    }
  SplitSpec spec;
  spec.mode = SplitMode::Fixed;
  spec.source_train_fraction = 0.75;
  SplitResult res = split(manifest, spec);
  auto tr = class_counts(res.source_train);
  auto te = class_counts(res.source_test);
  for (int c = 0; c < 2; ++c) {
    const double total = tr[c] + te[c];
    CHECK(std::abs(tr[c] - 0.75 * total) <= 0.5 + 1e-9);
  }
}

TEST_CASE("split: deterministic in the seed") {
  auto manifest = two_class_manifest(20, "source");
  auto tgt = two_class_manifest(20, "target");
  manifest.insert(manifest.end(), tgt.begin(), tgt.end());
  SplitSpec spec;
  spec.mode = SplitMode::Fixed;
  spec.seed = 5;
  SplitResult a = split(manifest, spec);
  SplitResult b = split(manifest, spec);
  REQUIRE(a.source_train.size() == b.source_train.size());
  for (size_t i = 0; i < a.source_train.size(); ++i)
    CHECK(a.source_train[i].sample_id == b.source_train[i].sample_id);
  spec.seed = 6;
  SplitResult c = split(manifest, spec);
  bool same = a.source_train.size() == c.source_train.size();
  if (same)
    for (size_t i = 0; i < a.source_train.size(); ++i)
      same = same && a.source_train[i].sample_id == c.source_train[i].sample_id;
  CHECK_FALSE(same);
}

TEST_CASE("split: budget sampling and overdraw error") {
  auto manifest = two_class_manifest(20, "target");  // 40 target records
  SplitSpec spec;
  spec.mode = SplitMode::Fixed;
  spec.target_train_fraction = 0.5;  // 20 in target train
  spec.budget = 8;
  SplitResult res = split(manifest, spec);
  CHECK(res.target_labeled.size() == 8);
  CHECK(res.target_unlabeled.size() == 12);
  CHECK(res.target_test.size() == 20);
  // labeled + unlabeled partition the train pool
  std::set<std::string> ids;
  for (const auto& r : res.target_labeled) ids.insert(r.sample_id);
  for (const auto& r : res.target_unlabeled) ids.insert(r.sample_id);
  CHECK(ids.size() == 20);

  spec.budget = 21;
  CHECK_THROWS(split(manifest, spec));
}

TEST_CASE("enforce_temporal: rejects a train record after the test start") {
  ManifestRecord tr;
  tr.sample_id = "late";
  tr.path = "p";
  tr.label = 0;
  tr.family = "f";
  tr.timestamp = 200;
  ManifestRecord te = tr;
  te.sample_id = "early-test";
  te.timestamp = 100;
  CHECK_THROWS(enforce_temporal({tr}, {te}));
  tr.timestamp = 100;  // equal timestamps are allowed
  CHECK_NOTHROW(enforce_temporal({tr}, {te}));
}

TEST_CASE("split: temporal mode keeps all training before all testing") {
  std::vector<ManifestRecord> manifest;
  for (int i = 0; i < 24; ++i) {
    ManifestRecord r;
    r.sample_id = "s" + std::to_string(i);
    r.path = r.sample_id;
    r.label = i % 2;
    r.family = "f";
    r.domain = "source";
    r.timestamp = 1000 + 10 * (i / 2);  // pairs share a timestamp
    manifest.push_back(r);
  }
  SplitSpec spec;
  spec.mode = SplitMode::Temporal;
  SplitResult res = split(manifest, spec);
  REQUIRE_FALSE(res.source_train.empty());
  REQUIRE_FALSE(res.source_test.empty());
  std::int64_t last_train = 0, first_test = 1 << 30;
  for (const auto& r : res.source_train)
    last_train = std::max(last_train, *r.timestamp);
  for (const auto& r : res.source_test)
    first_test = std::min<std::int64_t>(first_test, *r.timestamp);
  CHECK(last_train < first_test);  // equal stamps never straddle the boundary
}

TEST_CASE("split: leave-one-family-out moves exactly that family to target") {
  auto manifest = two_class_manifest(12, "source");
  SplitSpec spec;
  spec.mode = SplitMode::LeaveOneFamilyOut;
  spec.holdout_family = "fam1";
  SplitResult res = split(manifest, spec);
  for (const auto* part : {&res.source_train, &res.source_test})
    for (const auto& r : *part) CHECK(r.family != "fam1");
  int held = 0;
  for (const auto& r : manifest)
    if (r.family == "fam1") ++held;
  CHECK(static_cast<int>(res.target_labeled.size() + res.target_test.size() +
                         res.target_unlabeled.size()) == held);

  spec.holdout_family = "no-such-family";
  CHECK_THROWS(split(manifest, spec));
}

TEST_CASE("synth_drift: deterministic in the seed") {
  SynthConfig cfg;
  cfg.source_graphs = 12;
  cfg.target_graphs = 12;
  cfg.attr_dim = 4;
  cfg.seed = 3;
  SynthData a = synth_drift(cfg);
  SynthData b = synth_drift(cfg);
  REQUIRE(a.source.size() == b.source.size());
  for (size_t i = 0; i < a.source.size(); ++i) {
    CHECK(a.source[i].family == b.source[i].family);
    CHECK((a.source[i].graph.X - b.source[i].graph.X).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((a.source[i].graph.A - b.source[i].graph.A).cwiseAbs().maxCoeff() ==
          0.0);
  }
  cfg.seed = 4;
  SynthData c = synth_drift(cfg);
  CHECK((a.source[0].graph.X - c.source[0].graph.X).cwiseAbs().maxCoeff() >
        0.0);
}

TEST_CASE("synth_drift: zero drift leaves the two domains aligned") {
  SynthConfig cfg;
  cfg.source_graphs = 120;
  cfg.target_graphs = 120;
  cfg.attr_dim = 4;
  cfg.seed = 9;

  auto family_mean = [&](const std::vector<SynthSample>& samples,
                         const std::string& family) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(cfg.attr_dim);
    long rows = 0;
    for (const auto& s : samples) {
      if (s.family != family) continue;
      sum += s.graph.X.colwise().sum();
      rows += s.graph.X.rows();
    }
    return (sum / static_cast<double>(rows)).eval();
  };

  cfg.drift = 0.0;
  SynthData flat = synth_drift(cfg);
  cfg.drift = 3.0;
  SynthData shifted = synth_drift(cfg);

  std::set<std::string> families;
  for (const auto& s : flat.source) families.insert(s.family);
  for (const auto& fam : families) {
    double gap_flat = (family_mean(flat.source, fam) -
                       family_mean(flat.target, fam))
                          .norm();
    double gap_shifted = (family_mean(shifted.source, fam) -
                          family_mean(shifted.target, fam))
                             .norm();
    CHECK(gap_flat < 0.5);        // sampling noise only
    CHECK(gap_shifted > gap_flat);
    CHECK(gap_shifted > 1.0);
  }
}

TEST_CASE("synth_drift: labels, families and domains are consistent") {
  SynthConfig cfg;
  cfg.source_graphs = 30;
  cfg.target_graphs = 30;
  cfg.attr_dim = 4;
  SynthData data = synth_drift(cfg);
  for (const auto& s : data.source) {
    CHECK(s.graph.domain == 0);
    if (s.family == "benign")
      CHECK(s.graph.label == 0);
    else
      CHECK(s.graph.label == 1);
    CHECK(s.graph.X.rows() >= cfg.nodes_min);
    CHECK(s.graph.X.rows() <= cfg.nodes_max);
  }
  for (const auto& s : data.target) CHECK(s.graph.domain == 1);
}

TEST_CASE("evaluate: all correct, degenerate, and a hand confusion matrix") {
  MetricsReport perfect = evaluate({0, 1, 1, 0}, {0, 1, 1, 0}, 2);
  CHECK(perfect.accuracy == doctest::Approx(1.0));
  CHECK(perfect.macro_f1 == doctest::Approx(1.0));

  MetricsReport degenerate = evaluate({0, 0, 0, 0}, {0, 0, 1, 1}, 2);
  CHECK(degenerate.accuracy == doctest::Approx(0.5));

  // hand case: truth (0,0,0,1,1,1), preds (0,0,1,1,0,1)
  // class 0: tp=2 fp=1 fn=1 -> P=2/3 R=2/3 F1=2/3; class 1 symmetric
  MetricsReport hand = evaluate({0, 0, 1, 1, 0, 1}, {0, 0, 0, 1, 1, 1}, 2);
  CHECK(hand.accuracy == doctest::Approx(4.0 / 6.0));
  CHECK(hand.precision[0] == doctest::Approx(2.0 / 3.0));
  CHECK(hand.recall[0] == doctest::Approx(2.0 / 3.0));
  CHECK(hand.macro_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(hand.n == 6);
}

TEST_CASE("aggregate: arithmetic means over runs") {
  MetricsReport a;
  a.accuracy = 0.8;
  a.macro_f1 = 0.7;
  a.n = 10;
  MetricsReport b;
  b.accuracy = 0.6;
  b.macro_f1 = 0.5;
  b.n = 10;
  MetricsReport m = aggregate({a, b});
  CHECK(m.accuracy == doctest::Approx(0.7));
  CHECK(m.macro_f1 == doctest::Approx(0.6));
  CHECK(m.runs == 2);
}

TEST_CASE("parse_config: key=value lines with comments") {
  auto cfg = parse_config(
      "# experiment\n"
      "modes = cold,warm\n"
      "epochs=3\n"
      "\n"
      "drift = 1.5  \n");
  CHECK(cfg.at("modes") == "cold,warm");
  CHECK(cfg.at("epochs") == "3");
  CHECK(cfg.at("drift") == "1.5");
  CHECK(cfg.count("# experiment") == 0);
}

TEST_CASE("run_experiment: row count and byte-identical reruns") {
  std::map<std::string, std::string> cfg = {
      {"modes", "cold,adversarial"}, {"budgets", "4,8"},
      {"seeds", "1"},                {"epochs", "2"},
      {"source_graphs", "16"},       {"target_graphs", "16"},
      {"attr_dim", "4"},             {"gin_hidden", "8"},
      {"latent", "8"},               {"batch_size", "4"},
  };
  ExperimentReport a = run_experiment(cfg);
  CHECK(a.rows.size() == 2 * 2 * 1);
  for (const auto& r : a.rows) {
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
  }
  ExperimentReport b = run_experiment(cfg);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_json() == b.to_json());
}
