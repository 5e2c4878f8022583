#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cfgadapt/da.hpp"
#include "cfgadapt/features.hpp"

namespace cfgadapt::harness {

using feat::AttributedGraph;

// ---------------------------------------------------------------------------
// Manifests (JSON lines, one record per sample)

struct ManifestRecord {
  std::string sample_id;
  std::string path;
  int label = -1;
  std::string family;
  std::optional<std::int64_t> timestamp;
  std::optional<std::string> domain;   // "source" or "target"
  std::optional<int> cluster;
};

std::vector<ManifestRecord> load_manifest(const std::string& path,
                                          bool check_paths = false);
void save_manifest(const std::vector<ManifestRecord>& records,
                   const std::string& path);
std::string manifest_to_jsonl(const std::vector<ManifestRecord>& records);
std::vector<ManifestRecord> manifest_from_jsonl(const std::string& text);

// ---------------------------------------------------------------------------
// Splits

enum class SplitMode { LeaveOneFamilyOut, Temporal, ClusterLeaveOut, Fixed };

struct SplitSpec {
  SplitMode mode = SplitMode::Fixed;
  std::string holdout_family;       // LeaveOneFamilyOut
  int holdout_cluster = -1;         // ClusterLeaveOut
  double source_train_fraction = 0.75;
  double target_train_fraction = 0.5;
  int budget = 0;                   // 0 = all target-train labels kept
  std::uint64_t seed = 1;
};

struct SplitResult {
  std::vector<ManifestRecord> source_train;
  std::vector<ManifestRecord> source_test;
  std::vector<ManifestRecord> target_labeled;    // budget-sampled
  std::vector<ManifestRecord> target_unlabeled;  // rest of target train
  std::vector<ManifestRecord> target_test;
};

SplitResult split(const std::vector<ManifestRecord>& manifest,
                  const SplitSpec& spec);

/// Throws if any training timestamp is later than the earliest test timestamp.
void enforce_temporal(const std::vector<ManifestRecord>& train,
                      const std::vector<ManifestRecord>& test);

// ---------------------------------------------------------------------------
// Synthetic drift benchmark

struct SynthConfig {
  int n_families = 3;
  int source_graphs = 200;    // total across classes
  int target_graphs = 400;
  int nodes_min = 8;
  int nodes_max = 16;
  int attr_dim = 8;
  double drift = 1.5;         // attribute mean shift + edge perturbation scale
  double class_sep = 0.5;     // scale of the per-family attribute means
  double attr_sigma = 1.5;    // node attribute noise
  double benign_ratio = 1.0;  // benign count per malware count
  std::uint64_t seed = 1;
};

struct SynthSample {
  AttributedGraph graph;      // label: 0 benign, 1 malware
  std::string family;         // "benign" or "fam<k>"
};

struct SynthData {
  std::vector<SynthSample> source;
  std::vector<SynthSample> target;
};

SynthData synth_drift(const SynthConfig& cfg);

// ---------------------------------------------------------------------------
// Metrics

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  int n = 0;
  int runs = 1;
};

MetricsReport evaluate(const std::vector<int>& predictions,
                       const std::vector<int>& truth, int num_classes);
MetricsReport evaluate_model(da::DaModel& model,
                             const std::vector<AttributedGraph>& test);
MetricsReport aggregate(const std::vector<MetricsReport>& reports);

// ---------------------------------------------------------------------------
// Experiment orchestration

std::map<std::string, std::string> parse_config(const std::string& text);
std::map<std::string, std::string> load_config(const std::string& path);

struct ExperimentRow {
  std::string mode;
  int budget = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  std::map<std::string, std::string> config;

  std::string to_csv() const;
  std::string to_json() const;  // config echo plus per-(mode,budget) means
};

/// Runs mode x budget x seed cells over the synthetic drift benchmark.
/// Config keys: modes, budgets, seeds, epochs, drift, source_graphs,
/// target_graphs, attr_dim, gin_hidden, latent, gamma, lambda,
/// learning_rate, batch_size.
ExperimentReport run_experiment(
    const std::map<std::string, std::string>& config);

}  // namespace cfgadapt::harness
