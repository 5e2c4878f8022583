#include "cfgadapt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace cfgadapt::harness {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json record_to_json(const ManifestRecord& r) {
  nlohmann::json j;
  j["sample_id"] = r.sample_id;
  j["path"] = r.path;
  j["label"] = r.label;
  j["family"] = r.family;
  if (r.timestamp) j["timestamp"] = *r.timestamp;
  if (r.domain) j["domain"] = *r.domain;
  if (r.cluster) j["cluster"] = *r.cluster;
  return j;
}

ManifestRecord record_from_json(const nlohmann::json& j) {
  ManifestRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.label = j.at("label").get<int>();
  r.family = j.value("family", std::string());
  if (j.contains("timestamp")) r.timestamp = j["timestamp"].get<std::int64_t>();
  if (j.contains("domain")) r.domain = j["domain"].get<std::string>();
  if (j.contains("cluster")) r.cluster = j["cluster"].get<int>();
  return r;
}

}  // namespace

std::string manifest_to_jsonl(const std::vector<ManifestRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<ManifestRecord> manifest_from_jsonl(const std::string& text) {
  std::vector<ManifestRecord> records;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ManifestRecord r;
    try {
      r = record_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": " + e.what());
    }
    if (!seen.insert(r.sample_id).second)
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": duplicate sample_id " + r.sample_id);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<ManifestRecord> load_manifest(const std::string& path,
                                          bool check_paths) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto records = manifest_from_jsonl(buf.str());
  if (check_paths) {
    for (const auto& r : records)
      if (!std::filesystem::exists(r.path))
        throw std::runtime_error("manifest sample " + r.sample_id +
                                 ": path not found: " + r.path);
  }
  return records;
}

void save_manifest(const std::vector<ManifestRecord>& records,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << manifest_to_jsonl(records);
}

// ---------------------------------------------------------------------------
// Splits

void enforce_temporal(const std::vector<ManifestRecord>& train,
                      const std::vector<ManifestRecord>& test) {
  std::int64_t earliest_test = std::numeric_limits<std::int64_t>::max();
  for (const auto& r : test) {
    if (!r.timestamp)
      throw std::runtime_error("temporal split: test record " + r.sample_id +
                               " has no timestamp");
    earliest_test = std::min(earliest_test, *r.timestamp);
  }
  for (const auto& r : train) {
    if (!r.timestamp)
      throw std::runtime_error("temporal split: train record " + r.sample_id +
                               " has no timestamp");
    if (!test.empty() && *r.timestamp > earliest_test)
      throw std::runtime_error("temporal split: train record " + r.sample_id +
                               " is dated after the earliest test record");
  }
}

namespace {

// Class-ratio-preserving split: per class, shuffle and allocate round(frac*n)
// to train. Keeps train/test ratios within one sample.
void stratified_split(const std::vector<ManifestRecord>& pool, double frac,
                      std::mt19937_64& rng, std::vector<ManifestRecord>& train,
                      std::vector<ManifestRecord>& test) {
  std::map<int, std::vector<ManifestRecord>> by_class;
  for (const auto& r : pool) by_class[r.label].push_back(r);
  for (auto& [label, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_train = static_cast<size_t>(
        std::lround(frac * static_cast<double>(members.size())));
    for (size_t i = 0; i < members.size(); ++i)
      (i < n_train ? train : test).push_back(members[i]);
  }
}

void temporal_split(const std::vector<ManifestRecord>& pool, double frac,
                    std::vector<ManifestRecord>& train,
                    std::vector<ManifestRecord>& test) {
  std::vector<ManifestRecord> ordered = pool;
  for (const auto& r : ordered)
    if (!r.timestamp)
      throw std::runtime_error("temporal split: record " + r.sample_id +
                               " has no timestamp");
  std::sort(ordered.begin(), ordered.end(),
            [](const ManifestRecord& a, const ManifestRecord& b) {
              if (*a.timestamp != *b.timestamp)
                return *a.timestamp < *b.timestamp;
              return a.sample_id < b.sample_id;
            });
  size_t boundary = static_cast<size_t>(
      std::lround(frac * static_cast<double>(ordered.size())));
  // never let equal timestamps straddle the boundary
  while (boundary > 0 && boundary < ordered.size() &&
         *ordered[boundary].timestamp == *ordered[boundary - 1].timestamp)
    ++boundary;
  train.assign(ordered.begin(), ordered.begin() + boundary);
  test.assign(ordered.begin() + boundary, ordered.end());
  enforce_temporal(train, test);
}

}  // namespace

SplitResult split(const std::vector<ManifestRecord>& manifest,
                  const SplitSpec& spec) {
  std::vector<ManifestRecord> source_pool, target_pool;
  switch (spec.mode) {
    case SplitMode::Fixed:
    case SplitMode::Temporal:
      for (const auto& r : manifest) {
        if (!r.domain || *r.domain == "source")
          source_pool.push_back(r);
        else if (*r.domain == "target")
          target_pool.push_back(r);
        else
          throw std::runtime_error("split: unknown domain tag '" + *r.domain +
                                   "' on " + r.sample_id);
      }
      break;
    case SplitMode::LeaveOneFamilyOut: {
      bool found = false;
      for (const auto& r : manifest) {
        if (r.family == spec.holdout_family) {
          target_pool.push_back(r);
          found = true;
        } else {
          source_pool.push_back(r);
        }
      }
      if (!found)
        throw std::runtime_error("split: holdout family '" +
                                 spec.holdout_family + "' not in manifest");
      break;
    }
    case SplitMode::ClusterLeaveOut: {
      bool found = false;
      for (const auto& r : manifest) {
        if (r.cluster && *r.cluster == spec.holdout_cluster) {
          target_pool.push_back(r);
          found = true;
        } else {
          source_pool.push_back(r);
        }
      }
      if (!found)
        throw std::runtime_error("split: holdout cluster " +
                                 std::to_string(spec.holdout_cluster) +
                                 " not in manifest");
      break;
    }
  }

  SplitResult res;
  std::vector<ManifestRecord> target_train;
  if (spec.mode == SplitMode::Temporal) {
    temporal_split(source_pool, spec.source_train_fraction, res.source_train,
                   res.source_test);
    temporal_split(target_pool, spec.target_train_fraction, target_train,
                   res.target_test);
  } else {
    std::mt19937_64 rng(nn::derive_seed(spec.seed, 41));
    stratified_split(source_pool, spec.source_train_fraction, rng,
                     res.source_train, res.source_test);
    stratified_split(target_pool, spec.target_train_fraction, rng,
                     target_train, res.target_test);
  }

  if (spec.budget <= 0 ||
      spec.budget == static_cast<int>(target_train.size())) {
    res.target_labeled = std::move(target_train);
    return res;
  }
  if (spec.budget > static_cast<int>(target_train.size()))
    throw std::runtime_error(
        "split: budget " + std::to_string(spec.budget) +
        " exceeds target training pool of " +
        std::to_string(target_train.size()));
  std::mt19937_64 rng(nn::derive_seed(spec.seed, 42));
  std::vector<size_t> idx(target_train.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (static_cast<int>(i) < spec.budget)
      res.target_labeled.push_back(target_train[idx[i]]);
    else
      res.target_unlabeled.push_back(target_train[idx[i]]);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Synthetic drift benchmark

namespace {

struct FamilyGen {
  feat::Vec mean;
  double p_in = 0.0;
  double p_out = 0.0;
};

AttributedGraph sample_graph(const FamilyGen& gen, const feat::Vec& shift,
                             double edge_perturb, int label, int domain,
                             int nodes_min, int nodes_max, double attr_sigma,
                             const std::string& id, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size_dist(nodes_min, nodes_max);
  const int n = size_dist(rng);
  std::normal_distribution<double> noise(0.0, attr_sigma);
  AttributedGraph g;
  g.sample_id = id;
  g.label = label;
  g.domain = domain;
  g.Y = feat::Vec::Zero(2);
  g.Y(label) = 1.0;
  g.X.resize(n, gen.mean.size());
  for (int i = 0; i < n; ++i)
    for (long d = 0; d < gen.mean.size(); ++d)
      g.X(i, d) = gen.mean(d) + shift(d) + noise(rng);
  // two-block stochastic block model, drift perturbs the densities
  const double p_in = std::clamp(gen.p_in + edge_perturb, 0.02, 0.95);
  const double p_out = std::clamp(gen.p_out - edge_perturb, 0.02, 0.95);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  g.A = feat::Mat::Zero(n, n);
  const int half = n / 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool same_block = (i < half) == (j < half);
      if (coin(rng) < (same_block ? p_in : p_out)) g.A(i, j) = 1.0;
    }
  }
  return g;
}

}  // namespace

SynthData synth_drift(const SynthConfig& cfg) {
  if (cfg.n_families < 1 || cfg.attr_dim < 1 || cfg.nodes_min < 2 ||
      cfg.nodes_max < cfg.nodes_min)
    throw std::invalid_argument("synth_drift: bad generator parameters");

  std::mt19937_64 setup_rng(nn::derive_seed(cfg.seed, 50));
  std::normal_distribution<double> mean_dist(0.0, 1.0);
  std::uniform_real_distribution<double> dens(0.0, 1.0);

  auto make_gen = [&](double scale) {
    FamilyGen g;
    g.mean.resize(cfg.attr_dim);
    for (int d = 0; d < cfg.attr_dim; ++d)
      g.mean(d) = scale * mean_dist(setup_rng);
    g.p_in = 0.35 + 0.3 * dens(setup_rng);
    g.p_out = 0.05 + 0.1 * dens(setup_rng);
    return g;
  };
  FamilyGen benign = make_gen(cfg.class_sep);
  std::vector<FamilyGen> families;
  for (int f = 0; f < cfg.n_families; ++f)
    families.push_back(make_gen(cfg.class_sep));

  // a shared drift direction with a smaller per-generator jitter
  auto unit_vec = [&]() {
    feat::Vec dir(cfg.attr_dim);
    for (int d = 0; d < cfg.attr_dim; ++d) dir(d) = mean_dist(setup_rng);
    dir.normalize();
    return dir;
  };
  feat::Vec common = unit_vec();
  auto make_shift = [&]() {
    feat::Vec dir = common + 0.35 * unit_vec();
    dir.normalize();
    return feat::Vec(cfg.drift * dir);
  };
  feat::Vec benign_shift = make_shift();
  std::vector<feat::Vec> family_shifts;
  for (int f = 0; f < cfg.n_families; ++f) family_shifts.push_back(make_shift());
  const double edge_perturb = 0.08 * cfg.drift;
  feat::Vec zero = feat::Vec::Zero(cfg.attr_dim);

  auto fill_domain = [&](int total, int domain, std::uint64_t stream,
                         std::vector<SynthSample>& out) {
    std::mt19937_64 rng(nn::derive_seed(cfg.seed, stream));
    const int n_benign = static_cast<int>(std::lround(
        total * cfg.benign_ratio / (1.0 + cfg.benign_ratio)));
    const int n_malware = total - n_benign;
    const bool drifted = domain == 1;
    const double dom_edge = drifted ? edge_perturb : 0.0;
    const std::string prefix = domain == 0 ? "src" : "tgt";
    for (int i = 0; i < n_benign; ++i) {
      SynthSample s;
      s.family = "benign";
      s.graph = sample_graph(benign, drifted ? benign_shift : zero, dom_edge,
                             0, domain,
                             cfg.nodes_min, cfg.nodes_max, cfg.attr_sigma,
                             prefix + "-benign-" + std::to_string(i), rng);
      out.push_back(std::move(s));
    }
    for (int i = 0; i < n_malware; ++i) {
      const int f = i % cfg.n_families;
      SynthSample s;
      s.family = "fam" + std::to_string(f);
      s.graph = sample_graph(families[f], drifted ? family_shifts[f] : zero,
                             dom_edge, 1, domain,
                             cfg.nodes_min, cfg.nodes_max, cfg.attr_sigma,
                             prefix + "-" + s.family + "-" + std::to_string(i),
                             rng);
      out.push_back(std::move(s));
    }
  };

  SynthData data;
  fill_domain(cfg.source_graphs, 0, 51, data.source);
  fill_domain(cfg.target_graphs, 1, 52, data.target);
  return data;
}

// ---------------------------------------------------------------------------
// Metrics

MetricsReport evaluate(const std::vector<int>& predictions,
                       const std::vector<int>& truth, int num_classes) {
  if (predictions.size() != truth.size())
    throw std::invalid_argument("evaluate: size mismatch");
  if (predictions.empty()) throw std::invalid_argument("evaluate: empty");
  std::vector<std::vector<int>> cm(num_classes,
                                   std::vector<int>(num_classes, 0));
  int correct = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || predictions[i] < 0 ||
        predictions[i] >= num_classes)
      throw std::invalid_argument("evaluate: label out of range");
    cm[truth[i]][predictions[i]] += 1;
    if (truth[i] == predictions[i]) ++correct;
  }
  MetricsReport m;
  m.n = static_cast<int>(truth.size());
  m.accuracy = static_cast<double>(correct) / m.n;
  m.precision.resize(num_classes);
  m.recall.resize(num_classes);
  double f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    int tp = cm[c][c], pred_c = 0, true_c = 0;
    for (int r = 0; r < num_classes; ++r) {
      pred_c += cm[r][c];
      true_c += cm[c][r];
    }
    m.precision[c] = pred_c > 0 ? static_cast<double>(tp) / pred_c : 0.0;
    m.recall[c] = true_c > 0 ? static_cast<double>(tp) / true_c : 0.0;
    const double denom = m.precision[c] + m.recall[c];
    f1_sum += denom > 0 ? 2.0 * m.precision[c] * m.recall[c] / denom : 0.0;
  }
  m.macro_f1 = f1_sum / num_classes;
  return m;
}

MetricsReport evaluate_model(da::DaModel& model,
                             const std::vector<AttributedGraph>& test) {
  std::vector<int> preds, truth;
  preds.reserve(test.size());
  truth.reserve(test.size());
  for (const auto& g : test) {
    preds.push_back(model.predict(g));
    truth.push_back(g.label);
  }
  return evaluate(preds, truth, model.cfg.num_classes);
}

MetricsReport aggregate(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: empty");
  MetricsReport out;
  out.precision.assign(reports[0].precision.size(), 0.0);
  out.recall.assign(reports[0].recall.size(), 0.0);
  for (const auto& r : reports) {
    if (r.precision.size() != out.precision.size())
      throw std::invalid_argument("aggregate: class-count mismatch");
    out.accuracy += r.accuracy;
    out.macro_f1 += r.macro_f1;
    out.n += r.n;
    for (size_t c = 0; c < out.precision.size(); ++c) {
      out.precision[c] += r.precision[c];
      out.recall[c] += r.recall[c];
    }
  }
  const double k = static_cast<double>(reports.size());
  out.accuracy /= k;
  out.macro_f1 /= k;
  for (auto& v : out.precision) v /= k;
  for (auto& v : out.recall) v /= k;
  out.runs = static_cast<int>(reports.size());
  return out;
}

// ---------------------------------------------------------------------------
// Experiment orchestration

std::map<std::string, std::string> parse_config(const std::string& text) {
  std::map<std::string, std::string> cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto strip = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key=value");
    cfg[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return cfg;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string cfg_get(const std::map<std::string, std::string>& cfg,
                    const std::string& key, const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

da::AlignmentMode alignment_for(const std::string& mode) {
  return mode == "mmd" ? da::AlignmentMode::Mmd : da::AlignmentMode::Adversarial;
}

}  // namespace

ExperimentReport run_experiment(
    const std::map<std::string, std::string>& config) {
  auto modes = split_list(cfg_get(config, "modes", "adversarial,mmd,warm,cold"));
  std::vector<int> budgets;
  for (const auto& b : split_list(cfg_get(config, "budgets", "20,50,100,200,300,500")))
    budgets.push_back(std::stoi(b));
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(cfg_get(config, "seeds", "1,2,3,4,5")))
    seeds.push_back(std::stoull(s));

  SynthConfig scfg;
  scfg.n_families = std::stoi(cfg_get(config, "n_families", "3"));
  scfg.source_graphs = std::stoi(cfg_get(config, "source_graphs", "200"));
  scfg.target_graphs = std::stoi(cfg_get(config, "target_graphs", "400"));
  scfg.attr_dim = std::stoi(cfg_get(config, "attr_dim", "8"));
  scfg.drift = std::stod(cfg_get(config, "drift", "1.5"));
  scfg.class_sep = std::stod(cfg_get(config, "class_sep", "0.5"));
  scfg.attr_sigma = std::stod(cfg_get(config, "attr_sigma", "1.5"));
  scfg.benign_ratio = std::stod(cfg_get(config, "benign_ratio", "1.0"));

  da::ModelConfig mcfg;
  mcfg.input_dim = scfg.attr_dim;
  mcfg.num_classes = 2;
  mcfg.gin_hidden = std::stoi(cfg_get(config, "gin_hidden", "32"));
  mcfg.latent = std::stoi(cfg_get(config, "latent", "128"));
  mcfg.gin_layers = std::stoi(cfg_get(config, "gin_layers", "2"));

  da::TrainConfig tcfg;
  tcfg.gamma = std::stod(cfg_get(config, "gamma", "0.3"));
  tcfg.lambda = std::stod(cfg_get(config, "lambda", "0.1"));
  tcfg.learning_rate = std::stod(cfg_get(config, "learning_rate", "1e-3"));
  tcfg.epochs = std::stoi(cfg_get(config, "epochs", "60"));
  tcfg.mmd_weight = std::stod(cfg_get(config, "mmd_weight", "0.5"));
  tcfg.mmd_sigmas.clear();
  for (const auto& s :
       split_list(cfg_get(config, "mmd_sigmas", "1,2,4,8,16")))
    tcfg.mmd_sigmas.push_back(std::stod(s));
  tcfg.batch_size = std::stoi(cfg_get(config, "batch_size", "16"));

  ExperimentReport report;
  report.config = config;
  report.config["modes"] = cfg_get(config, "modes", "adversarial,mmd,warm,cold");
  report.config["budgets"] = cfg_get(config, "budgets", "20,50,100,200,300,500");
  report.config["seeds"] = cfg_get(config, "seeds", "1,2,3,4,5");

  for (std::uint64_t seed : seeds) {
    scfg.seed = seed;
    SynthData data = synth_drift(scfg);

    // source 75/25, target 50/50, class-stratified
    auto stratify = [&](const std::vector<SynthSample>& pool, double frac,
                        std::uint64_t stream,
                        std::vector<AttributedGraph>& train,
                        std::vector<AttributedGraph>& test) {
      std::map<int, std::vector<const SynthSample*>> by_class;
      for (const auto& s : pool) by_class[s.graph.label].push_back(&s);
      std::mt19937_64 rng(nn::derive_seed(seed, stream));
      for (auto& [label, members] : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_train = static_cast<size_t>(
            std::lround(frac * static_cast<double>(members.size())));
        for (size_t i = 0; i < members.size(); ++i)
          (i < n_train ? train : test).push_back(members[i]->graph);
      }
    };
    std::vector<AttributedGraph> src_train, src_test, tgt_train, tgt_test;
    stratify(data.source, 0.75, 60, src_train, src_test);
    stratify(data.target, 0.5, 61, tgt_train, tgt_test);

    for (int budget : budgets) {
      if (budget > static_cast<int>(tgt_train.size()))
        throw std::runtime_error("run_experiment: budget " +
                                 std::to_string(budget) +
                                 " exceeds target training pool");
      std::vector<size_t> idx(tgt_train.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::mt19937_64 rng(nn::derive_seed(seed, 100 + budget));
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<AttributedGraph> labeled, unlabeled;
      for (size_t i = 0; i < idx.size(); ++i) {
        if (static_cast<int>(i) < budget)
          labeled.push_back(tgt_train[idx[i]]);
        else {
          AttributedGraph g = tgt_train[idx[i]];
          g.label = -1;
          g.Y.resize(0);
          unlabeled.push_back(std::move(g));
        }
      }

      for (const auto& mode : modes) {
        da::TrainConfig cell = tcfg;
        cell.seed = seed;
        da::TrainResult result = [&]() {
          if (mode == "cold") return da::train_cold(labeled, mcfg, cell);
          if (mode == "warm")
            return da::train_warm(src_train, labeled, mcfg, cell);
          cell.alignment_mode = alignment_for(mode);
          return da::train_adversarial(src_train, labeled, unlabeled, mcfg,
                                       cell);
        }();
        MetricsReport m = evaluate_model(result.model, tgt_test);
        report.rows.push_back({mode, budget, seed, m.accuracy, m.macro_f1});
      }
    }
  }
  return report;
}

std::string ExperimentReport::to_csv() const {
  std::string out = "mode,budget,seed,accuracy,macro_f1\n";
  for (const auto& r : rows) {
    out += r.mode + "," + std::to_string(r.budget) + "," +
           std::to_string(r.seed) + "," + fmt_double(r.accuracy) + "," +
           fmt_double(r.macro_f1) + "\n";
  }
  return out;
}

std::string ExperimentReport::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  auto rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"mode", r.mode},
                         {"budget", r.budget},
                         {"seed", r.seed},
                         {"accuracy", r.accuracy},
                         {"macro_f1", r.macro_f1}});
  }
  j["rows"] = std::move(rows_json);
  std::map<std::string, std::pair<double, int>> acc_means, f1_means;
  for (const auto& r : rows) {
    std::string key = r.mode + "/" + std::to_string(r.budget);
    acc_means[key].first += r.accuracy;
    acc_means[key].second += 1;
    f1_means[key].first += r.macro_f1;
    f1_means[key].second += 1;
  }
  nlohmann::json means;
  for (const auto& [key, sum] : acc_means) {
    means[key] = {{"accuracy", sum.first / sum.second},
                  {"macro_f1", f1_means[key].first / f1_means[key].second},
                  {"runs", sum.second}};
  }
  j["means"] = std::move(means);
  return j.dump(2);
}

}  // namespace cfgadapt::harness
