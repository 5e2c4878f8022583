#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cfgadapt/cfg.hpp"
#include "cfgadapt/clustering.hpp"
#include "cfgadapt/da.hpp"
#include "cfgadapt/features.hpp"
#include "cfgadapt/harness.hpp"
#include "cfgadapt/nn.hpp"
#include "cfgadapt/openset.hpp"

namespace {

namespace fs = std::filesystem;
using cfgadapt::feat::AttributedGraph;
using cfgadapt::feat::Mat;
using cfgadapt::feat::Vec;

std::string resolve_path(const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  const char* root = std::getenv("CFGADAPT_ROOT");
  if (!root || !*root) return path;
  return (fs::path(root) / path).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(resolve_path(path));
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::string resolved = resolve_path(path);
  std::ofstream out(resolved);
  if (!out) throw std::runtime_error("cannot write " + resolved);
  out << content;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-")
    std::cout << content;
  else
    write_file(out_path, content);
}

// Whitespace-separated numeric matrix, one row per line.
Mat load_matrix(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!rows.empty() && row.size() != rows[0].size())
      throw std::runtime_error(path + ": ragged matrix rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty matrix");
  Mat m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
  return m;
}

std::vector<int> load_labels(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<int> labels;
  int v;
  while (in >> v) labels.push_back(v);
  return labels;
}

std::vector<AttributedGraph> load_graphs(
    const std::vector<cfgadapt::harness::ManifestRecord>& records,
    int num_classes) {
  std::vector<AttributedGraph> graphs;
  graphs.reserve(records.size());
  for (const auto& r : records) {
    AttributedGraph g = cfgadapt::feat::graph_from_json(
        read_file(r.path));
    g.sample_id = r.sample_id;
    g.label = r.label;
    if (r.label >= 0 && num_classes > 0) {
      g.Y = Vec::Zero(num_classes);
      g.Y(r.label) = 1.0;
    }
    g.domain = r.domain && *r.domain == "target" ? 1 : 0;
    graphs.push_back(std::move(g));
  }
  return graphs;
}

std::string metrics_json(const cfgadapt::harness::MetricsReport& m) {
  nlohmann::json j;
  j["accuracy"] = m.accuracy;
  j["macro_f1"] = m.macro_f1;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["n"] = m.n;
  j["runs"] = m.runs;
  return j.dump(2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CFG-based malware drift adaptation toolkit"};
  app.require_subcommand(1);

  // ---- extract ----
  std::string ex_in, ex_out, ex_id;
  auto* extract = app.add_subcommand("extract", "disassembly listing to CFG");
  extract->add_option("--in", ex_in, "assembly listing")->required();
  extract->add_option("--out", ex_out, "output CFG json (default stdout)");
  extract->add_option("--id", ex_id, "sample id (default: input stem)");
  extract->callback([&] {
    std::string id = ex_id.empty() ? fs::path(ex_in).stem().string() : ex_id;
    auto cfg = cfgadapt::cfg::extract_cfg(read_file(ex_in), id);
    emit(ex_out, cfgadapt::cfg::to_json(cfg));
  });

  // ---- featurize ----
  std::string fz_in, fz_out, fz_table, fz_kind = "hash";
  int fz_dim = 16, fz_label = -1, fz_classes = 0, fz_domain = 0;
  std::uint64_t fz_seed = 0;
  auto* featurize = app.add_subcommand("featurize", "CFG to attributed graph");
  featurize->add_option("--in", fz_in, "CFG json from extract")->required();
  featurize->add_option("--out", fz_out, "output graph json (default stdout)");
  featurize->add_option("--embedder", fz_kind, "hash | magic | table");
  featurize->add_option("--dim", fz_dim, "hash embedder dimension");
  featurize->add_option("--seed", fz_seed, "hash embedder seed");
  featurize->add_option("--table", fz_table, "embedding table file");
  featurize->add_option("--label", fz_label, "class label (-1 unlabeled)");
  featurize->add_option("--num-classes", fz_classes, "one-hot width");
  featurize->add_option("--domain", fz_domain, "0 source, 1 target");
  featurize->callback([&] {
    auto cfg = cfgadapt::cfg::from_json(read_file(fz_in));
    cfgadapt::feat::Embedder emb;
    cfgadapt::feat::EmbeddingTable table;
    if (fz_kind == "hash") {
      emb.kind = cfgadapt::feat::EmbedderKind::Hash;
      emb.dim = fz_dim;
      emb.seed = fz_seed;
    } else if (fz_kind == "magic") {
      emb.kind = cfgadapt::feat::EmbedderKind::Magic;
    } else if (fz_kind == "table") {
      if (fz_table.empty())
        throw CLI::ValidationError("--table is required for table embedder");
      table = cfgadapt::feat::EmbeddingTable::load(resolve_path(fz_table));
      emb.kind = cfgadapt::feat::EmbedderKind::Table;
      emb.table = &table;
    } else {
      throw CLI::ValidationError("unknown embedder: " + fz_kind);
    }
    auto g = cfgadapt::feat::featurize_cfg(cfg, emb, fz_label, fz_classes,
                                           fz_domain);
    emit(fz_out, cfgadapt::feat::graph_to_json(g));
  });

  // ---- featurize-content ----
  std::string fc_in, fc_out, fc_vocab;
  auto* fcontent = app.add_subcommand("featurize-content",
                                      "whole-listing content feature vector");
  fcontent->add_option("--in", fc_in, "assembly listing")->required();
  fcontent->add_option("--out", fc_out, "output json (default stdout)");
  fcontent->add_option("--vocab", fc_vocab, "vocabulary json");
  fcontent->callback([&] {
    auto vocab = fc_vocab.empty()
                     ? cfgadapt::feat::ContentVocab::default_vocab()
                     : cfgadapt::feat::ContentVocab::load(resolve_path(fc_vocab));
    auto fv = cfgadapt::feat::extract_content_features(read_file(fc_in), vocab);
    nlohmann::json j;
    j["values"] = std::vector<double>(fv.values.data(),
                                      fv.values.data() + fv.values.size());
    auto offsets = nlohmann::json::array();
    for (const auto& [name, off] : fv.family_offsets)
      offsets.push_back({{"family", name}, {"offset", off}});
    j["family_offsets"] = std::move(offsets);
    emit(fc_out, j.dump(2));
  });

  // ---- train ----
  std::string tr_config, tr_out, tr_history;
  auto* train = app.add_subcommand("train", "train a classifier");
  train->add_option("--config", tr_config, "key=value config")->required();
  train->add_option("--out", tr_out, "model checkpoint json")->required();
  train->add_option("--history", tr_history, "loss history csv");
  train->callback([&] {
    auto cfg = cfgadapt::harness::load_config(resolve_path(tr_config));
    auto get = [&](const std::string& k, const std::string& d) {
      auto it = cfg.find(k);
      return it == cfg.end() ? d : it->second;
    };
    cfgadapt::da::ModelConfig mcfg;
    mcfg.input_dim = std::stoi(get("input_dim", "0"));
    mcfg.num_classes = std::stoi(get("num_classes", "2"));
    mcfg.gin_hidden = std::stoi(get("gin_hidden", "64"));
    mcfg.latent = std::stoi(get("latent", "256"));
    mcfg.gin_layers = std::stoi(get("gin_layers", "3"));
    mcfg.mlp_variant = get("mlp_variant", "0") == "1";
    cfgadapt::da::TrainConfig tcfg;
    tcfg.gamma = std::stod(get("gamma", "0.1"));
    tcfg.lambda = std::stod(get("lambda", "0.1"));
    tcfg.learning_rate = std::stod(get("learning_rate", "1e-3"));
    tcfg.epochs = std::stoi(get("epochs", "60"));
    tcfg.batch_size = std::stoi(get("batch_size", "16"));
    tcfg.seed = std::stoull(get("seed", "1"));
    const std::string mode = get("mode", "adversarial");
    if (mode == "mmd") tcfg.alignment_mode = cfgadapt::da::AlignmentMode::Mmd;

    auto load_set = [&](const std::string& key) {
      std::vector<AttributedGraph> out;
      const std::string path = get(key, "");
      if (path.empty()) return out;
      auto records = cfgadapt::harness::load_manifest(resolve_path(path));
      return load_graphs(records, mcfg.num_classes);
    };
    auto source = load_set("source_manifest");
    auto labeled = load_set("target_labeled_manifest");
    auto unlabeled = load_set("target_unlabeled_manifest");
    for (auto& g : unlabeled) {
      g.label = -1;
      g.Y.resize(0);
    }
    if (mcfg.input_dim == 0) {
      const AttributedGraph* any =
          !source.empty() ? &source[0]
                          : (!labeled.empty() ? &labeled[0] : nullptr);
      if (!any) throw std::runtime_error("train: no input graphs");
      mcfg.input_dim = static_cast<int>(any->X.cols());
    }

    cfgadapt::da::TrainResult result = [&] {
      if (mode == "cold") return cfgadapt::da::train_cold(labeled, mcfg, tcfg);
      if (mode == "warm")
        return cfgadapt::da::train_warm(source, labeled, mcfg, tcfg);
      if (mode == "supervised")
        return cfgadapt::da::train_supervised(source, mcfg, tcfg);
      return cfgadapt::da::train_adversarial(source, labeled, unlabeled, mcfg,
                                             tcfg);
    }();
    write_file(tr_out, result.model.to_json());
    if (!tr_history.empty()) {
      std::string csv = "epoch,batch,classification,alignment,discriminator\n";
      char buf[160];
      for (const auto& row : result.history) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", row.epoch,
                      row.batch, row.classification, row.alignment,
                      row.discriminator);
        csv += buf;
      }
      write_file(tr_history, csv);
    }
  });

  // ---- evaluate ----
  std::string ev_model, ev_test, ev_report;
  auto* evaluate = app.add_subcommand("evaluate", "score a checkpoint");
  evaluate->add_option("--model", ev_model, "model checkpoint")->required();
  evaluate->add_option("--test", ev_test, "test manifest")->required();
  evaluate->add_option("--report", ev_report, "output json (default stdout)");
  evaluate->callback([&] {
    auto model = cfgadapt::da::DaModel::from_json(read_file(ev_model));
    auto records = cfgadapt::harness::load_manifest(resolve_path(ev_test));
    auto test = load_graphs(records, model.cfg.num_classes);
    auto m = cfgadapt::harness::evaluate_model(model, test);
    emit(ev_report, metrics_json(m));
  });

  // ---- cluster ----
  std::string cl_emb, cl_out, cl_labels;
  std::uint64_t cl_seed = 1;
  auto* cluster = app.add_subcommand("cluster", "weighted consensus clustering");
  cluster->add_option("--embeddings", cl_emb, "matrix, one row per sample")
      ->required();
  cluster->add_option("--out", cl_out, "output json (default stdout)");
  cluster->add_option("--labels", cl_labels, "optional original labels file");
  cluster->add_option("--seed", cl_seed, "rng seed");
  cluster->callback([&] {
    Mat emb = load_matrix(cl_emb);
    std::optional<std::vector<int>> original;
    if (!cl_labels.empty()) original = load_labels(cl_labels);
    auto assignment = cfgadapt::cluster::consensus_cluster(
        emb,
        {cfgadapt::cluster::Predictor::Kmeans, cfgadapt::cluster::Predictor::Gmm,
         cfgadapt::cluster::Predictor::Density},
        original, cl_seed);
    nlohmann::json j;
    j["labels"] = assignment.labels;
    j["k"] = assignment.k;
    j["silhouette"] = assignment.silhouette_score;
    emit(cl_out, j.dump(2));
  });

  // ---- indices ----
  std::string ix_emb, ix_labels, ix_out;
  auto* indices = app.add_subcommand("indices", "cluster-validity indices");
  indices->add_option("--embeddings", ix_emb, "matrix file")->required();
  indices->add_option("--labels", ix_labels, "labels file")->required();
  indices->add_option("--out", ix_out, "output json (default stdout)");
  indices->callback([&] {
    Mat emb = load_matrix(ix_emb);
    auto labels = load_labels(ix_labels);
    nlohmann::json j;
    j["silhouette"] = cfgadapt::cluster::silhouette(emb, labels);
    j["calinski_harabasz"] = cfgadapt::cluster::calinski_harabasz(emb, labels);
    j["davies_bouldin"] = cfgadapt::cluster::davies_bouldin(emb, labels);
    emit(ix_out, j.dump(2));
  });

  // ---- openset ----
  auto* openset = app.add_subcommand("openset", "one-class outlier detection");
  openset->require_subcommand(1);
  std::string ot_latents, ot_out;
  double ot_nu = 0.1, ot_gamma = 0.0;
  auto* otrain = openset->add_subcommand("train", "fit the one-class SVM");
  otrain->add_option("--latents", ot_latents, "matrix file")->required();
  otrain->add_option("--nu", ot_nu, "nu in (0, 1]");
  otrain->add_option("--gamma", ot_gamma, "RBF width (default 1/d)");
  otrain->add_option("--out", ot_out, "model json")->required();
  otrain->callback([&] {
    Mat latents = load_matrix(ot_latents);
    auto svm = cfgadapt::openset::ocsvm_train(latents, ot_nu, ot_gamma);
    write_file(ot_out, svm.to_json());
  });

  std::string oe_model, oe_ocsvm, oe_test, oe_report;
  int oe_benign = 0;
  std::vector<std::string> oe_unseen;
  auto* oeval = openset->add_subcommand("eval", "open-set evaluation");
  oeval->add_option("--model", oe_model, "classifier checkpoint")->required();
  oeval->add_option("--ocsvm", oe_ocsvm, "one-class SVM model")->required();
  oeval->add_option("--test", oe_test, "test manifest")->required();
  oeval->add_option("--report", oe_report, "output json (default stdout)");
  oeval->add_option("--benign-label", oe_benign, "benign class id");
  oeval->add_option("--unseen-family", oe_unseen,
                    "family absent at training time (repeatable)");
  oeval->callback([&] {
    auto model = cfgadapt::da::DaModel::from_json(read_file(oe_model));
    auto svm = cfgadapt::openset::OcSvm::from_json(read_file(oe_ocsvm));
    auto records = cfgadapt::harness::load_manifest(resolve_path(oe_test));
    auto graphs = load_graphs(records, model.cfg.num_classes);
    std::vector<int> preds;
    std::vector<cfgadapt::openset::Verdict> verdicts;
    std::vector<bool> unseen;
    for (size_t i = 0; i < graphs.size(); ++i) {
      preds.push_back(model.predict(graphs[i]));
      verdicts.push_back(svm.detect(model.forward_latent(graphs[i])));
      unseen.push_back(std::find(oe_unseen.begin(), oe_unseen.end(),
                                 records[i].family) != oe_unseen.end());
    }
    auto final_labels = cfgadapt::openset::relabel_unknown(preds, verdicts);
    auto m = cfgadapt::openset::openset_metrics(final_labels, unseen,
                                                oe_benign);
    nlohmann::json j;
    j["evasion_rate"] = m.evasion_rate;
    j["detected"] = m.detected;
    j["total"] = m.total;
    j["final_labels"] = final_labels;
    emit(oe_report, j.dump(2));
  });

  // ---- synth ----
  std::string sy_out;
  cfgadapt::harness::SynthConfig scfg;
  auto* synth = app.add_subcommand("synth", "synthetic drift benchmark");
  synth->add_option("--out", sy_out, "output directory")->required();
  synth->add_option("--families", scfg.n_families, "malware family count");
  synth->add_option("--source-graphs", scfg.source_graphs, "source set size");
  synth->add_option("--target-graphs", scfg.target_graphs, "target set size");
  synth->add_option("--attr-dim", scfg.attr_dim, "node attribute dimension");
  synth->add_option("--drift", scfg.drift, "drift magnitude");
  synth->add_option("--benign-ratio", scfg.benign_ratio,
                    "benign per malware count");
  synth->add_option("--seed", scfg.seed, "rng seed");
  synth->callback([&] {
    auto data = cfgadapt::harness::synth_drift(scfg);
    const fs::path dir = resolve_path(sy_out);
    fs::create_directories(dir);
    std::vector<cfgadapt::harness::ManifestRecord> records;
    auto dump = [&](const std::vector<cfgadapt::harness::SynthSample>& set,
                    const std::string& domain) {
      for (const auto& s : set) {
        const std::string file = s.graph.sample_id + ".json";
        write_file((dir / file).string(),
                   cfgadapt::feat::graph_to_json(s.graph));
        cfgadapt::harness::ManifestRecord r;
        r.sample_id = s.graph.sample_id;
        r.path = (dir / file).string();
        r.label = s.graph.label;
        r.family = s.family;
        r.domain = domain;
        records.push_back(std::move(r));
      }
    };
    dump(data.source, "source");
    dump(data.target, "target");
    cfgadapt::harness::save_manifest(records,
                                     (dir / "manifest.jsonl").string());
    std::cout << "wrote " << records.size() << " graphs to " << dir.string()
              << "\n";
  });

  // ---- report ----
  std::string rp_config, rp_csv, rp_json;
  auto* report = app.add_subcommand("report", "run the experiment grid");
  report->add_option("--config", rp_config, "key=value config")->required();
  report->add_option("--csv", rp_csv, "per-run table output")->required();
  report->add_option("--json", rp_json, "full report output")->required();
  report->callback([&] {
    auto cfg = cfgadapt::harness::load_config(resolve_path(rp_config));
    auto rep = cfgadapt::harness::run_experiment(cfg);
    write_file(rp_csv, rep.to_csv());
    write_file(rp_json, rep.to_json());
  });

  try {
    CLI11_PARSE(app, argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
