#include "cfgadapt/da.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace cfgadapt::da {

Batch make_batch(const std::vector<const AttributedGraph*>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("make_batch: empty batch");
  long total_nodes = 0;
  const long m = graphs[0]->X.cols();
  for (const AttributedGraph* g : graphs) {
    if (g->X.cols() != m)
      throw std::invalid_argument("make_batch: attribute width mismatch");
    total_nodes += g->X.rows();
  }
  Batch b;
  b.num_graphs = static_cast<int>(graphs.size());
  b.X = Mat::Zero(total_nodes, m);
  b.A_sym = Mat::Zero(total_nodes, total_nodes);
  b.segments.resize(total_nodes);
  long off = 0;
  for (size_t gi = 0; gi < graphs.size(); ++gi) {
    const AttributedGraph* g = graphs[gi];
    const long n = g->X.rows();
    b.X.middleRows(off, n) = g->X;
    b.A_sym.block(off, off, n, n) = nn::symmetrize(g->A);
    for (long i = 0; i < n; ++i) b.segments[off + i] = static_cast<int>(gi);
    off += n;
  }
  return b;
}

DaModel DaModel::create(const ModelConfig& cfg, std::uint64_t seed) {
  DaModel mdl;
  mdl.cfg = cfg;
  std::mt19937_64 rng_f(nn::derive_seed(seed, 0));
  std::mt19937_64 rng_c(nn::derive_seed(seed, 1));
  std::mt19937_64 rng_d(nn::derive_seed(seed, 2));

  if (cfg.mlp_variant) {
    int in = cfg.input_dim;
    for (int w : cfg.mlp_generator) {
      mdl.gen_fc.emplace_back(in, w, rng_f);
      mdl.gen_bn.emplace_back(w);
      in = w;
    }
    int latent = in;
    int cin = latent;
    for (int w : cfg.mlp_classifier) {
      mdl.clf_fc.emplace_back(cin, w, rng_c);
      mdl.clf_bn.emplace_back(w);
      cin = w;
    }
    mdl.clf_out = nn::Dense(cin, cfg.num_classes, rng_c, /*zero_init=*/true);
    int din = latent;
    for (int w : cfg.mlp_discriminator) {
      mdl.disc_fc.emplace_back(din, w, rng_d);
      mdl.disc_bn.emplace_back(w);
      din = w;
    }
    mdl.disc_out = nn::Dense(din, 2, rng_d, /*zero_init=*/true);
    return mdl;
  }

  int in = cfg.input_dim;
  for (int k = 0; k < cfg.gin_layers; ++k) {
    mdl.gin.emplace_back(in, cfg.gin_hidden, rng_f);
    in = cfg.gin_hidden;
  }
  const int jk_width =
      cfg.use_jk ? cfg.input_dim + cfg.gin_layers * cfg.gin_hidden
                 : cfg.gin_hidden;
  mdl.latent_fc = nn::Dense(jk_width, cfg.latent, rng_f);
  mdl.latent_bn = nn::BatchNorm(cfg.latent);

  mdl.clf_fc.emplace_back(cfg.latent, cfg.latent, rng_c);
  mdl.clf_bn.emplace_back(cfg.latent);
  mdl.clf_out = nn::Dense(cfg.latent, cfg.num_classes, rng_c, true);

  for (int i = 0; i < 2; ++i) {
    mdl.disc_fc.emplace_back(cfg.latent, cfg.latent, rng_d);
    mdl.disc_bn.emplace_back(cfg.latent);
  }
  mdl.disc_out = nn::Dense(cfg.latent, 2, rng_d, true);
  return mdl;
}

Var DaModel::generator_forward(const Batch& batch, bool train) {
  if (cfg.mlp_variant) {
    // one row per graph; flat feature vectors
    Var h = nn::constant(batch.X);
    for (size_t i = 0; i < gen_fc.size(); ++i)
      h = relu(gen_bn[i].forward(gen_fc[i].forward(h), train));
    return h;
  }
  Var h = nn::constant(batch.X);
  std::vector<Var> readouts;
  if (cfg.use_jk)
    readouts.push_back(nn::readout_segments(h, batch.segments,
                                            batch.num_graphs,
                                            nn::Readout::Mean));
  for (auto& layer : gin) {
    h = nn::gin_layer(h, batch.A_sym, layer, train);
    if (cfg.use_jk)
      readouts.push_back(nn::readout_segments(h, batch.segments,
                                              batch.num_graphs,
                                              nn::Readout::Mean));
  }
  Var pooled = cfg.use_jk
                   ? nn::jk_concat(readouts)
                   : nn::readout_segments(h, batch.segments, batch.num_graphs,
                                          nn::Readout::Mean);
  return relu(latent_bn.forward(latent_fc.forward(pooled), train));
}

Var DaModel::classifier_forward(const Var& latent, bool train) {
  Var h = latent;
  for (size_t i = 0; i < clf_fc.size(); ++i)
    h = relu(clf_bn[i].forward(clf_fc[i].forward(h), train));
  return clf_out.forward(h);
}

Var DaModel::discriminator_forward(const Var& latent, bool train) {
  Var h = latent;
  for (size_t i = 0; i < disc_fc.size(); ++i)
    h = relu(disc_bn[i].forward(disc_fc[i].forward(h), train));
  return disc_out.forward(h);
}

std::vector<Param*> DaModel::generator_params() {
  std::vector<Param*> out;
  for (auto& l : gin) l.collect(out);
  if (!cfg.mlp_variant) {
    latent_fc.collect(out);
    latent_bn.collect(out);
  }
  for (size_t i = 0; i < gen_fc.size(); ++i) {
    gen_fc[i].collect(out);
    gen_bn[i].collect(out);
  }
  return out;
}

std::vector<Param*> DaModel::classifier_params() {
  std::vector<Param*> out;
  for (size_t i = 0; i < clf_fc.size(); ++i) {
    clf_fc[i].collect(out);
    clf_bn[i].collect(out);
  }
  clf_out.collect(out);
  return out;
}

std::vector<Param*> DaModel::discriminator_params() {
  std::vector<Param*> out;
  for (size_t i = 0; i < disc_fc.size(); ++i) {
    disc_fc[i].collect(out);
    disc_bn[i].collect(out);
  }
  disc_out.collect(out);
  return out;
}

std::vector<Param*> DaModel::first_layer_params() {
  std::vector<Param*> out;
  if (cfg.mlp_variant) {
    if (!gen_fc.empty()) {
      gen_fc[0].collect(out);
      gen_bn[0].collect(out);
    }
  } else if (!gin.empty()) {
    gin[0].collect(out);
  }
  return out;
}

std::vector<Param*> DaModel::all_params() {
  std::vector<Param*> out = generator_params();
  for (Param* p : classifier_params()) out.push_back(p);
  for (Param* p : discriminator_params()) out.push_back(p);
  return out;
}

Vec DaModel::forward_latent(const AttributedGraph& g) {
  Batch b = make_batch({&g});
  Var latent = generator_forward(b, /*train=*/false);
  return latent->val.row(0).transpose();
}

Vec DaModel::classify(const AttributedGraph& g) {
  Batch b = make_batch({&g});
  Var latent = generator_forward(b, false);
  Var logits = classifier_forward(latent, false);
  return nn::softmax_rows(logits->val).row(0).transpose();
}

int DaModel::predict(const AttributedGraph& g) {
  Vec p = classify(g);
  int best = 0;
  for (int i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;  // strict: ties resolve to lowest index
  return best;
}

double loss_classification(const Mat& preds, const Mat& labels,
                           const std::vector<int>& domains, double lambda) {
  double src = 0.0, tgt = 0.0;
  for (long i = 0; i < preds.rows(); ++i) {
    double ce = 0.0;
    for (long j = 0; j < preds.cols(); ++j)
      if (labels(i, j) != 0.0)
        ce -= labels(i, j) * std::log(std::max(preds(i, j), 1e-12));
    if (domains[i] == 0)
      src += ce;
    else
      tgt += ce;
  }
  return src + lambda * tgt;
}

double loss_discriminator(const Vec& d_hat, const Vec& d) {
  double loss = 0.0;
  for (long i = 0; i < d_hat.size(); ++i) {
    double p = std::clamp(d_hat[i], 1e-12, 1.0 - 1e-12);
    loss -= d[i] * std::log(p) + (1.0 - d[i]) * std::log(1.0 - p);
  }
  return loss;
}

double loss_generator(const Vec& d_hat, const Vec& d) {
  return loss_discriminator(d_hat, Vec::Ones(d.size()) - d);
}

double mmd_rbf_value(const Mat& h_source, const Mat& h_target,
                     const std::vector<double>& sigmas) {
  Var a = nn::constant(h_source);
  Var b = nn::constant(h_target);
  return nn::mmd_rbf(a, b, sigmas)->val(0, 0);
}

namespace {

Mat domain_targets(const std::vector<int>& domains, bool inverted) {
  Mat t(domains.size(), 2);
  for (size_t i = 0; i < domains.size(); ++i) {
    double d = static_cast<double>(domains[i]);
    if (inverted) d = 1.0 - d;
    t(i, 0) = 1.0 - d;
    t(i, 1) = d;
  }
  return t;
}

struct BatchView {
  std::vector<const AttributedGraph*> graphs;
  std::vector<int> domains;       // per graph
  std::vector<int> labels;        // -1 for unlabeled
};

// Shared inner loop. Alignment is disabled when the target pool is empty,
// so the gamma=0 / empty-target configuration runs the exact supervised
// arithmetic (reduction identity).
TrainResult train_impl(const std::vector<AttributedGraph>& source,
                       const std::vector<AttributedGraph>& labeled_target,
                       const std::vector<AttributedGraph>& unlabeled_target,
                       const ModelConfig& mcfg, const TrainConfig& tcfg,
                       DaModel initial_model, bool use_initial,
                       const std::vector<Param*>& frozen) {
  if (source.empty()) throw std::invalid_argument("train: empty source set");
  for (const AttributedGraph& g : source)
    if (g.label < 0) throw std::invalid_argument("train: unlabeled source");

  TrainResult result{use_initial ? std::move(initial_model)
                                 : DaModel::create(mcfg, tcfg.seed),
                     {}};
  DaModel& model = result.model;

  std::vector<const AttributedGraph*> target_pool;
  for (const auto& g : labeled_target) target_pool.push_back(&g);
  for (const auto& g : unlabeled_target) target_pool.push_back(&g);
  const bool has_target = !target_pool.empty();
  const AlignmentMode mode =
      has_target ? tcfg.alignment_mode : AlignmentMode::None;
  const size_t n_labeled_target = labeled_target.size();

  std::mt19937_64 rng(nn::derive_seed(tcfg.seed, 3));

  auto gen_params = model.generator_params();
  auto clf_params = model.classifier_params();
  auto disc_params = model.discriminator_params();
  std::vector<Param*> gc_params = gen_params;
  for (Param* p : clf_params) gc_params.push_back(p);
  if (!frozen.empty()) {
    std::erase_if(gc_params, [&frozen](Param* p) {
      return std::find(frozen.begin(), frozen.end(), p) != frozen.end();
    });
  }

  nn::Adam adam_gc{tcfg.learning_rate};
  nn::Adam adam_d{tcfg.learning_rate};

  const int batch = std::max(1, tcfg.batch_size);
  const int src_per_batch = has_target ? (batch + 1) / 2 : batch;
  const int tgt_per_batch = has_target ? batch / 2 : 0;

  std::vector<size_t> src_idx(source.size());
  for (size_t i = 0; i < src_idx.size(); ++i) src_idx[i] = i;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    std::shuffle(src_idx.begin(), src_idx.end(), rng);
    int batch_no = 0;
    for (size_t pos = 0; pos < src_idx.size(); pos += src_per_batch) {
      BatchView view;
      const size_t chunk_end = std::min(pos + src_per_batch, src_idx.size());
      for (size_t i = pos; i < chunk_end; ++i) {
        view.graphs.push_back(&source[src_idx[i]]);
        view.domains.push_back(0);
        view.labels.push_back(source[src_idx[i]].label);
      }
      const size_t n_src = view.graphs.size();
      if (has_target) {
        std::uniform_int_distribution<size_t> pick(0, target_pool.size() - 1);
        for (int t = 0; t < tgt_per_batch; ++t) {
          size_t j = pick(rng);
          view.graphs.push_back(target_pool[j]);
          view.domains.push_back(1);
          // labeled targets precede unlabeled ones in the pool
          view.labels.push_back(
              j < n_labeled_target ? target_pool[j]->label : -1);
        }
      }
      const size_t n_all = view.graphs.size();

      Batch b = make_batch(view.graphs);

      // classification targets and per-row weights (lambda on target rows)
      std::vector<int> labeled_rows;
      for (size_t i = 0; i < n_all; ++i)
        if (view.labels[i] >= 0) labeled_rows.push_back(static_cast<int>(i));
      Mat y_targets(labeled_rows.size(), mcfg.num_classes);
      Vec y_weights(labeled_rows.size());
      for (size_t r = 0; r < labeled_rows.size(); ++r) {
        int i = labeled_rows[r];
        y_targets.row(r).setZero();
        y_targets(r, view.labels[i]) = 1.0;
        y_weights[r] = view.domains[i] == 0 ? 1.0 : tcfg.lambda;
      }

      // --- step 1: generator + classifier (discriminator frozen) ---
      LossRow row{epoch, batch_no, 0.0, 0.0, 0.0};
      {
        Var latent = model.generator_forward(b, /*train=*/true);
        // select labeled rows for classification via a gather matrix
        Mat gather = Mat::Zero(labeled_rows.size(), n_all);
        for (size_t r = 0; r < labeled_rows.size(); ++r)
          gather(r, labeled_rows[r]) = 1.0;
        Var latent_labeled = nn::matmul(nn::constant(gather), latent);
        Var logits = model.classifier_forward(latent_labeled, true);
        Var l_c = nn::scale(
            nn::softmax_ce(logits, y_targets, y_weights),
            1.0 / static_cast<double>(labeled_rows.size()));
        row.classification = l_c->val(0, 0);

        Var objective = l_c;
        if (mode == AlignmentMode::Adversarial && tcfg.gamma != 0.0) {
          Var d_logits = model.discriminator_forward(latent, true);
          Var l_g = nn::scale(
              nn::softmax_ce(d_logits,
                             domain_targets(view.domains, /*inverted=*/true),
                             Vec::Ones(n_all)),
              1.0 / static_cast<double>(n_all));
          row.alignment = l_g->val(0, 0);
          objective = nn::add(nn::scale(l_g, tcfg.gamma), l_c);
        } else if (mode == AlignmentMode::Mmd) {
          Mat gather_src = Mat::Zero(n_src, n_all);
          Mat gather_tgt = Mat::Zero(n_all - n_src, n_all);
          for (size_t i = 0; i < n_src; ++i) gather_src(i, i) = 1.0;
          for (size_t i = n_src; i < n_all; ++i)
            gather_tgt(i - n_src, i) = 1.0;
          Var h_s = nn::matmul(nn::constant(gather_src), latent);
          Var h_t = nn::matmul(nn::constant(gather_tgt), latent);
          Var mmd = nn::mmd_rbf(h_s, h_t, tcfg.mmd_sigmas);
          row.alignment = mmd->val(0, 0);
          objective = nn::add(l_c, nn::scale(mmd, tcfg.mmd_weight));
        }

        nn::backward(objective);
        adam_gc.step(gc_params);
        for (Param* p : model.all_params()) p->zero_grad();
      }

      // --- step 2: discriminator (generator frozen) ---
      if (mode == AlignmentMode::Adversarial) {
        Var latent = model.generator_forward(b, true);
        Var d_logits = model.discriminator_forward(latent, true);
        Var l_d = nn::scale(
            nn::softmax_ce(d_logits, domain_targets(view.domains, false),
                           Vec::Ones(n_all)),
            1.0 / static_cast<double>(n_all));
        row.discriminator = l_d->val(0, 0);
        nn::backward(l_d);
        adam_d.step(disc_params);
        for (Param* p : model.all_params()) p->zero_grad();
      }

      result.history.push_back(row);
      ++batch_no;
    }
  }
  return result;
}

}  // namespace

TrainResult train_adversarial(const std::vector<AttributedGraph>& source,
                              const std::vector<AttributedGraph>& labeled_target,
                              const std::vector<AttributedGraph>& unlabeled_target,
                              const ModelConfig& mcfg, const TrainConfig& tcfg) {
  return train_impl(source, labeled_target, unlabeled_target, mcfg, tcfg,
                    DaModel{}, false, {});
}

TrainResult train_supervised(const std::vector<AttributedGraph>& labeled,
                             const ModelConfig& mcfg, const TrainConfig& tcfg) {
  TrainConfig cfg = tcfg;
  cfg.alignment_mode = AlignmentMode::None;
  return train_impl(labeled, {}, {}, mcfg, cfg, DaModel{}, false, {});
}

TrainResult train_cold(const std::vector<AttributedGraph>& labeled_target,
                       const ModelConfig& mcfg, const TrainConfig& tcfg) {
  return train_supervised(labeled_target, mcfg, tcfg);
}

TrainResult train_warm(const std::vector<AttributedGraph>& source,
                       const std::vector<AttributedGraph>& labeled_target,
                       const ModelConfig& mcfg, const TrainConfig& tcfg) {
  TrainResult phase1 = train_supervised(source, mcfg, tcfg);
  TrainConfig cfg2 = tcfg;
  cfg2.alignment_mode = AlignmentMode::None;
  cfg2.seed = nn::derive_seed(tcfg.seed, 7);  // fresh batch stream for phase 2
  std::vector<Param*> frozen = phase1.model.first_layer_params();
  TrainResult phase2 =
      train_impl(labeled_target, {}, {}, mcfg, cfg2, std::move(phase1.model),
                 true, frozen);
  // keep both phases' histories
  std::vector<LossRow> merged = std::move(phase1.history);
  for (LossRow& r : phase2.history) merged.push_back(r);
  phase2.history = std::move(merged);
  return phase2;
}

namespace {

void dense_to_json(nlohmann::ordered_json& j, const std::string& path,
                   const nn::Dense& d) {
  auto dump = [](const Mat& m) {
    nlohmann::ordered_json arr;
    arr["rows"] = m.rows();
    arr["cols"] = m.cols();
    std::vector<double> v(m.data(), m.data() + m.size());
    arr["values"] = v;
    return arr;
  };
  j[path + "/W"] = dump(d.W.value);
  j[path + "/b"] = dump(d.b.value);
}

Mat mat_from_json(const nlohmann::json& j) {
  long rows = j.at("rows").get<long>();
  long cols = j.at("cols").get<long>();
  auto v = j.at("values").get<std::vector<double>>();
  return Eigen::Map<const Mat>(v.data(), rows, cols);
}

void dense_from_json(const nlohmann::json& j, const std::string& path,
                     nn::Dense& d) {
  d.W.value = mat_from_json(j.at(path + "/W"));
  d.b.value = mat_from_json(j.at(path + "/b"));
  d.W.grad = Mat::Zero(d.W.value.rows(), d.W.value.cols());
  d.b.grad = Mat::Zero(d.b.value.rows(), d.b.value.cols());
}

void bn_to_json(nlohmann::ordered_json& j, const std::string& path,
                const nn::BatchNorm& bn) {
  auto dump = [](const Mat& m) {
    nlohmann::ordered_json arr;
    arr["rows"] = m.rows();
    arr["cols"] = m.cols();
    std::vector<double> v(m.data(), m.data() + m.size());
    arr["values"] = v;
    return arr;
  };
  j[path + "/gamma"] = dump(bn.gamma.value);
  j[path + "/beta"] = dump(bn.beta.value);
  j[path + "/running_mean"] = dump(bn.running_mean);
  j[path + "/running_var"] = dump(bn.running_var);
}

void bn_from_json(const nlohmann::json& j, const std::string& path,
                  nn::BatchNorm& bn) {
  bn.gamma.value = mat_from_json(j.at(path + "/gamma"));
  bn.beta.value = mat_from_json(j.at(path + "/beta"));
  bn.running_mean = mat_from_json(j.at(path + "/running_mean"));
  bn.running_var = mat_from_json(j.at(path + "/running_var"));
  bn.gamma.grad = Mat::Zero(1, bn.gamma.value.cols());
  bn.beta.grad = Mat::Zero(1, bn.beta.value.cols());
}

}  // namespace

std::string DaModel::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  nlohmann::ordered_json c;
  c["input_dim"] = cfg.input_dim;
  c["num_classes"] = cfg.num_classes;
  c["gin_hidden"] = cfg.gin_hidden;
  c["latent"] = cfg.latent;
  c["gin_layers"] = cfg.gin_layers;
  c["use_jk"] = cfg.use_jk;
  c["mlp_variant"] = cfg.mlp_variant;
  c["mlp_generator"] = cfg.mlp_generator;
  c["mlp_classifier"] = cfg.mlp_classifier;
  c["mlp_discriminator"] = cfg.mlp_discriminator;
  j["config"] = c;

  nlohmann::ordered_json params;
  for (size_t k = 0; k < gin.size(); ++k) {
    std::string base = "generator/gin" + std::to_string(k);
    dense_to_json(params, base + "/fc1", gin[k].fc1);
    dense_to_json(params, base + "/fc2", gin[k].fc2);
    bn_to_json(params, base + "/bn1", gin[k].bn1);
    bn_to_json(params, base + "/bn2", gin[k].bn2);
  }
  if (!cfg.mlp_variant) {
    dense_to_json(params, "generator/latent_fc", latent_fc);
    bn_to_json(params, "generator/latent_bn", latent_bn);
  }
  for (size_t k = 0; k < gen_fc.size(); ++k) {
    dense_to_json(params, "generator/fc" + std::to_string(k), gen_fc[k]);
    bn_to_json(params, "generator/bn" + std::to_string(k), gen_bn[k]);
  }
  for (size_t k = 0; k < clf_fc.size(); ++k) {
    dense_to_json(params, "classifier/fc" + std::to_string(k), clf_fc[k]);
    bn_to_json(params, "classifier/bn" + std::to_string(k), clf_bn[k]);
  }
  dense_to_json(params, "classifier/out", clf_out);
  for (size_t k = 0; k < disc_fc.size(); ++k) {
    dense_to_json(params, "discriminator/fc" + std::to_string(k), disc_fc[k]);
    bn_to_json(params, "discriminator/bn" + std::to_string(k), disc_bn[k]);
  }
  dense_to_json(params, "discriminator/out", disc_out);
  j["params"] = params;
  return j.dump();
}

DaModel DaModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  const auto& c = j.at("config");
  ModelConfig cfg;
  cfg.input_dim = c.at("input_dim").get<int>();
  cfg.num_classes = c.at("num_classes").get<int>();
  cfg.gin_hidden = c.at("gin_hidden").get<int>();
  cfg.latent = c.at("latent").get<int>();
  cfg.gin_layers = c.at("gin_layers").get<int>();
  cfg.use_jk = c.at("use_jk").get<bool>();
  cfg.mlp_variant = c.at("mlp_variant").get<bool>();
  cfg.mlp_generator = c.at("mlp_generator").get<std::vector<int>>();
  cfg.mlp_classifier = c.at("mlp_classifier").get<std::vector<int>>();
  cfg.mlp_discriminator = c.at("mlp_discriminator").get<std::vector<int>>();

  DaModel mdl = DaModel::create(cfg, 0);
  const auto& params = j.at("params");
  for (size_t k = 0; k < mdl.gin.size(); ++k) {
    std::string base = "generator/gin" + std::to_string(k);
    dense_from_json(params, base + "/fc1", mdl.gin[k].fc1);
    dense_from_json(params, base + "/fc2", mdl.gin[k].fc2);
    bn_from_json(params, base + "/bn1", mdl.gin[k].bn1);
    bn_from_json(params, base + "/bn2", mdl.gin[k].bn2);
  }
  if (!cfg.mlp_variant) {
    dense_from_json(params, "generator/latent_fc", mdl.latent_fc);
    bn_from_json(params, "generator/latent_bn", mdl.latent_bn);
  }
  for (size_t k = 0; k < mdl.gen_fc.size(); ++k) {
    dense_from_json(params, "generator/fc" + std::to_string(k), mdl.gen_fc[k]);
    bn_from_json(params, "generator/bn" + std::to_string(k), mdl.gen_bn[k]);
  }
  for (size_t k = 0; k < mdl.clf_fc.size(); ++k) {
    dense_from_json(params, "classifier/fc" + std::to_string(k), mdl.clf_fc[k]);
    bn_from_json(params, "classifier/bn" + std::to_string(k), mdl.clf_bn[k]);
  }
  dense_from_json(params, "classifier/out", mdl.clf_out);
  for (size_t k = 0; k < mdl.disc_fc.size(); ++k) {
    dense_from_json(params, "discriminator/fc" + std::to_string(k),
                    mdl.disc_fc[k]);
    bn_from_json(params, "discriminator/bn" + std::to_string(k),
                 mdl.disc_bn[k]);
  }
  dense_from_json(params, "discriminator/out", mdl.disc_out);
  return mdl;
}

}  // namespace cfgadapt::da
