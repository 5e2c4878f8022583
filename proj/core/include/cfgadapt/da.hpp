#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfgadapt/features.hpp"
#include "cfgadapt/nn.hpp"

namespace cfgadapt::da {

using feat::AttributedGraph;
using nn::Mat;
using nn::Param;
using nn::Var;
using nn::Vec;

enum class AlignmentMode { Adversarial, Mmd, None };

struct ModelConfig {
  int input_dim = 0;
  int num_classes = 2;
  int gin_hidden = 64;    // GIN MLP width
  int latent = 256;       // generator output width
  int gin_layers = 3;
  bool use_jk = true;     // concat per-iteration readouts before the latent fc
  // MLP variant for flat feature vectors (content features)
  bool mlp_variant = false;
  std::vector<int> mlp_generator = {100, 100, 100, 100, 100};
  std::vector<int> mlp_classifier = {400, 400};
  std::vector<int> mlp_discriminator = {400, 400, 400, 400};
};

struct TrainConfig {
  double gamma = 0.1;      // generator-loss weight
  double lambda = 0.1;     // labeled-target classification penalty
  double learning_rate = 1e-3;
  int epochs = 60;
  int batch_size = 16;
  std::uint64_t seed = 1;
  AlignmentMode alignment_mode = AlignmentMode::Adversarial;
  double mmd_weight = 1.0;
  std::vector<double> mmd_sigmas = {0.25, 0.5, 1.0, 2.0, 4.0};
};

/// Disjoint-union batch: stacked node features, block-diagonal symmetrized
/// adjacency, and per-node graph ids for segment readout.
struct Batch {
  Mat X;
  Mat A_sym;
  std::vector<int> segments;
  int num_graphs = 0;
};

Batch make_batch(const std::vector<const AttributedGraph*>& graphs);

struct DaModel {
  ModelConfig cfg;
  // graph generator
  std::vector<nn::GinMlp> gin;
  nn::Dense latent_fc;
  nn::BatchNorm latent_bn;
  // mlp generator (mlp_variant)
  std::vector<nn::Dense> gen_fc;
  std::vector<nn::BatchNorm> gen_bn;
  // classifier
  std::vector<nn::Dense> clf_fc;
  std::vector<nn::BatchNorm> clf_bn;
  nn::Dense clf_out;
  // discriminator
  std::vector<nn::Dense> disc_fc;
  std::vector<nn::BatchNorm> disc_bn;
  nn::Dense disc_out;

  static DaModel create(const ModelConfig& cfg, std::uint64_t seed);

  Var generator_forward(const Batch& batch, bool train);
  Var classifier_forward(const Var& latent, bool train);
  Var discriminator_forward(const Var& latent, bool train);

  std::vector<Param*> generator_params();
  std::vector<Param*> classifier_params();
  std::vector<Param*> discriminator_params();
  /// Parameters of the generator's first layer (frozen in warm-start).
  std::vector<Param*> first_layer_params();
  std::vector<Param*> all_params();

  Vec forward_latent(const AttributedGraph& g);
  Vec classify(const AttributedGraph& g);
  int predict(const AttributedGraph& g);  // argmax, ties to lowest index

  std::string to_json() const;
  static DaModel from_json(const std::string& text);
};

// Spec-surface loss values (plain functions over prediction matrices).
double loss_classification(const Mat& preds, const Mat& labels,
                           const std::vector<int>& domains, double lambda);
double loss_discriminator(const Vec& d_hat, const Vec& d);
double loss_generator(const Vec& d_hat, const Vec& d);
double mmd_rbf_value(const Mat& h_source, const Mat& h_target,
                     const std::vector<double>& sigmas);

struct LossRow {
  int epoch = 0;
  int batch = 0;
  double classification = 0.0;
  double alignment = 0.0;  // L_g (adversarial) or MMD^2 (mmd), 0 otherwise
  double discriminator = 0.0;
};

struct TrainResult {
  DaModel model;
  std::vector<LossRow> history;
};

TrainResult train_adversarial(const std::vector<AttributedGraph>& source,
                              const std::vector<AttributedGraph>& labeled_target,
                              const std::vector<AttributedGraph>& unlabeled_target,
                              const ModelConfig& mcfg, const TrainConfig& tcfg);

/// Plain supervised training on one labeled set (fresh model).
TrainResult train_supervised(const std::vector<AttributedGraph>& labeled,
                             const ModelConfig& mcfg, const TrainConfig& tcfg);

TrainResult train_cold(const std::vector<AttributedGraph>& labeled_target,
                       const ModelConfig& mcfg, const TrainConfig& tcfg);

/// Source pre-training, then target fine-tuning with the first generator
/// layer frozen.
TrainResult train_warm(const std::vector<AttributedGraph>& source,
                       const std::vector<AttributedGraph>& labeled_target,
                       const ModelConfig& mcfg, const TrainConfig& tcfg);

}  // namespace cfgadapt::da
