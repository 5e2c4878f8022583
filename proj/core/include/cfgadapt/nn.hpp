#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "cfgadapt/tensor.hpp"

namespace cfgadapt::nn {

/// Glorot-style uniform init, deterministic in the supplied engine.
Mat glorot_uniform(long rows, long cols, std::mt19937_64& rng);

struct Dense {
  Param W, b;

  Dense() = default;
  Dense(long in, long out, std::mt19937_64& rng, bool zero_init = false);
  Var forward(const Var& x);
  void collect(std::vector<Param*>& out);
};

/// Batch normalization over rows (feature-wise). Batch statistics in train
/// mode, running statistics in eval mode.
struct BatchNorm {
  Param gamma, beta;
  Mat running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm() = default;
  explicit BatchNorm(long width);
  Var forward(const Var& x, bool train);
  void collect(std::vector<Param*>& out);
};

/// Two dense layers, each followed by batch norm and ReLU (the GIN-0 MLP).
struct GinMlp {
  Dense fc1, fc2;
  BatchNorm bn1, bn2;

  GinMlp() = default;
  GinMlp(long in, long hidden, std::mt19937_64& rng);
  Var forward(const Var& x, bool train);
  void collect(std::vector<Param*>& out);
};

/// A_sym = A + A^T, multiplicity-preserving.
Mat symmetrize(const Mat& A);
/// D^{-1/2} (A_sym + I) D^{-1/2} (GCN propagation matrix).
Mat gcn_propagation(const Mat& A);

/// GIN-0 aggregation + MLP: MLP((1+eps) h_v + sum_{u in N(v)} h_u).
Var gin_layer(const Var& X, const Mat& A_sym, GinMlp& mlp, bool train,
              double epsilon = 0.0);

/// GCN layer: relu(S X W) with S the normalized propagation matrix.
Var gcn_layer(const Var& X, const Mat& S, Dense& dense, bool linear = false);

enum class Readout { Sum, Mean };
Var readout(const Var& H, Readout mode);
Var readout_segments(const Var& H, const std::vector<int>& segments,
                     int num_segments, Readout mode);
/// Concatenation of per-iteration graph readouts, iteration order preserved.
Var jk_concat(const std::vector<Var>& per_iteration_readouts);

/// Max relative error between analytic and central-difference gradients of
/// `loss_fn` over every entry of every param in `params`.
struct GradCheckReport {
  double max_rel_err = 0.0;
  long entries_checked = 0;
};
GradCheckReport grad_check(const std::vector<Param*>& params,
                           const std::function<double()>& loss_value,
                           const std::function<void()>& compute_grads,
                           double fd_step = 1e-5);

/// FNV-1a over the raw bytes of every param value; trajectory fingerprint.
std::uint64_t param_hash(const std::vector<Param*>& params);

/// Derives independent sub-seeds for model components.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace cfgadapt::nn
