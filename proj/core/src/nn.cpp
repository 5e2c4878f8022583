#include "cfgadapt/nn.hpp"

#include <cmath>
#include <cstring>

namespace cfgadapt::nn {

Mat glorot_uniform(long rows, long cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Dense::Dense(long in, long out, std::mt19937_64& rng, bool zero_init)
    : W(zero_init ? Mat::Zero(in, out) : glorot_uniform(in, out, rng)),
      b(Mat::Zero(1, out)) {}

Var Dense::forward(const Var& x) {
  return add_rowvec(matmul(x, leaf(W)), leaf(b));
}

void Dense::collect(std::vector<Param*>& out) {
  out.push_back(&W);
  out.push_back(&b);
}

BatchNorm::BatchNorm(long width)
    : gamma(Mat::Ones(1, width)),
      beta(Mat::Zero(1, width)),
      running_mean(Mat::Zero(1, width)),
      running_var(Mat::Ones(1, width)) {}

Var BatchNorm::forward(const Var& x, bool train) {
  // Composed from primitives so the backward pass comes for free.
  if (train) {
    Var mu = col_mean(x);
    Var centered = add_rowvec(x, scale(mu, -1.0));
    Var var = col_mean(mul(centered, centered));
    running_mean =
        (1.0 - momentum) * running_mean + momentum * mu->val;
    // unbiased running variance for eval
    const double n = static_cast<double>(x->val.rows());
    Mat var_unbiased = var->val * (n > 1 ? n / (n - 1.0) : 1.0);
    running_var = (1.0 - momentum) * running_var + momentum * var_unbiased;
    Var inv_std = pow_elem(add_scalar(var, eps), -0.5);
    Var normalized = mul_rowvec(centered, inv_std);
    return add_rowvec(mul_rowvec(normalized, leaf(gamma)), leaf(beta));
  }
  Mat inv_std = (running_var.array() + eps).rsqrt();
  Var centered = add_rowvec(x, constant(-running_mean));
  Var normalized = mul_rowvec(centered, constant(inv_std));
  return add_rowvec(mul_rowvec(normalized, leaf(gamma)), leaf(beta));
}

void BatchNorm::collect(std::vector<Param*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

GinMlp::GinMlp(long in, long hidden, std::mt19937_64& rng)
    : fc1(in, hidden, rng), fc2(hidden, hidden, rng), bn1(hidden),
      bn2(hidden) {}

Var GinMlp::forward(const Var& x, bool train) {
  Var h = relu(bn1.forward(fc1.forward(x), train));
  return relu(bn2.forward(fc2.forward(h), train));
}

void GinMlp::collect(std::vector<Param*>& out) {
  fc1.collect(out);
  bn1.collect(out);
  fc2.collect(out);
  bn2.collect(out);
}

Mat symmetrize(const Mat& A) { return A + A.transpose(); }

Mat gcn_propagation(const Mat& A) {
  Mat At = symmetrize(A);
  Mat tilde = At + Mat::Identity(A.rows(), A.cols());
  Vec deg = tilde.rowwise().sum();
  Vec dinv = deg.array().max(1e-12).rsqrt();
  return dinv.asDiagonal() * tilde * dinv.asDiagonal();
}

Var gin_layer(const Var& X, const Mat& A_sym, GinMlp& mlp, bool train,
              double epsilon) {
  if (A_sym.rows() != X->val.rows())
    throw std::invalid_argument("gin_layer: adjacency/feature shape mismatch");
  Mat agg = A_sym + (1.0 + epsilon) * Mat::Identity(A_sym.rows(), A_sym.cols());
  return mlp.forward(matmul(constant(agg), X), train);
}

Var gcn_layer(const Var& X, const Mat& S, Dense& dense, bool linear) {
  Var h = dense.forward(matmul(constant(S), X));
  return linear ? h : relu(h);
}

Var readout(const Var& H, Readout mode) {
  Var s = col_mean(H);
  if (mode == Readout::Mean) return s;
  return scale(s, static_cast<double>(H->val.rows()));
}

Var readout_segments(const Var& H, const std::vector<int>& segments,
                     int num_segments, Readout mode) {
  Var means = segment_mean(H, segments, num_segments);
  if (mode == Readout::Mean) return means;
  std::vector<double> counts(num_segments, 0.0);
  for (int s : segments) counts[s] += 1.0;
  Mat scale_rows = Mat::Zero(num_segments, 1);
  for (int s = 0; s < num_segments; ++s) scale_rows(s, 0) = counts[s];
  // per-row scale: means * counts (sum readout)
  Mat broadcast = scale_rows.replicate(1, H->val.cols());
  return mul(means, constant(broadcast));
}

Var jk_concat(const std::vector<Var>& per_iteration_readouts) {
  if (per_iteration_readouts.size() == 1) return per_iteration_readouts[0];
  return concat_cols(per_iteration_readouts);
}

GradCheckReport grad_check(const std::vector<Param*>& params,
                           const std::function<double()>& loss_value,
                           const std::function<void()>& compute_grads,
                           double fd_step) {
  for (Param* p : params) p->zero_grad();
  compute_grads();
  std::vector<Mat> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  // central differences of a parameter the loss is exactly invariant to
  // (e.g. a bias absorbed by batch norm) measure pure rounding noise, so
  // floor the denominator at the loss scale: tiny gradients are compared
  // absolutely, large ones relatively
  const double noise_floor = std::max(1.0, std::abs(loss_value()));

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    for (long i = 0; i < p->value.rows(); ++i) {
      for (long j = 0; j < p->value.cols(); ++j) {
        const double orig = p->value(i, j);
        p->value(i, j) = orig + fd_step;
        const double lp = loss_value();
        p->value(i, j) = orig - fd_step;
        const double lm = loss_value();
        p->value(i, j) = orig;
        const double fd = (lp - lm) / (2.0 * fd_step);
        const double an = analytic[pi](i, j);
        const double denom =
            std::max({std::abs(fd), std::abs(an), noise_floor});
        report.max_rel_err =
            std::max(report.max_rel_err, std::abs(fd - an) / denom);
        ++report.entries_checked;
      }
    }
  }
  return report;
}

std::uint64_t param_hash(const std::vector<Param*>& params) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* data, size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const Param* p : params)
    mix(p->value.data(), sizeof(double) * p->value.size());
  return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace cfgadapt::nn
