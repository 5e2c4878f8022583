#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace cfgadapt::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Trainable parameter with gradient accumulator and Adam state.
struct Param {
  Mat value;
  Mat grad;
  Mat m, v;  // Adam moments, lazily sized

  explicit Param(Mat init = Mat())
      : value(std::move(init)), grad(Mat::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

struct Node;
using Var = std::shared_ptr<Node>;

/// Tape node of the reverse-mode graph. `backward_fn` scatters this node's
/// gradient into its parents (and into a bound Param for leaves).
struct Node {
  Mat val;
  Mat grad;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;
  Param* param = nullptr;
};

Var constant(Mat v);
Var leaf(Param& p);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var add_rowvec(const Var& a, const Var& r);  // r is 1 x m, broadcast over rows
Var mul_rowvec(const Var& a, const Var& r);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var log_clamped(const Var& a, double floor = 1e-12);
Var pow_elem(const Var& a, double p);
Var col_mean(const Var& a);  // 1 x m
Var sum_all(const Var& a);   // 1 x 1
Var concat_cols(const std::vector<Var>& parts);
/// Per-segment mean of rows; segments[i] in [0, num_segments).
Var segment_mean(const Var& a, const std::vector<int>& segments,
                 int num_segments);

/// Softmax cross entropy, fused for stability. `targets` holds one
/// distribution per row; `row_weights` scales each row's contribution.
/// Result is the weighted sum over rows (1 x 1).
Var softmax_ce(const Var& logits, const Mat& targets, const Vec& row_weights);

/// Elementwise binary cross entropy against a fixed target matrix, with
/// probabilities clamped to [floor, 1-floor]. Result is the sum (1 x 1).
Var bce_sum(const Var& probs, const Mat& targets, double floor = 1e-12);

/// Biased (V-statistic) multi-kernel squared MMD between the row sets of
/// `a` and `b`, summed over RBF bandwidths sigma.
Var mmd_rbf(const Var& a, const Var& b, const std::vector<double>& sigmas);

void backward(const Var& out);

Mat softmax_rows(const Mat& logits);

/// Adam with bias correction; steps every param in the list.
struct Adam {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step_count = 0;

  void step(const std::vector<Param*>& params);
};

}  // namespace cfgadapt::nn
