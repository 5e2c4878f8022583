#pragma once

#include <string>
#include <vector>

#include "cfgadapt/nn.hpp"

namespace cfgadapt::openset {

using nn::Mat;
using nn::Vec;

enum class Verdict { Inlier, Outlier };

/// nu-one-class SVM with an RBF kernel. Dual convention:
/// 0 <= alpha_i <= 1/(nu*N), sum alpha = 1,
/// decision(z) = sum_i alpha_i k(x_i, z) - rho.
struct OcSvm {
  Mat support_vectors;  // one row per support vector
  Vec alpha;            // matching dual coefficients
  double rho = 0.0;
  double nu = 0.1;
  double gamma_k = 0.0;

  double decision(const Vec& z) const;
  Verdict detect(const Vec& z) const;

  std::string to_json() const;
  static OcSvm from_json(const std::string& text);
};

/// Trains the one-class dual with a working-set-2 coordinate solver.
/// gamma_k <= 0 selects the default 1/d.
OcSvm ocsvm_train(const Mat& latents, double nu, double gamma_k = 0.0);

constexpr int kUnknownLabel = -1;

/// Outliers get kUnknownLabel, inliers keep the classifier prediction.
std::vector<int> relabel_unknown(const std::vector<int>& predictions,
                                 const std::vector<Verdict>& verdicts);

struct OpenSetMetrics {
  double evasion_rate = 0.0;
  int detected = 0;
  int total = 0;
};

OpenSetMetrics openset_metrics(const std::vector<int>& final_labels,
                               const std::vector<bool>& unseen_family,
                               int benign_label);

}  // namespace cfgadapt::openset
