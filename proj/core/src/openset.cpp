#include "cfgadapt/openset.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace cfgadapt::openset {

namespace {

double rbf(const Vec& a, const Vec& b, double gamma_k) {
  return std::exp(-gamma_k * (a - b).squaredNorm());
}

}  // namespace

double OcSvm::decision(const Vec& z) const {
  double sum = 0.0;
  for (long i = 0; i < support_vectors.rows(); ++i)
    sum += alpha(i) * rbf(support_vectors.row(i).transpose(), z, gamma_k);
  return sum - rho;
}

Verdict OcSvm::detect(const Vec& z) const {
  return decision(z) >= 0.0 ? Verdict::Inlier : Verdict::Outlier;
}

OcSvm ocsvm_train(const Mat& latents, double nu, double gamma_k) {
  const long n = latents.rows();
  if (n < 2) throw std::invalid_argument("ocsvm_train: need at least 2 points");
  if (!(nu > 0.0 && nu <= 1.0))
    throw std::invalid_argument("ocsvm_train: nu must be in (0, 1]");
  if (gamma_k <= 0.0) gamma_k = 1.0 / static_cast<double>(latents.cols());

  Mat K(n, n);
  for (long i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (long j = i + 1; j < n; ++j) {
      K(i, j) = rbf(latents.row(i).transpose(), latents.row(j).transpose(),
                    gamma_k);
      K(j, i) = K(i, j);
    }
  }

  const double C = 1.0 / (nu * static_cast<double>(n));
  Vec alpha = Vec::Zero(n);
  {
    // standard feasible start: fill the box until the sum constraint is met
    double remaining = 1.0;
    for (long i = 0; i < n && remaining > 0.0; ++i) {
      alpha(i) = std::min(C, remaining);
      remaining -= alpha(i);
    }
  }
  Vec g = K * alpha;  // gradient of (1/2) a'Ka

  // a loose gap leaves spurious free vectors straddling rho and inflates
  // the strict rejection count past nu, so solve well past the documented
  // 1e-4 bound
  const double kEps = 1e-8;
  const int kMaxIters = 100000;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    // maximal-violating pair over the sum constraint
    long up = -1, down = -1;
    double g_up = std::numeric_limits<double>::infinity();
    double g_down = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n; ++i) {
      if (alpha(i) < C - 1e-15 && g(i) < g_up) {
        g_up = g(i);
        up = i;
      }
      if (alpha(i) > 1e-15 && g(i) > g_down) {
        g_down = g(i);
        down = i;
      }
    }
    if (up < 0 || down < 0 || g_down - g_up < kEps) break;

    double quad = K(up, up) + K(down, down) - 2.0 * K(up, down);
    if (quad < 1e-12) quad = 1e-12;
    double t = (g_down - g_up) / quad;
    t = std::min({t, C - alpha(up), alpha(down)});
    alpha(up) += t;
    alpha(down) -= t;
    g += t * (K.col(up) - K.col(down));
  }

  // rho from free support vectors; fall back to the KKT interval midpoint
  double rho_sum = 0.0;
  int free_count = 0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (long i = 0; i < n; ++i) {
    if (alpha(i) > 1e-12 && alpha(i) < C - 1e-12) {
      rho_sum += g(i);
      ++free_count;
    } else if (alpha(i) >= C - 1e-12) {
      lo = std::max(lo, g(i));
    } else {
      hi = std::min(hi, g(i));
    }
  }
  double rho;
  if (free_count > 0) {
    rho = rho_sum / free_count;
  } else {
    if (!std::isfinite(lo)) lo = hi;
    if (!std::isfinite(hi)) hi = lo;
    rho = 0.5 * (lo + hi);
  }

  OcSvm model;
  model.nu = nu;
  model.gamma_k = gamma_k;
  model.rho = rho;
  std::vector<long> sv;
  for (long i = 0; i < n; ++i)
    if (alpha(i) > 1e-12) sv.push_back(i);
  model.support_vectors.resize(static_cast<long>(sv.size()), latents.cols());
  model.alpha.resize(static_cast<long>(sv.size()));
  for (size_t r = 0; r < sv.size(); ++r) {
    model.support_vectors.row(static_cast<long>(r)) = latents.row(sv[r]);
    model.alpha(static_cast<long>(r)) = alpha(sv[r]);
  }
  return model;
}

std::vector<int> relabel_unknown(const std::vector<int>& predictions,
                                 const std::vector<Verdict>& verdicts) {
  if (predictions.size() != verdicts.size())
    throw std::invalid_argument("relabel_unknown: size mismatch");
  std::vector<int> out(predictions.size());
  for (size_t i = 0; i < predictions.size(); ++i)
    out[i] = verdicts[i] == Verdict::Outlier ? kUnknownLabel : predictions[i];
  return out;
}

OpenSetMetrics openset_metrics(const std::vector<int>& final_labels,
                               const std::vector<bool>& unseen_family,
                               int benign_label) {
  if (final_labels.size() != unseen_family.size())
    throw std::invalid_argument("openset_metrics: size mismatch");
  OpenSetMetrics m;
  int evaded = 0;
  for (size_t i = 0; i < final_labels.size(); ++i) {
    if (!unseen_family[i]) continue;
    ++m.total;
    if (final_labels[i] == kUnknownLabel) ++m.detected;
    if (final_labels[i] == benign_label) ++evaded;
  }
  m.evasion_rate = m.total > 0 ? static_cast<double>(evaded) / m.total : 0.0;
  return m;
}

std::string OcSvm::to_json() const {
  nlohmann::json j;
  j["nu"] = nu;
  j["gamma_k"] = gamma_k;
  j["rho"] = rho;
  j["dim"] = support_vectors.cols();
  auto sv = nlohmann::json::array();
  auto al = nlohmann::json::array();
  for (long i = 0; i < support_vectors.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (long c = 0; c < support_vectors.cols(); ++c)
      row.push_back(support_vectors(i, c));
    sv.push_back(std::move(row));
    al.push_back(alpha(i));
  }
  j["support_vectors"] = std::move(sv);
  j["alpha"] = std::move(al);
  return j.dump(2);
}

OcSvm OcSvm::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  OcSvm m;
  m.nu = j.at("nu").get<double>();
  m.gamma_k = j.at("gamma_k").get<double>();
  m.rho = j.at("rho").get<double>();
  const long dim = j.at("dim").get<long>();
  const auto& sv = j.at("support_vectors");
  const auto& al = j.at("alpha");
  m.support_vectors.resize(static_cast<long>(sv.size()), dim);
  m.alpha.resize(static_cast<long>(al.size()));
  for (size_t i = 0; i < sv.size(); ++i) {
    for (long c = 0; c < dim; ++c)
      m.support_vectors(static_cast<long>(i), c) = sv[i][c].get<double>();
    m.alpha(static_cast<long>(i)) = al[i].get<double>();
  }
  return m;
}

}  // namespace cfgadapt::openset
