#include "cfgadapt/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "cfgadapt/tensor.hpp"

namespace cfgadapt::cluster {

using nn::Param;
using nn::Var;

// ---------------------------------------------------------------------------
// GAE

namespace {

// BCE over a masked subset of pairs; mask entries weight each pair.
Var bce_masked(const Var& probs, const Mat& targets, const Mat& mask) {
  Mat p = probs->val.cwiseMax(1e-12).cwiseMin(1.0 - 1e-12);
  double loss = 0.0;
  for (long i = 0; i < p.rows(); ++i)
    for (long j = 0; j < p.cols(); ++j)
      if (mask(i, j) != 0.0)
        loss -= mask(i, j) * (targets(i, j) * std::log(p(i, j)) +
                              (1.0 - targets(i, j)) * std::log(1.0 - p(i, j)));
  Mat out(1, 1);
  out(0, 0) = loss;
  auto node = std::make_shared<nn::Node>();
  node->val = out;
  node->parents = {probs};
  node->requires_grad = probs->requires_grad;
  if (node->requires_grad) {
    node->grad = Mat::Zero(1, 1);
    node->backward_fn = [probs, p, targets, mask](nn::Node& self) {
      Mat g = (mask.array() * (p.array() - targets.array()) /
               (p.array() * (1.0 - p.array())))
                  .matrix();
      if (probs->requires_grad) probs->grad += self.grad(0, 0) * g;
    };
  }
  return node;
}

}  // namespace

GaeResult train_gae(const AttributedGraph& graph, const GaeConfig& cfg,
                    std::uint64_t seed) {
  const long n = graph.X.rows();
  if (n == 0) throw std::invalid_argument("train_gae: empty graph");
  Mat S = nn::gcn_propagation(graph.A);
  Mat A_sym = nn::symmetrize(graph.A);
  // reconstruction target: binary adjacency with self-loops positive
  Mat target = Mat::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      target(i, j) = (i == j || A_sym(i, j) > 0.0) ? 1.0 : 0.0;

  Mat mask = Mat::Ones(n, n);
  std::mt19937_64 rng(nn::derive_seed(seed, 11));
  if (n > cfg.exact_pair_threshold) {
    // balanced positive/negative pair subsampling
    std::vector<std::pair<long, long>> negatives;
    long positives = 0;
    mask.setZero();
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) {
        if (target(i, j) > 0.0) {
          mask(i, j) = 1.0;
          ++positives;
        } else {
          negatives.emplace_back(i, j);
        }
      }
    std::shuffle(negatives.begin(), negatives.end(), rng);
    for (long k = 0; k < std::min<long>(positives, negatives.size()); ++k)
      mask(negatives[k].first, negatives[k].second) = 1.0;
  }

  std::mt19937_64 init_rng(nn::derive_seed(seed, 12));
  nn::Dense enc1(graph.X.cols(), cfg.hidden, init_rng);
  nn::Dense enc2(cfg.hidden, cfg.embedding_dim, init_rng);
  std::vector<Param*> params;
  enc1.collect(params);
  enc2.collect(params);
  nn::Adam adam{cfg.learning_rate};

  GaeResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Var x = nn::constant(graph.X);
    Var h = nn::gcn_layer(x, S, enc1, /*linear=*/false);
    Var z = nn::gcn_layer(h, S, enc2, /*linear=*/true);
    Var a_hat = nn::sigmoid(nn::matmul(z, nn::transpose(z)));
    Var loss = bce_masked(a_hat, target, mask);
    if (epoch == 0) result.initial_loss = loss->val(0, 0);
    result.final_loss = loss->val(0, 0);
    nn::backward(loss);
    adam.step(params);
    for (Param* p : params) p->zero_grad();
  }
  // final encoder pass
  Var x = nn::constant(graph.X);
  Var h = nn::gcn_layer(x, S, enc1, false);
  Var z = nn::gcn_layer(h, S, enc2, true);
  result.Z = z->val;
  result.embedding = result.Z.colwise().mean().transpose();
  return result;
}

Mat gae_reconstruct(const Mat& Z) {
  return (Z * Z.transpose())
      .unaryExpr([](double v) {
        const double p = 1.0 / (1.0 + std::exp(-v));
        return std::min(1.0 - 1e-12, std::max(1e-12, p));
      });
}

// ---------------------------------------------------------------------------
// Validity indices

namespace {

std::map<int, std::vector<int>> group_by_label(const std::vector<int>& labels) {
  std::map<int, std::vector<int>> groups;
  for (size_t i = 0; i < labels.size(); ++i)
    groups[labels[i]].push_back(static_cast<int>(i));
  return groups;
}

}  // namespace

double silhouette(const Mat& points, const std::vector<int>& labels) {
  const long n = points.rows();
  if (static_cast<long>(labels.size()) != n)
    throw std::invalid_argument("silhouette: label count mismatch");
  auto groups = group_by_label(labels);
  if (groups.size() < 2) return 0.0;

  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    const auto& own = groups.at(labels[i]);
    if (own.size() == 1) continue;  // singleton contributes 0
    double a = 0.0;
    for (int j : own)
      if (j != i) a += (points.row(i) - points.row(j)).norm();
    a /= static_cast<double>(own.size() - 1);

    double b = std::numeric_limits<double>::infinity();
    for (const auto& [lbl, members] : groups) {
      if (lbl == labels[i]) continue;
      double d = 0.0;
      for (int j : members) d += (points.row(i) - points.row(j)).norm();
      b = std::min(b, d / static_cast<double>(members.size()));
    }
    double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;  // a==b==0 contributes 0
  }
  return total / static_cast<double>(n);
}

double calinski_harabasz(const Mat& points, const std::vector<int>& labels) {
  const long n = points.rows();
  auto groups = group_by_label(labels);
  const long k = static_cast<long>(groups.size());
  if (k < 2) throw std::invalid_argument("calinski_harabasz: need k >= 2");
  Eigen::RowVectorXd overall = points.colwise().mean();
  double between = 0.0, within = 0.0;
  for (const auto& [lbl, members] : groups) {
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(points.cols());
    for (int i : members) centroid += points.row(i);
    centroid /= static_cast<double>(members.size());
    between += members.size() * (centroid - overall).squaredNorm();
    for (int i : members) within += (points.row(i) - centroid).squaredNorm();
  }
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / (k - 1)) / (within / (n - k));
}

double davies_bouldin(const Mat& points, const std::vector<int>& labels) {
  auto groups = group_by_label(labels);
  const long k = static_cast<long>(groups.size());
  if (k < 2) throw std::invalid_argument("davies_bouldin: need k >= 2");
  std::vector<Eigen::RowVectorXd> centroids;
  std::vector<double> scatter;
  for (const auto& [lbl, members] : groups) {
    Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(points.cols());
    for (int i : members) c += points.row(i);
    c /= static_cast<double>(members.size());
    double s = 0.0;
    for (int i : members) s += (points.row(i) - c).norm();
    centroids.push_back(c);
    scatter.push_back(s / static_cast<double>(members.size()));
  }
  double total = 0.0;
  for (long i = 0; i < k; ++i) {
    double worst = 0.0;
    for (long j = 0; j < k; ++j) {
      if (i == j) continue;
      double d = (centroids[i] - centroids[j]).norm();
      if (d > 0.0) worst = std::max(worst, (scatter[i] + scatter[j]) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("adjusted_rand_index: size mismatch");
  const long n = static_cast<long>(a.size());
  std::map<std::pair<int, int>, long> contingency;
  std::map<int, long> row_sums, col_sums;
  for (long i = 0; i < n; ++i) {
    contingency[{a[i], b[i]}]++;
    row_sums[a[i]]++;
    col_sums[b[i]]++;
  }
  auto comb2 = [](long x) { return x * (x - 1) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& [key, c] : contingency) sum_ij += comb2(c);
  for (const auto& [key, c] : row_sums) sum_a += comb2(c);
  for (const auto& [key, c] : col_sums) sum_b += comb2(c);
  double expected = sum_a * sum_b / comb2(n);
  double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

// ---------------------------------------------------------------------------
// Predictors

KmeansResult kmeans(const Mat& points, int k, std::uint64_t seed,
                    int max_iters) {
  const long n = points.rows();
  if (k <= 0 || k > n)
    throw std::invalid_argument("kmeans: k must be in [1, N]");
  std::mt19937_64 rng(nn::derive_seed(seed, 21));

  // k-means++ seeding
  Mat centroids(k, points.cols());
  std::uniform_int_distribution<long> first(0, n - 1);
  centroids.row(0) = points.row(first(rng));
  Vec dist2 = Vec::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (long i = 0; i < n; ++i)
      dist2[i] = std::min(
          dist2[i], (points.row(i) - centroids.row(c - 1)).squaredNorm());
    double total = dist2.sum();
    if (total <= 0.0) {
      centroids.row(c) = points.row(first(rng));
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng), acc = 0.0;
    long pick = n - 1;
    for (long i = 0; i < n; ++i) {
      acc += dist2[i];
      if (acc >= r) {
        pick = i;
        break;
      }
    }
    centroids.row(c) = points.row(pick);
  }

  KmeansResult result;
  result.labels.assign(n, 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (long i = 0; i < n; ++i) {
      int best = 0;
      double bd = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (result.labels[i] != best) {
        result.labels[i] = best;
        changed = true;
      }
    }
    Mat sums = Mat::Zero(k, points.cols());
    std::vector<long> counts(k, 0);
    for (long i = 0; i < n; ++i) {
      sums.row(result.labels[i]) += points.row(i);
      counts[result.labels[i]]++;
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centroids.row(c) = sums.row(c) / counts[c];
    if (!changed && iter > 0) break;
  }
  result.centroids = centroids;
  result.inertia = 0.0;
  for (long i = 0; i < n; ++i)
    result.inertia +=
        (points.row(i) - centroids.row(result.labels[i])).squaredNorm();
  return result;
}

int choose_k_inertia(const Mat& points, int k_min, int k_max,
                     std::uint64_t seed) {
  k_max = std::min<long>(k_max, points.rows());
  if (k_min > k_max) throw std::invalid_argument("choose_k_inertia: bad range");
  std::vector<double> inertia;
  for (int k = k_min; k <= k_max; ++k)
    inertia.push_back(kmeans(points, k, seed).inertia);
  if (inertia.size() < 3) return k_min;
  int best = k_min;
  double best_curvature = -std::numeric_limits<double>::infinity();
  for (size_t i = 1; i + 1 < inertia.size(); ++i) {
    double curv = inertia[i - 1] - 2.0 * inertia[i] + inertia[i + 1];
    if (curv > best_curvature + 1e-12) {
      best_curvature = curv;
      best = k_min + static_cast<int>(i);
    }
  }
  // no elbow (flat or linear curve): fall back to the range minimum
  if (best_curvature <= 1e-9 * std::max(1.0, inertia.front())) return k_min;
  return best;
}

namespace {

struct GmmState {
  Mat means;                  // k x d
  std::vector<Mat> covs;      // per-component (full/diag as diagonal matrix)
  Vec weights;                // k
};

double log_gauss(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& mu,
                 const Mat& cov) {
  const long d = x.size();
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) {
    Mat reg = cov + 1e-6 * Mat::Identity(d, d);
    llt.compute(reg);
  }
  Mat L = llt.matrixL();
  Vec diff = (x - mu).transpose();
  Vec sol = llt.matrixL().solve(diff);
  double logdet = 0.0;
  for (long i = 0; i < d; ++i) logdet += 2.0 * std::log(L(i, i));
  return -0.5 * (d * std::log(2.0 * M_PI) + logdet + sol.squaredNorm());
}

long gmm_param_count(long d, int k, Covariance cov) {
  long mean_p = k * d;
  long weight_p = k - 1;
  switch (cov) {
    case Covariance::Full:
      return mean_p + weight_p + k * d * (d + 1) / 2;
    case Covariance::Diag:
      return mean_p + weight_p + k * d;
    case Covariance::Tied:
      return mean_p + weight_p + d * (d + 1) / 2;
    case Covariance::Spherical:
      return mean_p + weight_p + k;
  }
  return 0;
}

}  // namespace

GmmResult gmm_fit(const Mat& points, int components, Covariance covariance,
                  std::uint64_t seed, int max_iters) {
  const long n = points.rows();
  const long d = points.cols();
  if (components <= 0 || components > n)
    throw std::invalid_argument("gmm_fit: bad component count");

  // init responsibilities from k-means
  KmeansResult km = kmeans(points, components, seed);
  Mat resp = Mat::Constant(n, components, 1e-6);
  for (long i = 0; i < n; ++i) resp(i, km.labels[i]) = 1.0;
  for (long i = 0; i < n; ++i) resp.row(i) /= resp.row(i).sum();

  GmmState st;
  st.means = Mat::Zero(components, d);
  st.weights = Vec::Zero(components);
  st.covs.assign(components, Mat::Identity(d, d));

  const double reg = 1e-6;
  double prev_ll = -std::numeric_limits<double>::infinity();
  bool converged = false;
  double ll = prev_ll;

  for (int iter = 0; iter < max_iters; ++iter) {
    // M step
    Vec nk = resp.colwise().sum();
    for (int c = 0; c < components; ++c) {
      st.weights[c] = nk[c] / n;
      st.means.row(c) = (resp.col(c).transpose() * points) / nk[c];
    }
    Mat tied = Mat::Zero(d, d);
    for (int c = 0; c < components; ++c) {
      Mat cov = Mat::Zero(d, d);
      for (long i = 0; i < n; ++i) {
        Eigen::RowVectorXd diff = points.row(i) - st.means.row(c);
        cov += resp(i, c) * diff.transpose() * diff;
      }
      cov /= nk[c];
      switch (covariance) {
        case Covariance::Full:
          st.covs[c] = cov + reg * Mat::Identity(d, d);
          break;
        case Covariance::Diag:
          st.covs[c] = cov.diagonal().asDiagonal();
          st.covs[c] += reg * Mat::Identity(d, d);
          break;
        case Covariance::Spherical: {
          double avg = cov.trace() / d;
          st.covs[c] = (avg + reg) * Mat::Identity(d, d);
          break;
        }
        case Covariance::Tied:
          tied += (nk[c] / n) * cov;
          break;
      }
    }
    if (covariance == Covariance::Tied) {
      tied += reg * Mat::Identity(d, d);
      for (int c = 0; c < components; ++c) st.covs[c] = tied;
    }

    // E step
    Mat logp(n, components);
    for (long i = 0; i < n; ++i)
      for (int c = 0; c < components; ++c)
        logp(i, c) = std::log(std::max(st.weights[c], 1e-300)) +
                     log_gauss(points.row(i), st.means.row(c), st.covs[c]);
    ll = 0.0;
    for (long i = 0; i < n; ++i) {
      double mx = logp.row(i).maxCoeff();
      double lse = mx + std::log((logp.row(i).array() - mx).exp().sum());
      ll += lse;
      resp.row(i) = (logp.row(i).array() - lse).exp();
    }
    if (std::abs(ll - prev_ll) < 1e-7 * std::max(1.0, std::abs(ll))) {
      converged = true;
      break;
    }
    prev_ll = ll;
  }

  GmmResult result;
  result.components = components;
  result.covariance = covariance;
  result.converged = converged;
  result.labels.assign(n, 0);
  for (long i = 0; i < n; ++i) {
    int best = 0;
    for (int c = 1; c < components; ++c)
      if (resp(i, c) > resp(i, best)) best = c;
    result.labels[i] = best;
  }
  result.bic = -2.0 * ll + gmm_param_count(d, components, covariance) *
                               std::log(static_cast<double>(n));
  return result;
}

GmmResult gmm_select(const Mat& points, int max_components,
                     std::uint64_t seed) {
  GmmResult best;
  bool have = false;
  const Covariance types[] = {Covariance::Full, Covariance::Diag,
                              Covariance::Tied, Covariance::Spherical};
  for (int k = 1; k <= std::min<long>(max_components, points.rows()); ++k) {
    for (Covariance cov : types) {
      GmmResult r = gmm_fit(points, k, cov, seed);
      if (!have || r.bic < best.bic) {
        best = r;
        have = true;
      }
    }
  }
  if (!have) throw std::invalid_argument("gmm_select: empty input");
  return best;
}

std::vector<int> density_cluster(const Mat& points, int min_cluster_size,
                                 int min_samples, double eps) {
  const long n = points.rows();
  if (n == 0) return {};
  Mat dist(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      dist(i, j) = (points.row(i) - points.row(j)).norm();

  if (eps <= 0.0) {
    // twice the mean distance to the min_samples-th neighbor (self
    // excluded); the bare mean leaves roughly half the points non-core and
    // fragments otherwise dense regions
    double total = 0.0;
    for (long i = 0; i < n; ++i) {
      std::vector<double> ds;
      for (long j = 0; j < n; ++j)
        if (j != i) ds.push_back(dist(i, j));
      if (ds.empty()) return std::vector<int>(n, 0);
      size_t k = std::min<size_t>(min_samples, ds.size()) - 1;
      std::nth_element(ds.begin(), ds.begin() + k, ds.end());
      total += ds[k];
    }
    eps = 2.0 * total / n;
    if (eps <= 0.0) return std::vector<int>(n, 0);
  }

  std::vector<bool> core(n, false);
  for (long i = 0; i < n; ++i) {
    int neighbors = 0;
    for (long j = 0; j < n; ++j)
      if (dist(i, j) <= eps) ++neighbors;  // includes self
    core[i] = neighbors >= min_samples;
  }

  std::vector<int> labels(n, -1);
  int next = 0;
  for (long i = 0; i < n; ++i) {
    if (!core[i] || labels[i] != -1) continue;
    // BFS over density-reachable points
    std::vector<long> queue{i};
    labels[i] = next;
    while (!queue.empty()) {
      long u = queue.back();
      queue.pop_back();
      if (!core[u]) continue;
      for (long v = 0; v < n; ++v) {
        if (dist(u, v) <= eps && labels[v] == -1) {
          labels[v] = next;
          queue.push_back(v);
        }
      }
    }
    ++next;
  }

  // dissolve undersized clusters back to noise
  std::map<int, long> sizes;
  for (int l : labels)
    if (l >= 0) sizes[l]++;
  for (long i = 0; i < n; ++i)
    if (labels[i] >= 0 && sizes[labels[i]] < min_cluster_size) labels[i] = -1;

  // relabel contiguously
  std::map<int, int> remap;
  for (long i = 0; i < n; ++i)
    if (labels[i] >= 0 && !remap.count(labels[i])) {
      int id = static_cast<int>(remap.size());
      remap[labels[i]] = id;
    }
  for (long i = 0; i < n; ++i)
    if (labels[i] >= 0) labels[i] = remap[labels[i]];

  if (remap.empty()) return std::vector<int>(n, 0);

  // assign noise to the nearest cluster centroid
  Mat centroids = Mat::Zero(remap.size(), points.cols());
  std::vector<long> counts(remap.size(), 0);
  for (long i = 0; i < n; ++i)
    if (labels[i] >= 0) {
      centroids.row(labels[i]) += points.row(i);
      counts[labels[i]]++;
    }
  for (size_t c = 0; c < counts.size(); ++c) centroids.row(c) /= counts[c];
  for (long i = 0; i < n; ++i) {
    if (labels[i] >= 0) continue;
    int best = 0;
    double bd = (points.row(i) - centroids.row(0)).squaredNorm();
    for (size_t c = 1; c < counts.size(); ++c) {
      double d2 = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d2 < bd) {
        bd = d2;
        best = static_cast<int>(c);
      }
    }
    labels[i] = best;
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Consensus

ConsensusMatrix make_consensus(int num_graphs) {
  ConsensusMatrix cm;
  cm.CM = Mat::Zero(num_graphs, num_graphs);
  return cm;
}

void consensus_update(ConsensusMatrix& cm, const std::vector<int>& labels,
                      double s) {
  if (cm.normalized)
    throw std::logic_error("consensus_update: matrix already normalized");
  if (static_cast<long>(labels.size()) != cm.CM.rows())
    throw std::invalid_argument("consensus_update: size mismatch");
  const double w = (s + 1.0) / 2.0;
  const long n = cm.CM.rows();
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (labels[i] == labels[j]) cm.CM(i, j) += w;
  cm.weight_sum += w;
  cm.solution_count++;
}

void consensus_normalize(ConsensusMatrix& cm) {
  if (cm.normalized) return;
  const double denom =
      cm.weight_sum > 1e-12 ? cm.weight_sum : std::max(1, cm.solution_count);
  cm.CM /= denom;
  cm.normalized = true;
}

ClusterAssignment consensus_cluster(
    const Mat& embeddings, const std::vector<Predictor>& predictors,
    const std::optional<std::vector<int>>& original_labels,
    std::uint64_t seed) {
  if (predictors.empty())
    throw std::invalid_argument("consensus_cluster: empty predictor set");
  const long n = embeddings.rows();
  ConsensusMatrix cm = make_consensus(static_cast<int>(n));

  auto add_solution = [&](const std::vector<int>& labels) {
    std::set<int> uniq(labels.begin(), labels.end());
    double s = uniq.size() >= 2 ? silhouette(embeddings, labels) : 0.0;
    consensus_update(cm, labels, s);
  };

  for (Predictor p : predictors) {
    switch (p) {
      case Predictor::Kmeans: {
        // start the elbow scan at 1 so a drop to k=2 is visible
        int k = choose_k_inertia(embeddings, 1,
                                 std::min<long>(10, n), seed);
        add_solution(kmeans(embeddings, k, seed).labels);
        break;
      }
      case Predictor::Gmm:
        add_solution(gmm_select(embeddings, 6, seed).labels);
        break;
      case Predictor::Density:
        add_solution(density_cluster(embeddings, 2, 2));
        break;
    }
  }
  if (original_labels) add_solution(*original_labels);

  consensus_normalize(cm);
  GmmResult final = gmm_select(cm.CM, 6, seed);

  ClusterAssignment out;
  out.labels = final.labels;
  std::set<int> uniq(out.labels.begin(), out.labels.end());
  out.k = static_cast<int>(uniq.size());
  out.silhouette_score =
      out.k >= 2 ? silhouette(embeddings, out.labels) : 0.0;
  return out;
}

}  // namespace cfgadapt::cluster
