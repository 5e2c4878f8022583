#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfgadapt/features.hpp"
#include "cfgadapt/nn.hpp"

namespace cfgadapt::cluster {

using feat::AttributedGraph;
using nn::Mat;
using nn::Vec;

// ---------------------------------------------------------------------------
// Graph autoencoder (GCN encoder, inner-product decoder)

struct GaeConfig {
  int hidden = 32;
  int embedding_dim = 256;
  int epochs = 200;
  double learning_rate = 1e-2;
  // graphs above this node count use balanced negative-pair subsampling in
  // the reconstruction loss
  int exact_pair_threshold = 1000;
};

struct GaeResult {
  Vec embedding;        // mean-pooled node embeddings
  Mat Z;                // node embeddings
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

GaeResult train_gae(const AttributedGraph& graph, const GaeConfig& cfg,
                    std::uint64_t seed);

/// Inner-product decoder: sigmoid(Z Z^T) with the same probability clamp the
/// reconstruction loss applies, so entries stay strictly inside (0,1).
Mat gae_reconstruct(const Mat& Z);

// ---------------------------------------------------------------------------
// Cluster-validity indices

double silhouette(const Mat& points, const std::vector<int>& labels);
double calinski_harabasz(const Mat& points, const std::vector<int>& labels);
double davies_bouldin(const Mat& points, const std::vector<int>& labels);

double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b);

// ---------------------------------------------------------------------------
// Clustering predictors

struct KmeansResult {
  std::vector<int> labels;
  Mat centroids;
  double inertia = 0.0;
};

KmeansResult kmeans(const Mat& points, int k, std::uint64_t seed,
                    int max_iters = 100);

/// Elbow (largest second difference) over the inertia curve; ties take the
/// smaller k.
int choose_k_inertia(const Mat& points, int k_min, int k_max,
                     std::uint64_t seed);

enum class Covariance { Full, Diag, Tied, Spherical };

struct GmmResult {
  std::vector<int> labels;
  int components = 0;
  Covariance covariance = Covariance::Full;
  double bic = 0.0;
  bool converged = true;
};

/// EM fit for a fixed component count and covariance type.
GmmResult gmm_fit(const Mat& points, int components, Covariance covariance,
                  std::uint64_t seed, int max_iters = 200);
/// BIC model selection over 1..max_components x all covariance types.
GmmResult gmm_select(const Mat& points, int max_components,
                     std::uint64_t seed);

/// Density-based predictor (DBSCAN-style core-point expansion). Noise points
/// are assigned to the nearest cluster centroid. eps <= 0 selects twice the
/// mean min_samples-th neighbor distance.
std::vector<int> density_cluster(const Mat& points, int min_cluster_size = 2,
                                 int min_samples = 2, double eps = 0.0);

// ---------------------------------------------------------------------------
// Weighted consensus

struct ConsensusMatrix {
  Mat CM;
  double weight_sum = 0.0;
  int solution_count = 0;
  bool normalized = false;
};

ConsensusMatrix make_consensus(int num_graphs);
/// CM[i][j] += (s+1)/2 for every co-clustered pair.
void consensus_update(ConsensusMatrix& cm, const std::vector<int>& labels,
                      double s);
void consensus_normalize(ConsensusMatrix& cm);

struct ClusterAssignment {
  std::vector<int> labels;
  int k = 0;
  double silhouette_score = 0.0;
};

enum class Predictor { Kmeans, Gmm, Density };

ClusterAssignment consensus_cluster(
    const Mat& embeddings, const std::vector<Predictor>& predictors,
    const std::optional<std::vector<int>>& original_labels, std::uint64_t seed);

}  // namespace cfgadapt::cluster
