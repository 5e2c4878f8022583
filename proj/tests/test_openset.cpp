#include "doctest.h"

#include <cmath>
#include <random>

#include "cfgadapt/openset.hpp"

using namespace cfgadapt::openset;

namespace {

Mat gaussian_cloud(std::mt19937_64& rng, int n, int d, double sigma = 1.0) {
  std::normal_distribution<double> nd(0.0, sigma);
  Mat X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = nd(rng);
  return X;
}

double rbf(const Vec& a, const Vec& b, double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

}  // namespace

TEST_CASE("ocsvm: nu-property across several nu values") {
  std::mt19937_64 rng(1);
  Mat X = gaussian_cloud(rng, 300, 2);
  for (double nu : {0.05, 0.1, 0.3}) {
    OcSvm m = ocsvm_train(X, nu, 0.5);
    int rejected = 0, support = 0;
    for (int i = 0; i < X.rows(); ++i) {
      if (m.decision(X.row(i).transpose()) < 0.0) ++rejected;
    }
    for (int i = 0; i < m.alpha.size(); ++i)
      if (m.alpha(i) > 1e-12) ++support;
    const double frac_rejected = rejected / static_cast<double>(X.rows());
    const double frac_support =
        support / static_cast<double>(X.rows());
    CHECK(frac_rejected <= nu + 0.02);
    CHECK(frac_support >= nu - 0.02);
    // dual feasibility
    CHECK(m.alpha.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.alpha.minCoeff() >= -1e-12);
    CHECK(m.alpha.maxCoeff() <= 1.0 / (nu * X.rows()) + 1e-12);
  }
}

TEST_CASE("ocsvm: far points on a standard-normal cloud are flagged") {
  std::mt19937_64 rng(2);
  Mat X = gaussian_cloud(rng, 500, 2);
  OcSvm m = ocsvm_train(X, 0.1, 0.5);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  int flagged = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    double r = 4.0 + 2.0 * (t % 5);
    double a = angle(rng);
    Vec z(2);
    z << r * std::cos(a), r * std::sin(a);
    if (m.detect(z) == Verdict::Outlier) ++flagged;
  }
  CHECK(flagged / static_cast<double>(trials) >= 0.95);
}

TEST_CASE("ocsvm: duplicate of a support vector beats a far point") {
  std::mt19937_64 rng(3);
  Mat X = gaussian_cloud(rng, 100, 2);
  OcSvm m = ocsvm_train(X, 0.1);
  REQUIRE(m.support_vectors.rows() > 0);
  Vec sv = m.support_vectors.row(0).transpose();
  Vec far = Vec::Constant(2, 100.0);
  CHECK(m.decision(sv) >= m.decision(far));
  CHECK(m.detect(far) == Verdict::Outlier);
}

TEST_CASE("ocsvm: decision matches the brute-force dual sum") {
  std::mt19937_64 rng(4);
  Mat X = gaussian_cloud(rng, 80, 3);
  OcSvm m = ocsvm_train(X, 0.2);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    Vec z(3);
    for (int j = 0; j < 3; ++j) z(j) = nd(rng);
    double want = -m.rho;
    for (int i = 0; i < m.support_vectors.rows(); ++i)
      want += m.alpha(i) *
              rbf(m.support_vectors.row(i).transpose(), z, m.gamma_k);
    CHECK(m.decision(z) == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("ocsvm: boundary decision of exactly zero counts as inlier") {
  OcSvm m;
  m.support_vectors = Mat::Zero(1, 1);
  m.alpha = Vec::Ones(1);
  m.gamma_k = 1.0;
  m.rho = 1.0;  // decision at the support vector is exactly 0
  Vec z = Vec::Zero(1);
  CHECK(m.decision(z) == doctest::Approx(0.0));
  CHECK(m.detect(z) == Verdict::Inlier);
}

TEST_CASE("ocsvm: scale equivariance of gamma_k") {
  std::mt19937_64 rng(5);
  Mat X = gaussian_cloud(rng, 120, 2);
  const double c = 3.0;
  OcSvm a = ocsvm_train(X, 0.1, 0.5);
  OcSvm b = ocsvm_train(c * X, 0.1, 0.5 / (c * c));
  std::normal_distribution<double> nd(0.0, 2.0);
  for (int t = 0; t < 30; ++t) {
    Vec z(2);
    z << nd(rng), nd(rng);
    CHECK(a.detect(z) == b.detect(c * z));
  }
}

TEST_CASE("ocsvm: identical training points do not crash") {
  Mat X = Mat::Ones(10, 2);
  OcSvm m = ocsvm_train(X, 0.5);
  Vec same = Vec::Ones(2);
  CHECK(std::isfinite(m.decision(same)));
  CHECK(m.detect(same) == Verdict::Inlier);
  Vec far = Vec::Constant(2, 50.0);
  CHECK(m.detect(far) == Verdict::Outlier);
}

TEST_CASE("ocsvm: default gamma is 1/d") {
  std::mt19937_64 rng(6);
  Mat X = gaussian_cloud(rng, 50, 4);
  OcSvm m = ocsvm_train(X, 0.1);
  CHECK(m.gamma_k == doctest::Approx(0.25));
}

TEST_CASE("ocsvm: tiny and invalid inputs rejected") {
  Mat one = Mat::Ones(1, 2);
  CHECK_THROWS_AS(ocsvm_train(one, 0.1), std::invalid_argument);
  Mat ok = Mat::Random(10, 2);
  CHECK_THROWS_AS(ocsvm_train(ok, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ocsvm_train(ok, 1.5), std::invalid_argument);
}

TEST_CASE("relabel_unknown: all inlier, all outlier, mixed") {
  std::vector<int> preds = {0, 1, 1, 0};
  std::vector<Verdict> all_in(4, Verdict::Inlier);
  CHECK(relabel_unknown(preds, all_in) == preds);

  std::vector<Verdict> all_out(4, Verdict::Outlier);
  std::vector<int> want_out(4, kUnknownLabel);
  CHECK(relabel_unknown(preds, all_out) == want_out);

  std::vector<Verdict> mixed = {Verdict::Inlier, Verdict::Outlier,
                                Verdict::Inlier, Verdict::Outlier};
  std::vector<int> want_mixed = {0, kUnknownLabel, 1, kUnknownLabel};
  CHECK(relabel_unknown(preds, mixed) == want_mixed);
  // an outlier never comes back labeled benign (class 0 here)
  for (size_t i = 0; i < mixed.size(); ++i)
    if (mixed[i] == Verdict::Outlier) CHECK(want_mixed[i] != 0);
}

TEST_CASE("openset_metrics: hand-built 10-sample tally") {
  // 6 unseen-family samples: 3 unknown, 2 benign, 1 malware class;
  // 4 seen samples that must not enter the ratios
  std::vector<int> labels = {kUnknownLabel, kUnknownLabel, kUnknownLabel,
                             0,             0,             1,
                             0,             1,             1,
                             0};
  std::vector<bool> unseen = {true, true, true, true,  true,
                              true, false, false, false, false};
  OpenSetMetrics m = openset_metrics(labels, unseen, /*benign_label=*/0);
  CHECK(m.total == 6);
  CHECK(m.detected == 3);
  CHECK(m.evasion_rate == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("openset_metrics: full detection means zero evasion") {
  std::vector<int> labels = {kUnknownLabel, kUnknownLabel, 1};
  std::vector<bool> unseen = {true, true, false};
  OpenSetMetrics m = openset_metrics(labels, unseen, 0);
  CHECK(m.total == 2);
  CHECK(m.detected == 2);
  CHECK(m.evasion_rate == doctest::Approx(0.0));
}

TEST_CASE("ocsvm: model JSON round trip") {
  std::mt19937_64 rng(7);
  Mat X = gaussian_cloud(rng, 60, 3);
  OcSvm m = ocsvm_train(X, 0.15);
  OcSvm r = OcSvm::from_json(m.to_json());
  CHECK(r.nu == m.nu);
  CHECK(r.gamma_k == m.gamma_k);
  CHECK(r.rho == m.rho);
  CHECK(r.support_vectors.rows() == m.support_vectors.rows());
  std::normal_distribution<double> nd(0.0, 1.5);
  for (int t = 0; t < 10; ++t) {
    Vec z(3);
    for (int j = 0; j < 3; ++j) z(j) = nd(rng);
    CHECK(r.decision(z) == m.decision(z));
  }
}
