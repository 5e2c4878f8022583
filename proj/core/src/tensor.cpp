#include "cfgadapt/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace cfgadapt::nn {

namespace {

Var make_node(Mat val, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->val = std::move(val);
  n->parents = std::move(parents);
  n->requires_grad = false;
  for (const Var& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) {
    n->grad = Mat::Zero(n->val.rows(), n->val.cols());
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

void accum(const Var& p, const Mat& g) {
  if (p->requires_grad) p->grad += g;
}

}  // namespace

Var constant(Mat v) {
  auto n = std::make_shared<Node>();
  n->val = std::move(v);
  n->requires_grad = false;
  return n;
}

Var leaf(Param& p) {
  auto n = std::make_shared<Node>();
  n->val = p.value;
  n->grad = Mat::Zero(p.value.rows(), p.value.cols());
  n->requires_grad = true;
  n->param = &p;
  n->backward_fn = [](Node& self) { self.param->grad += self.grad; };
  return n;
}

Var matmul(const Var& a, const Var& b) {
  return make_node(a->val * b->val, {a, b}, [a, b](Node& self) {
    accum(a, self.grad * b->val.transpose());
    accum(b, a->val.transpose() * self.grad);
  });
}

Var transpose(const Var& a) {
  return make_node(a->val.transpose(), {a}, [a](Node& self) {
    accum(a, self.grad.transpose());
  });
}

Var add(const Var& a, const Var& b) {
  return make_node(a->val + b->val, {a, b}, [a, b](Node& self) {
    accum(a, self.grad);
    accum(b, self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  return make_node(a->val - b->val, {a, b}, [a, b](Node& self) {
    accum(a, self.grad);
    accum(b, -self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  return make_node(a->val.cwiseProduct(b->val), {a, b}, [a, b](Node& self) {
    accum(a, self.grad.cwiseProduct(b->val));
    accum(b, self.grad.cwiseProduct(a->val));
  });
}

Var scale(const Var& a, double c) {
  return make_node(a->val * c, {a},
                   [a, c](Node& self) { accum(a, self.grad * c); });
}

Var add_scalar(const Var& a, double c) {
  return make_node(a->val.array() + c, {a},
                   [a](Node& self) { accum(a, self.grad); });
}

Var add_rowvec(const Var& a, const Var& r) {
  Mat out = a->val;
  out.rowwise() += r->val.row(0);
  return make_node(std::move(out), {a, r}, [a, r](Node& self) {
    accum(a, self.grad);
    accum(r, self.grad.colwise().sum());
  });
}

Var mul_rowvec(const Var& a, const Var& r) {
  Mat out = a->val.array().rowwise() * r->val.row(0).array();
  return make_node(std::move(out), {a, r}, [a, r](Node& self) {
    accum(a, self.grad.array().rowwise() * r->val.row(0).array());
    accum(r, (self.grad.cwiseProduct(a->val)).colwise().sum());
  });
}

Var relu(const Var& a) {
  return make_node(a->val.cwiseMax(0.0), {a}, [a](Node& self) {
    Mat mask = (a->val.array() > 0.0).cast<double>();
    accum(a, self.grad.cwiseProduct(mask));
  });
}

Var sigmoid(const Var& a) {
  Mat s = (1.0 / (1.0 + (-a->val.array()).exp())).matrix();
  return make_node(s, {a}, [a, s](Node& self) {
    accum(a, self.grad.cwiseProduct(
                 (s.array() * (1.0 - s.array())).matrix()));
  });
}

Var log_clamped(const Var& a, double floor) {
  Mat clamped = a->val.cwiseMax(floor);
  return make_node(clamped.array().log().matrix(), {a},
                   [a, clamped](Node& self) {
                     accum(a, self.grad.cwiseQuotient(clamped));
                   });
}

Var pow_elem(const Var& a, double p) {
  return make_node(a->val.array().pow(p).matrix(), {a}, [a, p](Node& self) {
    Mat d = p * a->val.array().pow(p - 1.0);
    accum(a, self.grad.cwiseProduct(d));
  });
}

Var col_mean(const Var& a) {
  const double n = static_cast<double>(a->val.rows());
  Mat out = a->val.colwise().mean();
  return make_node(std::move(out), {a}, [a, n](Node& self) {
    Mat g = Mat::Zero(a->val.rows(), a->val.cols());
    g.rowwise() += (self.grad.row(0) / n);
    accum(a, g);
  });
}

Var sum_all(const Var& a) {
  Mat out(1, 1);
  out(0, 0) = a->val.sum();
  return make_node(std::move(out), {a}, [a](Node& self) {
    accum(a, Mat::Constant(a->val.rows(), a->val.cols(), self.grad(0, 0)));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: empty");
  const long rows = parts[0]->val.rows();
  long cols = 0;
  for (const Var& p : parts) {
    if (p->val.rows() != rows)
      throw std::invalid_argument("concat_cols: row mismatch");
    cols += p->val.cols();
  }
  Mat out(rows, cols);
  long off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p->val.cols()) = p->val;
    off += p->val.cols();
  }
  std::vector<Var> parents = parts;
  return make_node(std::move(out), std::move(parents), [parts](Node& self) {
    long off2 = 0;
    for (const Var& p : parts) {
      accum(p, self.grad.middleCols(off2, p->val.cols()));
      off2 += p->val.cols();
    }
  });
}

Var segment_mean(const Var& a, const std::vector<int>& segments,
                 int num_segments) {
  if (static_cast<long>(segments.size()) != a->val.rows())
    throw std::invalid_argument("segment_mean: segment count mismatch");
  std::vector<double> counts(num_segments, 0.0);
  for (int s : segments) {
    if (s < 0 || s >= num_segments)
      throw std::invalid_argument("segment_mean: segment id out of range");
    counts[s] += 1.0;
  }
  Mat out = Mat::Zero(num_segments, a->val.cols());
  for (long i = 0; i < a->val.rows(); ++i)
    out.row(segments[i]) += a->val.row(i);
  for (int s = 0; s < num_segments; ++s)
    if (counts[s] > 0) out.row(s) /= counts[s];
  return make_node(std::move(out), {a},
                   [a, segments, counts](Node& self) {
                     Mat g(a->val.rows(), a->val.cols());
                     for (long i = 0; i < a->val.rows(); ++i)
                       g.row(i) = self.grad.row(segments[i]) /
                                  counts[segments[i]];
                     accum(a, g);
                   });
}

Mat softmax_rows(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (long i = 0; i < logits.rows(); ++i) {
    Eigen::RowVectorXd row = logits.row(i);
    double mx = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - mx).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

Var softmax_ce(const Var& logits, const Mat& targets, const Vec& row_weights) {
  if (targets.rows() != logits->val.rows() ||
      targets.cols() != logits->val.cols())
    throw std::invalid_argument("softmax_ce: shape mismatch");
  for (long i = 0; i < targets.rows(); ++i) {
    double s = targets.row(i).sum();
    if (targets.row(i).minCoeff() < -1e-12 || std::abs(s - 1.0) > 1e-9)
      throw std::invalid_argument(
          "softmax_ce: target rows must be probability distributions");
  }
  Mat probs = softmax_rows(logits->val);
  double loss = 0.0;
  for (long i = 0; i < probs.rows(); ++i) {
    double li = 0.0;
    for (long j = 0; j < probs.cols(); ++j)
      if (targets(i, j) != 0.0)
        li -= targets(i, j) * std::log(std::max(probs(i, j), 1e-300));
    loss += row_weights[i] * li;
  }
  Mat out(1, 1);
  out(0, 0) = loss;
  return make_node(std::move(out), {logits},
                   [logits, probs, targets, row_weights](Node& self) {
                     Mat g = probs - targets;
                     for (long i = 0; i < g.rows(); ++i)
                       g.row(i) *= row_weights[i];
                     accum(logits, self.grad(0, 0) * g);
                   });
}

Var bce_sum(const Var& probs, const Mat& targets, double floor) {
  Mat p = probs->val.cwiseMax(floor).cwiseMin(1.0 - floor);
  double loss = 0.0;
  for (long i = 0; i < p.rows(); ++i)
    for (long j = 0; j < p.cols(); ++j)
      loss -= targets(i, j) * std::log(p(i, j)) +
              (1.0 - targets(i, j)) * std::log(1.0 - p(i, j));
  Mat out(1, 1);
  out(0, 0) = loss;
  return make_node(std::move(out), {probs}, [probs, p, targets](Node& self) {
    Mat g = ((p.array() - targets.array()) /
             (p.array() * (1.0 - p.array())))
                .matrix();
    accum(probs, self.grad(0, 0) * g);
  });
}

Var mmd_rbf(const Var& a, const Var& b, const std::vector<double>& sigmas) {
  const Mat& A = a->val;
  const Mat& B = b->val;
  const long m = A.rows(), n = B.rows();
  if (m == 0 || n == 0)
    throw std::invalid_argument("mmd_rbf: empty sample set");
  auto sqdist = [](const Mat& X, const Mat& Y) {
    Mat D(X.rows(), Y.rows());
    for (long i = 0; i < X.rows(); ++i)
      for (long j = 0; j < Y.rows(); ++j)
        D(i, j) = (X.row(i) - Y.row(j)).squaredNorm();
    return D;
  };
  Mat Daa = sqdist(A, A), Dbb = sqdist(B, B), Dab = sqdist(A, B);

  double total = 0.0;
  // cached kernel matrices per sigma for the backward pass
  std::vector<Mat> Kaa(sigmas.size()), Kbb(sigmas.size()), Kab(sigmas.size());
  for (size_t s = 0; s < sigmas.size(); ++s) {
    double denom = 2.0 * sigmas[s] * sigmas[s];
    Kaa[s] = (-Daa.array() / denom).exp();
    Kbb[s] = (-Dbb.array() / denom).exp();
    Kab[s] = (-Dab.array() / denom).exp();
    total += Kaa[s].sum() / double(m * m) + Kbb[s].sum() / double(n * n) -
             2.0 * Kab[s].sum() / double(m * n);
  }
  Mat out(1, 1);
  out(0, 0) = total;
  return make_node(
      std::move(out), {a, b},
      [a, b, sigmas, Kaa, Kbb, Kab, m, n](Node& self) {
        const Mat& A2 = a->val;
        const Mat& B2 = b->val;
        Mat ga = Mat::Zero(A2.rows(), A2.cols());
        Mat gb = Mat::Zero(B2.rows(), B2.cols());
        for (size_t s = 0; s < sigmas.size(); ++s) {
          double inv = 1.0 / (sigmas[s] * sigmas[s]);
          // d/dx_i k(x_i,y_j) = -k * (x_i - y_j) / sigma^2
          for (long i = 0; i < m; ++i)
            for (long j = 0; j < m; ++j) {
              // both arguments differentiate; factor 2 from symmetry
              Eigen::RowVectorXd d = (A2.row(i) - A2.row(j)) * inv;
              ga.row(i) += (-Kaa[s](i, j) / double(m * m)) * 2.0 * d;
            }
          for (long i = 0; i < n; ++i)
            for (long j = 0; j < n; ++j) {
              Eigen::RowVectorXd d = (B2.row(i) - B2.row(j)) * inv;
              gb.row(i) += (-Kbb[s](i, j) / double(n * n)) * 2.0 * d;
            }
          for (long i = 0; i < m; ++i)
            for (long j = 0; j < n; ++j) {
              Eigen::RowVectorXd d = (A2.row(i) - B2.row(j)) * inv;
              Eigen::RowVectorXd g = (-Kab[s](i, j)) * d;
              ga.row(i) -= 2.0 / double(m * n) * g;
              gb.row(j) += 2.0 / double(m * n) * g;
            }
        }
        accum(a, self.grad(0, 0) * ga);
        accum(b, self.grad(0, 0) * gb);
      });
}

void backward(const Var& out) {
  if (!out->requires_grad) return;
  if (out->val.size() != 1)
    throw std::invalid_argument("backward: output must be scalar");
  // iterative post-order over the tape
  std::vector<Var> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Var, size_t>> stack{{out, 0}};
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx == 0 && !visited.insert(node.get()).second) {
      stack.pop_back();
      continue;
    }
    if (idx < node->parents.size()) {
      Var child = node->parents[idx++];
      if (child->requires_grad && !visited.count(child.get()))
        stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  out->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

void Adam::step(const std::vector<Param*>& params) {
  ++step_count;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (Param* p : params) {
    if (p->m.size() == 0) {
      p->m = Mat::Zero(p->value.rows(), p->value.cols());
      p->v = Mat::Zero(p->value.rows(), p->value.cols());
    }
    p->m = beta1 * p->m + (1.0 - beta1) * p->grad;
    p->v = beta2 * p->v.array().matrix() +
           (1.0 - beta2) * p->grad.cwiseProduct(p->grad);
    Mat mhat = p->m / bc1;
    Mat vhat = p->v / bc2;
    p->value -=
        (learning_rate * mhat.array() / (vhat.array().sqrt() + eps)).matrix();
  }
}

}  // namespace cfgadapt::nn
