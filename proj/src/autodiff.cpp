#include "affgrasp/autodiff.hpp"

#include <algorithm>
#include <cmath>

namespace affgrasp::ag {

Param& ParamStore::create(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw InvalidInputError("ParamStore: duplicate param " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Mat::Zero(rows, cols);
  index_[name] = params_.size();
  order_.push_back(name);
  params_.push_back(std::move(p));
  return *params_.back();
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidInputError("ParamStore: unknown param " + name);
  return *params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw InvalidInputError("ParamStore: unknown param " + name);
  return *params_[it->second];
}

bool ParamStore::contains(const std::string& name) const { return index_.count(name) > 0; }

std::vector<Param*> ParamStore::all() {
  std::vector<Param*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Param*> ParamStore::all() const {
  std::vector<const Param*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

NodePtr Graph::make(Mat value, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  tape_.push_back(n);
  return n;
}

NodePtr Graph::constant(Mat v) { return make(std::move(v), false); }

NodePtr Graph::leaf(Param& p) {
  auto n = make(p.value, true);
  Param* pp = &p;
  NodePtr weak = n;
  n->backprop = [pp, weak]() {
    if (pp->grad.size() == 0) pp->zero_grad();
    pp->grad += weak->grad;
  };
  return n;
}

namespace {
inline bool needs(const NodePtr& n) { return n->requires_grad; }
}  // namespace

NodePtr Graph::matmul(NodePtr a, NodePtr b) {
  if (a->value.cols() != b->value.rows()) throw InvalidInputError("matmul: shape mismatch");
  auto out = make(a->value * b->value, needs(a) || needs(b));
  if (out->requires_grad) {
    out->backprop = [a, b, out]() {
      if (a->requires_grad) {
        a->ensure_grad();
        a->grad.noalias() += out->grad * b->value.transpose();
      }
      if (b->requires_grad) {
        b->ensure_grad();
        b->grad.noalias() += a->value.transpose() * out->grad;
      }
    };
  }
  return out;
}

NodePtr Graph::matmul_nt(NodePtr a, NodePtr b) {
  if (a->value.cols() != b->value.cols()) throw InvalidInputError("matmul_nt: shape mismatch");
  auto out = make(a->value * b->value.transpose(), needs(a) || needs(b));
  if (out->requires_grad) {
    out->backprop = [a, b, out]() {
      if (a->requires_grad) {
        a->ensure_grad();
        a->grad.noalias() += out->grad * b->value;
      }
      if (b->requires_grad) {
        b->ensure_grad();
        b->grad.noalias() += out->grad.transpose() * a->value;
      }
    };
  }
  return out;
}

NodePtr Graph::add(NodePtr a, NodePtr b) {
  auto out = make(a->value + b->value, needs(a) || needs(b));
  if (out->requires_grad) {
    out->backprop = [a, b, out]() {
      if (a->requires_grad) {
        a->ensure_grad();
        a->grad += out->grad;
      }
      if (b->requires_grad) {
        b->ensure_grad();
        b->grad += out->grad;
      }
    };
  }
  return out;
}

NodePtr Graph::sub(NodePtr a, NodePtr b) {
  auto out = make(a->value - b->value, needs(a) || needs(b));
  if (out->requires_grad) {
    out->backprop = [a, b, out]() {
      if (a->requires_grad) {
        a->ensure_grad();
        a->grad += out->grad;
      }
      if (b->requires_grad) {
        b->ensure_grad();
        b->grad -= out->grad;
      }
    };
  }
  return out;
}

NodePtr Graph::mul(NodePtr a, NodePtr b) {
  auto out = make(a->value.cwiseProduct(b->value), needs(a) || needs(b));
  if (out->requires_grad) {
    out->backprop = [a, b, out]() {
      if (a->requires_grad) {
        a->ensure_grad();
        a->grad += out->grad.cwiseProduct(b->value);
      }
      if (b->requires_grad) {
        b->ensure_grad();
        b->grad += out->grad.cwiseProduct(a->value);
      }
    };
  }
  return out;
}

NodePtr Graph::add_rowvec(NodePtr x, NodePtr row) {
  if (row->value.rows() != 1 || row->value.cols() != x->value.cols())
    throw InvalidInputError("add_rowvec: row must be 1 x cols(x)");
  Mat v = x->value;
  v.rowwise() += row->value.row(0);
  auto out = make(std::move(v), needs(x) || needs(row));
  if (out->requires_grad) {
    out->backprop = [x, row, out]() {
      if (x->requires_grad) {
        x->ensure_grad();
        x->grad += out->grad;
      }
      if (row->requires_grad) {
        row->ensure_grad();
        row->grad.row(0) += out->grad.colwise().sum();
      }
    };
  }
  return out;
}

NodePtr Graph::scale(NodePtr a, double s) {
  auto out = make(a->value * s, needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out, s]() {
      a->ensure_grad();
      a->grad += out->grad * s;
    };
  }
  return out;
}

NodePtr Graph::add_scalar(NodePtr a, double s) {
  auto out = make(a->value.array() + s, needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      a->grad += out->grad;
    };
  }
  return out;
}

NodePtr Graph::relu(NodePtr a) {
  auto out = make(a->value.cwiseMax(0.0), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      a->grad += (a->value.array() > 0.0).cast<double>().matrix().cwiseProduct(out->grad);
    };
  }
  return out;
}

NodePtr Graph::sigmoid(NodePtr a) {
  Mat v = (1.0 / (1.0 + (-a->value.array()).exp())).matrix();
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      a->grad +=
          out->grad.cwiseProduct((out->value.array() * (1.0 - out->value.array())).matrix());
    };
  }
  return out;
}

NodePtr Graph::tanh_(NodePtr a) {
  auto out = make(a->value.array().tanh().matrix(), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      a->grad += out->grad.cwiseProduct((1.0 - out->value.array().square()).matrix());
    };
  }
  return out;
}

NodePtr Graph::exp_(NodePtr a) {
  auto out = make(a->value.array().exp().matrix(), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      a->grad += out->grad.cwiseProduct(out->value);
    };
  }
  return out;
}

NodePtr Graph::log_(NodePtr a) {
  auto out = make(a->value.array().log().matrix(), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      a->grad += out->grad.cwiseQuotient(a->value);
    };
  }
  return out;
}

NodePtr Graph::abs_(NodePtr a) {
  auto out = make(a->value.cwiseAbs(), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      // sign(0) = 0: subgradient choice at the kink.
      a->grad += out->grad.cwiseProduct(a->value.array().sign().matrix());
    };
  }
  return out;
}

NodePtr Graph::clamp(NodePtr a, double lo, double hi) {
  auto out = make(a->value.cwiseMax(lo).cwiseMin(hi), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out, lo, hi]() {
      a->ensure_grad();
      a->grad += ((a->value.array() >= lo) && (a->value.array() <= hi))
                     .cast<double>()
                     .matrix()
                     .cwiseProduct(out->grad);
    };
  }
  return out;
}

NodePtr Graph::concat_cols(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw InvalidInputError("concat_cols: empty");
  const Eigen::Index rows = parts[0]->value.rows();
  Eigen::Index cols = 0;
  bool any = false;
  for (const auto& p : parts) {
    if (p->value.rows() != rows) throw InvalidInputError("concat_cols: row mismatch");
    cols += p->value.cols();
    any = any || p->requires_grad;
  }
  Mat v(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    v.middleCols(off, p->value.cols()) = p->value;
    off += p->value.cols();
  }
  auto out = make(std::move(v), any);
  if (out->requires_grad) {
    auto parents = parts;
    out->backprop = [parents, out]() {
      Eigen::Index off = 0;
      for (const auto& p : parents) {
        if (p->requires_grad) {
          p->ensure_grad();
          p->grad += out->grad.middleCols(off, p->value.cols());
        }
        off += p->value.cols();
      }
    };
  }
  return out;
}

NodePtr Graph::slice_cols(NodePtr a, int start, int count) {
  if (start < 0 || start + count > a->value.cols())
    throw InvalidInputError("slice_cols: out of range");
  auto out = make(a->value.middleCols(start, count), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out, start, count]() {
      a->ensure_grad();
      a->grad.middleCols(start, count) += out->grad;
    };
  }
  return out;
}

NodePtr Graph::gather_rows(NodePtr a, std::vector<int> indices) {
  Mat v(indices.size(), a->value.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= a->value.rows())
      throw InvalidInputError("gather_rows: index out of range");
    v.row(i) = a->value.row(indices[i]);
  }
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    auto idx = std::move(indices);
    out->backprop = [a, out, idx]() {
      a->ensure_grad();
      for (std::size_t i = 0; i < idx.size(); ++i) a->grad.row(idx[i]) += out->grad.row(i);
    };
  }
  return out;
}

NodePtr Graph::repeat_row(NodePtr row, int n) {
  if (row->value.rows() != 1) throw InvalidInputError("repeat_row: input must be 1 x C");
  Mat v(n, row->value.cols());
  v.rowwise() = row->value.row(0);
  auto out = make(std::move(v), needs(row));
  if (out->requires_grad) {
    out->backprop = [row, out]() {
      row->ensure_grad();
      row->grad.row(0) += out->grad.colwise().sum();
    };
  }
  return out;
}

NodePtr Graph::segment_max(NodePtr a, int segment) {
  if (segment < 1 || a->value.rows() % segment != 0)
    throw InvalidInputError("segment_max: rows must be a multiple of segment");
  const Eigen::Index groups = a->value.rows() / segment;
  const Eigen::Index cols = a->value.cols();
  Mat v(groups, cols);
  auto argmax = std::make_shared<Eigen::MatrixXi>(groups, cols);
  for (Eigen::Index g = 0; g < groups; ++g) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double best = a->value(g * segment, c);
      int best_i = 0;
      for (int k = 1; k < segment; ++k) {
        const double x = a->value(g * segment + k, c);
        if (x > best) {
          best = x;
          best_i = k;
        }
      }
      v(g, c) = best;
      (*argmax)(g, c) = best_i;
    }
  }
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out, argmax, segment]() {
      a->ensure_grad();
      for (Eigen::Index g = 0; g < out->value.rows(); ++g)
        for (Eigen::Index c = 0; c < out->value.cols(); ++c)
          a->grad(g * segment + (*argmax)(g, c), c) += out->grad(g, c);
    };
  }
  return out;
}

NodePtr Graph::colwise_max(NodePtr a) {
  const Eigen::Index cols = a->value.cols();
  Mat v(1, cols);
  auto argmax = std::make_shared<Eigen::VectorXi>(cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    Eigen::Index best_i;
    v(0, c) = a->value.col(c).maxCoeff(&best_i);
    (*argmax)(c) = static_cast<int>(best_i);
  }
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out, argmax]() {
      a->ensure_grad();
      for (Eigen::Index c = 0; c < out->value.cols(); ++c)
        a->grad((*argmax)(c), c) += out->grad(0, c);
    };
  }
  return out;
}

NodePtr Graph::softmax_rows(NodePtr a) {
  Mat v = a->value;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double m = v.row(i).maxCoeff();
    v.row(i) = (v.row(i).array() - m).exp();
    v.row(i) /= v.row(i).sum();
  }
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      for (Eigen::Index i = 0; i < out->value.rows(); ++i) {
        const double dot = out->grad.row(i).dot(out->value.row(i));
        a->grad.row(i) +=
            (out->grad.row(i).array() - dot).matrix().cwiseProduct(out->value.row(i));
      }
    };
  }
  return out;
}

NodePtr Graph::sum(NodePtr a) {
  Mat v(1, 1);
  v(0, 0) = a->value.sum();
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out]() {
      a->ensure_grad();
      a->grad.array() += out->grad(0, 0);
    };
  }
  return out;
}

NodePtr Graph::mean(NodePtr a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  Mat v(1, 1);
  v(0, 0) = a->value.sum() * inv;
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    out->backprop = [a, out, inv]() {
      a->ensure_grad();
      a->grad.array() += out->grad(0, 0) * inv;
    };
  }
  return out;
}

NodePtr Graph::l2_normalize_rows(NodePtr a) {
  Mat v = a->value;
  Eigen::VectorXd norms(v.rows());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    double n = v.row(i).norm();
    if (n < 1e-12) n = 1e-12;
    norms(i) = n;
    v.row(i) /= n;
  }
  auto out = make(std::move(v), needs(a));
  if (out->requires_grad) {
    auto saved = std::make_shared<Eigen::VectorXd>(std::move(norms));
    out->backprop = [a, out, saved]() {
      a->ensure_grad();
      for (Eigen::Index i = 0; i < out->value.rows(); ++i) {
        const auto y = out->value.row(i);
        const double dot = out->grad.row(i).dot(y);
        a->grad.row(i) += (out->grad.row(i) - dot * y) / (*saved)(i);
      }
    };
  }
  return out;
}

NodePtr Graph::pose_points(NodePtr quat, NodePtr trans,
                           const Eigen::Matrix<double, 7, 3>& canonical) {
  if (quat->value.rows() != 1 || quat->value.cols() != 4)
    throw InvalidInputError("pose_points: quat must be 1x4");
  if (trans->value.rows() != 1 || trans->value.cols() != 3)
    throw InvalidInputError("pose_points: trans must be 1x3");

  const double w = quat->value(0, 0), x = quat->value(0, 1), y = quat->value(0, 2),
               z = quat->value(0, 3);
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);

  Mat v(7, 3);
  for (int i = 0; i < 7; ++i)
    v.row(i) = (r * canonical.row(i).transpose()).transpose() + trans->value.row(0);

  auto out = make(std::move(v), needs(quat) || needs(trans));
  if (out->requires_grad) {
    out->backprop = [quat, trans, out, canonical, w, x, y, z]() {
      Eigen::Matrix3d dw, dx, dy, dz;
      dw << 0, -z, y, z, 0, -x, -y, x, 0;
      dx << 0, y, z, y, -2 * x, -w, z, w, -2 * x;
      dy << -2 * y, x, w, x, 0, z, -w, z, -2 * y;
      dz << -2 * z, -w, x, w, -2 * z, y, x, y, 0;
      dw *= 2.0;
      dx *= 2.0;
      dy *= 2.0;
      dz *= 2.0;
      if (quat->requires_grad) {
        quat->ensure_grad();
        for (int i = 0; i < 7; ++i) {
          const Eigen::Vector3d p = canonical.row(i).transpose();
          const Eigen::Vector3d g = out->grad.row(i).transpose();
          quat->grad(0, 0) += g.dot(dw * p);
          quat->grad(0, 1) += g.dot(dx * p);
          quat->grad(0, 2) += g.dot(dy * p);
          quat->grad(0, 3) += g.dot(dz * p);
        }
      }
      if (trans->requires_grad) {
        trans->ensure_grad();
        trans->grad.row(0) += out->grad.colwise().sum();
      }
    };
  }
  return out;
}

void Graph::backward(NodePtr loss) {
  if (loss->value.rows() != 1 || loss->value.cols() != 1)
    throw InvalidInputError("backward: loss must be a 1x1 node");
  loss->ensure_grad();
  loss->grad(0, 0) = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
    if ((*it)->requires_grad && (*it)->grad.size() != 0 && (*it)->backprop) (*it)->backprop();
  }
}

void Adam::step(const std::vector<Param*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Param* p : params) {
    if (p->grad.size() == 0) continue;
    if (p->adam_m.size() == 0) {
      p->adam_m = Mat::Zero(p->value.rows(), p->value.cols());
      p->adam_v = Mat::Zero(p->value.rows(), p->value.cols());
    }
    p->adam_m = cfg_.beta1 * p->adam_m + (1.0 - cfg_.beta1) * p->grad;
    p->adam_v = cfg_.beta2 * p->adam_v.array().matrix() +
                (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    const Mat m_hat = p->adam_m / bc1;
    const Mat v_hat = p->adam_v / bc2;
    p->value.array() -= cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
  }
}

void init_glorot(Param& p, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j) p.value(i, j) = rng.uniform(-s, s);
}

}  // namespace affgrasp::ag
