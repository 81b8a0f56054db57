#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "affgrasp/errors.hpp"
#include "affgrasp/rng.hpp"

namespace affgrasp::ag {

using Mat = Eigen::MatrixXd;

/// One value in the computation graph. Gradients are dense matrices of the
/// same shape, allocated lazily when the first gradient arrives.
struct Node {
  Mat value;
  Mat grad;
  bool requires_grad = false;
  std::function<void()> backprop;  // pushes this->grad into the parents

  void ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  }
};
using NodePtr = std::shared_ptr<Node>;

/// Trainable array with Adam state. Gradients accumulate across graphs until
/// zero_grad().
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m, adam_v;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Ordered parameter registry; iteration order is the registration order, so
/// init, optimizer steps and checkpoints are all deterministic.
class ParamStore {
 public:
  Param& create(const std::string& name, int rows, int cols);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  std::size_t size() const { return order_.size(); }

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::vector<std::string> order_;
  std::map<std::string, std::size_t> index_;
};

/// Tape-building graph. Forward ops append nodes in creation order; backward
/// replays the tape in reverse. Single-threaded by construction.
class Graph {
 public:
  NodePtr constant(Mat v);
  NodePtr leaf(Param& p);

  NodePtr matmul(NodePtr a, NodePtr b);     // A * B
  NodePtr matmul_nt(NodePtr a, NodePtr b);  // A * B^T
  NodePtr add(NodePtr a, NodePtr b);
  NodePtr sub(NodePtr a, NodePtr b);
  NodePtr mul(NodePtr a, NodePtr b);  // elementwise
  NodePtr add_rowvec(NodePtr x, NodePtr row);
  NodePtr scale(NodePtr a, double s);
  NodePtr add_scalar(NodePtr a, double s);

  NodePtr relu(NodePtr a);
  NodePtr sigmoid(NodePtr a);
  NodePtr tanh_(NodePtr a);
  NodePtr exp_(NodePtr a);
  NodePtr log_(NodePtr a);
  NodePtr abs_(NodePtr a);
  NodePtr clamp(NodePtr a, double lo, double hi);

  NodePtr concat_cols(const std::vector<NodePtr>& parts);
  NodePtr slice_cols(NodePtr a, int start, int count);
  NodePtr gather_rows(NodePtr a, std::vector<int> indices);
  NodePtr repeat_row(NodePtr row, int n);

  /// Rowwise max over consecutive segments of `segment` rows; input rows must
  /// be a multiple of segment. Gradient routes to the argmax entries
  /// (first occurrence on ties).
  NodePtr segment_max(NodePtr a, int segment);
  NodePtr colwise_max(NodePtr a);

  NodePtr softmax_rows(NodePtr a);
  NodePtr sum(NodePtr a);   // [1,1]
  NodePtr mean(NodePtr a);  // [1,1]
  NodePtr l2_normalize_rows(NodePtr a);

  /// [7,3] control points R(q) * p_i + t for unit quaternion q [1,4] (w,x,y,z)
  /// and translation t [1,3]; canonical points are constants.
  NodePtr pose_points(NodePtr quat, NodePtr trans, const Eigen::Matrix<double, 7, 3>& canonical);

  /// Seeds d(loss)=1 and replays the tape backward. `loss` must be 1x1.
  void backward(NodePtr loss);

  std::size_t tape_size() const { return tape_.size(); }

 private:
  NodePtr make(Mat value, bool requires_grad);
  std::vector<NodePtr> tape_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(const std::vector<Param*>& params);

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

/// Glorot-uniform init, deterministic in the rng state.
void init_glorot(Param& p, Rng& rng);

}  // namespace affgrasp::ag
