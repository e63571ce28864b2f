#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace salclass {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when tensor extents do not satisfy an operation's shape contract.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a caller breaks an operation precondition that is not about shapes.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when statistics are undefined (constant maps, single-element batches).
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a computation produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_to_string(const Shape& shape);
Index shape_numel(const Shape& shape);

struct Node;
using NodePtr = std::shared_ptr<Node>;

/// One recorded value in the tape. Leaves have no inputs and no backward rule.
struct Node {
  Shape shape;
  Eigen::VectorXd value;
  Eigen::VectorXd grad;  // empty until something is accumulated
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<NodePtr> inputs;
  // Reads self.grad and accumulates into the grads of self.inputs.
  std::function<void(Node& self)> backward_fn;

  void accumulate_grad(const Eigen::Ref<const Eigen::VectorXd>& g);
  Eigen::VectorXd& ensure_grad();
};

/// Dense row-major float64 tensor. Copies share storage (handle semantics);
/// use clone() or detach() for an independent copy.
class Tensor {
 public:
  Tensor();
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, Eigen::VectorXd values, bool requires_grad = false);
  Tensor(Shape shape, std::initializer_list<double> values, bool requires_grad = false);

  static Tensor from_node(NodePtr node);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  Index dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  Index size() const { return node_->value.size(); }

  Eigen::VectorXd& values() { return node_->value; }
  const Eigen::VectorXd& values() const { return node_->value; }
  double* data() { return node_->value.data(); }
  const double* data() const { return node_->value.data(); }

  bool has_grad() const { return node_->grad.size() != 0; }
  /// Gradient after backward(); a zero vector when nothing reached this tensor.
  Eigen::VectorXd grad() const;
  void zero_grad() { node_->grad.resize(0); }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  double item() const;
  double at(std::initializer_list<Index> index) const;
  double& at(std::initializer_list<Index> index);

  /// Independent copy with no graph history and requires_grad cleared.
  Tensor detach() const;
  /// Same values, same requires_grad flag, fresh storage, no history.
  Tensor clone() const;
  /// Reinterprets extents without copying history; participates in autodiff.
  Tensor reshape(Shape shape) const;

  const NodePtr& node() const { return node_; }

 private:
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}
  Index flat_index(std::initializer_list<Index> index) const;
  NodePtr node_;
};

/// Ordered recording of every node reachable from a root. Inputs always
/// precede the nodes that consume them.
class Graph {
 public:
  static Graph collect(const Tensor& root);
  const std::vector<Node*>& nodes() const { return order_; }

 private:
  std::vector<Node*> order_;
};

/// Reverse-mode sweep from a scalar loss; gradients accumulate into every
/// reachable tensor that requires grad.
void backward(const Tensor& loss);

/// While alive, newly created op results record no history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds an op result: history is attached only when grad mode is on and
/// some input requires grad.
Tensor make_result(const std::string& op, Shape shape, Eigen::VectorXd value,
                   std::vector<NodePtr> inputs, std::function<void(Node&)> backward_fn);

}  // namespace salclass
