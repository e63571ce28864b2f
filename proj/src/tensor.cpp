#include "salclass/tensor.hpp"

#include <sstream>
#include <unordered_set>

namespace salclass {

namespace {
thread_local bool g_grad_enabled = true;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Index shape_numel(const Shape& shape) {
  Index n = 1;
  for (Index e : shape) {
    if (e <= 0) throw ShapeError("non-positive extent in shape " + shape_to_string(shape));
    n *= e;
  }
  return n;
}

void Node::accumulate_grad(const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Eigen::VectorXd& Node::ensure_grad() {
  if (grad.size() == 0) grad = Eigen::VectorXd::Zero(value.size());
  return grad;
}

Tensor::Tensor() : Tensor(Shape{1}) {}

Tensor::Tensor(Shape shape, bool requires_grad)
    : Tensor(shape, Eigen::VectorXd::Zero(shape_numel(shape)), requires_grad) {}

Tensor::Tensor(Shape shape, Eigen::VectorXd values, bool requires_grad) : node_(std::make_shared<Node>()) {
  const Index n = shape_numel(shape);
  if (values.size() != n) {
    throw ShapeError("tensor of shape " + shape_to_string(shape) + " needs " + std::to_string(n) +
                     " values, got " + std::to_string(values.size()));
  }
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values, bool requires_grad)
    : Tensor(std::move(shape),
             Eigen::Map<const Eigen::VectorXd>(values.begin(), static_cast<Index>(values.size())),
             requires_grad) {}

Tensor Tensor::from_node(NodePtr node) { return Tensor(std::move(node)); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const Index n = shape_numel(shape);
  return Tensor(std::move(shape), Eigen::VectorXd::Constant(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Eigen::VectorXd Tensor::grad() const {
  if (has_grad()) return node_->grad;
  return Eigen::VectorXd::Zero(size());
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->value[0];
}

Index Tensor::flat_index(std::initializer_list<Index> index) const {
  if (index.size() != rank()) {
    throw ShapeError("index rank " + std::to_string(index.size()) + " does not match tensor " +
                     shape_to_string(shape()));
  }
  Index flat = 0;
  std::size_t axis = 0;
  for (Index i : index) {
    const Index extent = node_->shape[axis++];
    if (i < 0 || i >= extent) throw ShapeError("index out of range for " + shape_to_string(shape()));
    flat = flat * extent + i;
  }
  return flat;
}

double Tensor::at(std::initializer_list<Index> index) const { return node_->value[flat_index(index)]; }
double& Tensor::at(std::initializer_list<Index> index) { return node_->value[flat_index(index)]; }

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }

Tensor Tensor::clone() const { return Tensor(node_->shape, node_->value, node_->requires_grad); }

Tensor Tensor::reshape(Shape new_shape) const {
  if (shape_numel(new_shape) != size()) {
    throw ShapeError("cannot reshape " + shape_to_string(shape()) + " to " + shape_to_string(new_shape));
  }
  return make_result("reshape", std::move(new_shape), node_->value, {node_},
                     [](Node& self) { self.inputs[0]->accumulate_grad(self.grad); });
}

Graph Graph::collect(const Tensor& root) {
  Graph graph;
  std::unordered_set<const Node*> visited;
  // Iterative post-order DFS keeps deep stacks off the call stack.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (visited.insert(child).second) stack.emplace_back(child, 0);
      continue;
    }
    graph.order_.push_back(node);
    stack.pop_back();
  }
  return graph;
}

void backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward() on a loss that does not depend on any tensor requiring grad");
  }
  const Graph graph = Graph::collect(loss);
  loss.node()->accumulate_grad(Eigen::VectorXd::Ones(1));
  const auto& order = graph.nodes();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && node->grad.size() != 0) node->backward_fn(*node);
  }
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(const std::string& op, Shape shape, Eigen::VectorXd value, std::vector<NodePtr> inputs,
                   std::function<void(Node&)> backward_fn) {
  Tensor out(std::move(shape), std::move(value), false);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& in : inputs) needs = needs || in->requires_grad;
  }
  if (needs) {
    const NodePtr& node = out.node();
    node->requires_grad = true;
    node->op = op;
    node->inputs = std::move(inputs);
    node->backward_fn = std::move(backward_fn);
  }
  return out;
}

}  // namespace salclass
