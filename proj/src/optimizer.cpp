#include "salclass/optimizer.hpp"

namespace salclass {

double lr_at(double base_lr, std::int64_t iteration, double decay_constant) {
  if (iteration < 0) throw ContractError("lr_at: negative iteration");
  return base_lr / (1.0 + decay_constant * static_cast<double>(iteration));
}

void sgd_step(std::span<const GroupStep> groups, MomentumBuffers& buffers, double momentum, double weight_decay) {
  for (const auto& group : groups) {
    for (const auto& slice : group.slices) {
      Tensor param = slice.tensor;
      const Index n = param.size();
      auto [it, inserted] = buffers.try_emplace(slice.name, Eigen::VectorXd::Zero(n));
      Eigen::VectorXd& v = it->second;
      if (v.size() != n) throw ShapeError("sgd_step: momentum buffer for " + slice.name + " has wrong size");
      const bool has_grad = param.has_grad();
      const Eigen::VectorXd& grad = param.node()->grad;
      Eigen::VectorXd& p = param.values();
      const double wd = slice.weight_decay ? weight_decay : 0.0;
      auto update = [&](Index begin, Index end) {
        for (Index i = begin; i < end; ++i) {
          const double g = (has_grad ? grad[i] : 0.0) + wd * p[i];
          v[i] = momentum * v[i] + g;
          p[i] -= group.lr * v[i];
        }
      };
      if (slice.ranges.empty()) {
        update(0, n);
      } else {
        for (const auto& [b, e] : slice.ranges) update(b, e);
      }
    }
  }
}

void zero_grad(std::span<const NamedParameter> params) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

}  // namespace salclass
