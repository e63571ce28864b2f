#pragma once

#include "salclass/ops.hpp"
#include "salclass/random.hpp"
#include "salclass/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace salclass::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape), requires_grad);
  for (Index i = 0; i < t.size(); ++i) t.values()[i] = u(rng);
  return t;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<input>[<flat index>] analytic=... numeric=..."
  int checked = 0;
  int kinks = 0;  // entries whose stencil straddled a ReLU/max kink
};

/// Relative error with a floor on the denominator so that gradients near
/// zero are compared absolutely.
inline double relative_error(double analytic, double numeric, double floor = 1e-5) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central differences of a scalar function against its reverse-mode
/// gradient. `max_per_input` > 0 checks a seeded subset of entries.
/// Entries whose stencil crosses a kink are judged by one-sided slopes.
inline GradCheckResult gradcheck(const std::function<Tensor()>& f, std::vector<std::pair<std::string, Tensor>> inputs,
                                 double h = 1e-5, Index max_per_input = 0, std::uint64_t seed = 1,
                                 double kink_tolerance = 1e-4) {
  for (auto& [name, t] : inputs) t.zero_grad();
  backward(f());
  GradCheckResult result;
  Rng rng(seed);
  for (auto& [name, t] : inputs) {
    const Eigen::VectorXd analytic = t.grad();
    std::vector<Index> idx(static_cast<std::size_t>(t.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    if (max_per_input > 0 && t.size() > max_per_input) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<std::size_t>(max_per_input));
    }
    for (Index i : idx) {
      const double x0 = t.values()[i];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard guard;
        t.values()[i] = x0 + h;
        plus = f().item();
        t.values()[i] = x0 - h;
        minus = f().item();
        t.values()[i] = x0;
      }
      double numeric = (plus - minus) / (2.0 * h);
      double err = relative_error(analytic[i], numeric);
      if (err >= kink_tolerance) {
        // A kink inside [x-h, x+h] makes the two one-sided slopes disagree;
        // the slope on the side holding x is then the valid reference.
        double centre = 0.0;
        {
          NoGradGuard guard;
          centre = f().item();
        }
        const double right = (plus - centre) / h, left = (centre - minus) / h;
        if (relative_error(right, left) >= kink_tolerance) {
          ++result.kinks;
          const double e_right = relative_error(analytic[i], right), e_left = relative_error(analytic[i], left);
          numeric = e_right < e_left ? right : left;
          err = std::min(e_right, e_left);
        }
      }
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(analytic[i]) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return result;
}

/// Scalar read-out of an op result: squared distance to a fixed random
/// target, so every output element gets a distinct upstream gradient.
inline Tensor probe(const Tensor& out, const Tensor& target) { return mse(out, target); }

}  // namespace salclass::testing
