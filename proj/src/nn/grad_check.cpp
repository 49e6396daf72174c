#include "agentsim/nn/grad_check.hpp"

#include "agentsim/error.hpp"
#include "agentsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace agentsim::nn
{
GradCheckResult grad_check(
  const std::function<Tensor()> & f, const std::vector<Tensor> & params, const GradCheckOptions & options)
{
  std::vector<Tensor> ps = params;
  for (auto & p : ps) {
    require(p.requires_grad(), "grad_check: parameter does not require grad");
    p.zero_grad();
  }
  const Tensor loss = f();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto & p : ps) {
    analytic.emplace_back(p.grad().begin(), p.grad().end());
  }

  auto eval = [&]() {
    NoGradGuard guard;
    const double v = f().item();
    if (!std::isfinite(v)) {
      throw NumericError("grad_check: non-finite evaluation");
    }
    return v;
  };

  Rng rng(options.seed);
  GradCheckResult result;
  for (std::size_t t = 0; t < ps.size(); ++t) {
    auto data = ps[t].mutable_data();
    std::vector<std::size_t> coords(data.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords_per_tensor > 0 && coords.size() > options.max_coords_per_tensor) {
      for (std::size_t i = 0; i < options.max_coords_per_tensor; ++i) {
        const auto j = i + rng.below(coords.size() - i);
        std::swap(coords[i], coords[j]);
      }
      coords.resize(options.max_coords_per_tensor);
    }
    for (const auto i : coords) {
      const double original = data[i];
      data[i] = original + options.h;
      const double fp = eval();
      data[i] = original - options.h;
      const double fm = eval();
      data[i] = original;
      const double numeric = (fp - fm) / (2.0 * options.h);
      const double a = analytic[t][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++result.coords_checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_tensor = t;
        result.worst_index = i;
      }
    }
  }
  return result;
}
}  // namespace agentsim::nn
