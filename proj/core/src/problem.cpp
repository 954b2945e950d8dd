#include "page/problem.hpp"

namespace page {

void Problem::full_grad(std::span<const double> x, std::span<double> out) const {
  const std::uint64_t n = size();
  Vector tmp(dim());
  vec::fill_zero(out);
  for (std::uint64_t i = 0; i < n; ++i) {
    component_grad(i, x, tmp);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += tmp[j];
  }
  const double nd = static_cast<double>(n);
  for (double& v : out) v /= nd;
}

bool Problem::full_grad_available() const {
  return has_closed_form_grad() || size() * dim() <= kExhaustiveGradLimit;
}

std::optional<double> Problem::delta0() const {
  const auto& c = constants();
  if (!c.f_star) return std::nullopt;
  return value(x0()) - *c.f_star;
}

}  // namespace page
