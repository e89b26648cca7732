#pragma once

#include <array>

namespace thermobeat {

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> gl8_nodes{
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> gl8_weights{
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

/// Composite 8-point Gauss-Legendre over `panels` equal sub-intervals.
template <class F>
double integrate(F&& f, double a, double b, int panels) {
  double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    double mid = a + (p + 0.5) * h;
    for (std::size_t k = 0; k < gl8_nodes.size(); ++k) {
      sum += gl8_weights[k] * f(mid + 0.5 * h * gl8_nodes[k]);
    }
  }
  return 0.5 * h * sum;
}

}  // namespace thermobeat
