#pragma once

// Relative value iteration on an explicit MDP: a second route to the optimal average
// reward that does not go through any linear program.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dcra/mdp_bound.hpp"

namespace oracle {

inline double relative_value_iteration(const dcra::MdpModel& m, int max_iter = 200000, double tol = 1e-12) {
  const std::size_t n = m.state_count();
  std::vector<double> h(n, 0.0), next(n, 0.0);
  double gain = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t s = 0; s < n; ++s) {
      double best = -1e300;
      for (auto a : {dcra::Action::Wait, dcra::Action::Transmit}) {
        double v = m.reward(s, a);
        for (const auto& t : m.transitions(s, a)) v += t.prob * h[t.next];
        best = std::max(best, v);
      }
      next[s] = best;
    }
    // Span bounds on the gain; the 1/2 damping removes periodicity.
    double lo = 1e300, hi = -1e300;
    for (std::size_t s = 0; s < n; ++s) {
      lo = std::min(lo, next[s] - h[s]);
      hi = std::max(hi, next[s] - h[s]);
    }
    gain = 0.5 * (lo + hi);
    const double ref = next[0];
    for (std::size_t s = 0; s < n; ++s) h[s] = 0.5 * h[s] + 0.5 * (next[s] - ref);
    if (hi - lo < tol) break;
  }
  return gain;
}

}  // namespace oracle
