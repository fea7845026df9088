#pragma once

#include <functional>
#include <span>

#include "sessrec/graph.hpp"

namespace sessrec::ad {

// Central finite differences against analytic gradients, 64-bit only.
// `build` must construct the scalar loss from scratch on each call, reading
// the current parameter values. Returns the maximum over sampled coordinates
// of |a - n| / max(1e-8, |a| + |n|). Throws on non-finite values.
double grad_check(const std::function<Graph<double>::NodeId(Graph<double>&)>& build,
                  std::span<Parameter<double>* const> params, double epsilon = 1e-5,
                  int max_coords_per_param = 8, std::uint64_t seed = 0);

}  // namespace sessrec::ad
