#include "sessrec/grad_check.hpp"

#include <cmath>

#include "sessrec/rng.hpp"

namespace sessrec::ad {

namespace {

double eval_loss(const std::function<Graph<double>::NodeId(Graph<double>&)>& build) {
  Graph<double> g;
  g.set_grad_enabled(false);
  auto loss = build(g);
  double v = g.value(loss).data[0];
  require(std::isfinite(v), "grad_check", "non-finite loss value");
  return v;
}

}  // namespace

double grad_check(const std::function<Graph<double>::NodeId(Graph<double>&)>& build,
                  std::span<Parameter<double>* const> params, double epsilon,
                  int max_coords_per_param, std::uint64_t seed) {
  if (params.empty()) return 0.0;

  for (auto* p : params) {
    for (auto& v : p->grad.data) v = 0.0;
  }
  {
    Graph<double> g;
    auto loss = build(g);
    g.backward(loss);
  }

  Rng rng(seed);
  double max_rel = 0.0;
  for (auto* p : params) {
    const std::int64_t n = p->value.size();
    std::vector<std::int64_t> coords;
    if (n <= max_coords_per_param) {
      for (std::int64_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int i = 0; i < max_coords_per_param; ++i)
        coords.push_back(static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(n))));
    }
    for (std::int64_t c : coords) {
      const double saved = p->value.data[c];
      p->value.data[c] = saved + epsilon;
      double up = eval_loss(build);
      p->value.data[c] = saved - epsilon;
      double down = eval_loss(build);
      p->value.data[c] = saved;
      double numeric = (up - down) / (2.0 * epsilon);
      double analytic = p->grad.data[c];
      require(std::isfinite(numeric) && std::isfinite(analytic), "grad_check",
              "non-finite gradient at " + p->name);
      double rel = std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace sessrec::ad
