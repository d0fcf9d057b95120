#include "airopt/rng.hpp"

#include <cmath>

namespace airopt::detail {

namespace {

// Base layer boundary and per-layer area for the 128-layer normal ziggurat.
constexpr double kR = 3.442619855899;
constexpr double kV = 9.91256303526217e-3;

double density(double x) { return std::exp(-0.5 * x * x); }

ZigguratTables build_tables() {
  ZigguratTables t{};
  t.x[0] = kV / density(kR);  // virtual width so that x[0] * f(R) = V
  t.x[1] = kR;
  for (int i = 1; i < 127; ++i) {
    t.x[i + 1] = std::sqrt(-2.0 * std::log(kV / t.x[i] + density(t.x[i])));
  }
  t.x[128] = 0.0;
  for (int i = 0; i <= 128; ++i) t.f[i] = density(t.x[i]);
  for (int i = 0; i < 128; ++i) t.k[i] = t.x[i + 1] / t.x[i];
  // Fast accepts in layer 0 must stop at the base boundary R, not at the
  // virtual width: k[0] = x[1]/x[0] = R/x[0] already encodes that.
  return t;
}

// Uniform in (0, 1]: never zero, so logarithms stay finite.
double uniform_positive(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

// Uniform in [0, 1).
double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

const ZigguratTables kZiggurat = build_tables();
const double kZigguratR = kR;

bool ziggurat_slow_path(int layer, double ufrac, Rng& rng, double& out) {
  if (layer == 0) {
    // Exact tail sample beyond R (Marsaglia): always accepts eventually.
    double x, y;
    do {
      x = -std::log(uniform_positive(rng)) / kR;
      y = -std::log(uniform_positive(rng));
    } while (y + y < x * x);
    out = kR + x;
    return true;
  }
  // Wedge of layer `layer`: the strip spans heights [f(x[layer]), f(x[layer+1])]
  // over widths [0, x[layer]]; the candidate lies past the guaranteed-accept
  // width, so test it against the density.
  const double x = ufrac * kZiggurat.x[layer];
  const double y0 = kZiggurat.f[layer];
  const double y1 = kZiggurat.f[layer + 1];
  const double y = y0 + uniform_unit(rng) * (y1 - y0);
  if (y < std::exp(-0.5 * x * x)) {
    out = x;
    return true;
  }
  return false;
}

}  // namespace airopt::detail
