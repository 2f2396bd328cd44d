#include <algorithm>
#include <cmath>

#include "cmaudit/error.hpp"
#include "cmaudit/interventions.hpp"

namespace cmaudit {

double mu_law_compress(double x, int mu) {
  const double m = static_cast<double>(mu);
  return std::copysign(std::log1p(m * std::abs(x)) / std::log1p(m), x);
}

double mu_law_expand(double y, int mu) {
  const double m = static_cast<double>(mu);
  return std::copysign(std::expm1(std::abs(y) * std::log1p(m)) / m, y);
}

Waveform mu_law(const Waveform& w, int mu) {
  if (mu <= 0) throw Error("mu-law: mu must be positive");
  Waveform out = w;
  for (double& x : out.samples) {
    const double y = mu_law_compress(std::clamp(x, -1.0, 1.0), mu);
    const double level = std::clamp(std::round(y / kMuLawStep), -128.0, 127.0);
    x = mu_law_expand(level * kMuLawStep, mu);
  }
  return out;
}

}  // namespace cmaudit
