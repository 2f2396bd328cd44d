#pragma once

#include <complex>
#include <span>

namespace cmaudit::detail {

// Real <-> half-complex transforms of a fixed size backed by FFTW. Plans are
// created once per size (FFTW_ESTIMATE, so results do not depend on timing)
// and shared; executing them is thread-safe.
class RealFft {
 public:
  explicit RealFft(int n);

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  // in: n reals, out: n/2+1 bins. Unnormalized.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  // in: n/2+1 bins, out: n reals, scaled by 1/n so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  int n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace cmaudit::detail
