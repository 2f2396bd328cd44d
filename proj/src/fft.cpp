#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "cmaudit/error.hpp"

namespace cmaudit::detail {
namespace {

struct Plans {
  fftw_plan forward;
  fftw_plan inverse;
};

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

Plans plans_for(int n) {
  static std::map<int, Plans> cache;
  std::lock_guard lock(planner_mutex());
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  std::vector<double> real(static_cast<std::size_t>(n));
  std::vector<fftw_complex> cplx(static_cast<std::size_t>(n / 2 + 1));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p{fftw_plan_dft_r2c_1d(n, real.data(), cplx.data(), flags),
          fftw_plan_dft_c2r_1d(n, cplx.data(), real.data(), flags)};
  if (p.forward == nullptr || p.inverse == nullptr)
    throw Error("FFTW could not plan a transform of size " + std::to_string(n));
  cache.emplace(n, p);
  return p;
}

}  // namespace

RealFft::RealFft(int n) : n_(n) {
  if (n < 2) throw Error("FFT size must be at least 2");
  const Plans p = plans_for(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  std::vector<double> buf(in.begin(), in.end());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  // c2r may overwrite its input.
  std::vector<std::complex<double>> buf(in.begin(), in.end());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_),
                       reinterpret_cast<fftw_complex*>(buf.data()), out.data());
  const double scale = 1.0 / n_;
  for (double& x : out) x *= scale;
}

}  // namespace cmaudit::detail
