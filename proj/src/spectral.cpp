#include "sandlab/spectral.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sandlab/graph.hpp"

namespace sandlab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

double torus_eigenvalue(int n, std::span<const long> a) {
  double lambda = 0.0;
  for (long ai : a) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(ai) / n);
    lambda -= 4.0 * s * s;
  }
  return lambda;
}

TorusPoisson::TorusPoisson(int n, int d) : n_(n), d_(d) {
  if (n < 2 || d < 1) throw std::invalid_argument("torus Poisson solver needs n >= 2 and d >= 1");
  const auto total = lattice_size(n, d, std::size_t{1} << 31);
  if (!total) throw std::invalid_argument("torus too large for the spectral solver");
  size_ = *total;
  const std::size_t half = static_cast<std::size_t>(n / 2 + 1);
  spectrum_size_ = size_ / static_cast<std::size_t>(n) * half;

  // sin² table per frequency index.
  std::vector<double> sin2(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double s = std::sin(std::numbers::pi * k / n);
    sin2[static_cast<std::size_t>(k)] = s * s;
  }
  inverse_eigen_.assign(spectrum_size_, 0.0);
  const double norm = static_cast<double>(size_);
  for (std::size_t idx = 0; idx < spectrum_size_; ++idx) {
    std::size_t rest = idx;
    double lambda = -4.0 * sin2[rest % half];
    rest /= half;
    for (int i = 1; i < d; ++i) {
      lambda -= 4.0 * sin2[rest % static_cast<std::size_t>(n)];
      rest /= static_cast<std::size_t>(n);
    }
    inverse_eigen_[idx] = idx == 0 ? 0.0 : 1.0 / (lambda * norm);
  }

  std::vector<int> dims(static_cast<std::size_t>(d), n);
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(size_);
  spectrum_ = fftw_alloc_complex(spectrum_size_);
  if (!real_ || !spectrum_) {
    fftw_free(real_);
    fftw_free(spectrum_);
    throw std::bad_alloc();
  }
  forward_ = fftw_plan_dft_r2c(d, dims.data(), real_, spectrum_, FFTW_ESTIMATE);
  backward_ = fftw_plan_dft_c2r(d, dims.data(), spectrum_, real_, FFTW_ESTIMATE);
}

TorusPoisson::~TorusPoisson() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
  fftw_free(real_);
  fftw_free(spectrum_);
}

void TorusPoisson::solve(std::span<const double> rhs, std::span<double> out) {
  if (rhs.size() != size_ || out.size() != size_) {
    throw std::invalid_argument("Poisson solve expects " + std::to_string(size_) + " values");
  }
  std::copy(rhs.begin(), rhs.end(), real_);
  fftw_execute(forward_);
  for (std::size_t i = 0; i < spectrum_size_; ++i) {
    spectrum_[i][0] *= inverse_eigen_[i];
    spectrum_[i][1] *= inverse_eigen_[i];
  }
  fftw_execute(backward_);
  std::copy(real_, real_ + size_, out.begin());
}

std::vector<double> TorusPoisson::solve(std::span<const double> rhs) {
  std::vector<double> out(size_);
  solve(rhs, out);
  return out;
}

TorusPoissonPool::TorusPoissonPool(int n, int d) : n_(n), d_(d) {
  idle_.push_back(std::make_unique<TorusPoisson>(n, d));
  size_ = idle_.back()->size();
}

std::vector<double> TorusPoissonPool::solve(std::span<const double> rhs) const {
  std::unique_ptr<TorusPoisson> solver;
  {
    std::lock_guard lock(mutex_);
    if (!idle_.empty()) {
      solver = std::move(idle_.back());
      idle_.pop_back();
    }
  }
  if (!solver) solver = std::make_unique<TorusPoisson>(n_, d_);
  std::vector<double> out = solver->solve(rhs);
  std::lock_guard lock(mutex_);
  idle_.push_back(std::move(solver));
  return out;
}

}  // namespace sandlab
