#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

namespace sandlab {

/// λ_a = -4 Σ_i sin²(π a_i / n), the Laplacian eigenvalue of the character
/// χ_a on Z_n^d.
double torus_eigenvalue(int n, std::span<const long> a);

/// Poisson solver on Z_n^d by real FFT: given f, returns the mean-zero u with
/// Δu = f - mean(f). The zero mode is dropped.
///
/// Plans are created under a process-wide lock (the FFTW planner is not
/// thread-safe); one instance must not be used by two threads at once, but
/// separate instances may run concurrently.
class TorusPoisson {
 public:
  TorusPoisson(int n, int d);
  ~TorusPoisson();
  TorusPoisson(const TorusPoisson&) = delete;
  TorusPoisson& operator=(const TorusPoisson&) = delete;

  int side() const { return n_; }
  int dim() const { return d_; }
  std::size_t size() const { return size_; }

  /// Writes the solution into `out`; `rhs` and `out` may alias.
  void solve(std::span<const double> rhs, std::span<double> out);
  std::vector<double> solve(std::span<const double> rhs);

 private:
  int n_;
  int d_;
  std::size_t size_;
  std::size_t spectrum_size_;
  double* real_ = nullptr;
  fftw_complex* spectrum_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  /// 1/(λ_a · n^d) on the half spectrum, 0 at a = 0.
  std::vector<double> inverse_eigen_;
};

/// Thread-safe front for TorusPoisson: keeps idle solvers and hands one to
/// each concurrent caller, creating more on demand.
class TorusPoissonPool {
 public:
  TorusPoissonPool(int n, int d);

  int side() const { return n_; }
  int dim() const { return d_; }
  std::size_t size() const { return size_; }

  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  int n_;
  int d_;
  std::size_t size_;
  mutable std::mutex mutex_;
  mutable std::vector<std::unique_ptr<TorusPoisson>> idle_;
};

}  // namespace sandlab
