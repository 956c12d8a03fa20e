#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "sandlab/green.hpp"
#include "sandlab/rng.hpp"
#include "sandlab/spectral.hpp"
#include "sandlab/stats.hpp"

namespace sandlab {

inline constexpr std::size_t kDenseCovarianceCap = 4096;

/// Covariance of the bi-Laplacian field,
/// Cov(x, y) = (1/(deg x deg y)) Σ_z g(z, x) g(z, y), assembled as WᵀW with
/// W(z, y) = g(z, y)/deg y.
struct CovarianceModel {
  std::shared_ptr<const Graph> graph;
  Eigen::MatrixXd matrix;
  /// K = (1/deg y) Σ_w g(w, y), averaged over y.
  double k_constant = 0.0;
  /// Variance K²/|V| of the global Gaussian constant that the min-shift
  /// removes.
  double constant_variance = 0.0;
};

CovarianceModel covariance(const GreenTable& averaged);

/// E(η_x - η_y)² = Cov(x, x) + Cov(y, y) - 2 Cov(x, y).
double variogram_covariance(const CovarianceModel& model, Vertex x, Vertex y);

enum class FieldKind { Raw, MinShifted };

struct FieldSample {
  std::vector<double> values;
  FieldKind kind = FieldKind::Raw;
};

/// Subtracts the minimum; the result has minimum exactly 0.
FieldSample min_shift(FieldSample f);

/// Exact Gaussian sampler from a Cholesky factor of the covariance. When
/// the plain factorization fails, 1e-12·trace/|V| is added to the diagonal
/// and escalated by ×10 up to three times before giving up with SolveError.
class CholeskySampler {
 public:
  explicit CholeskySampler(const CovarianceModel& model);

  double jitter() const { return jitter_; }
  bool jittered() const { return jitter_ > 0.0; }
  std::size_t size() const { return static_cast<std::size_t>(factor_.rows()); }

  /// Raw sample η = L z, z_x = rng.normal(trial, x). Thread-safe.
  FieldSample sample(const CounterRng& rng, std::uint64_t trial) const;

 private:
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

/// One raw sample; factors the covariance on every call.
FieldSample sample_field_cholesky(const CovarianceModel& model, const CounterRng& rng,
                                  std::uint64_t trial);

/// Min-shifted field on Z_n^d by spectral Green convolution: v solves
/// Δv = mean σ - σ for i.i.d. standard normal σ, and the sample is v - min v.
/// The additive Gaussian constant of the field cancels in the shift, so it
/// is never drawn. Thread-safe.
class SpectralSampler {
 public:
  SpectralSampler(int n, int d);

  int side() const { return pool_->side(); }
  int dim() const { return pool_->dim(); }
  std::size_t size() const { return pool_->size(); }

  FieldSample sample(const CounterRng& rng, std::uint64_t trial) const;

 private:
  std::shared_ptr<const TorusPoissonPool> pool_;
};

FieldSample sample_field_spectral(int n, int d, const CounterRng& rng, std::uint64_t trial);

/// Mean of max_x f(x) over samples f = sampler(trial), trial = 0..trials-1,
/// with its standard error. Trials run concurrently, so the sampler must be
/// safe to call from several threads.
MeanEstimate expected_max(const std::function<FieldSample(std::uint64_t)>& sampler,
                          std::size_t trials);

}  // namespace sandlab
