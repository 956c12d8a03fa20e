#include "sandlab/field.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "sandlab/parallel.hpp"
#include "sandlab/sandpile.hpp"

namespace sandlab {

CovarianceModel covariance(const GreenTable& averaged) {
  if (averaged.mode != GreenMode::Averaged) throw std::invalid_argument("covariance needs an averaged table");
  const Graph& g = *averaged.graph;
  if (g.vertex_count() > kDenseCovarianceCap) {
    throw std::invalid_argument("dense covariance limited to " + std::to_string(kDenseCovarianceCap) +
                                " vertices");
  }
  Eigen::MatrixXd w = averaged.entries;
  for (Eigen::Index y = 0; y < w.cols(); ++y) w.col(y) /= g.degree(static_cast<Vertex>(y));

  CovarianceModel m;
  m.graph = averaged.graph;
  m.matrix = w.transpose() * w;
  // Symmetrize exactly; the product is symmetric only up to rounding.
  m.matrix = 0.5 * (m.matrix + m.matrix.transpose()).eval();
  const auto k = averaged_column_constant(averaged);
  CompensatedSum acc;
  for (double v : k) acc.add(v);
  m.k_constant = acc.value() / static_cast<double>(k.size());
  m.constant_variance = m.k_constant * m.k_constant / static_cast<double>(k.size());
  return m;
}

double variogram_covariance(const CovarianceModel& model, Vertex x, Vertex y) {
  const auto xi = static_cast<Eigen::Index>(x);
  const auto yi = static_cast<Eigen::Index>(y);
  return model.matrix(xi, xi) + model.matrix(yi, yi) - 2.0 * model.matrix(xi, yi);
}

FieldSample min_shift(FieldSample f) {
  if (!f.values.empty()) {
    const double lo = *std::min_element(f.values.begin(), f.values.end());
    for (double& v : f.values) v -= lo;
  }
  f.kind = FieldKind::MinShifted;
  return f;
}

CholeskySampler::CholeskySampler(const CovarianceModel& model) {
  const auto n = model.matrix.rows();
  if (n == 0) throw std::invalid_argument("empty covariance");
  const double base = 1e-12 * model.matrix.trace() / static_cast<double>(n);
  double jitter = 0.0;
  for (int attempt = 0; attempt <= 4; ++attempt) {
    Eigen::MatrixXd a = model.matrix;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      factor_ = llt.matrixL();
      jitter_ = jitter;
      return;
    }
    jitter = attempt == 0 ? base : jitter * 10.0;
  }
  throw SolveError("covariance factorization failed after jitter escalation");
}

FieldSample CholeskySampler::sample(const CounterRng& rng, std::uint64_t trial) const {
  const auto n = factor_.rows();
  const auto stream = rng.trial(trial);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = stream.normal(static_cast<std::uint64_t>(i));
  const Eigen::VectorXd eta = factor_.triangularView<Eigen::Lower>() * z;
  return {std::vector<double>(eta.data(), eta.data() + n), FieldKind::Raw};
}

FieldSample sample_field_cholesky(const CovarianceModel& model, const CounterRng& rng,
                                  std::uint64_t trial) {
  return CholeskySampler(model).sample(rng, trial);
}

SpectralSampler::SpectralSampler(int n, int d) : pool_(std::make_shared<const TorusPoissonPool>(n, d)) {}

FieldSample SpectralSampler::sample(const CounterRng& rng, std::uint64_t trial) const {
  const auto stream = rng.trial(trial);
  std::vector<double> rhs(pool_->size());
  for (std::size_t x = 0; x < rhs.size(); ++x) rhs[x] = -stream.normal(x);
  return min_shift({pool_->solve(rhs), FieldKind::Raw});
}

FieldSample sample_field_spectral(int n, int d, const CounterRng& rng, std::uint64_t trial) {
  return SpectralSampler(n, d).sample(rng, trial);
}

MeanEstimate expected_max(const std::function<FieldSample(std::uint64_t)>& sampler,
                          std::size_t trials) {
  if (trials < 2) throw std::invalid_argument("expected_max needs at least 2 trials");
  std::vector<double> maxima(trials);
  parallel_for(trials, [&](std::size_t t) {
    const FieldSample f = sampler(t);
    maxima[t] = *std::max_element(f.values.begin(), f.values.end());
  });
  return mean_with_error(maxima);
}

}  // namespace sandlab
