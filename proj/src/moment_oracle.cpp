#include "pretrends/estimators.hpp"

namespace pretrends {

ConditionalMoments conditional_moment_oracle(const Vec& true_beta, const CovarianceMatrix& sigma,
                                             const PolyhedralConstraint& constraint, std::size_t reps,
                                             std::mt19937_64& rng) {
  if (reps < 10000) throw ValidationError("conditional_moment_oracle: needs at least 10^4 draws");
  const MvnSampler sampler(true_beta, sigma.matrix());
  const Eigen::Index d = sampler.dim();

  // Welford accumulation over accepted draws.
  Vec mean = Vec::Zero(d);
  Mat m2 = Mat::Zero(d, d);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < reps; ++i) {
    const Vec x = sampler(rng);
    if (!constraint.contains(x)) continue;
    ++accepted;
    const Vec delta = x - mean;
    mean += delta / static_cast<double>(accepted);
    m2 += delta * (x - mean).transpose();
  }
  if (accepted < 100) {
    throw DegenerateAcceptance("conditional_moment_oracle: only " + std::to_string(accepted) +
                               " of " + std::to_string(reps) + " draws accepted");
  }
  ConditionalMoments out;
  out.mean = mean;
  out.cov = m2 / static_cast<double>(accepted - 1);
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  out.acceptance = static_cast<double>(accepted) / static_cast<double>(reps);
  out.n_accepted = accepted;
  out.reps = reps;
  return out;
}

}  // namespace pretrends
