#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qmdn/rng.hpp"

namespace qmdn {

/// Standard deviations are floored to this value on construction so the
/// log-likelihood stays bounded on degenerate spikes.
inline constexpr double kSigmaFloor = 1e-4;

/// Basis-state probabilities are clamped to [kProbClamp, 1] before the
/// ratio maps, bounding |mu| by log(1/kProbClamp) and keeping sigma finite.
inline constexpr double kProbClamp = 1e-10;

/// Weighted sum of K univariate Gaussians. Weights must form a simplex
/// within 1e-9; standard deviations are floored at kSigmaFloor.
class GaussianMixture {
  public:
    GaussianMixture(std::vector<double> weights, std::vector<double> means,
                    std::vector<double> stds);

    std::size_t n_components() const { return weights_.size(); }
    std::span<const double> weights() const { return weights_; }
    std::span<const double> means() const { return means_; }
    std::span<const double> stds() const { return stds_; }

    /// Mixture density at y.
    double pdf(double y) const;

    /// log pdf(y) via log-sum-exp over component log-densities; finite for
    /// all finite y.
    double log_pdf(double y) const;

    /// Draws a component index by weight, then a Gaussian variate from it.
    double sample(Rng& rng) const;

  private:
    std::vector<double> weights_;
    std::vector<double> means_;
    std::vector<double> stds_;
};

/// Batch negative log-likelihood: -(1/N) sum_j log_pdf(mixtures[j], ys[j]).
double nll(std::span<const GaussianMixture> mixtures,
           std::span<const double> ys);

/// Partial derivatives of -log_pdf(gm, y) with respect to the raw weights,
/// means, and standard deviations.
struct MixtureGradient {
    std::vector<double> d_weight;
    std::vector<double> d_mean;
    std::vector<double> d_std;
};
MixtureGradient nll_gradient(const GaussianMixture& gm, double y);

/// Maps three basis-probability vectors of length 2^n onto a mixture with
/// K = 2^n - 1 components. The last state is the reference: mu_i is the
/// log-ratio against it, sigma_i the plain ratio (times sigma_scale), and
/// the weights are the remaining alpha-head probabilities renormalized to
/// sum to one. Inputs are clamped to [kProbClamp, 1] first.
GaussianMixture mixture_from_state_probs(std::span<const double> p_alpha,
                                         std::span<const double> p_mu,
                                         std::span<const double> p_sigma,
                                         double sigma_scale = 1.0);

/// Reverse-mode companion of mixture_from_state_probs: given gradients with
/// respect to the mixture parameters, produces dLoss/dp for each head's
/// probability vector. Entries that were clamped, and sigmas that sit on
/// the floor, propagate zero.
struct StateProbCotangents {
    std::vector<double> alpha;
    std::vector<double> mu;
    std::vector<double> sigma;
};
StateProbCotangents
state_prob_cotangents(std::span<const double> p_alpha,
                      std::span<const double> p_mu,
                      std::span<const double> p_sigma, double sigma_scale,
                      const MixtureGradient& grad);

} // namespace qmdn
