#include "qmdn/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qmdn {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;

void check_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string(what) +
                                        " contains a non-finite value");
        }
    }
}

/// Log-density of component i at y.
double component_log_pdf(double y, double mean, double std) {
    const double z = (y - mean) / std;
    return -0.5 * z * z - std::log(std) - 0.5 * kLogTwoPi;
}

} // namespace

GaussianMixture::GaussianMixture(std::vector<double> weights,
                                 std::vector<double> means,
                                 std::vector<double> stds)
    : weights_(std::move(weights)), means_(std::move(means)),
      stds_(std::move(stds)) {
    const std::size_t k = weights_.size();
    if (k == 0) {
        throw std::invalid_argument("mixture needs at least one component");
    }
    if (means_.size() != k || stds_.size() != k) {
        throw std::invalid_argument(
            "mixture weights, means, and stds must have equal length");
    }
    check_finite(weights_, "mixture weights");
    check_finite(means_, "mixture means");
    check_finite(stds_, "mixture stds");
    double sum = 0.0;
    for (double& w : weights_) {
        if (w < -1e-12 || w > 1.0 + 1e-12) {
            throw std::invalid_argument("mixture weight outside [0, 1]");
        }
        w = std::clamp(w, 0.0, 1.0);
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument("mixture weights must sum to 1");
    }
    for (double& s : stds_) {
        s = std::max(s, kSigmaFloor);
    }
}

double GaussianMixture::pdf(double y) const {
    double p = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (weights_[i] == 0.0) {
            continue;
        }
        p += weights_[i] * std::exp(component_log_pdf(y, means_[i], stds_[i]));
    }
    return p;
}

double GaussianMixture::log_pdf(double y) const {
    // Log-sum-exp over log(w_i) + log N_i keeps the result finite even when
    // every component is many sigmas away from y.
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(weights_.size(),
                              -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (weights_[i] == 0.0) {
            continue;
        }
        terms[i] =
            std::log(weights_[i]) + component_log_pdf(y, means_[i], stds_[i]);
        max_term = std::max(max_term, terms[i]);
    }
    double acc = 0.0;
    for (double t : terms) {
        if (std::isfinite(t)) {
            acc += std::exp(t - max_term);
        }
    }
    return max_term + std::log(acc);
}

double GaussianMixture::sample(Rng& rng) const {
    const std::size_t i = rng.categorical(weights_);
    return rng.normal(means_[i], stds_[i]);
}

double nll(std::span<const GaussianMixture> mixtures,
           std::span<const double> ys) {
    if (mixtures.empty() || mixtures.size() != ys.size()) {
        throw std::invalid_argument(
            "nll needs equally many mixtures and targets, at least one each");
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
        acc -= mixtures[j].log_pdf(ys[j]);
    }
    return acc / static_cast<double>(ys.size());
}

MixtureGradient nll_gradient(const GaussianMixture& gm, double y) {
    const std::size_t k = gm.n_components();
    const auto w = gm.weights();
    const auto m = gm.means();
    const auto s = gm.stds();
    const double log_p = gm.log_pdf(y);

    MixtureGradient grad;
    grad.d_weight.resize(k);
    grad.d_mean.resize(k);
    grad.d_std.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double log_n = component_log_pdf(y, m[i], s[i]);
        // d(-log p)/dw_i = -N_i / p, defined for zero-weight components too.
        grad.d_weight[i] = -std::exp(log_n - log_p);
        // Responsibility gamma_i = w_i N_i / p, computed in log space.
        const double gamma =
            w[i] == 0.0 ? 0.0 : std::exp(std::log(w[i]) + log_n - log_p);
        const double diff = y - m[i];
        grad.d_mean[i] = -gamma * diff / (s[i] * s[i]);
        grad.d_std[i] =
            -gamma * (diff * diff / (s[i] * s[i] * s[i]) - 1.0 / s[i]);
    }
    return grad;
}

namespace {

void check_simplex(std::span<const double> p, const char* what) {
    double sum = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) {
            throw std::invalid_argument(std::string(what) +
                                        " has a negative or NaN entry");
        }
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw std::invalid_argument(std::string(what) +
                                    " does not sum to 1 within 1e-9");
    }
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0); }

bool is_clamped(double p) { return p <= kProbClamp || p >= 1.0; }

} // namespace

GaussianMixture mixture_from_state_probs(std::span<const double> p_alpha,
                                         std::span<const double> p_mu,
                                         std::span<const double> p_sigma,
                                         double sigma_scale) {
    const std::size_t dim = p_alpha.size();
    if (dim < 2 || p_mu.size() != dim || p_sigma.size() != dim) {
        throw std::invalid_argument(
            "state probability vectors must share a length of at least 2");
    }
    if (!(sigma_scale > 0.0) || !std::isfinite(sigma_scale)) {
        throw std::invalid_argument("sigma_scale must be positive and finite");
    }
    check_simplex(p_alpha, "alpha-head probabilities");
    check_simplex(p_mu, "mu-head probabilities");
    check_simplex(p_sigma, "sigma-head probabilities");

    const std::size_t k = dim - 1;
    std::vector<double> weights(k);
    std::vector<double> means(k);
    std::vector<double> stds(k);

    // Renormalize the first K alpha-head entries by their own partial sum so
    // the weights depend on ratios only and land exactly on the simplex.
    double denom = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        denom += clamp_prob(p_alpha[i]);
    }
    const double mu_ref = clamp_prob(p_mu[k]);
    const double sigma_ref = clamp_prob(p_sigma[k]);
    for (std::size_t i = 0; i < k; ++i) {
        weights[i] = clamp_prob(p_alpha[i]) / denom;
        means[i] = std::log(clamp_prob(p_mu[i]) / mu_ref);
        stds[i] = clamp_prob(p_sigma[i]) / sigma_ref * sigma_scale;
    }
    return GaussianMixture(std::move(weights), std::move(means),
                           std::move(stds));
}

StateProbCotangents
state_prob_cotangents(std::span<const double> p_alpha,
                      std::span<const double> p_mu,
                      std::span<const double> p_sigma, double sigma_scale,
                      const MixtureGradient& grad) {
    const std::size_t dim = p_alpha.size();
    if (dim < 2 || p_mu.size() != dim || p_sigma.size() != dim) {
        throw std::invalid_argument(
            "state probability vectors must share a length of at least 2");
    }
    const std::size_t k = dim - 1;
    if (grad.d_weight.size() != k || grad.d_mean.size() != k ||
        grad.d_std.size() != k) {
        throw std::invalid_argument(
            "mixture gradient length does not match the state dimension");
    }

    StateProbCotangents cot;
    cot.alpha.assign(dim, 0.0);
    cot.mu.assign(dim, 0.0);
    cot.sigma.assign(dim, 0.0);

    // Alpha head: w_i = c_i / D with D the partial sum of the first K
    // clamped entries, so dw_i/dc_j = (delta_ij - w_i) / D and the pullback
    // is cot_j = (g_j - sum_i g_i w_i) / D. The reference entry never enters.
    double denom = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        denom += clamp_prob(p_alpha[i]);
    }
    double weighted_g = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        weighted_g += grad.d_weight[i] * (clamp_prob(p_alpha[i]) / denom);
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (!is_clamped(p_alpha[j])) {
            cot.alpha[j] = (grad.d_weight[j] - weighted_g) / denom;
        }
    }

    // Mu head: mu_i = log(c_i) - log(c_ref).
    const double mu_ref = clamp_prob(p_mu[k]);
    double mu_ref_acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (!is_clamped(p_mu[i])) {
            cot.mu[i] = grad.d_mean[i] / clamp_prob(p_mu[i]);
        }
        mu_ref_acc += grad.d_mean[i];
    }
    if (!is_clamped(p_mu[k])) {
        cot.mu[k] = -mu_ref_acc / mu_ref;
    }

    // Sigma head: sigma_i = c_i / c_ref * scale unless floored, in which
    // case the floor is a constant and contributes nothing.
    const double sigma_ref = clamp_prob(p_sigma[k]);
    double sigma_ref_acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double raw = clamp_prob(p_sigma[i]) / sigma_ref * sigma_scale;
        if (raw <= kSigmaFloor) {
            continue;
        }
        if (!is_clamped(p_sigma[i])) {
            cot.sigma[i] = grad.d_std[i] * sigma_scale / sigma_ref;
        }
        sigma_ref_acc += grad.d_std[i] * clamp_prob(p_sigma[i]);
    }
    if (!is_clamped(p_sigma[k])) {
        cot.sigma[k] = -sigma_ref_acc * sigma_scale / (sigma_ref * sigma_ref);
    }
    return cot;
}

} // namespace qmdn
