#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "qmdn/data.hpp"
#include "qmdn/mixture.hpp"
#include "qmdn/models.hpp"
#include "qmdn/rng.hpp"

namespace qmdn {

/// Default evaluation grids: they span every benchmark mode with at least a
/// six-sigma margin at the published widths.
inline constexpr double kDoubleSlitYMin = -3.0;
inline constexpr double kDoubleSlitYMax = 3.0;
inline constexpr double kLogisticYMin = 0.0;
inline constexpr double kLogisticYMax = 1.0;
inline constexpr std::size_t kGridPoints = 1001;

/// Conditional density p(y|x) sampled on an even y grid.
struct DensityCurve {
    double x = 0.0;
    std::vector<double> ys;
    std::vector<double> densities;
};

DensityCurve density_grid(const GaussianMixture& gm, double x, double y_min,
                          double y_max, std::size_t n_points);
DensityCurve density_grid(const ClassicalMdn& model, double x, double y_min,
                          double y_max, std::size_t n_points);
DensityCurve density_grid(const QMdn& model, double x, double y_min,
                          double y_max, std::size_t n_points);

/// A detected density peak: grid position and raw height.
struct Mode {
    double position = 0.0;
    double height = 0.0;
};

/// Strict interior local maxima at least rel_threshold times the global
/// maximum; endpoints never qualify.
std::vector<Mode> detect_modes(const DensityCurve& curve,
                               double rel_threshold = 0.05);

/// Trapezoidal KL(p ‖ q) over the grid, both densities floored at 1e-12.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     std::span<const double> ys);

/// KL between the analytic double-slit truth at x and the model's density.
double kl_to_truth(const ClassicalMdn& model, double x, double y_min,
                   double y_max, std::size_t n_points);
double kl_to_truth(const QMdn& model, double x, double y_min, double y_max,
                   std::size_t n_points);

/// Mean NLL of the dataset under the model's per-x mixtures.
double held_out_nll(const ClassicalMdn& model, const Dataset& ds);
double held_out_nll(const QMdn& model, const Dataset& ds);

/// Mean NLL of the dataset under the analytic double-slit truth: a
/// sampling-noise lower bound for any trained model on this benchmark.
double held_out_nll_truth(const Dataset& ds);

/// One y drawn from the model's mixture per input x.
Dataset sample_predictions(const ClassicalMdn& model,
                           std::span<const double> xs, Rng& rng);
Dataset sample_predictions(const QMdn& model, std::span<const double> xs,
                           Rng& rng);

/// Curve and mode-list CSV exports (`y,density` / `position,height`).
void write_density_csv(const DensityCurve& curve,
                       const std::filesystem::path& path);
void write_modes_csv(std::span<const Mode> modes,
                     const std::filesystem::path& path);

} // namespace qmdn
