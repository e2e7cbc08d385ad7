#include "qmdn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qmdn {
namespace {

constexpr double kDensityFloor = 1e-12;

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2)
        throw std::invalid_argument("density grid needs at least two points");
    if (!(hi > lo))
        throw std::invalid_argument("density grid range must be increasing");
    std::vector<double> xs(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
        xs[i] = lo + static_cast<double>(i) * step;
    xs.back() = hi;
    return xs;
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_lines(const std::filesystem::path& path, const std::string& body) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() +
                                 " for writing");
    out << body;
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

} // namespace

DensityCurve density_grid(const GaussianMixture& gm, double x, double y_min,
                          double y_max, std::size_t n_points) {
    DensityCurve curve;
    curve.x = x;
    curve.ys = linspace(y_min, y_max, n_points);
    curve.densities.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i)
        curve.densities[i] = gm.pdf(curve.ys[i]);
    return curve;
}

DensityCurve density_grid(const ClassicalMdn& model, double x, double y_min,
                          double y_max, std::size_t n_points) {
    return density_grid(forward_classical(model, x), x, y_min, y_max,
                        n_points);
}

DensityCurve density_grid(const QMdn& model, double x, double y_min,
                          double y_max, std::size_t n_points) {
    return density_grid(forward_qmdn(model, x), x, y_min, y_max, n_points);
}

std::vector<Mode> detect_modes(const DensityCurve& curve,
                               double rel_threshold) {
    if (!(rel_threshold > 0.0) || !(rel_threshold < 1.0))
        throw std::invalid_argument("mode threshold must lie in (0, 1)");
    if (curve.ys.size() != curve.densities.size())
        throw std::invalid_argument("density curve has mismatched lengths");
    std::vector<Mode> modes;
    if (curve.densities.size() < 3)
        return modes;
    const double peak =
        *std::max_element(curve.densities.begin(), curve.densities.end());
    const double cutoff = rel_threshold * peak;
    for (std::size_t i = 1; i + 1 < curve.densities.size(); ++i) {
        const double d = curve.densities[i];
        if (d > curve.densities[i - 1] && d > curve.densities[i + 1] &&
            d >= cutoff)
            modes.push_back({curve.ys[i], d});
    }
    return modes;
}

double kl_divergence(std::span<const double> p, std::span<const double> q,
                     std::span<const double> ys) {
    if (p.size() != q.size() || p.size() != ys.size())
        throw std::invalid_argument("KL inputs have mismatched lengths");
    if (p.size() < 2)
        throw std::invalid_argument("KL needs at least two grid points");
    auto integrand = [&](std::size_t i) {
        const double pi = std::max(p[i], kDensityFloor);
        const double qi = std::max(q[i], kDensityFloor);
        return pi * std::log(pi / qi);
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i)
        total += 0.5 * (ys[i + 1] - ys[i]) * (integrand(i) + integrand(i + 1));
    return total;
}

namespace {

template <typename Model>
double kl_to_truth_impl(const Model& model, double x, double y_min,
                        double y_max, std::size_t n_points) {
    const DensityCurve truth =
        density_grid(double_slit_truth(x), x, y_min, y_max, n_points);
    const DensityCurve got = density_grid(model, x, y_min, y_max, n_points);
    return kl_divergence(truth.densities, got.densities, truth.ys);
}

template <typename Forward>
double mean_nll(const Dataset& ds, Forward&& forward) {
    if (ds.pairs.empty())
        throw std::invalid_argument("held-out NLL of an empty dataset");
    double total = 0.0;
    for (const auto& [x, y] : ds.pairs)
        total -= forward(x).log_pdf(y);
    return total / static_cast<double>(ds.pairs.size());
}

template <typename Forward>
Dataset sample_predictions_impl(std::span<const double> xs, Rng& rng,
                                Forward&& forward) {
    Dataset ds;
    ds.pairs.reserve(xs.size());
    for (double x : xs)
        ds.pairs.emplace_back(x, forward(x).sample(rng));
    ds.meta.generator = "predictions";
    ds.meta.n = ds.pairs.size();
    return ds;
}

} // namespace

double kl_to_truth(const ClassicalMdn& model, double x, double y_min,
                   double y_max, std::size_t n_points) {
    return kl_to_truth_impl(model, x, y_min, y_max, n_points);
}

double kl_to_truth(const QMdn& model, double x, double y_min, double y_max,
                   std::size_t n_points) {
    return kl_to_truth_impl(model, x, y_min, y_max, n_points);
}

double held_out_nll(const ClassicalMdn& model, const Dataset& ds) {
    return mean_nll(ds, [&](double x) { return forward_classical(model, x); });
}

double held_out_nll(const QMdn& model, const Dataset& ds) {
    return mean_nll(ds, [&](double x) { return forward_qmdn(model, x); });
}

double held_out_nll_truth(const Dataset& ds) {
    return mean_nll(ds, [](double x) { return double_slit_truth(x); });
}

Dataset sample_predictions(const ClassicalMdn& model,
                           std::span<const double> xs, Rng& rng) {
    return sample_predictions_impl(
        xs, rng, [&](double x) { return forward_classical(model, x); });
}

Dataset sample_predictions(const QMdn& model, std::span<const double> xs,
                           Rng& rng) {
    return sample_predictions_impl(
        xs, rng, [&](double x) { return forward_qmdn(model, x); });
}

void write_density_csv(const DensityCurve& curve,
                       const std::filesystem::path& path) {
    std::string body = "y,density\n";
    for (std::size_t i = 0; i < curve.ys.size(); ++i)
        body += fmt17(curve.ys[i]) + "," + fmt17(curve.densities[i]) + "\n";
    write_lines(path, body);
}

void write_modes_csv(std::span<const Mode> modes,
                     const std::filesystem::path& path) {
    std::string body = "position,height\n";
    for (const Mode& m : modes)
        body += fmt17(m.position) + "," + fmt17(m.height) + "\n";
    write_lines(path, body);
}

} // namespace qmdn
