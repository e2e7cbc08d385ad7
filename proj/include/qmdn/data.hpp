#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qmdn/mixture.hpp"
#include "qmdn/rng.hpp"

namespace qmdn {

/// A benchmark dataset of (x, y) pairs plus enough metadata to regenerate it.
struct Dataset {
    struct Meta {
        std::string generator = "unknown";
        std::uint64_t seed = 0;
        std::size_t n = 0;
        std::string params;
    };

    std::vector<std::pair<double, double>> pairs;
    Meta meta;
};

/// Ground-truth double-slit screen distribution at barrier position x: the
/// interference pattern (five modes at 0, +-1, +-2) fading linearly into the
/// two-mode classical pattern as x goes from 0 to 1.
GaussianMixture double_slit_truth(double x);

/// Density of double_slit_truth at y. x must lie in [0, 1].
double double_slit_pdf(double x, double y);

/// n pairs with x ~ Uniform[0,1) and y drawn from the truth mixture at x.
Dataset gen_double_slit(std::size_t n, Rng& rng);

/// Iterates y_{k+1} = x * y_k * (1 - y_k) from y0, drops `discard` values,
/// and returns the next `keep` values.
std::vector<double> logistic_series(double x, double y0 = 0.5,
                                    std::size_t discard = 5,
                                    std::size_t keep = 100);

/// Logistic-map bifurcation dataset: n_x grid points evenly spaced over
/// [2.5, 4) (half-open; the x=4 orbit from y0=0.5 degenerates to zero),
/// each contributing its first `per_x` kept iterates.
Dataset gen_logistic(std::size_t n_x = 150, std::size_t per_x = 100);

/// CSV persistence: header `x,y`, 17-significant-digit decimals, and a
/// sibling `<path>.meta` key-value file. Load of a saved dataset is exact.
void save_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

} // namespace qmdn
