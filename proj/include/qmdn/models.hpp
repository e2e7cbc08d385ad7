#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmdn/circuit.hpp"
#include "qmdn/mixture.hpp"
#include "qmdn/rng.hpp"

namespace qmdn {

/// Classical mixture-density network: x -> tanh(W1 x + b1) -> W2 h + b2,
/// with the 15 outputs split as 5 weight logits, 5 means, and 5 log-widths.
/// The network consumes the raw input; widths come straight out of the
/// exponential activation, in data units. Parameters live in one flat vector
/// laid out as W1 [0,5) | b1 [5,10) | W2 row-major [10,85) | b2 [85,100).
struct ClassicalMdn {
    static constexpr std::size_t kHidden = 5;
    static constexpr std::size_t kModes = 5;
    static constexpr std::size_t kOutputs = 3 * kModes;

    std::vector<double> params;

    // Training x-range, bound to a dataset before training; identity
    // placeholders until then. Records the domain the model was fit on
    // (evaluation-coverage checks); the forward pass does not rescale by it.
    double x_min = 0.0;
    double x_max = 1.0;
};

/// Quantum mixture-density network: three parameterized circuits over one
/// shared layout, one per mixture-parameter head. The flat parameter vector
/// is the concatenation alpha-head | mu-head | sigma-head angles. The
/// dimensionless width ratios are multiplied by sigma_scale to land in data
/// units.
struct QMdn {
    CircuitSpec spec;
    std::vector<double> params;

    double x_min = 0.0;
    double x_max = 1.0;
    double sigma_scale = 1.0;
};

std::size_t param_count(const ClassicalMdn& model);
std::size_t param_count(const QMdn& model);

/// Evaluates the network on the raw input x and returns the five-component
/// mixture it parameterizes.
GaussianMixture forward_classical(const ClassicalMdn& model, double x);

/// Runs the three heads at the embedding angle pi * normalized(x) and maps
/// their basis probabilities through the ratio transforms; K = 7.
GaussianMixture forward_qmdn(const QMdn& model, double x);

/// Per-sample loss -log p(y|x) and its exact gradient with respect to the
/// flat parameter vector.
struct BackwardResult {
    double loss = 0.0;
    std::vector<double> grad;
};
BackwardResult backward_classical(const ClassicalMdn& model, double x,
                                  double y);
BackwardResult backward_qmdn(const QMdn& model, double x, double y);

/// Fresh models with every trainable parameter drawn i.i.d. from
/// N(0, 0.05^2), so both families start from near-zero nets and the
/// circuits start near the identity; bounds stay at their placeholders
/// until bound to a dataset.
ClassicalMdn init_classical(Rng& rng);
QMdn init_qmdn(Rng& rng);

/// Versioned flat text serialization; parameters as 17-significant-digit
/// decimals, so save/load round-trips are bitwise exact.
void save_model(const ClassicalMdn& model, std::ostream& out);
void save_model(const QMdn& model, std::ostream& out);
void save_model(const ClassicalMdn& model, const std::filesystem::path& path);
void save_model(const QMdn& model, const std::filesystem::path& path);

ClassicalMdn load_classical(std::istream& in);
QMdn load_qmdn(std::istream& in);
ClassicalMdn load_classical(const std::filesystem::path& path);
QMdn load_qmdn(const std::filesystem::path& path);

/// Reads just the kind field of a serialized model: "classical" or "qmdn".
std::string model_kind_of(const std::filesystem::path& path);

} // namespace qmdn
