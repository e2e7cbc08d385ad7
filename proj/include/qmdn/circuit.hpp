#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "qmdn/statevector.hpp"

namespace qmdn {

/// Layout of a layered rotation/CNOT circuit: every layer applies one
/// three-angle rotation per qubit followed by the fixed entangler pairs.
/// Trainable parameter count is 3 * n_qubits * n_layers.
struct CircuitSpec {
    std::size_t n_qubits = 3;
    std::size_t n_layers = 4;
    std::vector<std::pair<std::size_t, std::size_t>> entangler; // (control, target)

    std::size_t param_count() const { return 3 * n_qubits * n_layers; }

    /// Flat angle index for (layer, qubit, component); components are
    /// 0 = phi, 1 = theta, 2 = omega.
    std::size_t angle_index(std::size_t layer, std::size_t qubit,
                            std::size_t component) const {
        return 3 * (layer * n_qubits + qubit) + component;
    }

    /// Throws if any entangler pair is out of range or self-targeting.
    void validate() const;

    /// Ring entangler (0,1), (1,2), ..., (n-1,0). Default topology.
    static CircuitSpec ring(std::size_t n_qubits, std::size_t n_layers);

    /// Open chain (0,1), (1,2), ..., (n-2,n-1).
    static CircuitSpec chain(std::size_t n_qubits, std::size_t n_layers);
};

/// Flat trainable angles for one circuit, indexed per CircuitSpec.
struct CircuitParams {
    std::vector<double> angles;
};

/// Runs the circuit on |0...0>: an X-rotation by x_angle on every wire,
/// then the layered rotations and entanglers. Returns the exact basis-state
/// probabilities.
std::vector<double> run_circuit(const CircuitSpec& spec,
                                const CircuitParams& params, double x_angle);

/// Gradient of sum_i cotangent[i] * p_i with respect to every trainable
/// angle, computed by adjoint back-propagation through the gate sequence
/// (one forward and one reverse sweep). The embedding angle is not
/// trainable and gets no gradient entry.
std::vector<double> circuit_gradient(const CircuitSpec& spec,
                                     const CircuitParams& params,
                                     double x_angle,
                                     std::span<const double> cotangent);

} // namespace qmdn
