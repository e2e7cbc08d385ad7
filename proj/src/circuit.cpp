#include "qmdn/circuit.hpp"

#include <stdexcept>
#include <string>

namespace qmdn {

void CircuitSpec::validate() const {
    if (n_qubits == 0)
        throw std::invalid_argument("CircuitSpec: n_qubits must be positive");
    for (const auto& [control, target] : entangler) {
        if (control >= n_qubits || target >= n_qubits)
            throw std::invalid_argument(
                "CircuitSpec: entangler index out of range");
        if (control == target)
            throw std::invalid_argument(
                "CircuitSpec: entangler control equals target");
    }
}

CircuitSpec CircuitSpec::ring(std::size_t n_qubits, std::size_t n_layers) {
    CircuitSpec spec;
    spec.n_qubits = n_qubits;
    spec.n_layers = n_layers;
    if (n_qubits >= 2) {
        for (std::size_t q = 0; q < n_qubits; ++q)
            spec.entangler.emplace_back(q, (q + 1) % n_qubits);
    }
    return spec;
}

CircuitSpec CircuitSpec::chain(std::size_t n_qubits, std::size_t n_layers) {
    CircuitSpec spec;
    spec.n_qubits = n_qubits;
    spec.n_layers = n_layers;
    for (std::size_t q = 0; q + 1 < n_qubits; ++q)
        spec.entangler.emplace_back(q, q + 1);
    return spec;
}

namespace {

void check_params(const CircuitSpec& spec, const CircuitParams& params) {
    spec.validate();
    if (params.angles.size() != spec.param_count())
        throw std::invalid_argument(
            "circuit parameters: expected " +
            std::to_string(spec.param_count()) + " angles, got " +
            std::to_string(params.angles.size()));
}

StateVector run_to_state(const CircuitSpec& spec, const CircuitParams& params,
                         double x_angle) {
    StateVector state(spec.n_qubits);
    for (std::size_t q = 0; q < spec.n_qubits; ++q)
        state.apply_rx(q, x_angle);
    for (std::size_t l = 0; l < spec.n_layers; ++l) {
        for (std::size_t q = 0; q < spec.n_qubits; ++q) {
            const std::size_t k = spec.angle_index(l, q, 0);
            state.apply_rot(q, params.angles[k], params.angles[k + 1],
                            params.angles[k + 2]);
        }
        for (const auto& [control, target] : spec.entangler)
            state.apply_cnot(control, target);
    }
    return state;
}

} // namespace

std::vector<double> run_circuit(const CircuitSpec& spec,
                                const CircuitParams& params, double x_angle) {
    check_params(spec, params);
    return run_to_state(spec, params, x_angle).probabilities();
}

std::vector<double> circuit_gradient(const CircuitSpec& spec,
                                     const CircuitParams& params,
                                     double x_angle,
                                     std::span<const double> cotangent) {
    check_params(spec, params);
    const std::size_t dim = std::size_t{1} << spec.n_qubits;
    if (cotangent.size() != dim)
        throw std::invalid_argument("circuit_gradient: cotangent length " +
                                    std::to_string(cotangent.size()) +
                                    " does not match state dimension " +
                                    std::to_string(dim));

    StateVector ket = run_to_state(spec, params, x_angle);

    // lambda = diag(cotangent) * psi; the loss linearization is the
    // expectation of that real diagonal operator.
    std::vector<cplx> lambda_amps(dim);
    const auto amps = ket.amplitudes();
    for (std::size_t i = 0; i < dim; ++i)
        lambda_amps[i] = cotangent[i] * amps[i];
    StateVector lambda(spec.n_qubits, std::move(lambda_amps));

    std::vector<double> grad(spec.param_count(), 0.0);

    // Reverse sweep. Invariant at a rotation gate G: ket holds the state
    // just before G, lambda holds the cotangent state just after it.
    for (std::size_t l = spec.n_layers; l-- > 0;) {
        for (std::size_t e = spec.entangler.size(); e-- > 0;) {
            const auto& [control, target] = spec.entangler[e];
            ket.apply_cnot(control, target); // CNOT is self-inverse
            lambda.apply_cnot(control, target);
        }
        for (std::size_t q = spec.n_qubits; q-- > 0;) {
            const std::size_t k = spec.angle_index(l, q, 0);
            const double phi = params.angles[k];
            const double theta = params.angles[k + 1];
            const double omega = params.angles[k + 2];

            ket.apply_single_qubit(q, rot_matrix(phi, theta, omega).dagger());
            const RotDerivatives d =
                rot_matrix_derivatives(phi, theta, omega);
            grad[k] = overlap_with_gate(lambda, ket, q, d.d_phi);
            grad[k + 1] = overlap_with_gate(lambda, ket, q, d.d_theta);
            grad[k + 2] = overlap_with_gate(lambda, ket, q, d.d_omega);
            lambda.apply_single_qubit(q,
                                      rot_matrix(phi, theta, omega).dagger());
        }
    }
    return grad;
}

} // namespace qmdn
