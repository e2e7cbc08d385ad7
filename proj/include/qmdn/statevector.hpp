#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qmdn {

using cplx = std::complex<double>;

/// 2x2 complex matrix, row-major. Small enough to pass by value.
struct Mat2 {
    cplx m00, m01, m10, m11;

    Mat2 dagger() const {
        return {std::conj(m00), std::conj(m10), std::conj(m01),
                std::conj(m11)};
    }
};

/// X-rotation: exp(-i angle X / 2).
Mat2 rx_matrix(double angle);

/// Three-angle rotation Rz(omega) * Ry(theta) * Rz(phi).
Mat2 rot_matrix(double phi, double theta, double omega);

/// Entry-wise derivatives of rot_matrix with respect to phi, theta, omega.
struct RotDerivatives {
    Mat2 d_phi, d_theta, d_omega;
};
RotDerivatives rot_matrix_derivatives(double phi, double theta, double omega);

/// Amplitudes of an n-qubit register. Qubit 0 is the most significant bit
/// of the basis-state index, so for 3 qubits |q0 q1 q2> has index
/// 4*q0 + 2*q1 + q2. Gates mutate the state in place and preserve the norm.
class StateVector {
  public:
    /// Initializes to the all-zeros basis state |0...0>.
    explicit StateVector(std::size_t n_qubits);

    StateVector(std::size_t n_qubits, std::vector<cplx> amplitudes);

    std::size_t n_qubits() const { return n_qubits_; }
    std::size_t dim() const { return amps_.size(); }
    std::span<const cplx> amplitudes() const { return amps_; }
    cplx amplitude(std::size_t basis_index) const {
        return amps_[basis_index];
    }

    double norm_squared() const;

    /// |amplitude|^2 for every basis state, in index order.
    std::vector<double> probabilities() const;

    /// Applies an arbitrary single-qubit unitary to the target qubit.
    void apply_single_qubit(std::size_t qubit, const Mat2& u);

    void apply_rx(std::size_t qubit, double angle);
    void apply_rot(std::size_t qubit, double phi, double theta, double omega);

    /// Toggles the target bit on basis states whose control bit is set.
    /// Pure index permutation; introduces no floating-point error.
    void apply_cnot(std::size_t control, std::size_t target);

  private:
    void check_qubit(std::size_t qubit) const;

    std::size_t n_qubits_;
    std::vector<cplx> amps_;
};

/// 2 * Re(<lambda| U_qubit |phi>) without materializing U|phi>. Used by the
/// adjoint gradient sweep; both states must share the same dimension.
double overlap_with_gate(const StateVector& lambda, const StateVector& phi,
                         std::size_t qubit, const Mat2& u);

} // namespace qmdn
