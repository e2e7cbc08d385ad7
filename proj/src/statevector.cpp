#include "qmdn/statevector.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace qmdn {

namespace {

// a*b + c*d with explicit real arithmetic; avoids the NaN-recovery branch
// the compiler emits for std::complex operator*.
inline cplx mul_add(const cplx& a, const cplx& b, const cplx& c,
                    const cplx& d) {
    const double re =
        a.real() * b.real() - a.imag() * b.imag() + c.real() * d.real() -
        c.imag() * d.imag();
    const double im =
        a.real() * b.imag() + a.imag() * b.real() + c.real() * d.imag() +
        c.imag() * d.real();
    return {re, im};
}

} // namespace

Mat2 rx_matrix(double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    return {cplx(c, 0.0), cplx(0.0, -s), cplx(0.0, -s), cplx(c, 0.0)};
}

Mat2 rot_matrix(double phi, double theta, double omega) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const cplx e_mm = std::polar(1.0, -(phi + omega) / 2.0);
    const cplx e_pm = std::polar(1.0, (phi - omega) / 2.0);
    return {e_mm * c, -e_pm * s, std::conj(e_pm) * s, std::conj(e_mm) * c};
}

RotDerivatives rot_matrix_derivatives(double phi, double theta,
                                      double omega) {
    const Mat2 u = rot_matrix(phi, theta, omega);
    const cplx half_i(0.0, 0.5);

    RotDerivatives d;
    // Rz(phi) acts first: dU/dphi = U * diag(-i/2, +i/2) scales columns.
    d.d_phi = {-half_i * u.m00, half_i * u.m01, -half_i * u.m10,
               half_i * u.m11};
    // Rz(omega) acts last: dU/domega = diag(-i/2, +i/2) * U scales rows.
    d.d_omega = {-half_i * u.m00, -half_i * u.m01, half_i * u.m10,
                 half_i * u.m11};
    // d/dtheta swaps cos(theta/2) <-> sin(theta/2) factors with signs.
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const cplx e_mm = std::polar(1.0, -(phi + omega) / 2.0);
    const cplx e_pm = std::polar(1.0, (phi - omega) / 2.0);
    d.d_theta = {e_mm * (-0.5 * s), -e_pm * (0.5 * c),
                 std::conj(e_pm) * (0.5 * c), std::conj(e_mm) * (-0.5 * s)};
    return d;
}

StateVector::StateVector(std::size_t n_qubits)
    : n_qubits_(n_qubits), amps_(std::size_t{1} << n_qubits, cplx(0.0, 0.0)) {
    if (n_qubits == 0 || n_qubits > 24)
        throw std::invalid_argument("StateVector: unsupported qubit count " +
                                    std::to_string(n_qubits));
    amps_[0] = cplx(1.0, 0.0);
}

StateVector::StateVector(std::size_t n_qubits, std::vector<cplx> amplitudes)
    : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
    if (amps_.size() != (std::size_t{1} << n_qubits))
        throw std::invalid_argument(
            "StateVector: amplitude count must be 2^n_qubits");
}

double StateVector::norm_squared() const {
    double total = 0.0;
    for (const cplx& a : amps_)
        total += a.real() * a.real() + a.imag() * a.imag();
    return total;
}

std::vector<double> StateVector::probabilities() const {
    std::vector<double> p(amps_.size());
    for (std::size_t i = 0; i < amps_.size(); ++i)
        p[i] = amps_[i].real() * amps_[i].real() +
               amps_[i].imag() * amps_[i].imag();
    return p;
}

void StateVector::check_qubit(std::size_t qubit) const {
    if (qubit >= n_qubits_)
        throw std::out_of_range("qubit index " + std::to_string(qubit) +
                                " out of range for " +
                                std::to_string(n_qubits_) + " qubits");
}

void StateVector::apply_single_qubit(std::size_t qubit, const Mat2& u) {
    check_qubit(qubit);
    // Qubit 0 is the MSB, so its bit sits at position n-1 of the index.
    const std::size_t stride = std::size_t{1} << (n_qubits_ - 1 - qubit);
    const std::size_t dim = amps_.size();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx a0 = amps_[i];
            const cplx a1 = amps_[i + stride];
            amps_[i] = mul_add(u.m00, a0, u.m01, a1);
            amps_[i + stride] = mul_add(u.m10, a0, u.m11, a1);
        }
    }
}

void StateVector::apply_rx(std::size_t qubit, double angle) {
    apply_single_qubit(qubit, rx_matrix(angle));
}

void StateVector::apply_rot(std::size_t qubit, double phi, double theta,
                            double omega) {
    apply_single_qubit(qubit, rot_matrix(phi, theta, omega));
}

void StateVector::apply_cnot(std::size_t control, std::size_t target) {
    check_qubit(control);
    check_qubit(target);
    if (control == target)
        throw std::invalid_argument("apply_cnot: control equals target");
    const std::size_t cmask = std::size_t{1} << (n_qubits_ - 1 - control);
    const std::size_t tmask = std::size_t{1} << (n_qubits_ - 1 - target);
    const std::size_t dim = amps_.size();
    for (std::size_t i = 0; i < dim; ++i) {
        if ((i & cmask) != 0 && (i & tmask) == 0)
            std::swap(amps_[i], amps_[i | tmask]);
    }
}

double overlap_with_gate(const StateVector& lambda, const StateVector& phi,
                         std::size_t qubit, const Mat2& u) {
    if (lambda.dim() != phi.dim())
        throw std::invalid_argument("overlap_with_gate: dimension mismatch");
    const std::size_t n = lambda.n_qubits();
    if (qubit >= n)
        throw std::out_of_range("overlap_with_gate: qubit out of range");
    const std::size_t stride = std::size_t{1} << (n - 1 - qubit);
    const std::size_t dim = phi.dim();
    const auto la = lambda.amplitudes();
    const auto ph = phi.amplitudes();
    double acc = 0.0;
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const cplx v0 = mul_add(u.m00, ph[i], u.m01, ph[i + stride]);
            const cplx v1 = mul_add(u.m10, ph[i], u.m11, ph[i + stride]);
            // Re(conj(l) * v)
            acc += la[i].real() * v0.real() + la[i].imag() * v0.imag();
            acc += la[i + stride].real() * v1.real() +
                   la[i + stride].imag() * v1.imag();
        }
    }
    return 2.0 * acc;
}

} // namespace qmdn
