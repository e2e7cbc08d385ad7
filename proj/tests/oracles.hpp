// Independent reference implementations used only by tests. Everything here
// is deliberately naive: dense matrices, explicit Kronecker products, and
// central finite differences, with no code shared with the library paths
// they check.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

/// Dense square complex matrix, row-major.
struct DenseMatrix {
    std::size_t n = 0;
    std::vector<cplx> a;

    explicit DenseMatrix(std::size_t size)
        : n(size), a(size * size, cplx(0.0, 0.0)) {}

    cplx& at(std::size_t row, std::size_t col) { return a[row * n + col]; }
    cplx at(std::size_t row, std::size_t col) const { return a[row * n + col]; }

    static DenseMatrix identity(std::size_t size) {
        DenseMatrix m(size);
        for (std::size_t i = 0; i < size; ++i)
            m.at(i, i) = 1.0;
        return m;
    }
};

inline DenseMatrix kron(const DenseMatrix& x, const DenseMatrix& y) {
    DenseMatrix out(x.n * y.n);
    for (std::size_t i = 0; i < x.n; ++i)
        for (std::size_t j = 0; j < x.n; ++j)
            for (std::size_t k = 0; k < y.n; ++k)
                for (std::size_t l = 0; l < y.n; ++l)
                    out.at(i * y.n + k, j * y.n + l) = x.at(i, j) * y.at(k, l);
    return out;
}

inline DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& y) {
    if (x.n != y.n)
        throw std::invalid_argument("matmul: size mismatch");
    DenseMatrix out(x.n);
    for (std::size_t i = 0; i < x.n; ++i)
        for (std::size_t k = 0; k < x.n; ++k) {
            const cplx xik = x.at(i, k);
            for (std::size_t j = 0; j < x.n; ++j)
                out.at(i, j) += xik * y.at(k, j);
        }
    return out;
}

/// Lifts a 2x2 gate on `qubit` to the full register: I^(q) (x) g (x) I^(n-1-q)
/// with qubit 0 as the leftmost (most significant) tensor factor.
inline DenseMatrix lift_single_qubit(std::size_t n_qubits, std::size_t qubit,
                                     const DenseMatrix& gate) {
    DenseMatrix out = DenseMatrix::identity(1);
    for (std::size_t q = 0; q < n_qubits; ++q)
        out = kron(out, q == qubit ? gate : DenseMatrix::identity(2));
    return out;
}

/// Dense CNOT permutation matrix in the qubit-0-is-MSB convention.
inline DenseMatrix cnot_dense(std::size_t n_qubits, std::size_t control,
                              std::size_t target) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    const std::size_t cmask = std::size_t{1} << (n_qubits - 1 - control);
    const std::size_t tmask = std::size_t{1} << (n_qubits - 1 - target);
    DenseMatrix out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const std::size_t j = (i & cmask) != 0 ? (i ^ tmask) : i;
        out.at(j, i) = 1.0;
    }
    return out;
}

inline DenseMatrix rx_dense(double angle) {
    DenseMatrix g(2);
    g.at(0, 0) = std::cos(angle / 2.0);
    g.at(0, 1) = cplx(0.0, -std::sin(angle / 2.0));
    g.at(1, 0) = cplx(0.0, -std::sin(angle / 2.0));
    g.at(1, 1) = std::cos(angle / 2.0);
    return g;
}

/// Rz(omega) * Ry(theta) * Rz(phi) assembled from the three factor matrices
/// rather than the closed form used by the library.
inline DenseMatrix rot_dense(double phi, double theta, double omega) {
    auto rz = [](double lam) {
        DenseMatrix g(2);
        g.at(0, 0) = std::exp(cplx(0.0, -lam / 2.0));
        g.at(1, 1) = std::exp(cplx(0.0, lam / 2.0));
        return g;
    };
    DenseMatrix ry(2);
    ry.at(0, 0) = std::cos(theta / 2.0);
    ry.at(0, 1) = -std::sin(theta / 2.0);
    ry.at(1, 0) = std::sin(theta / 2.0);
    ry.at(1, 1) = std::cos(theta / 2.0);
    DenseMatrix m(2);
    m = matmul(rz(omega), matmul(ry, rz(phi)));
    return m;
}

/// Builds the full circuit unitary by multiplying lifted gate matrices in
/// application order, then returns |U e_0|^2 per basis state. Layout must
/// mirror the simulated circuit: Rx embeddings, then per layer rotations
/// followed by entangler CNOTs.
inline std::vector<double>
dense_circuit_probabilities(std::size_t n_qubits, std::size_t n_layers,
                            const std::vector<std::pair<std::size_t, std::size_t>>& entangler,
                            std::span<const double> angles, double x_angle) {
    const std::size_t dim = std::size_t{1} << n_qubits;
    DenseMatrix u = DenseMatrix::identity(dim);
    auto apply = [&u](const DenseMatrix& g) { u = matmul(g, u); };

    for (std::size_t q = 0; q < n_qubits; ++q)
        apply(lift_single_qubit(n_qubits, q, rx_dense(x_angle)));
    for (std::size_t l = 0; l < n_layers; ++l) {
        for (std::size_t q = 0; q < n_qubits; ++q) {
            const std::size_t k = 3 * (l * n_qubits + q);
            apply(lift_single_qubit(
                n_qubits, q,
                rot_dense(angles[k], angles[k + 1], angles[k + 2])));
        }
        for (const auto& [control, target] : entangler)
            apply(cnot_dense(n_qubits, control, target));
    }

    std::vector<double> probs(dim);
    for (std::size_t i = 0; i < dim; ++i)
        probs[i] = std::norm(u.at(i, 0));
    return probs;
}

/// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double>
finite_difference_gradient(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> at, double step) {
    std::vector<double> params(at.begin(), at.end());
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double up = f(params);
        params[i] = saved - step;
        const double down = f(params);
        params[i] = saved;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

/// Largest per-entry deviation relative to the oracle gradient's own scale:
/// max_i |a_i - b_i| / max(max_i |b_i|, floor).
inline double max_relative_error(std::span<const double> got,
                                 std::span<const double> want,
                                 double floor = 1e-12) {
    if (got.size() != want.size())
        throw std::invalid_argument("max_relative_error: length mismatch");
    double scale = floor;
    for (double w : want)
        scale = std::max(scale, std::abs(w));
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i)
        worst = std::max(worst, std::abs(got[i] - want[i]) / scale);
    return worst;
}

/// Trapezoidal integral of f over [lo, hi] with n_points samples.
inline double trapezoid(const std::function<double(double)>& f, double lo,
                        double hi, std::size_t n_points) {
    const double h = (hi - lo) / static_cast<double>(n_points - 1);
    double acc = 0.5 * (f(lo) + f(hi));
    for (std::size_t i = 1; i + 1 < n_points; ++i)
        acc += f(lo + static_cast<double>(i) * h);
    return acc * h;
}

} // namespace oracle
