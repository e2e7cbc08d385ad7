#include "doctest.h"

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "qmdn/circuit.hpp"
#include "qmdn/rng.hpp"

using namespace qmdn;

namespace {

CircuitParams random_params(const CircuitSpec& spec, Rng& rng, double lo,
                            double hi) {
    CircuitParams p;
    p.angles.resize(spec.param_count());
    for (double& a : p.angles)
        a = rng.uniform(lo, hi);
    return p;
}

} // namespace

TEST_CASE("ring and chain entangler construction") {
    const CircuitSpec ring = CircuitSpec::ring(3, 4);
    CHECK(ring.param_count() == 36);
    REQUIRE(ring.entangler.size() == 3);
    CHECK(ring.entangler[2] == std::pair<std::size_t, std::size_t>{2, 0});

    const CircuitSpec chain = CircuitSpec::chain(3, 4);
    CHECK(chain.entangler.size() == 2);

    // single-qubit circuits have no entangler at all
    CHECK(CircuitSpec::ring(1, 2).entangler.empty());

    CircuitSpec bad = ring;
    bad.entangler.emplace_back(1, 1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("all-zero circuit is the identity on |000>") {
    const CircuitSpec spec = CircuitSpec::ring(3, 4);
    CircuitParams params{std::vector<double>(spec.param_count(), 0.0)};
    const auto p = run_circuit(spec, params, 0.0);
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < p.size(); ++i)
        CHECK(std::abs(p[i]) < 1e-30);
}

TEST_CASE("probabilities sum to one for random circuits") {
    const CircuitSpec spec = CircuitSpec::ring(3, 4);
    Rng rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const CircuitParams params = random_params(spec, rng, -3.0, 3.0);
        const auto p = run_circuit(spec, params, rng.uniform(0.0, 3.14));
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        CHECK(std::abs(total - 1.0) < 1e-10);
    }
}

TEST_CASE("run_circuit matches the dense Kronecker-product oracle") {
    Rng rng(2024);
    const double x_angle = 0.7;

    SUBCASE("paper-sized ring circuit") {
        const CircuitSpec spec = CircuitSpec::ring(3, 4);
        for (int trial = 0; trial < 20; ++trial) {
            const CircuitParams params = random_params(spec, rng, -3.0, 3.0);
            const auto got = run_circuit(spec, params, x_angle);
            const auto want = oracle::dense_circuit_probabilities(
                3, 4, spec.entangler, params.angles, x_angle);
            for (std::size_t i = 0; i < got.size(); ++i)
                CHECK(std::abs(got[i] - want[i]) < 1e-10);
        }
    }

    SUBCASE("chain topology and non-default sizes") {
        for (std::size_t n = 1; n <= 4; ++n) {
            const CircuitSpec spec = CircuitSpec::chain(n, 2);
            const CircuitParams params = random_params(spec, rng, -3.0, 3.0);
            const auto got = run_circuit(spec, params, 1.3);
            const auto want = oracle::dense_circuit_probabilities(
                n, 2, spec.entangler, params.angles, 1.3);
            for (std::size_t i = 0; i < got.size(); ++i)
                CHECK(std::abs(got[i] - want[i]) < 1e-10);
        }
    }
}

TEST_CASE("circuit_gradient agrees with finite differences") {
    const CircuitSpec spec = CircuitSpec::ring(3, 4);
    Rng rng(31);
    const double x_angle = 0.7;

    SUBCASE("one-hot cotangent on p0") {
        const CircuitParams params = random_params(spec, rng, -2.0, 2.0);
        std::vector<double> cot(8, 0.0);
        cot[0] = 1.0;
        const auto grad = circuit_gradient(spec, params, x_angle, cot);
        const auto fd = oracle::finite_difference_gradient(
            [&](std::span<const double> angles) {
                CircuitParams p{{angles.begin(), angles.end()}};
                return run_circuit(spec, p, x_angle)[0];
            },
            params.angles, 1e-5);
        CHECK(oracle::max_relative_error(grad, fd) < 1e-4);
    }

    SUBCASE("random dense cotangents") {
        for (int trial = 0; trial < 5; ++trial) {
            const CircuitParams params = random_params(spec, rng, -2.0, 2.0);
            std::vector<double> cot(8);
            for (double& c : cot)
                c = rng.uniform(-2.0, 2.0);
            const auto grad = circuit_gradient(spec, params, x_angle, cot);
            const auto fd = oracle::finite_difference_gradient(
                [&](std::span<const double> angles) {
                    CircuitParams p{{angles.begin(), angles.end()}};
                    const auto probs = run_circuit(spec, p, x_angle);
                    double acc = 0.0;
                    for (std::size_t i = 0; i < probs.size(); ++i)
                        acc += cot[i] * probs[i];
                    return acc;
                },
                params.angles, 1e-5);
            CHECK(oracle::max_relative_error(grad, fd) < 1e-4);
        }
    }

    SUBCASE("zero cotangent gives a zero gradient") {
        const CircuitParams params = random_params(spec, rng, -2.0, 2.0);
        const std::vector<double> cot(8, 0.0);
        const auto grad = circuit_gradient(spec, params, x_angle, cot);
        for (double g : grad)
            CHECK(g == 0.0);
    }

    SUBCASE("gradient length equals the trainable count only") {
        const CircuitParams params = random_params(spec, rng, -2.0, 2.0);
        const auto grad =
            circuit_gradient(spec, params, 0.3, std::vector<double>(8, 1.0));
        CHECK(grad.size() == 36); // no entry for the embedding angle
    }
}

TEST_CASE("circuit argument validation") {
    const CircuitSpec spec = CircuitSpec::ring(3, 4);
    CircuitParams short_params{std::vector<double>(10, 0.0)};
    CHECK_THROWS_AS(run_circuit(spec, short_params, 0.0),
                    std::invalid_argument);
    CircuitParams ok{std::vector<double>(36, 0.0)};
    CHECK_THROWS_AS(
        circuit_gradient(spec, ok, 0.0, std::vector<double>(4, 0.0)),
        std::invalid_argument);
}
