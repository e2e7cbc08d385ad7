#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "qmdn/data.hpp"
#include "qmdn/models.hpp"
#include "qmdn/rng.hpp"
#include "qmdn/train.hpp"

using qmdn::AdamState;
using qmdn::ClassicalMdn;
using qmdn::Dataset;
using qmdn::QMdn;
using qmdn::Rng;
using qmdn::TrainConfig;
using qmdn::TrainReport;

namespace {

/// First few logistic-grid columns: small but multi-x and multimodal.
Dataset small_logistic(std::size_t n_x) {
    Dataset full = qmdn::gen_logistic();
    Dataset ds;
    ds.meta = full.meta;
    ds.pairs.assign(full.pairs.begin(),
                    full.pairs.begin() + static_cast<long>(n_x * 100));
    ds.meta.n = ds.pairs.size();
    return ds;
}

TrainConfig quick_config(std::size_t epochs, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("adam_step basics and scalar reference agreement") {
    std::vector<double> params{1.0, -2.0};
    AdamState state(2);
    const std::vector<double> zero{0.0, 0.0};
    qmdn::adam_step(params, zero, state, 5e-3);
    CHECK(params[0] == 1.0);
    CHECK(params[1] == -2.0);
    CHECK(state.t == 1);

    // First step moves each coordinate by ~lr in the gradient's direction.
    std::vector<double> fresh{1.0, -2.0};
    AdamState fresh_state(2);
    const std::vector<double> grad{0.5, -3.0};
    qmdn::adam_step(fresh, grad, fresh_state, 5e-3);
    CHECK(fresh[0] == doctest::Approx(1.0 - 5e-3).epsilon(1e-6));
    CHECK(fresh[1] == doctest::Approx(-2.0 + 5e-3).epsilon(1e-6));

    // 100 steps on f(w) = w^2 against an independent scalar Adam.
    std::vector<double> w{1.0};
    AdamState ws(1);
    double ref_w = 1.0, ref_m = 0.0, ref_v = 0.0;
    double prev = 1.0;
    for (int t = 1; t <= 100; ++t) {
        const double g = 2.0 * w[0];
        qmdn::adam_step(w, std::vector<double>{g}, ws, 5e-3);

        const double ref_g = 2.0 * ref_w;
        ref_m = 0.9 * ref_m + 0.1 * ref_g;
        ref_v = 0.999 * ref_v + 0.001 * ref_g * ref_g;
        const double m_hat = ref_m / (1.0 - std::pow(0.9, t));
        const double v_hat = ref_v / (1.0 - std::pow(0.999, t));
        ref_w -= 5e-3 * m_hat / (std::sqrt(v_hat) + 1e-8);
        CHECK(std::abs(w[0] - ref_w) < 1e-12);
        if (t > 5) {
            CHECK(std::abs(w[0]) < std::abs(prev));
        }
        prev = w[0];
    }
    CHECK(std::abs(w[0]) < 0.7);

    AdamState bad(3);
    std::vector<double> two{0.0, 0.0};
    CHECK_THROWS_AS(qmdn::adam_step(two, grad, bad, 5e-3),
                    std::invalid_argument);
}

TEST_CASE("binding models to datasets fixes normalization and width unit") {
    const Dataset ds = qmdn::gen_logistic();
    double mean = 0.0;
    for (const auto& [x, y] : ds.pairs) {
        (void)x;
        mean += y;
    }
    mean /= static_cast<double>(ds.pairs.size());
    double var = 0.0;
    for (const auto& [x, y] : ds.pairs) {
        (void)x;
        var += (y - mean) * (y - mean);
    }
    var /= static_cast<double>(ds.pairs.size());

    Rng rng(1);
    QMdn model = qmdn::init_qmdn(rng);
    qmdn::bind_to_dataset(model, ds);
    CHECK(model.x_min == 2.5);
    CHECK(model.x_max == doctest::Approx(3.99).epsilon(1e-12));
    CHECK(model.sigma_scale ==
          doctest::Approx(0.5 * std::sqrt(var)).epsilon(1e-12));

    ClassicalMdn cls = qmdn::init_classical(rng);
    qmdn::bind_to_dataset(cls, ds);
    CHECK(cls.x_min == model.x_min);
    CHECK(cls.x_max == model.x_max);

    Dataset empty;
    CHECK_THROWS_AS(qmdn::bind_to_dataset(cls, empty), std::invalid_argument);
    Dataset flat;
    flat.pairs = {{1.0, 0.1}, {1.0, 0.7}};
    CHECK_THROWS_AS(qmdn::bind_to_dataset(cls, flat), std::invalid_argument);
}

TEST_CASE("training runs are seeded, finite, and improve the loss") {
    const Dataset ds = small_logistic(2);
    const TrainConfig cfg = quick_config(15, 5);

    auto run = [&]() {
        Rng rng(cfg.seed);
        ClassicalMdn model = qmdn::init_classical(rng);
        qmdn::bind_to_dataset(model, ds);
        return qmdn::train_model(std::move(model), ds, cfg, rng);
    };
    const TrainReport a = run();
    const TrainReport b = run();
    REQUIRE(a.loss_history.size() == 15);
    REQUIRE(a.final_params.size() == 100);
    CHECK(a.model_kind == "classical");
    CHECK(a.seed == 5);
    for (std::size_t e = 0; e < a.loss_history.size(); ++e) {
        CHECK(std::isfinite(a.loss_history[e]));
        CHECK(a.loss_history[e] == b.loss_history[e]);
    }
    for (std::size_t i = 0; i < a.final_params.size(); ++i) {
        CHECK(a.final_params[i] == b.final_params[i]);
    }
    CHECK(a.loss_history.back() < a.loss_history.front());
    CHECK(a.wall_seconds >= 0.0);

    // Single-epoch histories have exactly one entry; zero epochs are a
    // configuration error.
    Rng rng_one(5);
    ClassicalMdn one_model = qmdn::init_classical(rng_one);
    qmdn::bind_to_dataset(one_model, ds);
    const TrainReport one = qmdn::train_model(std::move(one_model), ds,
                                              quick_config(1, 5), rng_one);
    CHECK(one.loss_history.size() == 1);

    Rng rng_zero(5);
    ClassicalMdn zero_model = qmdn::init_classical(rng_zero);
    qmdn::bind_to_dataset(zero_model, ds);
    CHECK_THROWS_AS(qmdn::train_model(std::move(zero_model), ds,
                                      quick_config(0, 5), rng_zero),
                    std::invalid_argument);
}

TEST_CASE("quantum training is deterministic too") {
    Dataset ds = small_logistic(2);
    ds.pairs.resize(120);
    const TrainConfig cfg = quick_config(2, 9);
    auto run = [&]() {
        Rng rng(cfg.seed);
        QMdn model = qmdn::init_qmdn(rng);
        qmdn::bind_to_dataset(model, ds);
        return qmdn::train_model(std::move(model), ds, cfg, rng);
    };
    const TrainReport a = run();
    const TrainReport b = run();
    REQUIRE(a.final_params.size() == 108);
    CHECK(a.model_kind == "qmdn");
    for (std::size_t e = 0; e < a.loss_history.size(); ++e) {
        CHECK(a.loss_history[e] == b.loss_history[e]);
    }
    for (std::size_t i = 0; i < a.final_params.size(); ++i) {
        CHECK(a.final_params[i] == b.final_params[i]);
    }
}

TEST_CASE("non-finite losses abort with a located diagnostic") {
    Dataset ds = small_logistic(1);
    ds.pairs[37].second = std::nan("");
    Rng rng(2);
    ClassicalMdn model = qmdn::init_classical(rng);
    model.x_min = 2.4; // bind by hand; the NaN row poisons the statistics
    model.x_max = 2.6;
    try {
        qmdn::train_model(std::move(model), ds, quick_config(3, 2), rng);
        FAIL("expected a divergence error");
    } catch (const std::runtime_error& err) {
        const std::string msg = err.what();
        CHECK(msg.find("epoch") != std::string::npos);
        CHECK(msg.find("batch") != std::string::npos);
        CHECK(msg.find("parameter norm") != std::string::npos);
    }
}

TEST_CASE("ensembles fan out seeds and reduce to single runs") {
    const Dataset ds = small_logistic(2);
    TrainConfig cfg = quick_config(3, 11);
    cfg.ensemble_size = 1;
    const std::vector<TrainReport> solo =
        qmdn::train_ensemble("classical", ds, cfg);
    REQUIRE(solo.size() == 1);

    Rng rng(11);
    ClassicalMdn model = qmdn::init_classical(rng);
    qmdn::bind_to_dataset(model, ds);
    const TrainReport direct = qmdn::train_model(std::move(model), ds, cfg, rng);
    for (std::size_t e = 0; e < direct.loss_history.size(); ++e) {
        CHECK(solo[0].loss_history[e] == direct.loss_history[e]);
    }
    for (std::size_t i = 0; i < direct.final_params.size(); ++i) {
        CHECK(solo[0].final_params[i] == direct.final_params[i]);
    }

    cfg.ensemble_size = 3;
    const std::vector<TrainReport> trio =
        qmdn::train_ensemble("classical", ds, cfg);
    REQUIRE(trio.size() == 3);
    CHECK(trio[0].seed == 11);
    CHECK(trio[1].seed == 12);
    CHECK(trio[2].seed == 13);
    CHECK(trio[0].loss_history.back() != trio[1].loss_history.back());
    CHECK(trio[1].loss_history.back() != trio[2].loss_history.back());

    CHECK_THROWS_AS(qmdn::train_ensemble("boltzmann", ds, cfg),
                    std::invalid_argument);
}

TEST_CASE("reports round-trip through JSON without timing fields") {
    const Dataset ds = small_logistic(2);
    TrainConfig cfg = quick_config(4, 21);
    Rng rng(21);
    ClassicalMdn model = qmdn::init_classical(rng);
    qmdn::bind_to_dataset(model, ds);
    const TrainReport report =
        qmdn::train_model(std::move(model), ds, cfg, rng);

    const std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "qmdn_train_test";
    std::filesystem::create_directories(dir);
    const std::filesystem::path json_path = dir / "run.json";
    qmdn::save_report_json(report, json_path);
    const TrainReport back = qmdn::load_report_json(json_path);
    CHECK(back.model_kind == report.model_kind);
    CHECK(back.seed == report.seed);
    REQUIRE(back.loss_history.size() == report.loss_history.size());
    for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
        CHECK(back.loss_history[e] == report.loss_history[e]);
    }
    REQUIRE(back.final_params.size() == report.final_params.size());
    for (std::size_t i = 0; i < report.final_params.size(); ++i) {
        CHECK(back.final_params[i] == report.final_params[i]);
    }
    CHECK(back.wall_seconds == 0.0);

    std::ifstream in(json_path);
    std::stringstream text;
    text << in.rdbuf();
    CHECK(text.str().find("wall") == std::string::npos);
    CHECK(text.str().find("seconds") == std::string::npos);

    const std::filesystem::path csv_path = dir / "loss.csv";
    qmdn::save_loss_csv(report, csv_path);
    std::ifstream csv(csv_path);
    std::string line;
    REQUIRE(std::getline(csv, line));
    CHECK(line == "epoch,nll");
    std::size_t rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        CHECK(line.find(',') != std::string::npos);
    }
    CHECK(rows == 4);

    std::ofstream bad(dir / "bad.json");
    bad << "{ not json";
    bad.close();
    CHECK_THROWS_AS(qmdn::load_report_json(dir / "bad.json"),
                    std::runtime_error);
    CHECK_THROWS_AS(qmdn::load_report_json(dir / "missing.json"),
                    std::runtime_error);
    std::filesystem::remove_all(dir);
}
