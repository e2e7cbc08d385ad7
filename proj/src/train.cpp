#include "qmdn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace qmdn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("learning_rate must be positive");
    }
    if (batch_size == 0 || epochs == 0 || ensemble_size == 0) {
        throw std::invalid_argument(
            "batch_size, epochs, and ensemble_size must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
        !(epsilon > 0.0)) {
        throw std::invalid_argument("invalid Adam constants");
    }
}

void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double beta1, double beta2,
               double epsilon) {
    const std::size_t n = params.size();
    if (grads.size() != n || state.m.size() != n || state.v.size() != n) {
        throw std::invalid_argument("adam_step: length mismatch");
    }
    state.t += 1;
    const double correction1 =
        1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double correction2 =
        1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / correction1;
        const double v_hat = state.v[i] / correction2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

namespace {

/// splitmix64 finalizer over (base, epoch): decorrelated shuffle seeds per
/// epoch that never collide across ensemble members' distinct bases.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t epoch) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (epoch + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void fisher_yates(std::vector<std::size_t>& order, Rng& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = rng.next_u64() % i;
        std::swap(order[i - 1], order[j]);
    }
}

void bind_bounds(double& x_min, double& x_max, const Dataset& ds) {
    if (ds.pairs.empty()) {
        throw std::invalid_argument("cannot bind a model to an empty dataset");
    }
    double lo = ds.pairs.front().first;
    double hi = lo;
    for (const auto& [x, y] : ds.pairs) {
        (void)y;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!(hi > lo)) {
        throw std::invalid_argument(
            "cannot bind a model to a dataset with a single x value");
    }
    x_min = lo;
    x_max = hi;
}

double width_unit(const Dataset& ds) {
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
    const double unit = 0.5 * std::sqrt(var);
    // constant-y dataset: fall back to the raw unit
    return unit > 0.0 ? unit : 1.0;
}

template <typename Model, typename BackwardFn>
TrainReport train_impl(Model model, const Dataset& ds, const TrainConfig& cfg,
                       Rng& rng, const char* kind, BackwardFn backward) {
    cfg.validate();
    if (ds.pairs.empty()) {
        throw std::invalid_argument("cannot train on an empty dataset");
    }
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = ds.pairs.size();
    const std::size_t n_params = model.params.size();
    AdamState state(n_params);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(n_params);
    const std::uint64_t shuffle_base = rng.next_u64();

    TrainReport report;
    report.model_kind = kind;
    report.seed = cfg.seed;
    report.loss_history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(shuffle_base, epoch));
        fisher_yates(order, shuffle_rng);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += cfg.batch_size) {
            const std::size_t size = std::min(cfg.batch_size, n - begin);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t j = 0; j < size; ++j) {
                const auto& [x, y] = ds.pairs[order[begin + j]];
                const BackwardResult sample = backward(model, x, y);
                batch_loss += sample.loss;
                for (std::size_t i = 0; i < n_params; ++i) {
                    grad[i] += sample.grad[i];
                }
            }
            const double scale = 1.0 / static_cast<double>(size);
            if (!std::isfinite(batch_loss)) {
                double norm = 0.0;
                for (double p : model.params) {
                    norm += p * p;
                }
                throw std::runtime_error(
                    "training diverged: non-finite loss at epoch " +
                    std::to_string(epoch) + ", batch " +
                    std::to_string(begin / cfg.batch_size) +
                    ", parameter norm " + std::to_string(std::sqrt(norm)));
            }
            for (double& g : grad) {
                g *= scale;
            }
            adam_step(model.params, grad, state, cfg.learning_rate, cfg.beta1,
                      cfg.beta2, cfg.epsilon);
            epoch_loss += batch_loss;
        }
        report.loss_history.push_back(epoch_loss / static_cast<double>(n));
    }
    report.final_params = std::move(model.params);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return report;
}

} // namespace

void bind_to_dataset(ClassicalMdn& model, const Dataset& ds) {
    bind_bounds(model.x_min, model.x_max, ds);
}

void bind_to_dataset(QMdn& model, const Dataset& ds) {
    bind_bounds(model.x_min, model.x_max, ds);
    model.sigma_scale = width_unit(ds);
}

TrainReport train_model(ClassicalMdn model, const Dataset& ds,
                        const TrainConfig& cfg, Rng& rng) {
    return train_impl(std::move(model), ds, cfg, rng, "classical",
                      [](const ClassicalMdn& m, double x, double y) {
                          return backward_classical(m, x, y);
                      });
}

TrainReport train_model(QMdn model, const Dataset& ds, const TrainConfig& cfg,
                        Rng& rng) {
    return train_impl(std::move(model), ds, cfg, rng, "qmdn",
                      [](const QMdn& m, double x, double y) {
                          return backward_qmdn(m, x, y);
                      });
}

std::vector<TrainReport> train_ensemble(const std::string& model_kind,
                                        const Dataset& ds,
                                        const TrainConfig& cfg) {
    cfg.validate();
    if (model_kind != "classical" && model_kind != "qmdn") {
        throw std::invalid_argument("unknown model kind '" + model_kind + "'");
    }
    std::vector<TrainReport> reports;
    reports.reserve(cfg.ensemble_size);
    for (std::size_t k = 0; k < cfg.ensemble_size; ++k) {
        TrainConfig member_cfg = cfg;
        member_cfg.seed = cfg.seed + k;
        Rng rng(member_cfg.seed);
        if (model_kind == "classical") {
            ClassicalMdn model = init_classical(rng);
            bind_to_dataset(model, ds);
            reports.push_back(train_model(std::move(model), ds, member_cfg, rng));
        } else {
            QMdn model = init_qmdn(rng);
            bind_to_dataset(model, ds);
            reports.push_back(train_model(std::move(model), ds, member_cfg, rng));
        }
    }
    return reports;
}

void save_report_json(const TrainReport& report,
                      const std::filesystem::path& path) {
    nlohmann::json j;
    j["model_kind"] = report.model_kind;
    j["seed"] = report.seed;
    j["epochs"] = report.loss_history.size();
    j["loss_history"] = report.loss_history;
    j["final_params"] = report.final_params;
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
}

TrainReport load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& err) {
        throw std::runtime_error(path.string() + ": " + err.what());
    }
    TrainReport report;
    try {
        report.model_kind = j.at("model_kind").get<std::string>();
        report.seed = j.at("seed").get<std::uint64_t>();
        report.loss_history = j.at("loss_history").get<std::vector<double>>();
        report.final_params = j.at("final_params").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& err) {
        throw std::runtime_error(path.string() + ": " + err.what());
    }
    if (report.loss_history.size() != j.at("epochs").get<std::size_t>()) {
        throw std::runtime_error(path.string() +
                                 ": loss history does not match epochs");
    }
    return report;
}

void save_loss_csv(const TrainReport& report,
                   const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "epoch,nll\n";
    char buf[40];
    for (std::size_t e = 0; e < report.loss_history.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%.17g", report.loss_history[e]);
        out << e + 1 << "," << buf << "\n";
    }
}

} // namespace qmdn
