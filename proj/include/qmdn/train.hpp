#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qmdn/data.hpp"
#include "qmdn/models.hpp"
#include "qmdn/rng.hpp"

namespace qmdn {

/// Optimization protocol: Adam over mini-batches of the mean NLL.
struct TrainConfig {
    double learning_rate = 5e-3;
    std::size_t batch_size = 64;
    std::size_t epochs = 100;
    std::size_t ensemble_size = 10;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

/// Adam moment accumulators for one parameter vector.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t t = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update, in place.
void adam_step(std::span<double> params, std::span<const double> grads,
               AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double epsilon = 1e-8);

/// Outcome of one training run. Wall-clock time is never serialized into
/// the machine-readable report, so reruns stay byte-identical.
struct TrainReport {
    std::string model_kind;
    std::uint64_t seed = 0;
    std::vector<double> loss_history; // one mean training NLL per epoch
    std::vector<double> final_params;
    double wall_seconds = 0.0;
};

/// Records the dataset's x range on the model. The quantum model embeds
/// inputs rescaled by these bounds and additionally gets its width unit set
/// to half the dataset's y standard deviation; the classical model consumes
/// raw inputs and keeps the bounds as domain metadata for evaluation
/// coverage checks.
void bind_to_dataset(ClassicalMdn& model, const Dataset& ds);
void bind_to_dataset(QMdn& model, const Dataset& ds);

/// Mini-batch NLL training. Per epoch: Fisher-Yates shuffle driven by an
/// epoch-derived seed (base drawn from `rng` once), batches of
/// cfg.batch_size (final partial batch kept at its true size), mean batch
/// gradient, one adam_step per batch. Aborts with a diagnostic on a
/// non-finite loss. The model must already be bound to the dataset.
TrainReport train_model(ClassicalMdn model, const Dataset& ds,
                        const TrainConfig& cfg, Rng& rng);
TrainReport train_model(QMdn model, const Dataset& ds, const TrainConfig& cfg,
                        Rng& rng);

/// Trains cfg.ensemble_size independently initialized models; member k uses
/// seed cfg.seed + k for initialization and shuffling.
/// model_kind is "classical" or "qmdn".
std::vector<TrainReport> train_ensemble(const std::string& model_kind,
                                        const Dataset& ds,
                                        const TrainConfig& cfg);

/// Run-file persistence: JSON without timing fields, and the loss history
/// as an `epoch,nll` CSV.
void save_report_json(const TrainReport& report,
                      const std::filesystem::path& path);
TrainReport load_report_json(const std::filesystem::path& path);
void save_loss_csv(const TrainReport& report,
                   const std::filesystem::path& path);

} // namespace qmdn
