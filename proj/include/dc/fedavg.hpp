#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"
#include "dc/metrics.hpp"
#include "dc/mlp.hpp"

namespace dc {

struct FedConfig {
    std::size_t local_epochs = 1;
    std::size_t batch_size = 32;
    std::size_t rounds = 24;
    std::uint64_t seed = 0;
    TrainConfig train;  // epochs, batch_size and seed are overridden per round
};

struct RoundLog {
    std::size_t round = 0;          // 1-based
    double holdout_accuracy = 0.0;  // -1 when no holdout was given
    double mean_local_loss = 0.0;   // sample-weighted over participants
};

struct FedUserData {
    Matrix x;
    std::vector<int> labels;
};

// Weighted mean of flat parameter vectors. Each coordinate is summed in
// value order so any permutation of the inputs gives bit-identical output.
inline std::vector<double> average_weights(const std::vector<std::vector<double>>& vectors,
                                           const std::vector<std::size_t>& counts) {
    if (vectors.empty()) throw InputError("average_weights: no vectors");
    if (counts.size() != vectors.size())
        throw InputError("average_weights: " + std::to_string(vectors.size()) + " vectors but " +
                         std::to_string(counts.size()) + " counts");
    const std::size_t dim = vectors.front().size();
    std::size_t total = 0;
    for (std::size_t v = 0; v < vectors.size(); ++v) {
        if (vectors[v].size() != dim)
            throw InputError("average_weights: vector " + std::to_string(v) + " has length " +
                             std::to_string(vectors[v].size()) + ", expected " +
                             std::to_string(dim));
        if (counts[v] == 0) throw InputError("average_weights: zero sample count");
        total += counts[v];
    }

    if (vectors.size() == 1) return vectors.front();

    std::vector<double> out(dim);
    std::vector<double> addends(vectors.size());
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t v = 0; v < vectors.size(); ++v)
            addends[v] =
                vectors[v][j] * (static_cast<double>(counts[v]) / static_cast<double>(total));
        std::sort(addends.begin(), addends.end());
        double s = 0.0;
        for (double a : addends) s += a;
        out[j] = s;
    }
    return out;
}

// Federated averaging over raw local datasets: every round each user takes
// local_epochs of minibatch steps from the shared global weights, then the
// server replaces them with the sample-weighted mean. Local optimizer state
// and shuffle streams persist across rounds; with a single user and one
// local epoch per round this reproduces plain training exactly.
inline std::pair<MlpModel, std::vector<RoundLog>> fedavg_run(
    const std::vector<FedUserData>& users, const FedConfig& cfg,
    const FedUserData* holdout = nullptr) {
    if (users.empty()) throw InputError("fedavg_run: no users");
    if (cfg.rounds < 1) throw InputError("fedavg_run: rounds must be at least 1");
    if (cfg.local_epochs < 1) throw InputError("fedavg_run: local_epochs must be at least 1");
    const std::size_t dim = users.front().x.cols();
    for (std::size_t i = 0; i < users.size(); ++i) {
        TrainConfig check = cfg.train;
        check.epochs = cfg.local_epochs;
        check.batch_size = cfg.batch_size;
        try {
            validate_train_inputs(users[i].x, users[i].labels, check);
        } catch (const InputError& e) {
            throw InputError("fedavg_run: user " + std::to_string(i) + ": " + e.what());
        }
        if (users[i].x.cols() != dim)
            throw InputError("fedavg_run: user " + std::to_string(i) + " has " +
                             std::to_string(users[i].x.cols()) + " features, user 0 has " +
                             std::to_string(dim));
    }

    TrainConfig local = cfg.train;
    local.batch_size = cfg.batch_size;
    local.seed = cfg.seed;

    Rng init_rng(mlp_init_stream(cfg.seed));
    MlpModel global = mlp_init(dim, local, init_rng);

    std::vector<MlpTrainer> trainers;
    trainers.reserve(users.size());
    for (std::size_t i = 0; i < users.size(); ++i)
        trainers.emplace_back(global, local, mlp_shuffle_stream(cfg.seed, i));

    std::vector<std::size_t> counts(users.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        counts[i] = users[i].x.rows();
        total += counts[i];
    }

    std::vector<RoundLog> log;
    std::vector<std::vector<double>> locals(users.size());
    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        double loss_sum = 0.0;
        for (std::size_t i = 0; i < users.size(); ++i) {
            trainers[i].set_model(global);
            TrainStats stats;
            try {
                stats = trainers[i].train(users[i].x, users[i].labels, cfg.local_epochs);
            } catch (const NumericalError& e) {
                throw NumericalError("fedavg_run: round " + std::to_string(round) + " user " +
                                     std::to_string(i) + ": " + e.what());
            }
            locals[i] = mlp_weights(trainers[i].model());
            loss_sum += stats.final_loss * static_cast<double>(counts[i]);
        }
        global = mlp_from_weights(global, average_weights(locals, counts));

        RoundLog entry;
        entry.round = round;
        entry.mean_local_loss = loss_sum / static_cast<double>(total);
        entry.holdout_accuracy =
            holdout ? accuracy(mlp_predict(global, holdout->x), holdout->labels) : -1.0;
        log.push_back(entry);
    }
    return {std::move(global), std::move(log)};
}

}  // namespace dc
