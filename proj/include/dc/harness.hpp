#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dc/collab.hpp"
#include "dc/dataset.hpp"
#include "dc/error.hpp"
#include "dc/fedavg.hpp"
#include "dc/knn.hpp"
#include "dc/matrix.hpp"
#include "dc/metrics.hpp"
#include "dc/mlp.hpp"
#include "dc/reduction.hpp"
#include "dc/svm.hpp"

namespace dc {

struct DcParams {
    std::size_t ir_dim = 50;   // per-user intermediate dimension
    std::size_t anchors = 500;
    std::uint64_t anchor_seed = 424242;
    std::string classifier = "mlp";  // mlp | knn | svm
    std::size_t unified_dim = 0;     // 0 = smallest per-user dimension
    bool center = false;
    std::size_t knn_k = 5;
    double svm_c = 10.0;
    double svm_gamma = 0.01;
};

struct FedParams {
    std::size_t local_epochs = 1;
    std::size_t batch_size = 32;
    std::size_t rounds = 24;
};

struct ExperimentConfig {
    std::string images_path;
    std::string labels_path;
    std::vector<std::string> methods = {"centralized", "individual", "dc", "fedavg"};
    std::string sweep_axis = "users";  // users | samples | ir_dim | anchors
    std::vector<std::size_t> sweep_values = {10};
    std::size_t num_users = 10;
    std::size_t samples_per_user = 100;
    std::size_t holdout_size = 1000;
    DcParams dc;
    FedParams fed;
    TrainConfig train;
    std::size_t num_runs = 10;
    std::uint64_t base_seed = 20240;
    std::string out_dir = "results";
    std::size_t jobs = 1;
};

struct ExperimentRecord {
    std::string method;
    std::string sweep_axis;
    std::size_t sweep_value = 0;
    std::uint64_t seed = 0;  // partition seed of the run
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    double wall_time_s = 0.0;
    std::size_t total_steps = 0;
    std::string error;  // empty on success
};

struct SummaryRow {
    std::string method;
    std::string sweep_axis;
    std::size_t sweep_value = 0;
    std::size_t runs = 0;  // successful runs only
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population
};

struct RunOutcome {
    double accuracy = 0.0;
    std::size_t steps = 0;
};

inline void validate_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.methods.empty()) throw InputError("experiment: at least one method required");
    for (const std::string& m : cfg.methods)
        if (m != "centralized" && m != "individual" && m != "dc" && m != "fedavg")
            throw InputError("experiment: unknown method '" + m + "'");
    if (cfg.sweep_axis != "users" && cfg.sweep_axis != "samples" && cfg.sweep_axis != "ir_dim" &&
        cfg.sweep_axis != "anchors")
        throw InputError("experiment: unknown sweep axis '" + cfg.sweep_axis + "'");
    if (cfg.sweep_values.empty()) throw InputError("experiment: no sweep values");
    for (std::size_t v : cfg.sweep_values)
        if (v == 0) throw InputError("experiment: sweep values must be positive");
    if (cfg.dc.classifier != "mlp" && cfg.dc.classifier != "knn" && cfg.dc.classifier != "svm")
        throw InputError("experiment: unknown dc classifier '" + cfg.dc.classifier + "'");
    if (cfg.num_runs == 0) throw InputError("experiment: num_runs must be positive");
    if (cfg.jobs == 0) throw InputError("experiment: jobs must be positive");
    if (cfg.images_path.empty() || cfg.labels_path.empty())
        throw InputError("experiment: dataset paths required");
}

// Pools every user's rows into one training set.
inline RunOutcome run_centralized(const Partition& partition, const TrainConfig& train_cfg) {
    std::vector<Matrix> blocks;
    std::vector<int> labels;
    for (const LabeledData& u : partition.users) {
        blocks.push_back(u.x);
        labels.insert(labels.end(), u.labels.begin(), u.labels.end());
    }
    const Matrix x = vstack(blocks);
    TrainStats stats;
    const MlpModel model = mlp_train(x, labels, train_cfg, std::nullopt, &stats);
    return {accuracy(mlp_predict(model, partition.holdout.x), partition.holdout.labels),
            stats.steps};
}

// Trains on the first user's rows only.
inline RunOutcome run_individual(const Partition& partition, const TrainConfig& train_cfg) {
    if (partition.users.empty()) throw InputError("run_individual: no users");
    const LabeledData& u = partition.users.front();
    TrainStats stats;
    const MlpModel model = mlp_train(u.x, u.labels, train_cfg, std::nullopt, &stats);
    return {accuracy(mlp_predict(model, partition.holdout.x), partition.holdout.labels),
            stats.steps};
}

// Full collaboration pipeline plus the chosen downstream classifier. The
// holdout is projected through the first user's pipeline.
inline RunOutcome run_dc(const Partition& partition, const DcParams& params,
                         const TrainConfig& train_cfg) {
    if (partition.users.empty()) throw InputError("run_dc: no users");
    std::vector<UserData> users;
    users.reserve(partition.users.size());
    for (const LabeledData& u : partition.users) users.push_back({u.x, u.labels});

    const AnchorSet anchors =
        generate_anchors(params.anchors, users.front().x.cols(), params.anchor_seed);
    const std::vector<std::size_t> dims(users.size(), params.ir_dim);
    const DcResult dc = dc_run(users, anchors, dims, params.unified_dim, params.center);
    const Matrix holdout_hat = transform_new(dc.pipelines.front(), partition.holdout.x);

    if (params.classifier == "mlp") {
        TrainStats stats;
        const MlpModel model = mlp_train(dc.x_hat, dc.labels, train_cfg, std::nullopt, &stats);
        return {accuracy(mlp_predict(model, holdout_hat), partition.holdout.labels), stats.steps};
    }
    if (params.classifier == "knn") {
        const std::vector<int> pred = knn_predict(dc.x_hat, dc.labels, holdout_hat, params.knn_k);
        return {accuracy(pred, partition.holdout.labels), 0};
    }
    if (params.classifier == "svm") {
        const SvmModel model = svm_train(dc.x_hat, dc.labels, params.svm_c, params.svm_gamma);
        return {accuracy(svm_predict(model, holdout_hat), partition.holdout.labels),
                model.total_iterations};
    }
    throw InputError("run_dc: unknown classifier '" + params.classifier + "'");
}

// Weight-averaging baseline on the raw per-user data.
inline RunOutcome run_fedavg(const Partition& partition, const FedParams& params,
                             const TrainConfig& train_cfg) {
    std::vector<FedUserData> users;
    users.reserve(partition.users.size());
    for (const LabeledData& u : partition.users) users.push_back({u.x, u.labels});

    FedConfig cfg;
    cfg.local_epochs = params.local_epochs;
    cfg.batch_size = params.batch_size;
    cfg.rounds = params.rounds;
    cfg.seed = train_cfg.seed;
    cfg.train = train_cfg;

    auto [model, log] = fedavg_run(users, cfg);
    std::size_t batches = 0;
    for (const FedUserData& u : users)
        batches += (u.x.rows() + params.batch_size - 1) / params.batch_size;
    const std::size_t steps = params.rounds * params.local_epochs * batches;
    return {accuracy(mlp_predict(model, partition.holdout.x), partition.holdout.labels), steps};
}

namespace detail {

inline ExperimentConfig apply_sweep(ExperimentConfig cfg, std::size_t value) {
    if (cfg.sweep_axis == "users")
        cfg.num_users = value;
    else if (cfg.sweep_axis == "samples")
        cfg.samples_per_user = value;
    else if (cfg.sweep_axis == "ir_dim")
        cfg.dc.ir_dim = value;
    else
        cfg.dc.anchors = value;
    return cfg;
}

}  // namespace detail

// Runs the full grid: every sweep value x num_runs seeded repetitions x
// every method. Within one (value, run) cell all methods share the same
// partition. Cells run in parallel when cfg.jobs > 1; the optional sink
// receives each record as it completes (serialized, order not guaranteed),
// while the returned list is always in canonical value/run/method order.
inline std::vector<ExperimentRecord> run_experiment(
    const ExperimentConfig& cfg,
    const std::function<void(const ExperimentRecord&)>& sink = nullptr) {
    validate_experiment_config(cfg);
    const LabeledData data = load_idx(cfg.images_path, cfg.labels_path);

    const std::size_t cells = cfg.sweep_values.size() * cfg.num_runs;
    const std::size_t per_cell = cfg.methods.size();
    std::vector<ExperimentRecord> records(cells * per_cell);

    std::mutex sink_mutex;
    std::atomic<std::size_t> next_cell{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t cell = next_cell.fetch_add(1);
            if (cell >= cells) return;
            const std::size_t value_idx = cell / cfg.num_runs;
            const std::size_t run = cell % cfg.num_runs;
            const std::size_t value = cfg.sweep_values[value_idx];
            const ExperimentConfig local = detail::apply_sweep(cfg, value);
            const std::uint64_t partition_seed = cfg.base_seed + run;
            const std::uint64_t model_seed = cfg.base_seed + 10000 + run;

            Partition partition;
            std::string partition_error;
            try {
                partition = make_partition(data, local.num_users, local.samples_per_user,
                                           partition_seed, local.holdout_size);
            } catch (const std::exception& e) {
                partition_error = e.what();
            }

            TrainConfig train_cfg = local.train;
            train_cfg.seed = model_seed;

            for (std::size_t m = 0; m < per_cell; ++m) {
                ExperimentRecord rec;
                rec.method = cfg.methods[m];
                rec.sweep_axis = cfg.sweep_axis;
                rec.sweep_value = value;
                rec.seed = partition_seed;
                const auto start = std::chrono::steady_clock::now();
                try {
                    if (!partition_error.empty()) throw InputError(partition_error);
                    RunOutcome out;
                    if (rec.method == "centralized")
                        out = run_centralized(partition, train_cfg);
                    else if (rec.method == "individual")
                        out = run_individual(partition, train_cfg);
                    else if (rec.method == "dc")
                        out = run_dc(partition, local.dc, train_cfg);
                    else
                        out = run_fedavg(partition, local.fed, train_cfg);
                    rec.accuracy = out.accuracy;
                    rec.total_steps = out.steps;
                } catch (const std::exception& e) {
                    rec.error = e.what();
                }
                rec.wall_time_s =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
                records[cell * per_cell + m] = rec;
                if (sink) {
                    const std::lock_guard<std::mutex> lock(sink_mutex);
                    sink(records[cell * per_cell + m]);
                }
            }
        }
    };

    const std::size_t threads = std::min(cfg.jobs, cells);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return records;
}

// Groups successful records by (method, sweep value) in first-appearance
// order and reports mean plus population standard deviation.
inline std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records) {
    if (records.empty()) throw InputError("summarize: no records");
    std::vector<SummaryRow> rows;
    std::vector<std::vector<double>> groups;
    for (const ExperimentRecord& rec : records) {
        if (!rec.error.empty()) continue;
        std::size_t g = rows.size();
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (rows[i].method == rec.method && rows[i].sweep_axis == rec.sweep_axis &&
                rows[i].sweep_value == rec.sweep_value) {
                g = i;
                break;
            }
        if (g == rows.size()) {
            SummaryRow row;
            row.method = rec.method;
            row.sweep_axis = rec.sweep_axis;
            row.sweep_value = rec.sweep_value;
            rows.push_back(row);
            groups.emplace_back();
        }
        groups[g].push_back(rec.accuracy);
    }
    for (std::size_t g = 0; g < rows.size(); ++g) {
        const std::vector<double>& acc = groups[g];
        rows[g].runs = acc.size();
        double mean = 0.0;
        for (double a : acc) mean += a;
        mean /= static_cast<double>(acc.size());
        double var = 0.0;
        for (double a : acc) var += (a - mean) * (a - mean);
        var /= static_cast<double>(acc.size());
        rows[g].mean_accuracy = mean;
        rows[g].std_accuracy = std::sqrt(var);
    }
    return rows;
}

}  // namespace dc
