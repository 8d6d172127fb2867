#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dc/dataset.hpp"
#include "dc/fedavg.hpp"
#include "dc/harness.hpp"
#include "dc/io.hpp"
#include "dc/mlp.hpp"

namespace {

struct Overrides {
    std::optional<std::size_t> users;
    std::optional<std::size_t> samples;
    std::optional<std::size_t> ir_dim;
    std::optional<std::size_t> anchors;
    std::optional<std::size_t> runs;
    std::vector<std::string> methods;
    std::optional<std::size_t> jobs;
    std::string config_path;
    std::string out_dir;
    bool verbose = false;
};

std::vector<std::size_t> range(std::size_t from, std::size_t to, std::size_t step) {
    std::vector<std::size_t> v;
    for (std::size_t x = from; x <= to; x += step) v.push_back(x);
    return v;
}

// Built-in experiment families. type1 grows the number of users at a fixed
// per-user budget, type2 grows the per-user budget for a fixed user count,
// params sweeps the collaboration hyperparameters (two sweeps: intermediate
// dimension, then anchor count).
std::vector<dc::ExperimentConfig> defaults_for(const std::string& type) {
    dc::ExperimentConfig base;
    base.out_dir = "results/" + type;
    if (type == "type1") {
        base.sweep_axis = "users";
        base.sweep_values = range(1, 10, 1);
        base.samples_per_user = 100;
        return {base};
    }
    if (type == "type2") {
        base.sweep_axis = "samples";
        base.sweep_values = range(100, 1000, 100);
        base.num_users = 5;
        return {base};
    }
    // params
    base.methods = {"dc"};
    base.num_users = 10;
    base.samples_per_user = 100;
    dc::ExperimentConfig ir = base;
    ir.sweep_axis = "ir_dim";
    ir.sweep_values = {5, 10, 25, 50, 100};
    dc::ExperimentConfig anchors = base;
    anchors.sweep_axis = "anchors";
    anchors.sweep_values = {50, 100, 500, 1000, 2000};
    return {ir, anchors};
}

// Command-line values beat config-file values beat built-in defaults. When
// an override targets the axis being swept it reshapes the sweep itself:
// --users N turns a user sweep into 1..N, the other axes collapse to the
// given single value.
void apply_overrides(dc::ExperimentConfig& cfg, const Overrides& ov, bool sweep_aware) {
    auto on_axis = [&](const char* axis) { return sweep_aware && cfg.sweep_axis == axis; };
    if (ov.users) {
        if (on_axis("users"))
            cfg.sweep_values = range(1, *ov.users, 1);
        else
            cfg.num_users = *ov.users;
    }
    if (ov.samples) {
        if (on_axis("samples"))
            cfg.sweep_values = {*ov.samples};
        else
            cfg.samples_per_user = *ov.samples;
    }
    if (ov.ir_dim) {
        if (on_axis("ir_dim"))
            cfg.sweep_values = {*ov.ir_dim};
        else
            cfg.dc.ir_dim = *ov.ir_dim;
    }
    if (ov.anchors) {
        if (on_axis("anchors"))
            cfg.sweep_values = {*ov.anchors};
        else
            cfg.dc.anchors = *ov.anchors;
    }
    if (ov.runs) cfg.num_runs = *ov.runs;
    if (!ov.methods.empty()) cfg.methods = ov.methods;
    if (ov.jobs) cfg.jobs = *ov.jobs;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
}

// Fills in dataset paths from DC_DATA_DIR (or ./data/mnist) when the config
// does not pin them, then insists the files exist.
void resolve_dataset(dc::ExperimentConfig& cfg) {
    if (cfg.images_path.empty() || cfg.labels_path.empty()) {
        const char* env = std::getenv("DC_DATA_DIR");
        const std::filesystem::path root = env ? env : "data/mnist";
        if (cfg.images_path.empty())
            cfg.images_path = (root / "train-images-idx3-ubyte.gz").string();
        if (cfg.labels_path.empty())
            cfg.labels_path = (root / "train-labels-idx1-ubyte.gz").string();
    }
    for (const std::string& path : {cfg.images_path, cfg.labels_path})
        if (!std::filesystem::exists(path))
            throw dc::InputError("dataset file not found: " + path);
}

dc::ExperimentConfig resolve_single(const dc::ExperimentConfig& defaults, const Overrides& ov) {
    dc::ExperimentConfig cfg = defaults;
    if (!ov.config_path.empty()) dc::apply_config_file(cfg, ov.config_path);
    apply_overrides(cfg, ov, false);
    resolve_dataset(cfg);
    return cfg;
}

void print_summary(const std::vector<dc::SummaryRow>& rows) {
    std::cout << std::left << std::setw(14) << "method" << std::setw(10) << "axis" << std::right
              << std::setw(8) << "value" << std::setw(6) << "runs" << std::setw(12) << "mean"
              << std::setw(12) << "std" << "\n";
    for (const dc::SummaryRow& row : rows)
        std::cout << std::left << std::setw(14) << row.method << std::setw(10) << row.sweep_axis
                  << std::right << std::setw(8) << row.sweep_value << std::setw(6) << row.runs
                  << std::setw(12) << std::fixed << std::setprecision(4) << row.mean_accuracy
                  << std::setw(12) << row.std_accuracy << "\n";
}

int cmd_experiment(const std::string& type, const Overrides& ov) {
    std::vector<dc::ExperimentConfig> configs = defaults_for(type);
    for (dc::ExperimentConfig& cfg : configs) {
        if (!ov.config_path.empty()) dc::apply_config_file(cfg, ov.config_path);
        apply_overrides(cfg, ov, true);
        resolve_dataset(cfg);
        dc::validate_experiment_config(cfg);
    }

    const std::filesystem::path out = configs.front().out_dir;
    std::filesystem::create_directories(out);
    {
        nlohmann::json echo = nlohmann::json::array();
        for (const dc::ExperimentConfig& cfg : configs) echo.push_back(dc::config_to_json(cfg));
        std::ofstream(out / "config.json") << echo.dump(2) << "\n";
    }

    // Records stream to disk as cells finish so an interrupted sweep still
    // leaves usable rows; the file is rewritten in canonical order at the end.
    std::ofstream live = dc::start_records_csv((out / "records.csv").string());
    std::vector<dc::ExperimentRecord> all;
    for (const dc::ExperimentConfig& cfg : configs) {
        std::cout << "sweep " << cfg.sweep_axis << ": " << cfg.sweep_values.size()
                  << " values x " << cfg.num_runs << " runs x " << cfg.methods.size()
                  << " methods\n";
        const auto records = dc::run_experiment(cfg, [&](const dc::ExperimentRecord& rec) {
            live << dc::record_csv_line(rec) << "\n" << std::flush;
            if (!rec.error.empty())
                std::cerr << "error: " << rec.method << " " << rec.sweep_axis << "="
                          << rec.sweep_value << " seed=" << rec.seed << ": " << rec.error << "\n";
            else if (ov.verbose)
                std::cerr << rec.method << " " << rec.sweep_axis << "=" << rec.sweep_value
                          << " seed=" << rec.seed << " accuracy=" << rec.accuracy << " ("
                          << std::setprecision(1) << std::fixed << rec.wall_time_s << "s)\n"
                          << std::defaultfloat << std::setprecision(6);
        });
        all.insert(all.end(), records.begin(), records.end());
    }
    live.close();

    dc::write_records_csv((out / "records.csv").string(), all);
    dc::write_records_json((out / "records.json").string(), all);
    const std::vector<dc::SummaryRow> rows = dc::summarize(all);
    dc::write_summary_csv((out / "summary.csv").string(), rows);
    print_summary(rows);
    std::cout << "results in " << out.string() << "\n";
    return 0;
}

int cmd_dc_once(const Overrides& ov) {
    dc::ExperimentConfig base = defaults_for("type1").front();
    base.out_dir = "results/dc-once";
    const dc::ExperimentConfig cfg = resolve_single(base, ov);

    const dc::LabeledData data = dc::load_idx(cfg.images_path, cfg.labels_path);
    const dc::Partition partition = dc::make_partition(data, cfg.num_users, cfg.samples_per_user,
                                                       cfg.base_seed, cfg.holdout_size);
    dc::TrainConfig train_cfg = cfg.train;
    train_cfg.seed = cfg.base_seed + 10000;

    const auto start = std::chrono::steady_clock::now();
    const dc::RunOutcome out = dc::run_dc(partition, cfg.dc, train_cfg);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "dc " << cfg.dc.classifier << ": users=" << cfg.num_users
              << " samples=" << cfg.samples_per_user << " ir_dim=" << cfg.dc.ir_dim
              << " anchors=" << cfg.dc.anchors << "\n"
              << "accuracy " << out.accuracy << "\n"
              << "steps " << out.steps << "\n"
              << "wall_time_s " << elapsed << "\n";
    return 0;
}

int cmd_fedavg_once(const Overrides& ov) {
    dc::ExperimentConfig base = defaults_for("type1").front();
    base.out_dir = "results/fedavg-once";
    const dc::ExperimentConfig cfg = resolve_single(base, ov);

    const dc::LabeledData data = dc::load_idx(cfg.images_path, cfg.labels_path);
    const dc::Partition partition = dc::make_partition(data, cfg.num_users, cfg.samples_per_user,
                                                       cfg.base_seed, cfg.holdout_size);

    dc::FedConfig fed;
    fed.local_epochs = cfg.fed.local_epochs;
    fed.batch_size = cfg.fed.batch_size;
    fed.rounds = cfg.fed.rounds;
    fed.seed = cfg.base_seed + 10000;
    fed.train = cfg.train;
    std::vector<dc::FedUserData> users;
    for (const dc::LabeledData& u : partition.users) users.push_back({u.x, u.labels});
    const dc::FedUserData holdout{partition.holdout.x, partition.holdout.labels};

    const auto start = std::chrono::steady_clock::now();
    const auto [model, curve] = dc::fedavg_run(users, fed, &holdout);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path curve_path =
        std::filesystem::path(cfg.out_dir) / "fedavg_curve.csv";
    {
        std::ofstream out(curve_path);
        if (!out) throw dc::InputError("cannot open '" + curve_path.string() + "' for writing");
        out << "round,holdout_accuracy,mean_local_loss\n";
        for (const dc::RoundLog& log : curve) {
            char acc[40], loss[40];
            std::snprintf(acc, sizeof acc, "%.17g", log.holdout_accuracy);
            std::snprintf(loss, sizeof loss, "%.17g", log.mean_local_loss);
            out << log.round << "," << acc << "," << loss << "\n";
        }
    }

    std::cout << "fedavg: users=" << cfg.num_users << " samples=" << cfg.samples_per_user
              << " rounds=" << cfg.fed.rounds << " local_epochs=" << cfg.fed.local_epochs << "\n"
              << "accuracy " << curve.back().holdout_accuracy << "\n"
              << "wall_time_s " << elapsed << "\n"
              << "curve " << curve_path.string() << "\n";
    return 0;
}

int cmd_inspect_idx(const std::string& path) {
    dc::detail::GzFile file(path, "rb");
    const std::uint32_t magic = file.read_be32();
    if (magic == 0x00000803u) {
        const std::uint32_t count = file.read_be32();
        const std::uint32_t rows = file.read_be32();
        const std::uint32_t cols = file.read_be32();
        std::cout << "magic 2051 (idx3 images)\ncount " << count << "\ndims " << rows << " x "
                  << cols << "\n";
        return 0;
    }
    if (magic == 0x00000801u) {
        const std::uint32_t count = file.read_be32();
        std::cout << "magic 2049 (idx1 labels)\ncount " << count << "\n";
        return 0;
    }
    std::cerr << path << ": unrecognized magic " << magic << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data collaboration simulator"};
    app.require_subcommand(1);
    Overrides ov;

    auto add_common = [&ov](CLI::App* sub) {
        sub->add_option("--config", ov.config_path, "JSON config overlaying the defaults");
        sub->add_option("--out", ov.out_dir, "output directory");
        sub->add_option("--users", ov.users, "user count (reshapes a user sweep to 1..N)");
        sub->add_option("--samples", ov.samples, "samples per user");
        sub->add_option("--ir-dim", ov.ir_dim, "intermediate dimension");
        sub->add_option("--anchors", ov.anchors, "anchor count");
        sub->add_option("--runs", ov.runs, "seeded repetitions per sweep value");
        sub->add_option("--method", ov.methods, "method subset (repeatable)")
            ->check(CLI::IsMember({"centralized", "individual", "dc", "fedavg"}));
        sub->add_option("--jobs", ov.jobs, "parallel sweep cells");
        sub->add_flag("--verbose", ov.verbose, "log each record as it completes");
    };

    std::string exp_type;
    CLI::App* exp = app.add_subcommand("experiment", "run a sweep family");
    exp->add_option("type", exp_type, "type1 | type2 | params")
        ->required()
        ->check(CLI::IsMember({"type1", "type2", "params"}));
    add_common(exp);

    CLI::App* dc_once = app.add_subcommand("dc-once", "single collaboration run");
    add_common(dc_once);
    CLI::App* fed_once = app.add_subcommand("fedavg-once", "single fedavg run with round curve");
    add_common(fed_once);

    std::string idx_path;
    CLI::App* inspect = app.add_subcommand("inspect-idx", "print idx file header");
    inspect->add_option("path", idx_path, "idx file, raw or gzip")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (exp->parsed()) return cmd_experiment(exp_type, ov);
        if (dc_once->parsed()) return cmd_dc_once(ov);
        if (fed_once->parsed()) return cmd_fedavg_once(ov);
        return cmd_inspect_idx(idx_path);
    } catch (const dc::InputError& e) {
        std::cerr << "dcsim: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "dcsim: " << e.what() << "\n";
        return 2;
    }
}
