#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dc/error.hpp"
#include "dc/harness.hpp"

namespace dc {

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path, std::ios_base::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace detail

inline const char* kRecordCsvHeader = "method,sweep_axis,sweep_value,seed,accuracy,wall_time_s,total_steps";

inline std::string record_csv_line(const ExperimentRecord& rec) {
    return rec.method + "," + rec.sweep_axis + "," + std::to_string(rec.sweep_value) + "," +
           std::to_string(rec.seed) + "," + detail::fmt_double(rec.accuracy) + "," +
           detail::fmt_double(rec.wall_time_s) + "," + std::to_string(rec.total_steps);
}

inline void write_records_csv(const std::string& path,
                              const std::vector<ExperimentRecord>& records) {
    std::ofstream out = detail::open_out(path, std::ios_base::trunc);
    out << kRecordCsvHeader << "\n";
    for (const ExperimentRecord& rec : records) out << record_csv_line(rec) << "\n";
}

// Starts an append-as-you-go record file so partial sweeps survive an
// interrupted run. Returns the stream; pair with record_csv_line.
inline std::ofstream start_records_csv(const std::string& path) {
    std::ofstream out = detail::open_out(path, std::ios_base::trunc);
    out << kRecordCsvHeader << "\n";
    return out;
}

inline nlohmann::json record_to_json(const ExperimentRecord& rec) {
    return {{"method", rec.method},
            {"sweep_axis", rec.sweep_axis},
            {"sweep_value", rec.sweep_value},
            {"seed", rec.seed},
            {"accuracy", rec.accuracy},
            {"wall_time_s", rec.wall_time_s},
            {"total_steps", rec.total_steps},
            {"error", rec.error}};
}

inline void write_records_json(const std::string& path,
                               const std::vector<ExperimentRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const ExperimentRecord& rec : records) arr.push_back(record_to_json(rec));
    std::ofstream out = detail::open_out(path, std::ios_base::trunc);
    out << arr.dump(2) << "\n";
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
    std::ofstream out = detail::open_out(path, std::ios_base::trunc);
    out << "method,sweep_axis,sweep_value,runs,mean_accuracy,std_accuracy\n";
    for (const SummaryRow& row : rows)
        out << row.method << "," << row.sweep_axis << "," << row.sweep_value << "," << row.runs
            << "," << detail::fmt_double(row.mean_accuracy) << ","
            << detail::fmt_double(row.std_accuracy) << "\n";
}

namespace detail {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).template get<T>();
}

inline void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const std::string& k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw InputError(where + ": unknown key '" + it.key() + "'");
    }
}

}  // namespace detail

// Overlays a JSON document onto an existing config, so callers can stack
// built-in defaults, a config file, and command-line overrides.
inline void apply_config_json(ExperimentConfig& cfg, const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("experiment config: expected a JSON object");
    detail::reject_unknown(j,
                           {"images", "labels", "methods", "sweep_axis", "sweep_values", "users",
                            "samples", "holdout", "dc", "fed", "train", "runs", "base_seed",
                            "out_dir", "jobs"},
                           "experiment config");
    detail::read_key(j, "images", cfg.images_path);
    detail::read_key(j, "labels", cfg.labels_path);
    detail::read_key(j, "methods", cfg.methods);
    detail::read_key(j, "sweep_axis", cfg.sweep_axis);
    detail::read_key(j, "sweep_values", cfg.sweep_values);
    detail::read_key(j, "users", cfg.num_users);
    detail::read_key(j, "samples", cfg.samples_per_user);
    detail::read_key(j, "holdout", cfg.holdout_size);
    detail::read_key(j, "runs", cfg.num_runs);
    detail::read_key(j, "base_seed", cfg.base_seed);
    detail::read_key(j, "out_dir", cfg.out_dir);
    detail::read_key(j, "jobs", cfg.jobs);
    if (j.contains("dc")) {
        const nlohmann::json& d = j.at("dc");
        detail::reject_unknown(d,
                               {"ir_dim", "anchors", "anchor_seed", "classifier", "unified_dim",
                                "center", "knn_k", "svm_c", "svm_gamma"},
                               "experiment config: dc");
        detail::read_key(d, "ir_dim", cfg.dc.ir_dim);
        detail::read_key(d, "anchors", cfg.dc.anchors);
        detail::read_key(d, "anchor_seed", cfg.dc.anchor_seed);
        detail::read_key(d, "classifier", cfg.dc.classifier);
        detail::read_key(d, "unified_dim", cfg.dc.unified_dim);
        detail::read_key(d, "center", cfg.dc.center);
        detail::read_key(d, "knn_k", cfg.dc.knn_k);
        detail::read_key(d, "svm_c", cfg.dc.svm_c);
        detail::read_key(d, "svm_gamma", cfg.dc.svm_gamma);
    }
    if (j.contains("fed")) {
        const nlohmann::json& f = j.at("fed");
        detail::reject_unknown(f, {"local_epochs", "batch_size", "rounds"},
                               "experiment config: fed");
        detail::read_key(f, "local_epochs", cfg.fed.local_epochs);
        detail::read_key(f, "batch_size", cfg.fed.batch_size);
        detail::read_key(f, "rounds", cfg.fed.rounds);
    }
    if (j.contains("train")) {
        const nlohmann::json& t = j.at("train");
        detail::reject_unknown(
            t, {"epochs", "batch_size", "hidden", "num_classes", "optimizer", "learning_rate"},
            "experiment config: train");
        detail::read_key(t, "epochs", cfg.train.epochs);
        detail::read_key(t, "batch_size", cfg.train.batch_size);
        detail::read_key(t, "hidden", cfg.train.hidden);
        detail::read_key(t, "num_classes", cfg.train.num_classes);
        detail::read_key(t, "optimizer", cfg.train.optimizer);
        detail::read_key(t, "learning_rate", cfg.train.learning_rate);
    }
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("config file '" + path + "': " + e.what());
    }
    apply_config_json(cfg, j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    return {{"images", cfg.images_path},
            {"labels", cfg.labels_path},
            {"methods", cfg.methods},
            {"sweep_axis", cfg.sweep_axis},
            {"sweep_values", cfg.sweep_values},
            {"users", cfg.num_users},
            {"samples", cfg.samples_per_user},
            {"holdout", cfg.holdout_size},
            {"runs", cfg.num_runs},
            {"base_seed", cfg.base_seed},
            {"out_dir", cfg.out_dir},
            {"jobs", cfg.jobs},
            {"dc",
             {{"ir_dim", cfg.dc.ir_dim},
              {"anchors", cfg.dc.anchors},
              {"anchor_seed", cfg.dc.anchor_seed},
              {"classifier", cfg.dc.classifier},
              {"unified_dim", cfg.dc.unified_dim},
              {"center", cfg.dc.center},
              {"knn_k", cfg.dc.knn_k},
              {"svm_c", cfg.dc.svm_c},
              {"svm_gamma", cfg.dc.svm_gamma}}},
            {"fed",
             {{"local_epochs", cfg.fed.local_epochs},
              {"batch_size", cfg.fed.batch_size},
              {"rounds", cfg.fed.rounds}}},
            {"train",
             {{"epochs", cfg.train.epochs},
              {"batch_size", cfg.train.batch_size},
              {"hidden", cfg.train.hidden},
              {"num_classes", cfg.train.num_classes},
              {"optimizer", cfg.train.optimizer},
              {"learning_rate", cfg.train.learning_rate}}}};
}

}  // namespace dc
