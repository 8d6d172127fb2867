#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"
#include "dc/rng.hpp"

namespace dc {

// Fully-connected ReLU network with a softmax head. weights[t] maps layer
// input t (in x out); the final layer produces class logits.
struct MlpModel {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_dim() const { return weights.front().rows(); }
    std::size_t output_dim() const { return weights.back().cols(); }

    friend bool operator==(const MlpModel& a, const MlpModel& b) {
        return a.weights == b.weights && a.biases == b.biases;
    }
};

struct TrainConfig {
    std::size_t epochs = 24;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden = {512, 128};
    std::size_t num_classes = 10;
    std::string optimizer = "adam";  // "adam" or "sgd"
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainStats {
    std::size_t steps = 0;    // optimizer steps taken
    double mean_loss = 0.0;   // mean batch loss over the whole call
    double final_loss = 0.0;  // mean batch loss of the last epoch
};

namespace detail {

// c = a^T * b without materializing the transpose.
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ar = a.row(k).data();
        const double* br = b.row(k).data();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            double* cr = c.row(i).data();
            const double aik = ar[i];
            for (std::size_t j = 0; j < b.cols(); ++j) cr[j] += aik * br[j];
        }
    }
    return c;
}

// c = a * b^T.
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ar = a.row(i).data();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* br = b.row(j).data();
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ar[k] * br[k];
            c(i, j) = s;
        }
    }
    return c;
}

inline void add_bias(Matrix& z, const std::vector<double>& b) {
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double* zr = z.row(i).data();
        for (std::size_t j = 0; j < z.cols(); ++j) zr[j] += b[j];
    }
}

inline void relu_inplace(Matrix& z) {
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) = std::max(0.0, z(i, j));
}

// Row-wise softmax with the max subtracted for stability.
inline Matrix softmax_rows(const Matrix& logits) {
    Matrix p = logits;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double* r = p.row(i).data();
        double mx = r[0];
        for (std::size_t j = 1; j < p.cols(); ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) {
            r[j] = std::exp(r[j] - mx);
            sum += r[j];
        }
        for (std::size_t j = 0; j < p.cols(); ++j) r[j] /= sum;
    }
    return p;
}

struct ForwardTrace {
    std::vector<Matrix> pre;   // z_t per layer
    std::vector<Matrix> post;  // relu(z_t) per hidden layer
};

inline Matrix forward(const MlpModel& model, const Matrix& x, ForwardTrace* trace = nullptr) {
    const std::size_t layers = model.weights.size();
    Matrix act = x;
    for (std::size_t t = 0; t < layers; ++t) {
        Matrix z = matmul(act, model.weights[t]);
        add_bias(z, model.biases[t]);
        if (trace) trace->pre.push_back(z);
        if (t + 1 < layers) {
            relu_inplace(z);
            if (trace) trace->post.push_back(z);
        }
        act = std::move(z);
    }
    return act;  // logits
}

// Mean cross-entropy over the batch plus parameter gradients.
inline double backward(const MlpModel& model, const Matrix& x, const std::vector<int>& labels,
                       std::vector<Matrix>& grad_w, std::vector<std::vector<double>>& grad_b) {
    const std::size_t layers = model.weights.size();
    const std::size_t n = x.rows();
    ForwardTrace trace;
    Matrix logits = forward(model, x, &trace);

    double loss = 0.0;
    Matrix delta = softmax_rows(logits);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = logits.row(i).data();
        double mx = r[0];
        for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) sum += std::exp(r[j] - mx);
        loss += mx + std::log(sum) - r[labels[i]];
        delta(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    }
    loss /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < delta.cols(); ++j) delta(i, j) /= static_cast<double>(n);

    grad_w.assign(layers, Matrix());
    grad_b.assign(layers, {});
    for (std::size_t t = layers; t-- > 0;) {
        const Matrix& input = t == 0 ? x : trace.post[t - 1];
        grad_w[t] = matmul_at_b(input, delta);
        grad_b[t].assign(delta.cols(), 0.0);
        for (std::size_t i = 0; i < delta.rows(); ++i)
            for (std::size_t j = 0; j < delta.cols(); ++j) grad_b[t][j] += delta(i, j);
        if (t == 0) break;
        Matrix prev = matmul_a_bt(delta, model.weights[t]);
        for (std::size_t i = 0; i < prev.rows(); ++i)
            for (std::size_t j = 0; j < prev.cols(); ++j)
                if (trace.pre[t - 1](i, j) <= 0.0) prev(i, j) = 0.0;
        delta = std::move(prev);
    }
    return loss;
}

}  // namespace detail

inline void validate_train_inputs(const Matrix& x, const std::vector<int>& labels,
                                  const TrainConfig& cfg) {
    if (x.empty()) throw InputError("mlp_train: empty training data");
    if (labels.size() != x.rows())
        throw InputError("mlp_train: " + std::to_string(x.rows()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
    if (cfg.epochs < 1) throw InputError("mlp_train: epochs must be at least 1");
    if (cfg.batch_size < 1) throw InputError("mlp_train: batch_size must be at least 1");
    if (cfg.num_classes < 2) throw InputError("mlp_train: need at least 2 classes");
    if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
        throw InputError("mlp_train: unknown optimizer '" + cfg.optimizer + "'");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= cfg.num_classes)
            throw InputError("mlp_train: label " + std::to_string(y) + " outside [0, " +
                             std::to_string(cfg.num_classes) + ")");
}

// Glorot-uniform weights, zero biases, filled in layer order from the
// given stream so identical seeds give identical models.
inline MlpModel mlp_init(std::size_t input_dim, const TrainConfig& cfg, Rng& rng) {
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(cfg.num_classes);

    MlpModel model;
    for (std::size_t t = 0; t + 1 < dims.size(); ++t) {
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[t] + dims[t + 1]));
        Matrix w(dims[t], dims[t + 1]);
        for (std::size_t i = 0; i < w.rows(); ++i)
            for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(dims[t + 1], 0.0);
    }
    return model;
}

// Owns the model plus optimizer state and shuffle stream so training can be
// resumed across federated rounds without resetting either.
class MlpTrainer {
public:
    MlpTrainer(MlpModel model, TrainConfig cfg, std::uint64_t shuffle_seed)
        : model_(std::move(model)), cfg_(std::move(cfg)), shuffle_rng_(shuffle_seed) {
        for (std::size_t t = 0; t < model_.weights.size(); ++t) {
            mw_.emplace_back(model_.weights[t].rows(), model_.weights[t].cols());
            vw_.emplace_back(model_.weights[t].rows(), model_.weights[t].cols());
            mb_.emplace_back(model_.biases[t].size(), 0.0);
            vb_.emplace_back(model_.biases[t].size(), 0.0);
        }
    }

    const MlpModel& model() const { return model_; }

    // Replaces parameters (e.g. with freshly averaged global weights) while
    // keeping optimizer moments and the shuffle stream.
    void set_model(const MlpModel& m) {
        if (m.weights.size() != model_.weights.size())
            throw InputError("MlpTrainer: layer count mismatch in set_model");
        model_ = m;
    }

    TrainStats train(const Matrix& x, const std::vector<int>& labels, std::size_t epochs) {
        TrainConfig cfg = cfg_;
        cfg.epochs = epochs;
        validate_train_inputs(x, labels, cfg);
        const std::size_t n = x.rows();
        const std::size_t b = cfg_.batch_size;

        std::vector<std::size_t> idx(n);
        Matrix xb;
        std::vector<int> yb;
        std::vector<Matrix> grad_w;
        std::vector<std::vector<double>> grad_b;

        TrainStats stats;
        double loss_sum = 0.0, epoch_loss_sum = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
            for (std::size_t i = 0; i < n; ++i) idx[i] = i;
            shuffle_rng_.shuffle(idx);
            epoch_loss_sum = 0.0;
            epoch_batches = 0;
            for (std::size_t start = 0; start < n; start += b) {
                const std::size_t count = std::min(b, n - start);
                xb = Matrix(count, x.cols());
                yb.resize(count);
                for (std::size_t i = 0; i < count; ++i) {
                    const std::size_t src = idx[start + i];
                    std::copy(x.row(src).begin(), x.row(src).end(), xb.row(i).begin());
                    yb[i] = labels[src];
                }
                const double loss = detail::backward(model_, xb, yb, grad_w, grad_b);
                if (!std::isfinite(loss))
                    throw NumericalError("mlp_train: non-finite loss at epoch " +
                                         std::to_string(epoch + 1) + " batch " +
                                         std::to_string(start / b + 1));
                apply_update(grad_w, grad_b);
                ++stats.steps;
                loss_sum += loss;
                epoch_loss_sum += loss;
                ++epoch_batches;
            }
        }
        stats.mean_loss = stats.steps ? loss_sum / static_cast<double>(stats.steps) : 0.0;
        stats.final_loss =
            epoch_batches ? epoch_loss_sum / static_cast<double>(epoch_batches) : 0.0;
        return stats;
    }

private:
    void apply_update(const std::vector<Matrix>& gw, const std::vector<std::vector<double>>& gb) {
        const double lr = cfg_.learning_rate;
        if (cfg_.optimizer == "sgd") {
            for (std::size_t t = 0; t < model_.weights.size(); ++t) {
                Matrix& w = model_.weights[t];
                for (std::size_t i = 0; i < w.rows(); ++i)
                    for (std::size_t j = 0; j < w.cols(); ++j) w(i, j) -= lr * gw[t](i, j);
                for (std::size_t j = 0; j < model_.biases[t].size(); ++j)
                    model_.biases[t][j] -= lr * gb[t][j];
            }
            return;
        }
        ++adam_step_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(adam_step_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(adam_step_));
        for (std::size_t t = 0; t < model_.weights.size(); ++t) {
            Matrix& w = model_.weights[t];
            for (std::size_t i = 0; i < w.rows(); ++i) {
                double* wr = w.row(i).data();
                double* mr = mw_[t].row(i).data();
                double* vr = vw_[t].row(i).data();
                const double* gr = gw[t].row(i).data();
                for (std::size_t j = 0; j < w.cols(); ++j) {
                    mr[j] = cfg_.beta1 * mr[j] + (1.0 - cfg_.beta1) * gr[j];
                    vr[j] = cfg_.beta2 * vr[j] + (1.0 - cfg_.beta2) * gr[j] * gr[j];
                    wr[j] -= lr * (mr[j] / c1) / (std::sqrt(vr[j] / c2) + cfg_.epsilon);
                }
            }
            for (std::size_t j = 0; j < model_.biases[t].size(); ++j) {
                mb_[t][j] = cfg_.beta1 * mb_[t][j] + (1.0 - cfg_.beta1) * gb[t][j];
                vb_[t][j] = cfg_.beta2 * vb_[t][j] + (1.0 - cfg_.beta2) * gb[t][j] * gb[t][j];
                model_.biases[t][j] -= lr * (mb_[t][j] / c1) / (std::sqrt(vb_[t][j] / c2) + cfg_.epsilon);
            }
        }
    }

    MlpModel model_;
    TrainConfig cfg_;
    Rng shuffle_rng_;
    std::vector<Matrix> mw_, vw_;
    std::vector<std::vector<double>> mb_, vb_;
    std::uint64_t adam_step_ = 0;
};

// Seed streams: stream 0 initializes weights, stream 1 + user_index drives
// epoch shuffling. Plain training is user_index 0 of the same scheme, which
// is what makes single-user federated runs reproduce it exactly.
inline std::uint64_t mlp_init_stream(std::uint64_t seed) { return derive_seed(seed, 0); }
inline std::uint64_t mlp_shuffle_stream(std::uint64_t seed, std::size_t user_index = 0) {
    return derive_seed(seed, 1 + user_index);
}

inline MlpModel mlp_train(const Matrix& x, const std::vector<int>& labels, const TrainConfig& cfg,
                          const std::optional<MlpModel>& init = std::nullopt,
                          TrainStats* stats_out = nullptr) {
    validate_train_inputs(x, labels, cfg);
    MlpModel model;
    if (init) {
        if (init->input_dim() != x.cols())
            throw InputError("mlp_train: init model expects " +
                             std::to_string(init->input_dim()) + " features, data has " +
                             std::to_string(x.cols()));
        model = *init;
    } else {
        Rng rng(mlp_init_stream(cfg.seed));
        model = mlp_init(x.cols(), cfg, rng);
    }
    MlpTrainer trainer(std::move(model), cfg, mlp_shuffle_stream(cfg.seed));
    TrainStats stats = trainer.train(x, labels, cfg.epochs);
    if (stats_out) *stats_out = stats;
    return trainer.model();
}

inline Matrix mlp_probabilities(const MlpModel& model, const Matrix& x) {
    if (x.cols() != model.input_dim())
        throw InputError("mlp_predict: input has " + std::to_string(x.cols()) +
                         " features, model expects " + std::to_string(model.input_dim()));
    return detail::softmax_rows(detail::forward(model, x));
}

inline std::vector<int> mlp_predict(const MlpModel& model, const Matrix& x) {
    const Matrix probs = mlp_probabilities(model, x);
    std::vector<int> out(probs.rows());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols(); ++j)
            if (probs(i, j) > probs(i, best)) best = j;
        out[i] = static_cast<int>(best);
    }
    return out;
}

inline std::vector<double> mlp_weights(const MlpModel& model) {
    std::vector<double> flat;
    for (std::size_t t = 0; t < model.weights.size(); ++t) {
        const Matrix& w = model.weights[t];
        flat.insert(flat.end(), w.data(), w.data() + w.rows() * w.cols());
        flat.insert(flat.end(), model.biases[t].begin(), model.biases[t].end());
    }
    return flat;
}

inline MlpModel mlp_from_weights(const MlpModel& shape, const std::vector<double>& flat) {
    MlpModel model = shape;
    std::size_t pos = 0;
    for (std::size_t t = 0; t < model.weights.size(); ++t) {
        Matrix& w = model.weights[t];
        const std::size_t wn = w.rows() * w.cols();
        if (pos + wn + model.biases[t].size() > flat.size())
            throw InputError("mlp_from_weights: vector too short: " + std::to_string(flat.size()));
        std::copy(flat.begin() + pos, flat.begin() + pos + wn, w.data());
        pos += wn;
        std::copy(flat.begin() + pos, flat.begin() + pos + model.biases[t].size(),
                  model.biases[t].begin());
        pos += model.biases[t].size();
    }
    if (pos != flat.size())
        throw InputError("mlp_from_weights: vector length " + std::to_string(flat.size()) +
                         ", model needs " + std::to_string(pos));
    return model;
}

// Mean cross-entropy and its gradient in flat-parameter order, for
// finite-difference verification.
inline std::pair<double, std::vector<double>> mlp_loss_grad(const MlpModel& model, const Matrix& x,
                                                            const std::vector<int>& labels) {
    std::vector<Matrix> gw;
    std::vector<std::vector<double>> gb;
    const double loss = detail::backward(model, x, labels, gw, gb);
    MlpModel grads;
    grads.weights = std::move(gw);
    grads.biases = std::move(gb);
    return {loss, mlp_weights(grads)};
}

inline double mlp_loss(const MlpModel& model, const Matrix& x, const std::vector<int>& labels) {
    const Matrix logits = detail::forward(model, x);
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* r = logits.row(i).data();
        double mx = r[0];
        for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols(); ++j) sum += std::exp(r[j] - mx);
        loss += mx + std::log(sum) - r[labels[i]];
    }
    return loss / static_cast<double>(x.rows());
}

}  // namespace dc
