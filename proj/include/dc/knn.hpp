#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"

namespace dc {

// k-nearest-neighbour classification, Euclidean metric. Fully deterministic:
// equidistant neighbours resolve to the lower training-row index, tied votes
// to the class with the smaller mean neighbour distance, then to the lower
// class index.
inline std::vector<int> knn_predict(const Matrix& train_x, const std::vector<int>& train_labels,
                                    const Matrix& query_x, std::size_t k) {
    if (train_x.empty()) throw InputError("knn_predict: empty training set");
    if (train_labels.size() != train_x.rows())
        throw InputError("knn_predict: " + std::to_string(train_x.rows()) + " rows but " +
                         std::to_string(train_labels.size()) + " labels");
    if (k == 0 || k > train_x.rows())
        throw InputError("knn_predict: k = " + std::to_string(k) + " with " +
                         std::to_string(train_x.rows()) + " training rows");
    if (query_x.cols() != train_x.cols())
        throw InputError("knn_predict: query has " + std::to_string(query_x.cols()) +
                         " features, training data has " + std::to_string(train_x.cols()));

    const std::size_t n = train_x.rows();
    std::vector<int> out(query_x.rows());
    std::vector<double> dist(n);
    std::vector<std::size_t> order(n);
    for (std::size_t qi = 0; qi < query_x.rows(); ++qi) {
        const double* q = query_x.row(qi).data();
        for (std::size_t i = 0; i < n; ++i) {
            const double* t = train_x.row(i).data();
            double s = 0.0;
            for (std::size_t j = 0; j < train_x.cols(); ++j) {
                const double d = q[j] - t[j];
                s += d * d;
            }
            dist[i] = std::sqrt(s);
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [&](std::size_t a, std::size_t b) {
                              return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                          });

        int max_label = 0;
        for (std::size_t i = 0; i < k; ++i) max_label = std::max(max_label, train_labels[order[i]]);
        std::vector<std::size_t> votes(static_cast<std::size_t>(max_label) + 1, 0);
        std::vector<double> dist_sum(votes.size(), 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            const int y = train_labels[order[i]];
            ++votes[y];
            dist_sum[y] += dist[order[i]];
        }
        int best = -1;
        for (std::size_t c = 0; c < votes.size(); ++c) {
            if (votes[c] == 0) continue;
            if (best < 0) {
                best = static_cast<int>(c);
                continue;
            }
            const std::size_t cb = votes[best];
            if (votes[c] > cb) {
                best = static_cast<int>(c);
            } else if (votes[c] == cb) {
                const double mean_c = dist_sum[c] / static_cast<double>(votes[c]);
                const double mean_b = dist_sum[best] / static_cast<double>(cb);
                if (mean_c < mean_b) best = static_cast<int>(c);
            }
        }
        out[qi] = best;
    }
    return out;
}

}  // namespace dc
