#pragma once

// Cross-check numerics for the test suite. Deliberately independent of the
// library implementations: the eigensolver here is a classical two-sided
// Jacobi iteration working on the Gram matrix, while the library computes
// singular values by QR + one-sided Jacobi on the factor itself.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dc/matrix.hpp"
#include "dc/rng.hpp"

namespace oracle {

struct EigSym {
    std::vector<double> values;  // descending
    dc::Matrix vectors;          // column j pairs with values[j]
};

inline EigSym eig_sym_jacobi(dc::Matrix s, std::size_t max_sweeps = 100) {
    if (s.rows() != s.cols()) throw std::invalid_argument("eig_sym_jacobi: square input required");
    const std::size_t n = s.rows();
    dc::Matrix v = dc::Matrix::identity(n);

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(s(i, j)));
    if (scale == 0.0) scale = 1.0;

    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(s(p, q)));
        if (off <= 1e-15 * scale) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double spq = s(p, q);
                if (std::abs(spq) <= 1e-18 * scale) continue;
                const double theta = (s(q, q) - s(p, p)) / (2.0 * spq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;

                const double spp = s(p, p), sqq = s(q, q);
                s(p, p) = c * c * spp - 2.0 * c * sn * spq + sn * sn * sqq;
                s(q, q) = sn * sn * spp + 2.0 * c * sn * spq + c * c * sqq;
                s(p, q) = 0.0;
                s(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double sip = s(i, p), siq = s(i, q);
                    s(i, p) = c * sip - sn * siq;
                    s(p, i) = s(i, p);
                    s(i, q) = sn * sip + c * siq;
                    s(q, i) = s(i, q);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - sn * viq;
                    v(i, q) = sn * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s(a, a) > s(b, b); });

    EigSym out;
    out.values.resize(n);
    out.vectors = dc::Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = s(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

// Singular values of a via the eigenvalues of the smaller Gram matrix.
inline std::vector<double> singular_values(const dc::Matrix& a) {
    const dc::Matrix g = a.rows() >= a.cols() ? dc::matmul(dc::transpose(a), a)
                                              : dc::matmul(a, dc::transpose(a));
    EigSym e = eig_sym_jacobi(g);
    std::vector<double> s(e.values.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::sqrt(std::max(0.0, e.values[i]));
    return s;
}

inline dc::Matrix random_matrix(dc::Rng& rng, std::size_t rows, std::size_t cols,
                                double lo = -1.0, double hi = 1.0) {
    dc::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    return m;
}

inline dc::Matrix random_low_rank(dc::Rng& rng, std::size_t rows, std::size_t cols,
                                  std::size_t rank) {
    return dc::matmul(random_matrix(rng, rows, rank), random_matrix(rng, rank, cols));
}

// Exhaustive nearest-neighbour classifier: full sort of every distance, the
// same tie rules as the library (lower row index, then smaller mean vote
// distance, then lower class), written independently.
inline std::vector<int> knn_brute_force(const dc::Matrix& train_x,
                                        const std::vector<int>& train_labels,
                                        const dc::Matrix& query_x, std::size_t k) {
    std::vector<int> out(query_x.rows());
    for (std::size_t qi = 0; qi < query_x.rows(); ++qi) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t i = 0; i < train_x.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < train_x.cols(); ++j) {
                const double d = query_x(qi, j) - train_x(i, j);
                s += d * d;
            }
            all.emplace_back(std::sqrt(s), i);
        }
        std::sort(all.begin(), all.end());
        std::map<int, std::pair<std::size_t, double>> tally;  // class -> (votes, dist sum)
        for (std::size_t i = 0; i < k; ++i) {
            auto& t = tally[train_labels[all[i].second]];
            t.first += 1;
            t.second += all[i].first;
        }
        int best = -1;
        std::size_t best_votes = 0;
        double best_mean = 0.0;
        for (const auto& [cls, t] : tally) {
            const double mean = t.second / static_cast<double>(t.first);
            if (best < 0 || t.first > best_votes ||
                (t.first == best_votes && mean < best_mean)) {
                best = cls;
                best_votes = t.first;
                best_mean = mean;
            }
        }
        out[qi] = best;
    }
    return out;
}

// Dual objective of the soft-margin kernel SVM for coefficient vector a.
inline double svm_dual_objective(const dc::Matrix& k, const std::vector<double>& y,
                                 const std::vector<double>& a) {
    const std::size_t n = y.size();
    double lin = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lin += a[i];
        for (std::size_t j = 0; j < n; ++j) quad += a[i] * a[j] * y[i] * y[j] * k(i, j);
    }
    return lin - 0.5 * quad;
}

// Projection of z onto {0 <= a <= c, y.a = 0} by bisection on the
// Lagrange multiplier of the equality constraint.
inline std::vector<double> project_dual(const std::vector<double>& z, const std::vector<double>& y,
                                        double c) {
    const std::size_t n = z.size();
    double bound = c + 1.0;
    for (double v : z) bound = std::max(bound, std::abs(v) + c + 1.0);
    double lo = -bound, hi = bound;
    std::vector<double> a(n);
    auto eval = [&](double lambda) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = std::clamp(z[i] - lambda * y[i], 0.0, c);
            s += y[i] * a[i];
        }
        return s;
    };
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (eval(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    eval(0.5 * (lo + hi));
    return a;
}

// Projected-gradient ascent on the SVM dual, an independent reference for
// the SMO solver. With step 1/L the iteration is monotone, so the final
// objective is also the best one.
inline double svm_dual_pg(const dc::Matrix& k, const std::vector<double>& y, double c,
                          std::size_t iters = 60000) {
    const std::size_t n = y.size();
    double lip = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(k(i, j));
        lip = std::max(lip, row);
    }
    const double step = 1.0 / lip;
    std::vector<double> a(n, 0.0), grad(n), z(n);
    double last = svm_dual_objective(k, y, a);
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += a[j] * y[j] * k(i, j);
            grad[i] = 1.0 - y[i] * s;
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + step * grad[i];
        a = project_dual(z, y, c);
        if (it % 500 == 499) {
            const double now = svm_dual_objective(k, y, a);
            if (now - last <= 1e-12 * (1.0 + std::abs(now))) return now;
            last = now;
        }
    }
    return svm_dual_objective(k, y, a);
}

inline dc::Matrix rbf_kernel_matrix(const dc::Matrix& x, double gamma) {
    dc::Matrix k(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.rows(); ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < x.cols(); ++t) {
                const double d = x(i, t) - x(j, t);
                s += d * d;
            }
            k(i, j) = std::exp(-gamma * s);
        }
    return k;
}

}  // namespace oracle
