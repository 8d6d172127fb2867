#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"

namespace dc {

// One binary one-vs-rest problem: dual coefficients over the shared
// training rows (alpha[i] pairs with sign y[i] = +1 for the target class).
struct SvmBinary {
    int class_id = 0;
    std::vector<double> alpha;
    std::vector<double> y;  // +-1
    double bias = 0.0;
};

struct SvmModel {
    Matrix support_x;  // all training rows; alpha = 0 marks non-support rows
    std::vector<SvmBinary> folds;
    double c = 10.0;
    double gamma = 0.01;
    std::size_t total_iterations = 0;
};

namespace detail {

inline double rbf(const double* a, const double* b, std::size_t dim, double gamma) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

inline void kernel_row(const Matrix& x, std::size_t i, double gamma, std::vector<double>& out) {
    out.resize(x.rows());
    const double* xi = x.row(i).data();
    for (std::size_t j = 0; j < x.rows(); ++j) out[j] = rbf(xi, x.row(j).data(), x.cols(), gamma);
}

// SMO with maximal-violating-pair selection. Maintains u_i = sum_j
// alpha_j y_j K_ij; stops when the KKT violation gap drops to tol.
inline std::size_t smo_solve(const Matrix& x, const std::vector<double>& y, double c, double gamma,
                             double tol, SvmBinary& fold) {
    const std::size_t n = x.rows();
    fold.alpha.assign(n, 0.0);
    std::vector<double> u(n, 0.0);
    std::vector<double> ki, kj;

    const std::size_t max_iter = std::max<std::size_t>(100000, 200 * n);
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        // r_i = y_i - u_i; valid bias values lie between the I_up max and
        // the I_low min of r; a positive gap is a KKT violation.
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        std::size_t i_up = n, i_low = n;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - u[i];
            const bool in_up = (y[i] > 0.0 && fold.alpha[i] < c) || (y[i] < 0.0 && fold.alpha[i] > 0.0);
            const bool in_low = (y[i] < 0.0 && fold.alpha[i] < c) || (y[i] > 0.0 && fold.alpha[i] > 0.0);
            if (in_up && r > m_up) {
                m_up = r;
                i_up = i;
            }
            if (in_low && r < m_low) {
                m_low = r;
                i_low = i;
            }
        }
        if (i_up == n || i_low == n || m_up - m_low <= tol) {
            fold.bias = (m_up + m_low) / 2.0;
            if (!std::isfinite(fold.bias)) fold.bias = 0.0;
            return iter;
        }

        const std::size_t i = i_up, j = i_low;
        kernel_row(x, i, gamma, ki);
        kernel_row(x, j, gamma, kj);

        const double ai_old = fold.alpha[i], aj_old = fold.alpha[j];
        double lo, hi;
        if (y[i] != y[j]) {
            lo = std::max(0.0, aj_old - ai_old);
            hi = std::min(c, c + aj_old - ai_old);
        } else {
            lo = std::max(0.0, ai_old + aj_old - c);
            hi = std::min(c, ai_old + aj_old);
        }

        double eta = ki[i] + kj[j] - 2.0 * ki[j];
        if (eta <= 1e-12) eta = 1e-12;
        const double ei = u[i] - y[i], ej = u[j] - y[j];
        double aj = aj_old + y[j] * (ei - ej) / eta;
        aj = std::clamp(aj, lo, hi);
        const double ai = ai_old + y[i] * y[j] * (aj_old - aj);

        // Cancellation against the box bounds can leave one-ulp dust that
        // keeps an exhausted variable inside the working sets forever, so
        // snap near-bound values exactly onto the box.
        const double snap = 1e-12 * c;
        auto snapped = [c, snap](double v) {
            v = std::clamp(v, 0.0, c);
            if (v <= snap) return 0.0;
            if (v >= c - snap) return c;
            return v;
        };
        fold.alpha[i] = snapped(ai);
        fold.alpha[j] = snapped(aj);
        const double di = (fold.alpha[i] - ai_old) * y[i];
        const double dj = (fold.alpha[j] - aj_old) * y[j];
        for (std::size_t t = 0; t < n; ++t) u[t] += di * ki[t] + dj * kj[t];
    }
    throw NumericalError("svm_train: SMO did not converge within " + std::to_string(max_iter) +
                         " iterations for class " + std::to_string(fold.class_id));
}

}  // namespace detail

inline SvmModel svm_train(const Matrix& x, const std::vector<int>& labels, double c = 10.0,
                          double gamma = 0.01, double tol = 1e-3) {
    if (x.empty()) throw InputError("svm_train: empty training data");
    if (labels.size() != x.rows())
        throw InputError("svm_train: " + std::to_string(x.rows()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
    if (c <= 0.0 || gamma <= 0.0) throw InputError("svm_train: C and gamma must be positive");

    std::set<int> classes(labels.begin(), labels.end());
    if (classes.size() < 2)
        throw InputError("svm_train: only class " + std::to_string(*classes.begin()) +
                         " present, need at least 2");

    SvmModel model;
    model.support_x = x;
    model.c = c;
    model.gamma = gamma;
    for (int cls : classes) {
        SvmBinary fold;
        fold.class_id = cls;
        fold.y.resize(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) fold.y[i] = labels[i] == cls ? 1.0 : -1.0;
        model.total_iterations += detail::smo_solve(x, fold.y, c, gamma, tol, fold);
        model.folds.push_back(std::move(fold));
    }
    return model;
}

inline std::vector<int> svm_predict(const SvmModel& model, const Matrix& x) {
    if (x.cols() != model.support_x.cols())
        throw InputError("svm_predict: input has " + std::to_string(x.cols()) +
                         " features, model expects " + std::to_string(model.support_x.cols()));
    const std::size_t n = model.support_x.rows();
    std::vector<int> out(x.rows());
    for (std::size_t qi = 0; qi < x.rows(); ++qi) {
        const double* q = x.row(qi).data();
        double best_val = -std::numeric_limits<double>::infinity();
        int best_cls = 0;
        std::vector<double> kq(n);
        for (std::size_t i = 0; i < n; ++i)
            kq[i] = detail::rbf(q, model.support_x.row(i).data(), x.cols(), model.gamma);
        for (const SvmBinary& fold : model.folds) {
            double v = fold.bias;
            for (std::size_t i = 0; i < n; ++i)
                if (fold.alpha[i] != 0.0) v += fold.alpha[i] * fold.y[i] * kq[i];
            if (v > best_val) {
                best_val = v;
                best_cls = fold.class_id;
            }
        }
        out[qi] = best_cls;
    }
    return out;
}

}  // namespace dc
