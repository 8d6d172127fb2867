#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"

namespace dc {

// Thin SVD a = U * diag(s) * V^T with k = min(rows, cols) columns.
// Singular values are non-increasing; U and V have orthonormal columns.
struct SvdResult {
    Matrix u;                            // rows x k
    std::vector<double> singular_values; // length k
    Matrix v;                            // cols x k
};

namespace detail {

inline double dot(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

// Columns stored contiguously (one vector per column) so the rotation and
// reflector loops run over adjacent memory.
using ColMat = std::vector<std::vector<double>>;

inline ColMat to_columns(const Matrix& a) {
    ColMat cols(a.cols(), std::vector<double>(a.rows()));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) cols[j][i] = a(i, j);
    return cols;
}

// Householder QR of an n x m column set, n >= m. On return column j holds
// the reflector vector in rows [j, n); betas holds the 2 / v'v factors and
// r the m x m upper-triangular factor, column-major.
inline void householder_qr(ColMat& cols, std::vector<double>& betas, ColMat& r) {
    const std::size_t n = cols.front().size();
    const std::size_t m = cols.size();
    betas.assign(m, 0.0);
    r.assign(m, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) {
        // Rows above the pivot are finished entries of R.
        for (std::size_t i = 0; i < j; ++i) r[j][i] = cols[j][i];

        double* x = cols[j].data() + j;
        const std::size_t len = n - j;
        const double sq = dot(x, x, len);
        if (sq == 0.0) {
            r[j][j] = 0.0;
            continue;  // zero pivot column, reflector is the identity
        }
        const double norm = std::sqrt(sq);
        const double x0 = x[0];
        const double alpha = x0 >= 0.0 ? -norm : norm;
        x[0] = x0 - alpha;
        // v'v = 2 * (sq - alpha * x0); both terms are non-negative.
        const double beta = 1.0 / (sq - alpha * x0);
        betas[j] = beta;
        r[j][j] = alpha;

        for (std::size_t c = j + 1; c < m; ++c) {
            double* y = cols[c].data() + j;
            const double tau = beta * dot(x, y, len);
            for (std::size_t i = 0; i < len; ++i) y[i] -= tau * x[i];
        }
    }
}

// One-sided Jacobi on a square column set; accumulates the right rotations
// in v. At convergence w = original * v with pairwise-orthogonal columns.
// Columns that shrink below the deflation floor are cancellation residue of
// a rank-deficient input; they are flushed to exact zero so noise-on-noise
// rotations cannot cycle forever. Returns the number of sweeps used; throws
// past the cap.
inline std::size_t jacobi_orthogonalize(ColMat& w, ColMat& v, std::size_t max_sweeps = 60) {
    const std::size_t m = w.size();
    const std::size_t n = w.front().size();
    const double eps = std::numeric_limits<double>::epsilon();
    const double tol = std::max(1e-13, 4.0 * static_cast<double>(m) * eps);
    const double deflate = 8.0 * static_cast<double>(m) * eps;

    std::vector<double> colsq(m);
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        double maxsq = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            colsq[j] = dot(w[j].data(), w[j].data(), n);
            maxsq = std::max(maxsq, colsq[j]);
        }
        const double floor_sq = deflate * deflate * maxsq;
        for (std::size_t j = 0; j < m; ++j) {
            if (colsq[j] > floor_sq || colsq[j] == 0.0) continue;
            std::fill(w[j].begin(), w[j].end(), 0.0);
            colsq[j] = 0.0;
        }
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                const double alpha = colsq[p];
                const double beta = colsq[q];
                if (alpha == 0.0 || beta == 0.0) continue;
                const double gamma = dot(w[p].data(), w[q].data(), n);
                if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) continue;
                rotated = true;

                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;

                double* wp = w[p].data();
                double* wq = w[q].data();
                for (std::size_t i = 0; i < n; ++i) {
                    const double a = wp[i], b = wq[i];
                    wp[i] = c * a - s * b;
                    wq[i] = s * a + c * b;
                }
                double* vp = v[p].data();
                double* vq = v[q].data();
                for (std::size_t i = 0; i < m; ++i) {
                    const double a = vp[i], b = vq[i];
                    vp[i] = c * a - s * b;
                    vq[i] = s * a + c * b;
                }
                const double cs2 = 2.0 * c * s * gamma;
                colsq[p] = c * c * alpha - cs2 + s * s * beta;
                colsq[q] = s * s * alpha + cs2 + c * c * beta;
            }
        }
        if (!rotated) return sweep;
    }
    throw NumericalError("thin_svd: Jacobi sweep cap reached after " +
                         std::to_string(max_sweeps) + " iterations without convergence");
}

// Fill columns whose singular value is exactly zero with unit vectors
// orthogonal to every already-built column, so U keeps orthonormal columns
// even for rank-deficient input.
inline void complete_basis(ColMat& u, const std::vector<bool>& built) {
    const std::size_t m = u.size();
    const std::size_t n = u.front().size();
    std::vector<std::size_t> done;
    for (std::size_t j = 0; j < m; ++j)
        if (built[j]) done.push_back(j);

    for (std::size_t j = 0; j < m; ++j) {
        if (built[j]) continue;
        std::vector<double> best(n, 0.0), cand(n);
        double best_norm = -1.0;
        for (std::size_t e = 0; e < n; ++e) {
            std::fill(cand.begin(), cand.end(), 0.0);
            cand[e] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t d : done) {
                    const double proj = dot(cand.data(), u[d].data(), n);
                    for (std::size_t i = 0; i < n; ++i) cand[i] -= proj * u[d][i];
                }
            }
            const double nn = std::sqrt(dot(cand.data(), cand.data(), n));
            if (nn > best_norm) {
                best_norm = nn;
                best = cand;
            }
            if (best_norm > 0.9) break;  // already essentially untouched by the projection
        }
        for (std::size_t i = 0; i < n; ++i) u[j][i] = best[i] / best_norm;
        done.push_back(j);
    }
}

// Core decomposition for rows >= cols.
inline SvdResult svd_tall(const Matrix& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();

    ColMat cols = to_columns(a);
    std::vector<double> betas;
    ColMat r;
    householder_qr(cols, betas, r);

    ColMat v(m, std::vector<double>(m, 0.0));
    for (std::size_t j = 0; j < m; ++j) v[j][j] = 1.0;
    jacobi_orthogonalize(r, v);

    std::vector<double> sigma(m);
    for (std::size_t j = 0; j < m; ++j)
        sigma[j] = std::sqrt(dot(r[j].data(), r[j].data(), m));

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    ColMat ur(m, std::vector<double>(m, 0.0));
    std::vector<bool> built(m, false);
    std::vector<double> s_sorted(m);
    for (std::size_t j = 0; j < m; ++j) {
        const std::size_t src = order[j];
        s_sorted[j] = sigma[src];
        if (sigma[src] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) ur[j][i] = r[src][i] / sigma[src];
            built[j] = true;
        }
    }
    complete_basis(ur, built);

    // U = Q * U_r, formed by applying the stored reflectors to [U_r; 0].
    ColMat u(m, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) u[j][i] = ur[j][i];
    for (std::size_t h = m; h-- > 0;) {
        if (betas[h] == 0.0) continue;
        const double* hv = cols[h].data() + h;
        const std::size_t len = n - h;
        for (std::size_t j = 0; j < m; ++j) {
            double* y = u[j].data() + h;
            const double tau = betas[h] * dot(hv, y, len);
            for (std::size_t i = 0; i < len; ++i) y[i] -= tau * hv[i];
        }
    }

    SvdResult out;
    out.singular_values = std::move(s_sorted);
    out.u = Matrix(n, m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < n; ++i) out.u(i, j) = u[j][i];
    out.v = Matrix(m, m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < m; ++i) out.v(i, j) = v[order[j]][i];
    return out;
}

// Make the largest-magnitude entry of every U column positive; V follows.
// Fixes the sign ambiguity so identical inputs give bit-identical results.
inline void apply_sign_convention(Matrix& u, Matrix& v) {
    for (std::size_t j = 0; j < u.cols(); ++j) {
        double best = -1.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < u.rows(); ++i) {
            const double mag = std::abs(u(i, j));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (u(arg, j) < 0.0) {
            for (std::size_t i = 0; i < u.rows(); ++i) u(i, j) = -u(i, j);
            for (std::size_t i = 0; i < v.rows(); ++i) v(i, j) = -v(i, j);
        }
    }
}

}  // namespace detail

inline SvdResult thin_svd(const Matrix& a) {
    if (a.empty()) throw InputError("thin_svd: empty matrix");
    if (!a.all_finite()) throw InputError("thin_svd: non-finite entries in input");

    SvdResult res;
    if (a.rows() >= a.cols()) {
        res = detail::svd_tall(a);
    } else {
        SvdResult t = detail::svd_tall(transpose(a));
        res.u = std::move(t.v);
        res.v = std::move(t.u);
        res.singular_values = std::move(t.singular_values);
    }
    detail::apply_sign_convention(res.u, res.v);
    return res;
}

// Moore-Penrose pseudoinverse. Singular values at or below rcond * s_max are
// treated as zero, guarding rank-deficient input.
inline Matrix pinv(const Matrix& a, double rcond = 1e-12) {
    if (rcond < 0.0) throw InputError("pinv: rcond must be non-negative");
    const SvdResult s = thin_svd(a);
    const std::size_t k = s.singular_values.size();
    const double cutoff = rcond * s.singular_values.front();

    // A^+ = V * diag(1/s) * U^T, dropping the cut singular directions.
    Matrix vs(a.cols(), k);
    for (std::size_t j = 0; j < k; ++j) {
        const double sj = s.singular_values[j];
        if (sj <= cutoff || sj == 0.0) continue;
        const double inv = 1.0 / sj;
        for (std::size_t i = 0; i < a.cols(); ++i) vs(i, j) = s.v(i, j) * inv;
    }
    return matmul(vs, transpose(s.u));
}

}  // namespace dc
