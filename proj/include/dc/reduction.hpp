#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"
#include "dc/rng.hpp"
#include "dc/svd.hpp"

namespace dc {

// A fitted per-user reduction function: rows of width m map to rows of
// width target_dim through an orthonormal projection basis. When centering
// is enabled the column means of the fitting data are subtracted first.
struct ReductionMap {
    Matrix basis;  // m x target_dim, columns orthonormal
    std::size_t target_dim = 0;
    bool center = false;
    std::vector<double> mean_row;  // length m, all zero when center is off
};

// Random data shared by every user: the reference points whose per-user
// projections let the server align the private projection spaces.
struct AnchorSet {
    Matrix data;  // r x m, entries in [0, 1)
    std::uint64_t seed = 0;
};

inline ReductionMap fit_reducer(const Matrix& x, std::size_t target_dim, bool center = false) {
    if (x.empty()) throw InputError("fit_reducer: empty input");
    const std::size_t n = x.rows(), m = x.cols();
    if (target_dim == 0 || target_dim > std::min(n, m))
        throw InputError("fit_reducer: target_dim " + std::to_string(target_dim) +
                         " out of range for " + shape_of(x));

    ReductionMap map;
    map.target_dim = target_dim;
    map.center = center;
    map.mean_row.assign(m, 0.0);

    Matrix work = x;
    if (center) {
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += x(i, j);
            map.mean_row[j] = s / static_cast<double>(n);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) work(i, j) -= map.mean_row[j];
    }

    const SvdResult svd = thin_svd(work);
    map.basis = Matrix(m, target_dim);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < target_dim; ++j) map.basis(i, j) = svd.v(i, j);
    return map;
}

inline Matrix apply_reducer(const ReductionMap& map, const Matrix& x) {
    if (x.cols() != map.basis.rows())
        throw InputError("apply_reducer: input has " + std::to_string(x.cols()) +
                         " columns, reducer expects " + std::to_string(map.basis.rows()));
    if (!map.center) return matmul(x, map.basis);
    Matrix shifted = x;
    for (std::size_t i = 0; i < shifted.rows(); ++i)
        for (std::size_t j = 0; j < shifted.cols(); ++j) shifted(i, j) -= map.mean_row[j];
    return matmul(shifted, map.basis);
}

inline AnchorSet generate_anchors(std::size_t r, std::size_t m, std::uint64_t seed) {
    if (r == 0 || m == 0) throw InputError("generate_anchors: zero dimension");
    AnchorSet anchors;
    anchors.seed = seed;
    anchors.data = Matrix(r, m);
    Rng rng(seed);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < m; ++j) anchors.data(i, j) = rng.uniform01();
    return anchors;
}

}  // namespace dc
