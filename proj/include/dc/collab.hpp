#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"
#include "dc/reduction.hpp"
#include "dc/svd.hpp"

namespace dc {

// Server-side product of the anchor alignment: the common anchor
// representation z and one alignment matrix per user mapping that user's
// IR space into the space of z.
struct UnifiedSpace {
    Matrix z;               // r x target_dim, orthonormal columns
    std::vector<Matrix> g;  // g[i] is l_i x target_dim
    std::size_t target_dim = 0;
};

// Everything user i needs to project new samples into the unified space.
struct UserPipeline {
    ReductionMap reducer;
    Matrix g;  // reducer.target_dim x unified target_dim
};

struct UserData {
    Matrix x;
    std::vector<int> labels;
};

struct DcResult {
    Matrix x_hat;             // stacked aligned IRs, user blocks in order
    std::vector<int> labels;  // concatenated in the same order
    std::vector<UserPipeline> pipelines;
};

// Least-squares alignment: stack the anchor IRs side by side, take the top
// left singular vectors as the shared representation z, then map each
// user's anchor IR onto z with a pseudoinverse.
inline UnifiedSpace unify(std::span<const Matrix> anchor_irs, std::size_t target_dim) {
    if (anchor_irs.empty()) throw InputError("unify: no anchor IRs");
    const std::size_t r = anchor_irs.front().rows();
    std::size_t total_cols = 0;
    for (const Matrix& a : anchor_irs) {
        if (a.rows() != r)
            throw InputError("unify: anchor IR row counts differ: " +
                             std::to_string(r) + " vs " + std::to_string(a.rows()));
        total_cols += a.cols();
    }
    if (target_dim == 0 || target_dim > std::min(r, total_cols))
        throw InputError("unify: target_dim " + std::to_string(target_dim) +
                         " out of range for " + std::to_string(r) + "x" +
                         std::to_string(total_cols) + " stacked anchors");

    const Matrix stacked = hstack(anchor_irs);
    const SvdResult svd = thin_svd(stacked);

    const double s1 = svd.singular_values.front();
    const double rank_tol = static_cast<double>(std::max(stacked.rows(), stacked.cols())) *
                            std::numeric_limits<double>::epsilon() * s1;
    std::size_t rank = 0;
    while (rank < svd.singular_values.size() && svd.singular_values[rank] > rank_tol) ++rank;
    if (target_dim > rank)
        throw NumericalError("unify: target_dim " + std::to_string(target_dim) +
                             " exceeds numerical rank " + std::to_string(rank) +
                             " of the stacked anchor IRs");

    UnifiedSpace out;
    out.target_dim = target_dim;
    out.z = Matrix(r, target_dim);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < target_dim; ++j) out.z(i, j) = svd.u(i, j);
    out.g.reserve(anchor_irs.size());
    for (const Matrix& a : anchor_irs) out.g.push_back(matmul(pinv(a), out.z));
    return out;
}

inline std::pair<Matrix, std::vector<int>> build_collab_dataset(
    std::span<const Matrix> irs, const UnifiedSpace& unified,
    std::span<const std::vector<int>> labels) {
    if (irs.empty()) throw InputError("build_collab_dataset: no IRs");
    if (irs.size() != unified.g.size() || irs.size() != labels.size())
        throw InputError("build_collab_dataset: got " + std::to_string(irs.size()) +
                         " IRs, " + std::to_string(unified.g.size()) + " alignment maps, " +
                         std::to_string(labels.size()) + " label arrays");

    std::vector<Matrix> blocks;
    std::vector<int> all_labels;
    blocks.reserve(irs.size());
    for (std::size_t i = 0; i < irs.size(); ++i) {
        if (irs[i].cols() != unified.g[i].rows())
            throw InputError("build_collab_dataset: IR " + std::to_string(i) + " has " +
                             std::to_string(irs[i].cols()) + " columns, alignment map expects " +
                             std::to_string(unified.g[i].rows()));
        if (labels[i].size() != irs[i].rows())
            throw InputError("build_collab_dataset: user " + std::to_string(i) + " has " +
                             std::to_string(irs[i].rows()) + " rows but " +
                             std::to_string(labels[i].size()) + " labels");
        blocks.push_back(matmul(irs[i], unified.g[i]));
        all_labels.insert(all_labels.end(), labels[i].begin(), labels[i].end());
    }
    return {vstack(blocks), std::move(all_labels)};
}

inline Matrix transform_new(const UserPipeline& pipeline, const Matrix& x) {
    return matmul(apply_reducer(pipeline.reducer, x), pipeline.g);
}

// End-to-end pipeline: fit per-user reducers, project data and anchors,
// unify, and assemble the stacked training set. unified_dim = 0 picks the
// smallest per-user dimension.
inline DcResult dc_run(std::span<const UserData> users, const AnchorSet& anchors,
                       std::span<const std::size_t> target_dims, std::size_t unified_dim = 0,
                       bool center = false) {
    if (users.empty()) throw InputError("dc_run: no users");
    if (target_dims.size() != users.size())
        throw InputError("dc_run: " + std::to_string(users.size()) + " users but " +
                         std::to_string(target_dims.size()) + " target dims");
    const std::size_t m = anchors.data.cols();
    for (std::size_t i = 0; i < users.size(); ++i)
        if (users[i].x.cols() != m)
            throw InputError("dc_run: user " + std::to_string(i) + " has " +
                             std::to_string(users[i].x.cols()) + " features, anchors have " +
                             std::to_string(m));

    std::size_t l = unified_dim;
    if (l == 0)
        for (std::size_t d : target_dims) l = l == 0 ? d : std::min(l, d);

    std::vector<UserPipeline> pipelines(users.size());
    std::vector<Matrix> irs(users.size());
    std::vector<Matrix> anchor_irs(users.size());
    std::vector<std::vector<int>> labels(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        pipelines[i].reducer = fit_reducer(users[i].x, target_dims[i], center);
        irs[i] = apply_reducer(pipelines[i].reducer, users[i].x);
        anchor_irs[i] = apply_reducer(pipelines[i].reducer, anchors.data);
        labels[i] = users[i].labels;
    }

    UnifiedSpace unified = unify(anchor_irs, l);
    auto [x_hat, all_labels] = build_collab_dataset(irs, unified, labels);
    for (std::size_t i = 0; i < users.size(); ++i) pipelines[i].g = std::move(unified.g[i]);

    DcResult out;
    out.x_hat = std::move(x_hat);
    out.labels = std::move(all_labels);
    out.pipelines = std::move(pipelines);
    return out;
}

}  // namespace dc
