#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "dc/error.hpp"
#include "dc/matrix.hpp"
#include "dc/rng.hpp"
#include "dc/svd.hpp"
#include "support/oracles.hpp"

using dc::Matrix;

namespace {

Matrix reconstruct(const dc::SvdResult& r) {
    Matrix us = r.u;
    for (std::size_t j = 0; j < us.cols(); ++j)
        for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= r.singular_values[j];
    return dc::matmul(us, dc::transpose(r.v));
}

double gram_identity_error(const Matrix& q) {
    return dc::max_abs_diff(dc::matmul(dc::transpose(q), q), Matrix::identity(q.cols()));
}

void check_svd_invariants(const Matrix& a, double ortho_tol = 1e-10, double recon_tol = 1e-8) {
    dc::SvdResult r = dc::thin_svd(a);
    const std::size_t k = std::min(a.rows(), a.cols());
    REQUIRE(r.u.rows() == a.rows());
    REQUIRE(r.u.cols() == k);
    REQUIRE(r.v.rows() == a.cols());
    REQUIRE(r.v.cols() == k);
    REQUIRE(r.singular_values.size() == k);

    for (std::size_t j = 0; j < k; ++j) {
        REQUIRE(r.singular_values[j] >= 0.0);
        if (j > 0) REQUIRE(r.singular_values[j - 1] >= r.singular_values[j]);
    }
    REQUIRE(gram_identity_error(r.u) <= ortho_tol);
    REQUIRE(gram_identity_error(r.v) <= ortho_tol);

    const double s1 = r.singular_values.front();
    REQUIRE(dc::max_abs_diff(reconstruct(r), a) <= recon_tol * std::max(1.0, s1));

    // The oracle squares the matrix, so its small singular values are only
    // reliable to about sqrt(eps) * s1; compare with that floor in mind.
    const std::vector<double> ref = oracle::singular_values(a);
    for (std::size_t j = 0; j < k; ++j)
        REQUIRE(std::abs(r.singular_values[j] - ref[j]) <= 1e-6 * std::max(1.0, s1));
}

}  // namespace

TEST_CASE("svd of simple known matrices") {
    Matrix d{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}};
    dc::SvdResult r = dc::thin_svd(d);
    REQUIRE(r.singular_values == std::vector<double>{3.0, 2.0, 1.0});
    REQUIRE(r.u == Matrix::identity(3));
    REQUIRE(r.v == Matrix::identity(3));

    Matrix tall{{1, 0}, {0, 1}, {0, 0}};
    r = dc::thin_svd(tall);
    REQUIRE(r.singular_values == std::vector<double>{1.0, 1.0});
    REQUIRE(dc::max_abs_diff(reconstruct(r), tall) == 0.0);

    Matrix col{{3}, {4}};
    r = dc::thin_svd(col);
    REQUIRE(r.singular_values.size() == 1);
    REQUIRE(r.singular_values[0] == Catch::Approx(5.0).margin(1e-12));
    REQUIRE(r.u(1, 0) > 0.0);  // largest-magnitude entry forced positive

    Matrix rank1{{3, 0}, {4, 0}};
    r = dc::thin_svd(rank1);
    REQUIRE(r.singular_values[0] == Catch::Approx(5.0).margin(1e-12));
    REQUIRE(r.singular_values[1] == 0.0);
    REQUIRE(gram_identity_error(r.u) <= 1e-12);
    REQUIRE(dc::max_abs_diff(reconstruct(r), rank1) <= 1e-12);
}

TEST_CASE("svd handles wide, zero and tiny matrices") {
    Matrix wide{{1, 2, 3}, {4, 5, 6}};
    check_svd_invariants(wide);

    Matrix zero(4, 3);
    dc::SvdResult r = dc::thin_svd(zero);
    REQUIRE(r.singular_values == std::vector<double>{0.0, 0.0, 0.0});
    REQUIRE(gram_identity_error(r.u) == 0.0);
    REQUIRE(gram_identity_error(r.v) <= 1e-15);

    Matrix one{{-2.5}};
    r = dc::thin_svd(one);
    REQUIRE(r.singular_values[0] == 2.5);
    REQUIRE(r.u(0, 0) * r.v(0, 0) * 2.5 == -2.5);

    check_svd_invariants(Matrix{{1e-8, 0}, {0, 1e8}});
}

TEST_CASE("svd rejects invalid input") {
    REQUIRE_THROWS_AS(dc::thin_svd(Matrix()), dc::InputError);
    Matrix bad{{1, 2}, {3, 4}};
    bad(1, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(dc::thin_svd(bad), dc::InputError);
}

TEST_CASE("svd property suite over random shapes") {
    dc::Rng shape_rng(2024);
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        dc::Rng rng(dc::derive_seed(777, seed));
        const std::size_t rows = 1 + shape_rng.bounded(50);
        const std::size_t cols = 1 + shape_rng.bounded(50);
        Matrix a;
        switch (seed % 4) {
            case 0: a = oracle::random_matrix(rng, rows, cols); break;
            case 1: a = oracle::random_matrix(rng, rows, cols, -1e4, 1e4); break;
            case 2: {
                const std::size_t rank = 1 + rng.bounded(std::min(rows, cols));
                a = oracle::random_low_rank(rng, rows, cols, rank);
                break;
            }
            default: a = oracle::random_matrix(rng, rows, cols, -1e-6, 1e-6); break;
        }
        CAPTURE(seed, rows, cols);
        check_svd_invariants(a);
    }
}

TEST_CASE("svd is deterministic") {
    dc::Rng rng(5150);
    Matrix a = oracle::random_matrix(rng, 37, 23);
    dc::SvdResult r1 = dc::thin_svd(a);
    dc::SvdResult r2 = dc::thin_svd(a);
    REQUIRE(r1.u == r2.u);
    REQUIRE(r1.v == r2.v);
    REQUIRE(r1.singular_values == r2.singular_values);
}

TEST_CASE("pinv satisfies the Moore-Penrose conditions") {
    dc::Rng rng(31337);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t rows = 1 + rng.bounded(20);
        const std::size_t cols = 1 + rng.bounded(20);
        Matrix a = rep % 3 == 2
                       ? oracle::random_low_rank(rng, rows, cols, 1 + rng.bounded(std::min(rows, cols)))
                       : oracle::random_matrix(rng, rows, cols);
        Matrix p = dc::pinv(a);
        REQUIRE(p.rows() == cols);
        REQUIRE(p.cols() == rows);

        const double scale = std::max(1.0, dc::frobenius_norm(a));
        Matrix ap = dc::matmul(a, p);
        Matrix pa = dc::matmul(p, a);
        CAPTURE(rep, rows, cols);
        REQUIRE(dc::max_abs_diff(dc::matmul(ap, a), a) <= 1e-8 * scale);
        REQUIRE(dc::max_abs_diff(dc::matmul(pa, p), p) <= 1e-8 * std::max(1.0, dc::frobenius_norm(p)));
        REQUIRE(dc::max_abs_diff(ap, dc::transpose(ap)) <= 1e-8 * scale);
        REQUIRE(dc::max_abs_diff(pa, dc::transpose(pa)) <= 1e-8 * scale);
    }
}

TEST_CASE("pinv of an invertible matrix is its inverse") {
    Matrix a{{4, 7}, {2, 6}};
    Matrix want{{0.6, -0.7}, {-0.2, 0.4}};
    REQUIRE(dc::max_abs_diff(dc::pinv(a), want) <= 1e-12);
}

TEST_CASE("pinv of zero and rank-deficient matrices") {
    Matrix z(3, 2);
    Matrix p = dc::pinv(z);
    REQUIRE(p.rows() == 2);
    REQUIRE(p.cols() == 3);
    REQUIRE(dc::frobenius_norm(p) == 0.0);

    // pinv of a rank-1 outer product u v^T is v u^T / (|u|^2 |v|^2)
    Matrix u{{1}, {2}, {2}};
    Matrix v{{3, 4}};
    Matrix a = dc::matmul(u, v);
    Matrix expect(2, 3);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) expect(i, j) = v(0, i) * u(j, 0) / (9.0 * 25.0);
    REQUIRE(dc::max_abs_diff(dc::pinv(a), expect) <= 1e-12);
}
