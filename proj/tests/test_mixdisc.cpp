#include "helpers.hpp"

#include <doctest.h>

using namespace capaf;
using Eigen::MatrixXd;

namespace {

MatrixXd spd(Rng& r, int n) {
    MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = r.normal();
    return R * R.transpose() + 0.2 * MatrixXd::Identity(n, n);
}

// polarization of det by inclusion-exclusion, written out independently
double md_oracle(const std::vector<MatrixXd>& A) {
    const int n = int(A.size());
    double s = 0, fact = 1;
    for (int k = 2; k <= n; ++k) fact *= k;
    for (int mask = 1; mask < (1 << n); ++mask) {
        MatrixXd S = MatrixXd::Zero(n, n);
        int c = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) S += A[i], ++c;
        s += ((n - c) % 2 ? -1.0 : 1.0) * S.determinant();
    }
    return s / fact;
}

}  // namespace

TEST_CASE("mixed discriminant: closed forms") {
    MatrixXd A(2, 2), B(2, 2);
    A << 2, 1, 1, 3;
    B << 1, 0.5, 0.5, 4;
    // n = 2: Q(A,B) = (a11 b22 + a22 b11 - 2 a12 b12) / 2
    const double expect = (2 * 4 + 3 * 1 - 2 * 1 * 0.5) / 2;
    for (auto r : {MdRoute::delta_sum, MdRoute::subset_expansion})
        CHECK(mixed_discriminant({{A, B}}, r) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(mixed_discriminant({{A, A}}) == doctest::Approx(A.determinant()).epsilon(1e-14));

    MatrixXd I = MatrixXd::Identity(3, 3);
    CHECK(mixed_discriminant({{I, I, I}}) == doctest::Approx(1.0));
    MatrixXd D = MatrixXd::Zero(3, 3);
    D.diagonal() << 1, 2, 3;
    // Q(D, I, I) = trace(D) / 3
    CHECK(mixed_discriminant({{D, I, I}}) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("mixed discriminant: random tuples against inclusion-exclusion") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 2;
        SymMatrixTuple t;
        for (int k = 0; k < n; ++k) t.mats.push_back(spd(rng, n));
        const double o = md_oracle(t.mats);
        CHECK(th::rel(mixed_discriminant(t), o) < 1e-12);
        CHECK(th::rel(mixed_discriminant(t, MdRoute::subset_expansion), o) < 1e-12);
    }
}

TEST_CASE("mixed discriminant: gradient matches finite differences") {
    Rng rng(11);
    for (int n : {2, 3}) {
        SymMatrixTuple t;
        for (int k = 0; k < n; ++k) t.mats.push_back(spd(rng, n));
        MatrixXd G = mixed_disc_gradient(t);
        const double h = 1e-6;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                SymMatrixTuple p = t, m = t;
                p.mats[0](i, j) += h;
                m.mats[0](i, j) -= h;
                if (i != j) p.mats[0](j, i) += h, m.mats[0](j, i) -= h;
                const double fd = (md_oracle(p.mats) - md_oracle(m.mats)) / (2 * h);
                const double an = i == j ? G(i, i) : G(i, j) + G(j, i);
                CHECK(an == doctest::Approx(fd).epsilon(1e-7));
            }
    }
}

TEST_CASE("mixed discriminant: transform law and Alexandrov") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 2;
        SymMatrixTuple t;
        for (int k = 0; k < n; ++k) t.mats.push_back(spd(rng, n));
        MatrixXd B = MatrixXd::Identity(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B(i, j) += 0.3 * rng.normal();
        CHECK(md_transform_check(t, B).pass);
        std::vector<MatrixXd> rest(t.mats.begin() + 2, t.mats.end());
        auto r = alexandrov_md_check(t.mats[0], t.mats[1], rest);
        CHECK(r.pass);
        CHECK(r.gap >= 0);
        // proportional pair: equality
        auto e = alexandrov_md_check(t.mats[0], 3.0 * t.mats[0], rest);
        CHECK(std::abs(e.relative_gap) < 1e-12);
    }
}

TEST_CASE("mixed discriminant: bad input") {
    MatrixXd A(2, 2), N(2, 2), C(3, 3);
    A << 1, 0, 0, 1;
    N << 1, 2, 0, 1;
    C.setIdentity();
    CHECK_THROWS_AS(mixed_discriminant({{A, N}}), Error);
    CHECK_THROWS_AS(mixed_discriminant({{A, C}}), Error);
}

TEST_CASE("report helpers") {
    auto r = make_inequality("x", 1.0, 1.0 + 1e-9, 1e-8);
    CHECK(r.pass);
    auto f = make_inequality("x", 1.0, 1.1, 1e-8);
    CHECK_FALSE(f.pass);
    auto id = make_identity("y", 1.0, 1.0 - 1e-6, 1e-8);
    CHECK_FALSE(id.pass);
    CHECK(id.is_identity);
}
