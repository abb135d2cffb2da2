#include "helpers.hpp"

#include <doctest.h>

using namespace capaf;

namespace {

Vec unit(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v.normalized();
}

}  // namespace

TEST_CASE("isotropic norm is the Euclidean length") {
    auto m = th::iso();
    Vec x(3);
    x << 0.3, -1.2, 2.0;
    CHECK(m->F(x) == doctest::Approx(x.norm()).epsilon(1e-15));
    CHECK((m->DF(x) - x / x.norm()).norm() < 1e-14);
    Mat H = (Mat::Identity(3, 3) - x * x.transpose() / x.squaredNorm()) / x.norm();
    CHECK((m->D2F(x) - H).norm() < 1e-14);
    auto [lo, hi] = omega0_range(*m);
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("ellipsoid norm: worked values") {
    Mat M = Mat::Zero(3, 3);
    M.diagonal() << 1, 1, 4;
    auto m = NormModel::ellipsoid(M);
    Vec e3 = vertical(3);
    CHECK(m.F(e3) == doctest::Approx(2.0));
    CHECK((m.DF(e3) - 2 * e3).norm() < 1e-14);
    Mat A = anisotropy_matrix(m, e3, tangent_basis(e3));
    CHECK((A - 0.5 * Mat::Identity(2, 2)).norm() < 1e-14);
    CHECK(dual_norm(m, e3) == doctest::Approx(0.5));
    CHECK(dual_norm_numeric(m, e3).value == doctest::Approx(0.5).epsilon(1e-9));
    Mat G = Mat::Zero(3, 3);
    G.diagonal() << 1, 1, 0.25;
    CHECK((metric_G(m, Vec(0.5 * e3)) - G).norm() < 1e-10);
}

TEST_CASE("ellipsoid norm: value, derivatives and dual") {
    Mat M = th::ell_matrix();
    auto m = th::ell();
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        Vec x = unit(rng.normal(), rng.normal(), rng.normal());
        const double f = std::sqrt(x.dot(M * x));
        CHECK(m->F(x) == doctest::Approx(f).epsilon(1e-14));
        CHECK((m->DF(x) - M * x / f).norm() < 1e-13);
        Mat H = M / f - (M * x) * (M * x).transpose() / (f * f * f);
        CHECK((m->D2F(x) - H).norm() < 1e-12);
        CHECK((m->fd_hessian(x, 1e-3) - H).norm() < 1e-7);
        // Cahn-Hoffman image sits on the unit sphere of the dual norm sqrt(xi^T M^-1 xi)
        Vec psi = cahn_hoffman(*m, x);
        CHECK(std::sqrt(psi.dot(M.inverse() * psi)) == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(dual_norm(*m, psi) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(dual_norm_numeric(*m, psi).value == doctest::Approx(1.0).epsilon(1e-9));
    }
    auto [lo, hi] = omega0_range(*m);
    CHECK(lo == doctest::Approx(-std::sqrt(M(2, 2))));
    CHECK(hi == doctest::Approx(std::sqrt(M(2, 2))));
}

TEST_CASE("perturbed norm: FD derivatives track the analytic ones") {
    auto fd = th::pert(DerivMode::fd);
    auto an = th::pert(DerivMode::analytic);
    Rng rng(9);
    for (int k = 0; k < 20; ++k) {
        Vec x = unit(rng.normal(), rng.normal(), std::abs(rng.normal()));
        CHECK(fd->F(x) == an->F(x));
        CHECK((fd->DF(x) - an->DF(x)).norm() < 1e-9);
        CHECK((fd->D2F(x) - an->D2F(x)).norm() < 1e-7);
        // 1-homogeneity: Euler relation and D2F x = 0
        CHECK(an->DF(x).dot(x) == doctest::Approx(an->F(x)).epsilon(1e-12));
        CHECK((an->D2F(x) * x).norm() < 1e-10);
    }
    // the sample point where the perturbation is largest still has A_F > 0
    Vec c = unit(0.6, 0, 0.8);
    Mat A = anisotropy_matrix(*an, c, tangent_basis(c));
    CHECK(Eigen::SelfAdjointEigenSolver<Mat>(A).eigenvalues().minCoeff() > 0);
}

TEST_CASE("perturbed norm: losing convexity is rejected") {
    Mat M = Mat::Identity(3, 3);
    auto terms = th::small_terms();
    terms[0].amplitude = 0.5;
    terms[0].width = 0.3;
    CHECK_THROWS_AS(NormModel::perturbed(M, terms), Error);
    try {
        NormModel::perturbed(M, terms);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::model_invalid);
    }
}

TEST_CASE("metric G at Psi(x) inverts D^2(F^2/2)") {
    auto m = th::ell();
    Vec x = unit(0.2, -0.4, 0.9);
    Mat G = metric_G(*m, cahn_hoffman(*m, x));
    CHECK((G * m->half_square_hessian(x) - Mat::Identity(3, 3)).norm() < 1e-10);
    // ellipsoids: G is the constant M^{-1}
    CHECK((G - th::ell_matrix().inverse()).norm() < 1e-10);
}
