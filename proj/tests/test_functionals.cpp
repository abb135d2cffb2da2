#include "helpers.hpp"

#include <doctest.h>

using namespace capaf;
using std::numbers::pi;

namespace {

// volume of the polyhedron spanned by boundary points of the body at mesh
// vertices; the flat face lies in a plane through the origin so it adds nothing
double polyhedral_volume(const CapillaryBody& b) {
    const CapMesh& m = b.mesh();
    std::vector<Vec> X;
    for (const Vec& v : m.vertices) {
        double s;
        Vec g;
        b.support().eval(m.norm(), v, &s, &g, nullptr);
        X.push_back(g);
    }
    double vol = 0;
    for (const auto& t : m.simplices) {
        Mat D(3, 3);
        D << X[t[0]], X[t[1]], X[t[2]];
        vol += D.determinant() / 6;
    }
    return vol;
}

}  // namespace

TEST_CASE("hemisphere and half-disk volumes") {
    auto m = th::mesh(th::iso(), 0.0, 4);
    CHECK(th::rel(volume(make_wulff_cap(m)), 2 * pi / 3) < 5e-3);
    auto m1 = th::mesh(th::iso(2), 0.0, 5, 1);
    CHECK(th::rel(volume(make_wulff_cap(m1)), pi / 2) < 1e-6);
}

TEST_CASE("spherical cap volume for other contact angles") {
    // unit ball centred at omega0 E, cut by the plane: a cap of height 1 + omega0
    for (double w0 : {-0.5, 0.5}) {
        auto m = th::mesh(th::iso(), w0, 4);
        const double hgt = 1 + w0;
        const double capvol = pi * hgt * hgt * (3 - hgt) / 3;
        CHECK(th::rel(volume(make_wulff_cap(m)), capvol) < 1e-6);
    }
}

TEST_CASE("half-disk mixed volume is (pi/2) r1 r2") {
    auto m = th::mesh(th::iso(2), 0.0, 5, 1);
    auto a = make_wulff_cap(m, 0.7), b = make_wulff_cap(m, 1.9);
    for (auto r : {MvRoute::anisotropic, MvRoute::euclidean, MvRoute::polyfit})
        CHECK(th::rel(mixed_volume_value({&a, &b}, r), pi / 2 * 0.7 * 1.9) < 1e-4);
}

TEST_CASE("random body volume against a polyhedral oracle") {
    for (auto nm : {th::iso(), th::ell()}) {
        auto m = th::mesh(nm, -0.3, 4);
        auto b = random_capillary_body(m, 5, 0.03);
        CHECK(th::rel(volume(b), polyhedral_volume(b)) < 5e-3);
    }
}

TEST_CASE("mixed volume routes, diagonal and scaling") {
    auto m = th::mesh(th::ell(), -0.3, 3);
    auto a = random_capillary_body(m, 1, 0.03), b = random_capillary_body(m, 2, 0.03),
         c = random_capillary_body(m, 3, 0.03);
    BodyList l{&a, &b, &c};
    const double e = mixed_volume_value(l, MvRoute::euclidean);
    CHECK(th::rel(mixed_volume_value(l, MvRoute::anisotropic), e) < 1e-10);
    CHECK(th::rel(mixed_volume_value(l, MvRoute::polyfit), e) < 1e-6);
    for (auto r : {MvRoute::anisotropic, MvRoute::euclidean})
        CHECK(th::rel(mixed_volume_value({&a, &a, &a}, r), volume(a)) < 1e-12);
    auto a2 = minkowski_combine({&a}, {2.5});
    CHECK(th::rel(mixed_volume_value({&a2, &b, &c}), 2.5 * mixed_volume_value(l)) < 1e-12);
    CHECK(th::rel(volume(a2), std::pow(2.5, 3) * volume(a)) < 1e-12);

    auto other = th::mesh(th::ell(), -0.3, 2);
    auto d = random_capillary_body(other, 4, 0.03);
    CHECK_THROWS_AS(mixed_volume_value({&a, &b, &d}), Error);
}

TEST_CASE("horizontal translation leaves the functionals unchanged") {
    auto m = th::mesh(th::ell(), -0.3, 3);
    auto a = random_capillary_body(m, 1, 0.03), b = random_capillary_body(m, 2, 0.03);
    Vec v(3);
    v << 0.2, -0.1, 0;
    auto ta = translate(a, v);
    CHECK(th::rel(volume(ta), volume(a)) < 1e-12);
    CHECK(th::rel(mixed_volume_value({&ta, &b, &b}), mixed_volume_value({&a, &b, &b})) < 1e-12);
    CHECK(th::rel(mixed_volume_value({&b, &ta, &b}), mixed_volume_value({&b, &a, &b})) < 1e-12);
    for (int k = -1; k <= 2; ++k) CHECK(th::rel(quermassintegral(ta, k), quermassintegral(a, k)) < 1e-12);
}

TEST_CASE("symmetry: equal bodies exact, swap converges, trailing exact") {
    auto m = th::mesh(th::iso(), -0.3, 3);
    auto a = random_capillary_body(m, 1, 0.03);
    auto s = symmetry_check({&a, &a, &a}, 1);
    CHECK(s.swap.gap == 0.0);
    double prev = 1;
    for (int L = 2; L <= 4; ++L) {
        auto mm = th::mesh(th::ell(), -0.3, L);
        CapillaryBody x(mm, a.support()), y(mm, random_capillary_body(m, 2, 0.03).support()),
            z(mm, random_capillary_body(m, 3, 0.03).support());
        auto r = symmetry_check({&x, &y, &z}, 9);
        CHECK(std::abs(r.trailing.relative_gap) <= 1e-12);
        CHECK(std::abs(r.swap.relative_gap) < prev / 2);
        prev = std::abs(r.swap.relative_gap);
    }
}

TEST_CASE("Wulff cap quermassintegrals scale by homogeneity") {
    auto m = th::mesh(th::ell(), -0.3, 3);
    auto unit = make_wulff_cap(m, 1.0), W = make_wulff_cap(m, 1.4);
    const double cap = volume(unit);
    for (int j = 0; j <= 3; ++j)
        CHECK(th::rel(quermassintegral(W, j - 1), std::pow(1.4, 3 - j) * cap) < 1e-10);
    CHECK(th::rel(quermassintegral(W, 2), cap) < 1e-10);  // V_{n+1} is the cap volume
    for (int k = 1; k <= 2; ++k)
        for (int l = 0; l < k; ++l) {
            auto r = quermassintegral_chain_check(W, k, l, 1e-6, true);
            CHECK(r.pass);
            CHECK(r.lhs == doctest::Approx(1.4).epsilon(1e-9));
        }
}

TEST_CASE("quermassintegral: interior formula, mixed volumes, boundary form") {
    auto m = th::mesh(th::ell(), -0.3, 4);
    auto a = random_capillary_body(m, 6, 0.03);
    auto cap = make_wulff_cap(m);
    CHECK(th::rel(quermassintegral(a, -1), volume(a)) < 1e-14);
    for (int k = 0; k <= 2; ++k) CHECK(th::rel(quermassintegral(a, k), quermassintegral_mixed(a, cap, k)) < 1e-5);
    CHECK(th::rel(quermass_one_boundary_form(a), quermassintegral(a, 0)) < 2e-3);
}

TEST_CASE("Minkowski formula residual shrinks under refinement") {
    auto m = th::mesh(th::ell(), -0.3, 3);
    auto a = random_capillary_body(m, 4, 0.03);
    auto W = make_wulff_cap(m);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(minkowski_formula_residual(W, k)) < 1e-3);
    double prev = 1;
    for (int L = 2; L <= 4; ++L) {
        CapillaryBody b(th::mesh(th::ell(), -0.3, L), a.support());
        double r = std::abs(minkowski_formula_residual(b, 0));
        CHECK(r < prev / 2);
        prev = r;
    }
    // classical hemisphere
    auto h = make_wulff_cap(th::mesh(th::iso(), 0.0, 4));
    CHECK(std::abs(minkowski_formula_residual(h, 0)) < 1e-6);
}

TEST_CASE("Steiner polynomial") {
    auto m = th::mesh(th::iso(), -0.3, 4);
    auto cap = make_wulff_cap(m);
    auto a = random_capillary_body(m, 2, 0.03);
    auto r = steiner_check(a, cap, {0.5, 1, 1.5, 2, 2.5});
    CHECK(r.report.pass);
    CHECK(r.max_rel_error < 1e-4);
    // the cap itself: (1 + t)^3 |C|
    auto c = steiner_check(cap, cap, {0.5, 1, 1.5, 2, 2.5});
    const double v = volume(cap);
    for (int k = 0; k <= 3; ++k) CHECK(th::rel(c.fitted[k], binom(3, k) * v) < 1e-8);
}

TEST_CASE("divergence identity") {
    auto m = th::mesh(th::iso(), -0.3, 4);
    auto cap = make_wulff_cap(m);
    CHECK(divergence_identity_check({&cap, &cap}).max_residual < 1e-8);
    auto a = random_capillary_body(m, 1, 0.03), b = random_capillary_body(m, 2, 0.03);
    CHECK(divergence_identity_check({&a, &b}).max_residual < 1e-3);
    auto mp = th::mesh(th::pert(), -0.3, 2);
    auto p = random_capillary_body(mp, 1, 0.03);
    CHECK_THROWS_AS(divergence_identity_check({&p, &p}), Error);
}

TEST_CASE("operator A") {
    auto m = th::mesh(th::ell(), -0.3, 4);
    auto f2 = random_capillary_body(m, 1, 0.03), f = random_capillary_body(m, 2, 0.03),
         g = random_capillary_body(m, 3, 0.03);
    OperatorA op({&f2});
    CHECK(operator_A_eigen_residual(f2, op) < 1e-12);
    CHECK(operator_A_energy_check(g, op).pass);
    auto e = operator_A_energy_check(f2, op);
    CHECK(std::abs(e.relative_gap) < 1e-12);
    CHECK(std::abs(operator_A_selfadjoint_check(f, g, op, 1e-6).relative_gap) < 1e-6);
    // kernel functions are annihilated up to discretisation
    ScalarField k = kernel_field(m->norm(), 0);
    Mat t = tau_fd_field(*m, 10, k, m->h);
    CHECK(t.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("Alexandrov-Fenchel inequality and its equality case") {
    for (double w0 : {-0.5, 0.0, 0.5}) {
        auto m = th::mesh(th::iso(), w0, 3);
        auto a = random_capillary_body(m, 1, 0.03), b = random_capillary_body(m, 2, 0.03),
             c = random_capillary_body(m, 3, 0.03);
        CHECK(af_inequality_check({&a, &b, &c}).pass);
        CHECK(af_inequality_check({&a, &a, &c}).gap == 0.0);
        Vec v(3);
        v << 0.1, 0, 0;
        auto k1 = translate(minkowski_combine({&b}, {2.0}), v);
        auto eq = af_inequality_check({&k1, &b, &c}, 1e-6, true);
        CHECK(eq.pass);
        for (int k = 1; k <= 2; ++k)
            for (int l = 0; l < k; ++l) CHECK(quermassintegral_chain_check(a, k, l).pass);
        CHECK(generalized_chain_check(a, b, {}, 3, 0, 1, 2).pass);
        CHECK(generalized_chain_check(k1, b, {}, 3, 0, 2, 3, 1e-6, true).pass);
    }
}

TEST_CASE("convergence study table") {
    auto rows = convergence_study(1, 4, [](int L) { return std::pair{1.0, std::pow(4.0, -L)}; });
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].ratio == 0);
    CHECK(rows[3].ratio == doctest::Approx(4.0));
}
