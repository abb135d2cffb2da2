// End-to-end acceptance run: one PASS/FAIL line per criterion.
#include "config.hpp"
#include "helpers.hpp"
#include "suite.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace capaf;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void need(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string sci(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2e", v);
    return b;
}

struct Family {
    std::string name;
    std::shared_ptr<const NormModel> norm;
    double omega0;
};

std::vector<Family> af_families() {
    return {{"isotropic 60deg", th::iso(), -std::cos(pi / 3)},
            {"isotropic 90deg", th::iso(), 0.0},
            {"isotropic 120deg", th::iso(), -std::cos(2 * pi / 3)},
            {"ellipsoid", th::ell(), -0.3},
            {"perturbed fd", th::pert(DerivMode::fd), -0.3}};
}

// residuals per level with the fields held fixed
std::vector<double> per_level(int lo, int hi, const std::function<double(const std::shared_ptr<const CapMesh>&)>& f,
                              const std::shared_ptr<const NormModel>& nm, double w0) {
    std::vector<double> r;
    for (int L = lo; L <= hi; ++L) r.push_back(f(th::mesh(nm, w0, L)));
    return r;
}

double min_ratio(const std::vector<double>& r) {
    double m = 1e300;
    for (std::size_t k = 1; k < r.size(); ++k) m = std::min(m, r[k - 1] / r[k]);
    return m;
}

Outcome c1() {
    Outcome o;
    auto c = cli::parse_config_text("[geometry]\nomega0 = 0\n[suites]\nrun = mixdisc\n");
    auto t0 = std::chrono::steady_clock::now();
    auto r = cli::run_suite(c);
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& rec : r.records) o.need(rec.pass, rec.name + " rel " + sci(rec.relative_gap));
    o.need(s < 5, "runtime " + sci(s));
    o.detail += (o.detail.empty() ? "" : "; ") + std::to_string(r.records.size()) + " properties x 1000 tuples";
    return o;
}

Outcome c2() {
    Outcome o;
    auto m = th::mesh(th::iso(), 0.0, 4);
    double v = volume(make_wulff_cap(m));
    o.need(th::rel(v, 2 * pi / 3) < 5e-3, "hemisphere rel " + sci(th::rel(v, 2 * pi / 3)));
    auto m1 = th::mesh(th::iso(2), 0.0, 4, 1);
    auto a = make_wulff_cap(m1, 0.6), b = make_wulff_cap(m1, 1.5);
    for (auto r : {MvRoute::anisotropic, MvRoute::euclidean, MvRoute::polyfit}) {
        double e = th::rel(mixed_volume_value({&a, &b}, r), pi / 2 * 0.6 * 1.5);
        o.need(e < 1e-4, std::string("half-disk ") + to_string(r) + " rel " + sci(e));
    }
    o.detail += (o.detail.empty() ? "" : "; ") + std::string("hemisphere rel ") + sci(th::rel(v, 2 * pi / 3));
    return o;
}

Outcome c3() {
    Outcome o;
    double worst_ae[2] = {0, 0}, worst_pf = 0;
    int f = 0;
    for (auto nm : {th::ell(), th::pert(DerivMode::fd)}) {
        auto m = th::mesh(nm, -0.3, 4);
        for (std::uint64_t s = 1; s <= 20; ++s) {
            std::vector<CapillaryBody> b;
            for (int j = 0; j < 3; ++j) b.push_back(random_capillary_body(m, cli::tuple_seed(s, j), 0.03));
            BodyList l{&b[0], &b[1], &b[2]};
            double e = mixed_volume_value(l, MvRoute::euclidean), a = mixed_volume_value(l, MvRoute::anisotropic);
            double p = mixed_volume_value(l, MvRoute::polyfit);
            worst_ae[f] = std::max(worst_ae[f], th::rel(a, e));
            worst_pf = std::max({worst_pf, th::rel(p, e), th::rel(p, a)});
        }
        ++f;
    }
    o.need(worst_ae[0] <= 1e-8, "ellipsoid aniso/eucl " + sci(worst_ae[0]));
    o.need(worst_ae[1] <= 1e-5, "perturbed aniso/eucl " + sci(worst_ae[1]));
    o.need(worst_pf <= 1e-4, "polyfit " + sci(worst_pf));
    if (o.pass)
        o.detail = "20 tuples per norm; worst gaps " + sci(worst_ae[0]) + " / " + sci(worst_ae[1]) + ", polyfit " +
                   sci(worst_pf);
    return o;
}

Outcome c4() {
    Outcome o;
    double wt = 0, wq = 0, wc = 0;
    for (auto nm : {th::iso(), th::ell(), th::pert(DerivMode::fd)}) {
        auto m = th::mesh(nm, -0.3, 4);
        const double r0 = 1.6;
        auto W = make_wulff_cap(m, r0), C = make_wulff_cap(m, 1.0);
        for (int i = 0; i < int(m->nodes.size()); ++i)
            wt = std::max(wt, (tau_matrix(W, i) - r0 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff());
        const double cap = volume(C);
        for (int k = 0; k <= 3; ++k) wq = std::max(wq, th::rel(quermassintegral(W, k - 1), std::pow(r0, 3 - k) * cap));
        for (int k = 1; k <= 2; ++k)
            for (int l = 0; l < k; ++l) {
                auto r = quermassintegral_chain_check(W, k, l, 1e-6, true);
                o.need(r.pass, "chain " + std::to_string(k) + std::to_string(l));
                wc = std::max(wc, std::abs(r.relative_gap));
            }
    }
    o.need(wt <= 1e-6, "tau " + sci(wt));
    o.need(wq <= 1e-5, "quermass " + sci(wq));
    if (o.pass) o.detail = "tau " + sci(wt) + ", quermass " + sci(wq) + ", chain " + sci(wc);
    return o;
}

Outcome c5() {
    Outcome o;
    std::string info;
    std::vector<Family> fams = {{"isotropic", th::iso(), -0.3},
                                {"ellipsoid", th::ell(), -0.3},
                                {"perturbed", th::pert(DerivMode::analytic), -0.3}};
    for (const auto& f : fams) {
        auto r = per_level(2, 4, [](const auto& m) {
            double w = 0;
            for (int a = 0; a < m->n; ++a) {
                ScalarField k = kernel_field(m->norm(), a);
                for (int i = 0; i < int(m->nodes.size()); ++i)
                    w = std::max(w, tau_fd_field(*m, i, k, m->h).cwiseAbs().maxCoeff());
            }
            return w;
        }, f.norm, f.omega0);
        o.need(r.back() <= 1e-4, f.name + " level 4 " + sci(r.back()));
        o.need(min_ratio(r) >= 2, f.name + " ratio " + sci(min_ratio(r)));
        info += (info.empty() ? "" : ", ") + f.name + " " + sci(r.back()) + " (x" + sci(min_ratio(r)) + ")";
    }
    if (o.pass) o.detail = info;
    return o;
}

Outcome c6() {
    Outcome o;
    double worst = 1e300;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        auto nm = s % 2 ? th::ell() : th::iso();
        auto ref = th::mesh(nm, -0.3, 4);
        SupportField fld = random_capillary_body(ref, s, 0.03).support();
        for (int k = 0; k < 2; ++k) {
            auto r = per_level(3, 5, [&](const auto& m) {
                CapillaryBody b(m, fld);
                return std::abs(minkowski_formula_residual(b, k));
            }, nm, -0.3);
            worst = std::min(worst, min_ratio(r));
            o.need(min_ratio(r) >= 2, "seed " + std::to_string(s) + " k=" + std::to_string(k) + " ratio " +
                                          sci(min_ratio(r)) + " (" + sci(r[0]) + ", " + sci(r[1]) + ", " + sci(r[2]) +
                                          ")");
        }
    }
    if (o.pass) o.detail = "10 bodies, k = 0, 1, levels 3-5, min ratio " + sci(worst);
    return o;
}

Outcome c7() {
    Outcome o;
    double worst = 1e300, trail = 0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        auto nm = th::ell();
        auto ref = th::mesh(nm, -0.3, 4);
        std::vector<SupportField> f;
        for (int j = 0; j < 3; ++j) f.push_back(random_capillary_body(ref, cli::tuple_seed(s, j), 0.03).support());
        auto r = per_level(3, 5, [&](const auto& m) {
            CapillaryBody a(m, f[0]), b(m, f[1]), c(m, f[2]);
            auto sc = symmetry_check({&a, &b, &c}, s);
            trail = std::max(trail, std::abs(sc.trailing.relative_gap));
            return std::abs(sc.swap.relative_gap);
        }, nm, -0.3);
        worst = std::min(worst, min_ratio(r));
        o.need(min_ratio(r) >= 2, "seed " + std::to_string(s) + " swap ratio " + sci(min_ratio(r)));
    }
    o.need(trail <= 1e-12, "trailing " + sci(trail));
    if (o.pass) o.detail = "swap min ratio " + sci(worst) + ", trailing max " + sci(trail);
    return o;
}

Outcome c8() {
    Outcome o;
    double worst = 0;
    for (std::uint64_t s = 1; s <= 10; ++s) {
        auto nm = s % 2 ? th::ell() : th::iso();
        auto m = th::mesh(nm, -0.3, 4);
        auto cap = make_wulff_cap(m);
        auto st = steiner_check(random_capillary_body(m, s, 0.03), cap, {0.5, 1, 1.5, 2, 2.5});
        worst = std::max(worst, st.max_rel_error);
    }
    o.need(worst <= 1e-4, "max coefficient error " + sci(worst));
    if (o.pass) o.detail = "10 bodies, max coefficient error " + sci(worst);
    return o;
}

Outcome c9() {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    int tuples = 0, checks = 0;
    double worst_af = 1e300, worst_eq = 0;
    for (const auto& fam : af_families()) {
        auto m = th::mesh(fam.norm, fam.omega0, 4);
        for (std::uint64_t s = 1; s <= 10; ++s) {
            std::vector<CapillaryBody> b;
            for (int j = 0; j < 3; ++j) b.push_back(random_capillary_body(m, cli::tuple_seed(s, j), 0.03));
            auto r = af_inequality_check({&b[0], &b[1], &b[2]}, 1e-8);
            ++tuples;
            ++checks;
            worst_af = std::min(worst_af, r.relative_gap);
            o.need(r.pass, fam.name + " seed " + std::to_string(s) + " af gap " + sci(r.relative_gap));
            Vec v = Vec::Zero(3);
            v(0) = 0.1;
            auto k1 = translate(minkowski_combine({&b[1]}, {2.0}), v);
            auto e = af_inequality_check({&k1, &b[1], &b[2]}, 1e-6, true);
            ++checks;
            worst_eq = std::max(worst_eq, std::abs(e.relative_gap));
            o.need(e.pass, fam.name + " equality gap " + sci(e.relative_gap));
            for (int k = 1; k <= 2; ++k)
                for (int l = 0; l < k; ++l) {
                    ++checks;
                    o.need(quermassintegral_chain_check(b[0], k, l, 1e-7).pass, fam.name + " quermass chain");
                }
            for (int mm = 2; mm <= 3; ++mm) {
                BodyList tr;
                if (mm == 2) tr.push_back(&b[2]);
                for (int i = 0; i <= mm; ++i)
                    for (int j = i + 1; j <= mm; ++j)
                        for (int k = j + 1; k <= mm; ++k) {
                            checks += 2;
                            o.need(generalized_chain_check(b[0], b[1], tr, mm, i, j, k, 1e-7).pass,
                                   fam.name + " generalized chain");
                            o.need(generalized_chain_check(k1, b[1], tr, mm, i, j, k, 1e-6, true).pass,
                                   fam.name + " generalized chain equality");
                        }
            }
        }
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.need(s < 600, "runtime " + sci(s));
    if (o.pass)
        o.detail = std::to_string(tuples) + " tuples, " + std::to_string(checks) + " checks, min af gap " +
                   sci(worst_af) + ", equality " + sci(worst_eq);
    return o;
}

Outcome c10() {
    Outcome o;
    auto nm = th::ell();
    auto m = th::mesh(nm, -0.3, 4);
    auto f2 = random_capillary_body(m, 100, 0.03);
    OperatorA op({&f2});
    double eig = operator_A_eigen_residual(f2, op);
    o.need(eig <= 1e-8, "eigen " + sci(eig));
    double worst_energy = 1e300;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        // bodies and differences of bodies
        auto a = random_capillary_body(m, 2 * s, 0.03), b = random_capillary_body(m, 2 * s + 1, 0.03);
        CapillaryBody g = s % 2 ? a : CapillaryBody(m, combine_fields({&a.support(), &b.support()}, {1.0, -0.7}));
        auto r = operator_A_energy_check(g, op, 1e-6);
        worst_energy = std::min(worst_energy, r.relative_gap);
        o.need(r.pass, "energy seed " + std::to_string(s) + " " + sci(r.relative_gap));
    }
    auto ref_f = random_capillary_body(m, 7, 0.03).support(), ref_g = random_capillary_body(m, 8, 0.03).support();
    auto r = per_level(2, 5, [&](const auto& mm) {
        CapillaryBody F2(mm, f2.support()), f(mm, ref_f), g(mm, ref_g);
        OperatorA A({&F2});
        return std::abs(operator_A_selfadjoint_check(f, g, A, 0).relative_gap);
    }, nm, -0.3);
    bool dec = true;
    for (std::size_t k = 1; k < r.size(); ++k) dec = dec && r[k] < r[k - 1];
    o.need(dec, "self-adjoint deviation " + sci(r[0]) + " .. " + sci(r.back()));
    if (o.pass)
        o.detail = "eigen " + sci(eig) + ", min energy gap " + sci(worst_energy) + ", self-adjoint " + sci(r[0]) +
                   " -> " + sci(r.back());
    return o;
}

Outcome c11() {
    Outcome o;
    auto c = cli::parse_config_text(
        "[geometry]\nomega0 = -0.3\n[norm]\nfamily = perturbed\nmatrix = 1.1 0 0 0 0.95 0 0 0 1\n"
        "terms = bump 0.6 0 0.8 0.6 0.008\n[mesh]\nlevel = 3\n[seeds]\nvalues = 1..2\n");
    c.jobs = 1;
    auto a = cli::run_suite(c);
    auto b = cli::run_suite(c);
    c.jobs = 4;
    auto p = cli::run_suite(c);
    o.need(cli::report_json(a) == cli::report_json(b), "repeat run differs");
    o.need(cli::report_json(a) == cli::report_json(p), "--jobs 4 differs");
    o.need(cli::report_csv(a) == cli::report_csv(p), "csv differs");
    if (o.pass) o.detail = std::to_string(a.records.size()) + " records identical across 3 runs";
    return o;
}

}  // namespace

int main() {
    std::vector<std::pair<const char*, Outcome (*)()>> crit = {
        {"mixed-discriminant algebra", c1},     {"isotropic reduction", c2},
        {"route equivalence", c3},              {"Wulff cap exactness", c4},
        {"kernel functions", c5},               {"Minkowski formula convergence", c6},
        {"symmetry of V", c7},                  {"Steiner formula", c8},
        {"Alexandrov-Fenchel and chains", c9},  {"operator A", c10},
        {"determinism", c11},
    };
    int failed = 0;
    for (std::size_t k = 0; k < crit.size(); ++k) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = crit[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %2zu  %-32s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", k + 1, crit[k].first, s,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
