#include "suite.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace capaf::cli {

namespace {

using json = nlohmann::ordered_json;
using MeshPtr = std::shared_ptr<const CapMesh>;

std::string fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// collects the records of one (suite, seed) task
struct Sink {
    const SuiteConfig& cfg;
    std::string suite;
    std::int64_t seed;
    std::string model;
    std::vector<Record> out;
    std::vector<ConvergenceTable> tables;

    Record& add(const InequalityReport& r, const std::string& name = {}) {
        Record rec;
        rec.suite = suite;
        rec.seed = seed;
        rec.name = name.empty() ? r.name : name;
        rec.inputs_digest = fnv1a(model + "|" + suite + "|" + std::to_string(seed) + "|" + rec.name);
        rec.lhs = r.lhs;
        rec.rhs = r.rhs;
        rec.gap = r.gap;
        rec.relative_gap = r.relative_gap;
        rec.tolerance = r.tolerance;
        rec.pass = r.pass;
        rec.equality_expected = r.equality_expected;
        out.push_back(rec);
        return out.back();
    }
    // value must stay at or below an absolute bound
    Record& bound(const std::string& name, double value, double tol) {
        InequalityReport r;
        r.lhs = value;
        r.rhs = 0;
        r.gap = value;
        r.relative_gap = value;
        r.tolerance = tol;
        r.pass = std::isfinite(value) && value <= tol;
        return add(r, name);
    }
    // value must reach at least the threshold
    Record& at_least(const std::string& name, double value, double threshold) {
        InequalityReport r;
        r.lhs = value;
        r.rhs = threshold;
        r.gap = value - threshold;
        r.relative_gap = r.gap / std::max(std::abs(threshold), 1e-30);
        r.tolerance = 0;
        r.pass = std::isfinite(value) && value >= threshold;
        return add(r, name);
    }
    Record& failure(const std::string& name, const std::string& why) {
        InequalityReport r;
        r.lhs = r.rhs = r.gap = r.relative_gap = std::nan("");
        r.pass = false;
        Record& rec = add(r, name);
        rec.note = why;
        return rec;
    }
    double t(const std::string& k) const { return cfg.t(k); }
};

bool fd_norm(const SuiteConfig& cfg) { return cfg.norm.family == "perturbed" && cfg.norm.derivatives == "fd"; }

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::vector<CapillaryBody> make_tuple_bodies(const MeshPtr& mesh, std::uint64_t seed, int count, double amp) {
    std::vector<CapillaryBody> b;
    b.reserve(count);
    for (int j = 0; j < count; ++j) b.push_back(random_capillary_body(mesh, tuple_seed(seed, j), amp));
    return b;
}

BodyList ptrs(const std::vector<CapillaryBody>& v) {
    BodyList l;
    for (const auto& b : v) l.push_back(&b);
    return l;
}

// ---- mixdisc -------------------------------------------------------------

Eigen::MatrixXd random_spd(Rng& rng, int n) {
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.normal();
    return R * R.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_sym(Rng& rng, int n) {
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) R(i, j) = rng.normal();
    return 0.5 * (R + R.transpose());
}

// keeps the worst instance of one property over many tuples
struct Worst {
    InequalityReport rep;
    bool any = false;
    bool all_pass = true;
    int count = 0;
    void offer(const InequalityReport& r) {
        ++count;
        all_pass = all_pass && r.pass;
        double bad = r.equality_expected ? std::abs(r.relative_gap) : -r.relative_gap;
        double cur = rep.equality_expected ? std::abs(rep.relative_gap) : -rep.relative_gap;
        if (!any || !(bad <= cur)) rep = r;
        any = true;
    }
};

void suite_mixdisc(Sink& s) {
    const double tol = s.t("md");
    std::map<std::string, Worst> w;
    Rng rng(20240611);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = trial % 2 == 0 ? 2 : 3;
        SymMatrixTuple t;
        for (int k = 0; k < n; ++k) t.mats.push_back(random_spd(rng, n));
        const double q = mixed_discriminant(t);

        SymMatrixTuple diag;
        for (int k = 0; k < n; ++k) diag.mats.push_back(t.mats[0]);
        w["diagonal"].offer(make_identity("", mixed_discriminant(diag), t.mats[0].determinant(), tol));

        SymMatrixTuple perm = t;
        for (int k = n - 1; k > 0; --k) std::swap(perm.mats[k], perm.mats[std::size_t(rng.uniform() * (k + 1))]);
        w["permutation"].offer(make_identity("", mixed_discriminant(perm), q, tol));

        w["routes"].offer(make_identity("", mixed_discriminant(t, MdRoute::subset_expansion), q, tol));

        // linear in the first slot, including indefinite directions
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        Eigen::MatrixXd C = random_sym(rng, n);
        SymMatrixTuple lin = t, tc = t;
        lin.mats[0] = a * t.mats[0] + b * C;
        tc.mats[0] = C;
        const double rhs = a * q + b * mixed_discriminant(tc);
        // cancellation: scale by the size of the two terms, not the result
        const double lhs = mixed_discriminant(lin);
        const double scale = std::abs(a * q) + std::abs(b * mixed_discriminant(tc));
        InequalityReport lr = make_identity("", lhs, rhs, tol);
        lr.relative_gap = lr.gap / scale;
        lr.tolerance = tol * scale;
        lr.pass = std::abs(lr.gap) <= lr.tolerance;
        w["multilinearity"].offer(lr);

        // gradient against the first slot contracts back to Q
        Eigen::MatrixXd G = mixed_disc_gradient(t);
        w["gradient_contraction"].offer(make_identity("", (G.array() * t.mats[0].array()).sum(), q, tol));

        Eigen::MatrixXd B = Eigen::MatrixXd::Identity(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) B(i, j) += 0.5 * rng.normal();
        w["transform"].offer(md_transform_check(t, B, tol));

        std::vector<Eigen::MatrixXd> rest(t.mats.begin() + 2, t.mats.end());
        w["alexandrov"].offer(alexandrov_md_check(t.mats[0], t.mats[1], rest, tol));
        w["alexandrov_equality"].offer(alexandrov_md_check(t.mats[0], 2.5 * t.mats[0], rest, tol));
    }
    for (auto& [name, wr] : w) {
        Record& r = s.add(wr.rep, "md_" + name);
        r.pass = wr.all_pass;
        r.note = "worst of " + std::to_string(wr.count) + " tuples";
    }
}

// ---- routes ----------------------------------------------------------------

void suite_routes(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    const int n = mesh->n;
    auto bodies = make_tuple_bodies(mesh, seed, n + 1, s.cfg.amplitude);
    auto list = ptrs(bodies);
    const double route_tol = fd_norm(s.cfg) ? s.t("route_fd") : s.t("route_analytic");

    auto an = mixed_volume(list, MvRoute::anisotropic);
    auto eu = mixed_volume(list, MvRoute::euclidean);
    auto pf = mixed_volume(list, MvRoute::polyfit);
    s.add(make_identity("", an.value, eu.value, route_tol), "aniso_vs_euclid");
    s.add(make_identity("", pf.value, eu.value, s.t("polyfit")), "polyfit_vs_euclid").note =
        "condition " + fmt_double(pf.condition);

    double worst = 0, scale = 0;
    for (int i = 0; i < mesh->num_quadrature; ++i) {
        double e = mv_integrand_euclidean(list, i), a = mv_integrand_anisotropic(list, i);
        worst = std::max(worst, std::abs(e - a));
        scale = std::max(scale, std::abs(e));
    }
    s.bound("pointwise_integrand", worst / std::max(scale, 1e-300), route_tol);

    const double vol = volume(bodies[0]);
    BodyList diag(n + 1, &bodies[0]);
    for (MvRoute r : {MvRoute::anisotropic, MvRoute::euclidean, MvRoute::polyfit}) {
        double tol = r == MvRoute::polyfit ? s.t("polyfit") : r == MvRoute::anisotropic ? route_tol : s.t("volume_diag");
        s.add(make_identity("", mixed_volume_value(diag, r), vol, tol), std::string("diagonal_") + to_string(r));
    }

    Vec v = Vec::Zero(n + 1);
    v(0) = 0.13;
    if (n == 2) v(1) = -0.07;
    CapillaryBody moved = translate(bodies[0], v);
    CapillaryBody moved1 = translate(bodies[1], v);
    const double tt = s.t("translation");
    s.add(make_identity("", volume(moved), vol, tt), "translation_volume");
    BodyList l0 = list, l1 = list;
    l0[0] = &moved;
    l1[1] = &moved1;
    s.add(make_identity("", mixed_volume_value(l0), mixed_volume_value(list), tt), "translation_mixed_slot0");
    s.add(make_identity("", mixed_volume_value(l1), mixed_volume_value(list), tt), "translation_mixed_slot1");
    s.add(make_identity("", quermassintegral(moved, 0), quermassintegral(bodies[0], 0), tt),
          "translation_quermass_1");

    // V(t K1, K2, ...) = t V(K1, K2, ...)
    CapillaryBody scaled = minkowski_combine({&bodies[0]}, {1.7});
    BodyList ls = list;
    ls[0] = &scaled;
    s.add(make_identity("", mixed_volume_value(ls), 1.7 * mixed_volume_value(list), route_tol), "scaling_slot0");
}

// ---- af ----------------------------------------------------------------------

void suite_af(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    const int n = mesh->n;
    auto bodies = make_tuple_bodies(mesh, seed, n + 1, s.cfg.amplitude);
    s.add(af_inequality_check(ptrs(bodies), s.t("af")), "af_random");

    // K1 = 2 K2 + horizontal shift
    Vec v = Vec::Zero(n + 1);
    v(0) = 0.1;
    CapillaryBody k1 = translate(minkowski_combine({&bodies[1]}, {2.0}), v);
    BodyList eq = ptrs(bodies);
    eq[0] = &k1;
    s.add(af_inequality_check(eq, s.t("af_equality"), true), "af_equality");
}

// ---- chain -------------------------------------------------------------------

void suite_chain_fixed(Sink& s, const MeshPtr& mesh) {
    const int n = mesh->n;
    const double r0 = 1.7;
    CapillaryBody unit = make_wulff_cap(mesh, 1.0);
    CapillaryBody W = make_wulff_cap(mesh, r0);

    double worst = 0;
    for (int i = 0; i < int(mesh->nodes.size()); ++i) {
        Mat d = tau_matrix(W, i) - r0 * Mat::Identity(n, n);
        worst = std::max(worst, max_abs(d) / r0);
    }
    s.bound("wulff_tau_identity", worst, s.t("wulff_tau"));

    const double capvol = volume(unit);
    for (int j = 0; j <= n + 1; ++j)
        s.add(make_identity("", quermassintegral(W, j - 1), std::pow(r0, n + 1 - j) * capvol, s.t("wulff_quermass")),
              "wulff_quermass_" + std::to_string(j));
    for (int k = 1; k <= n; ++k)
        for (int l = 0; l < k; ++l)
            s.add(quermassintegral_chain_check(W, k, l, s.t("chain_equality"), true),
                  "wulff_chain_" + std::to_string(k) + "_" + std::to_string(l));
}

void suite_chain(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    const int n = mesh->n;
    auto bodies = make_tuple_bodies(mesh, seed, n + 1, s.cfg.amplitude);
    for (int k = 1; k <= n; ++k)
        for (int l = 0; l < k; ++l)
            s.add(quermassintegral_chain_check(bodies[0], k, l, s.t("chain")),
                  "quermass_chain_" + std::to_string(k) + "_" + std::to_string(l));

    Vec v = Vec::Zero(n + 1);
    v(0) = -0.08;
    CapillaryBody homothetic = translate(minkowski_combine({&bodies[1]}, {1.6}), v);
    for (int m = 2; m <= n + 1; ++m) {
        BodyList trailing;
        for (int t = 0; t < n + 1 - m; ++t) trailing.push_back(&bodies[2 + t]);
        for (int i = 0; i <= m; ++i)
            for (int j = i + 1; j <= m; ++j)
                for (int k = j + 1; k <= m; ++k) {
                    std::string tag = std::to_string(m) + "_" + std::to_string(i) + std::to_string(j) +
                                      std::to_string(k);
                    s.add(generalized_chain_check(bodies[0], bodies[1], trailing, m, i, j, k, s.t("chain")),
                          "generalized_chain_" + tag);
                    s.add(generalized_chain_check(homothetic, bodies[1], trailing, m, i, j, k,
                                                  s.t("chain_equality"), true),
                          "generalized_chain_equality_" + tag);
                }
    }
}

// ---- minkowski / steiner / symmetry ----------------------------------------

void suite_minkowski(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    CapillaryBody K = random_capillary_body(mesh, tuple_seed(seed, 0), s.cfg.amplitude);
    for (int k = 0; k < mesh->n; ++k) {
        auto [a, b] = minkowski_formula_terms(K, k);
        s.add(make_identity("", a, b, s.t("minkowski")), "minkowski_" + std::to_string(k));
    }
}

void suite_steiner(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    const int n = mesh->n;
    CapillaryBody K = random_capillary_body(mesh, tuple_seed(seed, 0), s.cfg.amplitude);
    CapillaryBody cap = make_wulff_cap(mesh, 1.0);
    auto st = steiner_check(K, cap, {0.5, 1.0, 1.5, 2.0, 2.5}, s.t("steiner"));
    Record& r = s.add(st.report, "steiner");
    if (st.ill_conditioned) r.note = "ill-conditioned fit, condition " + fmt_double(st.condition);

    for (int k = -1; k <= n; ++k)
        s.add(make_identity("", quermassintegral(K, k), quermassintegral_mixed(K, cap, k), s.t("quermass")),
              "quermass_correspondence_" + std::to_string(k + 1));
    s.add(make_identity("", quermassintegral(K, -1), volume(K), s.t("quermass")), "quermass_0_is_volume");
    s.add(make_identity("", quermass_one_boundary_form(K), quermassintegral(K, 0), s.t("quermass_boundary")),
          "quermass_1_boundary_form");
}

void suite_symmetry(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    const int n = mesh->n;
    auto bodies = make_tuple_bodies(mesh, seed, n + 1, s.cfg.amplitude);
    auto r = symmetry_check(ptrs(bodies), seed, s.t("symmetry"), s.t("symmetry_trailing"));
    s.add(r.swap, "symmetry_swap");
    s.add(r.trailing, "symmetry_trailing");
    if (s.cfg.norm.family != "perturbed" && n >= 2) {
        BodyList fs = ptrs(bodies);
        fs.pop_back();
        auto d = divergence_identity_check(fs);
        Record& rec = s.bound("divergence", d.max_residual, s.t("divergence"));
        rec.note = std::to_string(d.evaluated) + " nodes, " + std::to_string(d.skipped) + " skipped";
    }
}

// ---- kernel --------------------------------------------------------------------

double kernel_tau_max(const CapMesh& mesh, double step) {
    double worst = 0;
    for (int a = 0; a < mesh.n; ++a) {
        ScalarField f = kernel_field(mesh.norm(), a);
        for (int i = 0; i < int(mesh.nodes.size()); ++i) worst = std::max(worst, max_abs(tau_fd_field(mesh, i, f, step)));
    }
    return worst;
}

void suite_kernel_fixed(Sink& s, const MeshPtr& mesh) {
    s.bound("kernel_tau_max", kernel_tau_max(*mesh, mesh->h), s.t("kernel"));
}

void suite_kernel(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    const int n = mesh->n;
    CapillaryBody K = random_capillary_body(mesh, tuple_seed(seed, 0), s.cfg.amplitude);
    auto rb = robin_check(K);
    Record& rr = s.bound("robin", rb.max_residual, s.t("robin"));
    rr.note = std::to_string(rb.checked) + " boundary nodes, " + std::to_string(rb.skipped) + " skipped";
    s.bound("robin_euclidean", rb.max_euclidean, s.t("robin"));

    double shat = 0, tau = 0, eig = 0, scale = 0;
    for (int i = 0; i < int(mesh->nodes.size()); ++i) {
        const double a = capillary_support(K, i);
        shat = std::max(shat, std::abs(a - capillary_support_metric(K, i)) / std::max(std::abs(a), 1e-300));
        const Mat& t = tau_matrix(K, i);
        scale = std::max(scale, max_abs(t));
        tau = std::max(tau, max_abs(t - tau_matrix_fd(K, i)));
        Eigen::SelfAdjointEigenSolver<Mat> es(t);
        Vec e1 = es.eigenvalues();
        eig = std::max(eig, (e1 - tau_eigen_route_b(K, i)).cwiseAbs().maxCoeff());
    }
    s.bound("shat_two_routes", shat, fd_norm(s.cfg) ? s.t("route_fd") : s.t("shat_routes"));
    s.bound("tau_fd_route", tau / std::max(scale, 1e-300), s.t("tau_routes"));
    s.bound("tau_eigen_route", eig / std::max(scale, 1e-300), s.t("tau_routes"));

    // a vertical shift leaves the half-space condition and must show up
    SupportField f = K.support();
    f.c(n) += 0.05;
    CapillaryBody lifted(mesh, f);
    s.at_least("robin_detects_vertical_shift", robin_check(lifted).max_residual, s.t("robin_violation"));
}

// ---- operator ------------------------------------------------------------------

void suite_operator(Sink& s, const MeshPtr& mesh, std::uint64_t seed) {
    const int n = mesh->n;
    auto bodies = make_tuple_bodies(mesh, seed, n + 2, s.cfg.amplitude);
    BodyList rest;
    for (int k = 0; k < n - 1; ++k) rest.push_back(&bodies[k]);
    OperatorA op(rest);
    s.bound("operator_eigen", operator_A_eigen_residual(bodies[0], op), s.t("operator_eigen"));

    const CapillaryBody& f = bodies[n - 1];
    const CapillaryBody& g = bodies[n];
    s.add(operator_A_selfadjoint_check(f, g, op, s.t("selfadjoint")), "operator_selfadjoint");
    s.add(operator_A_energy_check(g, op, s.t("operator_energy")), "operator_energy_body");
    s.add(operator_A_energy_check(bodies[0], op, s.t("operator_energy")), "operator_energy_self");
    CapillaryBody diff(mesh, combine_fields({&f.support(), &g.support()}, {1.0, -1.0}));
    s.add(operator_A_energy_check(diff, op, s.t("operator_energy")), "operator_energy_difference");
}

// ---- convergence tables ----------------------------------------------------------

void add_study(Sink& s, const std::string& check) {
    const int hi = s.cfg.mesh_level, lo = std::max(2, hi - 2);
    if (hi <= lo) return;
    auto rows = convergence_study(lo, hi, study_eval(s.cfg, check));
    double worst = INFINITY;
    bool floor = true;
    for (const auto& r : rows) floor = floor && r.residual < 1e-13;
    for (std::size_t k = 1; k < rows.size(); ++k) worst = std::min(worst, rows[k].ratio);
    Record& rec = floor ? s.at_least(check + "_convergence_ratio", 2.0, 2.0)
                        : s.at_least(check + "_convergence_ratio", worst, 2.0);
    rec.note = "levels " + std::to_string(lo) + ".." + std::to_string(hi) + (floor ? ", residual at roundoff" : "");
    s.tables.push_back({check, rows});
}

using SeedFn = void (*)(Sink&, const MeshPtr&, std::uint64_t);

struct SuiteDef {
    SeedFn per_seed = nullptr;
    std::function<void(Sink&, const MeshPtr&)> fixed;
};

std::map<std::string, SuiteDef> suite_table() {
    return {
        {"mixdisc", {nullptr, [](Sink& s, const MeshPtr&) { suite_mixdisc(s); }}},
        {"routes", {suite_routes, nullptr}},
        {"af", {suite_af, nullptr}},
        {"chain", {suite_chain, suite_chain_fixed}},
        {"minkowski", {suite_minkowski, [](Sink& s, const MeshPtr&) { add_study(s, "minkowski"); }}},
        {"steiner", {suite_steiner, [](Sink& s, const MeshPtr&) { add_study(s, "quermass_boundary"); }}},
        {"symmetry",
         {suite_symmetry,
          [](Sink& s, const MeshPtr& m) {
              add_study(s, "symmetry");
              if (s.cfg.norm.family != "perturbed" && m->n >= 2) add_study(s, "divergence");
          }}},
        {"kernel",
         {suite_kernel,
          [](Sink& s, const MeshPtr& m) {
              suite_kernel_fixed(s, m);
              add_study(s, "kernel");
          }}},
        {"operator",
         {suite_operator,
          [](Sink& s, const MeshPtr& m) {
              if (m->n >= 2) add_study(s, "selfadjoint");
          }}},
    };
}

}  // namespace

std::uint64_t tuple_seed(std::uint64_t seed, int j) { return 16 * seed + std::uint64_t(j); }

int RunReport::passed() const {
    return int(std::count_if(records.begin(), records.end(), [](const Record& r) { return r.pass; }));
}
int RunReport::failed() const { return int(records.size()) - passed(); }

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

RunReport run_suite(const SuiteConfig& cfg) {
    RunReport rep;
    rep.config_echo = echo_config(cfg);
    auto norm = build_norm(cfg);
    MeshPtr mesh = std::make_shared<const CapMesh>(build_cap_mesh(cap_config(cfg, norm, cfg.mesh_level)));
    const std::string model = echo_model(cfg);
    auto table = suite_table();

    struct Task {
        std::string suite;
        std::int64_t seed;
    };
    std::vector<Task> tasks;
    for (const auto& name : cfg.suites) {
        const SuiteDef& d = table.at(name);
        if (name == "operator" && cfg.n < 2) continue;  // the operator needs f_2
        if (d.fixed) tasks.push_back({name, -1});
        if (d.per_seed)
            for (auto sd : cfg.seeds) tasks.push_back({name, std::int64_t(sd)});
    }

    std::vector<Sink> sinks;
    sinks.reserve(tasks.size());
    for (const auto& t : tasks) sinks.push_back(Sink{cfg, t.suite, t.seed, model, {}, {}});
    std::vector<double> secs(tasks.size(), 0.0);

    auto run_one = [&](std::size_t k) {
        Sink& s = sinks[k];
        const SuiteDef& d = table.at(s.suite);
        auto t0 = std::chrono::steady_clock::now();
        try {
            if (s.seed < 0)
                d.fixed(s, mesh);
            else
                d.per_seed(s, mesh, std::uint64_t(s.seed));
        } catch (const Error& e) {
            s.failure(std::string("error_") + to_string(e.kind()), e.what());
        } catch (const std::exception& e) {
            s.failure("error_internal", e.what());
        }
        secs[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    const int jobs = std::max(1, std::min<int>(cfg.jobs, int(tasks.size())));
    if (jobs == 1) {
        for (std::size_t k = 0; k < tasks.size(); ++k) run_one(k);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) run_one(k);
            });
    }

    for (std::size_t k = 0; k < sinks.size(); ++k) {
        for (auto& r : sinks[k].out) rep.records.push_back(std::move(r));
        for (auto& t : sinks[k].tables) rep.tables.push_back(std::move(t));
        rep.timings.push_back({tasks[k].suite, tasks[k].seed, secs[k]});
    }
    std::stable_sort(rep.records.begin(), rep.records.end(), [](const Record& a, const Record& b) {
        return std::tie(a.suite, a.seed, a.name) < std::tie(b.suite, b.seed, b.name);
    });
    std::stable_sort(rep.tables.begin(), rep.tables.end(),
                     [](const ConvergenceTable& a, const ConvergenceTable& b) { return a.name < b.name; });
    return rep;
}

std::string report_json(const RunReport& r) {
    json j;
    j["tool"] = "capaf";
    j["version"] = r.version;
    j["config"] = r.config_echo;
    std::map<std::string, std::pair<int, int>> by_suite;
    for (const auto& rec : r.records) {
        auto& c = by_suite[rec.suite];
        (rec.pass ? c.first : c.second)++;
    }
    json summary;
    summary["total"] = r.records.size();
    summary["passed"] = r.passed();
    summary["failed"] = r.failed();
    json per = json::object();
    for (const auto& [s, c] : by_suite) per[s] = {{"passed", c.first}, {"failed", c.second}};
    summary["suites"] = per;
    j["summary"] = summary;

    // NaN is not JSON; it becomes null
    auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
    json recs = json::array();
    for (const auto& rec : r.records) {
        recs.push_back({{"suite", rec.suite},
                        {"seed", rec.seed},
                        {"name", rec.name},
                        {"inputs_digest", rec.inputs_digest},
                        {"lhs", num(rec.lhs)},
                        {"rhs", num(rec.rhs)},
                        {"gap", num(rec.gap)},
                        {"relative_gap", num(rec.relative_gap)},
                        {"tolerance", num(rec.tolerance)},
                        {"pass", rec.pass},
                        {"equality_expected", rec.equality_expected},
                        {"note", rec.note}});
    }
    j["records"] = recs;
    json tabs = json::array();
    for (const auto& t : r.tables) {
        json rows = json::array();
        for (const auto& row : t.rows)
            rows.push_back({{"level", row.level},
                            {"value", num(row.value)},
                            {"residual", num(row.residual)},
                            {"ratio", num(row.ratio)}});
        tabs.push_back({{"name", t.name}, {"rows", rows}});
    }
    j["convergence"] = tabs;
    return j.dump(2) + "\n";
}

std::string report_csv(const RunReport& r) {
    std::ostringstream os;
    os << "suite,seed,name,inputs_digest,lhs,rhs,gap,relative_gap,tolerance,pass,equality_expected\n";
    for (const auto& rec : r.records)
        os << rec.suite << ',' << rec.seed << ',' << rec.name << ',' << rec.inputs_digest << ',' << fmt_double(rec.lhs)
           << ',' << fmt_double(rec.rhs) << ',' << fmt_double(rec.gap) << ',' << fmt_double(rec.relative_gap) << ','
           << fmt_double(rec.tolerance) << ',' << (rec.pass ? 1 : 0) << ',' << (rec.equality_expected ? 1 : 0)
           << '\n';
    return os.str();
}

std::string convergence_csv(const std::vector<ConvergenceRow>& rows) {
    std::ostringstream os;
    os << "level,value,residual,ratio\n";
    for (const auto& r : rows)
        os << r.level << ',' << fmt_double(r.value) << ',' << fmt_double(r.residual) << ',' << fmt_double(r.ratio)
           << '\n';
    return os.str();
}

void emit_report(const RunReport& r, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        if (!out) throw Error(ErrorKind::invalid_input, "cannot write " + (fs::path(dir) / name).string());
        out << text;
    };
    write("report.json", report_json(r));
    write("report.csv", report_csv(r));
    std::ostringstream t;
    t << "suite,seed,wall_seconds\n";
    for (const auto& x : r.timings) t << x.suite << ',' << x.seed << ',' << fmt_double(x.seconds) << '\n';
    write("timings.csv", t.str());
    for (const auto& tab : r.tables) write("convergence_" + tab.name + ".csv", convergence_csv(tab.rows));
}

std::vector<std::string> study_names() {
    return {"divergence", "kernel", "minkowski", "quermass_boundary", "selfadjoint", "symmetry"};
}

std::function<std::pair<double, double>(int)> study_eval(const SuiteConfig& cfg, const std::string& check) {
    auto names = study_names();
    if (std::find(names.begin(), names.end(), check) == names.end()) {
        std::string valid;
        for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
        throw ConfigError({"unknown check '" + check + "' (valid: " + valid + ")"});
    }
    auto norm = build_norm(cfg);
    const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
    const int n = cfg.n;
    if (check == "selfadjoint" && n < 2) throw ConfigError({"selfadjoint needs n >= 2"});
    if (check == "divergence" && cfg.norm.family == "perturbed")
        throw ConfigError({"divergence is only available for isotropic and ellipsoid norms"});

    // bodies are generated once on the configured level and then re-sampled on every mesh
    auto ref = std::make_shared<const CapMesh>(build_cap_mesh(cap_config(cfg, norm, cfg.mesh_level)));
    auto fields = std::make_shared<std::vector<SupportField>>();
    if (check != "kernel")
        for (int j = 0; j < n + 1; ++j)
            fields->push_back(random_capillary_body(ref, tuple_seed(seed, j), cfg.amplitude).support());

    return [cfg, norm, fields, check, seed, n](int level) -> std::pair<double, double> {
        auto mesh = std::make_shared<const CapMesh>(build_cap_mesh(cap_config(cfg, norm, level)));
        if (check == "kernel") {
            double v = kernel_tau_max(*mesh, mesh->h);
            return {v, v};
        }
        std::vector<CapillaryBody> b;
        for (const auto& f : *fields) b.emplace_back(mesh, f);
        auto list = ptrs(b);
        if (check == "minkowski") {
            double worst = 0, value = 0;
            for (int k = 0; k < n; ++k) {
                auto [a, c] = minkowski_formula_terms(b[0], k);
                if (k == 0) value = a;
                worst = std::max(worst, std::abs(a - c) / std::max({std::abs(a), std::abs(c), 1e-30}));
            }
            return {value, worst};
        }
        if (check == "symmetry") {
            auto r = symmetry_check(list, seed);
            return {r.swap.rhs, std::abs(r.swap.relative_gap)};
        }
        if (check == "divergence") {
            list.pop_back();
            auto d = divergence_identity_check(list);
            return {d.scale, d.max_residual};
        }
        if (check == "quermass_boundary") {
            double a = quermassintegral(b[0], 0), c = quermass_one_boundary_form(b[0]);
            return {a, std::abs(a - c) / std::abs(a)};
        }
        // selfadjoint
        BodyList rest;
        for (int k = 0; k < n - 1; ++k) rest.push_back(&b[k]);
        OperatorA op(rest);
        auto r = operator_A_selfadjoint_check(b[n - 1], b[n], op, 0);
        return {r.lhs, std::abs(r.relative_gap)};
    };
}

}  // namespace capaf::cli
