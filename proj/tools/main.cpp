#include "config.hpp"
#include "suite.hpp"

#include "capaf/body.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace capaf;
using namespace capaf::cli;

namespace {

// exit codes: 0 pass, 1 some check failed, 2 usage/config/runtime error
constexpr int kPass = 0, kFail = 1, kError = 2;

SuiteConfig load(const std::string& path) {
    SuiteConfig cfg = parse_config(path);
    apply_env_overrides(cfg);
    return cfg;
}

int cmd_verify(const std::string& path, const std::string& suite, const std::string& out, int jobs) {
    SuiteConfig cfg = load(path);
    if (!suite.empty()) {
        auto err = suite_errors(suite, cfg.suites);
        if (!err.empty()) throw ConfigError(err);
    }
    if (!out.empty()) cfg.out_dir = out;
    if (jobs > 0) cfg.jobs = jobs;

    RunReport rep = run_suite(cfg);
    emit_report(rep, cfg.out_dir);
    std::cout << "capaf " << rep.version << ": " << rep.records.size() << " checks, " << rep.passed() << " passed, "
              << rep.failed() << " failed -> " << cfg.out_dir << "\n";
    for (const auto& r : rep.records)
        if (!r.pass)
            std::cout << "  FAIL " << r.suite << " seed=" << r.seed << " " << r.name << " gap=" << fmt_double(r.gap)
                      << " tol=" << fmt_double(r.tolerance) << (r.note.empty() ? "" : " (" + r.note + ")") << "\n";
    return rep.failed() == 0 ? kPass : kFail;
}

int cmd_mesh_info(const std::string& path, const std::string& dump) {
    SuiteConfig cfg = load(path);
    auto norm = build_norm(cfg);
    CapMesh m = build_cap_mesh(cap_config(cfg, norm, cfg.mesh_level));
    auto [lo, hi] = omega0_range(*norm);
    int tris = 0;
    for (const auto& s : m.simplices) tris += s[2] >= 0;
    std::cout << "norm            " << norm->describe() << "\n"
              << "n               " << m.n << "\n"
              << "omega0          " << fmt_double(m.omega0()) << " in (" << fmt_double(lo) << ", " << fmt_double(hi)
              << ")\n"
              << "level           " << cfg.mesh_level << "\n"
              << "h               " << fmt_double(m.h) << "\n"
              << "nodes           " << m.nodes.size() << "\n"
              << "quadrature      " << m.num_quadrature << "\n"
              << "boundary nodes  " << m.boundary.size() << "\n"
              << "vertices        " << m.vertices.size() << "\n"
              << "simplices       " << m.simplices.size() << (m.n == 2 ? " (" + std::to_string(m.curved_simplices) +
                                                                             " curved)"
                                                                       : std::string())
              << "\n"
              << "measure of S    " << fmt_double(region_measure(m)) << "\n"
              << "pullback check  " << fmt_double(pullback_density_check(m)) << "\n"
              << "max cond A_F    " << fmt_double(m.max_cond_A) << "\n";
    if (!dump.empty()) {
        std::ofstream out(dump);
        if (!out) throw Error(ErrorKind::invalid_input, "cannot write " + dump);
        dump_mesh(m, out);
    }
    return kPass;
}

int cmd_body_gen(const std::string& path, std::uint64_t seed, const std::string& out) {
    SuiteConfig cfg = load(path);
    auto norm = build_norm(cfg);
    auto mesh = std::make_shared<const CapMesh>(build_cap_mesh(cap_config(cfg, norm, cfg.mesh_level)));
    CapillaryBody b = random_capillary_body(mesh, seed, cfg.amplitude);
    std::ofstream os(out);
    if (!os) throw Error(ErrorKind::invalid_input, "cannot write " + out);
    os << serialize_body(b);
    std::cout << "body seed " << seed << ": volume " << fmt_double(volume(b)) << ", halvings " << b.halvings
              << " -> " << out << "\n";
    return kPass;
}

int cmd_study(const std::string& path, const std::string& check, const std::string& levels, const std::string& out) {
    SuiteConfig cfg = load(path);
    auto dots = levels.find("..");
    int a = -1, b = -1;
    try {
        if (dots == std::string::npos) throw std::invalid_argument(levels);
        a = std::stoi(levels.substr(0, dots));
        b = std::stoi(levels.substr(dots + 2));
    } catch (const std::exception&) {
        throw ConfigError({"--levels: expected A..B, got '" + levels + "'"});
    }
    if (a < 0 || b < a || b > 7) throw ConfigError({"--levels: need 0 <= A <= B <= 7"});
    auto rows = convergence_study(a, b, study_eval(cfg, check));
    std::string csv = convergence_csv(rows);
    std::cout << csv;
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream os(std::filesystem::path(out) / ("convergence_" + check + ".csv"));
        os << csv;
    }
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capaf: anisotropic capillary convex bodies and their mixed-volume inequalities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    std::string config, suite, out, check, levels, dump;
    int jobs = 0;
    std::uint64_t seed = 0;

    auto* verify = app.add_subcommand("verify", "run check suites and write report.json / report.csv");
    verify->add_option("--config", config, "INI configuration")->required();
    verify->add_option("--suite", suite, "comma list overriding [suites] run");
    verify->add_option("--out", out, "output directory");
    verify->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 256));

    auto* mesh = app.add_subcommand("mesh", "mesh utilities");
    mesh->require_subcommand(1);
    auto* info = mesh->add_subcommand("info", "print mesh statistics");
    info->add_option("--config", config, "INI configuration")->required();
    info->add_option("--dump", dump, "write the node table as CSV");

    auto* body = app.add_subcommand("body", "body utilities");
    body->require_subcommand(1);
    auto* gen = body->add_subcommand("gen", "generate one random capillary body");
    gen->add_option("--config", config, "INI configuration")->required();
    gen->add_option("--seed", seed, "generator seed")->required();
    gen->add_option("--out", out, "output file")->required();

    auto* study = app.add_subcommand("study", "convergence studies");
    study->require_subcommand(1);
    auto* conv = study->add_subcommand("converge", "residual per mesh level as level,value,residual,ratio");
    conv->add_option("--config", config, "INI configuration")->required();
    conv->add_option("--check", check, "divergence|kernel|minkowski|quermass_boundary|selfadjoint|symmetry")
        ->required();
    conv->add_option("--levels", levels, "A..B")->required();
    conv->add_option("--out", out, "also write convergence_<check>.csv here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kError;
    }

    try {
        if (*verify) return cmd_verify(config, suite, out, jobs);
        if (*info) return cmd_mesh_info(config, dump);
        if (*gen) return cmd_body_gen(config, seed, out);
        if (*conv) return cmd_study(config, check, levels, out);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kError;
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
