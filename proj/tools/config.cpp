#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace capaf::cli {

namespace pt = boost::property_tree;

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
          std::string s = "invalid configuration:";
          for (const auto& e : errors) s += "\n  " + e;
          return s;
      }()),
      errors_(std::move(errors)) {}

std::map<std::string, double> default_tolerances() {
    return {
        {"md", 1e-10},
        {"route_analytic", 1e-8},
        {"route_fd", 1e-5},
        {"polyfit", 1e-4},
        {"volume_diag", 1e-10},
        {"translation", 1e-10},
        {"af", 1e-8},
        {"af_equality", 1e-6},
        {"chain", 1e-7},
        {"chain_equality", 1e-6},
        {"wulff_tau", 1e-6},
        {"wulff_quermass", 1e-5},
        {"minkowski", 1e-6},
        {"steiner", 1e-4},
        {"quermass", 1e-5},
        {"quermass_boundary", 2e-3},
        {"symmetry", 1e-6},
        {"symmetry_trailing", 1e-12},
        {"divergence", 1e-3},
        {"kernel", 1e-4},
        {"robin", 1e-8},
        {"robin_violation", 1e-3},
        {"shat_routes", 1e-8},
        {"tau_routes", 1e-5},
        {"operator_eigen", 1e-8},
        {"operator_energy", 1e-6},
        {"selfadjoint", 1e-6},
    };
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        auto b = cur.find_first_not_of(" \t");
        auto e = cur.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    }
    return out;
}

bool parse_double(const std::string& s, double& v) {
    try {
        std::size_t pos;
        v = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

bool parse_int(const std::string& s, long long& v) {
    try {
        std::size_t pos;
        v = std::stoll(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

std::vector<double> numbers(const std::string& s, const std::string& field, std::vector<std::string>& err) {
    std::vector<double> v;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) {
        double d;
        if (!parse_double(tok, d)) {
            err.push_back(field + ": '" + tok + "' is not a number");
            continue;
        }
        v.push_back(d);
    }
    return v;
}

const std::set<std::string> kKnown = {
    "geometry.n", "geometry.omega0", "norm.family", "norm.matrix", "norm.terms", "norm.derivatives",
    "mesh.level", "numerics.fd_step", "suites.run", "seeds.values", "seeds.amplitude", "output.dir",
    "output.jobs"};

SuiteConfig from_tree(const pt::ptree& tree, const std::string& source) {
    SuiteConfig cfg;
    cfg.source = source;
    cfg.tol = default_tolerances();
    std::vector<std::string> err;

    std::map<std::string, std::string> kv;
    for (const auto& [sec, child] : tree) {
        if (child.empty()) {
            err.push_back("key '" + sec + "' outside any section");
            continue;
        }
        for (const auto& [key, val] : child) kv[sec + "." + key] = val.data();
    }
    for (const auto& [k, v] : kv) {
        if (k.rfind("numerics.tol.", 0) == 0) {
            std::string name = k.substr(13);
            double d;
            if (!cfg.tol.count(name))
                err.push_back(k + ": unknown tolerance name");
            else if (!parse_double(v, d) || !(d > 0))
                err.push_back(k + ": tolerance must be a positive number");
            else
                cfg.tol[name] = d;
        } else if (!kKnown.count(k)) {
            err.push_back(k + ": unknown key");
        }
    }
    auto get = [&](const std::string& k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };

    if (auto* v = get("geometry.n")) {
        long long n;
        if (!parse_int(*v, n) || n < 1 || n > 2)
            err.push_back("geometry.n: must be 1 or 2 (meshing is limited to n <= 2)");
        else
            cfg.n = int(n);
    }
    bool omega_ok = true;
    if (auto* v = get("geometry.omega0")) {
        if (!parse_double(*v, cfg.omega0)) {
            err.push_back("geometry.omega0: not a number");
            omega_ok = false;
        }
    }
    const int d = cfg.n + 1;
    const std::size_t errors_before_norm = err.size();

    if (auto* v = get("norm.family")) cfg.norm.family = *v;
    if (cfg.norm.family != "isotropic" && cfg.norm.family != "ellipsoid" && cfg.norm.family != "perturbed")
        err.push_back("norm.family: must be one of isotropic, ellipsoid, perturbed");
    if (auto* v = get("norm.derivatives")) cfg.norm.derivatives = *v;
    if (cfg.norm.derivatives != "fd" && cfg.norm.derivatives != "analytic")
        err.push_back("norm.derivatives: must be fd or analytic");
    if (auto* v = get("norm.matrix")) {
        cfg.norm.matrix = numbers(*v, "norm.matrix", err);
        if (int(cfg.norm.matrix.size()) != d * d)
            err.push_back("norm.matrix: expected " + std::to_string(d * d) + " entries (row-major)");
    } else if (cfg.norm.family != "isotropic") {
        err.push_back("norm.matrix: required for family " + cfg.norm.family);
    }
    if (auto* v = get("norm.terms")) {
        for (const auto& term : split(*v, ';')) {
            std::istringstream is(term);
            std::string type;
            is >> type;
            std::string rest((std::istreambuf_iterator<char>(is)), {});
            auto nums = numbers(rest, "norm.terms", err);
            if ((type != "bump" && type != "harmonic") || int(nums.size()) != d + 2) {
                err.push_back("norm.terms: '" + term + "' must be 'bump|harmonic c_1 .. c_" + std::to_string(d) +
                              " width amplitude'");
                continue;
            }
            ZonalTerm z;
            z.type = type == "bump" ? TermType::bump : TermType::harmonic;
            z.center = Vec(d);
            for (int k = 0; k < d; ++k) z.center(k) = nums[k];
            z.width = nums[d];
            z.amplitude = nums[d + 1];
            cfg.norm.terms.push_back(z);
        }
    }
    if (cfg.norm.family == "perturbed" && cfg.norm.terms.empty())
        err.push_back("norm.terms: perturbed family needs at least one term");
    const bool norm_ok = err.size() == errors_before_norm;

    if (auto* v = get("mesh.level")) {
        long long L;
        if (!parse_int(*v, L) || L < 0 || L > 7)
            err.push_back("mesh.level: must be an integer in [0, 7]");
        else
            cfg.mesh_level = int(L);
    }
    if (auto* v = get("numerics.fd_step")) {
        if (!parse_double(*v, cfg.fd_step) || !(cfg.fd_step > 0 && cfg.fd_step < 0.1))
            err.push_back("numerics.fd_step: must be in (0, 0.1)");
    }

    if (auto* v = get("suites.run")) {
        auto e = suite_errors(*v, cfg.suites);
        for (auto& m : e) err.push_back("suites.run: " + m);
    } else {
        cfg.suites = kSuiteNames;
    }

    if (auto* v = get("seeds.values")) {
        // "1 2 3" or "1..20"
        auto dots = v->find("..");
        if (dots != std::string::npos) {
            long long a, b;
            if (!parse_int(v->substr(0, dots), a) || !parse_int(v->substr(dots + 2), b) || a < 0 || b < a ||
                b - a > 100000)
                err.push_back("seeds.values: bad range '" + *v + "'");
            else
                for (long long s = a; s <= b; ++s) cfg.seeds.push_back(std::uint64_t(s));
        } else {
            std::istringstream is(*v);
            std::string tok;
            while (is >> tok) {
                long long s;
                if (!parse_int(tok, s) || s < 0)
                    err.push_back("seeds.values: '" + tok + "' is not a nonnegative integer");
                else
                    cfg.seeds.push_back(std::uint64_t(s));
            }
        }
    } else {
        cfg.seeds = {1, 2, 3};
    }
    if (auto* v = get("seeds.amplitude")) {
        if (!parse_double(*v, cfg.amplitude) || !(cfg.amplitude >= 0))
            err.push_back("seeds.amplitude: must be a nonnegative number");
    }
    if (auto* v = get("output.dir")) cfg.out_dir = *v;
    if (auto* v = get("output.jobs")) {
        long long j;
        if (!parse_int(*v, j) || j < 1 || j > 256)
            err.push_back("output.jobs: must be in [1, 256]");
        else
            cfg.jobs = int(j);
    }

    // the admissible interval needs a working norm
    if (norm_ok && omega_ok && cfg.fd_step > 0) {
        try {
            auto norm = build_norm(cfg);
            auto [lo, hi] = omega0_range(*norm);
            if (!(cfg.omega0 > lo && cfg.omega0 < hi)) {
                std::ostringstream os;
                os.precision(17);
                os << "geometry.omega0: " << cfg.omega0 << " is outside the open interval (" << lo << ", " << hi
                   << ")";
                err.push_back(os.str());
            }
        } catch (const Error& e) {
            err.push_back(std::string("norm: ") + e.what());
        }
    }
    if (!err.empty()) throw ConfigError(err);
    return cfg;
}

}  // namespace

std::vector<std::string> suite_errors(const std::string& csv, std::vector<std::string>& out) {
    std::vector<std::string> err;
    std::set<std::string> chosen;
    for (const auto& s : split(csv, ',')) {
        if (s == "all") {
            chosen.insert(kSuiteNames.begin(), kSuiteNames.end());
        } else if (std::find(kSuiteNames.begin(), kSuiteNames.end(), s) != kSuiteNames.end()) {
            chosen.insert(s);
        } else {
            std::string valid = "all";
            for (const auto& n : kSuiteNames) valid += ", " + n;
            err.push_back("unknown suite '" + s + "' (valid: " + valid + ")");
        }
    }
    if (chosen.empty() && err.empty()) err.push_back("no suite selected");
    out.clear();
    for (const auto& n : kSuiteNames)
        if (chosen.count(n)) out.push_back(n);
    return err;
}

SuiteConfig parse_config_text(const std::string& text, const std::string& source) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")"});
    }
    return from_tree(tree, source);
}

SuiteConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"cannot open config file '" + path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void apply_env_overrides(SuiteConfig& cfg) {
    if (const char* o = std::getenv("CAPAF_OUT"); o && *o) cfg.out_dir = o;
    if (const char* j = std::getenv("CAPAF_JOBS"); j && *j) {
        long long v;
        if (!parse_int(j, v) || v < 1 || v > 256) throw ConfigError({"CAPAF_JOBS: must be in [1, 256]"});
        cfg.jobs = int(v);
    }
}

std::shared_ptr<const NormModel> build_norm(const SuiteConfig& cfg) {
    const int d = cfg.n + 1;
    if (cfg.norm.family == "isotropic") return std::make_shared<NormModel>(NormModel::isotropic(d));
    Mat M(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = cfg.norm.matrix[i * d + j];
    if (cfg.norm.family == "ellipsoid") return std::make_shared<NormModel>(NormModel::ellipsoid(M));
    DerivMode mode = cfg.norm.derivatives == "analytic" ? DerivMode::analytic : DerivMode::fd;
    return std::make_shared<NormModel>(NormModel::perturbed(M, cfg.norm.terms, mode, cfg.fd_step));
}

CapConfig cap_config(const SuiteConfig& cfg, std::shared_ptr<const NormModel> norm, int level) {
    CapConfig c;
    c.n = cfg.n;
    c.omega0 = cfg.omega0;
    c.norm = std::move(norm);
    c.mesh_level = level;
    c.tolerances = cfg.tol;
    return c;
}

std::string echo_model(const SuiteConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "n=" << cfg.n << ";omega0=" << cfg.omega0 << ";family=" << cfg.norm.family << ";matrix=";
    for (double m : cfg.norm.matrix) os << m << ",";
    os << ";terms=";
    for (const auto& t : cfg.norm.terms) {
        os << (t.type == TermType::bump ? "bump" : "harmonic");
        for (int k = 0; k < t.center.size(); ++k) os << " " << t.center(k);
        os << " " << t.width << " " << t.amplitude << ",";
    }
    os << ";derivatives=" << cfg.norm.derivatives << ";level=" << cfg.mesh_level << ";fd_step=" << cfg.fd_step
       << ";amplitude=" << cfg.amplitude;
    return os.str();
}

std::string echo_config(const SuiteConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << echo_model(cfg) << ";suites=";
    for (const auto& s : cfg.suites) os << s << ",";
    os << ";seeds=";
    for (auto s : cfg.seeds) os << s << ",";
    os << ";tol=";
    for (const auto& [k, v] : cfg.tol) os << k << ":" << v << ",";
    return os.str();
}

}  // namespace capaf::cli
