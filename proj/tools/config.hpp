#pragma once

#include "capaf/capgeom.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace capaf::cli {

inline const std::vector<std::string> kSuiteNames = {"af",       "chain",  "minkowski", "steiner", "symmetry",
                                                     "mixdisc",  "kernel", "operator",  "routes"};

struct NormDecl {
    std::string family = "isotropic";
    std::vector<double> matrix;          // row-major, (n+1)^2 entries
    std::vector<ZonalTerm> terms;
    std::string derivatives = "fd";
};

struct SuiteConfig {
    std::string source;                  // path it was read from
    int n = 2;
    double omega0 = 0.0;
    NormDecl norm;
    int mesh_level = 3;
    double fd_step = 1e-4;
    std::map<std::string, double> tol;   // defaults filled, overrides applied
    std::vector<std::string> suites;     // expanded, never contains "all"
    std::vector<std::uint64_t> seeds;
    double amplitude = 0.03;
    std::string out_dir = "capaf-out";
    int jobs = 1;

    double t(const std::string& key) const { return tol.at(key); }
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

std::map<std::string, double> default_tolerances();

// reads an INI file; collects every problem before throwing ConfigError
SuiteConfig parse_config(const std::string& path);
SuiteConfig parse_config_text(const std::string& text, const std::string& source = "<text>");

// comma list, "all" allowed; fills out in canonical order, returns the problems
std::vector<std::string> suite_errors(const std::string& csv, std::vector<std::string>& out);

// CAPAF_OUT and CAPAF_JOBS
void apply_env_overrides(SuiteConfig& cfg);

std::shared_ptr<const NormModel> build_norm(const SuiteConfig& cfg);
CapConfig cap_config(const SuiteConfig& cfg, std::shared_ptr<const NormModel> norm, int level);

// stable textual echo used in reports and digests; the model part leaves out
// suites, seeds and tolerances so a check's digest only tracks its inputs
std::string echo_model(const SuiteConfig& cfg);
std::string echo_config(const SuiteConfig& cfg);

}  // namespace capaf::cli
