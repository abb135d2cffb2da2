#pragma once

#include "config.hpp"

#include "capaf/functionals.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace capaf::cli {

inline constexpr const char* kToolVersion = "0.1.0";

struct Record {
    std::string suite;
    std::int64_t seed = -1;          // -1: seed-free check
    std::string name;
    std::string inputs_digest;
    double lhs = 0, rhs = 0, gap = 0, relative_gap = 0, tolerance = 0;
    bool pass = false;
    bool equality_expected = false;
    std::string note;
};

struct ConvergenceTable {
    std::string name;
    std::vector<ConvergenceRow> rows;
};

struct Timing {
    std::string suite;
    std::int64_t seed = -1;
    double seconds = 0;
};

struct RunReport {
    std::string version = kToolVersion;
    std::string config_echo;
    std::vector<Record> records;              // sorted by (suite, seed, name)
    std::vector<ConvergenceTable> tables;     // sorted by name
    std::vector<Timing> timings;              // not part of the deterministic report

    int passed() const;
    int failed() const;
};

// body j of seed s is random_capillary_body(mesh, 16 s + j, amplitude)
std::uint64_t tuple_seed(std::uint64_t seed, int j);

RunReport run_suite(const SuiteConfig& cfg);

// report.json, report.csv, timings.csv and convergence_<name>.csv in dir
void emit_report(const RunReport& report, const std::string& dir);
std::string report_json(const RunReport& report);
std::string report_csv(const RunReport& report);

// studies shared by `study converge` and the verify suites; eval(level) returns (value, residual)
std::vector<std::string> study_names();
std::function<std::pair<double, double>(int)> study_eval(const SuiteConfig& cfg, const std::string& check);
std::string convergence_csv(const std::vector<ConvergenceRow>& rows);

// shortest round-trip decimal form, locale independent
std::string fmt_double(double v);

}  // namespace capaf::cli
