#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace capaf {

// ambient dimension is n+1 <= 3 for everything that touches a mesh
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

enum class ErrorKind {
    invalid_input,
    invalid_config,
    model_invalid,
    numeric,
    mesh_construction,
    generation,
    convexity_violation,
    internal
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// dual-norm solver failure keeps the best iterate around
class NumericError : public Error {
public:
    NumericError(const std::string& what, double best, double residual)
        : Error(ErrorKind::numeric, what), best_(best), residual_(residual) {}
    double best() const { return best_; }
    double residual() const { return residual_; }

private:
    double best_, residual_;
};

inline Vec unit_axis(int dim, int k) {
    Vec e = Vec::Zero(dim);
    e(k) = 1.0;
    return e;
}

// E_{n+1}: last coordinate axis
inline Vec vertical(int dim) { return unit_axis(dim, dim - 1); }

// fixed-order pairwise summation so totals never depend on who computed what
double pairwise_sum(std::span<const double> v);

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// mt19937_64 is fully specified; the std distributions are not, so the
// mapping to doubles is done here to keep seeds portable.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }  // [0,1)
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal();  // Box-Muller

private:
    std::mt19937_64 eng_;
};

// orthonormal basis of x^perp: coordinate axis least aligned with x, then
// Gram-Schmidt in a fixed order.  Columns are the basis vectors.
Mat tangent_basis(const Vec& x);

struct Icosphere {
    std::vector<Vec> v;                   // unit vertices, ambient 3
    std::vector<std::array<int, 3>> f;    // outward-oriented faces
};
// midpoint subdivision, vertex order fixed by (level, edge key)
Icosphere make_icosphere(int level);

// point on the great circle through x with unit tangent u, at angle t
inline Vec geodesic(const Vec& x, const Vec& u, double t) {
    return std::cos(t) * x + std::sin(t) * u;
}

}  // namespace capaf
