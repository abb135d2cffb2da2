#pragma once

#include "capaf/body.hpp"
#include "capaf/mixdisc.hpp"

#include <functional>
#include <string>
#include <vector>

namespace capaf {

using BodyList = std::vector<const CapillaryBody*>;

enum class MvRoute { anisotropic, euclidean, polyfit };
const char* to_string(MvRoute r);

struct MixedVolumeResult {
    double value = 0;
    MvRoute route = MvRoute::euclidean;
    int mesh_level = 0;
    // integral routes: gap to the other integral route; polyfit: least-squares residual
    double error_estimate = 0;
    double condition = 1;  // polyfit only
};

// 1/(n+1) sum w s det W
double volume(const CapillaryBody& body);

// n+1 bodies on one mesh; the first one is the f_0 slot
MixedVolumeResult mixed_volume(const BodyList& bodies, MvRoute route);
double mixed_volume_value(const BodyList& bodies, MvRoute route = MvRoute::anisotropic);

// per-node integrands, exposed for the pointwise identity check
double mv_integrand_euclidean(const BodyList& bodies, int i);
double mv_integrand_anisotropic(const BodyList& bodies, int i);

struct SymmetryResult {
    InequalityReport swap;      // V(f1, f0, ...) vs V(f0, f1, ...)
    InequalityReport trailing;  // permutation of the arguments inside Q
};
SymmetryResult symmetry_check(const BodyList& bodies, std::uint64_t seed, double tol_swap = 1e-6,
                              double tol_trailing = 1e-12);

// V_{k+1} for k in [-1, n]; V_0 is the volume, V_{n+1} the cap volume
double quermassintegral(const CapillaryBody& body, int k);
// same quantity through the mixed volume V(K x (n-k), C x (k+1))
double quermassintegral_mixed(const CapillaryBody& body, const CapillaryBody& cap, int k);
// (|Sigma|_F + omega0 |flat face|)/(n+1)
double quermass_one_boundary_form(const CapillaryBody& body);
double flat_face_measure(const CapillaryBody& body);
double anisotropic_area(const CapillaryBody& body);

double minkowski_formula_residual(const CapillaryBody& body, int k);
// the two integrals whose difference is the residual
std::pair<double, double> minkowski_formula_terms(const CapillaryBody& body, int k);

struct SteinerResult {
    std::vector<double> fitted;     // coefficients of t^k, k = 0..n+1
    std::vector<double> expected;   // C(n+1,k) V_k
    double max_rel_error = 0;
    double condition = 1;
    bool ill_conditioned = false;
    InequalityReport report;
};
SteinerResult steiner_check(const CapillaryBody& body, const CapillaryBody& cap,
                            const std::vector<double>& t_grid, double tol = 1e-4);

struct DivergenceResult {
    double max_residual = 0;   // relative to field scale
    double scale = 0;
    int evaluated = 0;
    int skipped = 0;
};
// bodies f_1..f_n; Q must vanish (isotropic or ellipsoid norms); default step h/4
DivergenceResult divergence_identity_check(const BodyList& bodies, double step = 0);

// operator A built on f_2..f_n
struct OperatorA {
    explicit OperatorA(BodyList rest);
    std::vector<double> apply(const CapillaryBody& f) const;   // values of A f at every node
    const std::vector<double>& weights() const { return omega_; }
    double inner(const std::vector<double>& a, const std::vector<double>& b) const;
    std::vector<double> values(const CapillaryBody& f) const;  // shat at every node

    BodyList rest;
    std::vector<double> denom_;   // Q(tau_2, tau_2, tau_3, ...)
    std::vector<double> omega_;
};

InequalityReport operator_A_energy_check(const CapillaryBody& g, const OperatorA& op, double tol = 1e-6);
InequalityReport operator_A_selfadjoint_check(const CapillaryBody& f, const CapillaryBody& g,
                                              const OperatorA& op, double tol);
// max |A f - f| over nodes, relative to max |f|
double operator_A_eigen_residual(const CapillaryBody& f, const OperatorA& op);

InequalityReport af_inequality_check(const BodyList& bodies, double tol = 1e-8, bool equality_expected = false);
InequalityReport quermassintegral_chain_check(const CapillaryBody& body, int k, int l, double tol = 1e-7,
                                              bool equality_expected = false);
InequalityReport generalized_chain_check(const CapillaryBody& K0, const CapillaryBody& K1,
                                         const BodyList& trailing, int m, int i, int j, int k,
                                         double tol = 1e-7, bool equality_expected = false);
// V_(i) = V(K0 x (m-i), K1 x i, trailing)
double chain_mixed_volume(const CapillaryBody& K0, const CapillaryBody& K1, const BodyList& trailing, int m,
                          int i);

struct ConvergenceRow {
    int level = 0;
    double value = 0;
    double residual = 0;
    double ratio = 0;   // residual(level-1) / residual(level); 0 on the first row
};
std::vector<ConvergenceRow> convergence_study(int level_lo, int level_hi,
                                              const std::function<std::pair<double, double>(int)>& eval);

}  // namespace capaf
