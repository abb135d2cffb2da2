#pragma once

#include "capaf/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace capaf {

enum class NormFamily { isotropic, ellipsoid, perturbed };
enum class TermType { bump, harmonic };
enum class DerivMode { analytic, fd };

const char* to_string(NormFamily f);

// Zonal term |x| psi(<x,c>/|x|).  bump: psi = ((t - cos w)/(1 - cos w))_+^p,
// harmonic: psi = P_l(t) with l = round(width).
struct ZonalTerm {
    TermType type = TermType::bump;
    Vec center;        // unit
    double width = 0.5;
    double amplitude = 0.0;
    int power = 6;     // bump exponent only

    double value(const Vec& x) const;
    void eval(const Vec& x, double* f, Vec* grad, Mat* hess) const;
};

using PerturbTerm = ZonalTerm;

class NormModel {
public:
    static NormModel isotropic(int dim);
    static NormModel ellipsoid(const Mat& M);
    // validates A_F > 0 on a level-5 icosphere sample, throws model_invalid
    static NormModel perturbed(const Mat& base_M, std::vector<PerturbTerm> terms,
                               DerivMode mode = DerivMode::fd, double fd_step = 1e-4);

    NormFamily family() const { return family_; }
    int dim() const { return dim_; }
    const Mat& matrix() const { return M_; }
    const std::vector<PerturbTerm>& terms() const { return terms_; }
    DerivMode deriv_mode() const { return mode_; }
    double fd_step() const { return fd_step_; }
    bool strict_unit() const { return strict_unit_; }
    void set_strict_unit(bool v) { strict_unit_ = v; }
    void set_fd_step(double h) { fd_step_ = h; }

    double F(const Vec& x) const;
    Vec DF(const Vec& x) const;     // Euclidean gradient, uses deriv mode
    Mat D2F(const Vec& x) const;    // Euclidean Hessian, uses deriv mode
    void derivs(const Vec& x, double* f, Vec* g, Mat* h) const;

    // always analytic; the FD routes are checked against these
    void analytic_derivs(const Vec& x, double* f, Vec* g, Mat* h) const;
    Vec fd_gradient(const Vec& x, double h) const;   // central + Richardson
    Mat fd_hessian(const Vec& x, double h) const;    // central + Richardson

    // D^2(F^2/2) = F D^2F + DF DF^T; inverse is G at Psi(x)
    Mat half_square_hessian(const Vec& x) const;

    std::string describe() const;

private:
    NormFamily family_ = NormFamily::isotropic;
    int dim_ = 3;
    Mat M_;
    Mat Minv_;
    std::vector<PerturbTerm> terms_;
    DerivMode mode_ = DerivMode::analytic;
    double fd_step_ = 1e-4;
    bool strict_unit_ = false;
};

double eval_norm(const NormModel& m, const Vec& x);
Vec cahn_hoffman(const NormModel& m, const Vec& x);
// n x n restriction of D^2F(x) to the given orthonormal basis of x^perp
Mat anisotropy_matrix(const NormModel& m, const Vec& x, const Mat& basis);

struct DualNormResult {
    double value = 0;
    Vec maximizer;     // unit x attaining the sup
    double residual = 0;
    int iterations = 0;
};
double dual_norm(const NormModel& m, const Vec& xi);
// generic multistart + damped Newton route, usable for any family
DualNormResult dual_norm_numeric(const NormModel& m, const Vec& xi, double tol = 1e-10,
                                 int max_iter = 100);

Mat metric_G(const NormModel& m, const Vec& xi);
// Q[c](a,b) = Q_{abc}
std::vector<Mat> q_tensor(const NormModel& m, const Vec& xi);

// unit-sphere sample points of an icosphere of the given level (ambient 3)
std::vector<Vec> icosphere_points(int level);

// A_F > 0 on the level-5 icosphere (or a fine circle for dim 2);
// returns the worst condition number, throws model_invalid with the node
double validate_norm(const NormModel& m);

}  // namespace capaf
