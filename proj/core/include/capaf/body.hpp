#pragma once

#include "capaf/capgeom.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace capaf {

// amplitude * h^p |x|^{1-p} / (1 - cos rho)^p with h = (<x,c> - cos(rho)|x|)_+ ;
// 1-homogeneous, C^{p-1}, supported on the geodesic ball of radius rho about c
struct Bump {
    Vec center;
    double radius = 0.5;
    double amplitude = 0.0;
    int power = 6;

    void eval(const Vec& x, double* f, Vec* g, Mat* h) const;
};

enum class Provenance { wulff_cap, combination, perturbed, translated, custom };
const char* to_string(Provenance p);

// s(x) = a F(x) + <c, x> + sum of bumps
struct SupportField {
    double a = 1.0;
    Vec c;
    std::vector<Bump> bumps;
    Provenance provenance = Provenance::custom;

    // norm derivatives supplied by the caller (mesh caches)
    void eval_with(double F, const Vec& DF, const Mat& D2F, const Vec& x, double* s, Vec* g, Mat* h) const;
    void eval(const NormModel& m, const Vec& x, double* s, Vec* g, Mat* h) const;
    double value(const NormModel& m, const Vec& x) const;
};

SupportField combine_fields(const std::vector<const SupportField*>& f, const std::vector<double>& lambdas);

struct BodyNode {
    double s = 0;       // Euclidean support value
    double shat = 0;    // s / F
    // s without its horizontal linear part; integrates to the same volumes and
    // makes the discrete functionals exactly invariant under horizontal shifts
    double s_int = 0;
    Vec X;              // Ds(x), boundary point
    Mat W;              // D^2 s on x^perp in the node basis B
    Mat tau;            // curvature radii in the G-orthonormal frame
    Vec tau_eig;        // ascending
};

class CapillaryBody {
public:
    CapillaryBody(std::shared_ptr<const CapMesh> mesh, SupportField field);

    const CapMesh& mesh() const { return *mesh_; }
    const std::shared_ptr<const CapMesh>& mesh_ptr() const { return mesh_; }
    const SupportField& support() const { return field_; }
    const std::vector<BodyNode>& nodes() const { return nodes_; }
    const BodyNode& node(int i) const { return nodes_.at(i); }

    bool convex() const { return convex_; }           // W > 0 and tau > 0 everywhere
    bool capillary() const { return capillary_; }     // boundary on the plane, body above it
    double min_W_eig() const { return min_w_; }
    double min_height() const { return min_height_; }       // min <X, E> over all nodes
    double max_boundary_height() const { return max_bh_; }  // max |<X, E>| over boundary nodes
    double tau_asymmetry() const { return tau_asym_; }

    // throws convexity_violation when either flag is false
    void validate() const;

    // generation record, kept for serialization
    std::uint64_t seed = 0;
    double amplitude = 0;
    int halvings = 0;

private:
    std::shared_ptr<const CapMesh> mesh_;
    SupportField field_;
    std::vector<BodyNode> nodes_;
    bool convex_ = false, capillary_ = false;
    double min_w_ = 0, min_height_ = 0, max_bh_ = 0, tau_asym_ = 0;
};

// s = r0 (F + omega0 <E, x>), <E, E_{n+1}> = 1
CapillaryBody make_wulff_cap(std::shared_ptr<const CapMesh> mesh, double r0, const Vec& E);
CapillaryBody make_wulff_cap(std::shared_ptr<const CapMesh> mesh, double r0 = 1.0);

CapillaryBody minkowski_combine(const std::vector<const CapillaryBody*>& bodies,
                                const std::vector<double>& lambdas);
CapillaryBody translate(const CapillaryBody& body, const Vec& v);  // v horizontal

CapillaryBody random_capillary_body(std::shared_ptr<const CapMesh> mesh, std::uint64_t seed,
                                    double amplitude);

double capillary_support(const CapillaryBody& body, int i);          // s / F
double capillary_support_metric(const CapillaryBody& body, int i);   // G(Psi)(X, Psi)
// shat / (1 + omega0 G(Psi)(E^F, Psi)); exposed, never asserted on
double capillary_support_bar(const CapillaryBody& body, int i);

struct RobinResult {
    double residual = 0;        // anisotropic form
    double euclidean = 0;       // <Ds, E_{n+1}>
    bool skipped = false;       // singular co-normal
};
RobinResult robin_residual(const CapillaryBody& body, int i);

struct RobinSummary {
    double max_residual = 0, max_euclidean = 0;
    int checked = 0, skipped = 0;
};
RobinSummary robin_check(const CapillaryBody& body);

const Mat& tau_matrix(const CapillaryBody& body, int i);
// FD of X along great circles (parameter step, Richardson), tau_kl = G(D_{e_k}X, e_l)
Mat tau_matrix_fd(const CapillaryBody& body, int i, double step = 1e-4);
// generalized eigenvalues of W v = lambda A v, ascending
Vec tau_eigen_route_b(const CapillaryBody& body, int i);

struct Curvatures {
    std::vector<double> kappa;  // reciprocals of tau eigenvalues
    std::vector<double> H;      // H_0..H_{n+1}, normalized elementary symmetric functions
};
Curvatures anisotropic_curvatures(const CapillaryBody& body, int i);
Curvatures curvatures_from_tau(const Mat& tau);

// tau of an arbitrary 1-homogeneous field in the node frame, from its
// ambient Hessian restricted to x^perp (W in the node basis)
Mat tau_from_W(const CapNode& nd, const Mat& W);

// mesh-resolved route: intrinsic Hessian of the field along great circles with
// the given step, fourth-order stencil
using ScalarField = std::function<double(const Vec&)>;
Mat hessian_on_sphere(const ScalarField& s, const Vec& x, const Mat& B, double step);
Mat tau_fd_field(const CapMesh& mesh, int i, const ScalarField& s, double step);

// 1-homogeneous extension of f(xi) = G(Psi)(Psi, E_alpha): F(x) * f(xi(x))
ScalarField kernel_field(const NormModel& m, int alpha);

std::string serialize_body(const CapillaryBody& body);

}  // namespace capaf
