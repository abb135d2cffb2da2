#pragma once

#include "capaf/norm.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace capaf {

struct CapConfig {
    int n = 2;                 // intrinsic dimension, ambient n+1
    double omega0 = 0.0;
    std::shared_ptr<const NormModel> norm;
    int mesh_level = 3;
    std::map<std::string, double> tolerances;

    double tol(const std::string& key, double fallback) const;
};

// open interval (-F(E_{n+1}), F(-E_{n+1})); throws invalid_config
void validate_cap_config(const CapConfig& cfg);
std::pair<double, double> omega0_range(const NormModel& m);

Vec ef_vector(const NormModel& m, double omega0);
double region_residual(const NormModel& m, double omega0, const Vec& x);

enum class NodeTag { interior, boundary };

struct CapNode {
    Vec x;              // unit direction in S
    NodeTag tag = NodeTag::interior;
    double w = 0;       // quadrature weight for d sigma (0 on boundary nodes)
    double F = 0;
    Vec psi;            // DF(x)
    Mat D2F;            // ambient Hessian of F
    Mat B;              // orthonormal basis of x^perp, d x n
    Mat A;              // A_F in basis B
    Mat Ainv;
    double detA = 0;
    Vec xi;             // cap point Psi(x) + omega0 E^F
    Mat G;              // metric at Psi(x), ambient
    Mat frame;          // G-orthonormal frame of x^perp, columns
    Vec mu;             // outward co-normal (boundary nodes only)
};

struct CapMesh {
    CapConfig cfg;
    int n = 2;
    Vec EF;
    double h = 0;       // characteristic spacing, drives mesh-resolved stencils
    std::vector<CapNode> nodes;
    int num_quadrature = 0;               // nodes [0, num_quadrature) carry weight
    std::vector<Vec> vertices;            // mesh vertices after boundary projection
    std::vector<std::array<int, 3>> simplices;  // triangles, or segments with [2] = -1
    std::vector<int> boundary;            // node indices, ordered along the boundary
    std::vector<double> boundary_w;       // arclength weights
    int curved_simplices = 0;
    double max_cond_A = 1;                // diagnostic only

    const NormModel& norm() const { return *cfg.norm; }
    double omega0() const { return cfg.omega0; }
    int dim() const { return n + 1; }
};

CapNode make_node(const NormModel& m, double omega0, const Vec& EF, const Vec& x, NodeTag tag,
                  double w);

CapMesh build_cap_mesh(const CapConfig& cfg);

Vec cap_point(const CapMesh& mesh, int i);
Mat gbar_frame(const CapMesh& mesh, int i);
double pullback_area_density(const CapMesh& mesh, int i);

// max over simplices of |image area / parameter area - det A_F(centroid)| / det A_F
double pullback_density_check(const CapMesh& mesh);

// sum of weights, pairwise
double region_measure(const CapMesh& mesh);

// node_index,x0..,tag,w,xi0..,detA_F
void dump_mesh(const CapMesh& mesh, std::ostream& os);

// boundary root along a great circle from an inside point p0 in unit tangent
// direction u; searches (0, rmax] and returns the first exit angle
double boundary_exit(const NormModel& m, double omega0, const Vec& p0, const Vec& u, double rmax);

}  // namespace capaf
