#pragma once

#include "capaf/functionals.hpp"

#include <memory>
#include <numbers>

namespace th {

using namespace capaf;

inline std::shared_ptr<const NormModel> iso(int dim = 3) {
    return std::make_shared<NormModel>(NormModel::isotropic(dim));
}

inline Mat ell_matrix() {
    Mat M(3, 3);
    M << 1.2, 0.1, 0, 0.1, 0.9, 0.05, 0, 0.05, 1.1;
    return M;
}

inline std::shared_ptr<const NormModel> ell() { return std::make_shared<NormModel>(NormModel::ellipsoid(ell_matrix())); }

inline std::vector<ZonalTerm> small_terms() {
    ZonalTerm b;
    b.type = TermType::bump;
    b.center = Vec(3);
    b.center << 0.6, 0, 0.8;
    b.width = 0.6;
    b.amplitude = 0.008;
    ZonalTerm h;
    h.type = TermType::harmonic;
    h.center = Vec(3);
    h.center << 0, 0, 1;
    h.width = 2;
    h.amplitude = 0.01;
    return {b, h};
}

inline std::shared_ptr<const NormModel> pert(DerivMode mode = DerivMode::fd) {
    Mat M(3, 3);
    M << 1.1, 0, 0, 0, 0.95, 0, 0, 0, 1;
    return std::make_shared<NormModel>(NormModel::perturbed(M, small_terms(), mode));
}

inline std::shared_ptr<const CapMesh> mesh(std::shared_ptr<const NormModel> norm, double omega0, int level,
                                           int n = 2) {
    CapConfig c;
    c.n = n;
    c.omega0 = omega0;
    c.norm = std::move(norm);
    c.mesh_level = level;
    return std::make_shared<const CapMesh>(build_cap_mesh(c));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace th
