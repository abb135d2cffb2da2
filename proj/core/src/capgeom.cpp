#include "capaf/capgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <set>

namespace capaf {

namespace {

constexpr double kSnap = 0.25;         // vertices this close to the boundary (in units of h) get projected
constexpr double kRootTol = 1e-12;

// Gauss-Legendre on [0,1]
const std::array<double, 3> g3x = {0.5 - 0.5 * 0.7745966692414834, 0.5, 0.5 + 0.5 * 0.7745966692414834};
const std::array<double, 3> g3w = {5.0 / 18, 8.0 / 18, 5.0 / 18};
const std::array<double, 4> g4x = {0.5 - 0.5 * 0.8611363115940526, 0.5 - 0.5 * 0.3399810435848563,
                                   0.5 + 0.5 * 0.3399810435848563, 0.5 + 0.5 * 0.8611363115940526};
const std::array<double, 4> g4w = {0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461,
                                   0.5 * 0.6521451548625461, 0.5 * 0.3478548451374538};

// degree-5 seven point rule on the reference triangle, weights sum to 1
struct TriRule {
    std::array<std::array<double, 3>, 7> bary;
    std::array<double, 7> w;
};

TriRule radon7() {
    TriRule r;
    const double s = std::sqrt(15.0);
    const double a1 = (6 - s) / 21, b1 = 1 - 2 * a1, w1 = (155 - s) / 1200;
    const double a2 = (6 + s) / 21, b2 = 1 - 2 * a2, w2 = (155 + s) / 1200;
    r.bary[0] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    r.w[0] = 9.0 / 40;
    r.bary[1] = {a1, a1, b1};
    r.bary[2] = {a1, b1, a1};
    r.bary[3] = {b1, a1, a1};
    r.bary[4] = {a2, a2, b2};
    r.bary[5] = {a2, b2, a2};
    r.bary[6] = {b2, a2, a2};
    for (int k = 1; k < 4; ++k) r.w[k] = w1;
    for (int k = 4; k < 7; ++k) r.w[k] = w2;
    return r;
}

Vec cross3(const Vec& a, const Vec& b) {
    Vec c(3);
    c << a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0);
    return c;
}

// |a x b| in any dimension (Lagrange)
double cross_norm(const Vec& a, const Vec& b) {
    double aa = a.squaredNorm(), bb = b.squaredNorm(), ab = a.dot(b);
    return std::sqrt(std::max(0.0, aa * bb - ab * ab));
}

double angle_between(const Vec& a, const Vec& b) {
    return std::atan2(cross_norm(a, b), a.dot(b));
}

double residual_along(const NormModel& m, double omega0, const Vec& p0, const Vec& u, double r) {
    return region_residual(m, omega0, geodesic(p0, u, r));
}

}  // namespace

double CapConfig::tol(const std::string& key, double fallback) const {
    auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
}

std::pair<double, double> omega0_range(const NormModel& m) {
    Vec E = vertical(m.dim());
    return {-m.F(E), m.F(Vec(-E))};
}

void validate_cap_config(const CapConfig& cfg) {
    if (!cfg.norm) throw Error(ErrorKind::invalid_config, "cap config has no norm");
    if (cfg.n != 1 && cfg.n != 2)
        throw Error(ErrorKind::invalid_config, "meshing supports n in {1,2}, got " + std::to_string(cfg.n));
    if (cfg.norm->dim() != cfg.n + 1)
        throw Error(ErrorKind::invalid_config, "norm dimension does not match n+1");
    auto [lo, hi] = omega0_range(*cfg.norm);
    if (!(cfg.omega0 > lo && cfg.omega0 < hi))
        throw Error(ErrorKind::invalid_config, "omega0 = " + std::to_string(cfg.omega0) +
                                                   " outside the open interval (" + std::to_string(lo) +
                                                   ", " + std::to_string(hi) + ")");
    if (cfg.mesh_level < 0 || cfg.mesh_level > 8)
        throw Error(ErrorKind::invalid_config, "mesh level must be in [0,8]");
}

Vec ef_vector(const NormModel& m, double omega0) {
    auto [lo, hi] = omega0_range(m);
    if (!(omega0 > lo && omega0 < hi)) throw Error(ErrorKind::invalid_config, "omega0 outside admissible range");
    Vec E = vertical(m.dim());
    if (omega0 == 0.0) return E;
    // Euler gives <DF(E), E> = F(E); dividing by the last entry keeps that
    // exact when DF comes from differences
    const int d = m.dim();
    Vec g = omega0 < 0 ? m.DF(E) : Vec(m.DF(Vec(-E)));
    return Vec(g / g(d - 1));
}

double region_residual(const NormModel& m, double omega0, const Vec& x) {
    return m.DF(x)(m.dim() - 1) + omega0;
}

double boundary_exit(const NormModel& m, double omega0, const Vec& p0, const Vec& u, double rmax) {
    constexpr int samples = 32;
    double prev = 0, rprev = region_residual(m, omega0, p0);
    if (!(rprev > 0)) throw Error(ErrorKind::mesh_construction, "ray origin is not inside S");
    double lo = -1, hi = -1;
    for (int k = 1; k <= samples; ++k) {
        double t = rmax * k / samples;
        double r = residual_along(m, omega0, p0, u, t);
        if (r <= 0) {
            lo = prev;
            hi = t;
            break;
        }
        prev = t;
        rprev = r;
    }
    if (hi < 0) throw Error(ErrorKind::mesh_construction, "no boundary crossing found along great circle");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        double mid = 0.5 * (lo + hi);
        if (residual_along(m, omega0, p0, u, mid) > 0)
            lo = mid;
        else
            hi = mid;
    }
    double t = 0.5 * (lo + hi);
    // one Newton polish, kept only if it helps
    Vec x = geodesic(p0, u, t);
    Vec dx = -std::sin(t) * p0 + std::cos(t) * u;
    double r = region_residual(m, omega0, x);
    double dr = (m.D2F(x) * dx)(m.dim() - 1);
    if (dr != 0) {
        double tn = t - r / dr;
        if (std::abs(tn - t) < 1e-10 && std::abs(residual_along(m, omega0, p0, u, tn)) < std::abs(r)) t = tn;
    }
    if (std::abs(residual_along(m, omega0, p0, u, t)) > kRootTol * std::max(1.0, std::abs(omega0)) * 10)
        throw Error(ErrorKind::mesh_construction, "boundary root did not converge");
    return t;
}

CapNode make_node(const NormModel& m, double omega0, const Vec& EF, const Vec& x, NodeTag tag, double w) {
    const int d = m.dim(), n = d - 1;
    CapNode nd;
    nd.x = x;
    nd.tag = tag;
    nd.w = w;
    m.derivs(x, &nd.F, &nd.psi, &nd.D2F);
    nd.B = tangent_basis(x);
    Mat A = nd.B.transpose() * nd.D2F * nd.B;
    nd.A = 0.5 * (A + A.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(nd.A);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::model_invalid, "A_F not positive definite at a mesh node");
    nd.Ainv = nd.A.inverse();
    nd.detA = nd.A.determinant();
    nd.xi = nd.psi + omega0 * EF;
    Mat H = nd.F * nd.D2F + nd.psi * nd.psi.transpose();
    nd.G = H.inverse();
    nd.G = 0.5 * (nd.G + nd.G.transpose());

    auto gnorm = [&](const Vec& v) { return std::sqrt(v.dot(nd.G * v)); };
    nd.frame = Mat::Zero(d, n);
    std::vector<Vec> out;
    if (tag == NodeTag::boundary) {
        Vec E = vertical(d);
        Vec px = E - E.dot(x) * x;
        double pn = px.norm();
        nd.mu = pn > 0 ? Vec(-px / pn) : Vec(Vec::Zero(d));
        Vec muF = nd.D2F * nd.mu;  // A_F(nu) mu, already tangent
        double g = gnorm(muF);
        if (!(g > 0)) throw Error(ErrorKind::numeric, "degenerate co-normal at boundary node");
        Vec en = muF / g;
        // remaining frame vectors first, e_n last
        std::vector<Vec> cand;
        for (int k = 0; k < n; ++k) {
            Vec v = nd.B.col(k);
            v -= v.dot(nd.G * en) * en;
            cand.push_back(v);
        }
        if (n == 2) {
            int pick = gnorm(cand[0]) >= gnorm(cand[1]) ? 0 : 1;
            Vec v = cand[pick];
            out.push_back(v / gnorm(v));
        }
        out.push_back(en);
    } else {
        for (int k = 0; k < n; ++k) {
            Vec v = nd.B.col(k);
            for (const auto& e : out) v -= v.dot(nd.G * e) * e;
            double g = gnorm(v);
            if (!(g > 1e-300)) throw Error(ErrorKind::numeric, "degenerate metric in frame construction");
            out.push_back(v / g);
        }
    }
    for (int k = 0; k < n; ++k) nd.frame.col(k) = out[k];
    return nd;
}

namespace {

void finish_mesh(CapMesh& mesh) {
    mesh.max_cond_A = 1;
    for (const auto& nd : mesh.nodes) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(nd.A);
        double c = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();
        mesh.max_cond_A = std::max(mesh.max_cond_A, c);
    }
}

CapMesh build_arc(const CapConfig& cfg) {
    const NormModel& m = *cfg.norm;
    CapMesh mesh;
    mesh.cfg = cfg;
    mesh.n = 1;
    mesh.EF = ef_vector(m, cfg.omega0);
    Vec E = vertical(2);
    Vec ex = unit_axis(2, 0);
    // meridians from the pole: S is star-shaped about E
    double rr = boundary_exit(m, cfg.omega0, E, ex, std::numbers::pi);
    double rl = boundary_exit(m, cfg.omega0, E, Vec(-ex), std::numbers::pi);
    const double half_pi = 0.5 * std::numbers::pi;
    double phi_lo = half_pi - rr, phi_hi = half_pi + rl;
    const int N = 4 << cfg.mesh_level;
    const double len = (phi_hi - phi_lo) / N;
    mesh.h = len;
    auto at = [](double phi) {
        Vec x(2);
        x << std::cos(phi), std::sin(phi);
        return x;
    };
    for (int s = 0; s < N; ++s) {
        double a = phi_lo + s * len;
        for (int q = 0; q < 3; ++q)
            mesh.nodes.push_back(make_node(m, cfg.omega0, mesh.EF, at(a + g3x[q] * len), NodeTag::interior,
                                           g3w[q] * len));
    }
    mesh.num_quadrature = int(mesh.nodes.size());
    for (int s = 0; s <= N; ++s) mesh.vertices.push_back(at(s == N ? phi_hi : phi_lo + s * len));
    for (int s = 0; s < N; ++s) mesh.simplices.push_back({s, s + 1, -1});
    mesh.boundary.push_back(int(mesh.nodes.size()));
    mesh.nodes.push_back(make_node(m, cfg.omega0, mesh.EF, at(phi_lo), NodeTag::boundary, 0.0));
    mesh.boundary.push_back(int(mesh.nodes.size()));
    mesh.nodes.push_back(make_node(m, cfg.omega0, mesh.EF, at(phi_hi), NodeTag::boundary, 0.0));
    mesh.boundary_w = {1.0, 1.0};  // counting measure on the two end points
    finish_mesh(mesh);
    return mesh;
}

struct Quad {
    Vec x;
    double w;
};

void straight_triangle(const Vec& a, const Vec& b, const Vec& c, std::vector<Quad>& out) {
    static const TriRule R = radon7();
    Vec nrm = cross3(Vec(b - a), Vec(c - a));
    const double area = 0.5;  // reference area, rule weights sum to 1
    for (int q = 0; q < 7; ++q) {
        Vec P = R.bary[q][0] * a + R.bary[q][1] * b + R.bary[q][2] * c;
        double r = P.norm();
        double J = std::abs(P.dot(nrm)) / (r * r * r);
        out.push_back({P / r, R.w[q] * area * J});
    }
}

void curved_triangle(const NormModel& m, double omega0, const Vec& p0, const Vec& q1, const Vec& q2,
                     std::vector<Quad>& out) {
    // polar fan from the apex p0 to the exact boundary between q1 and q2
    Vec a = q1 - q1.dot(p0) * p0;
    Vec b = (q2 - q2.dot(p0) * p0) - a;
    double rmax = 2.0 * std::max(angle_between(p0, q1), angle_between(p0, q2));
    for (int it = 0; it < 4; ++it) {
        double t = g4x[it];
        Vec v = a + t * b;
        double vn = v.norm();
        Vec u = v / vn;
        double dphi = (b - u * u.dot(b)).norm() / vn;
        double rho = boundary_exit(m, omega0, p0, u, rmax);
        for (int is = 0; is < 4; ++is) {
            double s = g4x[is];
            double r = s * rho;
            out.push_back({geodesic(p0, u, r), g4w[it] * g4w[is] * rho * std::sin(r) * dphi});
        }
    }
}

CapMesh build_surface(const CapConfig& cfg) {
    const NormModel& m = *cfg.norm;
    const double w0 = cfg.omega0;
    CapMesh mesh;
    mesh.cfg = cfg;
    mesh.n = 2;
    mesh.EF = ef_vector(m, w0);
    const Vec E = vertical(3);

    Icosphere ico = make_icosphere(cfg.mesh_level);
    const int nv = int(ico.v.size());

    double hsum = 0;
    int hcnt = 0;
    for (const auto& f : ico.f)
        for (int k = 0; k < 3; ++k) {
            hsum += angle_between(ico.v[f[k]], ico.v[f[(k + 1) % 3]]);
            ++hcnt;
        }
    mesh.h = hsum / hcnt;

    std::vector<char> in(nv, 0);
    for (int i = 0; i < nv; ++i) {
        const Vec& x = ico.v[i];
        double r = region_residual(m, w0, x);
        double g = (m.D2F(x) * E).norm();
        double dist = r / std::max(g, 1e-300);
        in[i] = dist > kSnap * mesh.h;
    }

    std::vector<std::array<int, 3>> kept;
    for (const auto& f : ico.f)
        if (in[f[0]] || in[f[1]] || in[f[2]]) kept.push_back(f);
    if (kept.empty())
        throw Error(ErrorKind::mesh_construction, "S has no interior vertices at this mesh level");

    // in-neighbours of each out vertex through kept faces
    std::map<int, std::set<int>> nbr;
    for (const auto& f : kept)
        for (int k = 0; k < 3; ++k)
            if (!in[f[k]])
                for (int j = 0; j < 3; ++j)
                    if (in[f[j]]) nbr[f[k]].insert(f[j]);

    std::vector<Vec> pos(ico.v.begin(), ico.v.end());
    for (auto& [v, cands] : nbr) {
        double best = std::numeric_limits<double>::infinity();
        Vec bestx;
        for (int u : cands) {
            const Vec& p0 = ico.v[u];
            const Vec& q = ico.v[v];
            Vec dir = q - q.dot(p0) * p0;
            double th = angle_between(p0, q);
            dir /= dir.norm();
            double t;
            try {
                t = boundary_exit(m, w0, p0, dir, std::max(2 * th, th + mesh.h));
            } catch (const Error&) {
                continue;
            }
            double move = std::abs(t - th);
            if (move < best) {
                best = move;
                bestx = geodesic(p0, dir, t);
            }
        }
        if (!std::isfinite(best))
            throw Error(ErrorKind::mesh_construction, "could not project a boundary vertex onto the boundary of S");
        pos[v] = bestx;
    }

    for (const auto& f : kept) {
        Vec o = ico.v[f[0]], p = ico.v[f[1]], r = ico.v[f[2]];
        double d0 = o.dot(cross3(p, r));
        double d1 = pos[f[0]].dot(cross3(pos[f[1]], pos[f[2]]));
        if (!(d1 > 1e-6 * d0))
            throw Error(ErrorKind::mesh_construction, "boundary projection inverted a triangle");
    }

    // mesh boundary edges: used by exactly one kept face
    std::map<std::pair<int, int>, int> ecount;
    for (const auto& f : kept)
        for (int k = 0; k < 3; ++k) ++ecount[std::minmax(f[k], f[(k + 1) % 3])];

    std::vector<Quad> quad;
    for (const auto& f : kept) {
        int bcount = 0;
        for (int k = 0; k < 3; ++k) bcount += !in[f[k]];
        bool curved = false;
        if (bcount == 2) {
            for (int k = 0; k < 3; ++k) {
                int a = f[(k + 1) % 3], b = f[(k + 2) % 3];
                if (in[f[k]] && ecount[std::minmax(a, b)] == 1) {
                    curved_triangle(m, w0, pos[f[k]], pos[a], pos[b], quad);
                    curved = true;
                    ++mesh.curved_simplices;
                }
            }
        }
        if (!curved) straight_triangle(pos[f[0]], pos[f[1]], pos[f[2]], quad);
    }

    for (const auto& q : quad) {
        if (region_residual(m, w0, q.x) <= 0)
            throw Error(ErrorKind::mesh_construction, "quadrature point fell outside S");
        mesh.nodes.push_back(make_node(m, w0, mesh.EF, q.x, NodeTag::interior, q.w));
    }
    mesh.num_quadrature = int(mesh.nodes.size());

    // compact vertex numbering
    std::map<int, int> vid;
    for (const auto& f : kept)
        for (int k = 0; k < 3; ++k) vid.emplace(f[k], 0);
    int next = 0;
    for (auto& [old, nu] : vid) {
        nu = next++;
        mesh.vertices.push_back(pos[old]);
    }
    for (const auto& f : kept) mesh.simplices.push_back({vid[f[0]], vid[f[1]], vid[f[2]]});

    // ordered boundary chain
    std::map<int, std::vector<int>> adj;
    for (const auto& [e, c] : ecount)
        if (c == 1) {
            adj[e.first].push_back(e.second);
            adj[e.second].push_back(e.first);
        }
    if (adj.empty()) throw Error(ErrorKind::mesh_construction, "mesh has no boundary");
    for (const auto& [v, a] : adj)
        if (a.size() != 2 || in[v])
            throw Error(ErrorKind::mesh_construction, "boundary is not a simple closed curve");
    std::vector<int> chain;
    int start = adj.begin()->first, prev = -1, cur = start;
    do {
        chain.push_back(cur);
        const auto& a = adj[cur];
        int nx = a[0] != prev ? a[0] : a[1];
        prev = cur;
        cur = nx;
    } while (cur != start && chain.size() <= adj.size());
    if (chain.size() != adj.size())
        throw Error(ErrorKind::mesh_construction, "boundary has more than one component");
    double orient = 0;
    for (std::size_t i = 0; i < chain.size(); ++i)
        orient += cross3(pos[chain[i]], pos[chain[(i + 1) % chain.size()]]).dot(E);
    if (orient < 0) std::reverse(chain.begin() + 1, chain.end());

    const std::size_t nb = chain.size();
    std::vector<double> seg(nb);
    for (std::size_t i = 0; i < nb; ++i) seg[i] = angle_between(pos[chain[i]], pos[chain[(i + 1) % nb]]);
    for (std::size_t i = 0; i < nb; ++i) {
        mesh.boundary.push_back(int(mesh.nodes.size()));
        mesh.nodes.push_back(make_node(m, w0, mesh.EF, pos[chain[i]], NodeTag::boundary, 0.0));
        mesh.boundary_w.push_back(0.5 * (seg[i] + seg[(i + nb - 1) % nb]));
    }
    finish_mesh(mesh);
    return mesh;
}

}  // namespace

CapMesh build_cap_mesh(const CapConfig& cfg) {
    validate_cap_config(cfg);
    return cfg.n == 1 ? build_arc(cfg) : build_surface(cfg);
}

Vec cap_point(const CapMesh& mesh, int i) { return mesh.nodes.at(i).xi; }
Mat gbar_frame(const CapMesh& mesh, int i) { return mesh.nodes.at(i).frame; }
double pullback_area_density(const CapMesh& mesh, int i) { return mesh.nodes.at(i).detA; }

double region_measure(const CapMesh& mesh) {
    std::vector<double> w;
    w.reserve(mesh.num_quadrature);
    for (int i = 0; i < mesh.num_quadrature; ++i) w.push_back(mesh.nodes[i].w);
    return pairwise_sum(w);
}

double pullback_density_check(const CapMesh& mesh) {
    const NormModel& m = mesh.norm();
    auto xi_of = [&](const Vec& x) { return Vec(m.DF(x) + mesh.omega0() * mesh.EF); };
    double worst = 0;
    for (const auto& s : mesh.simplices) {
        double param, image;
        Vec c;
        if (mesh.n == 1) {
            const Vec &a = mesh.vertices[s[0]], &b = mesh.vertices[s[1]];
            param = angle_between(a, b);
            image = (xi_of(b) - xi_of(a)).norm();
            c = (a + b).normalized();
        } else {
            const Vec &a = mesh.vertices[s[0]], &b = mesh.vertices[s[1]], &cc = mesh.vertices[s[2]];
            double tripl = std::abs(a.dot(cross3(b, cc)));
            param = 2 * std::atan2(tripl, 1 + a.dot(b) + b.dot(cc) + cc.dot(a));
            image = 0.5 * cross3(Vec(xi_of(b) - xi_of(a)), Vec(xi_of(cc) - xi_of(a))).norm();
            c = (a + b + cc).normalized();
        }
        Mat B = tangent_basis(c);
        double det = (B.transpose() * m.D2F(c) * B).determinant();
        worst = std::max(worst, std::abs(image / param - det) / det);
    }
    return worst;
}

void dump_mesh(const CapMesh& mesh, std::ostream& os) {
    const int d = mesh.dim();
    os << "node_index";
    for (int k = 0; k < d; ++k) os << ",x" << k;
    os << ",tag,w";
    for (int k = 0; k < d; ++k) os << ",xi" << k;
    os << ",detA_F\n";
    auto old = os.precision(17);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
        const auto& nd = mesh.nodes[i];
        os << i;
        for (int k = 0; k < d; ++k) os << ',' << nd.x(k);
        os << ',' << (nd.tag == NodeTag::boundary ? "boundary" : "interior") << ',' << nd.w;
        for (int k = 0; k < d; ++k) os << ',' << nd.xi(k);
        os << ',' << nd.detA << '\n';
    }
    os.precision(old);
}

}  // namespace capaf
