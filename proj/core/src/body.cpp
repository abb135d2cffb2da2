#include "capaf/body.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace capaf {

const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::wulff_cap: return "wulff-cap";
        case Provenance::combination: return "combination";
        case Provenance::perturbed: return "perturbed";
        case Provenance::translated: return "translated";
        case Provenance::custom: return "custom";
    }
    return "?";
}

void Bump::eval(const Vec& x, double* f, Vec* g, Mat* h) const {
    const int d = int(x.size());
    const double r = x.norm();
    const Vec u = x / r;
    const double cr = std::cos(radius);
    const double hh = x.dot(center) - cr * r;
    if (f) *f = 0;
    if (g) *g = Vec::Zero(d);
    if (h) *h = Mat::Zero(d, d);
    if (hh <= 0 || amplitude == 0) return;
    const int p = power;
    const double K = amplitude / std::pow(1 - cr, p);
    const double hp2 = std::pow(hh, p - 2), hp1 = hp2 * hh, hp = hp1 * hh;
    const double rp = std::pow(r, -p);  // r^{-p}
    if (f) *f = K * hp * rp * r;
    if (!g && !h) return;
    const Vec dh = center - cr * u;
    const double f1 = p * hp1 * rp * r;    // p h^{p-1} r^{1-p}
    const double f2 = (1 - p) * hp * rp;   // (1-p) h^p r^{-p}
    if (g) *g = K * (f1 * dh + f2 * u);
    if (h) {
        const Mat P = Mat::Identity(d, d) - u * u.transpose();
        const Vec df1 = p * (p - 1) * hp2 * rp * r * dh + p * (1 - p) * hp1 * rp * u;
        const Vec df2 = (1 - p) * p * hp1 * rp * dh - (1 - p) * p * hp * rp / r * u;
        Mat H = dh * df1.transpose() - f1 * cr / r * P + u * df2.transpose() + f2 / r * P;
        *h = K * 0.5 * (H + H.transpose());
    }
}

void SupportField::eval_with(double F, const Vec& DF, const Mat& D2F, const Vec& x, double* s, Vec* g,
                             Mat* h) const {
    if (s) *s = a * F + c.dot(x);
    if (g) *g = a * DF + c;
    if (h) *h = a * D2F;
    for (const auto& b : bumps) {
        double bf;
        Vec bg;
        Mat bh;
        b.eval(x, s ? &bf : nullptr, g ? &bg : nullptr, h ? &bh : nullptr);
        if (s) *s += bf;
        if (g) *g += bg;
        if (h) *h += bh;
    }
}

void SupportField::eval(const NormModel& m, const Vec& x, double* s, Vec* g, Mat* h) const {
    double F;
    Vec DF;
    Mat D2F;
    m.derivs(x, &F, g ? &DF : nullptr, h ? &D2F : nullptr);
    eval_with(F, DF, D2F, x, s, g, h);
}

double SupportField::value(const NormModel& m, const Vec& x) const {
    double s;
    eval(m, x, &s, nullptr, nullptr);
    return s;
}

SupportField combine_fields(const std::vector<const SupportField*>& f, const std::vector<double>& lambdas) {
    SupportField out;
    out.a = 0;
    out.c = Vec::Zero(f.front()->c.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double l = lambdas[k];
        out.a += l * f[k]->a;
        out.c += l * f[k]->c;
        for (Bump b : f[k]->bumps) {
            b.amplitude *= l;
            if (b.amplitude != 0) out.bumps.push_back(b);
        }
    }
    out.provenance = Provenance::combination;
    return out;
}

Mat tau_from_W(const CapNode& nd, const Mat& W) {
    Mat Ef = nd.B.transpose() * nd.frame;  // frame in node-basis coordinates
    Mat T = Ef.transpose() * nd.Ainv * W * nd.Ainv * Ef / nd.F;
    return T;
}

CapillaryBody::CapillaryBody(std::shared_ptr<const CapMesh> mesh, SupportField field)
    : mesh_(std::move(mesh)), field_(std::move(field)) {
    const CapMesh& M = *mesh_;
    const int d = M.dim();
    if (field_.c.size() != d) throw Error(ErrorKind::invalid_input, "support field dimension mismatch");
    nodes_.resize(M.nodes.size());
    convex_ = true;
    min_w_ = std::numeric_limits<double>::infinity();
    min_height_ = std::numeric_limits<double>::infinity();
    max_bh_ = 0;
    tau_asym_ = 0;
    double scale = 0;
    SupportField vert = field_;
    vert.c.head(d - 1).setZero();
    for (std::size_t i = 0; i < M.nodes.size(); ++i) {
        const CapNode& nd = M.nodes[i];
        BodyNode& b = nodes_[i];
        Mat H;
        field_.eval_with(nd.F, nd.psi, nd.D2F, nd.x, &b.s, &b.X, &H);
        vert.eval_with(nd.F, nd.psi, nd.D2F, nd.x, &b.s_int, nullptr, nullptr);
        b.shat = b.s / nd.F;
        Mat W = nd.B.transpose() * H * nd.B;
        b.W = 0.5 * (W + W.transpose());
        Mat T = tau_from_W(nd, b.W);
        tau_asym_ = std::max(tau_asym_, (T - T.transpose()).norm());
        b.tau = 0.5 * (T + T.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(b.W), et(b.tau);
        b.tau_eig = et.eigenvalues();
        min_w_ = std::min(min_w_, ew.eigenvalues().minCoeff());
        if (!(ew.eigenvalues().minCoeff() > 0) || !(et.eigenvalues().minCoeff() > 0)) convex_ = false;
        double hgt = b.X(d - 1);
        min_height_ = std::min(min_height_, hgt);
        if (nd.tag == NodeTag::boundary) max_bh_ = std::max(max_bh_, std::abs(hgt));
        scale = std::max(scale, b.X.norm());
    }
    const double tol = 1e-9 * std::max(scale, 1.0);
    capillary_ = min_height_ >= -tol && max_bh_ <= tol;
}

void CapillaryBody::validate() const {
    if (!convex_) {
        std::ostringstream os;
        os << "body is not strictly convex: min eigenvalue of W = " << min_w_;
        throw Error(ErrorKind::convexity_violation, os.str());
    }
    if (!capillary_) {
        std::ostringstream os;
        os << "body violates the capillary boundary condition: max boundary height " << max_bh_
           << ", min height " << min_height_;
        throw Error(ErrorKind::convexity_violation, os.str());
    }
}

CapillaryBody make_wulff_cap(std::shared_ptr<const CapMesh> mesh, double r0, const Vec& E) {
    const int d = mesh->dim();
    if (!(r0 > 0)) throw Error(ErrorKind::invalid_input, "Wulff cap radius must be positive");
    if (E.size() != d || std::abs(E(d - 1) - 1.0) > 1e-12)
        throw Error(ErrorKind::invalid_input, "E must satisfy <E, E_{n+1}> = 1");
    SupportField f;
    f.a = r0;
    f.c = r0 * mesh->omega0() * E;
    f.provenance = Provenance::wulff_cap;
    CapillaryBody b(std::move(mesh), f);
    b.validate();
    return b;
}

CapillaryBody make_wulff_cap(std::shared_ptr<const CapMesh> mesh, double r0) {
    Vec E = mesh->EF;
    return make_wulff_cap(std::move(mesh), r0, E);
}

CapillaryBody minkowski_combine(const std::vector<const CapillaryBody*>& bodies,
                                const std::vector<double>& lambdas) {
    if (bodies.empty() || bodies.size() != lambdas.size())
        throw Error(ErrorKind::invalid_input, "bodies and coefficients must be non-empty and of equal length");
    double tot = 0;
    for (double l : lambdas) {
        if (!(l >= 0)) throw Error(ErrorKind::invalid_input, "Minkowski coefficients must be nonnegative");
        tot += l;
    }
    if (!(tot > 0)) throw Error(ErrorKind::invalid_input, "all Minkowski coefficients are zero");
    std::vector<const SupportField*> f;
    for (const auto* b : bodies) {
        if (b->mesh_ptr() != bodies.front()->mesh_ptr())
            throw Error(ErrorKind::invalid_input, "bodies live on different meshes");
        f.push_back(&b->support());
    }
    SupportField s = combine_fields(f, lambdas);
    if (bodies.size() == 1 && lambdas[0] == 1.0) s = bodies[0]->support();
    CapillaryBody out(bodies.front()->mesh_ptr(), s);
    out.validate();
    return out;
}

CapillaryBody translate(const CapillaryBody& body, const Vec& v) {
    const int d = body.mesh().dim();
    if (v.size() != d || v(d - 1) != 0.0)
        throw Error(ErrorKind::invalid_input, "translation must be horizontal");
    SupportField s = body.support();
    s.c += v;
    s.provenance = Provenance::translated;
    return CapillaryBody(body.mesh_ptr(), s);
}

namespace {

// geodesic ball of radius rho about c lies strictly inside S
bool ball_inside(const NormModel& m, double w0, const Vec& c, double rho) {
    if (region_residual(m, w0, c) <= 0) return false;
    const int d = m.dim();
    if (d == 2) {
        Vec t(2);
        t << -c(1), c(0);
        return region_residual(m, w0, geodesic(c, t, rho)) > 0 &&
               region_residual(m, w0, geodesic(c, Vec(-t), rho)) > 0;
    }
    Mat B = tangent_basis(c);
    for (int k = 0; k < 24; ++k) {
        double a = 2 * std::numbers::pi * k / 24;
        Vec u = std::cos(a) * B.col(0) + std::sin(a) * B.col(1);
        if (region_residual(m, w0, geodesic(c, u, rho)) <= 0) return false;
    }
    return true;
}

}  // namespace

CapillaryBody random_capillary_body(std::shared_ptr<const CapMesh> mesh, std::uint64_t seed, double amplitude) {
    if (!(amplitude >= 0)) throw Error(ErrorKind::invalid_input, "amplitude must be nonnegative");
    const NormModel& m = mesh->norm();
    const double w0 = mesh->omega0();
    const int d = mesh->dim();
    Rng rng(seed * 0x9E3779B97F4A7C15ull + 0x5851F42D4C957F2Dull);

    SupportField f;
    f.a = 1.0;
    f.c = w0 * mesh->EF;
    f.provenance = Provenance::perturbed;
    for (int k = 0; k < d - 1; ++k) f.c(k) += rng.uniform(-0.5, 0.5);

    const int nb = 3 + int(rng.uniform() * 3);
    for (int j = 0; j < nb && amplitude > 0; ++j) {
        Bump b;
        b.radius = rng.uniform(0.3, 0.7);
        bool placed = false;
        for (int attempt = 0; attempt < 600 && !placed; ++attempt) {
            if (attempt > 0 && attempt % 150 == 0) b.radius *= 0.6;
            Vec c(d);
            for (int k = 0; k < d; ++k) c(k) = rng.normal();
            c.normalize();
            if (ball_inside(m, w0, c, b.radius + 0.02)) {
                b.center = c;
                placed = true;
            }
        }
        if (!placed) throw Error(ErrorKind::generation, "could not place a bump strictly inside S");
        b.amplitude = amplitude * rng.uniform(-0.5, 1.0);
        f.bumps.push_back(b);
    }

    for (int halving = 0; halving <= 20; ++halving) {
        CapillaryBody body(mesh, f);
        if (body.convex() && body.capillary()) {
            body.seed = seed;
            body.amplitude = amplitude;
            body.halvings = halving;
            return body;
        }
        for (auto& b : f.bumps) b.amplitude *= 0.5;
    }
    throw Error(ErrorKind::generation,
                "random body generation: amplitude backtracking exhausted for seed " + std::to_string(seed));
}

double capillary_support(const CapillaryBody& body, int i) { return body.node(i).shat; }

double capillary_support_metric(const CapillaryBody& body, int i) {
    const CapNode& nd = body.mesh().nodes.at(i);
    return body.node(i).X.dot(nd.G * nd.psi);
}

double capillary_support_bar(const CapillaryBody& body, int i) {
    const CapNode& nd = body.mesh().nodes.at(i);
    const double gef = body.mesh().EF.dot(nd.G * nd.psi);
    return body.node(i).shat / (1 + body.mesh().omega0() * gef);
}

RobinResult robin_residual(const CapillaryBody& body, int i) {
    const CapMesh& M = body.mesh();
    const CapNode& nd = M.nodes.at(i);
    if (nd.tag != NodeTag::boundary) throw Error(ErrorKind::invalid_input, "Robin residual needs a boundary node");
    const int d = M.dim();
    RobinResult r;
    const BodyNode& b = body.node(i);
    r.euclidean = b.X(d - 1);
    const double muE = nd.mu(d - 1);
    if (std::abs(muE) < 1e-8) {
        r.skipped = true;
        return r;
    }
    Vec dshat = b.X / nd.F - b.s * nd.psi / (nd.F * nd.F);
    r.residual = dshat.dot(nd.mu) - M.omega0() * b.shat / (nd.F * muE);
    return r;
}

RobinSummary robin_check(const CapillaryBody& body) {
    RobinSummary s;
    for (int i : body.mesh().boundary) {
        RobinResult r = robin_residual(body, i);
        if (r.skipped) {
            ++s.skipped;
            continue;
        }
        ++s.checked;
        s.max_residual = std::max(s.max_residual, std::abs(r.residual));
        s.max_euclidean = std::max(s.max_euclidean, std::abs(r.euclidean));
    }
    return s;
}

const Mat& tau_matrix(const CapillaryBody& body, int i) { return body.node(i).tau; }

Mat tau_matrix_fd(const CapillaryBody& body, int i, double step) {
    const CapMesh& M = body.mesh();
    const CapNode& nd = M.nodes.at(i);
    const NormModel& m = M.norm();
    const int n = M.n;
    auto X = [&](const Vec& x) {
        Vec g;
        body.support().eval(m, x, nullptr, &g, nullptr);
        return g;
    };
    std::vector<Vec> DX(n);
    for (int k = 0; k < n; ++k) {
        Vec v = nd.B * (nd.Ainv * (nd.B.transpose() * nd.frame.col(k)));
        const double len = v.norm();
        const Vec u = v / len;
        auto D = [&](double h) {
            return Vec((X(geodesic(nd.x, u, h)) - X(geodesic(nd.x, u, -h))) / (2 * h));
        };
        DX[k] = len * (4 * D(step / 2) - D(step)) / 3;
    }
    Mat T(n, n);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) T(k, l) = nd.frame.col(l).dot(nd.G * DX[k]);
    return T;
}

Vec tau_eigen_route_b(const CapillaryBody& body, int i) {
    const CapNode& nd = body.mesh().nodes.at(i);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(body.node(i).W, nd.A);
    return es.eigenvalues();
}

Curvatures curvatures_from_tau(const Mat& tau) {
    const int n = int(tau.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (tau + tau.transpose()));
    Curvatures c;
    for (int k = 0; k < n; ++k) {
        double t = es.eigenvalues()(k);
        if (!(t > 0)) throw Error(ErrorKind::convexity_violation, "non-positive curvature radius");
        c.kappa.push_back(1.0 / t);
    }
    // elementary symmetric functions by the usual recurrence
    std::vector<double> e(n + 1, 0.0);
    e[0] = 1;
    for (double k : c.kappa)
        for (int j = n; j >= 1; --j) e[j] += k * e[j - 1];
    for (int j = 0; j <= n; ++j) c.H.push_back(e[j] / binom(n, j));
    c.H.push_back(0.0);
    return c;
}

Curvatures anisotropic_curvatures(const CapillaryBody& body, int i) {
    return curvatures_from_tau(body.node(i).tau);
}

Mat hessian_on_sphere(const ScalarField& s, const Vec& x, const Mat& B, double h) {
    const int n = int(B.cols());
    const double s0 = s(x);
    auto d2 = [&](const Vec& u) {
        return (-s(geodesic(x, u, 2 * h)) + 16 * s(geodesic(x, u, h)) - 30 * s0 + 16 * s(geodesic(x, u, -h)) -
                s(geodesic(x, u, -2 * h))) /
               (12 * h * h);
    };
    Mat Hs(n, n);
    for (int k = 0; k < n; ++k) Hs(k, k) = d2(B.col(k));
    for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
            Vec p = (B.col(k) + B.col(l)) / std::sqrt(2.0);
            Vec q = (B.col(k) - B.col(l)) / std::sqrt(2.0);
            Hs(k, l) = Hs(l, k) = 0.5 * (d2(p) - d2(q));
        }
    return Hs + s0 * Mat::Identity(n, n);
}

Mat tau_fd_field(const CapMesh& mesh, int i, const ScalarField& s, double step) {
    const CapNode& nd = mesh.nodes.at(i);
    Mat W = hessian_on_sphere(s, nd.x, nd.B, step);
    Mat T = tau_from_W(nd, W);
    return 0.5 * (T + T.transpose());
}

ScalarField kernel_field(const NormModel& m, int alpha) {
    return [&m, alpha](const Vec& x) {
        double F;
        Vec g;
        Mat h;
        m.derivs(x, &F, &g, &h);
        // G at Psi(x) is the inverse of the half-square Hessian at the paired point x
        Mat Hh = F * h + g * g.transpose();
        Vec Ea = unit_axis(m.dim(), alpha);
        return F * g.dot(Hh.ldlt().solve(Ea));
    };
}

std::string serialize_body(const CapillaryBody& body) {
    std::ostringstream os;
    os.precision(17);
    const auto& f = body.support();
    os << "provenance = " << to_string(f.provenance) << "\n";
    os << "norm = " << body.mesh().norm().describe() << "\n";
    os << "n = " << body.mesh().n << "\n";
    os << "omega0 = " << body.mesh().omega0() << "\n";
    os << "mesh_level = " << body.mesh().cfg.mesh_level << "\n";
    os << "seed = " << body.seed << "\n";
    os << "amplitude = " << body.amplitude << "\n";
    os << "halvings = " << body.halvings << "\n";
    os << "a = " << f.a << "\n";
    os << "c =";
    for (int k = 0; k < f.c.size(); ++k) os << " " << f.c(k);
    os << "\n";
    for (const auto& b : f.bumps) {
        os << "bump =";
        for (int k = 0; k < b.center.size(); ++k) os << " " << b.center(k);
        os << " " << b.radius << " " << b.amplitude << " " << b.power << "\n";
    }
    return os.str();
}

}  // namespace capaf
