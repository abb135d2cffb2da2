#include "capaf/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace capaf {

const char* to_string(MvRoute r) {
    switch (r) {
        case MvRoute::anisotropic: return "anisotropic-integral";
        case MvRoute::euclidean: return "euclidean-integral";
        case MvRoute::polyfit: return "polyfit-oracle";
    }
    return "?";
}

namespace {

void check_same_mesh(const BodyList& b, std::size_t expected) {
    if (b.size() != expected)
        throw Error(ErrorKind::invalid_input, "expected " + std::to_string(expected) + " bodies, got " +
                                                  std::to_string(b.size()));
    for (const auto* p : b)
        if (p->mesh_ptr() != b.front()->mesh_ptr())
            throw Error(ErrorKind::invalid_input, "bodies live on different meshes");
}

double qsum(const CapMesh& M, const std::function<double(int)>& f) {
    std::vector<double> t(M.num_quadrature);
    for (int i = 0; i < M.num_quadrature; ++i) t[i] = M.nodes[i].w * f(i);
    return pairwise_sum(t);
}

double md_of(int n, const std::vector<const Mat*>& mats) {
    const double* p[6];
    for (int k = 0; k < n; ++k) p[k] = mats[k]->data();
    return md_raw(n, p);
}

double factorial(int n) {
    double f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

}  // namespace

double volume(const CapillaryBody& body) {
    const CapMesh& M = body.mesh();
    return qsum(M, [&](int i) { return body.node(i).s_int * body.node(i).W.determinant(); }) / (M.n + 1);
}

double mv_integrand_euclidean(const BodyList& b, int i) {
    const int n = b.front()->mesh().n;
    std::vector<const Mat*> mats;
    for (int k = 1; k <= n; ++k) mats.push_back(&b[k]->node(i).W);
    return b[0]->node(i).s_int * md_of(n, mats);
}

double mv_integrand_anisotropic(const BodyList& b, int i) {
    const CapMesh& M = b.front()->mesh();
    const int n = M.n;
    std::vector<const Mat*> mats;
    for (int k = 1; k <= n; ++k) mats.push_back(&b[k]->node(i).tau);
    const CapNode& nd = M.nodes[i];
    return b[0]->node(i).s_int / nd.F * md_of(n, mats) * nd.F * nd.detA;
}

namespace {

double integral_route(const BodyList& b, MvRoute r) {
    const CapMesh& M = b.front()->mesh();
    if (r == MvRoute::euclidean) return qsum(M, [&](int i) { return mv_integrand_euclidean(b, i); }) / (M.n + 1);
    return qsum(M, [&](int i) { return mv_integrand_anisotropic(b, i); }) / (M.n + 1);
}

void monomials(int u, int deg, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (int(cur.size()) == u - 1) {
        cur.push_back(deg);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int e = deg; e >= 0; --e) {
        cur.push_back(e);
        monomials(u, deg - e, cur, out);
        cur.pop_back();
    }
}

MixedVolumeResult polyfit_route(const BodyList& b) {
    const CapMesh& M = b.front()->mesh();
    const int n = M.n;
    BodyList uniq;
    std::vector<int> mult;
    for (const auto* p : b) {
        auto it = std::find(uniq.begin(), uniq.end(), p);
        if (it == uniq.end()) {
            uniq.push_back(p);
            mult.push_back(1);
        } else {
            ++mult[it - uniq.begin()];
        }
    }
    const int u = int(uniq.size());
    std::vector<std::vector<int>> mono;
    std::vector<int> cur;
    monomials(u, n + 1, cur, mono);
    const int N = int(mono.size());
    const int target = int(std::find(mono.begin(), mono.end(), mult) - mono.begin());

    const double levels[4] = {0.5, 1.0, 1.5, 2.0};
    std::vector<std::vector<double>> grid;
    int total = 1;
    for (int k = 0; k < u; ++k) total *= 4;
    for (int g = 0; g < total; ++g) {
        std::vector<double> lam(u);
        int r = g;
        for (int k = 0; k < u; ++k) {
            lam[k] = levels[r % 4];
            r /= 4;
        }
        grid.push_back(lam);
    }
    auto row_of = [&](const std::vector<double>& lam) {
        Eigen::RowVectorXd row(N);
        for (int c = 0; c < N; ++c) {
            double v = 1;
            for (int k = 0; k < u; ++k) v *= std::pow(lam[k], mono[c][k]);
            row(c) = v;
        }
        return row;
    };
    // greedy: keep rows that raise the rank, then two redundant rows
    std::vector<int> chosen;
    Eigen::MatrixXd A(0, N);
    std::vector<char> used(grid.size(), 0);
    for (std::size_t g = 0; g < grid.size() && int(chosen.size()) < N; ++g) {
        Eigen::MatrixXd T(A.rows() + 1, N);
        T << A, row_of(grid[g]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
        lu.setThreshold(1e-10);
        if (lu.rank() == T.rows()) {
            A = T;
            chosen.push_back(int(g));
            used[g] = 1;
        }
    }
    if (int(chosen.size()) < N) throw Error(ErrorKind::numeric, "polyfit grid does not determine the polynomial");
    for (std::size_t g = 0, extra = 0; g < grid.size() && extra < 2; ++g)
        if (!used[g]) {
            Eigen::MatrixXd T(A.rows() + 1, N);
            T << A, row_of(grid[g]);
            A = T;
            chosen.push_back(int(g));
            ++extra;
        }
    Eigen::VectorXd rhs(A.rows());
    for (int r = 0; r < A.rows(); ++r) {
        CapillaryBody K = minkowski_combine(uniq, grid[chosen[r]]);
        rhs(r) = volume(K);
    }
    Eigen::VectorXd coef = A.colPivHouseholderQr().solve(rhs);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    MixedVolumeResult res;
    res.route = MvRoute::polyfit;
    res.mesh_level = M.cfg.mesh_level;
    double scale = factorial(n + 1);
    for (int m : mult) scale /= factorial(m);
    res.value = coef(target) / scale;
    res.error_estimate = (A * coef - rhs).norm() / std::max(rhs.norm(), 1e-300) * std::abs(res.value);
    res.condition = svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    return res;
}

}  // namespace

MixedVolumeResult mixed_volume(const BodyList& b, MvRoute route) {
    if (b.empty()) throw Error(ErrorKind::invalid_input, "no bodies");
    check_same_mesh(b, std::size_t(b.front()->mesh().n + 1));
    if (route == MvRoute::polyfit) return polyfit_route(b);
    MixedVolumeResult r;
    r.route = route;
    r.mesh_level = b.front()->mesh().cfg.mesh_level;
    r.value = integral_route(b, route);
    MvRoute other = route == MvRoute::euclidean ? MvRoute::anisotropic : MvRoute::euclidean;
    r.error_estimate = std::abs(r.value - integral_route(b, other));
    return r;
}

double mixed_volume_value(const BodyList& b, MvRoute route) {
    if (b.empty()) throw Error(ErrorKind::invalid_input, "no bodies");
    check_same_mesh(b, std::size_t(b.front()->mesh().n + 1));
    if (route == MvRoute::polyfit) return polyfit_route(b).value;
    return integral_route(b, route);
}

SymmetryResult symmetry_check(const BodyList& b, std::uint64_t seed, double tol_swap, double tol_trailing) {
    check_same_mesh(b, b.empty() ? 1 : std::size_t(b.front()->mesh().n + 1));
    SymmetryResult r;
    double v = mixed_volume_value(b);
    BodyList sw = b;
    std::swap(sw[0], sw[1]);
    r.swap = make_identity("symmetry_swap", mixed_volume_value(sw), v, tol_swap);
    // Fisher-Yates on positions 1..n with the portable generator
    BodyList tr = b;
    Rng rng(seed);
    for (std::size_t k = tr.size() - 1; k > 1; --k) {
        std::size_t j = 1 + std::size_t(rng.uniform() * double(k));
        std::swap(tr[k], tr[j]);
    }
    if (tr.size() > 2 && tr == b) std::swap(tr[1], tr[2]);
    r.trailing = make_identity("symmetry_trailing", mixed_volume_value(tr), v, tol_trailing);
    return r;
}

double quermassintegral(const CapillaryBody& body, int k) {
    const CapMesh& M = body.mesh();
    const int n = M.n;
    if (k < -1 || k > n) throw Error(ErrorKind::invalid_input, "quermassintegral index out of range");
    if (k == -1) return volume(body);
    const double w0 = M.omega0();
    return qsum(M,
                [&](int i) {
                    const CapNode& nd = M.nodes[i];
                    const BodyNode& b = body.node(i);
                    double Hk = curvatures_from_tau(b.tau).H[k];
                    return Hk * (nd.F + w0 * nd.x.dot(M.EF)) * b.W.determinant();
                }) /
           (n + 1);
}

double quermassintegral_mixed(const CapillaryBody& body, const CapillaryBody& cap, int k) {
    const int n = body.mesh().n;
    if (k < -1 || k > n) throw Error(ErrorKind::invalid_input, "quermassintegral index out of range");
    BodyList l;
    for (int j = 0; j < n - k; ++j) l.push_back(&body);
    for (int j = 0; j < k + 1; ++j) l.push_back(&cap);
    return mixed_volume_value(l, MvRoute::euclidean);
}

double anisotropic_area(const CapillaryBody& body) {
    const CapMesh& M = body.mesh();
    return qsum(M, [&](int i) { return M.nodes[i].F * body.node(i).W.determinant(); });
}

double flat_face_measure(const CapillaryBody& body) {
    const CapMesh& M = body.mesh();
    const auto& bd = M.boundary;
    if (M.n == 1) return (body.node(bd[1]).X - body.node(bd[0]).X).norm();
    double a = 0;
    for (std::size_t k = 0; k < bd.size(); ++k) {
        const Vec& p = body.node(bd[k]).X;
        const Vec& q = body.node(bd[(k + 1) % bd.size()]).X;
        a += p(0) * q(1) - p(1) * q(0);
    }
    return 0.5 * std::abs(a);
}

double quermass_one_boundary_form(const CapillaryBody& body) {
    const CapMesh& M = body.mesh();
    return (anisotropic_area(body) + M.omega0() * flat_face_measure(body)) / (M.n + 1);
}

std::pair<double, double> minkowski_formula_terms(const CapillaryBody& body, int k) {
    const CapMesh& M = body.mesh();
    const int n = M.n;
    if (k < 0 || k > n - 1) throw Error(ErrorKind::invalid_input, "Minkowski formula index out of range");
    const double w0 = M.omega0();
    std::vector<double> a(M.num_quadrature), b(M.num_quadrature);
    for (int i = 0; i < M.num_quadrature; ++i) {
        const CapNode& nd = M.nodes[i];
        const BodyNode& bn = body.node(i);
        auto c = curvatures_from_tau(bn.tau);
        const double dmu = nd.w * nd.F * bn.W.determinant();
        a[i] = c.H[k] * (1 + w0 * nd.x.dot(M.EF) / nd.F) * dmu;
        b[i] = c.H[k + 1] * bn.shat * dmu;
    }
    return {pairwise_sum(a), pairwise_sum(b)};
}

double minkowski_formula_residual(const CapillaryBody& body, int k) {
    auto [a, b] = minkowski_formula_terms(body, k);
    return a - b;
}

SteinerResult steiner_check(const CapillaryBody& body, const CapillaryBody& cap, const std::vector<double>& t,
                            double tol) {
    const int n = body.mesh().n;
    if (int(t.size()) < n + 2) throw Error(ErrorKind::invalid_input, "t grid needs at least n+2 values");
    for (double x : t)
        if (!(x > 0)) throw Error(ErrorKind::invalid_input, "t grid values must be positive");
    Eigen::MatrixXd A(t.size(), n + 2);
    Eigen::VectorXd y(t.size());
    for (std::size_t r = 0; r < t.size(); ++r) {
        for (int k = 0; k <= n + 1; ++k) A(r, k) = std::pow(t[r], k);
        y(r) = volume(minkowski_combine({&body, &cap}, {1.0, t[r]}));
    }
    SteinerResult s;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    s.condition = svd.singularValues()(0) / svd.singularValues()(n + 1);
    s.ill_conditioned = s.condition > 1e10;
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    int worst = 0;
    for (int k = 0; k <= n + 1; ++k) {
        s.fitted.push_back(c(k));
        s.expected.push_back(binom(n + 1, k) * quermassintegral(body, k - 1));
        double e = std::abs(s.fitted[k] - s.expected[k]) / std::max(std::abs(s.expected[k]), 1e-300);
        if (e > s.max_rel_error) {
            s.max_rel_error = e;
            worst = k;
        }
    }
    s.report = make_identity("steiner", s.fitted[worst], s.expected[worst], tol);
    return s;
}

DivergenceResult divergence_identity_check(const BodyList& bodies, double step) {
    if (bodies.empty()) throw Error(ErrorKind::invalid_input, "no bodies");
    const CapMesh& M = bodies.front()->mesh();
    check_same_mesh(bodies, std::size_t(M.n));
    const NormModel& m = M.norm();
    if (m.family() == NormFamily::perturbed)
        throw Error(ErrorKind::invalid_input, "divergence check is implemented for norms with vanishing Q only");
    const int n = M.n;
    const double h = step > 0 ? step : 0.25 * M.h;

    // ambient form of the Q-gradient field at a direction x
    auto Tfield = [&](const Vec& x) {
        CapNode nd = make_node(m, M.omega0(), M.EF, x, NodeTag::interior, 0.0);
        std::vector<Mat> taus;
        for (int j = 1; j < n; ++j) {
            Mat H;
            bodies[j]->support().eval_with(nd.F, nd.psi, nd.D2F, x, nullptr, nullptr, &H);
            Mat W = nd.B.transpose() * H * nd.B;
            Mat T = tau_from_W(nd, 0.5 * (W + W.transpose()));
            taus.push_back(0.5 * (T + T.transpose()));
        }
        const double* rest[6];
        for (int j = 0; j < n - 1; ++j) rest[j] = taus[j].data();
        Mat Qg(n, n);
        md_grad_raw(n, rest, Qg.data());
        return Mat(nd.frame * Qg * nd.frame.transpose());
    };

    DivergenceResult out;
    std::vector<double> res(M.num_quadrature, 0.0), sc(M.num_quadrature, 0.0);
    for (int i = 0; i < M.num_quadrature; ++i) {
        const CapNode& nd = M.nodes[i];
        const BodyNode& b1 = bodies[0]->node(i);
        const Mat P = nd.B * nd.Ainv * nd.B.transpose();  // xi-direction to x-direction
        Vec dshat = b1.X / nd.F - b1.s * nd.psi / (nd.F * nd.F);
        Vec div = Vec::Zero(n), grad = Vec::Zero(n);
        double dmag = 0;
        for (int k = 0; k < n; ++k) {
            Vec v = P * nd.frame.col(k);
            const double len = v.norm();
            const Vec u = v / len;
            Mat DT = len *
                     (-Tfield(geodesic(nd.x, u, 2 * h)) + 8 * Tfield(geodesic(nd.x, u, h)) -
                      8 * Tfield(geodesic(nd.x, u, -h)) + Tfield(geodesic(nd.x, u, -2 * h))) /
                     (12 * h);
            Vec col = DT * (nd.G * nd.frame.col(k));
            double cn = 0;
            for (int l = 0; l < n; ++l) {
                double c = nd.frame.col(l).dot(nd.G * col);
                div(l) += c;
                cn += c * c;
            }
            dmag += std::sqrt(cn);
            grad(k) = dshat.dot(v);
        }
        res[i] = std::abs(grad.dot(div));
        // size of the individual divergence terms, so the ratio measures cancellation
        sc[i] = grad.norm() * (dmag + Tfield(nd.x).norm());
        ++out.evaluated;
    }
    out.scale = *std::max_element(sc.begin(), sc.end());
    out.max_residual = *std::max_element(res.begin(), res.end()) / std::max(out.scale, 1e-300);
    return out;
}

OperatorA::OperatorA(BodyList r) : rest(std::move(r)) {
    if (rest.empty()) throw Error(ErrorKind::invalid_input, "operator A needs f_2..f_n (n >= 2)");
    const CapMesh& M = rest.front()->mesh();
    const int n = M.n;
    check_same_mesh(rest, std::size_t(n - 1));
    denom_.resize(M.num_quadrature);
    omega_.resize(M.num_quadrature);
    for (int i = 0; i < M.num_quadrature; ++i) {
        std::vector<const Mat*> mats{&rest[0]->node(i).tau};
        for (const auto* b : rest) mats.push_back(&b->node(i).tau);
        double q = md_of(n, mats);
        if (!(q > 0)) throw Error(ErrorKind::convexity_violation, "operator A denominator is not positive");
        denom_[i] = q;
        const CapNode& nd = M.nodes[i];
        omega_[i] = nd.w * q / ((n + 1) * rest[0]->node(i).shat) * nd.F * nd.detA;
    }
}

std::vector<double> OperatorA::apply(const CapillaryBody& f) const {
    const CapMesh& M = rest.front()->mesh();
    if (f.mesh_ptr() != rest.front()->mesh_ptr()) throw Error(ErrorKind::invalid_input, "mesh mismatch");
    std::vector<double> out(M.num_quadrature);
    for (int i = 0; i < M.num_quadrature; ++i) {
        std::vector<const Mat*> mats{&f.node(i).tau};
        for (const auto* b : rest) mats.push_back(&b->node(i).tau);
        out[i] = rest[0]->node(i).shat * md_of(M.n, mats) / denom_[i];
    }
    return out;
}

std::vector<double> OperatorA::values(const CapillaryBody& f) const {
    std::vector<double> v(omega_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.node(int(i)).shat;
    return v;
}

double OperatorA::inner(const std::vector<double>& a, const std::vector<double>& b) const {
    std::vector<double> t(omega_.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = omega_[i] * a[i] * b[i];
    return pairwise_sum(t);
}

InequalityReport operator_A_energy_check(const CapillaryBody& g, const OperatorA& op, double tol) {
    auto Ag = op.apply(g);
    auto gv = op.values(g);
    return make_inequality("operator_A_energy", op.inner(Ag, Ag), op.inner(gv, Ag), tol);
}

InequalityReport operator_A_selfadjoint_check(const CapillaryBody& f, const CapillaryBody& g, const OperatorA& op,
                                              double tol) {
    return make_identity("operator_A_selfadjoint", op.inner(op.values(f), op.apply(g)),
                         op.inner(op.values(g), op.apply(f)), tol);
}

double operator_A_eigen_residual(const CapillaryBody& f, const OperatorA& op) {
    auto Af = op.apply(f);
    auto fv = op.values(f);
    double worst = 0, scale = 0;
    for (std::size_t i = 0; i < fv.size(); ++i) {
        worst = std::max(worst, std::abs(Af[i] - fv[i]));
        scale = std::max(scale, std::abs(fv[i]));
    }
    return worst / std::max(scale, 1e-300);
}

InequalityReport af_inequality_check(const BodyList& b, double tol, bool equality_expected) {
    if (b.size() < 2) throw Error(ErrorKind::invalid_input, "need n+1 bodies");
    check_same_mesh(b, std::size_t(b.front()->mesh().n + 1));
    BodyList l12 = b, l11 = b, l22 = b;
    l11[1] = b[0];
    l22[0] = b[1];
    double v12 = mixed_volume_value(l12), v11 = mixed_volume_value(l11), v22 = mixed_volume_value(l22);
    return make_inequality("alexandrov_fenchel", v12 * v12, v11 * v22, tol, equality_expected);
}

InequalityReport quermassintegral_chain_check(const CapillaryBody& body, int k, int l, double tol,
                                              bool equality_expected) {
    const int n = body.mesh().n;
    if (!(0 <= l && l < k && k <= n)) throw Error(ErrorKind::invalid_input, "chain needs 0 <= l < k <= n");
    const double cap = quermassintegral(body, n);
    const double vk = quermassintegral(body, k - 1), vl = quermassintegral(body, l - 1);
    return make_inequality("quermass_chain_" + std::to_string(k) + "_" + std::to_string(l),
                           std::pow(vk / cap, 1.0 / (n + 1 - k)), std::pow(vl / cap, 1.0 / (n + 1 - l)), tol,
                           equality_expected);
}

double chain_mixed_volume(const CapillaryBody& K0, const CapillaryBody& K1, const BodyList& trailing, int m,
                          int i) {
    BodyList l;
    for (int c = 0; c < m - i; ++c) l.push_back(&K0);
    for (int c = 0; c < i; ++c) l.push_back(&K1);
    for (const auto* t : trailing) l.push_back(t);
    return mixed_volume_value(l);
}

InequalityReport generalized_chain_check(const CapillaryBody& K0, const CapillaryBody& K1, const BodyList& trailing,
                                         int m, int i, int j, int k, double tol, bool equality_expected) {
    const int n = K0.mesh().n;
    if (!(0 <= i && i < j && j < k && k <= m && m <= n + 1))
        throw Error(ErrorKind::invalid_input, "generalized chain needs 0 <= i < j < k <= m <= n+1");
    if (int(trailing.size()) != n + 1 - m)
        throw Error(ErrorKind::invalid_input, "generalized chain needs n+1-m trailing bodies");
    double vi = chain_mixed_volume(K0, K1, trailing, m, i);
    double vj = chain_mixed_volume(K0, K1, trailing, m, j);
    double vk = chain_mixed_volume(K0, K1, trailing, m, k);
    std::string name = "generalized_chain_m" + std::to_string(m) + "_" + std::to_string(i) + std::to_string(j) +
                       std::to_string(k);
    return make_inequality(name, std::pow(vj, k - i), std::pow(vi, k - j) * std::pow(vk, j - i), tol,
                           equality_expected);
}

std::vector<ConvergenceRow> convergence_study(int lo, int hi,
                                              const std::function<std::pair<double, double>(int)>& eval) {
    std::vector<ConvergenceRow> rows;
    for (int L = lo; L <= hi; ++L) {
        auto [v, r] = eval(L);
        ConvergenceRow row{L, v, r, 0.0};
        if (!rows.empty()) row.ratio = std::abs(r) > 0 ? std::abs(rows.back().residual) / std::abs(r) : 0.0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace capaf
