#include "capaf/norm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace capaf {

const char* to_string(NormFamily f) {
    switch (f) {
        case NormFamily::isotropic: return "isotropic";
        case NormFamily::ellipsoid: return "ellipsoid";
        case NormFamily::perturbed: return "perturbed";
    }
    return "?";
}

namespace {

void legendre(int l, double t, double& p, double& dp, double& ddp) {
    // P, P', P'' by the three-term recurrences
    double p0 = 1, p1 = t, d0 = 0, d1 = 1, e0 = 0, e1 = 0;
    if (l == 0) { p = 1; dp = 0; ddp = 0; return; }
    for (int k = 1; k < l; ++k) {
        double p2 = ((2 * k + 1) * t * p1 - k * p0) / (k + 1);
        double d2 = d0 + (2 * k + 1) * p1;
        double e2 = e0 + (2 * k + 1) * d1;
        p0 = p1; p1 = p2;
        d0 = d1; d1 = d2;
        e0 = e1; e1 = e2;
    }
    p = p1; dp = d1; ddp = e1;
}

void check_nonzero(const Vec& x) {
    if (!(x.norm() > 0.0) || !x.allFinite())
        throw Error(ErrorKind::invalid_input, "norm evaluated at the zero vector");
}

}  // namespace

void ZonalTerm::eval(const Vec& x, double* f, Vec* grad, Mat* hess) const {
    const int d = int(x.size());
    const double r = x.norm();
    const Vec u = x / r;
    const double t = std::clamp(u.dot(center), -1.0, 1.0);
    double psi = 0, dpsi = 0, ddpsi = 0;
    if (type == TermType::bump) {
        const double k = 1.0 - std::cos(width);
        const double q = (t - std::cos(width)) / k;
        if (q > 0) {
            psi = std::pow(q, power);
            dpsi = power * std::pow(q, power - 1) / k;
            ddpsi = power * (power - 1) * std::pow(q, power - 2) / (k * k);
        }
    } else {
        legendre(int(std::lround(width)), t, psi, dpsi, ddpsi);
    }
    const double a = amplitude;
    if (f) *f = a * r * psi;
    if (!grad && !hess) return;
    const Vec w = center - t * u;
    if (grad) *grad = a * (psi * u + dpsi * w);
    if (hess) {
        Mat P = Mat::Identity(d, d) - u * u.transpose();
        *hess = a * ((psi - t * dpsi) * P + ddpsi * w * w.transpose()) / r;
    }
}

double ZonalTerm::value(const Vec& x) const {
    double f;
    eval(x, &f, nullptr, nullptr);
    return f;
}

NormModel NormModel::isotropic(int dim) {
    if (dim < 2 || dim > 3) throw Error(ErrorKind::invalid_input, "ambient dimension must be 2 or 3");
    NormModel m;
    m.family_ = NormFamily::isotropic;
    m.dim_ = dim;
    m.M_ = Mat::Identity(dim, dim);
    m.Minv_ = m.M_;
    return m;
}

NormModel NormModel::ellipsoid(const Mat& M) {
    const int d = int(M.rows());
    if (d < 2 || d > 3 || M.cols() != d) throw Error(ErrorKind::invalid_input, "ellipsoid matrix must be 2x2 or 3x3");
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * M.cwiseAbs().maxCoeff())
        throw Error(ErrorKind::invalid_input, "ellipsoid matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    if (es.eigenvalues().minCoeff() <= 0)
        throw Error(ErrorKind::model_invalid, "ellipsoid matrix not positive definite");
    NormModel m;
    m.family_ = NormFamily::ellipsoid;
    m.dim_ = d;
    m.M_ = M;
    m.Minv_ = M.inverse();
    return m;
}

NormModel NormModel::perturbed(const Mat& base_M, std::vector<PerturbTerm> terms, DerivMode mode,
                               double fd_step) {
    NormModel m = ellipsoid(base_M);
    m.family_ = NormFamily::perturbed;
    for (auto& t : terms) {
        if (t.center.size() != m.dim_) throw Error(ErrorKind::invalid_input, "perturbation center has wrong dimension");
        if (t.center.norm() == 0) throw Error(ErrorKind::invalid_input, "perturbation center is zero");
        t.center.normalize();
        if (t.type == TermType::bump && !(t.width > 0 && t.width < M_PI))
            throw Error(ErrorKind::invalid_input, "bump width must lie in (0, pi)");
        if (t.type == TermType::harmonic && (t.width < 0 || t.width > 12))
            throw Error(ErrorKind::invalid_input, "harmonic degree must lie in [0, 12]");
    }
    m.terms_ = std::move(terms);
    m.mode_ = mode;
    m.fd_step_ = fd_step;
    validate_norm(m);
    return m;
}

void NormModel::analytic_derivs(const Vec& x, double* f, Vec* g, Mat* h) const {
    check_nonzero(x);
    const Vec Mx = M_ * x;
    const double F0 = std::sqrt(x.dot(Mx));
    double val = F0;
    Vec gr;
    Mat he;
    if (g || h) gr = Mx / F0;
    if (h) he = M_ / F0 - Mx * Mx.transpose() / (F0 * F0 * F0);
    for (const auto& t : terms_) {
        double tf;
        Vec tg;
        Mat th;
        t.eval(x, &tf, (g || h) ? &tg : nullptr, h ? &th : nullptr);
        val += tf;
        if (g || h) gr += tg;
        if (h) he += th;
    }
    if (f) *f = val;
    if (g) *g = gr;
    if (h) *h = he;
}

double NormModel::F(const Vec& x) const {
    double f;
    analytic_derivs(x, &f, nullptr, nullptr);
    return f;
}

Vec NormModel::fd_gradient(const Vec& x, double h) const {
    const int d = dim_;
    const double hs = h * x.norm();
    Vec g(d);
    for (int j = 0; j < d; ++j) {
        Vec e = unit_axis(d, j);
        auto central = [&](double s) { return (F(x + s * e) - F(x - s * e)) / (2 * s); };
        double d1 = central(hs), d2 = central(hs / 2);
        g(j) = (4 * d2 - d1) / 3;
    }
    return g;
}

Mat NormModel::fd_hessian(const Vec& x, double h) const {
    const int d = dim_;
    const double hs = h * x.norm();
    const double f0 = F(x);
    Mat H(d, d);
    for (int i = 0; i < d; ++i) {
        Vec ei = unit_axis(d, i);
        auto diag = [&](double s) { return (F(x + s * ei) - 2 * f0 + F(x - s * ei)) / (s * s); };
        H(i, i) = (4 * diag(hs / 2) - diag(hs)) / 3;
        for (int j = i + 1; j < d; ++j) {
            Vec ej = unit_axis(d, j);
            auto mixed = [&](double s) {
                return (F(x + s * ei + s * ej) - F(x + s * ei - s * ej) - F(x - s * ei + s * ej) +
                        F(x - s * ei - s * ej)) / (4 * s * s);
            };
            H(i, j) = H(j, i) = (4 * mixed(hs / 2) - mixed(hs)) / 3;
        }
    }
    return H;
}

void NormModel::derivs(const Vec& x, double* f, Vec* g, Mat* h) const {
    if (mode_ == DerivMode::analytic || family_ != NormFamily::perturbed) {
        analytic_derivs(x, f, g, h);
        return;
    }
    check_nonzero(x);
    if (f) *f = F(x);
    if (g) *g = fd_gradient(x, fd_step_);
    // second differences lose eps/h^2 to roundoff; the Hessian stencil runs
    // at a wider step so truncation and roundoff balance near 1e-9
    if (h) *h = fd_hessian(x, 20 * fd_step_);
}

Vec NormModel::DF(const Vec& x) const {
    Vec g;
    derivs(x, nullptr, &g, nullptr);
    return g;
}

Mat NormModel::D2F(const Vec& x) const {
    Mat h;
    derivs(x, nullptr, nullptr, &h);
    return h;
}

Mat NormModel::half_square_hessian(const Vec& x) const {
    double f;
    Vec g;
    Mat h;
    derivs(x, &f, &g, &h);
    return f * h + g * g.transpose();
}

std::string NormModel::describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(family_) << " dim=" << dim_;
    if (family_ != NormFamily::isotropic) {
        os << " M=[";
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j) os << (i || j ? "," : "") << M_(i, j);
        os << "]";
    }
    for (const auto& t : terms_) {
        os << " " << (t.type == TermType::bump ? "bump" : "harmonic") << "(";
        for (int i = 0; i < dim_; ++i) os << t.center(i) << ",";
        os << t.width << "," << t.amplitude << ")";
    }
    if (family_ == NormFamily::perturbed)
        os << " deriv=" << (mode_ == DerivMode::fd ? "fd" : "analytic") << " fd_step=" << fd_step_;
    return os.str();
}

double eval_norm(const NormModel& m, const Vec& x) {
    if (x.size() != m.dim()) throw Error(ErrorKind::invalid_input, "dimension mismatch");
    return m.F(x);
}

namespace {
Vec unit_input(const NormModel& m, const Vec& x) {
    if (x.size() != m.dim()) throw Error(ErrorKind::invalid_input, "dimension mismatch");
    double r = x.norm();
    if (!(r > 0)) throw Error(ErrorKind::invalid_input, "zero direction");
    if (std::abs(r - 1.0) > 1e-12) {
        if (m.strict_unit()) throw Error(ErrorKind::invalid_input, "direction is not a unit vector");
        return x / r;
    }
    return x;
}
}  // namespace

Vec cahn_hoffman(const NormModel& m, const Vec& x) { return m.DF(unit_input(m, x)); }

Mat anisotropy_matrix(const NormModel& m, const Vec& x, const Mat& basis) {
    Vec u = unit_input(m, x);
    Mat A = basis.transpose() * m.D2F(u) * basis;
    A = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    if (es.eigenvalues().minCoeff() <= 0) {
        std::ostringstream os;
        os.precision(17);
        os << "A_F not positive definite at x = (" << u.transpose() << "), min eigenvalue "
           << es.eigenvalues().minCoeff();
        throw Error(ErrorKind::model_invalid, os.str());
    }
    return A;
}

std::vector<Vec> icosphere_points(int level) { return make_icosphere(level).v; }

DualNormResult dual_norm_numeric(const NormModel& m, const Vec& xi, double tol, int max_iter) {
    const int d = m.dim();
    if (xi.size() != d) throw Error(ErrorKind::invalid_input, "dimension mismatch");
    const double xn = xi.norm();
    if (!(xn > 0)) throw Error(ErrorKind::invalid_input, "dual norm of the zero vector");

    auto phi = [&](const Vec& x) { return x.dot(xi) / m.F(x); };

    std::vector<Vec> sample;
    if (d == 3) {
        sample = icosphere_points(1);
    } else {
        for (int k = 0; k < 40; ++k) {
            Vec p(2);
            p << std::cos(2 * M_PI * k / 40), std::sin(2 * M_PI * k / 40);
            sample.push_back(p);
        }
    }
    std::vector<int> idx(sample.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<double> score(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) score[i] = phi(sample[i]);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return score[a] > score[b]; });
    const int starts = std::min<int>(20, int(idx.size()));

    DualNormResult best;
    best.value = -1e300;
    best.residual = 1e300;
    for (int s = 0; s < starts; ++s) {
        Vec x = sample[idx[s]];
        double val = phi(x), res = 1e300;
        int it = 0;
        for (; it < max_iter; ++it) {
            double f;
            Vec g;
            Mat h;
            m.derivs(x, &f, &g, &h);
            const double N = x.dot(xi);
            Vec dphi = xi / f - N * g / (f * f);
            Mat hphi = -(xi * g.transpose() + g * xi.transpose()) / (f * f) - N * h / (f * f) +
                       2 * N * g * g.transpose() / (f * f * f);
            Mat B = tangent_basis(x);
            Vec gr = B.transpose() * dphi;
            res = gr.norm() / xn;
            if (res <= tol) break;
            Mat Hr = B.transpose() * hphi * B;
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (Hr + Hr.transpose()));
            Vec step;
            if (es.eigenvalues().maxCoeff() < 0)
                step = -Hr.ldlt().solve(gr);
            else
                step = gr / std::max(1.0, std::abs(es.eigenvalues().minCoeff()));
            double lam = 1.0;
            bool moved = false;
            for (int k = 0; k < 40; ++k) {
                Vec xn2 = (x + lam * (B * step)).normalized();
                double v2 = phi(xn2);
                if (v2 >= val - 1e-15 * std::abs(val)) {
                    x = xn2;
                    val = v2;
                    moved = true;
                    break;
                }
                lam *= 0.5;
            }
            if (!moved) break;
        }
        if (val > best.value + 1e-14 * std::abs(val) ||
            (std::abs(val - best.value) <= 1e-14 * std::abs(val) && res < best.residual)) {
            best.value = val;
            best.maximizer = x;
            best.residual = res;
            best.iterations = it;
        }
    }
    if (!(best.residual <= tol))
        throw NumericError("dual norm ascent did not converge", best.value, best.residual);
    return best;
}

double dual_norm(const NormModel& m, const Vec& xi) {
    if (xi.size() != m.dim()) throw Error(ErrorKind::invalid_input, "dimension mismatch");
    if (!(xi.norm() > 0)) throw Error(ErrorKind::invalid_input, "dual norm of the zero vector");
    switch (m.family()) {
        case NormFamily::isotropic: return xi.norm();
        case NormFamily::ellipsoid: return std::sqrt(xi.dot(m.matrix().inverse() * xi));
        case NormFamily::perturbed: return dual_norm_numeric(m, xi).value;
    }
    return 0;
}

Mat metric_G(const NormModel& m, const Vec& xi) {
    if (xi.size() != m.dim()) throw Error(ErrorKind::invalid_input, "dimension mismatch");
    if (!(xi.norm() > 1e-12)) throw Error(ErrorKind::invalid_input, "metric evaluated near the origin");
    switch (m.family()) {
        case NormFamily::isotropic: return Mat::Identity(m.dim(), m.dim());
        case NormFamily::ellipsoid: return m.matrix().inverse();
        case NormFamily::perturbed: break;
    }
    // Legendre duality: Hessians of F^2/2 and F0^2/2 are inverse at paired points
    auto r = dual_norm_numeric(m, xi);
    return m.half_square_hessian(r.maximizer).inverse();
}

std::vector<Mat> q_tensor(const NormModel& m, const Vec& xi) {
    const int d = m.dim();
    if (xi.size() != d) throw Error(ErrorKind::invalid_input, "dimension mismatch");
    if (!(xi.norm() > 1e-12)) throw Error(ErrorKind::invalid_input, "Q evaluated near the origin");
    std::vector<Mat> Q(d, Mat::Zero(d, d));
    if (m.family() != NormFamily::perturbed) return Q;

    auto r = dual_norm_numeric(m, xi);
    const Vec xh = r.maximizer;
    auto Han = [&](const Vec& x) {
        double f;
        Vec g;
        Mat h;
        m.analytic_derivs(x, &f, &g, &h);
        return Mat(f * h + g * g.transpose());
    };
    const Mat G = Han(xh).inverse();
    const double ynorm = r.value / m.F(xh);  // |y| with y = D(F0^2/2)(xi)
    const double h = 1e-4;
    std::vector<Mat> T(d);
    for (int c = 0; c < d; ++c) {
        Vec e = unit_axis(d, c);
        T[c] = (Han(xh + h * e) - Han(xh - h * e)) / (2 * h) / ynorm;
    }
    // Q_abc = - G_aa' G_bb' G_cc' T_a'b'c'
    for (int c = 0; c < d; ++c) {
        Mat acc = Mat::Zero(d, d);
        for (int cp = 0; cp < d; ++cp) acc += G(cp, c) * T[cp];
        Q[c] = -G * acc * G;
    }
    return Q;
}

double validate_norm(const NormModel& m) {
    std::vector<Vec> pts;
    if (m.dim() == 3) {
        pts = icosphere_points(5);
    } else {
        for (int k = 0; k < 2048; ++k) {
            Vec p(2);
            p << std::cos(2 * M_PI * (k + 0.5) / 2048), std::sin(2 * M_PI * (k + 0.5) / 2048);
            pts.push_back(p);
        }
    }
    double worst = 1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec& x = pts[i];
        double f = m.F(x);
        if (!(f > 0)) {
            std::ostringstream os;
            os << "norm not positive at validation node " << i;
            throw Error(ErrorKind::model_invalid, os.str());
        }
        Mat B = tangent_basis(x);
        Mat A = B.transpose() * m.D2F(x) * B;
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
        double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
        if (!(lo > 0)) {
            std::ostringstream os;
            os.precision(10);
            os << "A_F not positive definite at validation node " << i << " x = (" << x.transpose()
               << "), min eigenvalue " << lo << "; reduce the perturbation amplitude";
            throw Error(ErrorKind::model_invalid, os.str());
        }
        worst = std::max(worst, hi / lo);
    }
    return worst;
}

}  // namespace capaf
