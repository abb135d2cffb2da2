#include "capaf/mixdisc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace capaf {

namespace {

struct PermTable {
    int n = 0;
    std::vector<std::vector<int>> perms;
    std::vector<int> sign;
};

PermTable make_perms(int n) {
    PermTable t;
    t.n = n;
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
        int inv = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (p[i] > p[j]) ++inv;
        t.perms.push_back(p);
        t.sign.push_back(inv % 2 ? -1 : 1);
    } while (std::next_permutation(p.begin(), p.end()));
    return t;
}

const PermTable& perms(int n) {
    static const std::array<PermTable, 7> tables = [] {
        std::array<PermTable, 7> t;
        for (int k = 0; k < 7; ++k) t[k] = make_perms(k);
        return t;
    }();
    if (n < 0 || n > 6) throw Error(ErrorKind::invalid_input, "delta-sum route supports n <= 6");
    return tables[n];
}

double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// the generalized Kronecker delta sum, no symmetry assumed
double delta_sum(int n, const double* const* m) {
    const auto& P = perms(n);
    double total = 0.0;
    const std::size_t np = P.perms.size();
    for (std::size_t a = 0; a < np; ++a) {
        const auto& s = P.perms[a];
        for (std::size_t b = 0; b < np; ++b) {
            const auto& p = P.perms[b];
            double prod = P.sign[a] * P.sign[b];
            for (int k = 0; k < n && prod != 0.0; ++k) prod *= m[k][s[k] + n * p[k]];
            total += prod;
        }
    }
    return total / factorial(n);
}

double subset_route(const std::vector<Eigen::MatrixXd>& mats) {
    const int n = int(mats.size());
    double total = 0.0;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n, n);
        int cnt = 0;
        for (int k = 0; k < n; ++k)
            if (mask & (1u << k)) { S += mats[k]; ++cnt; }
        double sgn = ((n - cnt) % 2) ? -1.0 : 1.0;
        total += sgn * S.determinant();
    }
    return total / factorial(n);
}

void check_tuple(const SymMatrixTuple& t, bool need_symmetric) {
    const int n = t.n();
    if (n < 1) throw Error(ErrorKind::invalid_input, "empty matrix tuple");
    for (const auto& A : t.mats) {
        if (A.rows() != n || A.cols() != n)
            throw Error(ErrorKind::invalid_input, "tuple matrices must be n x n with n = tuple length");
        if (need_symmetric) {
            double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
            if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                throw Error(ErrorKind::invalid_input, "non-symmetric matrix in tuple");
        }
    }
}

double raw_from(const std::vector<Eigen::MatrixXd>& mats) {
    std::vector<const double*> p;
    for (const auto& A : mats) p.push_back(A.data());
    return delta_sum(int(mats.size()), p.data());
}

}  // namespace

double scaled_tolerance(double tol, double lhs, double rhs) {
    return tol * std::max({std::abs(lhs), std::abs(rhs), 1e-30});
}

InequalityReport make_inequality(std::string name, double lhs, double rhs, double tol,
                                 bool equality_expected) {
    InequalityReport r;
    r.name = std::move(name);
    r.lhs = lhs;
    r.rhs = rhs;
    r.gap = lhs - rhs;
    double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-30});
    r.relative_gap = r.gap / scale;
    r.tolerance = tol * scale;
    r.equality_expected = equality_expected;
    r.pass = equality_expected ? std::abs(r.gap) <= r.tolerance : r.gap >= -r.tolerance;
    return r;
}

InequalityReport make_identity(std::string name, double lhs, double rhs, double tol) {
    InequalityReport r = make_inequality(std::move(name), lhs, rhs, tol, true);
    r.is_identity = true;
    return r;
}

double md_raw(int n, const double* const* mats) { return delta_sum(n, mats); }

void md_grad_raw(int n, const double* const* rest, double* out) {
    const auto& P = perms(n);
    std::fill(out, out + n * n, 0.0);
    const std::size_t np = P.perms.size();
    for (std::size_t a = 0; a < np; ++a) {
        const auto& s = P.perms[a];
        for (std::size_t b = 0; b < np; ++b) {
            const auto& p = P.perms[b];
            double prod = P.sign[a] * P.sign[b];
            for (int k = 1; k < n; ++k) prod *= rest[k - 1][s[k] + n * p[k]];
            out[s[0] + n * p[0]] += prod;
        }
    }
    double f = factorial(n);
    for (int i = 0; i < n * n; ++i) out[i] /= f;
}

double mixed_discriminant(const SymMatrixTuple& t, MdRoute route) {
    check_tuple(t, true);
    if (route == MdRoute::subset_expansion) return subset_route(t.mats);
    return raw_from(t.mats);
}

Eigen::MatrixXd mixed_disc_gradient(const SymMatrixTuple& t) {
    check_tuple(t, true);
    const int n = t.n();
    std::vector<const double*> rest;
    for (int k = 1; k < n; ++k) rest.push_back(t.mats[k].data());
    Eigen::MatrixXd G(n, n);
    md_grad_raw(n, rest.data(), G.data());
    return G;
}

InequalityReport md_transform_check(const SymMatrixTuple& t, const Eigen::MatrixXd& B, double tol) {
    check_tuple(t, true);
    const int n = t.n();
    if (B.rows() != n || B.cols() != n) throw Error(ErrorKind::invalid_input, "B has wrong shape");
    double detB = B.determinant();
    double scale = std::pow(B.cwiseAbs().maxCoeff(), n);
    if (std::abs(detB) <= 1e-14 * std::max(scale, 1e-300))
        throw Error(ErrorKind::invalid_input, "singular B in transform check");
    std::vector<Eigen::MatrixXd> ab;
    for (const auto& A : t.mats) ab.push_back(A * B);
    double lhs = raw_from(ab);
    double rhs = raw_from(t.mats) * detB;
    return make_identity("md_transform", lhs, rhs, tol);
}

InequalityReport alexandrov_md_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     const std::vector<Eigen::MatrixXd>& rest, double tol) {
    SymMatrixTuple ab{{A, B}}, aa{{A, A}}, bb{{B, B}};
    for (const auto& R : rest) {
        ab.mats.push_back(R);
        aa.mats.push_back(R);
        bb.mats.push_back(R);
    }
    double qab = mixed_discriminant(ab);
    double qaa = mixed_discriminant(aa);
    double qbb = mixed_discriminant(bb);
    // equality iff A is a multiple of B
    double c = (A.array() * B.array()).sum() / std::max((B.array() * B.array()).sum(), 1e-300);
    bool proportional = (A - c * B).norm() <= 1e-12 * std::max(A.norm(), 1e-300);
    auto r = make_inequality("alexandrov_md", qab * qab, qaa * qbb, tol, proportional);
    return r;
}

std::string dump_matrices(const std::vector<Eigen::MatrixXd>& mats) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < mats.size(); ++k) {
        os << "# A_" << (k + 1) << "\n" << mats[k] << "\n";
    }
    return os.str();
}

}  // namespace capaf
