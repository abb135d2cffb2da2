#pragma once

#include "capaf/common.hpp"

#include <string>
#include <vector>

namespace capaf {

// n symmetric n x n matrices; mats.size() == n
struct SymMatrixTuple {
    std::vector<Eigen::MatrixXd> mats;
    int n() const { return int(mats.size()); }
};

struct InequalityReport {
    std::string name;
    double lhs = 0, rhs = 0, gap = 0, relative_gap = 0, tolerance = 0;
    bool pass = false;
    bool equality_expected = false;
    bool is_identity = false;  // identities pass on |gap|, inequalities on gap
};

// tol * max(|lhs|, |rhs|, 1e-30)
double scaled_tolerance(double tol, double lhs, double rhs);
InequalityReport make_inequality(std::string name, double lhs, double rhs, double tol,
                                 bool equality_expected = false);
InequalityReport make_identity(std::string name, double lhs, double rhs, double tol);

enum class MdRoute { delta_sum, subset_expansion };

// throws invalid_input on shape mismatch or asymmetry above 1e-12 (relative)
double mixed_discriminant(const SymMatrixTuple& t, MdRoute route = MdRoute::delta_sum);
Eigen::MatrixXd mixed_disc_gradient(const SymMatrixTuple& t);

// Hot-path kernels: no validation, column-major n x n data, n <= 3.
double md_raw(int n, const double* const* mats);
void md_grad_raw(int n, const double* const* rest, double* out);  // rest = A_2..A_n

// Q(A_1 B, ..., A_n B) vs Q(A_1..A_n) det B
InequalityReport md_transform_check(const SymMatrixTuple& t, const Eigen::MatrixXd& B,
                                    double tol = 1e-10);
// Q(A,B,rest)^2 >= Q(A,A,rest) Q(B,B,rest)
InequalityReport alexandrov_md_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                     const std::vector<Eigen::MatrixXd>& rest,
                                     double tol = 1e-12);

// plain-text dump used when a check fails
std::string dump_matrices(const std::vector<Eigen::MatrixXd>& mats);

}  // namespace capaf
