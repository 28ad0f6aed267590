#pragma once

// Classification of constraint operators by superalgebra closure, and the
// projector constructions onto the physical subspace: group averaging over a
// compact generated flow, kernel extraction, and the odd-pair construction
// E = X^-1 chi chi^+ with X = {chi, chi^+}.

#include "cfq/fock.hpp"

#include <string>
#include <vector>

namespace cfq::constraints {

using fock::complexd;
using fock::FockOperator;
using fock::Matrix;

// Residual below which a bracket counts as closing into the constraint span.
inline constexpr double closure_tolerance = 1e-10;
// Projector self-tests (idempotency, hermiticity).
inline constexpr double certificate_tolerance = 1e-12;
// Allowed distance of a group-averaging generator spectrum from integers.
inline constexpr double integer_spectrum_tolerance = 1e-9;
// Relative singular-value cutoff for kernel extraction.
inline constexpr double kernel_threshold = 1e-9;

Matrix commutator(const Matrix& a, const Matrix& b);
Matrix anticommutator(const Matrix& a, const Matrix& b);

// One bracket tested against a span: residual after least squares, and the
// expansion coefficients g in  bracket = i * sum_k g_k * basis_k.
struct BracketCheck {
    std::string label;
    double residual = 0.0;
    std::vector<complexd> coefficients;
};

enum class ConstraintClass { first_class, second_class };

struct ClassificationReport {
    ConstraintClass verdict = ConstraintClass::first_class;
    // Worst residual among constraint-constraint brackets; decides the verdict.
    double worst_residual = 0.0;
    // Worst residual among brackets with the Hamiltonian (0 when absent).
    double worst_hamiltonian_residual = 0.0;
    bool hamiltonian_compatible = true;
    std::vector<BracketCheck> brackets;
};

// Tests closure of the graded bracket algebra:
//   [even, even] and {odd, odd} against the even span, [even, odd] against the
//   odd span, and likewise the brackets with an optional Hamiltonian.
// The odd list must contain every odd constraint, conjugates included.
ClassificationReport classify(const std::vector<FockOperator>& even_constraints,
                              const std::vector<FockOperator>& odd_constraints,
                              const FockOperator* hamiltonian = nullptr,
                              double tol = closure_tolerance);

struct ProjectorCertificate {
    double idempotency_defect = 0.0;
    double hermiticity_defect = 0.0;
    long long rank = 0;
};

// Validates E^2 = E and E = E^+ within tol; throws on violation.
ProjectorCertificate certify_projector(const FockOperator& e, double tol = certificate_tolerance);

// Projector onto the joint null eigenspace of commuting self-adjoint
// generators with integer spectrum, computed as a discrete phase average
// (1/K) sum_k exp(-i 2 pi k Phi / K) per generator.  Empty input gives 1.
FockOperator project_group_average(const std::vector<FockOperator>& phis);

// Orthogonal projector onto the intersection of the kernels, by SVD of the
// stacked constraint matrices.  Empty input gives 1.
FockOperator project_kernel(const std::vector<FockOperator>& constraints);

struct OddPairProjectors {
    FockOperator e_a;  // X^-1 chi chi^+
    FockOperator e_b;  // X^-1 chi^+ chi = 1 - e_a
    FockOperator x;    // {chi, chi^+}
};

// Requires X positive definite and [X, chi] = 0; both are checked.
OddPairProjectors project_odd_pair(const FockOperator& chi);

// Given odd constraints with vanishing mutual anticommutators and central
// pairwise {chi_a, chi_b^+} = W_ab * 1, returns rescaled combinations with
// canonical anticommutators {chi'_a, chi'_b^+} = delta_ab * 1.
std::vector<FockOperator> diagonalize_odd(const std::vector<FockOperator>& chis);

}  // namespace cfq::constraints
