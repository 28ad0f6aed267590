#include "cfq/constraints.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfq::constraints {

namespace {

const complexd kI{0.0, 1.0};

Eigen::VectorXcd flatten(const Matrix& m) {
    return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

void check_shapes(const std::vector<FockOperator>& ops, const FockOperator* h) {
    const fock::HilbertSpec* spec = nullptr;
    for (const auto& op : ops) {
        if (!spec) spec = &op.spec;
        else if (!(*spec == op.spec)) throw std::invalid_argument("constraints live on different spaces");
    }
    if (h && spec && !(h->spec == *spec))
        throw std::invalid_argument("Hamiltonian lives on a different space");
}

// Least squares of `bracket` against { i * basis_k }; fills coefficients g_k
// and returns the max-entry residual.
BracketCheck fit_bracket(std::string label, const Matrix& bracket,
                         const std::vector<const Matrix*>& basis) {
    BracketCheck out;
    out.label = std::move(label);
    if (basis.empty()) {
        out.residual = bracket.size() ? bracket.cwiseAbs().maxCoeff() : 0.0;
        return out;
    }
    Eigen::MatrixXcd a(bracket.size(), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k)
        a.col(static_cast<Eigen::Index>(k)) = kI * flatten(*basis[k]);
    const Eigen::VectorXcd rhs = flatten(bracket);
    const Eigen::VectorXcd g = a.completeOrthogonalDecomposition().solve(rhs);
    const Eigen::VectorXcd resid = rhs - a * g;
    out.residual = resid.size() ? resid.cwiseAbs().maxCoeff() : 0.0;
    out.coefficients.assign(g.data(), g.data() + g.size());
    return out;
}

void require_self_adjoint(const Matrix& m, const std::string& what) {
    if (fock::max_abs_diff(m, m.adjoint()) > certificate_tolerance)
        throw std::invalid_argument(what + " is not self-adjoint");
}

}  // namespace

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }
Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

ClassificationReport classify(const std::vector<FockOperator>& even_constraints,
                              const std::vector<FockOperator>& odd_constraints,
                              const FockOperator* hamiltonian, double tol) {
    std::vector<FockOperator> all = even_constraints;
    all.insert(all.end(), odd_constraints.begin(), odd_constraints.end());
    check_shapes(all, hamiltonian);
    for (const auto& op : even_constraints)
        if (op.declared_parity == fock::OpParity::odd)
            throw std::invalid_argument("odd operator passed in the even list");
    for (const auto& op : odd_constraints)
        if (op.declared_parity != fock::OpParity::odd)
            throw std::invalid_argument("even operator passed in the odd list");

    std::vector<const Matrix*> even_span, odd_span;
    for (const auto& op : even_constraints) even_span.push_back(&op.matrix);
    for (const auto& op : odd_constraints) odd_span.push_back(&op.matrix);

    ClassificationReport report;
    auto record = [&report](BracketCheck check, double& worst) {
        worst = std::max(worst, check.residual);
        report.brackets.push_back(std::move(check));
    };

    const auto ne = even_constraints.size();
    const auto no = odd_constraints.size();
    for (std::size_t a = 0; a < ne; ++a)
        for (std::size_t b = a + 1; b < ne; ++b)
            record(fit_bracket("[even" + std::to_string(a + 1) + ",even" + std::to_string(b + 1) + "]",
                               commutator(even_constraints[a].matrix, even_constraints[b].matrix),
                               even_span),
                   report.worst_residual);
    for (std::size_t a = 0; a < ne; ++a)
        for (std::size_t b = 0; b < no; ++b)
            record(fit_bracket("[even" + std::to_string(a + 1) + ",odd" + std::to_string(b + 1) + "]",
                               commutator(even_constraints[a].matrix, odd_constraints[b].matrix),
                               odd_span),
                   report.worst_residual);
    for (std::size_t a = 0; a < no; ++a)
        for (std::size_t b = a; b < no; ++b)
            record(fit_bracket("{odd" + std::to_string(a + 1) + ",odd" + std::to_string(b + 1) + "}",
                               anticommutator(odd_constraints[a].matrix, odd_constraints[b].matrix),
                               even_span),
                   report.worst_residual);

    if (hamiltonian) {
        for (std::size_t a = 0; a < ne; ++a)
            record(fit_bracket("[even" + std::to_string(a + 1) + ",H]",
                               commutator(even_constraints[a].matrix, hamiltonian->matrix), even_span),
                   report.worst_hamiltonian_residual);
        for (std::size_t a = 0; a < no; ++a)
            record(fit_bracket("[odd" + std::to_string(a + 1) + ",H]",
                               commutator(odd_constraints[a].matrix, hamiltonian->matrix), odd_span),
                   report.worst_hamiltonian_residual);
    }

    report.verdict = report.worst_residual <= tol ? ConstraintClass::first_class
                                                  : ConstraintClass::second_class;
    report.hamiltonian_compatible = report.worst_hamiltonian_residual <= tol;
    return report;
}

ProjectorCertificate certify_projector(const FockOperator& e, double tol) {
    ProjectorCertificate cert;
    cert.idempotency_defect = fock::max_abs_diff(e.matrix * e.matrix, e.matrix);
    cert.hermiticity_defect = fock::max_abs_diff(e.matrix, e.matrix.adjoint());
    const double tr = e.matrix.trace().real();
    cert.rank = std::llround(tr);
    if (cert.idempotency_defect > tol)
        throw std::runtime_error("projector is not idempotent (defect " +
                                 std::to_string(cert.idempotency_defect) + ")");
    if (cert.hermiticity_defect > tol)
        throw std::runtime_error("projector is not self-adjoint (defect " +
                                 std::to_string(cert.hermiticity_defect) + ")");
    if (std::abs(tr - static_cast<double>(cert.rank)) > 1e-9)
        throw std::runtime_error("projector trace is not an integer rank");
    return cert;
}

FockOperator project_group_average(const std::vector<FockOperator>& phis) {
    check_shapes(phis, nullptr);
    if (phis.empty()) throw std::invalid_argument("no generators to average over");

    const fock::HilbertSpec spec = phis.front().spec;
    const long long d = spec.dimension();
    for (std::size_t a = 0; a < phis.size(); ++a) {
        require_self_adjoint(phis[a].matrix, "group averaging generator");
        for (std::size_t b = a + 1; b < phis.size(); ++b) {
            const double nc = commutator(phis[a].matrix, phis[b].matrix).cwiseAbs().maxCoeff();
            if (nc > certificate_tolerance)
                throw std::invalid_argument("group averaging generators do not commute");
        }
    }

    Matrix e = Matrix::Identity(d, d);
    for (const auto& phi : phis) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(phi.matrix);
        long long max_abs = 0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double lam = es.eigenvalues()(i);
            const long long rounded = std::llround(lam);
            if (std::abs(lam - static_cast<double>(rounded)) > integer_spectrum_tolerance)
                throw std::invalid_argument("generator spectrum is not integer; compact averaging "
                                            "does not apply");
            max_abs = std::max(max_abs, std::llabs(rounded));
        }
        const long long k_points = 2 * max_abs + 1;
        Matrix avg = Matrix::Zero(d, d);
        for (long long k = 0; k < k_points; ++k) {
            const double eta = 2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(k_points);
            avg += fock::mat_exp(phi, -kI * eta).matrix;
        }
        e = e * (avg / static_cast<double>(k_points));
    }

    FockOperator out{spec, std::move(e), fock::OpParity::even};
    certify_projector(out);
    return out;
}

FockOperator project_kernel(const std::vector<FockOperator>& constraints) {
    check_shapes(constraints, nullptr);
    if (constraints.empty()) throw std::invalid_argument("no constraints given");

    const fock::HilbertSpec spec = constraints.front().spec;
    const long long d = spec.dimension();
    Matrix stacked(static_cast<Eigen::Index>(constraints.size()) * d, d);
    for (std::size_t k = 0; k < constraints.size(); ++k)
        stacked.middleRows(static_cast<Eigen::Index>(k) * d, d) = constraints[k].matrix;

    Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = kernel_threshold * std::max(1.0, sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;

    const Matrix v_null = svd.matrixV().rightCols(svd.matrixV().cols() - rank);
    FockOperator out{spec, v_null * v_null.adjoint(), fock::OpParity::even};
    certify_projector(out);
    return out;
}

OddPairProjectors project_odd_pair(const FockOperator& chi) {
    if (chi.declared_parity != fock::OpParity::odd)
        throw std::invalid_argument("odd-pair construction needs a parity-odd constraint");
    const Matrix chidag = chi.matrix.adjoint();
    const Matrix x = anticommutator(chi.matrix, chidag);
    require_self_adjoint(x, "anticommutator X");

    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig <= 1e-9)
        throw std::invalid_argument("anticommutator X is singular; the pair is not second class "
                                    "in the invertible sense");
    const double xscale = es.eigenvalues().maxCoeff();
    if (commutator(x, chi.matrix).cwiseAbs().maxCoeff() > certificate_tolerance * std::max(1.0, xscale))
        throw std::invalid_argument("X does not commute with the constraint; the projector "
                                    "construction does not apply");

    const Matrix x_inv = es.eigenvectors() *
                         es.eigenvalues().cwiseInverse().asDiagonal() *
                         es.eigenvectors().adjoint();

    OddPairProjectors out{
        {chi.spec, x_inv * chi.matrix * chidag, fock::OpParity::even},
        {chi.spec, x_inv * chidag * chi.matrix, fock::OpParity::even},
        {chi.spec, x, fock::OpParity::even},
    };
    certify_projector(out.e_a);
    certify_projector(out.e_b);
    const Matrix sum = out.e_a.matrix + out.e_b.matrix;
    if (fock::max_abs_diff(sum, Matrix::Identity(sum.rows(), sum.cols())) > certificate_tolerance)
        throw std::runtime_error("odd-pair projectors do not resolve the identity");
    return out;
}

std::vector<FockOperator> diagonalize_odd(const std::vector<FockOperator>& chis) {
    check_shapes(chis, nullptr);
    if (chis.empty()) return {};
    const auto n = static_cast<Eigen::Index>(chis.size());
    const long long d = chis.front().spec.dimension();

    // Mutual anticommutators must vanish and the Gram pairs must be central.
    Eigen::MatrixXcd w(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        if (chis[static_cast<std::size_t>(a)].declared_parity != fock::OpParity::odd)
            throw std::invalid_argument("odd diagonalization needs parity-odd constraints");
        for (Eigen::Index b = 0; b < n; ++b) {
            const Matrix same = anticommutator(chis[static_cast<std::size_t>(a)].matrix,
                                               chis[static_cast<std::size_t>(b)].matrix);
            if (same.cwiseAbs().maxCoeff() > certificate_tolerance * 10)
                throw std::invalid_argument("constraints do not mutually anticommute");
            const Matrix cross = anticommutator(chis[static_cast<std::size_t>(a)].matrix,
                                                chis[static_cast<std::size_t>(b)].matrix.adjoint());
            const complexd wab = cross.trace() / static_cast<double>(d);
            if (fock::max_abs_diff(cross, wab * Matrix::Identity(d, d)) > 1e-10)
                throw std::invalid_argument("pair anticommutators are not multiples of the identity");
            w(a, b) = wab;
        }
    }
    require_self_adjoint(w, "Gram matrix W");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
    if (es.eigenvalues().minCoeff() <= 1e-9)
        throw std::invalid_argument("Gram matrix W is not positive definite");

    std::vector<FockOperator> out;
    out.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) {
        Matrix combo = Matrix::Zero(d, d);
        for (Eigen::Index b = 0; b < n; ++b)
            combo += std::conj(es.eigenvectors()(b, a)) * chis[static_cast<std::size_t>(b)].matrix;
        combo /= std::sqrt(es.eigenvalues()(a));
        out.push_back({chis.front().spec, std::move(combo), fock::OpParity::odd});
    }
    return out;
}

}  // namespace cfq::constraints
