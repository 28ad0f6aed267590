#pragma once

// Exact dense matrix representations of fermion and (truncated) boson ladder
// operators, normal-ordered operator polynomials, tensor products, and the
// matrix exponential.
//
// Basis order: fermion occupation bits are little-endian (mode 1 is the
// fastest-varying bit), boson modes sit in the outer (leftmost) tensor factor,
// so a full basis index is I = b_boson * 2^N + b_fermion with
// b_boson = sum_i m_i (n_max+1)^(i-1).

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace cfq::fock {

using complexd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Hard default for the Hilbert-space dimension; override with the
// CFQ_DIM_CAP environment variable.
long long dimension_cap();

struct HilbertSpec {
    int n_fermions = 0;
    int n_bosons = 0;
    int boson_cutoff = 0;  // occupation levels 0..n_max per boson mode

    long long fermion_dim() const { return 1LL << n_fermions; }
    long long boson_dim() const;
    // Total dimension; throws when above the configured cap.
    long long dimension() const;

    bool operator==(const HilbertSpec&) const = default;
};

enum class OpParity { even, odd, none };

struct FockOperator {
    HilbertSpec spec;
    Matrix matrix;
    OpParity declared_parity = OpParity::none;
};

// One normal-ordered product: coeff * fdag... f... bdag... b..., each factor
// list applied left to right as written.  Mode indices are 1-based.
struct PolyTerm {
    complexd coeff{1.0, 0.0};
    std::vector<int> fdag, f, bdag, b;
};

struct OperatorPolynomial {
    std::vector<PolyTerm> terms;
};

// Term-wise adjoint; stays normal-ordered (factor lists swap and reverse).
OperatorPolynomial adjoint(const OperatorPolynomial& poly);

FockOperator identity(const HilbertSpec& spec);
FockOperator zero(const HilbertSpec& spec);

// Which side the alternating-sign string acts on.  Physical results must not
// depend on this; the non-default choice exists so tests can assert that.
enum class SignConvention { string_below, string_above };

// Annihilator/creator pairs (f_i, f_i^dagger), i = 1..N, on the full space.
std::vector<std::pair<FockOperator, FockOperator>> build_fermion_ops(
    const HilbertSpec& spec, SignConvention conv = SignConvention::string_below);

// Truncated ladder pairs (b_i, b_i^dagger); [b, b^dagger] = 1 exactly except
// in the top cutoff state.
std::vector<std::pair<FockOperator, FockOperator>> build_boson_ops(const HilbertSpec& spec);

// diag(occupation of fermion mode i) and diag(occupation of boson mode i).
FockOperator fermion_number(const HilbertSpec& spec, int mode);
FockOperator boson_number(const HilbertSpec& spec, int mode);
// diag((-1)^(total fermion occupation)).
FockOperator total_fermion_parity(const HilbertSpec& spec);

FockOperator realize(const OperatorPolynomial& poly, const HilbertSpec& spec,
                     SignConvention conv = SignConvention::string_below);

// exp(scale * op) by scaling-and-squaring.  When op is self-adjoint and scale
// purely imaginary the result is checked to be unitary.
FockOperator mat_exp(const FockOperator& op, complexd scale);

// Kronecker product; compose with the boson factor on the left to match the
// basis order documented above.
FockOperator tensor(const FockOperator& a, const FockOperator& b);

// Largest |entry| of A - B.
double max_abs_diff(const Matrix& a, const Matrix& b);
// Deviation of `op` from its declared parity sector structure (0 when none).
double parity_violation(const FockOperator& op);

// Portable text format: dimension header line, then row-major entries as
// "re im" pairs, one row per line.
void save_text(const FockOperator& op, const std::string& path);
FockOperator load_text(const HilbertSpec& spec, const std::string& path,
                       OpParity declared = OpParity::none);

}  // namespace cfq::fock
