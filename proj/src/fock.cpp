#include "cfq/fock.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <bit>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfq::fock {

namespace {

constexpr long long kDefaultDimCap = 4096;

std::uint64_t bit_of(int mode) { return std::uint64_t{1} << (mode - 1); }

void check_fermion_mode(const HilbertSpec& spec, int mode) {
    if (mode < 1 || mode > spec.n_fermions)
        throw std::invalid_argument("fermion mode " + std::to_string(mode) +
                                    " out of range 1.." + std::to_string(spec.n_fermions));
}

void check_boson_mode(const HilbertSpec& spec, int mode) {
    if (mode < 1 || mode > spec.n_bosons)
        throw std::invalid_argument("boson mode " + std::to_string(mode) +
                                    " out of range 1.." + std::to_string(spec.n_bosons));
}

void check_same_spec(const HilbertSpec& a, const HilbertSpec& b) {
    if (!(a == b)) throw std::invalid_argument("operators live on different spaces");
}

// f_mode on the 2^N fermion block alone.
Matrix fermion_annihilator_block(int n_fermions, int mode, SignConvention conv) {
    const long long dim = 1LL << n_fermions;
    Matrix out = Matrix::Zero(dim, dim);
    const std::uint64_t bit = bit_of(mode);
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
        if (!(b & bit)) continue;
        const std::uint64_t string_bits =
            conv == SignConvention::string_below ? (b & (bit - 1)) : (b >> mode);
        const int sign = (std::popcount(string_bits) & 1) ? -1 : 1;
        out(static_cast<Eigen::Index>(b ^ bit), static_cast<Eigen::Index>(b)) = sign;
    }
    return out;
}

// b_mode on the (n_max+1)^M boson block alone; mode 1 is the fastest factor.
Matrix boson_annihilator_block(int n_bosons, int boson_cutoff, int mode) {
    const long long d = boson_cutoff + 1;
    Matrix ladder = Matrix::Zero(d, d);
    for (long long n = 1; n < d; ++n) ladder(n - 1, n) = std::sqrt(static_cast<double>(n));

    long long fast = 1;
    for (int i = 1; i < mode; ++i) fast *= d;
    long long slow = 1;
    for (int i = mode; i < n_bosons; ++i) slow *= d;

    const Matrix inner = kroneckerProduct(ladder, Matrix::Identity(fast, fast)).eval();
    return kroneckerProduct(Matrix::Identity(slow, slow), inner).eval();
}

Matrix embed_fermion(const HilbertSpec& spec, const Matrix& block) {
    const long long bd = spec.boson_dim();
    return kroneckerProduct(Matrix::Identity(bd, bd), block).eval();
}

Matrix embed_boson(const HilbertSpec& spec, const Matrix& block) {
    const long long fd = spec.fermion_dim();
    return kroneckerProduct(block, Matrix::Identity(fd, fd)).eval();
}

}  // namespace

long long dimension_cap() {
    if (const char* env = std::getenv("CFQ_DIM_CAP")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && v > 0) return v;
    }
    return kDefaultDimCap;
}

long long HilbertSpec::boson_dim() const {
    if (n_bosons > 0 && boson_cutoff < 1)
        throw std::invalid_argument("boson modes need a cutoff of at least 1");
    long long d = 1;
    for (int i = 0; i < n_bosons; ++i) {
        d *= boson_cutoff + 1;
        if (d > dimension_cap()) break;  // dimension() reports the violation
    }
    return d;
}

long long HilbertSpec::dimension() const {
    if (n_fermions < 0 || n_bosons < 0) throw std::invalid_argument("negative mode count");
    const long long cap = dimension_cap();
    const auto too_big = [cap] {
        return std::runtime_error("Hilbert space dimension exceeds cap " + std::to_string(cap) +
                                  " (set CFQ_DIM_CAP to raise it)");
    };
    if (n_fermions >= 62 || fermion_dim() > cap) throw too_big();
    const long long bd = boson_dim();
    if (bd > cap / fermion_dim()) throw too_big();
    return fermion_dim() * bd;
}

OperatorPolynomial adjoint(const OperatorPolynomial& poly) {
    OperatorPolynomial out;
    out.terms.reserve(poly.terms.size());
    for (const PolyTerm& t : poly.terms) {
        PolyTerm a;
        a.coeff = std::conj(t.coeff);
        a.fdag.assign(t.f.rbegin(), t.f.rend());
        a.f.assign(t.fdag.rbegin(), t.fdag.rend());
        a.bdag.assign(t.b.rbegin(), t.b.rend());
        a.b.assign(t.bdag.rbegin(), t.bdag.rend());
        out.terms.push_back(std::move(a));
    }
    return out;
}

FockOperator identity(const HilbertSpec& spec) {
    const long long d = spec.dimension();
    return {spec, Matrix::Identity(d, d), OpParity::even};
}

FockOperator zero(const HilbertSpec& spec) {
    const long long d = spec.dimension();
    return {spec, Matrix::Zero(d, d), OpParity::even};
}

std::vector<std::pair<FockOperator, FockOperator>> build_fermion_ops(const HilbertSpec& spec,
                                                                     SignConvention conv) {
    spec.dimension();
    std::vector<std::pair<FockOperator, FockOperator>> out;
    out.reserve(static_cast<std::size_t>(spec.n_fermions));
    for (int i = 1; i <= spec.n_fermions; ++i) {
        Matrix f = embed_fermion(spec, fermion_annihilator_block(spec.n_fermions, i, conv));
        Matrix fdag = f.adjoint();
        out.push_back({FockOperator{spec, std::move(f), OpParity::odd},
                       FockOperator{spec, std::move(fdag), OpParity::odd}});
    }
    return out;
}

std::vector<std::pair<FockOperator, FockOperator>> build_boson_ops(const HilbertSpec& spec) {
    spec.dimension();
    std::vector<std::pair<FockOperator, FockOperator>> out;
    out.reserve(static_cast<std::size_t>(spec.n_bosons));
    for (int i = 1; i <= spec.n_bosons; ++i) {
        Matrix b = embed_boson(spec, boson_annihilator_block(spec.n_bosons, spec.boson_cutoff, i));
        Matrix bdag = b.adjoint();
        out.push_back({FockOperator{spec, std::move(b), OpParity::even},
                       FockOperator{spec, std::move(bdag), OpParity::even}});
    }
    return out;
}

FockOperator fermion_number(const HilbertSpec& spec, int mode) {
    check_fermion_mode(spec, mode);
    const long long d = spec.dimension();
    const long long fd = spec.fermion_dim();
    Matrix out = Matrix::Zero(d, d);
    for (long long I = 0; I < d; ++I)
        if ((static_cast<std::uint64_t>(I % fd) >> (mode - 1)) & 1) out(I, I) = 1.0;
    return {spec, std::move(out), OpParity::even};
}

FockOperator boson_number(const HilbertSpec& spec, int mode) {
    check_boson_mode(spec, mode);
    const long long d = spec.dimension();
    const long long fd = spec.fermion_dim();
    const long long bd = spec.boson_cutoff + 1;
    Matrix out = Matrix::Zero(d, d);
    for (long long I = 0; I < d; ++I) {
        long long digits = I / fd;
        for (int i = 1; i < mode; ++i) digits /= bd;
        out(I, I) = static_cast<double>(digits % bd);
    }
    return {spec, std::move(out), OpParity::even};
}

FockOperator total_fermion_parity(const HilbertSpec& spec) {
    const long long d = spec.dimension();
    const long long fd = spec.fermion_dim();
    Matrix out = Matrix::Zero(d, d);
    for (long long I = 0; I < d; ++I)
        out(I, I) = (std::popcount(static_cast<std::uint64_t>(I % fd)) & 1) ? -1.0 : 1.0;
    return {spec, std::move(out), OpParity::even};
}

FockOperator realize(const OperatorPolynomial& poly, const HilbertSpec& spec, SignConvention conv) {
    const long long d = spec.dimension();
    const auto fops = build_fermion_ops(spec, conv);
    const auto bops = build_boson_ops(spec);

    Matrix sum = Matrix::Zero(d, d);
    bool any_even = false, any_odd = false;
    for (const PolyTerm& t : poly.terms) {
        Matrix prod = Matrix::Identity(d, d);
        for (int i : t.fdag) {
            check_fermion_mode(spec, i);
            prod = prod * fops[static_cast<std::size_t>(i - 1)].second.matrix;
        }
        for (int i : t.f) {
            check_fermion_mode(spec, i);
            prod = prod * fops[static_cast<std::size_t>(i - 1)].first.matrix;
        }
        for (int i : t.bdag) {
            check_boson_mode(spec, i);
            prod = prod * bops[static_cast<std::size_t>(i - 1)].second.matrix;
        }
        for (int i : t.b) {
            check_boson_mode(spec, i);
            prod = prod * bops[static_cast<std::size_t>(i - 1)].first.matrix;
        }
        sum += t.coeff * prod;
        (((t.fdag.size() + t.f.size()) & 1) ? any_odd : any_even) = true;
    }
    OpParity parity = OpParity::none;
    if (!any_odd) parity = OpParity::even;
    else if (!any_even) parity = OpParity::odd;
    return {spec, std::move(sum), parity};
}

FockOperator mat_exp(const FockOperator& op, complexd scale) {
    const Matrix scaled = scale * op.matrix;
    Matrix result = scaled.exp();
    if (!result.allFinite()) throw std::runtime_error("matrix exponential overflowed");

    const double herm_dev = max_abs_diff(op.matrix, op.matrix.adjoint());
    if (herm_dev <= 1e-12 && std::abs(scale.real()) <= 1e-15 * (1.0 + std::abs(scale.imag()))) {
        const Matrix gram = result * result.adjoint();
        const double unit_dev = max_abs_diff(gram, Matrix::Identity(result.rows(), result.cols()));
        if (unit_dev > 1e-12)
            throw std::runtime_error("exponential of a self-adjoint generator lost unitarity: " +
                                     std::to_string(unit_dev));
    }
    return {op.spec, std::move(result), op.declared_parity == OpParity::even ? OpParity::even : OpParity::none};
}

FockOperator tensor(const FockOperator& a, const FockOperator& b) {
    HilbertSpec spec;
    spec.n_fermions = a.spec.n_fermions + b.spec.n_fermions;
    spec.n_bosons = a.spec.n_bosons + b.spec.n_bosons;
    spec.boson_cutoff = std::max(a.spec.boson_cutoff, b.spec.boson_cutoff);
    if (a.spec.n_bosons > 0 && b.spec.n_bosons > 0 && a.spec.boson_cutoff != b.spec.boson_cutoff)
        throw std::invalid_argument("tensor factors disagree on the boson cutoff");
    spec.dimension();
    OpParity parity = (a.declared_parity == OpParity::even && b.declared_parity == OpParity::even)
                          ? OpParity::even
                          : OpParity::none;
    return {spec, kroneckerProduct(a.matrix, b.matrix).eval(), parity};
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("matrix shape mismatch");
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

double parity_violation(const FockOperator& op) {
    if (op.declared_parity == OpParity::none) return 0.0;
    const Matrix p = total_fermion_parity(op.spec).matrix;
    const double sign = op.declared_parity == OpParity::even ? 1.0 : -1.0;
    return max_abs_diff(p * op.matrix * p, sign * op.matrix);
}

void save_text(const FockOperator& op, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.precision(17);
    out << op.matrix.rows() << ' ' << op.matrix.cols() << '\n';
    for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) {
            if (c) out << ' ';
            out << op.matrix(r, c).real() << ' ' << op.matrix(r, c).imag();
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

FockOperator load_text(const HilbertSpec& spec, const std::string& path, OpParity declared) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> rows >> cols)) throw std::runtime_error(path + ": malformed header");
    if (rows != spec.dimension() || cols != spec.dimension())
        throw std::runtime_error(path + ": stored shape does not match the space");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double re = 0, im = 0;
            if (!(in >> re >> im)) throw std::runtime_error(path + ": truncated matrix data");
            m(r, c) = complexd{re, im};
        }
    return {spec, std::move(m), declared};
}

}  // namespace cfq::fock
