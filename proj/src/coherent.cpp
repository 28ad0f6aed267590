#include "cfq/coherent.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace cfq::coherent {

namespace {

using grassmann::GeneratorRegistry;

std::uint64_t gen_bit(int index) { return std::uint64_t{1} << index; }

void check_state(const CoherentVector& v, bool want_ket, const char* what) {
    if (!v.reg) throw std::invalid_argument(std::string(what) + ": empty state");
    if (v.is_ket != want_ket)
        throw std::invalid_argument(std::string(what) + ": ket/bra role mismatch");
    if (v.amp.size() != (std::size_t{1} << v.modes.n))
        throw std::invalid_argument(std::string(what) + ": amplitude table size mismatch");
}

void check_same_space(const CoherentVector& a, const CoherentVector& b) {
    if (a.reg != b.reg) throw std::invalid_argument("states use different registries");
    if (a.modes.n != b.modes.n) throw std::invalid_argument("states have different mode counts");
}

// prod_i exp(-psibar_i psi_i / 2) over the whole mode set.
GrassmannElement gaussian_weight(const RegistryPtr& reg, const ModeSet& modes, double sign) {
    GrassmannElement quad(reg);
    for (int i = 0; i < modes.n; ++i)
        quad += GrassmannElement::monomial(
            reg, gen_bit(modes.bar[static_cast<std::size_t>(i)]) | gen_bit(modes.psi[static_cast<std::size_t>(i)]),
            complexd{0.5 * sign, 0.0});
    return quad.exp_even();
}

}  // namespace

ModeSet add_conjugate_modes(GeneratorRegistry& reg, const std::string& base, int n,
                            const std::string& suffix) {
    if (n < 0) throw std::invalid_argument("negative mode count");
    ModeSet out;
    out.n = n;
    for (int i = 1; i <= n; ++i) {
        const std::string tag = std::to_string(i) + suffix;
        const int bar = reg.add_conjugate_pair(base + "̄" + tag, base + tag);
        out.bar.push_back(bar);
        out.psi.push_back(bar + 1);
    }
    return out;
}

std::vector<int> measure_indices(const ModeSet& modes) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(2 * modes.n));
    for (int i = 0; i < modes.n; ++i) {
        out.push_back(modes.bar[static_cast<std::size_t>(i)]);
        out.push_back(modes.psi[static_cast<std::size_t>(i)]);
    }
    return out;
}

int reorder_sign(std::uint64_t b) {
    const int k = std::popcount(b);
    return (k * (k - 1) / 2) % 2 ? -1 : 1;
}

GrassmannElement twist(const GrassmannElement& x, int k) {
    if (!(k & 1)) return x;
    GrassmannElement out(x.registry());
    for (const auto& [mask, c] : x.terms())
        out += GrassmannElement::monomial(x.registry(), mask,
                                          (std::popcount(mask) & 1) ? -c : c);
    return out;
}

CoherentVector coherent_ket(const RegistryPtr& reg, const ModeSet& modes) {
    const GrassmannElement gauss = gaussian_weight(reg, modes, -1.0);
    CoherentVector out{reg, modes, {}, true};
    const std::uint64_t dim = std::uint64_t{1} << modes.n;
    out.amp.reserve(dim);
    for (std::uint64_t b = 0; b < dim; ++b) {
        const int k = std::popcount(b);
        GrassmannElement a = GrassmannElement::scalar(reg, (k * (k + 1) / 2) % 2 ? -1.0 : 1.0);
        for (int i = 0; i < modes.n; ++i)
            if (b >> i & 1) a *= GrassmannElement::generator(reg, modes.psi[static_cast<std::size_t>(i)]);
        out.amp.push_back(a * gauss);
    }
    return out;
}

CoherentVector coherent_bra(const RegistryPtr& reg, const ModeSet& modes) {
    const GrassmannElement gauss = gaussian_weight(reg, modes, -1.0);
    CoherentVector out{reg, modes, {}, false};
    const std::uint64_t dim = std::uint64_t{1} << modes.n;
    out.amp.reserve(dim);
    for (std::uint64_t b = 0; b < dim; ++b) {
        GrassmannElement a = GrassmannElement::scalar(reg, reorder_sign(b));
        for (int i = 0; i < modes.n; ++i)
            if (b >> i & 1) a *= GrassmannElement::generator(reg, modes.bar[static_cast<std::size_t>(i)]);
        out.amp.push_back(a * gauss);
    }
    return out;
}

CoherentVector odd_coherent_ket(const RegistryPtr& reg, const ModeSet& modes) {
    if (modes.n != 1) throw std::invalid_argument("odd coherent states are single mode");
    const GrassmannElement g = gaussian_weight(reg, modes, 1.0);
    const GrassmannElement thetabar = GrassmannElement::generator(reg, modes.bar[0]);
    CoherentVector out{reg, modes, {}, true};
    out.amp.push_back(-(g * thetabar));
    out.amp.push_back(g);
    return out;
}

CoherentVector odd_coherent_bra(const RegistryPtr& reg, const ModeSet& modes) {
    if (modes.n != 1) throw std::invalid_argument("odd coherent states are single mode");
    const GrassmannElement g = gaussian_weight(reg, modes, 1.0);
    const GrassmannElement theta = GrassmannElement::generator(reg, modes.psi[0]);
    CoherentVector out{reg, modes, {}, false};
    out.amp.push_back(-(g * theta));
    out.amp.push_back(g);
    return out;
}

GrassmannElement pairing(const CoherentVector& bra, const CoherentVector& ket) {
    check_state(bra, false, "pairing");
    check_state(ket, true, "pairing");
    if (bra.reg != ket.reg) throw std::invalid_argument("pairing across registries");
    if (bra.modes.n != ket.modes.n) throw std::invalid_argument("pairing across mode counts");
    GrassmannElement sum(bra.reg);
    for (std::size_t b = 0; b < bra.amp.size(); ++b) {
        const int k = std::popcount(b);
        sum += complexd(reorder_sign(b)) * (bra.amp[b] * twist(ket.amp[b], k));
    }
    return sum;
}

CoherentVector apply(const Eigen::MatrixXcd& m, fock::OpParity parity, const CoherentVector& ket) {
    check_state(ket, true, "apply");
    const long long dim = 1LL << ket.modes.n;
    if (m.rows() != dim || m.cols() != dim)
        throw std::invalid_argument("operator dimension does not match the state");
    if (parity == fock::OpParity::none)
        throw std::invalid_argument("operator needs a declared parity to act on coherent states");
    const int p = parity == fock::OpParity::odd ? 1 : 0;

    CoherentVector out{ket.reg, ket.modes, {}, true};
    out.amp.assign(static_cast<std::size_t>(dim), GrassmannElement(ket.reg));
    for (long long c = 0; c < dim; ++c) {
        if (ket.amp[static_cast<std::size_t>(c)].is_zero()) continue;
        const GrassmannElement twisted = twist(ket.amp[static_cast<std::size_t>(c)], p);
        for (long long b = 0; b < dim; ++b) {
            const complexd w = m(b, c);
            if (w == complexd{}) continue;
            out.amp[static_cast<std::size_t>(b)] += w * twisted;
        }
    }
    return out;
}

CoherentVector apply(const fock::FockOperator& op, const CoherentVector& ket) {
    if (op.spec.n_bosons != 0)
        throw std::invalid_argument("coherent-state apply expects a pure fermion operator");
    if (op.spec.n_fermions != ket.modes.n)
        throw std::invalid_argument("operator mode count does not match the state");
    return apply(op.matrix, op.declared_parity, ket);
}

CoherentVector apply_bra(const CoherentVector& bra, const Eigen::MatrixXcd& m) {
    check_state(bra, false, "apply_bra");
    const long long dim = 1LL << bra.modes.n;
    if (m.rows() != dim || m.cols() != dim)
        throw std::invalid_argument("operator dimension does not match the state");

    CoherentVector out{bra.reg, bra.modes, {}, false};
    out.amp.assign(static_cast<std::size_t>(dim), GrassmannElement(bra.reg));
    for (long long b = 0; b < dim; ++b) {
        GrassmannElement acc(bra.reg);
        for (long long c = 0; c < dim; ++c) {
            const complexd w = m(c, b);
            if (w == complexd{}) continue;
            acc += (complexd(reorder_sign(static_cast<std::uint64_t>(c))) * w) *
                   bra.amp[static_cast<std::size_t>(c)];
        }
        out.amp[static_cast<std::size_t>(b)] =
            complexd(reorder_sign(static_cast<std::uint64_t>(b))) * acc;
    }
    return out;
}

CoherentVector apply_bra(const CoherentVector& bra, const fock::FockOperator& op) {
    if (op.spec.n_bosons != 0)
        throw std::invalid_argument("coherent-state apply expects a pure fermion operator");
    if (op.spec.n_fermions != bra.modes.n)
        throw std::invalid_argument("operator mode count does not match the state");
    return apply_bra(bra, op.matrix);
}

GrassmannElement matrix_element(const CoherentVector& bra, const Eigen::MatrixXcd& m,
                                fock::OpParity parity, const CoherentVector& ket) {
    return pairing(bra, apply(m, parity, ket));
}

GrassmannElement matrix_element(const CoherentVector& bra, const fock::FockOperator& op,
                                const CoherentVector& ket) {
    return pairing(bra, apply(op, ket));
}

GrassmannElement normal_symbol(const fock::OperatorPolynomial& poly, const RegistryPtr& reg,
                               const ModeSet& bra_modes, const ModeSet& ket_modes) {
    GrassmannElement sum(reg);
    for (const fock::PolyTerm& t : poly.terms) {
        if (!t.bdag.empty() || !t.b.empty())
            throw std::invalid_argument("normal symbol substitution covers fermion factors only");
        GrassmannElement prod = GrassmannElement::scalar(reg, t.coeff);
        for (int i : t.fdag) {
            if (i < 1 || i > bra_modes.n) throw std::invalid_argument("creator mode out of range");
            prod *= GrassmannElement::generator(reg, bra_modes.bar[static_cast<std::size_t>(i - 1)]);
        }
        for (int i : t.f) {
            if (i < 1 || i > ket_modes.n) throw std::invalid_argument("annihilator mode out of range");
            prod *= GrassmannElement::generator(reg, ket_modes.psi[static_cast<std::size_t>(i - 1)]);
        }
        sum += prod;
    }
    return sum;
}

std::vector<complexd> boson_coherent_amplitudes(complexd z, int n_max) {
    if (n_max < 0) throw std::invalid_argument("negative cutoff");
    std::vector<complexd> out(static_cast<std::size_t>(n_max) + 1);
    const double norm = std::exp(-0.5 * std::norm(z));
    complexd zn{1.0, 0.0};
    double fact = 1.0;
    for (int m = 0; m <= n_max; ++m) {
        out[static_cast<std::size_t>(m)] = norm * zn / std::sqrt(fact);
        zn *= z;
        fact *= m + 1;
    }
    return out;
}

const GrassmannElement& SymbolicOperator::entry(int b, int c) const {
    if (b < 0 || c < 0 || b >= dim() || c >= dim())
        throw std::out_of_range("symbolic operator index");
    return entries_[static_cast<std::size_t>(b * dim() + c)];
}

void SymbolicOperator::infer_and_check_parity() {
    int seen = -1;
    const long long d = dim();
    for (long long b = 0; b < d; ++b)
        for (long long c = 0; c < d; ++c) {
            const auto& e = entries_[static_cast<std::size_t>(b * d + c)];
            const int kk = std::popcount(static_cast<std::uint64_t>(b)) +
                           std::popcount(static_cast<std::uint64_t>(c));
            for (const auto& [mask, coeffv] : e.terms()) {
                (void)coeffv;
                const int p = (std::popcount(mask) + kk) & 1;
                if (seen < 0) seen = p;
                else if (seen != p)
                    throw std::invalid_argument("symbolic operator entries are not parity homogeneous");
            }
        }
    parity_ = seen == 1 ? fock::OpParity::odd : fock::OpParity::even;
}

SymbolicOperator SymbolicOperator::from_entries(RegistryPtr reg, int n_modes,
                                                std::vector<GrassmannElement> row_major) {
    if (n_modes < 0 || n_modes > 30) throw std::invalid_argument("bad mode count");
    SymbolicOperator out;
    out.reg_ = std::move(reg);
    out.n_modes_ = n_modes;
    const std::size_t need = std::size_t{1} << (2 * n_modes);
    if (row_major.size() != need)
        throw std::invalid_argument("entry table has the wrong size");
    for (const auto& e : row_major)
        if (!e.is_zero() && e.registry() != out.reg_)
            throw std::invalid_argument("entry uses a different registry");
    for (auto& e : row_major)
        if (!e.registry()) e = GrassmannElement(out.reg_);
    out.entries_ = std::move(row_major);
    out.infer_and_check_parity();
    return out;
}

SymbolicOperator SymbolicOperator::from_numeric(const RegistryPtr& reg, const Eigen::MatrixXcd& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("operator matrix must be square");
    int n = 0;
    while ((1LL << n) < m.rows()) ++n;
    if ((1LL << n) != m.rows()) throw std::invalid_argument("dimension is not a power of two");
    std::vector<GrassmannElement> entries;
    entries.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index b = 0; b < m.rows(); ++b)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            entries.push_back(GrassmannElement::scalar(reg, m(b, c)));
    return from_entries(reg, n, std::move(entries));
}

SymbolicOperator SymbolicOperator::identity(const RegistryPtr& reg, int n_modes) {
    const long long d = 1LL << n_modes;
    return from_numeric(reg, Eigen::MatrixXcd::Identity(d, d));
}

SymbolicOperator SymbolicOperator::outer(const CoherentVector& ket, const CoherentVector& bra) {
    check_state(ket, true, "outer");
    check_state(bra, false, "outer");
    check_same_space(ket, bra);
    const long long d = 1LL << ket.modes.n;
    std::vector<GrassmannElement> entries;
    entries.reserve(static_cast<std::size_t>(d * d));
    for (long long b = 0; b < d; ++b) {
        const int kb = std::popcount(static_cast<std::uint64_t>(b));
        for (long long c = 0; c < d; ++c) {
            const complexd sc{static_cast<double>(reorder_sign(static_cast<std::uint64_t>(c))), 0.0};
            entries.push_back(sc * (ket.amp[static_cast<std::size_t>(b)] *
                                    twist(bra.amp[static_cast<std::size_t>(c)], kb)));
        }
    }
    return from_entries(ket.reg, ket.modes.n, std::move(entries));
}

SymbolicOperator SymbolicOperator::operator+(const SymbolicOperator& o) const {
    if (reg_ != o.reg_ || n_modes_ != o.n_modes_)
        throw std::invalid_argument("operator spaces differ");
    SymbolicOperator out = *this;
    for (std::size_t i = 0; i < entries_.size(); ++i) out.entries_[i] += o.entries_[i];
    out.infer_and_check_parity();
    return out;
}

SymbolicOperator SymbolicOperator::operator-(const SymbolicOperator& o) const {
    return *this + (o * complexd{-1.0, 0.0});
}

SymbolicOperator SymbolicOperator::operator*(complexd c) const {
    SymbolicOperator out = *this;
    for (auto& e : out.entries_) e *= c;
    return out;
}

SymbolicOperator SymbolicOperator::product(const SymbolicOperator& rhs) const {
    if (reg_ != rhs.reg_ || n_modes_ != rhs.n_modes_)
        throw std::invalid_argument("operator spaces differ");
    const long long d = dim();
    const int p = parity_ == fock::OpParity::odd ? 1 : 0;
    SymbolicOperator out;
    out.reg_ = reg_;
    out.n_modes_ = n_modes_;
    out.entries_.assign(static_cast<std::size_t>(d * d), GrassmannElement(reg_));
    for (long long b = 0; b < d; ++b)
        for (long long c = 0; c < d; ++c) {
            GrassmannElement acc(reg_);
            for (long long k = 0; k < d; ++k) {
                const GrassmannElement& left = entries_[static_cast<std::size_t>(b * d + k)];
                const GrassmannElement& right = rhs.entries_[static_cast<std::size_t>(k * d + c)];
                if (left.is_zero() || right.is_zero()) continue;
                acc += twist(right, p) * left;
            }
            out.entries_[static_cast<std::size_t>(b * d + c)] = std::move(acc);
        }
    out.infer_and_check_parity();
    return out;
}

SymbolicOperator SymbolicOperator::adjoint_op() const {
    const long long d = dim();
    SymbolicOperator out;
    out.reg_ = reg_;
    out.n_modes_ = n_modes_;
    out.entries_.assign(static_cast<std::size_t>(d * d), GrassmannElement(reg_));
    for (long long b = 0; b < d; ++b) {
        const int kb = std::popcount(static_cast<std::uint64_t>(b));
        for (long long c = 0; c < d; ++c) {
            const int kc = std::popcount(static_cast<std::uint64_t>(c));
            out.entries_[static_cast<std::size_t>(c * d + b)] =
                twist(entries_[static_cast<std::size_t>(b * d + c)].involute(), kb + kc);
        }
    }
    out.infer_and_check_parity();
    return out;
}

SymbolicOperator SymbolicOperator::integrate_entries(std::span<const int> gens) const {
    SymbolicOperator out = *this;
    for (auto& e : out.entries_) e = e.integrate(gens);
    out.infer_and_check_parity();
    return out;
}

CoherentVector SymbolicOperator::apply(const CoherentVector& ket) const {
    check_state(ket, true, "apply");
    if (ket.reg != reg_) throw std::invalid_argument("state uses a different registry");
    if (ket.modes.n != n_modes_) throw std::invalid_argument("state mode count differs");
    const long long d = dim();
    const int p = parity_ == fock::OpParity::odd ? 1 : 0;
    CoherentVector out{ket.reg, ket.modes, {}, true};
    out.amp.assign(static_cast<std::size_t>(d), GrassmannElement(reg_));
    for (long long b = 0; b < d; ++b) {
        GrassmannElement acc(reg_);
        for (long long c = 0; c < d; ++c) {
            const GrassmannElement& m = entries_[static_cast<std::size_t>(b * d + c)];
            if (m.is_zero() || ket.amp[static_cast<std::size_t>(c)].is_zero()) continue;
            acc += twist(ket.amp[static_cast<std::size_t>(c)], p) * m;
        }
        out.amp[static_cast<std::size_t>(b)] = std::move(acc);
    }
    return out;
}

Eigen::MatrixXcd SymbolicOperator::to_numeric() const {
    const long long d = dim();
    Eigen::MatrixXcd m(d, d);
    for (long long b = 0; b < d; ++b)
        for (long long c = 0; c < d; ++c) {
            const GrassmannElement& e = entries_[static_cast<std::size_t>(b * d + c)];
            if (e.support_mask() != 0)
                throw std::runtime_error("symbolic operator entry still carries Grassmann content");
            m(b, c) = e.scalar_part();
        }
    return m;
}

bool SymbolicOperator::is_scalar() const {
    for (const auto& e : entries_)
        if (e.support_mask() != 0) return false;
    return true;
}

double SymbolicOperator::max_entry_distance(const SymbolicOperator& o) const {
    if (n_modes_ != o.n_modes_) throw std::invalid_argument("operator spaces differ");
    double worst = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        worst = std::max(worst, grassmann::max_coeff_distance(entries_[i], o.entries_[i]));
    return worst;
}

double identity_resolution_defect(int n_modes) {
    auto reg = std::make_shared<grassmann::GeneratorRegistry>();
    const ModeSet modes = add_conjugate_modes(*reg, "ψ", n_modes, "");
    const SymbolicOperator op =
        SymbolicOperator::outer(coherent_ket(reg, modes), coherent_bra(reg, modes));
    const std::vector<int> measure = measure_indices(modes);
    const Eigen::MatrixXcd reduced = op.integrate_entries(measure).to_numeric();
    const long long d = 1LL << n_modes;
    return fock::max_abs_diff(reduced, Eigen::MatrixXcd::Identity(d, d));
}

}  // namespace cfq::coherent
