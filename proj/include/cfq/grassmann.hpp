#pragma once

// Exact arithmetic in the complex Grassmann algebra over up to 64 generators.
// Monomials are bitmasks over a registry of generators; the canonical order of
// a monomial is ascending registry index, and every reordering sign is folded
// into the coefficient at construction time.

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfq::grassmann {

using complexd = std::complex<double>;

// Coefficients below this magnitude are dropped after every operation.
inline constexpr double prune_threshold = 1e-14;
inline constexpr int max_generators = 64;

enum class Parity { even, odd, mixed };

// Issues generator indices 0..count-1 in insertion order.  Indices are stable
// for the lifetime of the registry; conjugation partners (psi <-> psibar) may
// be linked for the involution.
class GeneratorRegistry {
public:
    int add(std::string label);
    // Registers `first` then `second` and links them as conjugates; returns the
    // index of `first`.
    int add_conjugate_pair(std::string first, std::string second);
    void link_partners(int a, int b);

    int count() const noexcept { return static_cast<int>(labels_.size()); }
    const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
    int partner(int i) const { return partner_.at(static_cast<std::size_t>(i)); }
    int find(std::string_view label) const;

private:
    std::vector<std::string> labels_;
    std::vector<int> partner_;
    std::map<std::string, int, std::less<>> index_;
};

using RegistryPtr = std::shared_ptr<GeneratorRegistry>;

class GrassmannElement {
public:
    GrassmannElement() = default;  // zero with no registry; usable as a placeholder only
    explicit GrassmannElement(RegistryPtr reg) : reg_(std::move(reg)) {}

    static GrassmannElement scalar(RegistryPtr reg, complexd c);
    static GrassmannElement generator(RegistryPtr reg, int index);
    // `mask` must only use registered generators; the monomial is taken as
    // already canonically ordered.
    static GrassmannElement monomial(RegistryPtr reg, std::uint64_t mask, complexd c);

    const RegistryPtr& registry() const { return reg_; }
    const std::map<std::uint64_t, complexd>& terms() const { return terms_; }

    bool is_zero() const { return terms_.empty(); }
    complexd coeff(std::uint64_t mask) const;
    complexd scalar_part() const { return coeff(0); }
    // OR of all monomial masks; used for generator-hygiene checks.
    std::uint64_t support_mask() const;
    Parity parity() const;

    GrassmannElement& operator+=(const GrassmannElement& o);
    GrassmannElement& operator-=(const GrassmannElement& o);
    GrassmannElement& operator*=(const GrassmannElement& o);
    GrassmannElement& operator*=(complexd c);

    friend GrassmannElement operator+(GrassmannElement a, const GrassmannElement& b) { return a += b; }
    friend GrassmannElement operator-(GrassmannElement a, const GrassmannElement& b) { return a -= b; }
    friend GrassmannElement operator*(GrassmannElement a, const GrassmannElement& b) { return a *= b; }
    friend GrassmannElement operator*(GrassmannElement a, complexd c) { return a *= c; }
    friend GrassmannElement operator*(complexd c, GrassmannElement a) { return a *= c; }
    friend GrassmannElement operator-(GrassmannElement a) { return a *= complexd(-1.0, 0.0); }

    bool operator==(const GrassmannElement& o) const;

    // Berezin integration == left differentiation: delete `gen` after
    // anticommuting it to the front (sign = parity of its position); terms
    // without `gen` vanish.
    GrassmannElement integrate(int gen) const;
    GrassmannElement differentiate(int gen) const { return integrate(gen); }
    // Iterated form for a measure written left to right, e.g. {psibar, psi}
    // for "d psibar d psi": the rightmost differential acts first.
    GrassmannElement integrate(std::span<const int> gens) const;

    // exp of an even element: exp(scalar part) is taken analytically, the
    // nilpotent remainder by its terminating power series.
    GrassmannElement exp_even() const;

    // c g_{i1}...g_{ik} -> conj(c) gbar_{ik}...gbar_{i1}, re-canonicalized.
    // Every generator in the support must have a linked partner.
    GrassmannElement involute() const;

    friend void check_same_registry(const GrassmannElement& a, const GrassmannElement& b);

private:
    void insert_term(std::uint64_t mask, complexd c);
    void prune();

    RegistryPtr reg_;
    std::map<std::uint64_t, complexd> terms_;
};

// Largest |a_m - b_m| over the union of monomials; the coefficient-exact
// comparison used throughout the tests.
double max_coeff_distance(const GrassmannElement& a, const GrassmannElement& b);

// Sign accumulated when merging two canonically ordered disjoint monomials
// (product order: `a` first): parity of the number of pairs i in a, j in b
// with j < i.
int merge_sign(std::uint64_t a, std::uint64_t b);

// Renders as "(+1.0+0.0i)·label1label2 + ..." (terms sorted by degree then
// mask; "0" for the zero element); parse() round-trips this exactly.
std::string to_string(const GrassmannElement& x);
GrassmannElement parse(const RegistryPtr& reg, std::string_view text);

}  // namespace cfq::grassmann
