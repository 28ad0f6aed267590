#include "cfq/grassmann.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <stdexcept>

namespace cfq::grassmann {

int GeneratorRegistry::add(std::string label) {
    if (count() >= max_generators)
        throw std::invalid_argument("generator registry full (64 generators)");
    if (label.empty())
        throw std::invalid_argument("generator label must be non-empty");
    auto [it, inserted] = index_.emplace(label, count());
    if (!inserted)
        throw std::invalid_argument("duplicate generator label: " + label);
    labels_.push_back(std::move(label));
    partner_.push_back(-1);
    return it->second;
}

int GeneratorRegistry::add_conjugate_pair(std::string first, std::string second) {
    const int a = add(std::move(first));
    const int b = add(std::move(second));
    link_partners(a, b);
    return a;
}

void GeneratorRegistry::link_partners(int a, int b) {
    partner_.at(static_cast<std::size_t>(a)) = b;
    partner_.at(static_cast<std::size_t>(b)) = a;
}

int GeneratorRegistry::find(std::string_view label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
}

void check_same_registry(const GrassmannElement& a, const GrassmannElement& b) {
    if (a.reg_.get() != b.reg_.get())
        throw std::invalid_argument("operands belong to different generator registries");
}

int merge_sign(std::uint64_t a, std::uint64_t b) {
    int swaps = 0;
    a >>= 1;
    while (a) {
        swaps += std::popcount(a & b);
        a >>= 1;
    }
    return (swaps & 1) ? -1 : 1;
}

GrassmannElement GrassmannElement::scalar(RegistryPtr reg, complexd c) {
    return monomial(std::move(reg), 0, c);
}

GrassmannElement GrassmannElement::generator(RegistryPtr reg, int index) {
    if (!reg || index < 0 || index >= reg->count())
        throw std::invalid_argument("generator index not registered");
    return monomial(std::move(reg), std::uint64_t{1} << index, complexd(1.0, 0.0));
}

GrassmannElement GrassmannElement::monomial(RegistryPtr reg, std::uint64_t mask, complexd c) {
    if (!reg)
        throw std::invalid_argument("null registry");
    if (reg->count() < max_generators && (mask >> reg->count()) != 0)
        throw std::invalid_argument("monomial uses unregistered generators");
    GrassmannElement x(std::move(reg));
    x.insert_term(mask, c);
    x.prune();
    return x;
}

complexd GrassmannElement::coeff(std::uint64_t mask) const {
    auto it = terms_.find(mask);
    return it == terms_.end() ? complexd{} : it->second;
}

std::uint64_t GrassmannElement::support_mask() const {
    std::uint64_t m = 0;
    for (const auto& [mask, c] : terms_) m |= mask;
    return m;
}

Parity GrassmannElement::parity() const {
    bool any_even = false, any_odd = false;
    for (const auto& [mask, c] : terms_)
        (std::popcount(mask) & 1 ? any_odd : any_even) = true;
    if (any_even && any_odd) return Parity::mixed;
    if (any_odd) return Parity::odd;
    return Parity::even;  // includes the zero element
}

void GrassmannElement::insert_term(std::uint64_t mask, complexd c) {
    auto [it, inserted] = terms_.emplace(mask, c);
    if (!inserted) it->second += c;
}

void GrassmannElement::prune() {
    for (auto it = terms_.begin(); it != terms_.end();)
        it = std::abs(it->second) < prune_threshold ? terms_.erase(it) : std::next(it);
}

GrassmannElement& GrassmannElement::operator+=(const GrassmannElement& o) {
    if (!reg_) reg_ = o.reg_;
    check_same_registry(*this, o);
    for (const auto& [mask, c] : o.terms_) insert_term(mask, c);
    prune();
    return *this;
}

GrassmannElement& GrassmannElement::operator-=(const GrassmannElement& o) {
    if (!reg_) reg_ = o.reg_;
    check_same_registry(*this, o);
    for (const auto& [mask, c] : o.terms_) insert_term(mask, -c);
    prune();
    return *this;
}

GrassmannElement& GrassmannElement::operator*=(const GrassmannElement& o) {
    if (!reg_) reg_ = o.reg_;
    check_same_registry(*this, o);
    std::map<std::uint64_t, complexd> out;
    for (const auto& [ma, ca] : terms_) {
        for (const auto& [mb, cb] : o.terms_) {
            if (ma & mb) continue;  // repeated generator
            const complexd c = ca * cb * static_cast<double>(merge_sign(ma, mb));
            auto [it, inserted] = out.emplace(ma | mb, c);
            if (!inserted) it->second += c;
        }
    }
    terms_ = std::move(out);
    prune();
    return *this;
}

GrassmannElement& GrassmannElement::operator*=(complexd c) {
    for (auto& [mask, v] : terms_) v *= c;
    prune();
    return *this;
}

bool GrassmannElement::operator==(const GrassmannElement& o) const {
    return reg_.get() == o.reg_.get() && terms_ == o.terms_;
}

GrassmannElement GrassmannElement::integrate(int gen) const {
    if (!reg_ || gen < 0 || gen >= reg_->count())
        throw std::invalid_argument("integration generator not registered");
    const std::uint64_t bit = std::uint64_t{1} << gen;
    GrassmannElement out(reg_);
    for (const auto& [mask, c] : terms_) {
        if (!(mask & bit)) continue;
        const int pos = std::popcount(mask & (bit - 1));
        out.insert_term(mask & ~bit, (pos & 1) ? -c : c);
    }
    out.prune();
    return out;
}

GrassmannElement GrassmannElement::integrate(std::span<const int> gens) const {
    GrassmannElement x = *this;
    for (auto it = gens.rbegin(); it != gens.rend(); ++it) x = x.integrate(*it);
    return x;
}

GrassmannElement GrassmannElement::exp_even() const {
    if (!reg_) throw std::invalid_argument("exp_even on element without registry");
    if (parity() != Parity::even)
        throw std::invalid_argument("exp_even requires an even element");
    const complexd s = scalar_part();
    GrassmannElement n = *this - scalar(reg_, s);
    GrassmannElement result = scalar(reg_, complexd(1.0, 0.0));
    GrassmannElement power = result;
    for (int k = 1; k <= max_generators / 2 + 1 && !n.is_zero(); ++k) {
        power *= n;
        power *= complexd(1.0 / k, 0.0);
        if (power.is_zero()) break;
        result += power;
    }
    result *= std::exp(s);
    return result;
}

GrassmannElement GrassmannElement::involute() const {
    if (!reg_) throw std::invalid_argument("involute on element without registry");
    GrassmannElement out(reg_);
    std::vector<int> seq;
    for (const auto& [mask, c] : terms_) {
        seq.clear();
        // Partner images of the generators, visited in descending order.
        for (int i = 63; i >= 0; --i) {
            if (!(mask & (std::uint64_t{1} << i))) continue;
            const int p = reg_->partner(i);
            if (p < 0)
                throw std::invalid_argument("involute: generator '" + reg_->label(i) +
                                            "' has no conjugate partner");
            seq.push_back(p);
        }
        // Parity of the permutation sorting `seq` ascending.
        int inversions = 0;
        std::uint64_t new_mask = 0;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            for (std::size_t j = i + 1; j < seq.size(); ++j)
                if (seq[i] > seq[j]) ++inversions;
            new_mask |= std::uint64_t{1} << seq[i];
        }
        out.insert_term(new_mask, (inversions & 1) ? -std::conj(c) : std::conj(c));
    }
    out.prune();
    return out;
}

double max_coeff_distance(const GrassmannElement& a, const GrassmannElement& b) {
    check_same_registry(a, b);
    double d = 0.0;
    for (const auto& [mask, c] : a.terms()) d = std::max(d, std::abs(c - b.coeff(mask)));
    for (const auto& [mask, c] : b.terms()) d = std::max(d, std::abs(c - a.coeff(mask)));
    return d;
}

namespace {

std::string format_signed(double v) {
    char buf[48];
    // Shortest precision that round-trips the value exactly.
    for (int prec = 12; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%+.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string s(buf);
    if (s.find_first_of(".einm") == std::string::npos) s += ".0";  // integral value: force ".0"
    return s;
}

}  // namespace

std::string to_string(const GrassmannElement& x) {
    if (x.is_zero()) return "0";
    std::vector<std::pair<std::uint64_t, complexd>> terms(x.terms().begin(), x.terms().end());
    std::stable_sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
        const int da = std::popcount(a.first), db = std::popcount(b.first);
        return da != db ? da < db : a.first < b.first;
    });
    std::string out;
    const auto& reg = *x.registry();
    for (std::size_t t = 0; t < terms.size(); ++t) {
        if (t) out += " + ";
        out += "(" + format_signed(terms[t].second.real()) + format_signed(terms[t].second.imag()) + "i)";
        if (terms[t].first) {
            out += "·";
            for (int i = 0; i < 64; ++i)
                if (terms[t].first & (std::uint64_t{1} << i)) out += reg.label(i);
        }
    }
    return out;
}

GrassmannElement parse(const RegistryPtr& reg, std::string_view text) {
    if (!reg) throw std::invalid_argument("null registry");
    GrassmannElement out(reg);
    if (text == "0") return out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text[pos] != '(')
            throw std::invalid_argument("parse: expected '(' at position " + std::to_string(pos));
        const std::size_t close = text.find(')', pos);
        if (close == std::string_view::npos) throw std::invalid_argument("parse: unterminated coefficient");
        const std::string coeff(text.substr(pos + 1, close - pos - 1));
        char* end = nullptr;
        const double re = std::strtod(coeff.c_str(), &end);
        const double im = std::strtod(end, &end);
        if (end == nullptr || *end != 'i')
            throw std::invalid_argument("parse: malformed coefficient '" + coeff + "'");
        pos = close + 1;
        GrassmannElement term = GrassmannElement::scalar(reg, complexd(re, im));
        if (text.substr(pos, 2) == "·") {
            pos += 2;
            while (pos < text.size() && text.substr(pos, 3) != " + ") {
                // Greedy longest-match against registered labels.
                int best = -1;
                std::size_t best_len = 0;
                for (int i = 0; i < reg->count(); ++i) {
                    const std::string& lab = reg->label(i);
                    if (lab.size() > best_len && text.substr(pos, lab.size()) == lab) {
                        best = i;
                        best_len = lab.size();
                    }
                }
                if (best < 0)
                    throw std::invalid_argument("parse: unknown generator at position " + std::to_string(pos));
                term *= GrassmannElement::generator(reg, best);
                pos += best_len;
            }
        }
        out += term;
        if (text.substr(pos, 3) == " + ") pos += 3;
        else if (pos != text.size())
            throw std::invalid_argument("parse: expected ' + ' at position " + std::to_string(pos));
    }
    return out;
}

}  // namespace cfq::grassmann
