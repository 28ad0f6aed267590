#include "cfq/coherent.hpp"

#include <catch_amalgamated.hpp>

#include <complex>
#include <memory>
#include <random>

using namespace cfq;
using namespace cfq::coherent;
using grassmann::GeneratorRegistry;
using grassmann::GrassmannElement;

namespace {

const complexd I{0.0, 1.0};

RegistryPtr make_registry() { return std::make_shared<GeneratorRegistry>(); }

GrassmannElement gen(const RegistryPtr& reg, int idx) {
    return GrassmannElement::generator(reg, idx);
}

// prod over modes of exp(-psibar psi / 2) (sign = -1) or exp(+.. / 2).
GrassmannElement gauss(const RegistryPtr& reg, const ModeSet& m, double sign) {
    GrassmannElement q(reg);
    for (int i = 0; i < m.n; ++i)
        q += complexd{0.5 * sign} * (gen(reg, m.bar[i]) * gen(reg, m.psi[i]));
    return q.exp_even();
}

double state_distance(const CoherentVector& a, const CoherentVector& b) {
    REQUIRE(a.amp.size() == b.amp.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.amp.size(); ++i)
        worst = std::max(worst, grassmann::max_coeff_distance(a.amp[i], b.amp[i]));
    return worst;
}

// Random numeric matrix supported on one parity sector of the 2^n basis.
Eigen::MatrixXcd random_parity_matrix(int n, int parity, std::mt19937& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const long long d = 1LL << n;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (long long b = 0; b < d; ++b)
        for (long long c = 0; c < d; ++c)
            if (((std::popcount(static_cast<std::uint64_t>(b)) +
                  std::popcount(static_cast<std::uint64_t>(c))) &
                 1) == parity)
                m(b, c) = complexd{u(rng), u(rng)};
    return m;
}

}  // namespace

TEST_CASE("ket and bra amplitude tables carry the transport signs") {
    auto reg = make_registry();
    ModeSet m = add_conjugate_modes(*reg, "ψ", 2, "");
    const GrassmannElement g = gauss(reg, m, -1.0);
    const GrassmannElement p1 = gen(reg, m.psi[0]), p2 = gen(reg, m.psi[1]);
    const GrassmannElement b1 = gen(reg, m.bar[0]), b2 = gen(reg, m.bar[1]);

    CoherentVector ket = coherent_ket(reg, m);
    CHECK(grassmann::max_coeff_distance(ket.amp[0], g) == 0.0);
    CHECK(grassmann::max_coeff_distance(ket.amp[1], -(p1 * g)) == 0.0);
    CHECK(grassmann::max_coeff_distance(ket.amp[2], -(p2 * g)) == 0.0);
    CHECK(grassmann::max_coeff_distance(ket.amp[3], -(p1 * p2 * g)) == 0.0);

    CoherentVector bra = coherent_bra(reg, m);
    CHECK(grassmann::max_coeff_distance(bra.amp[0], g) == 0.0);
    CHECK(grassmann::max_coeff_distance(bra.amp[1], b1 * g) == 0.0);
    CHECK(grassmann::max_coeff_distance(bra.amp[2], b2 * g) == 0.0);
    CHECK(grassmann::max_coeff_distance(bra.amp[3], -(b1 * b2 * g)) == 0.0);
}

TEST_CASE("overlap of two coherent states matches the exponential form") {
    for (int n = 1; n <= 3; ++n) {
        auto reg = make_registry();
        ModeSet out = add_conjugate_modes(*reg, "ψ", n, "″");
        ModeSet in = add_conjugate_modes(*reg, "ψ", n, "′");

        const GrassmannElement overlap = pairing(coherent_bra(reg, out), coherent_ket(reg, in));

        GrassmannElement expo(reg);
        for (int i = 0; i < n; ++i) {
            expo += complexd{-0.5} * (gen(reg, out.bar[i]) * gen(reg, out.psi[i]));
            expo += complexd{-0.5} * (gen(reg, in.bar[i]) * gen(reg, in.psi[i]));
            expo += gen(reg, out.bar[i]) * gen(reg, in.psi[i]);
        }
        CHECK(grassmann::max_coeff_distance(overlap, expo.exp_even()) == 0.0);
    }
}

TEST_CASE("coherent states diagonalize the ladder operators") {
    const int n = 3;
    auto reg = make_registry();
    ModeSet m = add_conjugate_modes(*reg, "ψ", n, "");
    fock::HilbertSpec spec{n, 0, 0};
    auto fops = fock::build_fermion_ops(spec);

    CoherentVector ket = coherent_ket(reg, m);
    CoherentVector bra = coherent_bra(reg, m);

    for (int i = 0; i < n; ++i) {
        // f_i |Psi> = psi_i |Psi> with the eigenvalue written on the left.
        CoherentVector lhs = apply(fops[i].first, ket);
        CoherentVector rhs = ket;
        for (auto& a : rhs.amp) a = gen(reg, m.psi[i]) * a;
        CHECK(state_distance(lhs, rhs) == 0.0);

        // <Psi| f_i^+ = <Psi| psibar_i; the right-side eigenvalue transported
        // through <b| picks up (-1)^(k_b).
        CoherentVector blhs = apply_bra(bra, fops[i].second);
        CoherentVector brhs = bra;
        for (std::size_t b = 0; b < brhs.amp.size(); ++b)
            brhs.amp[b] = brhs.amp[b] * twist(gen(reg, m.bar[i]), std::popcount(b));
        CHECK(state_distance(blhs, brhs) == 0.0);
    }
}

TEST_CASE("bra application is the adjoint of ket application") {
    const int n = 2;
    std::mt19937 rng(2024);
    auto reg = make_registry();
    ModeSet out = add_conjugate_modes(*reg, "ψ", n, "″");
    ModeSet in = add_conjugate_modes(*reg, "ψ", n, "′");
    CoherentVector bra = coherent_bra(reg, out);
    CoherentVector ket = coherent_ket(reg, in);

    for (int parity = 0; parity < 2; ++parity)
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::MatrixXcd a = random_parity_matrix(n, parity, rng);
            const fock::OpParity p = parity ? fock::OpParity::odd : fock::OpParity::even;
            const GrassmannElement via_ket = pairing(bra, apply(a, p, ket));
            const GrassmannElement via_bra = pairing(apply_bra(bra, a), ket);
            CHECK(grassmann::max_coeff_distance(via_ket, via_bra) < 1e-13);
        }
}

TEST_CASE("operator products act associatively on coherent states") {
    const int n = 2;
    std::mt19937 rng(77);
    auto reg = make_registry();
    ModeSet in = add_conjugate_modes(*reg, "ψ", n, "′");
    CoherentVector ket = coherent_ket(reg, in);

    for (int pa = 0; pa < 2; ++pa)
        for (int pb = 0; pb < 2; ++pb)
            for (int trial = 0; trial < 5; ++trial) {
                const Eigen::MatrixXcd a = random_parity_matrix(n, pa, rng);
                const Eigen::MatrixXcd b = random_parity_matrix(n, pb, rng);
                const auto pA = pa ? fock::OpParity::odd : fock::OpParity::even;
                const auto pB = pb ? fock::OpParity::odd : fock::OpParity::even;
                const auto pAB = (pa ^ pb) ? fock::OpParity::odd : fock::OpParity::even;
                CoherentVector stepwise = apply(a, pA, apply(b, pB, ket));
                CoherentVector combined = apply((a * b).eval(), pAB, ket);
                CHECK(state_distance(stepwise, combined) < 1e-13);
            }
}

TEST_CASE("coherent projector integrates to the identity") {
    for (int n = 1; n <= 3; ++n) CHECK(identity_resolution_defect(n) < 1e-14);
}

TEST_CASE("normal ordered polynomials evaluate by symbol substitution") {
    const int n = 2;
    std::mt19937 rng(5150);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> mode(1, n);

    auto reg = make_registry();
    ModeSet out = add_conjugate_modes(*reg, "ψ", n, "″");
    ModeSet in = add_conjugate_modes(*reg, "ψ", n, "′");
    CoherentVector bra = coherent_bra(reg, out);
    CoherentVector ket = coherent_ket(reg, in);
    const GrassmannElement overlap = pairing(bra, ket);
    fock::HilbertSpec spec{n, 0, 0};

    for (int trial = 0; trial < 30; ++trial) {
        fock::OperatorPolynomial poly;
        const bool odd = trial & 1;
        for (int t = 0; t < 3; ++t) {
            fock::PolyTerm term;
            term.coeff = {u(rng), u(rng)};
            // Keep every term in one parity class so the operator is graded.
            const int n_dag = odd ? 1 : (rng() % 2 ? 2 : 0);
            const int n_ann = odd ? (rng() % 2 ? 2 : 0) : (rng() % 2 ? 2 : 0);
            (void)n_ann;
            int total = odd ? 1 : 2;
            for (int q = 0; q < n_dag && total > 0; ++q, --total) term.fdag.push_back(mode(rng));
            while (total-- > 0) term.f.push_back(mode(rng));
            poly.terms.push_back(std::move(term));
        }
        const fock::FockOperator op = fock::realize(poly, spec);
        REQUIRE(op.declared_parity != fock::OpParity::none);
        const GrassmannElement lhs = matrix_element(bra, op, ket);
        const GrassmannElement rhs = normal_symbol(poly, reg, out, in) * overlap;
        CHECK(grassmann::max_coeff_distance(lhs, rhs) < 1e-13);
    }
}

TEST_CASE("odd partner states complete the single mode pair") {
    auto reg = make_registry();
    ModeSet th = add_conjugate_modes(*reg, "θ", 1, "");
    const GrassmannElement thetabar = gen(reg, th.bar[0]);
    const GrassmannElement theta = gen(reg, th.psi[0]);

    CoherentVector even_ket = coherent_ket(reg, th);
    CoherentVector even_bra = coherent_bra(reg, th);
    CoherentVector odd_ket = odd_coherent_ket(reg, th);
    CoherentVector odd_bra = odd_coherent_bra(reg, th);

    fock::HilbertSpec spec{1, 0, 0};
    auto fops = fock::build_fermion_ops(spec);

    // f^+ has the odd ket as eigenstate, eigenvalue thetabar on the left.
    CoherentVector lhs = apply(fops[0].second, odd_ket);
    CoherentVector rhs = odd_ket;
    for (auto& a : rhs.amp) a = thetabar * a;
    CHECK(state_distance(lhs, rhs) == 0.0);

    // The odd bra diagonalizes f from the right.
    CoherentVector blhs = apply_bra(odd_bra, fops[0].first);
    CoherentVector brhs = odd_bra;
    for (std::size_t b = 0; b < brhs.amp.size(); ++b)
        brhs.amp[b] = brhs.amp[b] * twist(theta, std::popcount(b));
    CHECK(state_distance(blhs, brhs) == 0.0);

    // Orthogonality and normalization of the pair.
    CHECK(pairing(even_bra, odd_ket).is_zero());
    CHECK(pairing(odd_bra, even_ket).is_zero());
    CHECK(grassmann::max_coeff_distance(pairing(odd_bra, odd_ket),
                                        GrassmannElement::scalar(reg, 1.0)) == 0.0);
}

TEST_CASE("outer products of the partner states split the identity") {
    auto reg = make_registry();
    ModeSet th = add_conjugate_modes(*reg, "θ", 1, "");
    const GrassmannElement thetabar = gen(reg, th.bar[0]);
    const GrassmannElement theta = gen(reg, th.psi[0]);
    const GrassmannElement one = GrassmannElement::scalar(reg, 1.0);

    SymbolicOperator ea = SymbolicOperator::outer(coherent_ket(reg, th), coherent_bra(reg, th));
    SymbolicOperator eb = SymbolicOperator::outer(odd_coherent_ket(reg, th), odd_coherent_bra(reg, th));

    // Entry tables, fully expanded.
    SymbolicOperator ea_expect = SymbolicOperator::from_entries(
        reg, 1, {one - thetabar * theta, thetabar, -theta, -(thetabar * theta)});
    SymbolicOperator eb_expect = SymbolicOperator::from_entries(
        reg, 1, {thetabar * theta, -thetabar, theta, one + thetabar * theta});
    CHECK(ea.max_entry_distance(ea_expect) == 0.0);
    CHECK(eb.max_entry_distance(eb_expect) == 0.0);

    SymbolicOperator id = SymbolicOperator::identity(reg, 1);
    CHECK((ea + eb).max_entry_distance(id) == 0.0);

    // Both are idempotent self-adjoint, and annihilate each other.
    CHECK(ea.product(ea).max_entry_distance(ea) == 0.0);
    CHECK(eb.product(eb).max_entry_distance(eb) == 0.0);
    CHECK(ea.adjoint_op().max_entry_distance(ea) == 0.0);
    CHECK(eb.adjoint_op().max_entry_distance(eb) == 0.0);
    CHECK(ea.product(eb).max_entry_distance(id * complexd{0.0}) == 0.0);
}

TEST_CASE("shifted ladder pair generates both projectors") {
    auto reg = make_registry();
    ModeSet th = add_conjugate_modes(*reg, "θ", 1, "");
    const GrassmannElement thetabar = gen(reg, th.bar[0]);
    const GrassmannElement theta = gen(reg, th.psi[0]);
    const GrassmannElement zero(reg);
    const GrassmannElement one = GrassmannElement::scalar(reg, 1.0);

    // chi = f - theta, written as an entry table over the one mode basis.
    SymbolicOperator chi = SymbolicOperator::from_entries(reg, 1, {-theta, one, zero, -theta});
    SymbolicOperator chidag = chi.adjoint_op();
    SymbolicOperator chidag_expect =
        SymbolicOperator::from_entries(reg, 1, {-thetabar, zero, one, -thetabar});
    CHECK(chidag.max_entry_distance(chidag_expect) == 0.0);

    SymbolicOperator ea = SymbolicOperator::outer(coherent_ket(reg, th), coherent_bra(reg, th));
    SymbolicOperator eb = SymbolicOperator::outer(odd_coherent_ket(reg, th), odd_coherent_bra(reg, th));

    CHECK(chi.product(chidag).max_entry_distance(ea) == 0.0);
    CHECK(chidag.product(chi).max_entry_distance(eb) == 0.0);
    // {chi, chi^+} = 1.
    SymbolicOperator anti = chi.product(chidag) + chidag.product(chi);
    CHECK(anti.max_entry_distance(SymbolicOperator::identity(reg, 1)) == 0.0);
}

TEST_CASE("projector matrix elements reproduce the shifted Gaussians") {
    auto reg = make_registry();
    ModeSet th = add_conjugate_modes(*reg, "θ", 1, "");
    ModeSet out = add_conjugate_modes(*reg, "ψ", 1, "″");
    ModeSet in = add_conjugate_modes(*reg, "ψ", 1, "′");
    const GrassmannElement thetabar = gen(reg, th.bar[0]);
    const GrassmannElement theta = gen(reg, th.psi[0]);

    SymbolicOperator ea = SymbolicOperator::outer(coherent_ket(reg, th), coherent_bra(reg, th));
    SymbolicOperator eb = SymbolicOperator::outer(odd_coherent_ket(reg, th), odd_coherent_bra(reg, th));

    // Diagonal elements, same labels on both sides.
    CoherentVector dbra = coherent_bra(reg, in);
    CoherentVector dket = coherent_ket(reg, in);
    const GrassmannElement x =
        (gen(reg, in.bar[0]) - thetabar) * (gen(reg, in.psi[0]) - theta);
    const GrassmannElement ea_diag = pairing(dbra, ea.apply(dket));
    const GrassmannElement eb_diag = pairing(dbra, eb.apply(dket));
    CHECK(grassmann::max_coeff_distance(ea_diag, (-x).exp_even()) == 0.0);
    CHECK(grassmann::max_coeff_distance(eb_diag, x * (-x).exp_even()) == 0.0);
    CHECK(grassmann::max_coeff_distance(ea_diag + eb_diag, pairing(dbra, dket)) == 0.0);

    // Off-diagonal element factorizes through the intermediate state.
    CoherentVector bra2 = coherent_bra(reg, out);
    CoherentVector ket1 = coherent_ket(reg, in);
    const GrassmannElement lhs = pairing(bra2, ea.apply(ket1));
    const GrassmannElement legs =
        pairing(bra2, coherent_ket(reg, th)) * pairing(coherent_bra(reg, th), ket1);
    CHECK(grassmann::max_coeff_distance(lhs, legs) == 0.0);

    const GrassmannElement shifted =
        (gen(reg, out.bar[0]) - thetabar) * (gen(reg, in.psi[0]) - theta);
    const GrassmannElement closed =
        pairing(bra2, coherent_ket(reg, in)) * (-shifted).exp_even();
    CHECK(grassmann::max_coeff_distance(lhs, closed) < 1e-15);
}

TEST_CASE("numeric and symbolic operator application agree") {
    const int n = 2;
    std::mt19937 rng(99);
    auto reg = make_registry();
    ModeSet in = add_conjugate_modes(*reg, "ψ", n, "′");
    CoherentVector ket = coherent_ket(reg, in);

    for (int parity = 0; parity < 2; ++parity) {
        const Eigen::MatrixXcd m = random_parity_matrix(n, parity, rng);
        const auto p = parity ? fock::OpParity::odd : fock::OpParity::even;
        SymbolicOperator sym = SymbolicOperator::from_numeric(reg, m);
        CHECK(sym.parity() == p);
        CHECK(state_distance(sym.apply(ket), apply(m, p, ket)) == 0.0);
        CHECK(fock::max_abs_diff(sym.to_numeric(), m) == 0.0);
    }
}

TEST_CASE("symbolic operator validation rejects broken input") {
    auto reg = make_registry();
    ModeSet th = add_conjugate_modes(*reg, "θ", 1, "");
    const GrassmannElement theta = gen(reg, th.psi[0]);
    const GrassmannElement one = GrassmannElement::scalar(reg, 1.0);
    const GrassmannElement zero(reg);

    // 1 + theta on the diagonal mixes parities.
    CHECK_THROWS_AS(SymbolicOperator::from_entries(reg, 1, {one + theta, zero, zero, zero}),
                    std::invalid_argument);
    CHECK_THROWS_AS(SymbolicOperator::from_entries(reg, 1, {one, zero, zero}),
                    std::invalid_argument);

    Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Ones(2, 2);
    CHECK_THROWS_AS(SymbolicOperator::from_numeric(reg, mixed), std::invalid_argument);
    Eigen::MatrixXcd odd_size = Eigen::MatrixXcd::Identity(3, 3);
    CHECK_THROWS_AS(SymbolicOperator::from_numeric(reg, odd_size), std::invalid_argument);

    SymbolicOperator sym = SymbolicOperator::from_entries(reg, 1, {zero, theta * one, zero, zero});
    CHECK_THROWS_AS(sym.to_numeric(), std::runtime_error);
    CHECK(!sym.is_scalar());
}

TEST_CASE("truncated boson coherent amplitudes reproduce the overlap law") {
    const int n_max = 30;
    const complexd z1{0.6, -0.3}, z2{-0.4, 0.5};
    auto a1 = boson_coherent_amplitudes(z1, n_max);
    auto a2 = boson_coherent_amplitudes(z2, n_max);

    complexd overlap{0.0, 0.0};
    double norm1 = 0.0;
    for (int m = 0; m <= n_max; ++m) {
        overlap += std::conj(a2[m]) * a1[m];
        norm1 += std::norm(a1[m]);
    }
    const complexd expect = std::exp(-0.5 * std::norm(z1) - 0.5 * std::norm(z2) + std::conj(z2) * z1);
    CHECK(std::abs(overlap - expect) < 1e-14);
    CHECK(std::abs(norm1 - 1.0) < 1e-14);
}
