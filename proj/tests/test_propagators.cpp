#include "cfq/propagators.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "cfq/constraints.hpp"

using namespace cfq;
using namespace cfq::propagators;

namespace {

const complexd I{0.0, 1.0};

FockOperator number_sum(const fock::HilbertSpec& spec, double scale) {
    fock::OperatorPolynomial poly;
    for (int i = 1; i <= spec.n_fermions; ++i)
        poly.terms.push_back({{scale, 0.0}, {i}, {i}, {}, {}});
    return fock::realize(poly, spec);
}

// sum n_i - 1 on two modes: vanishes exactly on the single-occupancy states.
FockOperator single_occupancy_constraint(const fock::HilbertSpec& spec) {
    fock::OperatorPolynomial poly;
    for (int i = 1; i <= spec.n_fermions; ++i)
        poly.terms.push_back({{1.0, 0.0}, {i}, {i}, {}, {}});
    poly.terms.push_back({{-1.0, 0.0}, {}, {}, {}, {}});
    return fock::realize(poly, spec);
}

// 1 - sum n_i + sum_{i<j} n_i n_j: 1 on the empty and full states, 0 elsewhere.
FockOperator empty_or_full_projector(const fock::HilbertSpec& spec) {
    fock::OperatorPolynomial poly;
    poly.terms.push_back({{1.0, 0.0}, {}, {}, {}, {}});
    const int n = spec.n_fermions;
    for (int i = 1; i <= n; ++i) poly.terms.push_back({{-1.0, 0.0}, {i}, {i}, {}, {}});
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            poly.terms.push_back({{-1.0, 0.0}, {i, j}, {i, j}, {}, {}});
    return fock::realize(poly, spec);
}

GrassmannElement gen(const RegistryPtr& reg, int idx) {
    return GrassmannElement::generator(reg, idx);
}

GrassmannElement overlap_element(const KernelContext& ctx) {
    GrassmannElement q(ctx.reg);
    for (int i = 0; i < ctx.out_modes.n; ++i) {
        q += complexd{-0.5} * (gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.out_modes.psi[i]));
        q += complexd{-0.5} * (gen(ctx.reg, ctx.in_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]));
        q += gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]);
    }
    return q.exp_even();
}

GrassmannElement gaussian_element(const KernelContext& ctx) {
    GrassmannElement q(ctx.reg);
    for (int i = 0; i < ctx.out_modes.n; ++i) {
        q += complexd{-0.5} * (gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.out_modes.psi[i]));
        q += complexd{-0.5} * (gen(ctx.reg, ctx.in_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]));
    }
    return q.exp_even();
}

GrassmannElement cross(const KernelContext& ctx, int i) {
    return gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]);
}

}  // namespace

TEST_CASE("two mode single occupancy kernel matches the closed form") {
    const fock::HilbertSpec spec{2, 0, 0};
    const double omega = 1.3;
    const FockOperator e = constraints::project_group_average({single_occupancy_constraint(spec)});
    CHECK(constraints::certify_projector(e).rank == 2);
    const FockOperator h = number_sum(spec, omega);

    const KernelContext ctx = make_kernel_context(2);
    for (double t : {0.0, 0.7, 3.1}) {
        const GrassmannElement lhs = kernel_operator_route(e, h, t, ctx);
        const GrassmannElement rhs = closed_form_two_mode_single_occupancy(ctx, omega, t);
        CHECK(grassmann::max_coeff_distance(lhs, rhs) < route_tolerance);
    }
}

TEST_CASE("three mode partial fill kernel matches the closed form") {
    const fock::HilbertSpec spec{3, 0, 0};
    const double omega = 0.9;
    // The physical subspace excludes the empty and full states.
    const FockOperator e = constraints::project_group_average({empty_or_full_projector(spec)});
    CHECK(constraints::certify_projector(e).rank == 6);
    const FockOperator h = number_sum(spec, omega);

    const KernelContext ctx = make_kernel_context(3);
    for (double t : {0.0, 1.2, 2.5}) {
        const GrassmannElement lhs = kernel_operator_route(e, h, t, ctx);
        const GrassmannElement rhs = closed_form_three_mode_partial_fill(ctx, omega, t);
        CHECK(grassmann::max_coeff_distance(lhs, rhs) < route_tolerance);
    }

    SECTION("the overlap-prefactor rewriting is the same element") {
        GrassmannElement single(ctx.reg), doubles(ctx.reg);
        for (int i = 0; i < 3; ++i) single += cross(ctx, i);
        const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
        for (auto [i, j] : pairs) doubles += cross(ctx, i) * cross(ctx, j);
        const GrassmannElement rewritten = overlap_element(ctx) * (single - doubles);
        CHECK(grassmann::max_coeff_distance(rewritten,
                                            closed_form_three_mode_partial_fill(ctx, omega, 0.0)) <
              route_tolerance);
    }
}

TEST_CASE("shifted ladder pair reduces the Hamiltonian to sector multiples") {
    const double omega = 1.7;
    const KernelContext ctx = make_kernel_context(1);
    const coherent::ModeSet theta = coherent::add_conjugate_modes(*ctx.reg, "θ", 1, "");

    const coherent::CoherentVector tket = coherent::coherent_ket(ctx.reg, theta);
    const coherent::CoherentVector tbra = coherent::coherent_bra(ctx.reg, theta);
    const coherent::CoherentVector oket = coherent::odd_coherent_ket(ctx.reg, theta);
    const coherent::CoherentVector obra = coherent::odd_coherent_bra(ctx.reg, theta);
    const SymbolicOperator ea = SymbolicOperator::outer(tket, tbra);
    const SymbolicOperator eb = SymbolicOperator::outer(oket, obra);

    Eigen::MatrixXcd number(2, 2);
    number << 0.0, 0.0, 0.0, omega;
    const SymbolicOperator hsym = SymbolicOperator::from_numeric(ctx.reg, number);

    const GrassmannElement pair_tt = gen(ctx.reg, theta.bar[0]) * gen(ctx.reg, theta.psi[0]);
    const GrassmannElement ha = reduced_hamiltonian(ea, hsym, tbra, tket);
    CHECK(grassmann::max_coeff_distance(ha, complexd{omega} * pair_tt) < route_tolerance);
    const GrassmannElement hb = reduced_hamiltonian(eb, hsym, obra, oket);
    CHECK(grassmann::max_coeff_distance(
              hb, GrassmannElement::scalar(ctx.reg, omega) + complexd{omega} * pair_tt) <
          route_tolerance);

    for (double t : {0.0, 0.8}) {
        const GrassmannElement ka = kernel_rank_one_route(ea, ha, t, ctx);
        CHECK(grassmann::max_coeff_distance(
                  ka, closed_form_shifted_even_sector(ctx, theta, omega, t)) < route_tolerance);
        const GrassmannElement kb = kernel_rank_one_route(eb, hb, t, ctx);
        CHECK(grassmann::max_coeff_distance(
                  kb, closed_form_shifted_odd_sector(ctx, theta, omega, t)) < route_tolerance);
    }

    SECTION("sector kernels at zero time sum to the overlap") {
        const GrassmannElement total =
            kernel_rank_one_route(ea, ha, 0.0, ctx) + kernel_rank_one_route(eb, hb, 0.0, ctx);
        CHECK(grassmann::max_coeff_distance(total, overlap_element(ctx)) < route_tolerance);
    }
}

TEST_CASE("balanced difference sector kernels match both displayed forms") {
    const fock::HilbertSpec spec{2, 0, 0};
    fock::OperatorPolynomial poly;
    const double r = 1.0 / std::sqrt(2.0);
    poly.terms.push_back({{r, 0.0}, {}, {1}, {}, {}});
    poly.terms.push_back({{-r, 0.0}, {}, {2}, {}, {}});
    const FockOperator chi = fock::realize(poly, spec);
    const constraints::OddPairProjectors sectors = constraints::project_odd_pair(chi);

    const KernelContext ctx = make_kernel_context(2);
    const FockOperator h0{spec, fock::Matrix::Zero(4, 4), fock::OpParity::even};

    const GrassmannElement ka = kernel_operator_route(sectors.e_a, h0, 0.6, ctx);
    CHECK(grassmann::max_coeff_distance(ka, closed_form_balanced_difference_even(ctx)) <
          route_tolerance);
    const GrassmannElement kb = kernel_operator_route(sectors.e_b, h0, 0.6, ctx);
    CHECK(grassmann::max_coeff_distance(kb, closed_form_balanced_difference_odd(ctx)) <
          route_tolerance);
    CHECK(grassmann::max_coeff_distance(ka + kb, overlap_element(ctx)) < route_tolerance);

    SECTION("the symmetric-combination rewriting is the same element") {
        const GrassmannElement sum_pair =
            (gen(ctx.reg, ctx.out_modes.bar[0]) + gen(ctx.reg, ctx.out_modes.bar[1])) *
            (gen(ctx.reg, ctx.in_modes.psi[0]) + gen(ctx.reg, ctx.in_modes.psi[1]));
        const GrassmannElement rewritten =
            gaussian_element(ctx) *
            (GrassmannElement::scalar(ctx.reg, 1.0) + complexd{0.5} * sum_pair);
        CHECK(grassmann::max_coeff_distance(rewritten, closed_form_balanced_difference_even(ctx)) <
              route_tolerance);
    }
}

TEST_CASE("mixed boson fermion kernel agrees across all three routes") {
    const double t = 0.9;
    for (int p : {-1, 0, 1}) {
        BoseFermiModel model;
        model.n_bosons = 1;
        model.n_fermions = 1;
        model.p = p;
        model.omega = 0.8;
        model.cutoff = 8;

        const FockOperator h = bose_fermi_hamiltonian(model);
        const FockOperator phi = bose_fermi_constraint(model);
        const FockOperator e = constraints::project_group_average({phi});
        const FockOperator u = constrained_evolution(e, h, t);

        const KernelContext ctx = make_kernel_context(1);
        const std::vector<complexd> z_out{{0.4, 0.3}};
        const std::vector<complexd> z_in{{-0.2, 0.5}};

        const GrassmannElement a = mixed_kernel_operator_route(u, z_out, z_in, ctx);
        const GrassmannElement b = bose_fermi_kernel_quadrature(model, z_out, z_in, t, ctx);
        const GrassmannElement c = bose_fermi_kernel_mode_sum(model, z_out, z_in, t, ctx);
        CHECK(grassmann::max_coeff_distance(a, b) < mixed_route_tolerance);
        CHECK(grassmann::max_coeff_distance(b, c) < mixed_route_tolerance);
        CHECK(grassmann::max_coeff_distance(a, c) < mixed_route_tolerance);
    }
}

TEST_CASE("mixed kernel routes agree for two modes of each kind") {
    BoseFermiModel model;
    model.n_bosons = 2;
    model.n_fermions = 2;
    model.p = 1;
    model.omega = 1.1;
    model.cutoff = 5;
    const double t = 0.45;

    const FockOperator h = bose_fermi_hamiltonian(model);
    const FockOperator e = constraints::project_group_average({bose_fermi_constraint(model)});
    const FockOperator u = constrained_evolution(e, h, t);

    const KernelContext ctx = make_kernel_context(2);
    const std::vector<complexd> z_out{{0.3, -0.2}, {0.1, 0.6}};
    const std::vector<complexd> z_in{{-0.5, 0.1}, {0.2, 0.2}};

    const GrassmannElement a = mixed_kernel_operator_route(u, z_out, z_in, ctx);
    const GrassmannElement b = bose_fermi_kernel_quadrature(model, z_out, z_in, t, ctx);
    const GrassmannElement c = bose_fermi_kernel_mode_sum(model, z_out, z_in, t, ctx);
    CHECK(grassmann::max_coeff_distance(a, b) < mixed_route_tolerance);
    CHECK(grassmann::max_coeff_distance(a, c) < mixed_route_tolerance);
}

TEST_CASE("kernels compose under the coherent measure") {
    const fock::HilbertSpec spec{2, 0, 0};
    const double omega = 1.3, t1 = 0.4, t2 = 0.9;
    const FockOperator e = constraints::project_group_average({single_occupancy_constraint(spec)});
    const FockOperator h = number_sum(spec, omega);

    auto reg = std::make_shared<grassmann::GeneratorRegistry>();
    const coherent::ModeSet out = coherent::add_conjugate_modes(*reg, "ψ", 2, "″");
    const coherent::ModeSet mid = coherent::add_conjugate_modes(*reg, "ψ", 2, "°");
    const coherent::ModeSet in = coherent::add_conjugate_modes(*reg, "ψ", 2, "′");

    const GrassmannElement k1 = coherent::matrix_element(
        coherent::coherent_bra(reg, out), constrained_evolution(e, h, t1),
        coherent::coherent_ket(reg, mid));
    const GrassmannElement k2 = coherent::matrix_element(
        coherent::coherent_bra(reg, mid), constrained_evolution(e, h, t2),
        coherent::coherent_ket(reg, in));
    const GrassmannElement joined = coherent::matrix_element(
        coherent::coherent_bra(reg, out), constrained_evolution(e, h, t1 + t2),
        coherent::coherent_ket(reg, in));

    const std::vector<int> measure = coherent::measure_indices(mid);
    const GrassmannElement glued = (k1 * k2).integrate(std::span<const int>{measure});
    CHECK(grassmann::max_coeff_distance(glued, joined) < route_tolerance);
}

TEST_CASE("kernel conjugation swaps the label families and reverses time") {
    const fock::HilbertSpec spec{2, 0, 0};
    const double omega = 1.3, t = 0.7;
    const FockOperator e = constraints::project_group_average({single_occupancy_constraint(spec)});
    const FockOperator h = number_sum(spec, omega);

    const KernelContext ctx = make_kernel_context(2);
    const GrassmannElement k = kernel_operator_route(e, h, t, ctx);

    const GrassmannElement reversed = coherent::matrix_element(
        coherent::coherent_bra(ctx.reg, ctx.in_modes), constrained_evolution(e, h, -t),
        coherent::coherent_ket(ctx.reg, ctx.out_modes));
    CHECK(grassmann::max_coeff_distance(k.involute(), reversed) < route_tolerance);
}

TEST_CASE("route guards reject malformed inputs") {
    const fock::HilbertSpec spec{2, 0, 0};
    const FockOperator h = number_sum(spec, 1.0);

    SECTION("non-projector argument") {
        const FockOperator bad{spec, 2.0 * fock::Matrix::Identity(4, 4), fock::OpParity::even};
        CHECK_THROWS(constrained_evolution(bad, h, 1.0));
    }

    SECTION("non-self-adjoint Hamiltonian") {
        const FockOperator e =
            constraints::project_group_average({single_occupancy_constraint(spec)});
        fock::Matrix skew = fock::Matrix::Zero(4, 4);
        skew(0, 1) = complexd{1.0, 0.0};
        CHECK_THROWS_AS(
            constrained_evolution(e, FockOperator{spec, skew, fock::OpParity::none}, 1.0),
            std::invalid_argument);
    }

    SECTION("projector that does not reduce the Hamiltonian to rank one") {
        fock::OperatorPolynomial poly;
        const double r = 1.0 / std::sqrt(2.0);
        poly.terms.push_back({{r, 0.0}, {}, {1}, {}, {}});
        poly.terms.push_back({{-r, 0.0}, {}, {2}, {}, {}});
        const constraints::OddPairProjectors sectors =
            constraints::project_odd_pair(fock::realize(poly, spec));

        const KernelContext ctx = make_kernel_context(2);
        const SymbolicOperator ea =
            SymbolicOperator::from_numeric(ctx.reg, sectors.e_a.matrix);
        fock::OperatorPolynomial n1;
        n1.terms.push_back({{1.0, 0.0}, {1}, {1}, {}, {}});
        const SymbolicOperator hsym =
            SymbolicOperator::from_numeric(ctx.reg, fock::realize(n1, spec).matrix);
        CHECK_THROWS_AS(reduced_hamiltonian(ea, hsym, ctx.bra, ctx.ket), std::runtime_error);
    }

    SECTION("mismatched boson label count") {
        BoseFermiModel model;
        const FockOperator u = fock::identity(model.spec());
        const KernelContext ctx = make_kernel_context(1);
        CHECK_THROWS_AS(mixed_kernel_operator_route(u, {}, {}, ctx), std::invalid_argument);
    }
}
