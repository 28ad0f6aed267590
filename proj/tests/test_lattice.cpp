#include "cfq/lattice.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include "cfq/constraints.hpp"

using namespace cfq;
using namespace cfq::lattice;
using propagators::KernelContext;

namespace {

FockOperator number_sum(const fock::HilbertSpec& spec, double scale) {
    fock::OperatorPolynomial poly;
    for (int i = 1; i <= spec.n_fermions; ++i)
        poly.terms.push_back({{scale, 0.0}, {i}, {i}, {}, {}});
    return fock::realize(poly, spec);
}

fock::OperatorPolynomial number_sum_poly(int n, double scale, double level) {
    fock::OperatorPolynomial poly;
    for (int i = 1; i <= n; ++i) poly.terms.push_back({{scale, 0.0}, {i}, {i}, {}, {}});
    if (level != 0.0) poly.terms.push_back({{-level, 0.0}, {}, {}, {}, {}});
    return poly;
}

fock::OperatorPolynomial empty_or_full_poly(int n) {
    fock::OperatorPolynomial poly;
    poly.terms.push_back({{1.0, 0.0}, {}, {}, {}, {}});
    for (int i = 1; i <= n; ++i) poly.terms.push_back({{-1.0, 0.0}, {i}, {i}, {}, {}});
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            poly.terms.push_back({{-1.0, 0.0}, {i, j}, {i, j}, {}, {}});
    return poly;
}

// Reference-pair sector data; adds the theta modes to the context registry.
SectorModel shifted_sector(const KernelContext& ctx, double omega, bool even_sector) {
    const coherent::ModeSet theta = coherent::add_conjugate_modes(*ctx.reg, "θ", 1, "");
    Eigen::MatrixXcd number(2, 2);
    number << 0.0, 0.0, 0.0, omega;
    const coherent::SymbolicOperator hsym =
        coherent::SymbolicOperator::from_numeric(ctx.reg, number);
    if (even_sector) {
        const coherent::CoherentVector ket = coherent::coherent_ket(ctx.reg, theta);
        const coherent::CoherentVector bra = coherent::coherent_bra(ctx.reg, theta);
        const coherent::SymbolicOperator e = coherent::SymbolicOperator::outer(ket, bra);
        return {e, propagators::reduced_hamiltonian(e, hsym, bra, ket)};
    }
    const coherent::CoherentVector ket = coherent::odd_coherent_ket(ctx.reg, theta);
    const coherent::CoherentVector bra = coherent::odd_coherent_bra(ctx.reg, theta);
    const coherent::SymbolicOperator e = coherent::SymbolicOperator::outer(ket, bra);
    return {e, propagators::reduced_hamiltonian(e, hsym, bra, ket)};
}

}  // namespace

TEST_CASE("short time kernel reduces to the overlap") {
    auto reg = std::make_shared<grassmann::GeneratorRegistry>();
    const coherent::ModeSet a = coherent::add_conjugate_modes(*reg, "ψ", 2, "a");
    const coherent::ModeSet b = coherent::add_conjugate_modes(*reg, "ψ", 2, "b");
    const GrassmannElement overlap = short_time_overlap(reg, a, b);

    const fock::OperatorPolynomial h = number_sum_poly(2, 1.3, 0.0);
    const fock::OperatorPolynomial phi = number_sum_poly(2, 1.0, 1.0);

    SECTION("no Hamiltonian") {
        const fock::OperatorPolynomial none;
        CHECK(grassmann::max_coeff_distance(short_time_kernel(reg, a, b, none, 0.3), overlap) <
              1e-14);
    }
    SECTION("zero step") {
        CHECK(grassmann::max_coeff_distance(short_time_kernel(reg, a, b, h, 0.0, 0.7, &phi),
                                            overlap) < 1e-14);
    }
    SECTION("multiplier without constraint polynomial") {
        CHECK_THROWS_AS(short_time_kernel(reg, a, b, h, 0.1, 0.5, nullptr),
                        std::invalid_argument);
    }
}

TEST_CASE("convolution removes the shared slice") {
    auto reg = std::make_shared<grassmann::GeneratorRegistry>();
    const coherent::ModeSet out = coherent::add_conjugate_modes(*reg, "ψ", 2, "″");
    const coherent::ModeSet mid = coherent::add_conjugate_modes(*reg, "ψ", 2, "°");
    const coherent::ModeSet in = coherent::add_conjugate_modes(*reg, "ψ", 2, "′");

    const GrassmannElement glued =
        convolve(short_time_overlap(reg, out, mid), short_time_overlap(reg, mid, in), mid);
    CHECK(grassmann::max_coeff_distance(glued, short_time_overlap(reg, out, in)) < 1e-14);

    SECTION("absent slice is rejected") {
        const coherent::ModeSet spare = coherent::add_conjugate_modes(*reg, "ψ", 2, "ˢ");
        CHECK_THROWS_AS(convolve(short_time_overlap(reg, out, mid),
                                 short_time_overlap(reg, mid, in), spare),
                        std::invalid_argument);
    }
}

TEST_CASE("single occupancy lattice kernel is slice-count independent") {
    const fock::HilbertSpec spec{2, 0, 0};
    const FockOperator e = constraints::project_group_average(
        {fock::realize(number_sum_poly(2, 1.0, 1.0), spec)});
    const fock::OperatorPolynomial none;
    const KernelContext frame = propagators::make_kernel_context(2);
    const GrassmannElement closed =
        propagators::closed_form_two_mode_single_occupancy(frame, 1.0, 0.0);

    GrassmannElement first(frame.reg);
    for (int n_slices = 1; n_slices <= 8; ++n_slices) {
        LatticePlan plan;
        plan.n_slices = n_slices;
        plan.t = 0.7;
        const GrassmannElement k = lattice_kernel_first_class(e, none, plan, frame);
        CHECK(grassmann::max_coeff_distance(k, closed) < propagators::route_tolerance);
        if (n_slices == 1) first = k;
    }
    LatticePlan plan;
    plan.n_slices = 5;
    plan.t = 0.7;
    CHECK(grassmann::max_coeff_distance(lattice_kernel_first_class(e, none, plan, frame), first) <
          1e-15);
}

TEST_CASE("partial fill lattice kernel matches the projector kernel") {
    const fock::HilbertSpec spec{3, 0, 0};
    const FockOperator e =
        constraints::project_group_average({fock::realize(empty_or_full_poly(3), spec)});
    const fock::OperatorPolynomial none;
    const KernelContext frame = propagators::make_kernel_context(3);
    const GrassmannElement closed =
        propagators::closed_form_three_mode_partial_fill(frame, 1.0, 0.0);

    for (int n_slices : {1, 2, 4, 8}) {
        LatticePlan plan;
        plan.n_slices = n_slices;
        plan.t = 1.1;
        CHECK(grassmann::max_coeff_distance(lattice_kernel_first_class(e, none, plan, frame),
                                            closed) < propagators::route_tolerance);
    }
}

TEST_CASE("per-slice insertion lattice is exact for the shifted pair") {
    const double omega = 1.7, t = 0.9;
    const KernelContext frame = propagators::make_kernel_context(1);
    const coherent::ModeSet theta = coherent::add_conjugate_modes(*frame.reg, "θ", 1, "");

    SECTION("even sector at every slice count") {
        const GrassmannElement closed =
            propagators::closed_form_shifted_even_sector(frame, theta, omega, t);
        for (int n_slices = 1; n_slices <= 8; ++n_slices) {
            LatticePlan plan;
            plan.n_slices = n_slices;
            plan.t = t;
            const GrassmannElement k = lattice_kernel_second_class(
                [&](const KernelContext& run) { return shifted_sector(run, omega, true); }, plan,
                frame);
            CHECK(grassmann::max_coeff_distance(k, closed) < propagators::route_tolerance);
        }
    }
    SECTION("odd sector") {
        const GrassmannElement closed =
            propagators::closed_form_shifted_odd_sector(frame, theta, omega, t);
        for (int n_slices : {1, 4}) {
            LatticePlan plan;
            plan.n_slices = n_slices;
            plan.t = t;
            const GrassmannElement k = lattice_kernel_second_class(
                [&](const KernelContext& run) { return shifted_sector(run, omega, false); }, plan,
                frame);
            CHECK(grassmann::max_coeff_distance(k, closed) < propagators::route_tolerance);
        }
    }
}

TEST_CASE("exact multiplier phases leave the kernel unchanged") {
    const fock::HilbertSpec spec{2, 0, 0};
    const fock::OperatorPolynomial phi_poly = number_sum_poly(2, 1.0, 1.0);
    const FockOperator e = constraints::project_group_average({fock::realize(phi_poly, spec)});
    const fock::OperatorPolynomial none;
    const KernelContext frame = propagators::make_kernel_context(2);

    LatticePlan bare;
    bare.n_slices = 3;
    bare.t = 0.9;
    const GrassmannElement reference = lattice_kernel_first_class(e, none, bare, frame);

    LatticePlan driven = bare;
    driven.multipliers = MultiplierStyle::exact_phase;
    driven.eta = {0.7, -1.3, 0.4};
    const GrassmannElement k = lattice_kernel_first_class(e, none, driven, frame, &phi_poly);
    CHECK(grassmann::max_coeff_distance(k, reference) < propagators::route_tolerance);
    CHECK(grassmann::max_coeff_distance(
              k, propagators::closed_form_two_mode_single_occupancy(frame, 1.0, 0.0)) <
          propagators::route_tolerance);
}

TEST_CASE("symbol substitution converges at first order") {
    const fock::HilbertSpec spec{1, 0, 0};
    const FockOperator e = fock::identity(spec);
    const double omega = 1.0, t = 1.0;
    const FockOperator h = number_sum(spec, omega);
    const fock::OperatorPolynomial h_poly = number_sum_poly(1, omega, 0.0);
    const KernelContext frame = propagators::make_kernel_context(1);

    const std::vector<int> sweep{2, 4, 8, 16};
    const TrotterCurve curve =
        trotter_convergence(e, h, h_poly, t, sweep, SliceStyle::symbol, frame);

    REQUIRE(curve.errors.size() == 4);
    for (std::size_t i = 1; i < curve.errors.size(); ++i)
        CHECK(curve.errors[i] < curve.errors[i - 1]);
    CHECK(curve.slope > -1.2);
    CHECK(curve.slope < -0.8);
}

TEST_CASE("exact slices erase the lattice error for commuting dynamics") {
    const fock::HilbertSpec spec{2, 0, 0};
    const FockOperator e = constraints::project_group_average(
        {fock::realize(number_sum_poly(2, 1.0, 1.0), spec)});
    const double omega = 1.3, t = 0.8;
    const FockOperator h = number_sum(spec, omega);
    const fock::OperatorPolynomial h_poly = number_sum_poly(2, omega, 0.0);
    const KernelContext frame = propagators::make_kernel_context(2);

    const std::vector<int> sweep{1, 2, 5};
    const TrotterCurve curve = trotter_convergence(e, h, h_poly, t, sweep, SliceStyle::exact, frame);
    for (double err : curve.errors) CHECK(err < propagators::route_tolerance);
    CHECK(curve.slope == 0.0);
}

TEST_CASE("mixed-space lattice reproduces the other kernel routes") {
    propagators::BoseFermiModel model;
    model.n_bosons = 1;
    model.n_fermions = 1;
    model.p = 1;
    model.omega = 0.8;
    model.cutoff = 6;
    const double t = 0.9;

    const KernelContext frame = propagators::make_kernel_context(1);
    const std::vector<complexd> z_out{{0.4, 0.3}};
    const std::vector<complexd> z_in{{-0.2, 0.5}};

    const GrassmannElement quad =
        propagators::bose_fermi_kernel_quadrature(model, z_out, z_in, t, frame);
    for (int n_slices : {1, 3}) {
        const GrassmannElement lat =
            bose_fermi_kernel_lattice(model, z_out, z_in, t, n_slices, frame);
        CHECK(grassmann::max_coeff_distance(lat, quad) < propagators::mixed_route_tolerance);
    }
}

TEST_CASE("lattice plan validation") {
    const fock::HilbertSpec spec{2, 0, 0};
    const fock::OperatorPolynomial phi_poly = number_sum_poly(2, 1.0, 1.0);
    const FockOperator e = constraints::project_group_average({fock::realize(phi_poly, spec)});
    const fock::OperatorPolynomial none;
    const KernelContext frame = propagators::make_kernel_context(2);

    SECTION("schedule length mismatch") {
        LatticePlan plan;
        plan.n_slices = 3;
        plan.t = 0.5;
        plan.eta = {0.1, 0.2};
        CHECK_THROWS_AS(lattice_kernel_first_class(e, none, plan, frame, &phi_poly),
                        std::invalid_argument);
    }
    SECTION("schedule without constraint polynomial") {
        LatticePlan plan;
        plan.n_slices = 2;
        plan.t = 0.5;
        plan.eta = {0.1, 0.2};
        CHECK_THROWS_AS(lattice_kernel_first_class(e, none, plan, frame), std::invalid_argument);
    }
    SECTION("multipliers on the per-slice insertion route") {
        LatticePlan plan;
        plan.n_slices = 2;
        plan.t = 0.5;
        plan.eta = {0.1, 0.2};
        CHECK_THROWS_AS(
            lattice_kernel_second_class(
                [&](const KernelContext& run) { return shifted_sector(run, 1.0, true); }, plan,
                frame),
            std::invalid_argument);
    }
    SECTION("frame with foreign labels") {
        KernelContext foreign;
        foreign.reg = std::make_shared<grassmann::GeneratorRegistry>();
        foreign.out_modes = coherent::add_conjugate_modes(*foreign.reg, "φ", 2, "″");
        foreign.in_modes = coherent::add_conjugate_modes(*foreign.reg, "φ", 2, "′");
        foreign.bra = coherent::coherent_bra(foreign.reg, foreign.out_modes);
        foreign.ket = coherent::coherent_ket(foreign.reg, foreign.in_modes);
        foreign.spec = fock::HilbertSpec{2, 0, 0};
        LatticePlan plan;
        plan.n_slices = 1;
        plan.t = 0.5;
        CHECK_THROWS_AS(lattice_kernel_first_class(e, none, plan, foreign),
                        std::invalid_argument);
    }
}
