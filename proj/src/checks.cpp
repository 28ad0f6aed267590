#include "cfq/checks.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfq/config.hpp"
#include "cfq/constraints.hpp"
#include "cfq/lattice.hpp"
#include "cfq/propagators.hpp"
#include "cfq/version.hpp"

namespace cfq::checks {
namespace {

using coherent::CoherentVector;
using coherent::ModeSet;
using coherent::SymbolicOperator;
using fock::FockOperator;
using grassmann::GrassmannElement;
using grassmann::Parity;
using grassmann::RegistryPtr;
using grassmann::complexd;
using propagators::KernelContext;
using propagators::mixed_route_tolerance;
using propagators::route_tolerance;

const complexd kI{0.0, 1.0};

std::mt19937 make_rng(std::uint64_t seed, std::uint32_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), salt};
    return std::mt19937(seq);
}

// ---- shared operator builders -------------------------------------------

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

// 1 - sum n_i + sum_{i<j} n_i n_j: 1 on the empty and full states.
fock::OperatorPolynomial empty_or_full_poly(int n) {
    fock::OperatorPolynomial poly;
    poly.terms.push_back({{1.0, 0.0}, {}, {}, {}, {}});
    for (int i = 1; i <= n; ++i) poly.terms.push_back({{-1.0, 0.0}, {i}, {i}, {}, {}});
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            poly.terms.push_back({{-1.0, 0.0}, {i, j}, {i, j}, {}, {}});
    return poly;
}

GrassmannElement gen(const RegistryPtr& reg, int idx) {
    return GrassmannElement::generator(reg, idx);
}

GrassmannElement cross(const KernelContext& ctx, int i) {
    return gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]);
}

// exp(-1/2 sum (bar'' psi'' + bar' psi')): the label Gaussian without the
// cross coupling.
GrassmannElement gaussian_pair(const KernelContext& ctx) {
    GrassmannElement q(ctx.reg);
    for (int i = 0; i < ctx.out_modes.n; ++i) {
        q += complexd{-0.5} *
             (gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.out_modes.psi[i]));
        q += complexd{-0.5} *
             (gen(ctx.reg, ctx.in_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]));
    }
    return q.exp_even();
}

// Full overlap <out''|in'> including the cross coupling.
GrassmannElement overlap_pair(const KernelContext& ctx) {
    GrassmannElement q(ctx.reg);
    for (int i = 0; i < ctx.out_modes.n; ++i) {
        q += complexd{-0.5} *
             (gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.out_modes.psi[i]));
        q += complexd{-0.5} *
             (gen(ctx.reg, ctx.in_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]));
        q += cross(ctx, i);
    }
    return q.exp_even();
}

GrassmannElement random_element(const RegistryPtr& reg, std::mt19937& rng, int n_terms,
                                Parity restrict_to = Parity::mixed) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_int_distribution<std::uint64_t> mask(0,
                                                      (std::uint64_t{1} << reg->count()) - 1);
    GrassmannElement x(reg);
    for (int t = 0; t < n_terms; ++t) {
        std::uint64_t m = mask(rng);
        if (restrict_to == Parity::even && (std::popcount(m) & 1)) m &= m - 1;
        if (restrict_to == Parity::odd && !(std::popcount(m) & 1)) {
            if (m == 0)
                m = 1;
            else
                m &= m - 1;
        }
        x += GrassmannElement::monomial(reg, m, complexd(coeff(rng), coeff(rng)));
    }
    return x;
}

double dist(const GrassmannElement& a, const GrassmannElement& b) {
    return grassmann::max_coeff_distance(a, b);
}

// Reference-pair sector data on the run's registry; adds the reference modes.
lattice::SectorModel shifted_sector(const KernelContext& ctx, double omega, bool even_sector) {
    const ModeSet theta = coherent::add_conjugate_modes(*ctx.reg, "θ", 1, "");
    Eigen::MatrixXcd number(2, 2);
    number << 0.0, 0.0, 0.0, omega;
    const SymbolicOperator hsym = SymbolicOperator::from_numeric(ctx.reg, number);
    if (even_sector) {
        const CoherentVector ket = coherent::coherent_ket(ctx.reg, theta);
        const CoherentVector bra = coherent::coherent_bra(ctx.reg, theta);
        const SymbolicOperator e = SymbolicOperator::outer(ket, bra);
        return {e, propagators::reduced_hamiltonian(e, hsym, bra, ket)};
    }
    const CoherentVector ket = coherent::odd_coherent_ket(ctx.reg, theta);
    const CoherentVector bra = coherent::odd_coherent_bra(ctx.reg, theta);
    const SymbolicOperator e = SymbolicOperator::outer(ket, bra);
    return {e, propagators::reduced_hamiltonian(e, hsym, bra, ket)};
}

// ---- deviation cores -----------------------------------------------------

// Two modes, occupancy held at one, no dynamics: the kernel must be the bare
// Gaussian times bar''_1 psi'_1 + bar''_2 psi'_2, coefficient for coefficient.
double single_occupancy_display_dev() {
    const fock::HilbertSpec spec{2, 0, 0};
    const FockOperator e = constraints::project_group_average(
        {fock::realize(number_sum_poly(2, 1.0, 1.0), spec)});
    double dev = constraints::certify_projector(e).rank == 2 ? 0.0 : 1.0;

    const KernelContext ctx = propagators::make_kernel_context(2);
    const FockOperator h0{spec, fock::Matrix::Zero(4, 4), fock::OpParity::even};
    const GrassmannElement displayed = gaussian_pair(ctx) * (cross(ctx, 0) + cross(ctx, 1));
    for (double t : {0.0, 0.7})
        dev = std::max(dev, dist(propagators::kernel_operator_route(e, h0, t, ctx), displayed));
    return dev;
}

// Same system with a number-sum Hamiltonian: only a phase appears.
double single_occupancy_phase_dev() {
    const fock::HilbertSpec spec{2, 0, 0};
    const double omega = 1.3;
    const FockOperator e = constraints::project_group_average(
        {fock::realize(number_sum_poly(2, 1.0, 1.0), spec)});
    const FockOperator h = number_sum(spec, omega);

    const KernelContext ctx = propagators::make_kernel_context(2);
    const GrassmannElement displayed = gaussian_pair(ctx) * (cross(ctx, 0) + cross(ctx, 1));
    double dev = 0.0;
    for (double t : {0.7, 3.1})
        dev = std::max(dev, dist(propagators::kernel_operator_route(e, h, t, ctx),
                                 std::exp(-kI * omega * t) * displayed));
    return dev;
}

// Three modes, empty and full states excluded: E = 1 - Phi with trace 6, and
// the kernel carries the three double-excitation pair terms.
double partial_fill_dev() {
    const fock::HilbertSpec spec{3, 0, 0};
    const FockOperator phi = fock::realize(empty_or_full_poly(3), spec);
    const FockOperator e = constraints::project_group_average({phi});

    double dev = fock::max_abs_diff(e.matrix, fock::Matrix::Identity(8, 8) - phi.matrix);
    dev = std::max(dev, std::abs(e.matrix.trace() - complexd{6.0}));

    const double omega = 0.9;
    const FockOperator h = number_sum(spec, omega);
    const KernelContext ctx = propagators::make_kernel_context(3);
    for (double t : {0.0, 1.2}) {
        GrassmannElement singles(ctx.reg), pairs(ctx.reg);
        for (int i = 0; i < 3; ++i) singles += cross(ctx, i);
        pairs += cross(ctx, 0) * cross(ctx, 1);
        pairs += cross(ctx, 1) * cross(ctx, 2);
        pairs += cross(ctx, 2) * cross(ctx, 0);
        const GrassmannElement displayed =
            gaussian_pair(ctx) *
            (std::exp(-kI * omega * t) * singles + std::exp(-2.0 * kI * omega * t) * pairs);
        dev = std::max(dev, dist(propagators::kernel_operator_route(e, h, t, ctx), displayed));
    }
    return dev;
}

// Group averaging, kernel extraction, and a fixed-resolution phase integral
// must give the same matrix; all of them must certify as projectors.
double projector_routes_dev() {
    const auto phase_integral = [](const FockOperator& phi, int k_points) {
        const long long d = phi.spec.dimension();
        fock::Matrix acc = fock::Matrix::Zero(d, d);
        for (int k = 0; k < k_points; ++k)
            acc += fock::mat_exp(phi, -kI * (2.0 * std::numbers::pi * k / k_points)).matrix;
        return FockOperator{phi.spec, acc / static_cast<double>(k_points),
                            fock::OpParity::even};
    };

    double dev = 0.0;
    const fock::HilbertSpec spec2{2, 0, 0};
    const fock::HilbertSpec spec3{3, 0, 0};
    const std::vector<FockOperator> generators{
        fock::realize(number_sum_poly(2, 1.0, 1.0), spec2),
        fock::realize(empty_or_full_poly(3), spec3)};
    for (const FockOperator& phi : generators) {
        const FockOperator a = constraints::project_group_average({phi});
        const FockOperator b = constraints::project_kernel({phi});
        const FockOperator c = phase_integral(phi, 101);
        for (const FockOperator* p : {&a, &b, &c}) {
            const auto cert = constraints::certify_projector(*p);
            dev = std::max({dev, cert.idempotency_defect, cert.hermiticity_defect});
        }
        dev = std::max(dev, fock::max_abs_diff(a.matrix, b.matrix));
        dev = std::max(dev, fock::max_abs_diff(a.matrix, c.matrix));
    }
    return dev;
}

// Certificates for the sector projectors built by the odd-pair construction.
double sector_certificates_dev() {
    double dev = 0.0;
    const auto fold = [&dev](const FockOperator& e) {
        const auto cert = constraints::certify_projector(e);
        dev = std::max({dev, cert.idempotency_defect, cert.hermiticity_defect});
    };

    const fock::HilbertSpec spec2{2, 0, 0};
    fock::OperatorPolynomial comb;
    const double r = 1.0 / std::numbers::sqrt2;
    comb.terms.push_back({{r, 0.0}, {}, {1}, {}, {}});
    comb.terms.push_back({{-r, 0.0}, {}, {2}, {}, {}});
    const auto balanced = constraints::project_odd_pair(fock::realize(comb, spec2));
    fold(balanced.e_a);
    fold(balanced.e_b);

    const fock::HilbertSpec spec4{4, 0, 0};
    fock::OperatorPolynomial cubic;
    cubic.terms.push_back({{1.0, 0.0}, {}, {1}, {}, {}});
    cubic.terms.push_back({{-1.0, 0.0}, {4}, {2, 3}, {}, {}});
    const auto shifted = constraints::project_odd_pair(fock::realize(cubic, spec4));
    fold(shifted.e_a);
    fold(shifted.e_b);
    return dev;
}

// Triple-mode system: one even and one odd pair of constraints close as first
// class, and the odd-odd bracket lands on the even constraint with weight -i.
double first_class_closure_dev() {
    const fock::HilbertSpec spec{3, 0, 0};
    const FockOperator phi = fock::realize(empty_or_full_poly(3), spec);
    fock::OperatorPolynomial chi_poly;
    chi_poly.terms.push_back({{1.0, 0.0}, {}, {1, 2, 3}, {}, {}});
    const FockOperator chi = fock::realize(chi_poly, spec);
    const FockOperator chidag = fock::realize(fock::adjoint(chi_poly), spec);
    const FockOperator h = number_sum(spec, 0.5);

    const auto report = constraints::classify({phi}, {chi, chidag}, &h);
    double dev = report.worst_residual;
    if (report.verdict != constraints::ConstraintClass::first_class) dev = std::max(dev, 1.0);
    if (!report.hamiltonian_compatible) dev = std::max(dev, 1.0);

    bool found = false;
    for (const auto& b : report.brackets)
        if (b.label == "{odd1,odd2}") {
            found = true;
            if (b.coefficients.size() == 1)
                dev = std::max(dev, std::abs(b.coefficients[0] - (-kI)));
            else
                dev = std::max(dev, 1.0);
        }
    if (!found) dev = std::max(dev, 1.0);
    return dev;
}

// A bare ladder pair and a rescaled odd family have brackets that cannot land
// on the constraint span: both must classify as second class.
double second_class_verdict_dev() {
    const fock::HilbertSpec spec1{1, 0, 0};
    const auto fops1 = fock::build_fermion_ops(spec1);
    const auto r1 = constraints::classify({}, {fops1[0].first, fops1[0].second});

    const fock::HilbertSpec spec2{2, 0, 0};
    const auto fops2 = fock::build_fermion_ops(spec2);
    const FockOperator chi1{spec2, 2.0 * fops2[0].first.matrix, fock::OpParity::odd};
    const FockOperator chid1{spec2, chi1.matrix.adjoint(), fock::OpParity::odd};
    const auto r2 =
        constraints::classify({}, {chi1, chid1, fops2[1].first, fops2[1].second});

    const bool ok = r1.verdict == constraints::ConstraintClass::second_class &&
                    r2.verdict == constraints::ConstraintClass::second_class;
    return ok ? 0.0 : 1.0;
}

// Shifted reference pair: both sector kernels against their closed forms, and
// the zero-time sector sum against the plain overlap.
double shifted_sector_dev(const std::vector<double>& times) {
    const double omega = 1.7;
    const KernelContext ctx = propagators::make_kernel_context(1);
    const ModeSet theta = coherent::add_conjugate_modes(*ctx.reg, "θ", 1, "");

    const CoherentVector tket = coherent::coherent_ket(ctx.reg, theta);
    const CoherentVector tbra = coherent::coherent_bra(ctx.reg, theta);
    const CoherentVector oket = coherent::odd_coherent_ket(ctx.reg, theta);
    const CoherentVector obra = coherent::odd_coherent_bra(ctx.reg, theta);
    const SymbolicOperator ea = SymbolicOperator::outer(tket, tbra);
    const SymbolicOperator eb = SymbolicOperator::outer(oket, obra);

    Eigen::MatrixXcd number(2, 2);
    number << 0.0, 0.0, 0.0, omega;
    const SymbolicOperator hsym = SymbolicOperator::from_numeric(ctx.reg, number);
    const GrassmannElement ha = propagators::reduced_hamiltonian(ea, hsym, tbra, tket);
    const GrassmannElement hb = propagators::reduced_hamiltonian(eb, hsym, obra, oket);

    double dev = 0.0;
    for (double t : times) {
        dev = std::max(dev, dist(propagators::kernel_rank_one_route(ea, ha, t, ctx),
                                 propagators::closed_form_shifted_even_sector(ctx, theta, omega, t)));
        dev = std::max(dev, dist(propagators::kernel_rank_one_route(eb, hb, t, ctx),
                                 propagators::closed_form_shifted_odd_sector(ctx, theta, omega, t)));
    }
    dev = std::max(dev, dist(propagators::kernel_rank_one_route(ea, ha, 0.0, ctx) +
                                 propagators::kernel_rank_one_route(eb, hb, 0.0, ctx),
                             overlap_pair(ctx)));
    return dev;
}

// Balanced-difference pair: static sector kernels against their closed forms;
// the two sectors resolve the overlap.
double balanced_dev(const std::vector<double>& times) {
    const fock::HilbertSpec spec{2, 0, 0};
    fock::OperatorPolynomial comb;
    const double r = 1.0 / std::numbers::sqrt2;
    comb.terms.push_back({{r, 0.0}, {}, {1}, {}, {}});
    comb.terms.push_back({{-r, 0.0}, {}, {2}, {}, {}});
    const auto sectors = constraints::project_odd_pair(fock::realize(comb, spec));

    const KernelContext ctx = propagators::make_kernel_context(2);
    const FockOperator h0{spec, fock::Matrix::Zero(4, 4), fock::OpParity::even};

    double dev = 0.0;
    for (double t : times) {
        const GrassmannElement ka = propagators::kernel_operator_route(sectors.e_a, h0, t, ctx);
        const GrassmannElement kb = propagators::kernel_operator_route(sectors.e_b, h0, t, ctx);
        dev = std::max(dev, dist(ka, propagators::closed_form_balanced_difference_even(ctx)));
        dev = std::max(dev, dist(kb, propagators::closed_form_balanced_difference_odd(ctx)));
        dev = std::max(dev, dist(ka + kb, overlap_pair(ctx)));
    }
    return dev;
}

// Sector operator algebra: the shifted pair anticommutes to the identity at
// the symbol level, rescaled odd families diagonalize to canonical ladder
// pairs, and the cubic-shift normalization operator has spectrum {1, 2}.
double sector_algebra_dev() {
    double dev = 0.0;

    {
        auto reg = std::make_shared<grassmann::GeneratorRegistry>();
        const ModeSet theta = coherent::add_conjugate_modes(*reg, "θ", 1, "");
        const GrassmannElement th = gen(reg, theta.psi[0]);
        std::vector<GrassmannElement> entries(4, GrassmannElement(reg));
        entries[0] = -th;                                  // <0| chi |0>
        entries[1] = GrassmannElement::scalar(reg, 1.0);   // <0| chi |1>
        entries[3] = -th;                                  // <1| chi |1>
        const SymbolicOperator chi = SymbolicOperator::from_entries(reg, 1, entries);
        const SymbolicOperator chid = chi.adjoint_op();
        const SymbolicOperator anti = chi.product(chid) + chid.product(chi);
        dev = std::max(dev, anti.max_entry_distance(SymbolicOperator::identity(reg, 1)));
    }

    {
        const fock::HilbertSpec spec{2, 0, 0};
        const auto fops = fock::build_fermion_ops(spec);
        const FockOperator chi1{spec, 2.0 * fops[0].first.matrix, fock::OpParity::odd};
        const auto canon = constraints::diagonalize_odd({chi1, fops[1].first});
        const fock::Matrix id = fock::Matrix::Identity(4, 4);
        for (std::size_t a = 0; a < canon.size(); ++a)
            for (std::size_t b = 0; b < canon.size(); ++b) {
                const fock::Matrix plus = constraints::anticommutator(
                    canon[a].matrix, canon[b].matrix.adjoint());
                dev = std::max(dev, fock::max_abs_diff(
                                        plus, a == b ? id : fock::Matrix::Zero(4, 4).eval()));
                dev = std::max(dev,
                               constraints::anticommutator(canon[a].matrix, canon[b].matrix)
                                   .cwiseAbs()
                                   .maxCoeff());
            }
    }

    {
        const fock::HilbertSpec spec{4, 0, 0};
        fock::OperatorPolynomial cubic;
        cubic.terms.push_back({{1.0, 0.0}, {}, {1}, {}, {}});
        cubic.terms.push_back({{-1.0, 0.0}, {4}, {2, 3}, {}, {}});
        const auto proj = constraints::project_odd_pair(fock::realize(cubic, spec));
        Eigen::SelfAdjointEigenSolver<fock::Matrix> es(proj.x.matrix);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double lam = es.eigenvalues()(i);
            dev = std::max(dev, std::min(std::abs(lam - 1.0), std::abs(lam - 2.0)));
        }
        if (constraints::certify_projector(proj.e_a).rank != 8 ||
            constraints::certify_projector(proj.e_b).rank != 8)
            dev = std::max(dev, 1.0);
    }
    return dev;
}

// Number-balance oscillator: phase quadrature against the explicit mode sum,
// optionally also against the dense operator route.
double oscillator_routes_dev(bool include_operator, const std::vector<int>& ps,
                             const std::vector<double>& times, int cutoff) {
    double dev = 0.0;
    const std::vector<complexd> z_out{{0.4, 0.3}};
    const std::vector<complexd> z_in{{-0.2, 0.5}};
    for (int p : ps) {
        propagators::BoseFermiModel model;
        model.n_bosons = 1;
        model.n_fermions = 1;
        model.p = p;
        model.omega = 0.8;
        model.cutoff = cutoff;

        const KernelContext ctx = propagators::make_kernel_context(1);
        for (double t : times) {
            const GrassmannElement quad =
                propagators::bose_fermi_kernel_quadrature(model, z_out, z_in, t, ctx);
            const GrassmannElement sum =
                propagators::bose_fermi_kernel_mode_sum(model, z_out, z_in, t, ctx);
            dev = std::max(dev, dist(quad, sum));
            if (include_operator) {
                const FockOperator e = constraints::project_group_average(
                    {propagators::bose_fermi_constraint(model)});
                const FockOperator u = propagators::constrained_evolution(
                    e, propagators::bose_fermi_hamiltonian(model), t);
                dev = std::max(
                    dev, dist(propagators::mixed_kernel_operator_route(u, z_out, z_in, ctx),
                              quad));
            }
        }
    }
    return dev;
}

double mixed_lattice_dev() {
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

    double dev = 0.0;
    for (int n_slices : {1, 3})
        dev = std::max(dev, dist(lattice::bose_fermi_kernel_lattice(model, z_out, z_in, t,
                                                                    n_slices, frame),
                                 quad));
    return dev;
}

// Projector chain without dynamics: the fold must reproduce the closed kernel
// at every slice count, bit for bit across counts.
double lattice_first_class_dev() {
    const fock::HilbertSpec spec{2, 0, 0};
    const FockOperator e = constraints::project_group_average(
        {fock::realize(number_sum_poly(2, 1.0, 1.0), spec)});
    const fock::OperatorPolynomial none;
    const KernelContext frame = propagators::make_kernel_context(2);
    const GrassmannElement closed =
        propagators::closed_form_two_mode_single_occupancy(frame, 1.0, 0.0);

    double dev = 0.0;
    GrassmannElement first(frame.reg);
    for (int n_slices = 1; n_slices <= 8; ++n_slices) {
        lattice::LatticePlan plan;
        plan.n_slices = n_slices;
        plan.t = 0.7;
        const GrassmannElement k = lattice::lattice_kernel_first_class(e, none, plan, frame);
        dev = std::max(dev, dist(k, closed));
        if (n_slices == 1)
            first = k;
        else
            dev = std::max(dev, dist(k, first));
    }
    return dev;
}

double partial_fill_lattice_dev() {
    const fock::HilbertSpec spec{3, 0, 0};
    const FockOperator e =
        constraints::project_group_average({fock::realize(empty_or_full_poly(3), spec)});
    const fock::OperatorPolynomial none;
    const KernelContext frame = propagators::make_kernel_context(3);
    const GrassmannElement closed =
        propagators::closed_form_three_mode_partial_fill(frame, 1.0, 0.0);

    double dev = 0.0;
    for (int n_slices : {1, 2, 4, 8}) {
        lattice::LatticePlan plan;
        plan.n_slices = n_slices;
        plan.t = 1.1;
        dev = std::max(
            dev, dist(lattice::lattice_kernel_first_class(e, none, plan, frame), closed));
    }
    return dev;
}

// Per-slice insertion chain for the shifted pair, both sectors, every count.
double shifted_lattice_dev() {
    const double omega = 1.7, t = 0.9;
    const KernelContext frame = propagators::make_kernel_context(1);
    const ModeSet theta = coherent::add_conjugate_modes(*frame.reg, "θ", 1, "");

    double dev = 0.0;
    for (bool even_sector : {true, false}) {
        const GrassmannElement closed =
            even_sector
                ? propagators::closed_form_shifted_even_sector(frame, theta, omega, t)
                : propagators::closed_form_shifted_odd_sector(frame, theta, omega, t);
        for (int n_slices = 1; n_slices <= 8; ++n_slices) {
            lattice::LatticePlan plan;
            plan.n_slices = n_slices;
            plan.t = t;
            const GrassmannElement k = lattice::lattice_kernel_second_class(
                [&](const KernelContext& run) { return shifted_sector(run, omega, even_sector); },
                plan, frame);
            dev = std::max(dev, dist(k, closed));
        }
    }
    return dev;
}

// A nonzero multiplier schedule applied as exact phases must drop out.
double multiplier_independence_dev() {
    const fock::HilbertSpec spec{2, 0, 0};
    const fock::OperatorPolynomial phi_poly = number_sum_poly(2, 1.0, 1.0);
    const FockOperator e =
        constraints::project_group_average({fock::realize(phi_poly, spec)});
    const fock::OperatorPolynomial none;
    const KernelContext frame = propagators::make_kernel_context(2);

    lattice::LatticePlan bare;
    bare.n_slices = 3;
    bare.t = 0.9;
    const GrassmannElement reference =
        lattice::lattice_kernel_first_class(e, none, bare, frame);

    lattice::LatticePlan driven = bare;
    driven.multipliers = lattice::MultiplierStyle::exact_phase;
    driven.eta = {0.7, -1.3, 0.4};
    const GrassmannElement k =
        lattice::lattice_kernel_first_class(e, none, driven, frame, &phi_poly);

    double dev = dist(k, reference);
    dev = std::max(
        dev, dist(k, propagators::closed_form_two_mode_single_occupancy(frame, 1.0, 0.0)));
    return dev;
}

// Symbol-substituted slices on one unconstrained mode: the error falls off at
// first order, so the fitted log-log slope sits near -1.
double trotter_slope_dev() {
    const fock::HilbertSpec spec{1, 0, 0};
    const FockOperator e = fock::identity(spec);
    const double omega = 1.0, t = 1.0;
    const FockOperator h = number_sum(spec, omega);
    const fock::OperatorPolynomial h_poly = number_sum_poly(1, omega, 0.0);
    const KernelContext frame = propagators::make_kernel_context(1);

    const std::vector<int> sweep{2, 4, 8, 16};
    const lattice::TrotterCurve curve = lattice::trotter_convergence(
        e, h, h_poly, t, sweep, lattice::SliceStyle::symbol, frame);

    double dev = std::abs(curve.slope + 1.0);
    for (std::size_t i = 1; i < curve.errors.size(); ++i)
        if (curve.errors[i] >= curve.errors[i - 1]) dev = std::max(dev, 1.0);
    return dev;
}

// ---- seeded law checks ---------------------------------------------------

double algebra_laws_dev(int n_seeds, std::uint64_t seed) {
    auto reg = std::make_shared<grassmann::GeneratorRegistry>();
    coherent::add_conjugate_modes(*reg, "g", 3, "");
    const GrassmannElement zero(reg);
    const GrassmannElement one = GrassmannElement::scalar(reg, 1.0);

    double dev = 0.0;
    for (int i = 0; i < reg->count(); ++i)
        for (int j = i; j < reg->count(); ++j)
            dev = std::max(dev, dist(gen(reg, i) * gen(reg, j) + gen(reg, j) * gen(reg, i),
                                     zero));

    std::mt19937 rng = make_rng(seed, 1);
    for (int trial = 0; trial < n_seeds; ++trial) {
        const GrassmannElement x = random_element(reg, rng, 5);
        const GrassmannElement y = random_element(reg, rng, 5);
        const GrassmannElement z = random_element(reg, rng, 5);
        dev = std::max(dev, dist((x * y) * z, x * (y * z)));
        dev = std::max(dev, dist(x * (y + z), x * y + x * z));
        dev = std::max(dev, dist((x * y).involute(), y.involute() * x.involute()));

        const GrassmannElement even = random_element(reg, rng, 4, Parity::even);
        dev = std::max(dev, dist(even.exp_even() * (-even).exp_even(), one));
    }
    return dev;
}

double overlap_formula_dev() {
    double dev = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const KernelContext ctx = propagators::make_kernel_context(n);
        dev = std::max(dev, dist(coherent::pairing(ctx.bra, ctx.ket), overlap_pair(ctx)));
    }
    return dev;
}

double identity_resolution_dev() {
    double dev = 0.0;
    for (int n = 1; n <= 3; ++n)
        dev = std::max(dev, coherent::identity_resolution_defect(n));
    return dev;
}

double normal_symbol_dev(int n_seeds, std::uint64_t seed) {
    const int n = 2;
    const KernelContext ctx = propagators::make_kernel_context(n);
    const GrassmannElement overlap = coherent::pairing(ctx.bra, ctx.ket);
    const fock::HilbertSpec spec{n, 0, 0};

    std::mt19937 rng = make_rng(seed, 2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> mode(1, n);

    double dev = 0.0;
    for (int trial = 0; trial < n_seeds; ++trial) {
        const bool odd = trial & 1;
        fock::OperatorPolynomial poly;
        for (int t = 0; t < 3; ++t) {
            fock::PolyTerm term;
            term.coeff = {u(rng), u(rng)};
            // Keep every term in one parity class so the operator is graded.
            const int total = odd ? 1 + 2 * static_cast<int>(rng() % 2)
                                  : 2 * static_cast<int>(rng() % 3);
            const int n_dag = static_cast<int>(rng() % (total + 1));
            for (int q = 0; q < total; ++q)
                (q < n_dag ? term.fdag : term.f).push_back(mode(rng));
            poly.terms.push_back(std::move(term));
        }
        const FockOperator op = fock::realize(poly, spec);
        const GrassmannElement lhs = coherent::matrix_element(ctx.bra, op, ctx.ket);
        const GrassmannElement rhs =
            coherent::normal_symbol(poly, ctx.reg, ctx.out_modes, ctx.in_modes) * overlap;
        dev = std::max(dev, dist(lhs, rhs));
    }
    return dev;
}

// ---- suite wiring --------------------------------------------------------

struct Outcome {
    std::string routes;
    double deviation = 0.0;
    double tolerance = 0.0;
};

struct NamedCheck {
    const char* suite;
    const char* name;
    Outcome (*fn)(int n_seeds, std::uint64_t seed);
};

const NamedCheck kChecks[] = {
    {"grassmann", "algebra laws",
     [](int n_seeds, std::uint64_t seed) -> Outcome {
         return {"algebraic identities over seeded random elements",
                 algebra_laws_dev(n_seeds, seed), route_tolerance};
     }},
    {"coherent", "overlap formula",
     [](int, std::uint64_t) -> Outcome {
         return {"state pairing vs Gaussian exponential", overlap_formula_dev(),
                 route_tolerance};
     }},
    {"coherent", "identity resolution",
     [](int, std::uint64_t) -> Outcome {
         return {"Berezin integral of the coherent projector vs identity",
                 identity_resolution_dev(), route_tolerance};
     }},
    {"coherent", "normal symbol substitution",
     [](int n_seeds, std::uint64_t seed) -> Outcome {
         return {"matrix element vs symbol times overlap", normal_symbol_dev(n_seeds, seed),
                 route_tolerance};
     }},
    {"first-class", "single occupancy kernel",
     [](int, std::uint64_t) -> Outcome {
         return {"operator route vs displayed kernel",
                 std::max(single_occupancy_display_dev(), single_occupancy_phase_dev()),
                 route_tolerance};
     }},
    {"first-class", "partial fill projector and kernel",
     [](int, std::uint64_t) -> Outcome {
         return {"matrix identity and operator route vs displayed kernel", partial_fill_dev(),
                 route_tolerance};
     }},
    {"first-class", "projector routes",
     [](int, std::uint64_t) -> Outcome {
         return {"group average vs kernel extraction vs phase integral",
                 projector_routes_dev(), route_tolerance};
     }},
    {"first-class", "first class closure",
     [](int, std::uint64_t) -> Outcome {
         return {"graded brackets vs constraint span", first_class_closure_dev(),
                 constraints::closure_tolerance};
     }},
    {"second-class", "shifted sector kernels",
     [](int, std::uint64_t) -> Outcome {
         return {"rank-one operator route vs closed form",
                 shifted_sector_dev({0.0, 0.7, 3.1}), route_tolerance};
     }},
    {"second-class", "balanced difference kernels",
     [](int, std::uint64_t) -> Outcome {
         return {"operator route vs closed form", balanced_dev({0.0, 0.7, 3.1}),
                 route_tolerance};
     }},
    {"second-class", "sector algebra",
     [](int, std::uint64_t) -> Outcome {
         return {"anticommutators and spectra vs canonical values", sector_algebra_dev(),
                 route_tolerance};
     }},
    {"second-class", "second class closure",
     [](int, std::uint64_t) -> Outcome {
         return {"bracket closure verdict", second_class_verdict_dev(), 0.5};
     }},
    {"bose-fermi", "oscillator kernel routes",
     [](int, std::uint64_t) -> Outcome {
         return {"operator vs quadrature vs mode sum",
                 oscillator_routes_dev(true, {-1, 0, 1}, {0.0, 1.3}, 6),
                 mixed_route_tolerance};
     }},
    {"bose-fermi", "mixed lattice",
     [](int, std::uint64_t) -> Outcome {
         return {"slice fold vs quadrature", mixed_lattice_dev(), mixed_route_tolerance};
     }},
    {"lattice", "single occupancy lattice",
     [](int, std::uint64_t) -> Outcome {
         return {"slice fold vs closed form", lattice_first_class_dev(), route_tolerance};
     }},
    {"lattice", "partial fill lattice",
     [](int, std::uint64_t) -> Outcome {
         return {"slice fold vs closed form", partial_fill_lattice_dev(), route_tolerance};
     }},
    {"lattice", "shifted pair lattice",
     [](int, std::uint64_t) -> Outcome {
         return {"per-slice insertion vs closed form", shifted_lattice_dev(),
                 route_tolerance};
     }},
    {"lattice", "multiplier independence",
     [](int, std::uint64_t) -> Outcome {
         return {"scheduled phases vs bare fold", multiplier_independence_dev(),
                 route_tolerance};
     }},
    {"lattice", "trotter slope",
     [](int, std::uint64_t) -> Outcome {
         return {"log-log error fit vs expected order", trotter_slope_dev(), 0.2};
     }},
};

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{
        "grassmann", "coherent", "first-class", "second-class", "bose-fermi", "lattice", "all"};
    return names;
}

bool is_suite(const std::string& name) {
    const auto& names = suite_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

report::RunReport run_suite(const std::string& suite, int n_seeds, std::uint64_t seed) {
    if (!is_suite(suite)) {
        std::string expected;
        for (const auto& s : suite_names()) expected += (expected.empty() ? "" : ", ") + s;
        throw std::invalid_argument("unknown suite \"" + suite + "\" (expected one of " +
                                    expected + ")");
    }
    if (n_seeds < 1) throw std::invalid_argument("seed count must be at least 1");

    report::RunReport r;
    r.suite = suite;
    r.version = cfq::version;
    r.config_hash = config::fnv1a_hash(suite + "/" + std::to_string(n_seeds) + "/" +
                                       std::to_string(seed));
    for (const NamedCheck& check : kChecks) {
        if (suite != "all" && suite != check.suite) continue;
        report::CheckRecord rec;
        rec.name = check.name;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Outcome o = check.fn(n_seeds, seed);
            rec.routes = o.routes;
            rec.max_deviation = o.deviation;
            rec.tolerance = o.tolerance;
            rec.pass = o.deviation <= o.tolerance;
        } catch (const std::exception& ex) {
            rec.routes = std::string("exception: ") + ex.what();
            rec.max_deviation = std::numeric_limits<double>::max();
            rec.tolerance = 0.0;
            rec.pass = false;
        }
        rec.wall_ms = elapsed_ms(t0);
        r.records.push_back(std::move(rec));
    }
    return r;
}

std::vector<CriterionResult> acceptance_criteria() {
    std::vector<CriterionResult> out;
    const auto add = [&out](int index, std::string name, double tol, double budget_ms,
                            const std::function<double()>& eval, std::string what) {
        CriterionResult c;
        c.index = index;
        c.name = std::move(name);
        c.tolerance = tol;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.deviation = eval();
        } catch (const std::exception& ex) {
            c.deviation = std::numeric_limits<double>::max();
            what = std::string("exception: ") + ex.what();
        }
        const double wall = elapsed_ms(t0);
        c.pass = c.deviation <= tol && wall <= budget_ms;
        char timing[96];
        std::snprintf(timing, sizeof timing, "; wall %.0f ms (budget %.0f ms)", wall,
                      budget_ms);
        c.detail = what + timing;
        out.push_back(std::move(c));
    };

    add(1, "two-mode single-occupancy kernel", route_tolerance, 1000.0,
        [] { return single_occupancy_display_dev(); },
        "operator route vs displayed element, no dynamics");
    add(2, "three-mode partial-fill projector and kernel", route_tolerance, 1000.0,
        [] { return partial_fill_dev(); },
        "matrices one minus constraint, trace 6, kernel with all pair terms");
    add(3, "second-class sector closed forms", route_tolerance, 5000.0,
        [] {
            return std::max(shifted_sector_dev({0.0, 0.7, 3.1}),
                            balanced_dev({0.0, 0.7, 3.1}));
        },
        "shifted and balanced sector kernels vs operator routes, t in {0, 0.7, 3.1}");
    add(4, "lattice kernels at every slice count", route_tolerance, 30000.0,
        [] { return std::max(lattice_first_class_dev(), shifted_lattice_dev()); },
        "projector and per-slice insertion chains, 1 to 8 slices");
    add(5, "bose-fermi quadrature vs mode sum", mixed_route_tolerance, 10000.0,
        [] { return oscillator_routes_dev(false, {-1, 0, 1}, {0.0, 1.3}, 6); },
        "cutoff 6, p in {-1, 0, 1}, t in {0, 1.3}");
    add(6, "projector certificates and route agreement", route_tolerance, 60000.0,
        [] { return std::max(projector_routes_dev(), sector_certificates_dev()); },
        "idempotency and hermiticity certificates, three construction routes");
    add(7, "algebra property suite", route_tolerance, 60000.0,
        [] {
            const int seeds = 200;
            const std::uint64_t seed = 12345;
            double dev = algebra_laws_dev(seeds, seed);
            dev = std::max(dev, overlap_formula_dev());
            dev = std::max(dev, identity_resolution_dev());
            dev = std::max(dev, normal_symbol_dev(seeds, seed));
            dev = std::max(dev, sector_algebra_dev());
            return dev;
        },
        "laws, overlap, identity resolution, symbols, sector algebra; 200 seeds");
    add(8, "trotter convergence slope", 0.2, 30000.0, [] { return trotter_slope_dev(); },
        "log-log error fit over slice counts {2, 4, 8, 16}");
    add(9, "constraint classification", constraints::closure_tolerance, 60000.0,
        [] { return std::max(first_class_closure_dev(), second_class_verdict_dev()); },
        "triple-mode set first class with recovered bracket weight, ladder sets second class");
    return out;
}

}  // namespace cfq::checks
