#include "cfq/lattice.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "cfq/constraints.hpp"

namespace cfq::lattice {

namespace {

const complexd kI{0.0, 1.0};

GrassmannElement gen(const RegistryPtr& reg, int idx) {
    return GrassmannElement::generator(reg, idx);
}

ModeSet interior_family(grassmann::GeneratorRegistry& reg, int n_modes, int k) {
    return coherent::add_conjugate_modes(reg, "ψ", n_modes, "·" + std::to_string(k));
}

// Copies the run result onto the caller frame.  Only the first n_base
// generators may survive; their labels must coincide between registries.
GrassmannElement remap_to_frame(const GrassmannElement& x, int n_base, const RegistryPtr& run_reg,
                                const KernelContext& frame) {
    if (frame.reg->count() < n_base)
        throw std::invalid_argument("caller frame is missing generators of the run layout");
    for (int i = 0; i < n_base; ++i)
        if (run_reg->label(i) != frame.reg->label(i))
            throw std::invalid_argument("caller frame layout differs from the run layout");
    GrassmannElement out(frame.reg);
    for (const auto& [mask, c] : x.terms()) {
        if (n_base < 64 && (mask >> n_base) != 0)
            throw std::runtime_error("intermediate slice generators survived the convolution");
        out += GrassmannElement::monomial(frame.reg, mask, c);
    }
    return out;
}

// Zeroes parity-forbidden entries of a fermion-space block; they may only
// hold roundoff.
void scrub_odd_entries(fock::Matrix& block) {
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
    for (long long b = 0; b < block.rows(); ++b)
        for (long long c = 0; c < block.cols(); ++c)
            if ((std::popcount(static_cast<std::uint64_t>(b)) +
                 std::popcount(static_cast<std::uint64_t>(c))) &
                1) {
                if (std::abs(block(b, c)) > 1e-12 * scale)
                    throw std::runtime_error("slice block is not parity even");
                block(b, c) = complexd{};
            }
}

}  // namespace

GrassmannElement short_time_overlap(const RegistryPtr& reg, const ModeSet& to,
                                    const ModeSet& from) {
    if (to.n != from.n) throw std::invalid_argument("slice families have different mode counts");
    GrassmannElement q(reg);
    for (int i = 0; i < to.n; ++i) {
        q += complexd{-0.5} * (gen(reg, to.bar[i]) * gen(reg, to.psi[i]));
        q += complexd{-0.5} * (gen(reg, from.bar[i]) * gen(reg, from.psi[i]));
        q += gen(reg, to.bar[i]) * gen(reg, from.psi[i]);
    }
    return q.exp_even();
}

GrassmannElement short_time_kernel(const RegistryPtr& reg, const ModeSet& to, const ModeSet& from,
                                   const fock::OperatorPolynomial& h_poly, double eps, double eta,
                                   const fock::OperatorPolynomial* phi_poly) {
    GrassmannElement factor = short_time_overlap(reg, to, from);
    if (!h_poly.terms.empty())
        factor *= ((-kI * eps) * coherent::normal_symbol(h_poly, reg, to, from)).exp_even();
    if (eta != 0.0) {
        if (phi_poly == nullptr)
            throw std::invalid_argument("multiplier value given without a constraint polynomial");
        factor *= ((-kI * eps * eta) * coherent::normal_symbol(*phi_poly, reg, to, from)).exp_even();
    }
    return factor;
}

GrassmannElement convolve(const GrassmannElement& a, const GrassmannElement& b,
                          const ModeSet& shared) {
    const std::vector<int> measure = coherent::measure_indices(shared);
    for (int idx : measure) {
        const std::uint64_t bit = std::uint64_t{1} << idx;
        if (!(a.support_mask() & bit) || !(b.support_mask() & bit))
            throw std::invalid_argument("shared slice generators absent from a convolution factor");
    }
    return (a * b).integrate(std::span<const int>{measure});
}

GrassmannElement lattice_kernel_first_class(const FockOperator& e,
                                            const fock::OperatorPolynomial& h_poly,
                                            const LatticePlan& plan, const KernelContext& frame,
                                            const fock::OperatorPolynomial* phi_poly) {
    const int n = frame.out_modes.n;
    if (plan.n_slices < 1) throw std::invalid_argument("slice count must be positive");
    if (!plan.eta.empty() && static_cast<int>(plan.eta.size()) != plan.n_slices)
        throw std::invalid_argument("multiplier schedule length differs from the slice count");
    if (!plan.eta.empty() && phi_poly == nullptr)
        throw std::invalid_argument("multiplier schedule requires the constraint polynomial");
    if (e.spec.n_fermions != n || e.spec.n_bosons != 0)
        throw std::invalid_argument("projector space does not match the frame");
    if (e.declared_parity != fock::OpParity::even)
        throw std::invalid_argument("projector must be declared parity even");
    constraints::certify_projector(e);

    const KernelContext run = propagators::make_kernel_context(n);
    const int n_base = run.reg->count();
    const double eps = plan.t / plan.n_slices;

    std::vector<ModeSet> chain(static_cast<std::size_t>(plan.n_slices) + 2);
    chain[0] = run.in_modes;
    for (int k = 1; k <= plan.n_slices; ++k)
        chain[static_cast<std::size_t>(k)] = interior_family(*run.reg, n, k);
    chain[static_cast<std::size_t>(plan.n_slices) + 1] = run.out_modes;

    std::optional<FockOperator> u_eps;
    if (plan.slices == SliceStyle::exact) {
        const FockOperator h_num = fock::realize(h_poly, e.spec);
        if (h_num.declared_parity != fock::OpParity::even)
            throw std::invalid_argument("exact slices require a parity-even Hamiltonian");
        u_eps = fock::mat_exp(h_num, -kI * eps);
    }
    std::optional<FockOperator> phi_num;
    if (!plan.eta.empty() && plan.multipliers == MultiplierStyle::exact_phase)
        phi_num = fock::realize(*phi_poly, e.spec);

    GrassmannElement total = coherent::matrix_element(
        coherent::coherent_bra(run.reg, chain[1]), e.matrix, fock::OpParity::even,
        coherent::coherent_ket(run.reg, chain[0]));

    for (int s = 1; s <= plan.n_slices; ++s) {
        const double eta_s = plan.eta.empty() ? 0.0 : plan.eta[static_cast<std::size_t>(s - 1)];
        const ModeSet& to = chain[static_cast<std::size_t>(s) + 1];
        const ModeSet& from = chain[static_cast<std::size_t>(s)];
        const bool exact_phase = eta_s != 0.0 && plan.multipliers == MultiplierStyle::exact_phase;

        GrassmannElement factor(run.reg);
        if (plan.slices == SliceStyle::exact || exact_phase) {
            fock::Matrix m = plan.slices == SliceStyle::exact
                                 ? u_eps->matrix
                                 : fock::Matrix::Identity(e.matrix.rows(), e.matrix.cols());
            if (exact_phase) m = m * fock::mat_exp(*phi_num, -kI * (eps * eta_s)).matrix;
            factor = coherent::matrix_element(coherent::coherent_bra(run.reg, to), m,
                                              fock::OpParity::even,
                                              coherent::coherent_ket(run.reg, from));
        } else {
            factor = short_time_overlap(run.reg, to, from);
        }
        if (plan.slices == SliceStyle::symbol && !h_poly.terms.empty())
            factor *= ((-kI * eps) * coherent::normal_symbol(h_poly, run.reg, to, from)).exp_even();
        if (eta_s != 0.0 && plan.multipliers == MultiplierStyle::substitution)
            factor *=
                ((-kI * (eps * eta_s)) * coherent::normal_symbol(*phi_poly, run.reg, to, from))
                    .exp_even();

        total = convolve(factor, total, from);
    }
    return remap_to_frame(total, n_base, run.reg, frame);
}

GrassmannElement lattice_kernel_second_class(const SectorBuilder& builder, const LatticePlan& plan,
                                             const KernelContext& frame) {
    const int n = frame.out_modes.n;
    if (plan.n_slices < 1) throw std::invalid_argument("slice count must be positive");
    if (!plan.eta.empty())
        throw std::invalid_argument("multiplier schedules apply to the first-class route");

    const KernelContext run = propagators::make_kernel_context(n);
    const SectorModel sector = builder(run);
    if (sector.e_sym.n_modes() != n)
        throw std::invalid_argument("sector operator does not match the frame mode count");
    if (sector.e_sym.parity() != fock::OpParity::even)
        throw std::invalid_argument("sector projector must be parity even");
    if (sector.h_reduced.parity() != grassmann::Parity::even)
        throw std::invalid_argument("reduced Hamiltonian must be parity even");

    const int n_base = run.reg->count();
    const double eps = plan.t / plan.n_slices;
    const GrassmannElement phase = (sector.h_reduced * (-kI * eps)).exp_even();

    std::vector<ModeSet> chain(static_cast<std::size_t>(plan.n_slices) + 1);
    chain[0] = run.in_modes;
    for (int k = 1; k < plan.n_slices; ++k)
        chain[static_cast<std::size_t>(k)] = interior_family(*run.reg, n, k);
    chain[static_cast<std::size_t>(plan.n_slices)] = run.out_modes;

    GrassmannElement total =
        phase * coherent::pairing(coherent::coherent_bra(run.reg, chain[1]),
                                  sector.e_sym.apply(coherent::coherent_ket(run.reg, chain[0])));
    for (int s = 2; s <= plan.n_slices; ++s) {
        const GrassmannElement factor =
            phase *
            coherent::pairing(
                coherent::coherent_bra(run.reg, chain[static_cast<std::size_t>(s)]),
                sector.e_sym.apply(
                    coherent::coherent_ket(run.reg, chain[static_cast<std::size_t>(s) - 1])));
        total = convolve(factor, total, chain[static_cast<std::size_t>(s) - 1]);
    }
    return remap_to_frame(total, n_base, run.reg, frame);
}

GrassmannElement bose_fermi_kernel_lattice(const propagators::BoseFermiModel& model,
                                           const std::vector<complexd>& z_out,
                                           const std::vector<complexd>& z_in, double t,
                                           int n_slices, const KernelContext& frame) {
    const int n = model.n_fermions;
    if (frame.out_modes.n != n)
        throw std::invalid_argument("fermion mode count does not match the frame");
    if (static_cast<int>(z_out.size()) != model.n_bosons ||
        static_cast<int>(z_in.size()) != model.n_bosons)
        throw std::invalid_argument("boson label count does not match the model");
    if (n_slices < 1) throw std::invalid_argument("slice count must be positive");

    const fock::HilbertSpec spec = model.spec();
    const long long fd = spec.fermion_dim();
    const long long bdim = spec.boson_dim();
    const long long bd = spec.boson_cutoff + 1;
    const double eps = t / n_slices;

    const FockOperator h = propagators::bose_fermi_hamiltonian(model);
    const FockOperator e =
        constraints::project_group_average({propagators::bose_fermi_constraint(model)});
    const FockOperator u_eps = fock::mat_exp(h, -kI * eps);
    const fock::Matrix first = u_eps.matrix * e.matrix;

    const KernelContext run = propagators::make_kernel_context(n);
    const int n_base = run.reg->count();
    std::vector<ModeSet> chain(static_cast<std::size_t>(n_slices) + 1);
    chain[0] = run.in_modes;
    for (int k = 1; k < n_slices; ++k)
        chain[static_cast<std::size_t>(k)] = interior_family(*run.reg, n, k);
    chain[static_cast<std::size_t>(n_slices)] = run.out_modes;

    // One slice as a boson-indexed matrix of fermionic kernel elements.
    const auto slice_blocks = [&](const fock::Matrix& m, const ModeSet& to, const ModeSet& from) {
        std::vector<GrassmannElement> blocks;
        blocks.reserve(static_cast<std::size_t>(bdim * bdim));
        const coherent::CoherentVector bra = coherent::coherent_bra(run.reg, to);
        const coherent::CoherentVector ket = coherent::coherent_ket(run.reg, from);
        for (long long mb = 0; mb < bdim; ++mb)
            for (long long nb = 0; nb < bdim; ++nb) {
                fock::Matrix blk = m.block(mb * fd, nb * fd, fd, fd);
                if (blk.cwiseAbs().maxCoeff() == 0.0) {
                    blocks.emplace_back(run.reg);
                    continue;
                }
                scrub_odd_entries(blk);
                blocks.push_back(coherent::matrix_element(bra, blk, fock::OpParity::even, ket));
            }
        return blocks;
    };

    std::vector<GrassmannElement> g = slice_blocks(first, chain[1], chain[0]);
    for (int s = 2; s <= n_slices; ++s) {
        const std::vector<GrassmannElement> f =
            slice_blocks(u_eps.matrix, chain[static_cast<std::size_t>(s)],
                         chain[static_cast<std::size_t>(s) - 1]);
        const std::vector<int> measure =
            coherent::measure_indices(chain[static_cast<std::size_t>(s) - 1]);
        std::vector<GrassmannElement> next;
        next.reserve(static_cast<std::size_t>(bdim * bdim));
        for (long long mb = 0; mb < bdim; ++mb)
            for (long long nb = 0; nb < bdim; ++nb) {
                GrassmannElement acc(run.reg);
                for (long long k = 0; k < bdim; ++k)
                    acc += f[static_cast<std::size_t>(mb * bdim + k)] *
                           g[static_cast<std::size_t>(k * bdim + nb)];
                next.push_back(acc.integrate(std::span<const int>{measure}));
            }
        g = std::move(next);
    }

    std::vector<std::vector<complexd>> aout, ain;
    for (int i = 0; i < model.n_bosons; ++i) {
        aout.push_back(coherent::boson_coherent_amplitudes(z_out[static_cast<std::size_t>(i)],
                                                           spec.boson_cutoff));
        ain.push_back(coherent::boson_coherent_amplitudes(z_in[static_cast<std::size_t>(i)],
                                                          spec.boson_cutoff));
    }
    const auto weight = [&](const std::vector<std::vector<complexd>>& table, long long idx) {
        complexd w{1.0, 0.0};
        for (const auto& amps : table) {
            w *= amps[static_cast<std::size_t>(idx % bd)];
            idx /= bd;
        }
        return w;
    };

    GrassmannElement total(run.reg);
    for (long long mb = 0; mb < bdim; ++mb) {
        const complexd wo = std::conj(weight(aout, mb));
        for (long long nb = 0; nb < bdim; ++nb)
            total += (wo * weight(ain, nb)) * g[static_cast<std::size_t>(mb * bdim + nb)];
    }
    return remap_to_frame(total, n_base, run.reg, frame);
}

TrotterCurve trotter_convergence(const FockOperator& e, const FockOperator& h_num,
                                 const fock::OperatorPolynomial& h_poly, double t,
                                 std::span<const int> n_values, SliceStyle style,
                                 const KernelContext& frame) {
    TrotterCurve curve;
    const GrassmannElement reference = propagators::kernel_operator_route(e, h_num, t, frame);
    for (int nv : n_values) {
        LatticePlan plan;
        plan.n_slices = nv;
        plan.t = t;
        plan.slices = style;
        const GrassmannElement lat = lattice_kernel_first_class(e, h_poly, plan, frame);
        curve.n_values.push_back(nv);
        curve.errors.push_back(grassmann::max_coeff_distance(lat, reference));
    }

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (std::size_t i = 0; i < curve.errors.size(); ++i)
        if (curve.errors[i] > 1e-14) {
            const double x = std::log(static_cast<double>(curve.n_values[i]));
            const double y = std::log(curve.errors[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
    const double det = m * sxx - sx * sx;
    if (m >= 2 && det > 0.0) curve.slope = (m * sxy - sx * sy) / det;
    return curve;
}

}  // namespace cfq::lattice
