#include "cfq/propagators.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfq::propagators {

namespace {

const complexd kI{0.0, 1.0};

GrassmannElement gen(const RegistryPtr& reg, int idx) {
    return GrassmannElement::generator(reg, idx);
}

// prod exp(-psibar psi / 2) over both label families.
GrassmannElement gaussian_pair(const KernelContext& ctx) {
    GrassmannElement q(ctx.reg);
    for (int i = 0; i < ctx.out_modes.n; ++i) {
        q += complexd{-0.5} * (gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.out_modes.psi[i]));
        q += complexd{-0.5} * (gen(ctx.reg, ctx.in_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]));
    }
    return q.exp_even();
}

// Closed-form overlap <out''|in'>.
GrassmannElement overlap_closed(const KernelContext& ctx) {
    GrassmannElement q(ctx.reg);
    for (int i = 0; i < ctx.out_modes.n; ++i) {
        q += complexd{-0.5} * (gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.out_modes.psi[i]));
        q += complexd{-0.5} * (gen(ctx.reg, ctx.in_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]));
        q += gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]);
    }
    return q.exp_even();
}

GrassmannElement cross_pair(const KernelContext& ctx, int i) {
    return gen(ctx.reg, ctx.out_modes.bar[i]) * gen(ctx.reg, ctx.in_modes.psi[i]);
}

void require_modes(const KernelContext& ctx, int n, const char* what) {
    if (ctx.out_modes.n != n)
        throw std::invalid_argument(std::string(what) + ": context has the wrong mode count");
}

}  // namespace

FockOperator constrained_evolution(const FockOperator& e, const FockOperator& h, double t) {
    constraints::certify_projector(e);
    if (fock::max_abs_diff(h.matrix, h.matrix.adjoint()) > 1e-12)
        throw std::invalid_argument("Hamiltonian is not self-adjoint");
    if (!(e.spec == h.spec)) throw std::invalid_argument("projector and Hamiltonian spaces differ");

    const fock::Matrix ehe = e.matrix * h.matrix * e.matrix;
    const fock::OpParity par =
        (e.declared_parity == fock::OpParity::even && h.declared_parity == fock::OpParity::even)
            ? fock::OpParity::even
            : fock::OpParity::none;
    FockOperator gen_op{e.spec, ehe, par};
    FockOperator u = fock::mat_exp(gen_op, -kI * t);
    return {e.spec, e.matrix * u.matrix * e.matrix, par};
}

KernelContext make_kernel_context(int n_modes) {
    KernelContext ctx;
    ctx.reg = std::make_shared<grassmann::GeneratorRegistry>();
    ctx.out_modes = coherent::add_conjugate_modes(*ctx.reg, "ψ", n_modes, "″");
    ctx.in_modes = coherent::add_conjugate_modes(*ctx.reg, "ψ", n_modes, "′");
    ctx.bra = coherent::coherent_bra(ctx.reg, ctx.out_modes);
    ctx.ket = coherent::coherent_ket(ctx.reg, ctx.in_modes);
    ctx.spec = fock::HilbertSpec{n_modes, 0, 0};
    return ctx;
}

GrassmannElement kernel_operator_route(const FockOperator& e, const FockOperator& h, double t,
                                       const KernelContext& ctx) {
    if (e.spec.n_fermions != ctx.out_modes.n || e.spec.n_bosons != 0)
        throw std::invalid_argument("operator space does not match the kernel context");
    const FockOperator u = constrained_evolution(e, h, t);
    return coherent::matrix_element(ctx.bra, u.matrix, u.declared_parity, ctx.ket);
}

GrassmannElement reduced_hamiltonian(const SymbolicOperator& e_sym, const SymbolicOperator& h_sym,
                                     const CoherentVector& sector_bra,
                                     const CoherentVector& sector_ket, double tol) {
    const GrassmannElement h =
        coherent::pairing(sector_bra, h_sym.apply(sector_ket));
    if (h.parity() == grassmann::Parity::odd)
        throw std::runtime_error("reduced Hamiltonian came out parity odd");

    const long long d = e_sym.dim();
    std::vector<GrassmannElement> scaled;
    scaled.reserve(static_cast<std::size_t>(d * d));
    for (long long b = 0; b < d; ++b)
        for (long long c = 0; c < d; ++c)
            scaled.push_back(h * e_sym.entry(static_cast<int>(b), static_cast<int>(c)));
    const SymbolicOperator he =
        SymbolicOperator::from_entries(e_sym.registry(), e_sym.n_modes(), std::move(scaled));

    const SymbolicOperator ehe = e_sym.product(h_sym).product(e_sym);
    const double defect = ehe.max_entry_distance(he);
    if (defect > tol)
        throw std::runtime_error("projector does not reduce the Hamiltonian to a rank-one "
                                 "multiple (defect " + std::to_string(defect) + ")");
    return h;
}

GrassmannElement kernel_rank_one_route(const SymbolicOperator& e_sym, const GrassmannElement& h,
                                       double t, const KernelContext& ctx) {
    const GrassmannElement phase = (h * (-kI * t)).exp_even();
    return phase * coherent::pairing(ctx.bra, e_sym.apply(ctx.ket));
}

GrassmannElement closed_form_two_mode_single_occupancy(const KernelContext& ctx, double omega,
                                                       double t) {
    require_modes(ctx, 2, "two mode kernel");
    GrassmannElement dot(ctx.reg);
    for (int i = 0; i < 2; ++i) dot += cross_pair(ctx, i);
    return std::exp(-kI * omega * t) * (gaussian_pair(ctx) * dot);
}

GrassmannElement closed_form_three_mode_partial_fill(const KernelContext& ctx, double omega,
                                                     double t) {
    require_modes(ctx, 3, "three mode kernel");
    GrassmannElement single(ctx.reg), doubles(ctx.reg);
    for (int i = 0; i < 3; ++i) single += cross_pair(ctx, i);
    const int pairs[3][2] = {{0, 1}, {1, 2}, {2, 0}};
    for (auto [i, j] : pairs) doubles += cross_pair(ctx, i) * cross_pair(ctx, j);
    return gaussian_pair(ctx) *
           (std::exp(-kI * omega * t) * single + std::exp(-2.0 * kI * omega * t) * doubles);
}

GrassmannElement closed_form_shifted_even_sector(const KernelContext& ctx, const ModeSet& theta,
                                                 double omega, double t) {
    require_modes(ctx, 1, "shifted pair kernel");
    if (theta.n != 1) throw std::invalid_argument("reference modes must be single mode");
    const GrassmannElement shift = (gen(ctx.reg, ctx.out_modes.bar[0]) - gen(ctx.reg, theta.bar[0])) *
                                   (gen(ctx.reg, ctx.in_modes.psi[0]) - gen(ctx.reg, theta.psi[0]));
    const GrassmannElement energy =
        (-kI * omega * t) * (gen(ctx.reg, theta.bar[0]) * gen(ctx.reg, theta.psi[0]));
    return overlap_closed(ctx) * (-shift).exp_even() * energy.exp_even();
}

GrassmannElement closed_form_shifted_odd_sector(const KernelContext& ctx, const ModeSet& theta,
                                                double omega, double t) {
    require_modes(ctx, 1, "shifted pair kernel");
    if (theta.n != 1) throw std::invalid_argument("reference modes must be single mode");
    const GrassmannElement shift = (gen(ctx.reg, ctx.out_modes.bar[0]) - gen(ctx.reg, theta.bar[0])) *
                                   (gen(ctx.reg, ctx.in_modes.psi[0]) - gen(ctx.reg, theta.psi[0]));
    const GrassmannElement energy =
        (-kI * omega * t) * (gen(ctx.reg, theta.bar[0]) * gen(ctx.reg, theta.psi[0]));
    return std::exp(-kI * omega * t) * (overlap_closed(ctx) * shift * energy.exp_even());
}

GrassmannElement closed_form_balanced_difference_even(const KernelContext& ctx) {
    require_modes(ctx, 2, "balanced difference kernel");
    const GrassmannElement diff =
        (gen(ctx.reg, ctx.out_modes.bar[0]) - gen(ctx.reg, ctx.out_modes.bar[1])) *
        (gen(ctx.reg, ctx.in_modes.psi[0]) - gen(ctx.reg, ctx.in_modes.psi[1]));
    const GrassmannElement one = GrassmannElement::scalar(ctx.reg, 1.0);
    return overlap_closed(ctx) * (one - complexd{0.5} * diff);
}

GrassmannElement closed_form_balanced_difference_odd(const KernelContext& ctx) {
    require_modes(ctx, 2, "balanced difference kernel");
    const GrassmannElement diff =
        (gen(ctx.reg, ctx.out_modes.bar[0]) - gen(ctx.reg, ctx.out_modes.bar[1])) *
        (gen(ctx.reg, ctx.in_modes.psi[0]) - gen(ctx.reg, ctx.in_modes.psi[1]));
    const GrassmannElement quartic = cross_pair(ctx, 0) * cross_pair(ctx, 1);
    return gaussian_pair(ctx) * (quartic + complexd{0.5} * diff);
}

FockOperator bose_fermi_hamiltonian(const BoseFermiModel& model) {
    fock::OperatorPolynomial poly;
    for (int i = 1; i <= model.n_bosons; ++i)
        poly.terms.push_back({{model.omega, 0.0}, {}, {}, {i}, {i}});
    for (int i = 1; i <= model.n_fermions; ++i)
        poly.terms.push_back({{model.omega, 0.0}, {i}, {i}, {}, {}});
    return fock::realize(poly, model.spec());
}

FockOperator bose_fermi_constraint(const BoseFermiModel& model) {
    fock::OperatorPolynomial poly;
    for (int i = 1; i <= model.n_bosons; ++i)
        poly.terms.push_back({{1.0, 0.0}, {}, {}, {i}, {i}});
    for (int i = 1; i <= model.n_fermions; ++i)
        poly.terms.push_back({{-1.0, 0.0}, {i}, {i}, {}, {}});
    poly.terms.push_back({{-static_cast<double>(model.p), 0.0}, {}, {}, {}, {}});
    return fock::realize(poly, model.spec());
}

GrassmannElement mixed_kernel_operator_route(const FockOperator& u,
                                             const std::vector<complexd>& z_out,
                                             const std::vector<complexd>& z_in,
                                             const KernelContext& ctx) {
    const fock::HilbertSpec& spec = u.spec;
    if (spec.n_fermions != ctx.out_modes.n)
        throw std::invalid_argument("fermion mode count does not match the context");
    if (static_cast<int>(z_out.size()) != spec.n_bosons ||
        static_cast<int>(z_in.size()) != spec.n_bosons)
        throw std::invalid_argument("boson label count does not match the space");

    const long long fd = spec.fermion_dim();
    const long long bdim = spec.boson_dim();
    const long long bd = spec.boson_cutoff + 1;

    std::vector<std::vector<complexd>> aout, ain;
    for (int i = 0; i < spec.n_bosons; ++i) {
        aout.push_back(coherent::boson_coherent_amplitudes(z_out[static_cast<std::size_t>(i)],
                                                           spec.boson_cutoff));
        ain.push_back(coherent::boson_coherent_amplitudes(z_in[static_cast<std::size_t>(i)],
                                                          spec.boson_cutoff));
    }
    auto weight = [&](const std::vector<std::vector<complexd>>& table, long long idx) {
        complexd w{1.0, 0.0};
        for (int i = 0; i < static_cast<int>(table.size()); ++i) {
            w *= table[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx % bd)];
            idx /= bd;
        }
        return w;
    };

    fock::Matrix block = fock::Matrix::Zero(fd, fd);
    for (long long mb = 0; mb < bdim; ++mb) {
        const complexd wo = std::conj(weight(aout, mb));
        if (wo == complexd{}) continue;
        for (long long nb = 0; nb < bdim; ++nb) {
            const complexd wi = weight(ain, nb);
            if (wi == complexd{}) continue;
            block += (wo * wi) * u.matrix.block(mb * fd, nb * fd, fd, fd);
        }
    }

    // The contracted block must conserve fermion parity; scrub roundoff there.
    const double scale = std::max(1.0, block.cwiseAbs().maxCoeff());
    for (long long b = 0; b < fd; ++b)
        for (long long c = 0; c < fd; ++c)
            if ((std::popcount(static_cast<std::uint64_t>(b)) +
                 std::popcount(static_cast<std::uint64_t>(c))) &
                1) {
                if (std::abs(block(b, c)) > 1e-12 * scale)
                    throw std::runtime_error("contracted kernel block is not parity even");
                block(b, c) = complexd{};
            }
    return coherent::matrix_element(ctx.bra, block, fock::OpParity::even, ctx.ket);
}

GrassmannElement bose_fermi_kernel_quadrature(const BoseFermiModel& model,
                                              const std::vector<complexd>& z_out,
                                              const std::vector<complexd>& z_in, double t,
                                              const KernelContext& ctx, long long k_points) {
    if (ctx.out_modes.n != model.n_fermions)
        throw std::invalid_argument("fermion mode count does not match the context");
    if (static_cast<int>(z_out.size()) != model.n_bosons ||
        static_cast<int>(z_in.size()) != model.n_bosons)
        throw std::invalid_argument("boson label count does not match the model");

    const long long degree = static_cast<long long>(model.n_bosons) * model.cutoff +
                             model.n_fermions + std::abs(model.p);
    const long long k_count = k_points > 0 ? k_points : 2 * degree + 1;

    double norm = 0.0;
    for (const complexd& z : z_out) norm += std::norm(z);
    for (const complexd& z : z_in) norm += std::norm(z);
    const double pref = std::exp(-0.5 * norm);

    GrassmannElement acc(ctx.reg);
    for (long long k = 0; k < k_count; ++k) {
        const double phi =
            2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(k_count);
        const complexd wb = std::exp(-kI * (model.omega * t + phi));
        const complexd wf = std::exp(-kI * (model.omega * t - phi));

        complexd boson{1.0, 0.0};
        for (int i = 0; i < model.n_bosons; ++i) {
            const complexd x = wb * std::conj(z_out[static_cast<std::size_t>(i)]) *
                               z_in[static_cast<std::size_t>(i)];
            complexd series{1.0, 0.0}, term{1.0, 0.0};
            for (int m = 1; m <= model.cutoff; ++m) {
                term *= x / static_cast<double>(m);
                series += term;
            }
            boson *= series;
        }

        GrassmannElement fermion = GrassmannElement::scalar(ctx.reg, 1.0);
        for (int i = 0; i < model.n_fermions; ++i)
            fermion *= GrassmannElement::scalar(ctx.reg, 1.0) + wf * cross_pair(ctx, i);

        acc += (std::exp(kI * (phi * model.p)) * boson) * fermion;
    }
    acc *= complexd{1.0 / static_cast<double>(k_count), 0.0};
    return pref * (gaussian_pair(ctx) * acc);
}

GrassmannElement bose_fermi_kernel_mode_sum(const BoseFermiModel& model,
                                            const std::vector<complexd>& z_out,
                                            const std::vector<complexd>& z_in, double t,
                                            const KernelContext& ctx) {
    if (ctx.out_modes.n != model.n_fermions)
        throw std::invalid_argument("fermion mode count does not match the context");

    double norm = 0.0;
    for (const complexd& z : z_out) norm += std::norm(z);
    for (const complexd& z : z_in) norm += std::norm(z);
    const double pref = std::exp(-0.5 * norm);

    GrassmannElement acc(ctx.reg);
    std::vector<int> occ(static_cast<std::size_t>(model.n_bosons), 0);
    for (;;) {
        long long m_total = 0;
        complexd coeff{1.0, 0.0};
        for (int i = 0; i < model.n_bosons; ++i) {
            const int m = occ[static_cast<std::size_t>(i)];
            m_total += m;
            double fact = 1.0;
            for (int q = 2; q <= m; ++q) fact *= q;
            coeff *= std::pow(std::conj(z_out[static_cast<std::size_t>(i)]), m) *
                     std::pow(z_in[static_cast<std::size_t>(i)], m) / fact;
        }

        for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << model.n_fermions); ++subset) {
            const long long n_total = std::popcount(subset);
            if (m_total != n_total + model.p) continue;
            GrassmannElement word = GrassmannElement::scalar(
                ctx.reg, coeff * std::exp(-kI * model.omega * t *
                                          static_cast<double>(m_total + n_total)));
            // conjugated outgoing word: bars in descending mode order.
            for (int i = model.n_fermions - 1; i >= 0; --i)
                if (subset >> i & 1) word *= gen(ctx.reg, ctx.out_modes.bar[i]);
            for (int i = 0; i < model.n_fermions; ++i)
                if (subset >> i & 1) word *= gen(ctx.reg, ctx.in_modes.psi[i]);
            acc += word;
        }

        int pos = 0;
        while (pos < model.n_bosons && occ[static_cast<std::size_t>(pos)] == model.cutoff)
            occ[static_cast<std::size_t>(pos++)] = 0;
        if (pos == model.n_bosons) break;
        ++occ[static_cast<std::size_t>(pos)];
    }
    return pref * (gaussian_pair(ctx) * acc);
}

}  // namespace cfq::propagators
