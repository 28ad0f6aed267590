#pragma once

// Constrained propagators E exp(-it EHE) E and their coherent-state kernels,
// evaluated along independent routes that must agree:
//   * operator side: dense matrices, then the Grassmann matrix element;
//   * rank-one reduction: for a projector with E H E = h E, the kernel
//     factorizes as exp(-i t h) <out| E |in>;
//   * closed forms: hand-expanded kernels for the worked model systems;
//   * for the oscillator model with a boson-fermion number balance
//     constraint, additionally a phase quadrature and an explicit mode sum.

#include "cfq/coherent.hpp"
#include "cfq/constraints.hpp"
#include "cfq/fock.hpp"
#include "cfq/grassmann.hpp"

#include <vector>

namespace cfq::propagators {

using coherent::CoherentVector;
using coherent::ModeSet;
using coherent::SymbolicOperator;
using fock::FockOperator;
using grassmann::complexd;
using grassmann::GrassmannElement;
using grassmann::RegistryPtr;

// Kernels along different routes must agree within this bound.
inline constexpr double route_tolerance = 1e-12;
// The mixed boson-fermion kernel gets a little slack for the larger sums.
inline constexpr double mixed_route_tolerance = 1e-10;

// E exp(-it E H E) E.  E must be a projector (certified), H self-adjoint.
FockOperator constrained_evolution(const FockOperator& e, const FockOperator& h, double t);

// Bra labels carry a double prime, ket labels a prime: psibar_i'' / psi_i'.
struct KernelContext {
    RegistryPtr reg;
    ModeSet out_modes, in_modes;
    CoherentVector bra, ket;
    fock::HilbertSpec spec;
};
KernelContext make_kernel_context(int n_modes);

// <out'' | E exp(-it EHE) E | in'>.
GrassmannElement kernel_operator_route(const FockOperator& e, const FockOperator& h, double t,
                                       const KernelContext& ctx);

// Checks E H E = h E with h = <sector|H|sector> (coefficient exact within
// tol) and returns h.  The sector states live on the reference modes of the
// projector, e.g. the shifted-pair labels.
GrassmannElement reduced_hamiltonian(const SymbolicOperator& e_sym, const SymbolicOperator& h_sym,
                                     const CoherentVector& sector_bra,
                                     const CoherentVector& sector_ket, double tol = route_tolerance);

// exp(-it h) <out''| E |in'> for a rank-one-reduced projector.
GrassmannElement kernel_rank_one_route(const SymbolicOperator& e_sym, const GrassmannElement& h,
                                       double t, const KernelContext& ctx);

// Closed forms.  `omega` scales a number-sum Hamiltonian omega * sum f^+_i f_i
// (pass 0 for pure projection), except where noted.
//
// Two modes, constraint sum n_i = 1.
GrassmannElement closed_form_two_mode_single_occupancy(const KernelContext& ctx, double omega,
                                                       double t);
// Three modes, constraint keeps partially filled states only.
GrassmannElement closed_form_three_mode_partial_fill(const KernelContext& ctx, double omega,
                                                     double t);
// Single mode with the shifted pair chi = f - theta, H = omega f^+ f.
// Even sector: kernel through |theta><theta|.
GrassmannElement closed_form_shifted_even_sector(const KernelContext& ctx, const ModeSet& theta,
                                                 double omega, double t);
// Odd sector: kernel through the partner state, reduced energy omega(1 + thetabar theta).
GrassmannElement closed_form_shifted_odd_sector(const KernelContext& ctx, const ModeSet& theta,
                                                double omega, double t);
// Two modes, chi = (f1 - f2)/sqrt(2), pure projection (H = 0); the kept
// sector of chi chi^+ and its complement.
GrassmannElement closed_form_balanced_difference_even(const KernelContext& ctx);
GrassmannElement closed_form_balanced_difference_odd(const KernelContext& ctx);

// Oscillator model: H = omega (sum b^+ b + sum f^+ f) with the constraint
// sum b^+ b - sum f^+ f = p.
struct BoseFermiModel {
    int n_bosons = 1;
    int n_fermions = 1;
    int p = 0;
    double omega = 1.0;
    int cutoff = 8;

    fock::HilbertSpec spec() const { return {n_fermions, n_bosons, cutoff}; }
};
FockOperator bose_fermi_hamiltonian(const BoseFermiModel& model);
FockOperator bose_fermi_constraint(const BoseFermiModel& model);

// <z'', out''| U |z', in'> for a numeric operator on the mixed space: boson
// indices are contracted with truncated coherent amplitudes, the fermion
// block element is taken in the Grassmann algebra.
GrassmannElement mixed_kernel_operator_route(const FockOperator& u,
                                             const std::vector<complexd>& z_out,
                                             const std::vector<complexd>& z_in,
                                             const KernelContext& ctx);

// Discrete phase average of the constrained oscillator kernel; exact for
// k_points >= 2 (n_bosons * cutoff + n_fermions + |p|) + 1 (0 = choose that).
GrassmannElement bose_fermi_kernel_quadrature(const BoseFermiModel& model,
                                              const std::vector<complexd>& z_out,
                                              const std::vector<complexd>& z_in, double t,
                                              const KernelContext& ctx, long long k_points = 0);

// Explicit sum over boson occupations and fermion subsets obeying the
// number balance.
GrassmannElement bose_fermi_kernel_mode_sum(const BoseFermiModel& model,
                                            const std::vector<complexd>& z_out,
                                            const std::vector<complexd>& z_in, double t,
                                            const KernelContext& ctx);

}  // namespace cfq::propagators
