#pragma once

// Time-lattice evaluation of constrained coherent-state kernels by symbolic
// Berezin convolution.  A run allocates fresh generator families, one per
// intermediate time slice, folds short-time factors slice by slice, and
// integrates each intermediate family out as soon as it is complete.  The
// result is remapped onto the caller's label frame; intermediate generators
// never leak (checked by bitmask scan).
//
// Slice factor styles:
//   symbol  - <n|n-1> exp(-i eps H(bar_n, psi_{n-1})) with the normal symbol
//             substituted; approximate per slice, first-order in eps overall.
//   exact   - the numeric matrix element <n|exp(-i eps H)|n-1>; the fold then
//             telescopes and the kernel is independent of the slice count.
//
// Multiplier schedules attach per-slice constraint phases exp(-i eps eta_n
// Phi), either by symbol substitution or as exact phase matrices.  The
// default schedule is empty: all eta_n = 0 with one projector insertion at
// the initial time.

#include <functional>
#include <span>
#include <vector>

#include "cfq/propagators.hpp"

namespace cfq::lattice {

using coherent::ModeSet;
using coherent::SymbolicOperator;
using fock::FockOperator;
using grassmann::complexd;
using grassmann::GrassmannElement;
using grassmann::RegistryPtr;
using propagators::KernelContext;

enum class SliceStyle { symbol, exact };
enum class MultiplierStyle { substitution, exact_phase };

struct LatticePlan {
    int n_slices = 1;
    double t = 0.0;
    SliceStyle slices = SliceStyle::symbol;
    MultiplierStyle multipliers = MultiplierStyle::exact_phase;
    // Per-slice multiplier values; empty means all zero.
    std::vector<double> eta;
};

// Overlap of coherent labels on two families of equal mode count.
GrassmannElement short_time_overlap(const RegistryPtr& reg, const ModeSet& to,
                                    const ModeSet& from);

// One symbol-substituted slice factor: overlap times exp(-i eps H) and, when
// eta != 0, exp(-i eps eta Phi), both with (bar_to, psi_from) substituted.
// Terms are normal ordered by construction of OperatorPolynomial.
GrassmannElement short_time_kernel(const RegistryPtr& reg, const ModeSet& to, const ModeSet& from,
                                   const fock::OperatorPolynomial& h_poly, double eps,
                                   double eta = 0.0,
                                   const fock::OperatorPolynomial* phi_poly = nullptr);

// Berezin integration of a product over one shared slice family.  Throws if
// the factors do not involve the shared generators.
GrassmannElement convolve(const GrassmannElement& a, const GrassmannElement& b,
                          const ModeSet& shared);

// Kernel <out|U E|in> with the projector inserted once at the initial time
// and n_slices short-time factors folded per the plan.  phi_poly is required
// when the schedule is nonempty.
GrassmannElement lattice_kernel_first_class(const FockOperator& e,
                                            const fock::OperatorPolynomial& h_poly,
                                            const LatticePlan& plan, const KernelContext& frame,
                                            const fock::OperatorPolynomial* phi_poly = nullptr);

// Sector data for the per-slice insertion route, built on the run's registry
// by a caller-supplied deterministic builder (it may add reference modes).
struct SectorModel {
    SymbolicOperator e_sym;
    GrassmannElement h_reduced;
};
using SectorBuilder = std::function<SectorModel(const KernelContext&)>;

// Kernel with the sector projector inserted at every slice.  Each factor is
// exp(-i eps h) <n|E|n-1>, exact for rank-one reduced dynamics, so the fold
// telescopes at every slice count.  Multiplier schedules do not apply.
GrassmannElement lattice_kernel_second_class(const SectorBuilder& builder, const LatticePlan& plan,
                                             const KernelContext& frame);

// Mixed-space lattice: boson indices are contracted numerically per slice
// while fermion labels are convolved symbolically; the constraint projector
// is folded into the first slice.  Exact at every slice count.
GrassmannElement bose_fermi_kernel_lattice(const propagators::BoseFermiModel& model,
                                           const std::vector<complexd>& z_out,
                                           const std::vector<complexd>& z_in, double t,
                                           int n_slices, const KernelContext& frame);

struct TrotterCurve {
    std::vector<int> n_values;
    std::vector<double> errors;
    // Least-squares slope of log error vs log slice count over the points
    // with error above roundoff; 0 when fewer than two such points remain.
    double slope = 0.0;
};

// Deviation of the first-class lattice kernel from the operator route as a
// function of slice count.
TrotterCurve trotter_convergence(const FockOperator& e, const FockOperator& h_num,
                                 const fock::OperatorPolynomial& h_poly, double t,
                                 std::span<const int> n_values, SliceStyle style,
                                 const KernelContext& frame);

}  // namespace cfq::lattice
