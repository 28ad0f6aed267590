#pragma once

// Fermion coherent states over the Grassmann engine, their pairings with Fock
// amplitudes, and operators whose matrix entries are Grassmann valued.
//
// Conventions, fixed once and used everywhere:
//  * A state is a table of Grassmann amplitudes indexed by the occupation
//    bitmask b (mode 1 = lowest bit), with the amplitude written to the LEFT
//    of |b> or <b|.
//  * k_b = popcount(b); the reorder sign s_b = (-1)^(k_b (k_b-1)/2) converts
//    between <b| and the conjugate of |b>.
//  * Moving a parity-odd operator or amplitude past a k-fermion basis vector
//    costs (-1)^(k * degree); `twist` applies that sign monomial by monomial.

#include "cfq/fock.hpp"
#include "cfq/grassmann.hpp"

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cfq::coherent {

using grassmann::complexd;
using grassmann::GrassmannElement;
using grassmann::RegistryPtr;

// One label family: modes i = 1..n with conjugate generator pairs.
// bar[i-1] indexes base-bar_i(suffix), psi[i-1] indexes base_i(suffix).
struct ModeSet {
    int n = 0;
    std::vector<int> bar;
    std::vector<int> psi;
};

// Registers n conjugate pairs named by `base` plus a combining macron for the
// barred partner, e.g. base "ψ", suffix "″" gives ψ̄1″, ψ1″, ψ̄2″, ...
// The barred generator of each pair gets the lower registry index.
ModeSet add_conjugate_modes(grassmann::GeneratorRegistry& reg, const std::string& base, int n,
                            const std::string& suffix);

// Berezin measure for a full mode set, outermost first:
// dpsibar_1 dpsi_1 dpsibar_2 dpsi_2 ...  (integrate() applies rightmost first).
std::vector<int> measure_indices(const ModeSet& modes);

struct CoherentVector {
    RegistryPtr reg;
    ModeSet modes;
    std::vector<GrassmannElement> amp;  // size 2^modes.n
    bool is_ket = true;
};

// |Psi> and <Psi| on the given modes; amplitudes carry the Gaussian factor
// prod_i exp(-psibar_i psi_i / 2).
CoherentVector coherent_ket(const RegistryPtr& reg, const ModeSet& modes);
CoherentVector coherent_bra(const RegistryPtr& reg, const ModeSet& modes);

// The parity-odd partner states on a single mode (modes.n == 1): the ket is
// annihilated by f^dagger - thetabar and pairs to zero with <theta|.
// Normalization is fixed so the two outer-product projectors sum to one.
CoherentVector odd_coherent_ket(const RegistryPtr& reg, const ModeSet& modes);
CoherentVector odd_coherent_bra(const RegistryPtr& reg, const ModeSet& modes);

// <bra|ket> including all reorder signs.
GrassmannElement pairing(const CoherentVector& bra, const CoherentVector& ket);

// Numeric operator acting on a ket: (A kappa)_b = sum_c A_bc twist_p(kappa_c).
CoherentVector apply(const Eigen::MatrixXcd& m, fock::OpParity parity, const CoherentVector& ket);
CoherentVector apply(const fock::FockOperator& op, const CoherentVector& ket);

// Numeric operator acting on a bra: (beta A)_b = sum_c s_c s_b beta_c A_cb.
CoherentVector apply_bra(const CoherentVector& bra, const Eigen::MatrixXcd& m);
CoherentVector apply_bra(const CoherentVector& bra, const fock::FockOperator& op);

GrassmannElement matrix_element(const CoherentVector& bra, const Eigen::MatrixXcd& m,
                                fock::OpParity parity, const CoherentVector& ket);
GrassmannElement matrix_element(const CoherentVector& bra, const fock::FockOperator& op,
                                const CoherentVector& ket);

// Normal symbol of a normal-ordered fermion polynomial: each creator becomes
// the barred bra-side generator, each annihilator the ket-side one, factors
// kept in written order.  Boson factors are rejected.
GrassmannElement normal_symbol(const fock::OperatorPolynomial& poly, const RegistryPtr& reg,
                               const ModeSet& bra_modes, const ModeSet& ket_modes);

// Amplitudes <m|z> of a normalized boson coherent state, truncated at n_max.
std::vector<complexd> boson_coherent_amplitudes(complexd z, int n_max);

// Multiplies each monomial of x by (-1)^(k * degree).
GrassmannElement twist(const GrassmannElement& x, int k);
// s_b for a basis bitmask.
int reorder_sign(std::uint64_t b);

// Operator with Grassmann-valued entries M_bc (row-major, O|c> = sum_b M_bc |b>,
// entries written to the left of |b>).  Entries must be parity homogeneous:
// deg(M_bc) + k_b + k_c is the same mod 2 for every monomial.
class SymbolicOperator {
  public:
    static SymbolicOperator from_entries(RegistryPtr reg, int n_modes,
                                         std::vector<GrassmannElement> row_major);
    static SymbolicOperator from_numeric(const RegistryPtr& reg, const Eigen::MatrixXcd& m);
    static SymbolicOperator identity(const RegistryPtr& reg, int n_modes);
    // |ket><bra| as an operator table.
    static SymbolicOperator outer(const CoherentVector& ket, const CoherentVector& bra);

    int n_modes() const { return n_modes_; }
    long long dim() const { return 1LL << n_modes_; }
    fock::OpParity parity() const { return parity_; }
    const RegistryPtr& registry() const { return reg_; }
    const GrassmannElement& entry(int b, int c) const;

    SymbolicOperator operator+(const SymbolicOperator& o) const;
    SymbolicOperator operator-(const SymbolicOperator& o) const;
    SymbolicOperator operator*(complexd c) const;
    // Operator product: (*this) applied after `rhs`.
    SymbolicOperator product(const SymbolicOperator& rhs) const;
    SymbolicOperator adjoint_op() const;
    // Berezin-integrates every entry over the given generators.
    SymbolicOperator integrate_entries(std::span<const int> gens) const;

    CoherentVector apply(const CoherentVector& ket) const;

    // All entries scalar -> dense matrix; throws otherwise.
    Eigen::MatrixXcd to_numeric() const;
    bool is_scalar() const;

    double max_entry_distance(const SymbolicOperator& o) const;

  private:
    SymbolicOperator() = default;
    void infer_and_check_parity();

    RegistryPtr reg_;
    int n_modes_ = 0;
    std::vector<GrassmannElement> entries_;
    fock::OpParity parity_ = fock::OpParity::even;
};

// Max deviation of integral(|Psi><Psi| measure) from the identity table.
double identity_resolution_defect(int n_modes);

}  // namespace cfq::coherent
