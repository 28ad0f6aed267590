#pragma once

// JSON problem configuration: Hilbert space shape, operator term lists,
// constraint sets, lattice parameters, and the tolerance table.  Complex
// numbers are [re, im] pairs and mode indices are 1-based throughout.
// Unknown keys are rejected so typos surface as errors, and every
// diagnostic names the offending field path.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfq/fock.hpp"

namespace cfq::config {

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ToleranceSet {
    double route = 1e-12;
    double mixed_route = 1e-10;
    double certificate = 1e-12;
    double closure = 1e-10;
};

struct LatticeSection {
    bool present = false;
    int n_slices = 1;
    double t = 0.0;
    std::vector<double> schedule;             // per-slice multipliers; empty = all zero
    std::string slices = "symbol";            // "symbol" or "exact"
    std::string multipliers = "exact_phase";  // "exact_phase" or "substitution"
};

struct BoseFermiSection {
    bool present = false;
    int p = 0;
    double omega = 1.0;
};

struct ProblemConfig {
    std::string origin;
    std::string example;
    fock::HilbertSpec spec{0, 0, 0};
    fock::OperatorPolynomial hamiltonian;
    std::vector<fock::OperatorPolynomial> even_constraints;
    std::vector<fock::OperatorPolynomial> odd_constraints;
    LatticeSection lattice;
    BoseFermiSection bose_fermi;
    ToleranceSet tolerances;
};

ProblemConfig parse_config(const std::string& text, const std::string& origin);
ProblemConfig load_config(const std::string& path);

// Coherent labels for kernel evaluation, one complex value per boson mode.
struct LabelSet {
    std::vector<std::complex<double>> z_out;
    std::vector<std::complex<double>> z_in;
};
LabelSet parse_labels(const std::string& text, const std::string& origin);
LabelSet load_labels(const std::string& path);

// FNV-1a over the raw bytes; stable across runs and platforms.
std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace cfq::config
