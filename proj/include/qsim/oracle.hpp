#pragma once

#include <cstdint>
#include <vector>

#include "qsim/circuit.hpp"
#include "qsim/stats.hpp"
#include "qsim/types.hpp"

namespace qsim {

// Brute-force double-precision state vector, the desk-scale ground truth for
// the contraction engine. Capped at 26 qubits (1 GiB of complex128).
class StateVector {
 public:
  explicit StateVector(int num_qubits);

  int num_qubits() const { return n_; }
  const std::vector<cdouble>& amplitudes() const { return amps_; }

  // Basis-state index convention: qubit q contributes bit (n-1-q), i.e. the
  // bitstring reads left to right in qubit order, matching the circuit text
  // format's row-major qubit numbering.
  cdouble amplitude(std::uint64_t basis_index) const { return amps_[basis_index]; }
  double probability(std::uint64_t basis_index) const;

  void apply_single(const mat2cd& u, int qubit);
  void apply_cz(int a, int b);

  double norm() const;

 private:
  int n_;
  std::vector<cdouble> amps_;
};

inline constexpr int kMaxOracleQubits = 26;

// Applies gates cycle by cycle from |0...0>. Norm is checked to 1e-10 after
// every cycle.
StateVector evolve(const Circuit& c);

// Basis index of a '0'/'1' bitstring in qubit order.
std::uint64_t bitstring_index(const std::string& bits);
std::string index_bitstring(std::uint64_t idx, int n);

// M i.i.d. draws from |a|^2 via inverse CDF; returns basis indices.
std::vector<std::uint64_t> exact_sample(const StateVector& sv, std::size_t m,
                                        std::uint64_t seed);

struct PorterThomasReport {
  double mean_scaled_prob;  // mean of 2^n p, exactly 1 for a normalized state
  double ks_statistic;      // KS distance of 2^n p against Exp(1)
  double ks_pvalue;
};

// Tests the scaled output probabilities 2^n |a|^2 against the exponential
// law expected of a deep random circuit.
PorterThomasReport porter_thomas_check(const StateVector& sv);

}  // namespace qsim
