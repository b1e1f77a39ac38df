#include "qsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace qsim {

StateVector::StateVector(int num_qubits) : n_(num_qubits) {
  if (n_ < 1 || n_ > kMaxOracleQubits)
    throw std::invalid_argument("state vector limited to 1.." +
                                std::to_string(kMaxOracleQubits) + " qubits");
  amps_.assign(std::size_t{1} << n_, cdouble{});
  amps_[0] = 1.0;
}

double StateVector::probability(std::uint64_t idx) const {
  return std::norm(amps_[idx]);
}

void StateVector::apply_single(const mat2cd& u, int qubit) {
  const std::uint64_t dim = amps_.size();
  const std::uint64_t mask = std::uint64_t{1} << (n_ - 1 - qubit);
  const cdouble u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const std::uint64_t j = i | mask;
    const cdouble a = amps_[i], b = amps_[j];
    amps_[i] = u00 * a + u01 * b;
    amps_[j] = u10 * a + u11 * b;
  }
}

void StateVector::apply_cz(int a, int b) {
  const std::uint64_t ma = std::uint64_t{1} << (n_ - 1 - a);
  const std::uint64_t mb = std::uint64_t{1} << (n_ - 1 - b);
  const std::uint64_t both = ma | mb;
  const std::uint64_t dim = amps_.size();
  for (std::uint64_t i = 0; i < dim; ++i)
    if ((i & both) == both) amps_[i] = -amps_[i];
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amps_) s += std::norm(a);
  return std::sqrt(s);
}

StateVector evolve(const Circuit& c) {
  validate_circuit(c);
  StateVector sv(c.num_qubits());
  const int cycles = c.cycles();
  for (int cyc = 0; cyc < cycles; ++cyc) {
    for (const auto& g : c.gates) {
      if (g.cycle != cyc) continue;
      if (g.kind == GateKind::CZ)
        sv.apply_cz(g.q0, g.q1);
      else
        sv.apply_single(gate_matrix(g.kind), g.q0);
    }
    if (std::abs(sv.norm() - 1.0) > 1e-10)
      throw std::runtime_error("state norm drifted past 1e-10");
  }
  return sv;
}

std::uint64_t bitstring_index(const std::string& bits) {
  std::uint64_t idx = 0;
  for (char ch : bits) {
    if (ch != '0' && ch != '1') throw std::invalid_argument("bitstring: bad character");
    idx = (idx << 1) | static_cast<std::uint64_t>(ch - '0');
  }
  return idx;
}

std::string index_bitstring(std::uint64_t idx, int n) {
  std::string s(static_cast<std::size_t>(n), '0');
  for (int q = 0; q < n; ++q)
    if (idx & (std::uint64_t{1} << (n - 1 - q))) s[static_cast<std::size_t>(q)] = '1';
  return s;
}

std::vector<std::uint64_t> exact_sample(const StateVector& sv, std::size_t m,
                                        std::uint64_t seed) {
  const auto& amps = sv.amplitudes();
  std::vector<double> cdf(amps.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    acc += std::norm(amps[i]);
    cdf[i] = acc;
  }
  cdf.back() = std::max(cdf.back(), 1.0);

  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> out(m);
  for (std::size_t s = 0; s < m; ++s) {
    // 53-bit uniform in [0,1).
    double u = static_cast<double>(rng() >> 11) * 0x1p-53;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    out[s] = static_cast<std::uint64_t>(it - cdf.begin());
    if (out[s] >= amps.size()) out[s] = amps.size() - 1;
  }
  return out;
}

PorterThomasReport porter_thomas_check(const StateVector& sv) {
  const auto& amps = sv.amplitudes();
  const double dim = static_cast<double>(amps.size());
  std::vector<double> scaled(amps.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    scaled[i] = dim * std::norm(amps[i]);
    mean += scaled[i];
  }
  mean /= dim;
  auto ks = stats::ks_test_exp1(std::move(scaled));
  return {mean, ks.statistic, ks.pvalue};
}

}  // namespace qsim
