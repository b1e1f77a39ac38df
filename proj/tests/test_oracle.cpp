#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "qsim/oracle.hpp"
#include "qsim/stats.hpp"

using namespace qsim;

TEST_CASE("single H gives the uniform 1-qubit state") {
  Circuit c = parse_circuit("1\n0 h 0\n");
  StateVector sv = evolve(c);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(sv.amplitude(0).real() == doctest::Approx(s));
  CHECK(sv.amplitude(1).real() == doctest::Approx(s));
}

TEST_CASE("H tensor H then CZ flips the |11> sign") {
  Circuit c;
  c.rows = 1;
  c.cols = 2;
  c.gates = {{GateKind::H, 0, 0, -1},
             {GateKind::H, 0, 1, -1},
             {GateKind::CZ, 1, 0, 1},
             {GateKind::H, 2, 0, -1},
             {GateKind::H, 2, 1, -1}};
  // Evolve only the first two cycles by dropping the trailing H layer: use
  // the full circuit but compare against the hand value after reversing the
  // final layer is awkward, so build the 2-cycle circuit directly. The
  // Hadamard-layer validation applies to parsed circuits; here we apply
  // gates straight to the state.
  StateVector sv(2);
  sv.apply_single(gate_matrix(GateKind::H), 0);
  sv.apply_single(gate_matrix(GateKind::H), 1);
  sv.apply_cz(0, 1);
  CHECK(sv.amplitude(0).real() == doctest::Approx(0.5));
  CHECK(sv.amplitude(1).real() == doctest::Approx(0.5));
  CHECK(sv.amplitude(2).real() == doctest::Approx(0.5));
  CHECK(sv.amplitude(3).real() == doctest::Approx(-0.5));
}

TEST_CASE("norm stays 1 through a deep random circuit") {
  Circuit c = generate_rqc(4, 4, 8, 21);
  StateVector sv = evolve(c);
  CHECK(std::abs(sv.norm() - 1.0) < 1e-10);
}

TEST_CASE("qubit count cap") {
  CHECK_THROWS(StateVector(kMaxOracleQubits + 1));
}

TEST_CASE("bitstring index round-trip") {
  CHECK(bitstring_index("0000") == 0);
  CHECK(bitstring_index("0001") == 1);
  CHECK(bitstring_index("1000") == 8);
  CHECK(index_bitstring(9, 4) == "1001");
}

TEST_CASE("exact sampling from a basis state returns only that outcome") {
  // T-free circuit keeping |0>: H then H on one qubit.
  Circuit c = parse_circuit("1\n0 h 0\n1 h 0\n");
  StateVector sv = evolve(c);
  auto samples = exact_sample(sv, 200, 3);
  for (auto s : samples) CHECK(s == 0);
}

TEST_CASE("exact sampling from the uniform state passes chi-square") {
  Circuit c = parse_circuit("4\n0 h 0\n0 h 1\n0 h 2\n0 h 3\n");
  StateVector sv = evolve(c);
  const std::size_t m = 100000;
  auto samples = exact_sample(sv, m, 17);
  std::vector<double> observed(16, 0.0), expected(16, m / 16.0);
  for (auto s : samples) observed[s] += 1.0;
  CHECK(stats::chi_square_gof(observed, expected) > 0.01);
}

TEST_CASE("porter-thomas: the scaled mean is exactly 1 and deep circuits fit Exp(1)") {
  Circuit c = generate_rqc(4, 4, 12, 0);
  StateVector sv = evolve(c);
  auto r = porter_thomas_check(sv);
  CHECK(r.mean_scaled_prob == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.ks_pvalue > 0.01);
}

TEST_CASE("porter-thomas: the product state is a negative control") {
  Circuit c = parse_circuit("4\n0 h 0\n0 h 1\n0 h 2\n0 h 3\n");
  StateVector sv = evolve(c);
  auto r = porter_thomas_check(sv);
  CHECK(r.mean_scaled_prob == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.ks_pvalue < 0.01);
}

TEST_CASE("stats: chi-square p-value sanity") {
  // dof 10, statistic 10 is unremarkable; statistic 40 is extreme.
  CHECK(stats::chi_square_pvalue(10.0, 10) > 0.3);
  CHECK(stats::chi_square_pvalue(40.0, 10) < 1e-4);
}

TEST_CASE("stats: KS against Exp(1) accepts exponential and rejects uniform") {
  std::mt19937_64 gen(4);
  std::vector<double> expo(20000), unif(20000);
  for (auto& x : expo) {
    double u = static_cast<double>(gen() >> 11) * 0x1p-53;
    x = -std::log1p(-u);
  }
  for (auto& x : unif) x = static_cast<double>(gen() >> 11) * 0x1p-53;
  CHECK(stats::ks_test_exp1(expo).pvalue > 0.01);
  CHECK(stats::ks_test_exp1(unif).pvalue < 1e-6);
}
