#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "qsim/circuit.hpp"

using namespace qsim;

namespace {

bool approx_equal(const mat2cd& a, const mat2cd& b, double tol = 1e-6) {
  return (a - b).cwiseAbs().maxCoeff() < tol;
}

}  // namespace

TEST_CASE("gate matrices are unitary to 1e-6") {
  for (auto k : {GateKind::H, GateKind::T, GateKind::XHalf, GateKind::YHalf}) {
    mat2cd u = gate_matrix(k);
    CHECK(approx_equal(u.adjoint() * u, mat2cd::Identity()));
  }
}

TEST_CASE("sqrt gates square to the Pauli matrices") {
  mat2cd x, y;
  x << 0, 1, 1, 0;
  y << cdouble(0, 0), cdouble(0, -1), cdouble(0, 1), cdouble(0, 0);
  CHECK(approx_equal(gate_matrix(GateKind::XHalf) * gate_matrix(GateKind::XHalf), x));
  CHECK(approx_equal(gate_matrix(GateKind::YHalf) * gate_matrix(GateKind::YHalf), y));
}

TEST_CASE("CZ phase table is diag(1,1,1,-1)") {
  CHECK(kCzPhase[0] == 1.0);
  CHECK(kCzPhase[1] == 1.0);
  CHECK(kCzPhase[2] == 1.0);
  CHECK(kCzPhase[3] == -1.0);
}

TEST_CASE("parse: minimal well-formed file") {
  Circuit c = parse_circuit("4\n0 h 0\n0 h 1\n0 h 2\n0 h 3\n");
  CHECK(c.num_qubits() == 4);
  CHECK(c.rows == 2);
  CHECK(c.cols == 2);
  CHECK(c.gates.size() == 4);
  CHECK(c.cycles() == 1);
}

TEST_CASE("parse: smallest entangling circuit") {
  Circuit c = parse_circuit("2\n0 h 0\n0 h 1\n1 cz 0 1\n2 h 0\n2 h 1\n");
  CHECK(c.num_qubits() == 2);
  CHECK(c.gates.size() == 5);
  CHECK(c.depth_m() == 1);  // depth label (1, 1, 1)
}

TEST_CASE("parse errors carry line numbers") {
  try {
    parse_circuit("2\n0 h 0\nnonsense\n");
    FAIL("expected parse error");
  } catch (const CircuitError& e) {
    CHECK(e.line == 3);
  }
  try {
    parse_circuit("2\n0 h 0\n0 h 7\n");
    FAIL("expected parse error");
  } catch (const CircuitError& e) {
    CHECK(e.line == 3);
  }
  CHECK_THROWS_AS(parse_circuit("2\n0 q 0\n"), CircuitError);
}

TEST_CASE("validation: clock-cycle exclusivity and CZ adjacency") {
  CHECK_THROWS_WITH_AS(parse_circuit("2\n0 h 0\n0 h 0\n"),
                       doctest::Contains("two gates on qubit"), CircuitError);
  // 2x2 grid: qubits 0 and 3 are diagonal, not adjacent.
  CHECK_THROWS_WITH_AS(
      parse_circuit("4\n0 h 0\n0 h 1\n0 h 2\n0 h 3\n1 cz 0 3\n2 h 0\n2 h 1\n2 h 2\n2 h 3\n"),
      doctest::Contains("non-adjacent"), CircuitError);
}

TEST_CASE("validation: Hadamard layers are required") {
  CHECK_THROWS_WITH_AS(parse_circuit("2\n0 h 0\n"), doctest::Contains("every qubit"),
                       CircuitError);
  CHECK_THROWS_WITH_AS(parse_circuit("2\n0 h 0\n0 h 1\n1 t 0\n"),
                       doctest::Contains("Hadamard"), CircuitError);
}

TEST_CASE("generate: m=0 degenerates to two H layers") {
  Circuit c = generate_rqc(2, 2, 0, 12345);
  CHECK(c.cycles() == 2);
  CHECK(c.gates.size() == 8);
  for (const auto& g : c.gates) CHECK(g.kind == GateKind::H);
}

TEST_CASE("generate is deterministic in the seed") {
  Circuit a = generate_rqc(4, 4, 8, 987);
  Circuit b = generate_rqc(4, 4, 8, 987);
  CHECK(a == b);
  Circuit c = generate_rqc(4, 4, 8, 988);
  CHECK_FALSE(a == c);
}

TEST_CASE("generate: every T on a qubit is its first single-qubit gate") {
  for (std::uint64_t seed : {1ull, 7ull, 42ull}) {
    Circuit c = generate_rqc(4, 4, 8, seed);
    std::map<int, bool> seen_1q;
    for (const auto& g : c.gates) {
      if (g.kind == GateKind::CZ || g.kind == GateKind::H) continue;
      if (g.kind == GateKind::T) CHECK_FALSE(seen_1q[g.q0]);
      seen_1q[g.q0] = true;
    }
  }
}

TEST_CASE("generate: single-qubit gates only follow a CZ, and never repeat") {
  Circuit c = generate_rqc(4, 4, 12, 5);
  std::map<int, std::set<int>> cz_cycles;
  for (const auto& g : c.gates) {
    if (g.kind != GateKind::CZ) continue;
    cz_cycles[g.q0].insert(g.cycle);
    cz_cycles[g.q1].insert(g.cycle);
  }
  std::map<int, GateKind> last;
  for (const auto& g : c.gates) {
    if (g.kind == GateKind::CZ || g.kind == GateKind::H || g.cycle == 0) continue;
    if (g.cycle > c.depth_m()) continue;
    CHECK(cz_cycles[g.q0].count(g.cycle - 1) == 1);
    CHECK(cz_cycles[g.q0].count(g.cycle) == 0);
    if (last.count(g.q0)) CHECK(last[g.q0] != g.kind);
    last[g.q0] = g.kind;
  }
}

TEST_CASE("cz layouts cycle with period 8 and tile the grid edges") {
  const int rows = 4, cols = 4;
  std::set<std::pair<int, int>> seen;
  std::size_t total = 0;
  for (int layout = 0; layout < 8; ++layout) {
    for (auto e : cz_layout_edges(layout, rows, cols)) {
      CHECK(seen.insert(e).second);
      ++total;
    }
  }
  CHECK(total == 2u * 4 * 3);  // 24 edges on a 4x4 grid
  CHECK(cz_layout_of_cycle(1) == 0);
  CHECK(cz_layout_of_cycle(8) == 7);
  CHECK(cz_layout_of_cycle(9) == 0);
}

TEST_CASE("serialize round-trips byte-identically after one cycle") {
  Circuit c = generate_rqc(4, 4, 8, 11);
  std::string once = serialize_circuit(c);
  std::string twice = serialize_circuit(parse_circuit(once));
  CHECK(once == twice);
  CHECK(parse_circuit(once) == c);
}

TEST_CASE("serialize orders lines by (cycle, first qubit)") {
  Circuit c = parse_circuit("2\n0 h 1\n0 h 0\n1 cz 0 1\n2 h 1\n2 h 0\n");
  std::string text = serialize_circuit(c);
  CHECK(text == "2\n0 h 0\n0 h 1\n1 cz 0 1\n2 h 0\n2 h 1\n");
  Circuit again = parse_circuit(text);
  again.canonicalize();
  c.canonicalize();
  CHECK(again == c);
}

TEST_CASE("non-square grids round-trip through the grid comment") {
  Circuit c = generate_rqc(4, 5, 6, 3);
  std::string text = serialize_circuit(c);
  CHECK(text.find("# grid 4x5") != std::string::npos);
  Circuit back = parse_circuit(text);
  CHECK(back.rows == 4);
  CHECK(back.cols == 5);
  CHECK(back == c);
}

TEST_CASE("per-cycle exclusivity holds for generated circuits") {
  Circuit c = generate_rqc(5, 4, 16, 9);
  std::map<int, std::set<int>> touched;
  for (const auto& g : c.gates) {
    CHECK(touched[g.cycle].insert(g.q0).second);
    if (g.two_qubit()) CHECK(touched[g.cycle].insert(g.q1).second);
  }
}
