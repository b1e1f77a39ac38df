#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qsim/types.hpp"

namespace qsim {

enum class GateKind { H, T, XHalf, YHalf, CZ };

const char* gate_name(GateKind k);

// Fixed single-qubit unitaries (CZ is handled as a diagonal two-qubit phase).
mat2cd gate_matrix(GateKind k);

inline constexpr double kCzPhase[4] = {1.0, 1.0, 1.0, -1.0};

struct Gate {
  GateKind kind;
  int cycle;
  int q0;
  int q1 = -1;  // second qubit for CZ, -1 otherwise

  bool two_qubit() const { return q1 >= 0; }
  friend bool operator==(const Gate&, const Gate&) = default;
};

// Grid circuit: cycles 0..cycles()-1, cycle 0 and the final cycle are full
// Hadamard layers, intermediate cycles hold CZ layers plus single-qubit
// gates. Qubits are linear row-major indices over a rows x cols grid.
struct Circuit {
  int rows = 0;
  int cols = 0;
  std::vector<Gate> gates;  // sorted by (cycle, q0, q1)

  int num_qubits() const { return rows * cols; }
  int cycles() const;                       // number of clock cycles present
  int depth_m() const { return cycles() - 2; }  // the m of the (1, m, 1) label

  int row_of(int q) const { return q / cols; }
  int col_of(int q) const { return q % cols; }
  bool adjacent(int a, int b) const;

  // Sorts gates into the canonical (cycle, q0, q1) order.
  void canonicalize();
  friend bool operator==(const Circuit&, const Circuit&) = default;
};

// Thrown by the parser and validators with a 1-based line number when the
// failure is tied to an input line (0 otherwise).
struct CircuitError : std::runtime_error {
  explicit CircuitError(const std::string& msg, int line = 0);
  int line;
};

// Parses the grid-circuit text format: first non-comment line is the qubit
// count, each following line is "<cycle> <gate> <q0> [<q1>]" with gate in
// {h, t, x_1_2, y_1_2, cz}. '#' lines are comments; a "# grid <R>x<C>"
// comment pins a non-square geometry. Validates qubit ranges, per-cycle
// exclusivity, CZ adjacency, contiguous cycles and the Hadamard layers.
Circuit parse_circuit(std::istream& in, int rows_hint = 0, int cols_hint = 0);
Circuit parse_circuit(const std::string& text, int rows_hint = 0, int cols_hint = 0);
Circuit load_circuit(const std::string& path, int rows_hint = 0, int cols_hint = 0);

// Emits the canonical text form; parse_circuit(serialize_circuit(c)) == c.
std::string serialize_circuit(const Circuit& c);

// Gate-choice rules for random circuits. With t_only_first set (default),
// the first single-qubit gate on each qubit is its only T and later gates
// alternate over {X^1/2, Y^1/2}, never repeating the previous one; clearing
// it draws from {X^1/2, Y^1/2, T} minus the previous gate.
struct RqcRules {
  bool t_only_first = true;
};

// Deterministic random grid circuit: full H layers at cycles 0 and m+1, the
// eight staggered CZ layouts cycling in fixed order in between, single-qubit
// gates placed on qubits idle this cycle that saw a CZ in the previous one.
Circuit generate_rqc(int rows, int cols, int m, std::uint64_t seed,
                     const RqcRules& rules = {});

// CZ layout id (0..7) active at 1-based intermediate cycle c.
int cz_layout_of_cycle(int c);

// Edges (as qubit pairs) of one of the eight CZ layouts on a rows x cols grid.
std::vector<std::pair<int, int>> cz_layout_edges(int layout, int rows, int cols);

void validate_circuit(const Circuit& c);

}  // namespace qsim
