#include "qsim/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qsim {

const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "h";
    case GateKind::T: return "t";
    case GateKind::XHalf: return "x_1_2";
    case GateKind::YHalf: return "y_1_2";
    case GateKind::CZ: return "cz";
  }
  return "?";
}

mat2cd gate_matrix(GateKind k) {
  const double s = 1.0 / std::sqrt(2.0);
  const cdouble i{0.0, 1.0};
  mat2cd m;
  switch (k) {
    case GateKind::H:
      m << s, s, s, -s;
      return m;
    case GateKind::T:
      m << 1.0, 0.0, 0.0, std::exp(i * (M_PI / 4.0));
      return m;
    case GateKind::XHalf:
      m << 0.5 * (1.0 + i), 0.5 * (1.0 - i), 0.5 * (1.0 - i), 0.5 * (1.0 + i);
      return m;
    case GateKind::YHalf:
      m << 0.5 * (1.0 + i), 0.5 * (-1.0 - i), 0.5 * (1.0 + i), 0.5 * (1.0 + i);
      return m;
    case GateKind::CZ:
      throw std::invalid_argument("gate_matrix: CZ is not single-qubit");
  }
  throw std::invalid_argument("gate_matrix: unknown kind");
}

int Circuit::cycles() const {
  int max_cycle = -1;
  for (const auto& g : gates) max_cycle = std::max(max_cycle, g.cycle);
  return max_cycle + 1;
}

bool Circuit::adjacent(int a, int b) const {
  int dr = std::abs(row_of(a) - row_of(b));
  int dc = std::abs(col_of(a) - col_of(b));
  return dr + dc == 1;
}

void Circuit::canonicalize() {
  for (auto& g : gates)
    if (g.two_qubit() && g.q0 > g.q1) std::swap(g.q0, g.q1);
  std::sort(gates.begin(), gates.end(), [](const Gate& a, const Gate& b) {
    return std::tie(a.cycle, a.q0, a.q1) < std::tie(b.cycle, b.q0, b.q1);
  });
}

CircuitError::CircuitError(const std::string& msg, int line_no)
    : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg
                                     : msg),
      line(line_no) {}

namespace {

bool parse_gate_name(const std::string& s, GateKind& out) {
  if (s == "h") out = GateKind::H;
  else if (s == "t") out = GateKind::T;
  else if (s == "x_1_2") out = GateKind::XHalf;
  else if (s == "y_1_2") out = GateKind::YHalf;
  else if (s == "cz") out = GateKind::CZ;
  else return false;
  return true;
}

}  // namespace

void validate_circuit(const Circuit& c) {
  const int n = c.num_qubits();
  if (c.rows < 1 || c.cols < 1) throw CircuitError("empty grid");
  if (c.gates.empty()) throw CircuitError("circuit has no gates");

  const int last = c.cycles() - 1;
  std::map<int, std::set<int>> per_cycle;
  std::set<int> h0, hlast;
  for (const auto& g : c.gates) {
    if (g.cycle < 0) throw CircuitError("negative cycle index");
    auto touch = [&](int q) {
      if (q < 0 || q >= n) throw CircuitError("qubit index out of range");
      if (!per_cycle[g.cycle].insert(q).second)
        throw CircuitError("two gates on qubit " + std::to_string(q) + " in cycle " +
                           std::to_string(g.cycle));
    };
    touch(g.q0);
    if (g.kind == GateKind::CZ) {
      if (!g.two_qubit()) throw CircuitError("cz needs two qubits");
      touch(g.q1);
      if (!c.adjacent(g.q0, g.q1))
        throw CircuitError("cz on non-adjacent qubits " + std::to_string(g.q0) + "," +
                           std::to_string(g.q1));
    } else if (g.two_qubit()) {
      throw CircuitError("single-qubit gate with two qubits");
    }
    if (g.cycle == 0) {
      if (g.kind != GateKind::H) throw CircuitError("cycle 0 must be all Hadamards");
      h0.insert(g.q0);
    }
    if (g.cycle == last) {
      if (g.kind != GateKind::H) throw CircuitError("final cycle must be all Hadamards");
      hlast.insert(g.q0);
    }
  }
  if (static_cast<int>(h0.size()) != n)
    throw CircuitError("cycle 0 must apply H to every qubit");
  if (static_cast<int>(hlast.size()) != n)
    throw CircuitError("final cycle must apply H to every qubit");
}

Circuit parse_circuit(std::istream& in, int rows_hint, int cols_hint) {
  Circuit c;
  int n = -1;
  int grid_r = 0, grid_c = 0;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string line = raw;
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      int r, cc;
      if (std::sscanf(line.c_str() + first, "# grid %dx%d", &r, &cc) == 2) {
        grid_r = r;
        grid_c = cc;
      }
      continue;
    }
    std::istringstream ls(line);
    if (n < 0) {
      if (!(ls >> n) || n < 1) throw CircuitError("expected qubit count", line_no);
      std::string rest;
      if (ls >> rest) throw CircuitError("trailing tokens after qubit count", line_no);
      continue;
    }
    int cycle;
    std::string name;
    if (!(ls >> cycle >> name)) throw CircuitError("malformed gate line", line_no);
    GateKind kind;
    if (!parse_gate_name(name, kind)) throw CircuitError("unknown gate '" + name + "'", line_no);
    Gate g{kind, cycle, -1, -1};
    if (!(ls >> g.q0)) throw CircuitError("missing qubit", line_no);
    if (kind == GateKind::CZ) {
      if (!(ls >> g.q1)) throw CircuitError("cz needs two qubits", line_no);
    }
    std::string rest;
    if (ls >> rest) throw CircuitError("trailing tokens", line_no);
    if (g.q0 < 0 || g.q0 >= n || (g.two_qubit() && (g.q1 < 0 || g.q1 >= n)))
      throw CircuitError("qubit index out of range", line_no);
    c.gates.push_back(g);
  }
  if (n < 1) throw CircuitError("missing qubit count");

  if (rows_hint > 0 && cols_hint > 0) {
    c.rows = rows_hint;
    c.cols = cols_hint;
  } else if (grid_r > 0 && grid_c > 0) {
    c.rows = grid_r;
    c.cols = grid_c;
  } else {
    int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (root * root == n) {
      c.rows = c.cols = root;
    } else {
      c.rows = 1;
      c.cols = n;
    }
  }
  if (c.rows * c.cols != n)
    throw CircuitError("grid " + std::to_string(c.rows) + "x" + std::to_string(c.cols) +
                       " does not match qubit count " + std::to_string(n));
  validate_circuit(c);
  return c;
}

Circuit parse_circuit(const std::string& text, int rows_hint, int cols_hint) {
  std::istringstream ss(text);
  return parse_circuit(ss, rows_hint, cols_hint);
}

Circuit load_circuit(const std::string& path, int rows_hint, int cols_hint) {
  std::ifstream f(path);
  if (!f) throw CircuitError("cannot open circuit file " + path);
  return parse_circuit(f, rows_hint, cols_hint);
}

std::string serialize_circuit(const Circuit& c) {
  Circuit sorted = c;
  sorted.canonicalize();
  std::ostringstream os;
  os << c.num_qubits() << "\n";
  // Square and single-row geometries are what the parser infers; anything
  // else needs the comment to round-trip.
  if (c.rows != c.cols && c.rows != 1) os << "# grid " << c.rows << "x" << c.cols << "\n";
  for (const auto& g : sorted.gates) {
    os << g.cycle << " " << gate_name(g.kind) << " " << g.q0;
    if (g.two_qubit()) os << " " << g.q1;
    os << "\n";
  }
  return os.str();
}

int cz_layout_of_cycle(int c) { return (c - 1) % 8; }

// The eight staggered CZ layouts. Horizontal edge (r,c)-(r,c+1) belongs to
// layout (2c + 4r) mod 8; vertical edge (r,c)-(r+1,c) to 1/5 (even r) or 7/3
// (odd r) by column parity. Small grids leave some layouts empty.
std::vector<std::pair<int, int>> cz_layout_edges(int layout, int rows, int cols) {
  std::vector<std::pair<int, int>> edges;
  auto q = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c)
      if ((2 * c + 4 * r) % 8 == layout) edges.emplace_back(q(r, c), q(r, c + 1));
  }
  for (int r = 0; r + 1 < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int lab = (r % 2 == 0) ? (c % 2 == 0 ? 1 : 5) : (c % 2 == 0 ? 7 : 3);
      if (lab == layout) edges.emplace_back(q(r, c), q(r + 1, c));
    }
  }
  return edges;
}

Circuit generate_rqc(int rows, int cols, int m, std::uint64_t seed, const RqcRules& rules) {
  if (rows < 1 || cols < 1 || m < 0)
    throw std::invalid_argument("generate_rqc: bad parameters");
  Circuit c;
  c.rows = rows;
  c.cols = cols;
  const int n = rows * cols;

  std::mt19937_64 rng(seed);
  auto draw = [&rng](int k) { return static_cast<int>(rng() % static_cast<std::uint64_t>(k)); };

  for (int q = 0; q < n; ++q) c.gates.push_back({GateKind::H, 0, q, -1});

  std::vector<bool> in_cz_prev(static_cast<std::size_t>(n), false);
  std::vector<bool> had_1q(static_cast<std::size_t>(n), false);
  std::vector<GateKind> last_1q(static_cast<std::size_t>(n), GateKind::H);

  for (int cyc = 1; cyc <= m; ++cyc) {
    std::vector<bool> in_cz_now(static_cast<std::size_t>(n), false);
    for (auto [a, b] : cz_layout_edges(cz_layout_of_cycle(cyc), rows, cols)) {
      c.gates.push_back({GateKind::CZ, cyc, a, b});
      in_cz_now[static_cast<std::size_t>(a)] = true;
      in_cz_now[static_cast<std::size_t>(b)] = true;
    }
    for (int q = 0; q < n; ++q) {
      if (in_cz_now[static_cast<std::size_t>(q)] || !in_cz_prev[static_cast<std::size_t>(q)])
        continue;
      GateKind pick;
      if (!had_1q[static_cast<std::size_t>(q)]) {
        pick = GateKind::T;
      } else {
        GateKind pool[3];
        int sz = 0;
        for (GateKind cand : {GateKind::XHalf, GateKind::YHalf, GateKind::T}) {
          if (cand == GateKind::T && rules.t_only_first) continue;
          if (cand == last_1q[static_cast<std::size_t>(q)]) continue;
          pool[sz++] = cand;
        }
        pick = pool[draw(sz)];
      }
      c.gates.push_back({pick, cyc, q, -1});
      had_1q[static_cast<std::size_t>(q)] = true;
      last_1q[static_cast<std::size_t>(q)] = pick;
    }
    in_cz_prev = in_cz_now;
  }

  for (int q = 0; q < n; ++q) c.gates.push_back({GateKind::H, m + 1, q, -1});
  c.canonicalize();
  validate_circuit(c);
  return c;
}

}  // namespace qsim
