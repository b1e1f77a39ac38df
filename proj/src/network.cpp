#include "qsim/network.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "qsim/contraction.hpp"

namespace qsim {

std::int64_t TensorShape::dim(const Label& l) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == l) return dims[i];
  throw std::invalid_argument("shape: no label " + l);
}

bool TensorShape::has_label(const Label& l) const {
  return std::find(labels.begin(), labels.end(), l) != labels.end();
}

NetworkShape GridNetwork::shape() const {
  NetworkShape s;
  s.rows = rows;
  s.cols = cols;
  s.bonds = bonds;
  s.open_qubits = open_qubits;
  s.nodes.reserve(nodes.size());
  for (const auto& t : nodes) s.nodes.push_back({t.labels(), t.dims()});
  return s;
}

Label bond_label(int cycle, int q0, int q1) {
  if (q0 > q1) std::swap(q0, q1);
  char buf[32];
  std::snprintf(buf, sizeof buf, "b_%03d_%03d_%03d", cycle, q0, q1);
  return buf;
}

Label open_label(int q) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "o_%03d", q);
  return buf;
}

std::string node_name(int q) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "n_%03d", q);
  return buf;
}

namespace {

const Label kWire = "w";

// The worldline tensors keep the live wire index as axis 0, so these kernels
// address the two halves of the flat data directly.

void apply_single_axis0(Tensorf& t, const mat2cd& u) {
  const std::int64_t half = t.volume() / 2;
  const cfloat u00(static_cast<cfloat>(u(0, 0))), u01(static_cast<cfloat>(u(0, 1)));
  const cfloat u10(static_cast<cfloat>(u(1, 0))), u11(static_cast<cfloat>(u(1, 1)));
  auto* d = t.data().data();
  for (std::int64_t i = 0; i < half; ++i) {
    const cfloat a = d[i], b = d[half + i];
    d[i] = u00 * a + u01 * b;
    d[half + i] = u10 * a + u11 * b;
  }
}

// Appends an extent-2 bond axis carrying the CZ phase factor [[1,1],[1,-1]]
// indexed by (wire, bond).
Tensorf append_phase_axis(const Tensorf& t, const Label& bond) {
  const std::int64_t vol = t.volume();
  const std::int64_t half = vol / 2;
  std::vector<cfloat> out(static_cast<std::size_t>(2 * vol));
  const auto* d = t.data().data();
  for (std::int64_t i = 0; i < vol; ++i) {
    out[static_cast<std::size_t>(2 * i)] = d[i];
    out[static_cast<std::size_t>(2 * i + 1)] = (i < half) ? d[i] : -d[i];
  }
  auto labels = t.labels();
  auto dims = t.dims();
  labels.push_back(bond);
  dims.push_back(2);
  return Tensorf(std::move(labels), std::move(dims), std::move(out), t.log_scale());
}

// Appends an extent-2 bond axis that copies the wire value (the identity
// half of the CZ factorization).
Tensorf append_delta_axis(const Tensorf& t, const Label& bond) {
  const std::int64_t vol = t.volume();
  const std::int64_t half = vol / 2;
  std::vector<cfloat> out(static_cast<std::size_t>(2 * vol), cfloat{});
  const auto* d = t.data().data();
  for (std::int64_t i = 0; i < vol; ++i)
    out[static_cast<std::size_t>(2 * i + (i < half ? 0 : 1))] = d[i];
  auto labels = t.labels();
  auto dims = t.dims();
  labels.push_back(bond);
  dims.push_back(2);
  return Tensorf(std::move(labels), std::move(dims), std::move(out), t.log_scale());
}

}  // namespace

GridNetwork fold_worldlines(const Circuit& c, const std::vector<int>& out_bits,
                            const std::vector<int>& in_bits) {
  const int n = c.num_qubits();
  if (static_cast<int>(out_bits.size()) != n || static_cast<int>(in_bits.size()) != n)
    throw std::invalid_argument("fold: bitstring length != qubit count");

  GridNetwork net;
  net.rows = c.rows;
  net.cols = c.cols;
  net.nodes.reserve(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    std::vector<cfloat> init{cfloat(in_bits[static_cast<std::size_t>(q)] == 0 ? 1.f : 0.f),
                             cfloat(in_bits[static_cast<std::size_t>(q)] == 1 ? 1.f : 0.f)};
    net.nodes.emplace_back(std::vector<Label>{kWire}, std::vector<std::int64_t>{2},
                           std::move(init));
  }

  Circuit sorted = c;
  sorted.canonicalize();
  for (const auto& g : sorted.gates) {
    if (g.kind == GateKind::CZ) {
      const Label b = bond_label(g.cycle, g.q0, g.q1);
      net.bonds.push_back({b, g.q0, g.q1, g.cycle});
      auto& t0 = net.nodes[static_cast<std::size_t>(g.q0)];
      auto& t1 = net.nodes[static_cast<std::size_t>(g.q1)];
      t0 = append_phase_axis(t0, b);
      t1 = append_delta_axis(t1, b);
    } else {
      apply_single_axis0(net.nodes[static_cast<std::size_t>(g.q0)], gate_matrix(g.kind));
    }
  }

  for (int q = 0; q < n; ++q) {
    auto& t = net.nodes[static_cast<std::size_t>(q)];
    const int bit = out_bits[static_cast<std::size_t>(q)];
    if (bit < 0) {
      t.rename_label(kWire, open_label(q));
      net.open_qubits.push_back(q);
    } else {
      t = slice_axis(t, kWire, bit, 1, /*drop_if_unit=*/true);
    }
  }
  return net;
}

GridNetwork fold_worldlines(const Circuit& c, const std::vector<int>& out_bits) {
  return fold_worldlines(c, out_bits, std::vector<int>(c.num_qubits(), 0));
}

NetworkShape fold_shape(const Circuit& c, const std::vector<int>& open_qubits) {
  const int n = c.num_qubits();
  NetworkShape s;
  s.rows = c.rows;
  s.cols = c.cols;
  s.nodes.resize(static_cast<std::size_t>(n));
  s.open_qubits = open_qubits;
  std::sort(s.open_qubits.begin(), s.open_qubits.end());
  s.open_qubits.erase(std::unique(s.open_qubits.begin(), s.open_qubits.end()),
                      s.open_qubits.end());

  Circuit sorted = c;
  sorted.canonicalize();
  for (const auto& g : sorted.gates) {
    if (g.kind != GateKind::CZ) continue;
    const Label b = bond_label(g.cycle, g.q0, g.q1);
    s.bonds.push_back({b, g.q0, g.q1, g.cycle});
    for (int q : {g.q0, g.q1}) {
      s.nodes[static_cast<std::size_t>(q)].labels.push_back(b);
      s.nodes[static_cast<std::size_t>(q)].dims.push_back(2);
    }
  }
  for (int q : s.open_qubits) {
    if (q < 0 || q >= n) throw std::invalid_argument("fold_shape: open qubit out of range");
    s.nodes[static_cast<std::size_t>(q)].labels.push_back(open_label(q));
    s.nodes[static_cast<std::size_t>(q)].dims.push_back(2);
  }
  return s;
}

Tensord contract_network_reference(const GridNetwork& net) {
  Tensord acc = Tensord::scalar(1.0);
  for (const auto& node : net.nodes) {
    Tensord t = tensor_cast<cdouble>(node);
    acc = contract_naive(acc, t, infer_spec(acc.labels(), t.labels()));
  }
  return acc;
}

}  // namespace qsim
