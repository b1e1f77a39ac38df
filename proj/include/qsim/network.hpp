#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsim/circuit.hpp"
#include "qsim/tensor.hpp"

namespace qsim {

// One extent-2 bond per CZ instance; parallel CZs between the same pair keep
// separate bonds.
struct BondRef {
  Label label;
  int q0, q1;
  int cycle;
};

// Structure of a node tensor without its data; the planner works on these.
struct TensorShape {
  std::vector<Label> labels;
  std::vector<std::int64_t> dims;

  std::int64_t volume() const { return Tensorf::volume_from_dims(dims); }
  std::int64_t bytes() const { return volume() * static_cast<std::int64_t>(sizeof(cfloat)); }
  std::int64_t dim(const Label& l) const;
  bool has_label(const Label& l) const;
};

struct NetworkShape {
  int rows = 0, cols = 0;
  std::vector<TensorShape> nodes;  // indexed by qubit
  std::vector<BondRef> bonds;
  std::vector<int> open_qubits;
};

// 2D grid of per-qubit tensors produced by contracting each worldline in the
// time direction. Immutable once built; shares freely across workers.
struct GridNetwork {
  int rows = 0, cols = 0;
  std::vector<Tensorf> nodes;
  std::vector<BondRef> bonds;
  std::vector<int> open_qubits;

  NetworkShape shape() const;
};

Label bond_label(int cycle, int q0, int q1);
Label open_label(int q);
std::string node_name(int q);

// Contracts every gate along each qubit's worldline into one tensor. CZs are
// factored through their diagonal, contributing one extent-2 bond between
// the endpoints. in_bits fixes the input projectors (one bit per qubit);
// out_bits likewise, with -1 leaving that qubit's output index open.
GridNetwork fold_worldlines(const Circuit& c, const std::vector<int>& out_bits,
                            const std::vector<int>& in_bits);

// All-zero input shortcut.
GridNetwork fold_worldlines(const Circuit& c, const std::vector<int>& out_bits);

// Structure-only fold; open_qubits lists the qubits whose output stays open.
NetworkShape fold_shape(const Circuit& c, const std::vector<int>& open_qubits = {});

// Full contraction of a (small) network with the naive kernel, in the
// network's node order. Desk-scale reference path.
Tensord contract_network_reference(const GridNetwork& net);

}  // namespace qsim
