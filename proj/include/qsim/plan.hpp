#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qsim/contraction.hpp"
#include "qsim/network.hpp"

namespace qsim {

// A cut fixes a multi-index of bond labels. Each slice assigns one value to
// every label except the trailing ones whose dims multiply to `group`, which
// stay whole (adaptive slice grouping: slices are contiguous ranges of the
// flattened multi-index of length `group`).
struct Cut {
  std::vector<Label> labels;
  std::int64_t group = 1;
};

struct PlanStep {
  std::string out, lhs, rhs;
  std::vector<Label> out_labels;  // canonical sorted order
  std::int64_t out_volume = 0;
  std::uint64_t flops = 0;
  double intensity = 0.0;          // flops / bytes(inputs + output)
  std::int64_t working_set = 0;    // bytes of inputs + output + transpose scratch
};

struct ContractionPlan {
  Cut cut;
  std::int64_t num_slices = 1;
  std::vector<int> open_qubits;
  std::vector<PlanStep> steps;
  std::string final_tensor;
  // Per-slice roll-ups, filled by annotate_plan.
  std::uint64_t flops_per_slice = 0;
  std::int64_t peak_memory = 0;  // max over steps of live tensor bytes + scratch
  int max_rank = 0;
};

struct CostEstimate {
  std::uint64_t total_flops = 0;
  std::int64_t peak_memory = 0;
};

// Shape of the network after fixing the cut (slice shapes are identical for
// every slice id).
NetworkShape sliced_shape(const NetworkShape& s, const Cut& cut);

std::int64_t cut_slice_count(const NetworkShape& s, const Cut& cut);

// Network with the cut labels fixed to slice `slice_id`. Fully sliced axes
// are dropped; grouped trailing labels keep their full extent. Summing the
// contraction of every slice reproduces the uncut contraction.
GridNetwork apply_cut(const GridNetwork& net, const Cut& cut, std::int64_t slice_id);

// Recomputes every step annotation of `plan` against the sliced shape and
// validates the plan: step operands must exist, every bond outside the cut
// must be eliminated, and the final tensor carries exactly the open labels.
void annotate_plan(const NetworkShape& shape, ContractionPlan& plan);

struct PlanOptions {
  // Greedy pair search: repeatedly contract the pair minimizing (result
  // volume, flops, lexicographic name order).
  std::int64_t memory_budget = 0;  // bytes; 0 = unbounded
  int max_cut_labels = 24;
};

// Builds a plan for the network under the memory budget, inserting cuts when
// the greedy ordering alone cannot fit. Deterministic given the network.
ContractionPlan plan_contraction(const NetworkShape& shape, const PlanOptions& opts = {});

// One axis subrange of a derived piece.
struct AxisRange {
  Label label;
  std::int64_t lo = 0, len = 0;
};

// A slice of an oversized contraction: input subranges plus where the result
// block lands in the full output.
struct DerivedPiece {
  std::vector<AxisRange> lhs, rhs, out;
};

std::int64_t step_working_set(std::int64_t lhs_bytes, std::int64_t rhs_bytes,
                              std::int64_t out_bytes);

// Recursively halves the tensor dimension behind the largest matrix
// dimension of the matricized contraction until every derived piece fits the
// budget. Executing all pieces and accumulating their blocks reproduces the
// undecomposed result.
std::vector<DerivedPiece> decompose_oversized(const TensorShape& lhs, const TensorShape& rhs,
                                              const std::vector<Label>& contracted,
                                              std::int64_t budget_bytes);

CostEstimate estimate_cost(const ContractionPlan& plan);

// JSON plan file round-trip. Loading re-annotates against `shape`.
std::string plan_to_json(const ContractionPlan& plan);
ContractionPlan plan_from_json(const std::string& text, const NetworkShape& shape);
ContractionPlan load_plan(const std::string& path, const NetworkShape& shape);

// Loads a plan file, folding the circuit with the open qubits the plan
// declares.
ContractionPlan load_plan_for_circuit(const std::string& path, const Circuit& c);

// Hand-crafted region schedule for 7x7 grids of depth (1+40+1): ten cut
// bonds (1024 slices) across the row-3/row-4 and column-3/column-4 seam and
// a region order whose largest intermediate has rank 30. The six open
// corner qubits feed the fast-sampling batch.
ContractionPlan reference_plan_7x7(const NetworkShape& shape);

// The open qubits the 7x7 reference plan expects.
std::vector<int> reference_open_qubits_7x7();

}  // namespace qsim
