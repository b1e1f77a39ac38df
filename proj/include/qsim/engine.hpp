#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qsim/arena.hpp"
#include "qsim/contraction.hpp"
#include "qsim/network.hpp"
#include "qsim/plan.hpp"

namespace qsim {

// Path fraction k/K: the engine executes k of the plan's K slices.
struct Fraction {
  std::int64_t num = 1;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Fraction parse_fraction(const std::string& text);  // "k/K"

struct ExecOptions {
  std::int64_t memory_budget = 0;  // bytes per contraction; 0 = execute directly
  int pipeline_depth = 2;
  bool normalize_intermediates = true;
  FlopCounter* counter = nullptr;
};

struct PipelineStats {
  std::uint64_t acquire_retries = 0;
  int max_in_flight = 0;
};

// Executes the derived pieces of one oversized contraction through the
// five-stage pipeline (acquire, load, execute, accumulate, release) with at
// most `depth` pieces in flight. The arena admission-controls the scratch
// working set; a failed acquisition is retried after another piece releases.
// Accumulation happens in piece order, so the result is identical to
// sequential execution.
Tensorf pipeline_execute(const Tensorf& lhs, const Tensorf& rhs, const ContractionSpec& spec,
                         const std::vector<DerivedPiece>& pieces, int depth, BuddyArena& arena,
                         FlopCounter* counter = nullptr, PipelineStats* stats = nullptr);

// Per-plan-step wall seconds and execution counts, merged across tasks.
struct StepTimes {
  std::vector<double> seconds;
  std::vector<std::uint64_t> executions;
  void merge(const StepTimes& other);
};

// Runs every step of the plan on one sliced network. Intermediates are
// renormalized between steps; contractions whose working set exceeds the
// budget go through decomposition and the pipeline.
Tensorf execute_slice(const GridNetwork& sliced, const ContractionPlan& plan,
                      const ExecOptions& opts, StepTimes* times = nullptr,
                      std::int64_t* peak_live_bytes = nullptr);

struct RunMetrics {
  std::uint64_t total_flops = 0;
  double wall_seconds = 0.0;
  double avg_flops_per_second = 0.0;   // total flops / wall time
  double peak_flops_per_second = 0.0;  // largest contraction's sustained rate
  std::uint64_t largest_step_flops = 0;
  std::int64_t peak_live_bytes = 0;  // max live tensor bytes of any one task
};

struct AmplitudeResult {
  std::string bitstring;
  cdouble amplitude;
};

struct AmplitudeOutput {
  std::vector<AmplitudeResult> amplitudes;
  RunMetrics metrics;
  std::vector<std::int64_t> slice_ids;  // the executed fraction, ascending
};

// Job failure pinned to the offending slice.
struct JobError : std::runtime_error {
  JobError(const std::string& msg, std::int64_t slice);
  std::int64_t slice_id;
};

// Runs `fn` over tasks 0..num_tasks-1 on a worker pool. Tasks share nothing;
// results land in caller-owned slots, so output never depends on the worker
// count. A throwing task fails the job with its slice id (the lowest task
// index wins when several fail).
void schedule(std::size_t num_tasks, int workers, const std::function<void(std::size_t)>& fn,
              const std::function<std::int64_t(std::size_t)>& slice_of = {});

// The slice ids a fraction selects: k consecutive ids (mod K) starting at a
// seed-derived offset, merged in ascending order.
std::vector<std::int64_t> select_slices(Fraction f, std::int64_t num_slices,
                                        std::uint64_t seed);

// Computes <bitstring|C|0...0> for every requested bitstring by summing the
// selected slice contributions in ascending slice order (double precision).
// Deterministic in (plan, bitstrings, fraction, seed) regardless of workers.
AmplitudeOutput run_amplitudes(const Circuit& c, const ContractionPlan& plan,
                               const std::vector<std::string>& bitstrings, Fraction fraction,
                               int workers, std::uint64_t seed, ExecOptions exec = {});

}  // namespace qsim
