#include "qsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

namespace qsim {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

Fraction parse_fraction(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos)
    throw std::invalid_argument("fraction must look like k/K: " + text);
  Fraction f;
  f.num = std::stoll(text.substr(0, slash));
  f.den = std::stoll(text.substr(slash + 1));
  if (f.den < 1 || f.num < 1 || f.num > f.den)
    throw std::invalid_argument("fraction out of range: " + text);
  return f;
}

JobError::JobError(const std::string& msg, std::int64_t slice)
    : std::runtime_error(msg + " (slice " + std::to_string(slice) + ")"), slice_id(slice) {}

void StepTimes::merge(const StepTimes& other) {
  if (seconds.size() < other.seconds.size()) {
    seconds.resize(other.seconds.size(), 0.0);
    executions.resize(other.executions.size(), 0);
  }
  for (std::size_t i = 0; i < other.seconds.size(); ++i) {
    seconds[i] += other.seconds[i];
    executions[i] += other.executions[i];
  }
}

Tensorf pipeline_execute(const Tensorf& lhs, const Tensorf& rhs, const ContractionSpec& spec,
                         const std::vector<DerivedPiece>& pieces, int depth, BuddyArena& arena,
                         FlopCounter* counter, PipelineStats* stats) {
  if (depth < 1) throw std::invalid_argument("pipeline depth must be >= 1");

  // Assemble the full output, zeroed; pieces accumulate into blocks of it.
  std::vector<Label> out_labels;
  std::vector<std::int64_t> out_dims;
  for (const auto& r : pieces.at(0).out) {
    out_labels.push_back(r.label);
    const Label& l = r.label;
    out_dims.push_back(lhs.has_label(l) ? lhs.dim(l) : rhs.dim(l));
  }
  Tensorf out(out_labels, out_dims);
  // Accumulating across pieces needs a fixed reference scale.
  out.set_log_scale(lhs.log_scale() + rhs.log_scale());

  struct Ctx {
    std::size_t index;
    int stage = 0;  // 0 acquired, 1 loaded, 2 executed, 3 accumulated
    std::vector<BuddyArena::Block> blocks;
    Tensorf lslice, rslice, result;
  };

  auto slice_ranges = [](const Tensorf& t, const std::vector<AxisRange>& ranges) {
    Tensorf cur = t;
    for (const auto& r : ranges)
      if (!(r.lo == 0 && r.len == cur.dim(r.label)))
        cur = slice_axis(cur, r.label, r.lo, r.len);
    return cur;
  };

  auto bytes_of = [](const std::vector<AxisRange>& ranges) {
    std::int64_t v = 1;
    for (const auto& r : ranges) v *= r.len;
    return v * static_cast<std::int64_t>(sizeof(cfloat));
  };

  std::deque<std::size_t> pending;
  for (std::size_t i = 0; i < pieces.size(); ++i) pending.push_back(i);
  std::vector<Ctx> active;
  std::size_t next_accumulate = 0;

  while (!pending.empty() || !active.empty()) {
    // Admission: resource acquisition on the execution device.
    while (static_cast<int>(active.size()) < depth && !pending.empty()) {
      const std::size_t idx = pending.front();
      const auto& p = pieces[idx];
      std::vector<BuddyArena::Block> blocks;
      bool ok = true;
      for (std::int64_t b : {bytes_of(p.lhs), bytes_of(p.rhs), bytes_of(p.out)}) {
        auto blk = arena.allocate(static_cast<std::size_t>(b));
        if (!blk) {
          ok = false;
          break;
        }
        blocks.push_back(*blk);
      }
      if (!ok) {
        for (auto& b : blocks) arena.release(b);
        if (stats) ++stats->acquire_retries;
        if (active.empty())
          throw std::runtime_error("pipeline: scratch arena too small for a single piece");
        break;  // re-tried once an active piece releases
      }
      Ctx ctx;
      ctx.index = idx;
      ctx.blocks = std::move(blocks);
      active.push_back(std::move(ctx));
      pending.pop_front();
      if (stats) stats->max_in_flight = std::max(stats->max_in_flight,
                                                 static_cast<int>(active.size()));
    }

    // Each in-flight piece advances one stage per sweep, yielding to the
    // next piece between stages.
    bool progressed = false;
    for (auto it = active.begin(); it != active.end();) {
      Ctx& ctx = *it;
      const auto& p = pieces[ctx.index];
      switch (ctx.stage) {
        case 0:  // load input slices
          ctx.lslice = slice_ranges(lhs, p.lhs);
          ctx.rslice = slice_ranges(rhs, p.rhs);
          ctx.stage = 1;
          progressed = true;
          ++it;
          break;
        case 1: {  // execute
          ContractionSpec piece_spec;
          piece_spec.contracted = spec.contracted;
          for (const auto& r : p.out) piece_spec.output_labels.push_back(r.label);
          ctx.result = contract_ttgt(ctx.lslice, ctx.rslice, piece_spec, counter);
          ctx.stage = 2;
          progressed = true;
          ++it;
          break;
        }
        case 2: {  // accumulate, in piece order
          if (ctx.index != next_accumulate) {
            ++it;
            break;
          }
          std::vector<std::int64_t> offsets;
          for (const auto& r : p.out) offsets.push_back(r.lo);
          add_block(out, ctx.result, offsets);
          ++next_accumulate;
          ctx.stage = 3;
          progressed = true;
          ++it;
          break;
        }
        case 3:  // release
          for (auto& b : ctx.blocks) arena.release(b);
          it = active.erase(it);
          progressed = true;
          break;
        default:
          ++it;
      }
    }
    if (!progressed && pending.empty())
      throw std::runtime_error("pipeline: stalled");  // unreachable with FIFO admission
  }

  if (!spec.output_labels.empty() && spec.output_labels != out.labels())
    out = transpose(out, spec.output_labels);
  return out;
}

Tensorf execute_slice(const GridNetwork& sliced, const ContractionPlan& plan,
                      const ExecOptions& opts, StepTimes* times,
                      std::int64_t* peak_live_bytes) {
  std::map<std::string, Tensorf> live;
  for (std::size_t q = 0; q < sliced.nodes.size(); ++q)
    live[node_name(static_cast<int>(q))] = sliced.nodes[q];

  if (times && times->seconds.size() < plan.steps.size()) {
    times->seconds.assign(plan.steps.size(), 0.0);
    times->executions.assign(plan.steps.size(), 0);
  }

  auto live_bytes = [&live] {
    std::int64_t b = 0;
    for (const auto& [n, t] : live) {
      (void)n;
      b += t.bytes();
    }
    return b;
  };
  std::int64_t peak = live_bytes();

  for (std::size_t si = 0; si < plan.steps.size(); ++si) {
    const auto& step = plan.steps[si];
    auto li = live.find(step.lhs);
    auto ri = live.find(step.rhs);
    if (li == live.end() || ri == live.end())
      throw std::invalid_argument("execute: missing operand " + step.lhs + " or " + step.rhs);
    const Tensorf& a = li->second;
    const Tensorf& b = ri->second;

    ContractionSpec spec = infer_spec(a.labels(), b.labels());
    spec.output_labels = step.out_labels;

    const std::int64_t ws = step_working_set(a.bytes(), b.bytes(),
                                             step.out_volume * static_cast<std::int64_t>(sizeof(cfloat)));
    const auto t0 = Clock::now();
    Tensorf out;
    if (opts.memory_budget > 0 && ws > opts.memory_budget) {
      TensorShape as{a.labels(), a.dims()};
      TensorShape bs{b.labels(), b.dims()};
      auto pieces = decompose_oversized(as, bs, spec.contracted, opts.memory_budget);
      BuddyArena arena(static_cast<std::size_t>(opts.memory_budget) * 2);
      out = pipeline_execute(a, b, spec, pieces, opts.pipeline_depth, arena, opts.counter);
    } else {
      out = contract_ttgt(a, b, spec, opts.counter);
    }
    if (times) {
      times->seconds[si] += seconds_since(t0);
      times->executions[si] += 1;
    }
    if (opts.normalize_intermediates) normalize_inplace(out);

    peak = std::max(peak, live_bytes() + out.bytes() +
                              std::max({a.bytes(), b.bytes(), out.bytes()}));
    live.erase(li);
    live.erase(step.rhs);
    live[step.out] = std::move(out);
  }

  if (live.size() != 1) throw std::invalid_argument("execute: plan left multiple tensors");
  if (peak_live_bytes) *peak_live_bytes = std::max(*peak_live_bytes, peak);
  return std::move(live.begin()->second);
}

void schedule(std::size_t num_tasks, int workers, const std::function<void(std::size_t)>& fn,
              const std::function<std::int64_t(std::size_t)>& slice_of) {
  if (workers < 1) throw std::invalid_argument("schedule: workers must be >= 1");
  if (num_tasks == 0) return;

  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::optional<std::pair<std::size_t, std::string>> first_error;

  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= num_tasks) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mutex);
        if (!first_error || i < first_error->first) first_error = {{i, e.what()}};
      }
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }

  if (first_error) {
    const std::int64_t slice =
        slice_of ? slice_of(first_error->first) : static_cast<std::int64_t>(first_error->first);
    throw JobError(first_error->second, slice);
  }
}

std::vector<std::int64_t> select_slices(Fraction f, std::int64_t num_slices,
                                        std::uint64_t seed) {
  if (f.den != num_slices)
    throw std::invalid_argument("fraction denominator " + std::to_string(f.den) +
                                " does not match the plan's " + std::to_string(num_slices) +
                                " slices");
  const std::int64_t offset =
      static_cast<std::int64_t>(mix_seed(seed, 0x51ce) % static_cast<std::uint64_t>(num_slices));
  std::vector<std::int64_t> ids;
  ids.reserve(static_cast<std::size_t>(f.num));
  for (std::int64_t i = 0; i < f.num; ++i) ids.push_back((offset + i) % num_slices);
  std::sort(ids.begin(), ids.end());
  return ids;
}

AmplitudeOutput run_amplitudes(const Circuit& c, const ContractionPlan& plan,
                               const std::vector<std::string>& bitstrings, Fraction fraction,
                               int workers, std::uint64_t seed, ExecOptions exec) {
  const int n = c.num_qubits();
  if (!plan.open_qubits.empty())
    throw std::invalid_argument("run_amplitudes: plan must close every output");
  for (const auto& b : bitstrings)
    if (static_cast<int>(b.size()) != n)
      throw std::invalid_argument("bitstring length != qubit count: " + b);

  FlopCounter local_counter;
  if (!exec.counter) exec.counter = &local_counter;
  const std::uint64_t flops0 = exec.counter->total();

  const auto t0 = Clock::now();

  auto slice_ids = select_slices(fraction, plan.num_slices, seed);
  const std::size_t k = slice_ids.size();
  const std::size_t nb = bitstrings.size();

  std::vector<GridNetwork> folded;
  folded.reserve(nb);
  for (const auto& bits : bitstrings) {
    std::vector<int> out_bits(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) out_bits[static_cast<std::size_t>(q)] = bits[static_cast<std::size_t>(q)] - '0';
    folded.push_back(fold_worldlines(c, out_bits));
  }

  std::vector<cdouble> contributions(nb * k);
  StepTimes all_times;
  std::mutex merge_mutex;
  std::int64_t peak_live = 0;

  schedule(
      nb * k, workers,
      [&](std::size_t task) {
        const std::size_t b = task / k;
        const std::size_t r = task % k;
        GridNetwork sliced = apply_cut(folded[b], plan.cut, slice_ids[r]);
        StepTimes times;
        std::int64_t task_peak = 0;
        Tensorf fin = execute_slice(sliced, plan, exec, &times, &task_peak);
        contributions[task] = scalar_value(fin);
        std::lock_guard lock(merge_mutex);
        all_times.merge(times);
        peak_live = std::max(peak_live, task_peak);
      },
      [&](std::size_t task) { return slice_ids[task % k]; });

  AmplitudeOutput out;
  out.slice_ids = slice_ids;
  out.amplitudes.reserve(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    cdouble sum{};
    for (std::size_t r = 0; r < k; ++r) sum += contributions[b * k + r];
    out.amplitudes.push_back({bitstrings[b], sum});
  }

  out.metrics.wall_seconds = seconds_since(t0);
  out.metrics.total_flops = exec.counter->total() - flops0;
  out.metrics.avg_flops_per_second =
      out.metrics.wall_seconds > 0
          ? static_cast<double>(out.metrics.total_flops) / out.metrics.wall_seconds
          : 0.0;
  out.metrics.peak_live_bytes = peak_live;

  if (!plan.steps.empty()) {
    std::size_t largest = 0;
    for (std::size_t i = 0; i < plan.steps.size(); ++i)
      if (plan.steps[i].flops > plan.steps[largest].flops) largest = i;
    out.metrics.largest_step_flops = plan.steps[largest].flops;
    if (largest < all_times.seconds.size() && all_times.seconds[largest] > 0) {
      const double total_largest_flops = static_cast<double>(plan.steps[largest].flops) *
                                         static_cast<double>(all_times.executions[largest]);
      out.metrics.peak_flops_per_second = total_largest_flops / all_times.seconds[largest];
    }
  }
  return out;
}

}  // namespace qsim
