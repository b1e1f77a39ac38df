#include "qsim/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qsim/circuit.hpp"
#include "qsim/engine.hpp"
#include "qsim/network.hpp"
#include "qsim/oracle.hpp"
#include "qsim/plan.hpp"
#include "qsim/sampler.hpp"
#include "qsim/tensor_io.hpp"

namespace qsim::cli {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("QSIM_SLICE_LOG");
    return env ? std::atoi(env) : 0;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[qsim] " << msg << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

std::vector<std::string> read_bitstrings(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

// Mantissa/exponent split so tiny amplitudes stay readable: the amplitude is
// (re, im) * 2^log2_norm.
json amplitude_json(const std::string& bits, cdouble a) {
  int e = 0;
  double mag = std::abs(a);
  if (mag > 0) {
    e = std::ilogb(mag);
    a *= std::exp2(static_cast<double>(-e));
  }
  return {{"bitstring", bits}, {"re", a.real()}, {"im", a.imag()}, {"log2_norm", e}};
}

cdouble amplitude_from_json(const json& j) {
  cdouble a{j.at("re").get<double>(), j.at("im").get<double>()};
  return a * std::exp2(j.value("log2_norm", 0.0));
}

json metrics_json(const RunMetrics& m) {
  return {{"total_flops", m.total_flops},
          {"wall_seconds", m.wall_seconds},
          {"avg_flops_per_second", m.avg_flops_per_second},
          {"peak_flops_per_second", m.peak_flops_per_second},
          {"largest_step_flops", m.largest_step_flops},
          {"peak_live_bytes", m.peak_live_bytes}};
}

json xeb_json(const XebReport& r) {
  json j{{"n", r.n},
         {"size", r.size},
         {"mean_log_prob", r.mean_log_prob},
         {"cross_entropy", r.cross_entropy},
         {"fidelity_estimate", r.fidelity_estimate},
         {"zero_excluded", r.zero_excluded}};
  if (r.hog_available) j["hog_fraction"] = r.hog_fraction;
  return j;
}

struct CommonArgs {
  std::string circuit_path, plan_path, bitstrings_path, output_path, report_path;
  std::string fraction = "";
  int workers = 1;
  std::uint64_t seed = 0;
  std::int64_t memory_budget = 0;
};

std::uint64_t config_hash(const CommonArgs& a, const std::string& extra = {}) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : {a.circuit_path, a.plan_path, a.bitstrings_path}) {
    if (p.empty()) continue;
    h = fnv1a(read_file(p), h);
  }
  h = fnv1a(a.fraction, h);
  h = fnv1a(extra, h);
  h = fnv1a(&a.seed, sizeof a.seed, h);
  h = fnv1a(&a.workers, sizeof a.workers, h);
  h = fnv1a(&a.memory_budget, sizeof a.memory_budget, h);
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json job_report(const std::string& command, const CommonArgs& a, double compute_seconds,
                const std::string& extra_hash = {}) {
  return {{"command", command},
          {"config_hash", hex64(config_hash(a, extra_hash))},
          {"seed", a.seed},
          {"compute_seconds", compute_seconds}};
}

ContractionPlan make_or_load_plan(const Circuit& c, const std::string& plan_path,
                                  std::int64_t budget, const std::vector<int>& open = {}) {
  if (!plan_path.empty()) return load_plan_for_circuit(plan_path, c);
  PlanOptions opts;
  opts.memory_budget = budget;
  return plan_contraction(fold_shape(c, open), opts);
}

Fraction fraction_for_plan(const std::string& text, const ContractionPlan& plan) {
  if (text.empty()) return Fraction{plan.num_slices, plan.num_slices};
  return parse_fraction(text);
}

int cmd_generate(CLI::App& app) {
  auto args = std::make_shared<CommonArgs>();
  auto rows = std::make_shared<int>(4), cols = std::make_shared<int>(4),
       cycles = std::make_shared<int>(8);
  auto* cmd = app.add_subcommand("generate", "generate a random grid circuit");
  cmd->add_option("--rows", *rows)->required();
  cmd->add_option("--cols", *cols)->required();
  cmd->add_option("--cycles", *cycles, "intermediate cycles m of the (1+m+1) depth")
      ->required();
  cmd->add_option("--seed", args->seed);
  cmd->add_option("-o,--output", args->output_path);
  cmd->callback([args, rows, cols, cycles] {
    Circuit c = generate_rqc(*rows, *cols, *cycles, args->seed);
    std::string text = serialize_circuit(c);
    if (args->output_path.empty())
      std::cout << text;
    else
      write_file(args->output_path, text);
    log_info("generated " + std::to_string(c.num_qubits()) + " qubits, " +
             std::to_string(c.cycles()) + " cycles");
  });
  return 0;
}

int cmd_plan(CLI::App& app) {
  auto args = std::make_shared<CommonArgs>();
  auto x2 = std::make_shared<std::vector<int>>();
  auto reference = std::make_shared<bool>(false);
  auto* cmd = app.add_subcommand("plan", "build a contraction plan");
  cmd->add_option("-c,--circuit", args->circuit_path)->required();
  cmd->add_option("--x2", *x2, "qubits whose output index stays open");
  cmd->add_option("--memory-budget", args->memory_budget, "bytes");
  cmd->add_flag("--reference-7x7", *reference, "hand-crafted 7x7 depth-(1+40+1) schedule");
  cmd->add_option("-o,--output", args->output_path);
  cmd->callback([args, x2, reference] {
    Circuit c = load_circuit(args->circuit_path);
    ContractionPlan plan;
    if (*reference) {
      plan = reference_plan_7x7(fold_shape(c, reference_open_qubits_7x7()));
    } else {
      PlanOptions opts;
      opts.memory_budget = args->memory_budget;
      plan = plan_contraction(fold_shape(c, *x2), opts);
    }
    std::string text = plan_to_json(plan);
    if (args->output_path.empty())
      std::cout << text;
    else
      write_file(args->output_path, text);
    log_info("plan: " + std::to_string(plan.num_slices) + " slices, max rank " +
             std::to_string(plan.max_rank));
  });
  return 0;
}

int cmd_amplitude(CLI::App& app) {
  auto args = std::make_shared<CommonArgs>();
  auto* cmd = app.add_subcommand("amplitude", "compute amplitudes for bitstrings");
  cmd->add_option("-c,--circuit", args->circuit_path)->required();
  cmd->add_option("-p,--plan", args->plan_path);
  cmd->add_option("-b,--bitstrings", args->bitstrings_path)->required();
  cmd->add_option("--fraction", args->fraction, "path fraction k/K");
  cmd->add_option("--workers", args->workers);
  cmd->add_option("--seed", args->seed);
  cmd->add_option("--memory-budget", args->memory_budget, "bytes");
  cmd->add_option("-o,--output", args->output_path)->required();
  cmd->add_option("--report", args->report_path);
  cmd->callback([args] {
    Circuit c = load_circuit(args->circuit_path);
    auto bitstrings = read_bitstrings(args->bitstrings_path);
    ContractionPlan plan = make_or_load_plan(c, args->plan_path, args->memory_budget);
    Fraction f = fraction_for_plan(args->fraction, plan);

    ExecOptions exec;
    exec.memory_budget = args->memory_budget;
    const auto t0 = Clock::now();
    auto out = run_amplitudes(c, plan, bitstrings, f, args->workers, args->seed, exec);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();

    std::ostringstream lines;
    for (const auto& r : out.amplitudes)
      lines << amplitude_json(r.bitstring, r.amplitude).dump() << "\n";
    write_file(args->output_path, lines.str());
    log_info("amplitudes: " + std::to_string(out.amplitudes.size()) + " bitstrings x " +
             std::to_string(out.slice_ids.size()) + " slices");

    if (!args->report_path.empty()) {
      json rep = job_report("amplitude", *args, secs);
      rep["metrics"] = metrics_json(out.metrics);
      rep["slices_executed"] = out.slice_ids;
      rep["results"] = {args->output_path};
      write_file(args->report_path, rep.dump(2) + "\n");
    }
  });
  return 0;
}

int cmd_sample(CLI::App& app) {
  auto args = std::make_shared<CommonArgs>();
  auto count = std::make_shared<std::size_t>(0);
  auto mode = std::make_shared<std::string>("paths");
  auto cap = std::make_shared<double>(6.0);
  auto* cmd = app.add_subcommand("sample", "draw bitstrings by rejection sampling");
  cmd->add_option("-c,--circuit", args->circuit_path)->required();
  cmd->add_option("-p,--plan", args->plan_path, "plan with an open x2 region");
  cmd->add_option("-M,--num-samples", *count)->required();
  cmd->add_option("--fraction", args->fraction, "fidelity fraction k/K");
  cmd->add_option("--fidelity-mode", *mode)->check(CLI::IsMember({"paths", "amplitudes"}));
  cmd->add_option("--cap", *cap, "rejection cap");
  cmd->add_option("--workers", args->workers);
  cmd->add_option("--seed", args->seed);
  cmd->add_option("--memory-budget", args->memory_budget);
  cmd->add_option("-o,--output", args->output_path)->required();
  cmd->add_option("--report", args->report_path);
  cmd->callback([args, count, mode, cap] {
    Circuit c = load_circuit(args->circuit_path);
    ContractionPlan plan;
    if (!args->plan_path.empty()) {
      plan = load_plan_for_circuit(args->plan_path, c);
    } else {
      // Default x2 region: the highest-index corner qubits, batch >= 64.
      const int n = c.num_qubits();
      const int k = std::min(6, n - 1);
      std::vector<int> open;
      for (int q = n - k; q < n; ++q) open.push_back(q);
      PlanOptions opts;
      opts.memory_budget = args->memory_budget;
      plan = plan_contraction(fold_shape(c, open), opts);
    }

    SamplingConfig cfg;
    cfg.num_samples = *count;
    cfg.mode = (*mode == "amplitudes") ? FidelityMode::amplitude_fraction
                                       : FidelityMode::path_fraction;
    cfg.fraction = fraction_for_plan(args->fraction, plan);
    cfg.rejection_cap = *cap;
    cfg.seed = args->seed;
    cfg.workers = args->workers;
    cfg.exec.memory_budget = args->memory_budget;

    const auto t0 = Clock::now();
    auto out = sample(c, plan, cfg);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();

    std::ostringstream lines;
    for (const auto& b : out.bitstrings) lines << b << "\n";
    write_file(args->output_path, lines.str());
    log_info("samples: " + std::to_string(out.bitstrings.size()) + ", x1 draws " +
             std::to_string(out.stats.x1_draws));

    if (!args->report_path.empty()) {
      json rep = job_report("sample", *args, secs, *mode + "/" + std::to_string(*cap));
      rep["stats"] = {{"x1_draws", out.stats.x1_draws},
                      {"redraws", out.stats.redraws},
                      {"cap_hits", out.stats.cap_hits},
                      {"candidates", out.stats.candidates},
                      {"exact_count", out.stats.exact_count},
                      {"uniform_count", out.stats.uniform_count}};
      rep["self_xeb"] = xeb_json(out.self_xeb);
      rep["results"] = {args->output_path};
      write_file(args->report_path, rep.dump(2) + "\n");
    }
  });
  return 0;
}

int cmd_xeb(CLI::App& app) {
  auto args = std::make_shared<CommonArgs>();
  auto samples_path = std::make_shared<std::string>();
  auto amps_path = std::make_shared<std::string>();
  auto use_oracle = std::make_shared<bool>(false);
  auto* cmd = app.add_subcommand("xeb", "score samples by cross-entropy benchmarking");
  cmd->add_option("-c,--circuit", args->circuit_path)->required();
  cmd->add_option("--samples", *samples_path)->required();
  cmd->add_option("--amplitudes", *amps_path, "JSONL amplitudes to score against");
  cmd->add_flag("--use-oracle", *use_oracle, "score with the state-vector oracle");
  cmd->add_option("-o,--output", args->output_path);
  cmd->callback([args, samples_path, amps_path, use_oracle] {
    Circuit c = load_circuit(args->circuit_path);
    auto samples = read_bitstrings(*samples_path);
    XebReport report;
    if (*use_oracle) {
      StateVector sv = evolve(c);
      report = xeb(
          c, samples,
          [&](const std::string& s) { return sv.probability(bitstring_index(s)); },
          hog_median(sv));
    } else if (!amps_path->empty()) {
      std::ifstream f(*amps_path);
      if (!f) throw std::runtime_error("cannot open " + *amps_path);
      std::map<std::string, double> probs;
      std::string line;
      while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        probs[j.at("bitstring").get<std::string>()] = std::norm(amplitude_from_json(j));
      }
      report = xeb(c, samples, [&](const std::string& s) {
        auto it = probs.find(s);
        if (it == probs.end())
          throw std::runtime_error("no amplitude for sampled bitstring " + s);
        return it->second;
      });
    } else {
      throw std::runtime_error("xeb needs --use-oracle or --amplitudes");
    }
    std::string text = xeb_json(report).dump(2) + "\n";
    if (args->output_path.empty())
      std::cout << text;
    else
      write_file(args->output_path, text);
  });
  return 0;
}

int cmd_oracle(CLI::App& app) {
  auto args = std::make_shared<CommonArgs>();
  auto dump_path = std::make_shared<std::string>();
  auto sample_count = std::make_shared<std::size_t>(0);
  auto pt_check = std::make_shared<bool>(false);
  auto* cmd = app.add_subcommand("oracle", "brute-force state-vector checks");
  cmd->add_option("-c,--circuit", args->circuit_path)->required();
  cmd->add_option("--dump", *dump_path, "write the full state (binary tensor dump)");
  cmd->add_option("-b,--bitstrings", args->bitstrings_path, "amplitude queries");
  cmd->add_option("--sample", *sample_count, "draw exact samples");
  cmd->add_option("--seed", args->seed);
  cmd->add_flag("--pt-check", *pt_check, "test 2^n |a|^2 against Exp(1)");
  cmd->add_option("-o,--output", args->output_path);
  cmd->callback([args, dump_path, sample_count, pt_check] {
    Circuit c = load_circuit(args->circuit_path);
    StateVector sv = evolve(c);
    const int n = sv.num_qubits();

    if (!dump_path->empty()) {
      std::vector<Label> labels;
      std::vector<std::int64_t> dims;
      for (int q = 0; q < n; ++q) {
        labels.push_back(open_label(q));
        dims.push_back(2);
      }
      std::vector<cfloat> data(sv.amplitudes().size());
      for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = static_cast<cfloat>(sv.amplitudes()[i]);
      std::ofstream f(*dump_path, std::ios::binary);
      write_tensor(f, Tensorf(labels, dims, std::move(data)));
    }
    if (!args->bitstrings_path.empty()) {
      if (args->output_path.empty()) throw std::runtime_error("amplitude queries need -o");
      std::ostringstream lines;
      for (const auto& b : read_bitstrings(args->bitstrings_path))
        lines << amplitude_json(b, sv.amplitude(bitstring_index(b))).dump() << "\n";
      write_file(args->output_path, lines.str());
    }
    if (*sample_count > 0) {
      if (args->output_path.empty()) throw std::runtime_error("sampling needs -o");
      std::ostringstream lines;
      for (auto idx : exact_sample(sv, *sample_count, args->seed))
        lines << index_bitstring(idx, n) << "\n";
      write_file(args->output_path, lines.str());
    }
    if (*pt_check) {
      auto r = porter_thomas_check(sv);
      json j{{"mean_scaled_prob", r.mean_scaled_prob},
             {"ks_statistic", r.ks_statistic},
             {"ks_pvalue", r.ks_pvalue}};
      std::cout << j.dump(2) << "\n";
    }
  });
  return 0;
}

int cmd_bench(CLI::App& app) {
  auto args = std::make_shared<CommonArgs>();
  auto dry = std::make_shared<bool>(false);
  auto reference = std::make_shared<bool>(false);
  auto nbits = std::make_shared<int>(4);
  auto* cmd = app.add_subcommand("bench", "planner estimates and timed runs");
  cmd->add_option("-c,--circuit", args->circuit_path)->required();
  cmd->add_option("-p,--plan", args->plan_path);
  cmd->add_flag("--reference-7x7", *reference);
  cmd->add_flag("--dry-run", *dry, "analytic estimate only");
  cmd->add_option("--bitstrings", *nbits, "random bitstrings for the timed run");
  cmd->add_option("--fraction", args->fraction);
  cmd->add_option("--workers", args->workers);
  cmd->add_option("--seed", args->seed);
  cmd->add_option("--memory-budget", args->memory_budget);
  cmd->add_option("-o,--output", args->report_path, "report path");
  cmd->callback([args, dry, reference, nbits] {
    Circuit c = load_circuit(args->circuit_path);
    ContractionPlan plan;
    if (*reference)
      plan = reference_plan_7x7(fold_shape(c, reference_open_qubits_7x7()));
    else
      plan = make_or_load_plan(c, args->plan_path, args->memory_budget);

    auto est = estimate_cost(plan);
    json rep = job_report("bench", *args, 0.0);
    rep["plan"] = {{"slices", plan.num_slices},
                   {"flops_per_slice", plan.flops_per_slice},
                   {"total_flops", est.total_flops},
                   {"peak_memory", est.peak_memory},
                   {"max_rank", plan.max_rank},
                   {"steps", plan.steps.size()}};
    std::cout << "slices " << plan.num_slices << ", flops/slice " << plan.flops_per_slice
              << ", total flops " << est.total_flops << ", peak bytes " << est.peak_memory
              << ", max rank " << plan.max_rank << "\n";

    if (!*dry) {
      if (!plan.open_qubits.empty())
        throw std::runtime_error("bench runs need a closed plan (no open qubits)");
      std::mt19937_64 rng(args->seed);
      std::vector<std::string> bits;
      for (int i = 0; i < *nbits; ++i) {
        std::string b(static_cast<std::size_t>(c.num_qubits()), '0');
        for (auto& ch : b) ch = static_cast<char>('0' + (rng() & 1));
        bits.push_back(std::move(b));
      }
      Fraction f = fraction_for_plan(args->fraction, plan);
      ExecOptions exec;
      exec.memory_budget = args->memory_budget;
      const auto t0 = Clock::now();
      auto out = run_amplitudes(c, plan, bits, f, args->workers, args->seed, exec);
      const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
      rep["metrics"] = metrics_json(out.metrics);
      rep["compute_seconds"] = secs;
      std::cout << "ran " << bits.size() << " amplitudes x " << out.slice_ids.size()
                << " slices: " << out.metrics.total_flops << " flops in " << secs << " s\n";
    }
    if (!args->report_path.empty()) write_file(args->report_path, rep.dump(2) + "\n");
  });
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"tensor-network simulator for random circuit sampling"};
  app.require_subcommand(1);
  cmd_generate(app);
  cmd_plan(app);
  cmd_amplitude(app);
  cmd_sample(app);
  cmd_xeb(app);
  cmd_oracle(app);
  cmd_bench(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace qsim::cli
