#include "qsim/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>

namespace qsim {

namespace {

double uniform53(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

// Batch tensor over the open qubits for one x1 assignment, summed over the
// selected slices in ascending order.
std::vector<cdouble> batch_amplitudes(const Circuit& c, const ContractionPlan& plan,
                                      const std::vector<int>& x1_bits,
                                      const std::vector<std::int64_t>& slice_ids,
                                      const ExecOptions& exec_in) {
  ExecOptions exec = exec_in;
  FlopCounter scratch_counter;
  if (!exec.counter) exec.counter = &scratch_counter;

  GridNetwork folded = fold_worldlines(c, x1_bits);
  const std::size_t batch = std::size_t{1} << plan.open_qubits.size();
  std::vector<cdouble> acc(batch, cdouble{});
  for (std::int64_t sid : slice_ids) {
    GridNetwork sliced = apply_cut(folded, plan.cut, sid);
    Tensorf fin = execute_slice(sliced, plan, exec);
    const double scale = std::exp2(fin.log_scale());
    for (std::size_t i = 0; i < batch; ++i)
      acc[i] += static_cast<cdouble>(fin.data()[i]) * scale;
  }
  return acc;
}

// Merge the x1 assignment with an x2 batch index into a full bitstring. The
// batch tensor's axes are the sorted open labels, so bit r of the index (MSB
// first) belongs to the r-th smallest open qubit.
std::string merge_bits(const std::vector<int>& x1_bits, const std::vector<int>& open_sorted,
                       std::size_t batch_index) {
  std::string s(x1_bits.size(), '0');
  for (std::size_t q = 0; q < x1_bits.size(); ++q)
    if (x1_bits[q] >= 0) s[q] = static_cast<char>('0' + x1_bits[q]);
  const std::size_t nx2 = open_sorted.size();
  for (std::size_t r = 0; r < nx2; ++r) {
    const int bit = (batch_index >> (nx2 - 1 - r)) & 1;
    s[static_cast<std::size_t>(open_sorted[r])] = static_cast<char>('0' + bit);
  }
  return s;
}

struct Emitted {
  std::string bitstring;
  double probability;
  std::uint64_t x1_draws = 0, redraws = 0, cap_hits = 0, candidates = 0;
};

Emitted emit_one(const Circuit& c, const ContractionPlan& plan, const SamplingConfig& cfg,
                 const std::vector<std::int64_t>& slice_ids, std::mt19937_64& rng) {
  const int n = c.num_qubits();
  const auto& open = plan.open_qubits;
  const std::size_t batch = std::size_t{1} << open.size();
  const double scale = std::exp2(static_cast<double>(n)) / cfg.rejection_cap;

  Emitted out;
  for (;;) {
    // Fresh random x1 over the closed qubits.
    std::vector<int> x1(static_cast<std::size_t>(n), -1);
    std::uint64_t word = 0;
    int bits_left = 0;
    for (int q = 0; q < n; ++q) {
      if (std::find(open.begin(), open.end(), q) != open.end()) continue;
      if (bits_left == 0) {
        word = rng();
        bits_left = 64;
      }
      x1[static_cast<std::size_t>(q)] = static_cast<int>(word & 1);
      word >>= 1;
      --bits_left;
    }
    ++out.x1_draws;

    auto amps = batch_amplitudes(c, plan, x1, slice_ids, cfg.exec);

    bool accepted = false;
    for (std::size_t trial = 0; trial < batch && !accepted; ++trial) {
      const std::size_t j = rng() % batch;
      ++out.candidates;
      const double p = std::norm(amps[j]);
      const double accept = p * scale;
      if (accept >= 1.0) {
        ++out.cap_hits;
        accepted = true;
      } else {
        accepted = uniform53(rng) < accept;
      }
      if (accepted) {
        out.bitstring = merge_bits(x1, open, j);
        out.probability = p;
      }
    }
    if (accepted) return out;
    ++out.redraws;
  }
}

}  // namespace

std::vector<std::pair<std::string, cdouble>> amplitude_batch(
    const Circuit& c, const ContractionPlan& plan, const std::vector<int>& x1_bits,
    const std::vector<std::int64_t>& slice_ids, const ExecOptions& exec) {
  auto amps = batch_amplitudes(c, plan, x1_bits, slice_ids, exec);
  std::vector<std::pair<std::string, cdouble>> out;
  out.reserve(amps.size());
  for (std::size_t j = 0; j < amps.size(); ++j)
    out.emplace_back(merge_bits(x1_bits, plan.open_qubits, j), amps[j]);
  return out;
}

SampleOutput sample(const Circuit& c, const ContractionPlan& plan, const SamplingConfig& cfg) {
  const int n = c.num_qubits();
  if (plan.open_qubits.empty())
    throw std::invalid_argument("sample: plan must leave the x2 region open");
  if (!cfg.x2_region.empty()) {
    auto want = cfg.x2_region;
    std::sort(want.begin(), want.end());
    if (want != plan.open_qubits)
      throw std::invalid_argument("sample: x2 region does not match the plan's open qubits");
  }
  if (cfg.rejection_cap <= 0) throw std::invalid_argument("sample: rejection cap must be > 0");

  const bool amplitude_mode = cfg.mode == FidelityMode::amplitude_fraction;
  // amplitude_fraction: a fraction f of emitted bitstrings comes from
  // full-fidelity sampling, the rest is uniform noise.
  std::size_t exact_count = cfg.num_samples;
  std::vector<std::int64_t> slice_ids;
  if (amplitude_mode) {
    exact_count = static_cast<std::size_t>(
        std::llround(cfg.fraction.value() * static_cast<double>(cfg.num_samples)));
    std::int64_t full = plan.num_slices;
    slice_ids = select_slices(Fraction{full, full}, plan.num_slices, cfg.seed);
  } else {
    slice_ids = select_slices(cfg.fraction, plan.num_slices, cfg.seed);
  }

  SampleOutput out;
  out.bitstrings.assign(cfg.num_samples, {});
  out.probabilities.assign(cfg.num_samples, -1.0);
  out.stats.exact_count = exact_count;
  out.stats.uniform_count = cfg.num_samples - exact_count;

  std::mutex stats_mutex;
  schedule(cfg.num_samples, cfg.workers, [&](std::size_t i) {
    std::mt19937_64 rng(mix_seed(cfg.seed, i));
    if (amplitude_mode && i >= exact_count) {
      std::string bits(static_cast<std::size_t>(n), '0');
      for (auto& ch : bits) ch = static_cast<char>('0' + (rng() & 1));
      out.bitstrings[i] = std::move(bits);
      return;
    }
    Emitted e = emit_one(c, plan, cfg, slice_ids, rng);
    out.bitstrings[i] = std::move(e.bitstring);
    out.probabilities[i] = e.probability;
    std::lock_guard lock(stats_mutex);
    out.stats.x1_draws += e.x1_draws;
    out.stats.redraws += e.redraws;
    out.stats.cap_hits += e.cap_hits;
    out.stats.candidates += e.candidates;
  });

  std::vector<double> known;
  for (double p : out.probabilities)
    if (p >= 0) known.push_back(p);
  out.self_xeb = known.empty() ? XebReport{} : xeb_score(n, known);
  return out;
}

SampleOutput sample_amplitude_fraction(const Circuit& c, const ContractionPlan& plan,
                                       const SamplingConfig& cfg) {
  SamplingConfig amp = cfg;
  amp.mode = FidelityMode::amplitude_fraction;
  return sample(c, plan, amp);
}

XebReport xeb_score(int n, const std::vector<double>& sample_probs,
                    std::optional<double> median) {
  XebReport r;
  r.n = n;
  double sum_log = 0.0, sum_p = 0.0;
  std::size_t above = 0, used = 0;
  for (double p : sample_probs) {
    if (p <= 0.0) {
      ++r.zero_excluded;
      continue;
    }
    ++used;
    sum_log += std::log(p);
    sum_p += p;
    if (median && p > *median) ++above;
  }
  r.size = used;
  if (used == 0) return r;
  r.mean_log_prob = sum_log / static_cast<double>(used);
  r.cross_entropy = -r.mean_log_prob;
  r.fidelity_estimate =
      std::exp2(static_cast<double>(n)) * (sum_p / static_cast<double>(used)) - 1.0;
  if (median) {
    r.hog_available = true;
    r.hog_fraction = static_cast<double>(above) / static_cast<double>(used);
  }
  return r;
}

XebReport xeb(const Circuit& c, const std::vector<std::string>& samples,
              const std::function<double(const std::string&)>& probability,
              std::optional<double> median) {
  std::vector<double> probs;
  probs.reserve(samples.size());
  for (const auto& s : samples) {
    if (static_cast<int>(s.size()) != c.num_qubits())
      throw std::invalid_argument("xeb: bitstring length mismatch: " + s);
    probs.push_back(probability(s));
  }
  return xeb_score(c.num_qubits(), probs, median);
}

double hog_median(const StateVector& sv) {
  std::vector<double> probs(sv.amplitudes().size());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = std::norm(sv.amplitudes()[i]);
  auto mid = probs.begin() + static_cast<std::ptrdiff_t>(probs.size() / 2);
  std::nth_element(probs.begin(), mid, probs.end());
  return *mid;
}

}  // namespace qsim
