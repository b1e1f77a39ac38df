#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qsim/engine.hpp"
#include "qsim/oracle.hpp"

namespace qsim {

enum class FidelityMode { path_fraction, amplitude_fraction };

struct SamplingConfig {
  std::size_t num_samples = 0;
  std::vector<int> x2_region;  // open output qubits; empty = take the plan's
  FidelityMode mode = FidelityMode::path_fraction;
  Fraction fraction{1, 1};
  double rejection_cap = 6.0;  // kappa: accept with probability p * 2^n / kappa
  std::uint64_t seed = 0;
  int workers = 1;
  ExecOptions exec{};
};

struct SampleStats {
  std::uint64_t x1_draws = 0;
  std::uint64_t redraws = 0;     // batches exhausted without an acceptance
  std::uint64_t cap_hits = 0;    // candidates whose p exceeded the cap
  std::uint64_t candidates = 0;  // rejection trials consumed
  std::size_t exact_count = 0;   // amplitude_fraction: rejection-sampled part
  std::size_t uniform_count = 0;
};

struct XebReport {
  int n = 0;
  std::size_t size = 0;
  double mean_log_prob = 0.0;
  double cross_entropy = 0.0;      // -(1/size) * sum log p
  double fidelity_estimate = 0.0;  // 2^n <p> - 1
  double hog_fraction = -1.0;      // fraction of samples with p above the median
  bool hog_available = false;
  std::size_t zero_excluded = 0;
};

struct SampleOutput {
  std::vector<std::string> bitstrings;
  // Probability the sampler computed for each emitted bitstring (negative
  // when unknown, e.g. the uniform share of amplitude_fraction mode).
  std::vector<double> probabilities;
  SampleStats stats;
  XebReport self_xeb;  // scored with the sampler's own probabilities
};

// Frugal rejection sampling with x1/x2 recycling: one plan execution per x1
// draw evaluates the whole 2^|x2| amplitude batch, which feeds the rejection
// loop until a bitstring is accepted; the next bitstring restarts with a
// fresh x1. In path_fraction mode the batch sums only the selected slices.
SampleOutput sample(const Circuit& c, const ContractionPlan& plan, const SamplingConfig& cfg);

// Emits round(f*M) bitstrings via full-fidelity rejection sampling and the
// rest uniformly at random; the composition lands in stats.
SampleOutput sample_amplitude_fraction(const Circuit& c, const ContractionPlan& plan,
                                       const SamplingConfig& cfg);

// Cross-entropy scoring of sample probabilities. Zero-probability samples
// are excluded and counted. The fidelity estimate is 2^n <p> - 1; the HOG
// fraction is filled when the ideal median is supplied.
XebReport xeb_score(int n, const std::vector<double>& sample_probs,
                    std::optional<double> hog_median = std::nullopt);

// Scores samples with a caller-supplied probability lookup.
XebReport xeb(const Circuit& c, const std::vector<std::string>& samples,
              const std::function<double(const std::string&)>& probability,
              std::optional<double> hog_median = std::nullopt);

// Exact median of the oracle output distribution (for HOG).
double hog_median(const StateVector& sv);

// The batch of amplitudes one x1 draw produces, as (bitstring, amplitude)
// pairs over every x2 assignment. Exposed for the recycling-equivalence
// check and the CLI.
std::vector<std::pair<std::string, cdouble>> amplitude_batch(
    const Circuit& c, const ContractionPlan& plan, const std::vector<int>& x1_bits,
    const std::vector<std::int64_t>& slice_ids, const ExecOptions& exec);

}  // namespace qsim
