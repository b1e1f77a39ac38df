#include "qsim/plan.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace qsim {

namespace {

using json = nlohmann::json;

std::string step_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%03d", i);
  return buf;
}

// Leading labels are fixed per slice; trailing labels whose dims multiply to
// `group` stay whole.
std::size_t grouped_suffix_start(const NetworkShape& s, const Cut& cut) {
  if (cut.group <= 1) return cut.labels.size();
  std::int64_t acc = 1;
  std::size_t i = cut.labels.size();
  auto dim_of = [&](const Label& l) -> std::int64_t {
    for (const auto& b : s.bonds)
      if (b.label == l) return 2;
    for (const auto& node : s.nodes)
      if (node.has_label(l)) return node.dim(l);
    throw std::invalid_argument("cut label " + l + " not in network");
  };
  while (i > 0 && acc < cut.group) acc *= dim_of(cut.labels[--i]);
  if (acc != cut.group)
    throw std::invalid_argument("cut group does not divide the trailing multi-index");
  return i;
}

std::vector<std::int64_t> cut_label_dims(const NetworkShape& s,
                                         const std::vector<Label>& labels) {
  std::vector<std::int64_t> dims;
  dims.reserve(labels.size());
  for (const auto& l : labels) {
    std::int64_t d = -1;
    for (const auto& node : s.nodes) {
      if (node.has_label(l)) {
        d = node.dim(l);
        break;
      }
    }
    if (d < 0) throw std::invalid_argument("cut label " + l + " not in network");
    dims.push_back(d);
  }
  return dims;
}

}  // namespace

std::int64_t cut_slice_count(const NetworkShape& s, const Cut& cut) {
  const std::size_t split = grouped_suffix_start(s, cut);
  auto dims = cut_label_dims(s, cut.labels);
  std::int64_t n = 1;
  for (std::size_t i = 0; i < split; ++i) n *= dims[i];
  return n;
}

NetworkShape sliced_shape(const NetworkShape& s, const Cut& cut) {
  const std::size_t split = grouped_suffix_start(s, cut);
  std::set<Label> dropped(cut.labels.begin(), cut.labels.begin() + split);
  NetworkShape out = s;
  for (auto& node : out.nodes) {
    TensorShape kept;
    for (std::size_t i = 0; i < node.labels.size(); ++i) {
      if (dropped.count(node.labels[i])) continue;
      kept.labels.push_back(node.labels[i]);
      kept.dims.push_back(node.dims[i]);
    }
    node = std::move(kept);
  }
  std::erase_if(out.bonds, [&](const BondRef& b) { return dropped.count(b.label) > 0; });
  return out;
}

GridNetwork apply_cut(const GridNetwork& net, const Cut& cut, std::int64_t slice_id) {
  auto shape = net.shape();
  const std::size_t split = grouped_suffix_start(shape, cut);
  auto dims = cut_label_dims(shape, cut.labels);
  std::int64_t slices = 1;
  for (std::size_t i = 0; i < split; ++i) slices *= dims[i];
  if (slice_id < 0 || slice_id >= slices)
    throw std::out_of_range("apply_cut: slice_id out of range");

  // Mixed-radix digits, first cut label most significant.
  std::vector<std::int64_t> digit(split, 0);
  std::int64_t rem = slice_id;
  for (std::size_t i = split; i-- > 0;) {
    digit[i] = rem % dims[i];
    rem /= dims[i];
  }

  GridNetwork out = net;
  for (std::size_t i = 0; i < split; ++i) {
    const Label& l = cut.labels[i];
    for (auto& node : out.nodes)
      if (node.has_label(l)) node = slice_axis(node, l, digit[i], 1, /*drop_if_unit=*/true);
  }
  std::set<Label> dropped(cut.labels.begin(), cut.labels.begin() + split);
  std::erase_if(out.bonds, [&](const BondRef& b) { return dropped.count(b.label) > 0; });
  return out;
}

std::int64_t step_working_set(std::int64_t lhs_bytes, std::int64_t rhs_bytes,
                              std::int64_t out_bytes) {
  return lhs_bytes + rhs_bytes + out_bytes + std::max({lhs_bytes, rhs_bytes, out_bytes});
}

void annotate_plan(const NetworkShape& shape, ContractionPlan& plan) {
  const NetworkShape sliced = sliced_shape(shape, plan.cut);
  plan.num_slices = cut_slice_count(shape, plan.cut);
  plan.open_qubits = shape.open_qubits;

  std::map<std::string, TensorShape> live;
  for (std::size_t q = 0; q < sliced.nodes.size(); ++q)
    live[node_name(static_cast<int>(q))] = sliced.nodes[q];

  plan.flops_per_slice = 0;
  plan.peak_memory = 0;
  plan.max_rank = 0;
  for (const auto& [name, t] : live) {
    (void)name;
    plan.max_rank = std::max(plan.max_rank, static_cast<int>(t.labels.size()));
  }

  auto live_bytes = [&live] {
    std::int64_t b = 0;
    for (const auto& [n, t] : live) {
      (void)n;
      b += t.bytes();
    }
    return b;
  };

  for (auto& step : plan.steps) {
    auto li = live.find(step.lhs);
    auto ri = live.find(step.rhs);
    if (li == live.end() || ri == live.end())
      throw std::invalid_argument("plan: step operand missing or already consumed: " +
                                  step.lhs + " x " + step.rhs);
    if (live.count(step.out)) throw std::invalid_argument("plan: duplicate tensor " + step.out);
    const TensorShape& a = li->second;
    const TensorShape& b = ri->second;

    TensorShape out;
    for (std::size_t i = 0; i < a.labels.size(); ++i)
      if (!b.has_label(a.labels[i])) {
        out.labels.push_back(a.labels[i]);
        out.dims.push_back(a.dims[i]);
      }
    for (std::size_t i = 0; i < b.labels.size(); ++i)
      if (!a.has_label(b.labels[i])) {
        out.labels.push_back(b.labels[i]);
        out.dims.push_back(b.dims[i]);
      }
    // Canonical sorted index order for intermediates.
    std::vector<std::size_t> perm(out.labels.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t x, std::size_t y) { return out.labels[x] < out.labels[y]; });
    TensorShape sorted;
    for (auto i : perm) {
      sorted.labels.push_back(out.labels[i]);
      sorted.dims.push_back(out.dims[i]);
    }

    step.out_labels = sorted.labels;
    step.out_volume = sorted.volume();
    step.flops = flop_count(static_cast<std::uint64_t>(a.volume()),
                            static_cast<std::uint64_t>(b.volume()),
                            static_cast<std::uint64_t>(sorted.volume()));
    const std::int64_t moved = 8 * (a.volume() + b.volume() + sorted.volume());
    step.intensity = static_cast<double>(step.flops) / static_cast<double>(moved);
    step.working_set = step_working_set(a.bytes(), b.bytes(), sorted.bytes());

    const std::int64_t scratch = std::max({a.bytes(), b.bytes(), sorted.bytes()});
    plan.peak_memory = std::max(plan.peak_memory, live_bytes() + sorted.bytes() + scratch);
    plan.flops_per_slice += step.flops;
    plan.max_rank = std::max(plan.max_rank, static_cast<int>(sorted.labels.size()));

    live.erase(step.lhs);
    live.erase(step.rhs);
    live[step.out] = std::move(sorted);
  }

  if (live.size() != 1)
    throw std::invalid_argument("plan: steps leave " + std::to_string(live.size()) +
                                " tensors, expected 1");
  plan.final_tensor = live.begin()->first;
  const TensorShape& fin = live.begin()->second;
  std::vector<Label> want;
  for (int q : shape.open_qubits) want.push_back(open_label(q));
  std::sort(want.begin(), want.end());
  if (fin.labels != want)
    throw std::invalid_argument("plan: final tensor does not match the open qubits");
  if (plan.peak_memory == 0) plan.peak_memory = live_bytes();
}

namespace {

struct GreedyResult {
  std::vector<PlanStep> steps;
};

// Repeatedly contracts the pair minimizing (result volume, flops, name
// order). Pure function of the shape.
GreedyResult greedy_order(const NetworkShape& shape) {
  struct Entry {
    std::string name;
    TensorShape t;
  };
  std::vector<Entry> live;
  for (std::size_t q = 0; q < shape.nodes.size(); ++q)
    live.push_back({node_name(static_cast<int>(q)), shape.nodes[q]});

  GreedyResult res;
  int next = 0;
  while (live.size() > 1) {
    std::int64_t best_vol = 0;
    std::uint64_t best_flops = 0;
    std::pair<std::string, std::string> best_names;
    std::size_t bi = 0, bj = 0;
    bool found = false;
    for (std::size_t i = 0; i < live.size(); ++i) {
      for (std::size_t j = i + 1; j < live.size(); ++j) {
        const auto& a = live[i].t;
        const auto& b = live[j].t;
        std::int64_t vol = 1;
        for (std::size_t x = 0; x < a.labels.size(); ++x)
          if (!b.has_label(a.labels[x])) vol *= a.dims[x];
        for (std::size_t x = 0; x < b.labels.size(); ++x)
          if (!a.has_label(b.labels[x])) vol *= b.dims[x];
        const auto flops = flop_count(static_cast<std::uint64_t>(a.volume()),
                                      static_cast<std::uint64_t>(b.volume()),
                                      static_cast<std::uint64_t>(vol));
        auto names = std::minmax(live[i].name, live[j].name);
        std::pair<std::string, std::string> key{names.first, names.second};
        if (!found || std::tie(vol, flops, key) < std::tie(best_vol, best_flops, best_names)) {
          found = true;
          best_vol = vol;
          best_flops = flops;
          best_names = key;
          bi = i;
          bj = j;
        }
      }
    }

    PlanStep step;
    step.lhs = best_names.first;
    step.rhs = best_names.second;
    step.out = step_name(next++);

    TensorShape merged;
    const auto& a = live[bi].t;
    const auto& b = live[bj].t;
    for (std::size_t x = 0; x < a.labels.size(); ++x)
      if (!b.has_label(a.labels[x])) {
        merged.labels.push_back(a.labels[x]);
        merged.dims.push_back(a.dims[x]);
      }
    for (std::size_t x = 0; x < b.labels.size(); ++x)
      if (!a.has_label(b.labels[x])) {
        merged.labels.push_back(b.labels[x]);
        merged.dims.push_back(b.dims[x]);
      }
    if (bj > bi) std::swap(bi, bj);  // erase higher index first
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(bi));
    live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
    live.push_back({step.out, std::move(merged)});
    res.steps.push_back(std::move(step));
  }
  return res;
}

ContractionPlan greedy_plan(const NetworkShape& shape, const Cut& cut) {
  ContractionPlan plan;
  plan.cut = cut;
  plan.steps = greedy_order(sliced_shape(shape, cut)).steps;
  annotate_plan(shape, plan);
  return plan;
}

}  // namespace

ContractionPlan plan_contraction(const NetworkShape& shape, const PlanOptions& opts) {
  if (opts.memory_budget > 0) {
    std::int64_t biggest = 0;
    for (const auto& node : shape.nodes) biggest = std::max(biggest, node.bytes());
    if (opts.memory_budget < biggest)
      throw std::invalid_argument("memory budget below the largest node tensor");
  }

  ContractionPlan plan = greedy_plan(shape, Cut{});
  if (opts.memory_budget <= 0 || plan.peak_memory <= opts.memory_budget) return plan;

  Cut cut;
  while (static_cast<int>(cut.labels.size()) < opts.max_cut_labels) {
    // Candidate bond labels not yet cut, lexicographically ordered.
    std::set<Label> taken(cut.labels.begin(), cut.labels.end());
    std::set<Label> candidates;
    for (const auto& b : shape.bonds)
      if (!taken.count(b.label)) candidates.insert(b.label);

    bool improved = false;
    ContractionPlan best;
    Label best_label;
    for (const auto& l : candidates) {
      Cut trial = cut;
      trial.labels.push_back(l);
      ContractionPlan p = greedy_plan(shape, trial);
      if (!improved || p.peak_memory < best.peak_memory) {
        improved = true;
        best = std::move(p);
        best_label = l;
      }
    }
    if (!improved || best.peak_memory >= plan.peak_memory)
      throw std::runtime_error("no plan found under the memory budget; add cuts");
    cut.labels.push_back(best_label);
    plan = std::move(best);
    if (plan.peak_memory <= opts.memory_budget) break;
  }
  if (plan.peak_memory > opts.memory_budget)
    throw std::runtime_error("no plan found under the memory budget; add cuts");

  // Adaptive grouping: keep the largest power-of-two tail of the multi-index
  // whole while the plan still fits.
  while (!cut.labels.empty()) {
    Cut trial = cut;
    auto dims = cut_label_dims(shape, trial.labels);
    trial.group *= dims.back();
    ContractionPlan p = greedy_plan(shape, trial);
    if (p.peak_memory > opts.memory_budget) break;
    cut = trial;
    plan = std::move(p);
    if (grouped_suffix_start(shape, cut) == 0) break;
  }
  return plan;
}

std::vector<DerivedPiece> decompose_oversized(const TensorShape& lhs, const TensorShape& rhs,
                                              const std::vector<Label>& contracted,
                                              std::int64_t budget_bytes) {
  struct Piece {
    std::vector<AxisRange> l, r;
  };

  auto is_contracted = [&](const Label& lab) {
    return std::find(contracted.begin(), contracted.end(), lab) != contracted.end();
  };

  Piece root;
  for (std::size_t i = 0; i < lhs.labels.size(); ++i)
    root.l.push_back({lhs.labels[i], 0, lhs.dims[i]});
  for (std::size_t i = 0; i < rhs.labels.size(); ++i)
    root.r.push_back({rhs.labels[i], 0, rhs.dims[i]});

  std::vector<Label> out_labels;
  for (const auto& a : root.l)
    if (!is_contracted(a.label)) out_labels.push_back(a.label);
  for (const auto& a : root.r)
    if (!is_contracted(a.label)) out_labels.push_back(a.label);
  std::sort(out_labels.begin(), out_labels.end());

  auto piece_out = [&](const Piece& p) {
    std::vector<AxisRange> out;
    for (const auto& lab : out_labels) {
      for (const auto& a : p.l)
        if (a.label == lab) out.push_back(a);
      for (const auto& a : p.r)
        if (a.label == lab) out.push_back(a);
    }
    return out;
  };

  auto products = [&](const Piece& p, std::int64_t& m, std::int64_t& n, std::int64_t& k) {
    m = n = k = 1;
    for (const auto& a : p.l) (is_contracted(a.label) ? k : m) *= a.len;
    for (const auto& a : p.r)
      if (!is_contracted(a.label)) n *= a.len;
  };

  std::vector<DerivedPiece> result;
  // Depth-first, low half before high half, so the derived order is stable.
  std::vector<Piece> stack{root};
  while (!stack.empty()) {
    Piece p = std::move(stack.back());
    stack.pop_back();
    std::int64_t m, n, k;
    products(p, m, n, k);
    const std::int64_t ws = step_working_set(8 * m * k, 8 * k * n, 8 * m * n);
    if (ws <= budget_bytes) {
      result.push_back({p.l, p.r, piece_out(p)});
      continue;
    }

    // Matrix dimension groups by size; within the largest splittable group,
    // halve the widest tensor dimension.
    struct Group {
      char tag;
      std::int64_t size;
    };
    std::vector<Group> groups{{'m', m}, {'n', n}, {'k', k}};
    std::stable_sort(groups.begin(), groups.end(),
                     [](const Group& a, const Group& b) { return a.size > b.size; });

    auto find_split = [&](char tag) -> AxisRange* {
      AxisRange* best = nullptr;
      auto consider = [&](AxisRange& a, bool want_contracted) {
        if (is_contracted(a.label) != want_contracted) return;
        if (a.len < 2) return;
        if (!best || a.len > best->len || (a.len == best->len && a.label < best->label))
          best = &a;
      };
      if (tag == 'm')
        for (auto& a : p.l) consider(a, false);
      if (tag == 'n')
        for (auto& a : p.r) consider(a, false);
      if (tag == 'k')
        for (auto& a : p.l) consider(a, true);
      return best;
    };

    AxisRange* split = nullptr;
    char split_tag = 0;
    for (const auto& g : groups) {
      split = find_split(g.tag);
      if (split) {
        split_tag = g.tag;
        break;
      }
    }
    if (!split) throw std::runtime_error("indivisible contraction still over budget");

    const Label lab = split->label;
    const std::int64_t lo = split->lo, len = split->len;
    const std::int64_t half = len / 2;
    auto with_range = [&](Piece base, std::int64_t new_lo, std::int64_t new_len) {
      for (auto& a : base.l)
        if (a.label == lab) {
          a.lo = new_lo;
          a.len = new_len;
        }
      if (split_tag == 'k' || split_tag == 'n') {
        for (auto& a : base.r)
          if (a.label == lab) {
            a.lo = new_lo;
            a.len = new_len;
          }
      }
      return base;
    };
    // Push high half first; the stack pops the low half first.
    stack.push_back(with_range(p, lo + half, len - half));
    stack.push_back(with_range(p, lo, half));
  }
  return result;
}

CostEstimate estimate_cost(const ContractionPlan& plan) {
  CostEstimate e;
  e.total_flops = plan.flops_per_slice * static_cast<std::uint64_t>(plan.num_slices);
  e.peak_memory = plan.peak_memory;
  return e;
}

std::string plan_to_json(const ContractionPlan& plan) {
  json j;
  j["version"] = 1;
  j["open_qubits"] = plan.open_qubits;
  j["cut"] = {{"labels", plan.cut.labels}, {"group", plan.cut.group}};
  j["slices"] = plan.num_slices;
  json order = json::array();
  for (const auto& s : plan.steps) order.push_back({s.lhs, s.rhs});
  j["order"] = order;
  json steps = json::array();
  for (const auto& s : plan.steps) {
    steps.push_back({{"out", s.out},
                     {"lhs", s.lhs},
                     {"rhs", s.rhs},
                     {"out_labels", s.out_labels},
                     {"volume", s.out_volume},
                     {"flops", s.flops},
                     {"intensity", s.intensity},
                     {"working_set", s.working_set}});
  }
  j["steps"] = steps;
  j["per_slice"] = {{"flops", plan.flops_per_slice},
                    {"peak_memory", plan.peak_memory},
                    {"max_rank", plan.max_rank}};
  return j.dump(2) + "\n";
}

ContractionPlan plan_from_json(const std::string& text, const NetworkShape& shape) {
  json j = json::parse(text);
  ContractionPlan plan;
  if (j.contains("cut")) {
    plan.cut.labels = j["cut"]["labels"].get<std::vector<Label>>();
    plan.cut.group = j["cut"].value("group", std::int64_t{1});
  }
  if (j.contains("open_qubits")) {
    auto open = j["open_qubits"].get<std::vector<int>>();
    if (open != shape.open_qubits)
      throw std::invalid_argument("plan open qubits do not match the network");
  }
  int idx = 0;
  for (const auto& pair : j.at("order")) {
    PlanStep s;
    s.lhs = pair.at(0).get<std::string>();
    s.rhs = pair.at(1).get<std::string>();
    s.out = step_name(idx++);
    plan.steps.push_back(std::move(s));
  }
  annotate_plan(shape, plan);
  if (j.contains("slices") && j["slices"].get<std::int64_t>() != plan.num_slices)
    throw std::invalid_argument("plan slice count does not match its cut");
  return plan;
}

ContractionPlan load_plan(const std::string& path, const NetworkShape& shape) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open plan file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return plan_from_json(ss.str(), shape);
}

ContractionPlan load_plan_for_circuit(const std::string& path, const Circuit& c) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open plan file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  std::vector<int> open;
  json j = json::parse(text);
  if (j.contains("open_qubits")) open = j["open_qubits"].get<std::vector<int>>();
  return plan_from_json(text, fold_shape(c, open));
}

std::vector<int> reference_open_qubits_7x7() { return {33, 34, 40, 41, 47, 48}; }

ContractionPlan reference_plan_7x7(const NetworkShape& shape) {
  if (shape.rows != 7 || shape.cols != 7)
    throw std::invalid_argument("reference plan: network is not a 7x7 grid");
  if (shape.open_qubits != reference_open_qubits_7x7())
    throw std::invalid_argument("reference plan: open qubits must be the corner region");

  // First k bonds (by cycle) of the edge between two qubits.
  auto edge_bonds = [&](int a, int b, std::size_t k) {
    std::vector<BondRef> found;
    for (const auto& bond : shape.bonds)
      if ((bond.q0 == a && bond.q1 == b) || (bond.q0 == b && bond.q1 == a))
        found.push_back(bond);
    std::sort(found.begin(), found.end(),
              [](const BondRef& x, const BondRef& y) { return x.cycle < y.cycle; });
    if (found.size() < k)
      throw std::invalid_argument("reference plan: edge has too few bonds");
    std::vector<Label> out;
    for (std::size_t i = 0; i < k; ++i) out.push_back(found[i].label);
    return out;
  };

  ContractionPlan plan;
  for (const auto& l : edge_bonds(21, 28, 3)) plan.cut.labels.push_back(l);
  for (const auto& l : edge_bonds(22, 29, 2)) plan.cut.labels.push_back(l);
  for (const auto& l : edge_bonds(3, 4, 5)) plan.cut.labels.push_back(l);

  // Region order: A (cols 0..3 of rows 0..3, column-major), D (cols 6..4 of
  // rows 0..3), merge, B (rows 4..6 of cols 0..2 column-major, then column 3
  // bottom-up), merge, then the column-4 strip and the open corner one node
  // at a time.
  const std::vector<int> a_chain = {0, 7, 14, 21, 1, 8, 15, 22, 2, 9, 16, 23, 3, 10, 17, 24};
  const std::vector<int> d_chain = {6, 13, 20, 27, 5, 12, 19, 26, 4, 11, 18, 25};
  const std::vector<int> b_chain = {28, 35, 42, 29, 36, 43, 30, 37, 44, 45, 38, 31};
  const std::vector<int> tail = {32, 39, 46, 33, 34, 40, 41, 47, 48};

  int idx = 0;
  auto chain = [&](const std::vector<int>& nodes) {
    std::string acc = node_name(nodes[0]);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      PlanStep s;
      s.lhs = acc;
      s.rhs = node_name(nodes[i]);
      s.out = step_name(idx++);
      acc = s.out;
      plan.steps.push_back(std::move(s));
    }
    return acc;
  };

  std::string a = chain(a_chain);
  std::string d = chain(d_chain);
  PlanStep ad;
  ad.lhs = a;
  ad.rhs = d;
  ad.out = step_name(idx++);
  std::string adname = ad.out;
  plan.steps.push_back(std::move(ad));

  std::string b = chain(b_chain);
  PlanStep adb;
  adb.lhs = adname;
  adb.rhs = b;
  adb.out = step_name(idx++);
  std::string acc = adb.out;
  plan.steps.push_back(std::move(adb));

  for (int q : tail) {
    PlanStep s;
    s.lhs = acc;
    s.rhs = node_name(q);
    s.out = step_name(idx++);
    acc = s.out;
    plan.steps.push_back(std::move(s));
  }

  annotate_plan(shape, plan);
  return plan;
}

}  // namespace qsim
