#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qsim/tensor.hpp"
#include "qsim/types.hpp"

namespace qsim {

// Pairwise contraction request: the labels to sum over (must be exactly the
// labels shared by both operands, with equal extents) and an optional output
// index order. When output_labels is empty the result carries the left
// operand's free labels followed by the right operand's.
struct ContractionSpec {
  std::vector<Label> contracted;
  std::vector<Label> output_labels;
};

inline ContractionSpec infer_spec(const std::vector<Label>& lhs,
                                  const std::vector<Label>& rhs) {
  ContractionSpec spec;
  for (const auto& l : lhs)
    if (std::find(rhs.begin(), rhs.end(), l) != rhs.end()) spec.contracted.push_back(l);
  return spec;
}

// Accumulates complex multiply-add counts across concurrent contractions.
// Relaxed ordering: the total is exact, interleaving is irrelevant.
class FlopCounter {
 public:
  void add(std::uint64_t f) { flops_.fetch_add(f, std::memory_order_relaxed); }
  std::uint64_t total() const { return flops_.load(std::memory_order_relaxed); }
  void reset() { flops_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> flops_{0};
};

// Flop cost of one contraction from the three participating volumes:
// 8 * sqrt(v0 * v1 * v2), exact. The radicand of any consistent contraction
// is a perfect square; anything else is rejected.
inline std::uint64_t flop_count(std::uint64_t v0, std::uint64_t v1, std::uint64_t v2) {
  unsigned __int128 prod = static_cast<unsigned __int128>(v0) * v1;
  prod *= v2;
  auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(prod)));
  // Fix up floating rounding around the true integer root.
  while (root > 0 && static_cast<unsigned __int128>(root) * root > prod) --root;
  while (static_cast<unsigned __int128>(root + 1) * (root + 1) <= prod) ++root;
  if (static_cast<unsigned __int128>(root) * root != prod)
    throw std::invalid_argument("flop_count: volume product is not a perfect square");
  return 8 * root;
}

namespace detail {

struct MatricizedShape {
  std::vector<Label> lfree, rfree, contracted;
  std::int64_t m = 1, n = 1, k = 1;
};

template <class Scalar>
MatricizedShape analyze(const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                        const ContractionSpec& spec) {
  MatricizedShape s;
  s.contracted = spec.contracted;
  for (const auto& l : s.contracted) {
    if (!left.has_label(l) || !right.has_label(l))
      throw std::invalid_argument("contract: contracted label " + l + " missing");
    if (left.dim(l) != right.dim(l))
      throw std::invalid_argument("contract: extent mismatch on " + l);
    s.k *= left.dim(l);
  }
  auto is_contracted = [&](const Label& l) {
    return std::find(s.contracted.begin(), s.contracted.end(), l) != s.contracted.end();
  };
  for (const auto& l : left.labels()) {
    if (is_contracted(l)) continue;
    if (right.has_label(l))
      throw std::invalid_argument("contract: shared label " + l + " not contracted");
    s.lfree.push_back(l);
    s.m *= left.dim(l);
  }
  for (const auto& l : right.labels()) {
    if (is_contracted(l)) continue;
    s.rfree.push_back(l);
    s.n *= right.dim(l);
  }
  return s;
}

inline constexpr std::int64_t kMaxVolume = std::int64_t{1} << 33;

}  // namespace detail

// Reference contraction: direct nested-loop sum of products, accumulated in
// double precision and rounded to the storage scalar at the end. Guarded by
// an operation bound; this is the desk-scale oracle for the TTGT kernel.
template <class Scalar>
Tensor<Scalar> contract_naive(const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                              const ContractionSpec& spec,
                              std::int64_t max_ops = std::int64_t{1} << 26) {
  auto s = detail::analyze(left, right, spec);
  if (s.m * s.n * s.k > max_ops)
    throw std::length_error("contract_naive: instance exceeds oracle bound");

  std::vector<Label> out_labels = s.lfree;
  out_labels.insert(out_labels.end(), s.rfree.begin(), s.rfree.end());

  std::vector<std::int64_t> out_dims;
  for (const auto& l : out_labels)
    out_dims.push_back(left.has_label(l) ? left.dim(l) : right.dim(l));

  // Strides of every output/contracted axis within each operand.
  const auto lstr = left.strides();
  const auto rstr = right.strides();
  auto stride_of = [](const Tensor<Scalar>& t, const std::vector<std::int64_t>& str,
                      const Label& l) -> std::int64_t {
    return t.has_label(l) ? str[static_cast<std::size_t>(t.axis(l))] : 0;
  };

  const int ro = static_cast<int>(out_labels.size());
  const int rc = static_cast<int>(s.contracted.size());
  std::vector<std::int64_t> out_lstride(ro), out_rstride(ro);
  for (int i = 0; i < ro; ++i) {
    out_lstride[i] = stride_of(left, lstr, out_labels[static_cast<std::size_t>(i)]);
    out_rstride[i] = stride_of(right, rstr, out_labels[static_cast<std::size_t>(i)]);
  }
  std::vector<std::int64_t> c_lstride(rc), c_rstride(rc), c_dim(rc);
  for (int i = 0; i < rc; ++i) {
    const auto& l = s.contracted[static_cast<std::size_t>(i)];
    c_lstride[i] = stride_of(left, lstr, l);
    c_rstride[i] = stride_of(right, rstr, l);
    c_dim[i] = left.dim(l);
  }

  std::vector<Scalar> out_data(static_cast<std::size_t>(s.m * s.n));
  std::vector<std::int64_t> oc(static_cast<std::size_t>(ro), 0);
  std::int64_t lbase = 0, rbase = 0;
  for (std::int64_t o = 0; o < s.m * s.n; ++o) {
    cdouble acc{};
    std::vector<std::int64_t> cc(static_cast<std::size_t>(rc), 0);
    std::int64_t loff = lbase, roff = rbase;
    const std::int64_t inner = s.k;
    for (std::int64_t c = 0; c < inner; ++c) {
      acc += static_cast<cdouble>(left.data()[static_cast<std::size_t>(loff)]) *
             static_cast<cdouble>(right.data()[static_cast<std::size_t>(roff)]);
      for (int i = rc - 1; i >= 0; --i) {
        loff += c_lstride[static_cast<std::size_t>(i)];
        roff += c_rstride[static_cast<std::size_t>(i)];
        if (++cc[static_cast<std::size_t>(i)] < c_dim[static_cast<std::size_t>(i)]) break;
        loff -= c_lstride[static_cast<std::size_t>(i)] * c_dim[static_cast<std::size_t>(i)];
        roff -= c_rstride[static_cast<std::size_t>(i)] * c_dim[static_cast<std::size_t>(i)];
        cc[static_cast<std::size_t>(i)] = 0;
      }
    }
    out_data[static_cast<std::size_t>(o)] =
        Scalar(static_cast<typename Scalar::value_type>(acc.real()),
               static_cast<typename Scalar::value_type>(acc.imag()));
    for (int i = ro - 1; i >= 0; --i) {
      lbase += out_lstride[static_cast<std::size_t>(i)];
      rbase += out_rstride[static_cast<std::size_t>(i)];
      if (++oc[static_cast<std::size_t>(i)] < out_dims[static_cast<std::size_t>(i)]) break;
      lbase -= out_lstride[static_cast<std::size_t>(i)] * out_dims[static_cast<std::size_t>(i)];
      rbase -= out_rstride[static_cast<std::size_t>(i)] * out_dims[static_cast<std::size_t>(i)];
      oc[static_cast<std::size_t>(i)] = 0;
    }
  }

  Tensor<Scalar> out(out_labels, out_dims, std::move(out_data),
                     left.log_scale() + right.log_scale());
  if (!spec.output_labels.empty() && spec.output_labels != out.labels())
    out = transpose(out, spec.output_labels);
  return out;
}

// Transpose-Transpose-GEMM-Transpose contraction. Both operands are permuted
// so the contracted labels form one matrix dimension, multiplied with a
// single blocked GEMM in the storage precision, and the product is permuted
// to the requested output order. log_scale adds; the flop counter advances
// by flop_count of the participating volumes.
template <class Scalar>
Tensor<Scalar> contract_ttgt(const Tensor<Scalar>& left, const Tensor<Scalar>& right,
                             const ContractionSpec& spec, FlopCounter* flops = nullptr) {
  auto s = detail::analyze(left, right, spec);
  if (s.m * s.k > detail::kMaxVolume || s.k * s.n > detail::kMaxVolume ||
      s.m * s.n > detail::kMaxVolume)
    throw std::length_error("contract_ttgt: volume overflow");

  std::vector<Label> lorder = s.lfree;
  lorder.insert(lorder.end(), s.contracted.begin(), s.contracted.end());
  std::vector<Label> rorder = s.contracted;
  rorder.insert(rorder.end(), s.rfree.begin(), s.rfree.end());

  Tensor<Scalar> lt = transpose(left, lorder);
  Tensor<Scalar> rt = transpose(right, rorder);

  std::vector<Label> out_labels = s.lfree;
  out_labels.insert(out_labels.end(), s.rfree.begin(), s.rfree.end());
  std::vector<std::int64_t> out_dims;
  for (const auto& l : s.lfree) out_dims.push_back(left.dim(l));
  for (const auto& l : s.rfree) out_dims.push_back(right.dim(l));

  std::vector<Scalar> out_data(static_cast<std::size_t>(s.m * s.n));
  {
    using MatR = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const MatR> a(lt.data().data(), s.m, s.k);
    Eigen::Map<const MatR> b(rt.data().data(), s.k, s.n);
    Eigen::Map<MatR> c(out_data.data(), s.m, s.n);
    c.noalias() = a * b;
  }

  if (flops)
    flops->add(flop_count(static_cast<std::uint64_t>(left.volume()),
                          static_cast<std::uint64_t>(right.volume()),
                          static_cast<std::uint64_t>(s.m * s.n)));

  Tensor<Scalar> out(out_labels, out_dims, std::move(out_data),
                     left.log_scale() + right.log_scale());
  if (!spec.output_labels.empty() && spec.output_labels != out.labels())
    out = transpose(out, spec.output_labels);
  return out;
}

}  // namespace qsim
