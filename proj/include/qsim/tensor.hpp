#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qsim/types.hpp"

namespace qsim {

// Dense tensor with named indices, row-major storage (last label fastest)
// and a base-2 log scale factor carried separately from the data. The value
// represented is 2^log_scale * data.
template <class Scalar>
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<Label> labels, std::vector<std::int64_t> dims)
      : labels_(std::move(labels)), dims_(std::move(dims)) {
    check_shape();
    data_.assign(static_cast<std::size_t>(volume_from_dims(dims_)), Scalar{});
  }

  Tensor(std::vector<Label> labels, std::vector<std::int64_t> dims,
         std::vector<Scalar> data, double log_scale = 0.0)
      : labels_(std::move(labels)),
        dims_(std::move(dims)),
        data_(std::move(data)),
        log_scale_(log_scale) {
    check_shape();
    if (static_cast<std::int64_t>(data_.size()) != volume_from_dims(dims_))
      throw std::invalid_argument("tensor: data length != product of dims");
  }

  static Tensor scalar(Scalar v, double log_scale = 0.0) {
    return Tensor({}, {}, {v}, log_scale);
  }

  const std::vector<Label>& labels() const { return labels_; }
  const std::vector<std::int64_t>& dims() const { return dims_; }
  const std::vector<Scalar>& data() const { return data_; }
  std::vector<Scalar>& data() { return data_; }
  double log_scale() const { return log_scale_; }
  void set_log_scale(double s) { log_scale_ = s; }
  void add_log_scale(double s) { log_scale_ += s; }

  int rank() const { return static_cast<int>(labels_.size()); }
  std::int64_t volume() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t bytes() const { return volume() * static_cast<std::int64_t>(sizeof(Scalar)); }

  int axis(const Label& l) const {
    auto it = std::find(labels_.begin(), labels_.end(), l);
    if (it == labels_.end()) throw std::invalid_argument("tensor: no label " + l);
    return static_cast<int>(it - labels_.begin());
  }

  bool has_label(const Label& l) const {
    return std::find(labels_.begin(), labels_.end(), l) != labels_.end();
  }

  std::int64_t dim(const Label& l) const { return dims_[axis(l)]; }

  // Row-major strides, last axis stride 1.
  std::vector<std::int64_t> strides() const {
    std::vector<std::int64_t> s(dims_.size());
    std::int64_t acc = 1;
    for (int i = static_cast<int>(dims_.size()) - 1; i >= 0; --i) {
      s[i] = acc;
      acc *= dims_[i];
    }
    return s;
  }

  Scalar at(std::span<const std::int64_t> idx) const {
    return data_[static_cast<std::size_t>(flat_index(idx))];
  }

  Scalar& at(std::span<const std::int64_t> idx) {
    return data_[static_cast<std::size_t>(flat_index(idx))];
  }

  std::int64_t flat_index(std::span<const std::int64_t> idx) const {
    if (idx.size() != dims_.size())
      throw std::invalid_argument("tensor: index rank mismatch");
    std::int64_t flat = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (idx[i] < 0 || idx[i] >= dims_[i])
        throw std::out_of_range("tensor: index out of range");
      flat = flat * dims_[i] + idx[i];
    }
    return flat;
  }

  void rename_label(const Label& from, const Label& to) {
    labels_[static_cast<std::size_t>(axis(from))] = to;
  }

  static std::int64_t volume_from_dims(const std::vector<std::int64_t>& dims) {
    std::int64_t v = 1;
    for (auto d : dims) v *= d;
    return v;
  }

 private:
  void check_shape() const {
    if (labels_.size() != dims_.size())
      throw std::invalid_argument("tensor: labels/dims rank mismatch");
    for (auto d : dims_)
      if (d < 1) throw std::invalid_argument("tensor: dims must be >= 1");
    auto sorted = labels_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("tensor: duplicate label");
  }

  std::vector<Label> labels_;
  std::vector<std::int64_t> dims_;
  std::vector<Scalar> data_;
  double log_scale_ = 0.0;
};

using Tensorf = Tensor<cfloat>;
using Tensord = Tensor<cdouble>;

// Permutes tensor indices into the order given by `new_order`, which must be
// a permutation of t.labels(). Volume and log_scale are unchanged.
template <class Scalar>
Tensor<Scalar> transpose(const Tensor<Scalar>& t, std::span<const Label> new_order) {
  const int r = t.rank();
  if (static_cast<int>(new_order.size()) != r)
    throw std::invalid_argument("transpose: order rank mismatch");

  std::vector<int> src_axis(static_cast<std::size_t>(r));
  std::vector<bool> seen(static_cast<std::size_t>(r), false);
  for (int i = 0; i < r; ++i) {
    int a = t.axis(new_order[static_cast<std::size_t>(i)]);
    if (seen[static_cast<std::size_t>(a)])
      throw std::invalid_argument("transpose: order is not a permutation");
    seen[static_cast<std::size_t>(a)] = true;
    src_axis[static_cast<std::size_t>(i)] = a;
  }

  bool identity = true;
  for (int i = 0; i < r; ++i) identity &= src_axis[static_cast<std::size_t>(i)] == i;
  if (identity) return t;

  std::vector<std::int64_t> out_dims(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i)
    out_dims[static_cast<std::size_t>(i)] = t.dims()[static_cast<std::size_t>(src_axis[static_cast<std::size_t>(i)])];

  Tensor<Scalar> out(std::vector<Label>(new_order.begin(), new_order.end()), out_dims);
  out.set_log_scale(t.log_scale());
  if (t.volume() == 0) return out;

  const auto in_strides = t.strides();
  // Stride of each output axis measured in the input layout.
  std::vector<std::int64_t> gather(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i)
    gather[static_cast<std::size_t>(i)] = in_strides[static_cast<std::size_t>(src_axis[static_cast<std::size_t>(i)])];

  // Contiguous runs: if the last output axis is also the last input axis the
  // innermost loop is a straight copy.
  std::int64_t run = 1;
  int active = r;
  if (gather[static_cast<std::size_t>(r - 1)] == 1) {
    run = out_dims[static_cast<std::size_t>(r - 1)];
    active = r - 1;
  }

  const Scalar* src = t.data().data();
  Scalar* dst = out.data().data();
  std::vector<std::int64_t> counter(static_cast<std::size_t>(active), 0);
  std::int64_t src_off = 0;
  const std::int64_t total = t.volume() / run;
  for (std::int64_t n = 0; n < total; ++n) {
    if (run > 1) {
      std::copy_n(src + src_off, run, dst + n * run);
    } else {
      dst[n] = src[src_off];
    }
    // Mixed-radix increment over the leading output axes.
    for (int i = active - 1; i >= 0; --i) {
      src_off += gather[static_cast<std::size_t>(i)];
      if (++counter[static_cast<std::size_t>(i)] < out_dims[static_cast<std::size_t>(i)]) break;
      src_off -= gather[static_cast<std::size_t>(i)] * out_dims[static_cast<std::size_t>(i)];
      counter[static_cast<std::size_t>(i)] = 0;
    }
  }
  return out;
}

template <class Scalar>
Tensor<Scalar> transpose(const Tensor<Scalar>& t, const std::vector<Label>& new_order) {
  return transpose(t, std::span<const Label>(new_order));
}

// Rescales data by a power of two so the largest modulus lands in (0.5, 1],
// moving the factor into log_scale. Mantissas are untouched and the
// represented value is unchanged. Returns false (tensor untouched) when all
// elements are zero.
template <class Scalar>
bool normalize_inplace(Tensor<Scalar>& t) {
  double max_abs = 0.0;
  for (const auto& z : t.data())
    max_abs = std::max(max_abs, std::abs(static_cast<cdouble>(z)));
  if (max_abs == 0.0) return false;

  int exp2 = 0;
  double frac = std::frexp(max_abs, &exp2);  // max_abs = frac * 2^exp2, frac in [0.5, 1)
  int shift = (frac == 0.5) ? exp2 - 1 : exp2;
  if (shift != 0) {
    const auto factor = static_cast<typename Scalar::value_type>(std::ldexp(1.0, -shift));
    for (auto& z : t.data()) z *= factor;
    t.add_log_scale(static_cast<double>(shift));
  }
  return true;
}

template <class Scalar>
Tensor<Scalar> normalized(Tensor<Scalar> t, bool* all_zero = nullptr) {
  bool nonzero = normalize_inplace(t);
  if (all_zero) *all_zero = !nonzero;
  return t;
}

// Restricts one axis to [lo, lo+len). A sliced-out axis (len == 1 and drop)
// is removed from the index list.
template <class Scalar>
Tensor<Scalar> slice_axis(const Tensor<Scalar>& t, const Label& l, std::int64_t lo,
                          std::int64_t len, bool drop_if_unit = false) {
  const int ax = t.axis(l);
  const std::int64_t d = t.dims()[static_cast<std::size_t>(ax)];
  if (lo < 0 || len < 1 || lo + len > d)
    throw std::out_of_range("slice_axis: range out of bounds");

  std::vector<Label> labels = t.labels();
  std::vector<std::int64_t> dims = t.dims();
  dims[static_cast<std::size_t>(ax)] = len;
  if (len == 1 && drop_if_unit) {
    labels.erase(labels.begin() + ax);
    dims.erase(dims.begin() + ax);
  }

  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= t.dims()[static_cast<std::size_t>(i)];
  for (std::size_t i = static_cast<std::size_t>(ax) + 1; i < t.dims().size(); ++i)
    inner *= t.dims()[i];

  std::vector<Scalar> out;
  out.reserve(static_cast<std::size_t>(outer * len * inner));
  const Scalar* src = t.data().data();
  for (std::int64_t o = 0; o < outer; ++o) {
    const Scalar* base = src + (o * d + lo) * inner;
    out.insert(out.end(), base, base + len * inner);
  }
  return Tensor<Scalar>(std::move(labels), std::move(dims), std::move(out), t.log_scale());
}

// Adds src (scaled to dst's log_scale) into a block of dst at the given
// per-axis offsets. Axis lists must match; src extents must fit.
template <class Scalar>
void add_block(Tensor<Scalar>& dst, const Tensor<Scalar>& src,
               const std::vector<std::int64_t>& offsets) {
  if (src.labels() != dst.labels())
    throw std::invalid_argument("add_block: label mismatch");
  if (offsets.size() != src.dims().size())
    throw std::invalid_argument("add_block: offsets rank mismatch");
  const int r = src.rank();
  for (int i = 0; i < r; ++i) {
    if (offsets[static_cast<std::size_t>(i)] < 0 ||
        offsets[static_cast<std::size_t>(i)] + src.dims()[static_cast<std::size_t>(i)] >
            dst.dims()[static_cast<std::size_t>(i)])
      throw std::out_of_range("add_block: block out of range");
  }

  const double rel = std::exp2(src.log_scale() - dst.log_scale());
  const auto factor = static_cast<typename Scalar::value_type>(rel);
  const auto dst_strides = dst.strides();

  if (r == 0) {
    dst.data()[0] += src.data()[0] * factor;
    return;
  }

  const std::int64_t run = src.dims().back();
  std::vector<std::int64_t> counter(static_cast<std::size_t>(r - 1), 0);
  std::int64_t base = 0;
  for (int i = 0; i < r; ++i) base += offsets[static_cast<std::size_t>(i)] * dst_strides[static_cast<std::size_t>(i)];

  const Scalar* s = src.data().data();
  Scalar* d = dst.data().data();
  const std::int64_t rows = src.volume() / run;
  std::int64_t dst_off = base;
  for (std::int64_t n = 0; n < rows; ++n) {
    for (std::int64_t k = 0; k < run; ++k) d[dst_off + k] += s[n * run + k] * factor;
    for (int i = r - 2; i >= 0; --i) {
      dst_off += dst_strides[static_cast<std::size_t>(i)];
      if (++counter[static_cast<std::size_t>(i)] < src.dims()[static_cast<std::size_t>(i)]) break;
      dst_off -= dst_strides[static_cast<std::size_t>(i)] * src.dims()[static_cast<std::size_t>(i)];
      counter[static_cast<std::size_t>(i)] = 0;
    }
  }
}

template <class To, class From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  std::vector<To> data(t.data().size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& z = t.data()[i];
    data[i] = To(static_cast<typename To::value_type>(z.real()),
                 static_cast<typename To::value_type>(z.imag()));
  }
  return Tensor<To>(t.labels(), t.dims(), std::move(data), t.log_scale());
}

// Fully represented value of a rank-0 tensor.
template <class Scalar>
cdouble scalar_value(const Tensor<Scalar>& t) {
  if (t.rank() != 0) throw std::invalid_argument("scalar_value: tensor not rank 0");
  cdouble v = static_cast<cdouble>(t.data()[0]);
  return v * std::exp2(t.log_scale());
}

}  // namespace qsim
