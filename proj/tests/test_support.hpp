#pragma once

#include <complex>
#include <random>
#include <string>
#include <vector>

#include "qsim/tensor.hpp"

namespace qsim::test {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(0x5eed);
  return gen;
}

inline double uniform() {
  return static_cast<double>(rng()() >> 11) * 0x1p-53;
}

// Random tensor with entries in the unit square of the complex plane.
inline Tensorf random_tensor(std::vector<Label> labels, std::vector<std::int64_t> dims,
                             std::mt19937_64& gen) {
  std::vector<cfloat> data(static_cast<std::size_t>(Tensorf::volume_from_dims(dims)));
  for (auto& z : data) {
    const float re = static_cast<float>(static_cast<double>(gen() >> 11) * 0x1p-53 - 0.5);
    const float im = static_cast<float>(static_cast<double>(gen() >> 11) * 0x1p-53 - 0.5);
    z = cfloat(re, im);
  }
  return Tensorf(std::move(labels), std::move(dims), std::move(data));
}

// Relative Frobenius distance between represented values, label-order aware.
inline double rel_frobenius(const Tensorf& a, const Tensorf& b) {
  Tensorf bt = b.labels() == a.labels() ? b : transpose(b, a.labels());
  const double sa = std::exp2(a.log_scale());
  const double sb = std::exp2(bt.log_scale());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const cdouble x = static_cast<cdouble>(a.data()[i]) * sa;
    const cdouble y = static_cast<cdouble>(bt.data()[i]) * sb;
    num += std::norm(x - y);
    den += std::norm(y);
  }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace qsim::test
