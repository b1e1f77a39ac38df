#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "qsim/tensor.hpp"

namespace qsim {

// Binary tensor dump. Little-endian throughout:
//   magic "QTNS", u32 version = 1, u32 rank,
//   per axis: u16 label length, label bytes, u64 extent,
//   f64 log_scale, then volume complex64 values (re, im as f32 pairs).
inline void write_tensor(std::ostream& os, const Tensorf& t) {
  os.write("QTNS", 4);
  auto put_u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u64 = [&](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) {
    const auto& l = t.labels()[static_cast<std::size_t>(i)];
    auto len = static_cast<std::uint16_t>(l.size());
    os.write(reinterpret_cast<const char*>(&len), 2);
    os.write(l.data(), len);
    put_u64(static_cast<std::uint64_t>(t.dims()[static_cast<std::size_t>(i)]));
  }
  double ls = t.log_scale();
  os.write(reinterpret_cast<const char*>(&ls), 8);
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.volume() * sizeof(cfloat)));
}

inline Tensorf read_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::string(magic, 4) != "QTNS")
    throw std::runtime_error("tensor dump: bad magic");
  auto get_u32 = [&] {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_u64 = [&] {
    std::uint64_t v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  if (get_u32() != 1) throw std::runtime_error("tensor dump: unsupported version");
  std::uint32_t rank = get_u32();
  std::vector<Label> labels;
  std::vector<std::int64_t> dims;
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint16_t len;
    is.read(reinterpret_cast<char*>(&len), 2);
    std::string l(len, '\0');
    is.read(l.data(), len);
    labels.push_back(std::move(l));
    dims.push_back(static_cast<std::int64_t>(get_u64()));
  }
  double ls;
  is.read(reinterpret_cast<char*>(&ls), 8);
  std::vector<cfloat> data(static_cast<std::size_t>(Tensorf::volume_from_dims(dims)));
  is.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(cfloat)));
  if (!is) throw std::runtime_error("tensor dump: truncated data");
  return Tensorf(std::move(labels), std::move(dims), std::move(data), ls);
}

}  // namespace qsim
