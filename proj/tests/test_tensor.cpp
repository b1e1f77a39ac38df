#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "qsim/contraction.hpp"
#include "qsim/tensor.hpp"
#include "qsim/tensor_io.hpp"
#include "test_support.hpp"

using namespace qsim;

namespace {

// Independent transpose oracle: plain index arithmetic, no shared code with
// the kernel's run/counter logic.
Tensorf transpose_reference(const Tensorf& t, const std::vector<Label>& order) {
  std::vector<std::int64_t> out_dims;
  for (const auto& l : order) out_dims.push_back(t.dim(l));
  Tensorf out(order, out_dims);
  out.set_log_scale(t.log_scale());
  const int r = t.rank();
  std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
  for (std::int64_t flat = 0; flat < t.volume(); ++flat) {
    std::int64_t rem = flat;
    for (int i = r - 1; i >= 0; --i) {
      idx[static_cast<std::size_t>(i)] = rem % t.dims()[static_cast<std::size_t>(i)];
      rem /= t.dims()[static_cast<std::size_t>(i)];
    }
    std::vector<std::int64_t> out_idx;
    for (const auto& l : order) out_idx.push_back(idx[static_cast<std::size_t>(t.axis(l))]);
    out.at(std::span<const std::int64_t>(out_idx)) = t.data()[static_cast<std::size_t>(flat)];
  }
  return out;
}

Tensorf identity2(const Label& a, const Label& b) {
  return Tensorf({a, b}, {2, 2}, {cfloat(1), cfloat(0), cfloat(0), cfloat(1)});
}

}  // namespace

TEST_CASE("transpose identity permutation is bitwise equal") {
  auto t = test::random_tensor({"a", "b", "c"}, {2, 3, 4}, test::rng());
  auto u = transpose(t, std::vector<Label>{"a", "b", "c"});
  CHECK(u.data() == t.data());
  CHECK(u.labels() == t.labels());
}

TEST_CASE("transpose twice is the original") {
  auto t = test::random_tensor({"r", "c"}, {2, 3}, test::rng());
  auto u = transpose(transpose(t, std::vector<Label>{"c", "r"}), std::vector<Label>{"r", "c"});
  CHECK(u.data() == t.data());
}

TEST_CASE("transpose matches the index-arithmetic reference on random rank-5") {
  for (int it = 0; it < 10; ++it) {
    auto t = test::random_tensor({"a", "b", "c", "d", "e"}, {2, 3, 2, 4, 3}, test::rng());
    std::vector<Label> order = t.labels();
    std::shuffle(order.begin(), order.end(), test::rng());
    auto got = transpose(t, order);
    auto want = transpose_reference(t, order);
    CHECK(got.labels() == want.labels());
    CHECK(got.data() == want.data());
  }
}

TEST_CASE("transpose preserves the multiset of values and composes") {
  auto t = test::random_tensor({"a", "b", "c"}, {3, 2, 5}, test::rng());
  std::vector<Label> p1{"c", "a", "b"};
  std::vector<Label> p2{"b", "c", "a"};
  auto once = transpose(transpose(t, p1), p2);
  auto direct = transpose(t, p2);
  CHECK(once.data() == direct.data());

  auto sorted_in = t.data();
  auto sorted_out = once.data();
  auto key = [](const cfloat& z) { return std::make_pair(z.real(), z.imag()); };
  std::sort(sorted_in.begin(), sorted_in.end(),
            [&](auto a, auto b) { return key(a) < key(b); });
  std::sort(sorted_out.begin(), sorted_out.end(),
            [&](auto a, auto b) { return key(a) < key(b); });
  CHECK(sorted_in == sorted_out);
}

TEST_CASE("transpose rejects non-permutations") {
  auto t = test::random_tensor({"a", "b"}, {2, 2}, test::rng());
  CHECK_THROWS(transpose(t, std::vector<Label>{"a", "a"}));
  CHECK_THROWS(transpose(t, std::vector<Label>{"a", "z"}));
}

TEST_CASE("flop count spot values") {
  CHECK(flop_count(4, 4, 4) == 64);
  CHECK(flop_count(1, 1, 1) == 8);
  const std::uint64_t big = std::uint64_t{1} << 30;
  CHECK(flop_count(big, big, big) == (std::uint64_t{8} << 45));
  CHECK_THROWS_AS(flop_count(2, 3, 5), std::invalid_argument);
}

TEST_CASE("identity times identity via TTGT, with flop accounting") {
  FlopCounter flops;
  auto a = identity2("i", "k");
  auto b = identity2("k", "j");
  ContractionSpec spec{{"k"}, {}};
  auto c = contract_ttgt(a, b, spec, &flops);
  CHECK(flops.total() == 64);
  CHECK(c.labels() == std::vector<Label>{"i", "j"});
  auto want = identity2("i", "j");
  CHECK(test::rel_frobenius(c, want) == doctest::Approx(0.0));
}

TEST_CASE("contraction with a unit scalar leaves the partner unchanged") {
  auto t = test::random_tensor({"a", "b"}, {3, 2}, test::rng());
  auto one = Tensorf::scalar(cfloat(1));
  auto got = contract_ttgt(one, t, ContractionSpec{});
  CHECK(got.labels() == t.labels());
  CHECK(test::rel_frobenius(got, t) == doctest::Approx(0.0));
}

TEST_CASE("TTGT matches the naive oracle on rank-4 x rank-4 with 2 shared labels") {
  for (int it = 0; it < 8; ++it) {
    auto a = test::random_tensor({"i", "j", "k", "l"}, {2, 3, 4, 2}, test::rng());
    auto b = test::random_tensor({"k", "l", "m", "n"}, {4, 2, 3, 2}, test::rng());
    ContractionSpec spec{{"k", "l"}, {}};
    auto fast = contract_ttgt(a, b, spec);
    auto slow = contract_naive(a, b, spec);
    CHECK(test::rel_frobenius(fast, slow) < 1e-5);
  }
}

TEST_CASE("TTGT equals naive on random specs up to volume 2^16") {
  std::mt19937_64& gen = test::rng();
  for (int it = 0; it < 40; ++it) {
    // Random split of up to 8 extent-2 labels into left-only, shared,
    // right-only.
    std::vector<Label> lhs, rhs, shared;
    const char* names = "abcdefgh";
    for (int i = 0; i < 8; ++i) {
      switch (gen() % 3) {
        case 0: lhs.push_back(std::string(1, names[i])); break;
        case 1: rhs.push_back(std::string(1, names[i])); break;
        default:
          shared.push_back(std::string(1, names[i]));
          lhs.push_back(std::string(1, names[i]));
          rhs.push_back(std::string(1, names[i]));
      }
    }
    auto a = test::random_tensor(lhs, std::vector<std::int64_t>(lhs.size(), 2), gen);
    auto b = test::random_tensor(rhs, std::vector<std::int64_t>(rhs.size(), 2), gen);
    ContractionSpec spec{shared, {}};
    auto fast = contract_ttgt(a, b, spec);
    auto slow = contract_naive(a, b, spec);
    CHECK(test::rel_frobenius(fast, slow) < 1e-5);
  }
}

TEST_CASE("naive contraction: scalars and matrix-vector") {
  auto x = Tensorf::scalar(cfloat(2, 1));
  auto y = Tensorf::scalar(cfloat(3, -1));
  auto xy = contract_naive(x, y, ContractionSpec{});
  CHECK(scalar_value(xy).real() == doctest::Approx(7));
  CHECK(scalar_value(xy).imag() == doctest::Approx(1));

  Tensorf m({"i", "j"}, {2, 2}, {cfloat(1), cfloat(2), cfloat(3), cfloat(4)});
  Tensorf v({"j"}, {2}, {cfloat(5), cfloat(6)});
  auto mv = contract_naive(m, v, ContractionSpec{{"j"}, {}});
  CHECK(mv.data()[0].real() == doctest::Approx(17));
  CHECK(mv.data()[1].real() == doctest::Approx(39));
}

TEST_CASE("naive contraction enforces its oracle bound") {
  auto a = test::random_tensor({"i", "k"}, {512, 512}, test::rng());
  auto b = test::random_tensor({"k", "j"}, {512, 512}, test::rng());
  CHECK_THROWS_AS(contract_naive(a, b, ContractionSpec{{"k"}, {}}, /*max_ops=*/1 << 20),
                  std::length_error);
}

TEST_CASE("contraction rejects extent mismatches") {
  Tensorf a({"i", "k"}, {2, 3});
  Tensorf b({"k", "j"}, {4, 2});
  CHECK_THROWS(contract_ttgt(a, b, ContractionSpec{{"k"}, {}}));
}

TEST_CASE("flop counter is additive over a fixed sequence") {
  FlopCounter flops;
  auto a = identity2("i", "k");
  auto b = identity2("k", "j");
  contract_ttgt(a, b, ContractionSpec{{"k"}, {}}, &flops);
  contract_ttgt(a, b, ContractionSpec{{"k"}, {}}, &flops);
  CHECK(flops.total() == 128);
}

TEST_CASE("normalize: all-ones data is untouched") {
  Tensorf t({"a"}, {4}, {cfloat(1), cfloat(1), cfloat(1), cfloat(1)});
  CHECK(normalize_inplace(t));
  for (const auto& z : t.data()) CHECK(z == cfloat(1));
  CHECK(t.log_scale() == 0.0);
}

TEST_CASE("normalize: pure power-of-two rescale") {
  const float tiny = std::ldexp(1.0f, -20);
  Tensorf t({"a"}, {2}, {cfloat(tiny), cfloat(tiny)});
  CHECK(normalize_inplace(t));
  for (const auto& z : t.data()) CHECK(z == cfloat(1));
  CHECK(t.log_scale() == -20.0);
}

TEST_CASE("normalize keeps the represented value and is idempotent") {
  for (int it = 0; it < 10; ++it) {
    auto t = test::random_tensor({"a", "b"}, {4, 8}, test::rng());
    const double scale_in = std::exp2(t.log_scale());
    std::vector<cdouble> before(t.data().size());
    for (std::size_t i = 0; i < before.size(); ++i)
      before[i] = static_cast<cdouble>(t.data()[i]) * scale_in;

    CHECK(normalize_inplace(t));
    double max_abs = 0;
    const double scale_out = std::exp2(t.log_scale());
    for (std::size_t i = 0; i < before.size(); ++i) {
      const cdouble now = static_cast<cdouble>(t.data()[i]) * scale_out;
      CHECK(std::abs(now - before[i]) <= 1e-6 * std::abs(before[i]));
      max_abs = std::max(max_abs, std::abs(static_cast<cdouble>(t.data()[i])));
    }
    CHECK(max_abs > 0.5);
    CHECK(max_abs <= 1.0);

    auto again = t;
    CHECK(normalize_inplace(again));
    CHECK(again.data() == t.data());
    CHECK(again.log_scale() == t.log_scale());
  }
}

TEST_CASE("normalize flags all-zero tensors and leaves them unchanged") {
  Tensorf t({"a"}, {3});
  CHECK_FALSE(normalize_inplace(t));
  bool all_zero = false;
  auto u = normalized(t, &all_zero);
  CHECK(all_zero);
}

TEST_CASE("slice_axis takes subranges and can drop unit axes") {
  Tensorf t({"a", "b"}, {2, 3}, {cfloat(0), cfloat(1), cfloat(2), cfloat(3), cfloat(4), cfloat(5)});
  auto s = slice_axis(t, "a", 1, 1, true);
  CHECK(s.labels() == std::vector<Label>{"b"});
  CHECK(s.data() == std::vector<cfloat>{cfloat(3), cfloat(4), cfloat(5)});
  auto mid = slice_axis(t, "b", 1, 2);
  CHECK(mid.dims() == std::vector<std::int64_t>{2, 2});
  CHECK(mid.data() == std::vector<cfloat>{cfloat(1), cfloat(2), cfloat(4), cfloat(5)});
}

TEST_CASE("binary dump round-trips") {
  auto t = test::random_tensor({"bond_x", "o_1"}, {4, 2}, test::rng());
  t.set_log_scale(-12.5);
  std::stringstream ss;
  write_tensor(ss, t);
  auto u = read_tensor(ss);
  CHECK(u.labels() == t.labels());
  CHECK(u.dims() == t.dims());
  CHECK(u.log_scale() == t.log_scale());
  CHECK(u.data() == t.data());
}
