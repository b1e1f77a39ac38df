#include "qsim/arena.hpp"

#include <algorithm>
#include <stdexcept>

namespace qsim {

namespace {

std::size_t round_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

}  // namespace

BuddyArena::BuddyArena(std::size_t capacity_bytes, std::size_t min_block)
    : min_block_(round_pow2(std::max<std::size_t>(min_block, 64))) {
  capacity_ = round_pow2(std::max(capacity_bytes, min_block_));
  max_order_ = 0;
  while (block_size(max_order_) < capacity_) ++max_order_;
  free_lists_.resize(static_cast<std::size_t>(max_order_) + 1);
  free_lists_[static_cast<std::size_t>(max_order_)].push_back(0);
  buffer_.resize(capacity_);
}

int BuddyArena::order_of(std::size_t bytes) const {
  int order = 0;
  while (block_size(order) < bytes) ++order;
  return order;
}

std::optional<BuddyArena::Block> BuddyArena::allocate(std::size_t bytes) {
  if (bytes == 0) bytes = 1;
  if (bytes > capacity_) return std::nullopt;
  const int want = order_of(bytes);

  int have = want;
  while (have <= max_order_ && free_lists_[static_cast<std::size_t>(have)].empty()) ++have;
  if (have > max_order_) return std::nullopt;

  std::size_t offset = free_lists_[static_cast<std::size_t>(have)].back();
  free_lists_[static_cast<std::size_t>(have)].pop_back();

  // Split down to the requested order, parking the upper halves.
  while (have > want) {
    --have;
    free_lists_[static_cast<std::size_t>(have)].push_back(offset + block_size(have));
  }

  allocated_ += block_size(want);
  peak_ = std::max(peak_, allocated_);
  return Block{offset, block_size(want)};
}

void BuddyArena::release(Block b) {
  int order = order_of(b.size);
  if (block_size(order) != b.size) throw std::invalid_argument("arena: bad block size");
  allocated_ -= b.size;

  std::size_t offset = b.offset;
  while (order < max_order_) {
    const std::size_t buddy = offset ^ block_size(order);
    auto& fl = free_lists_[static_cast<std::size_t>(order)];
    auto it = std::find(fl.begin(), fl.end(), buddy);
    if (it == fl.end()) break;
    fl.erase(it);
    offset = std::min(offset, buddy);
    ++order;
  }
  free_lists_[static_cast<std::size_t>(order)].push_back(offset);
}

}  // namespace qsim
