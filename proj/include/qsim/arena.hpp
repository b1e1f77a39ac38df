#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace qsim {

// Buddy allocator over one pre-allocated buffer. Block sizes are powers of
// two down to min_block; freeing merges buddies eagerly. Allocation failure
// is a value, not an error: pipelined execution retries once another step
// releases its blocks.
class BuddyArena {
 public:
  explicit BuddyArena(std::size_t capacity_bytes, std::size_t min_block = 256);

  // Offset-based handle into the arena buffer.
  struct Block {
    std::size_t offset;
    std::size_t size;  // rounded-up power-of-two size
  };

  std::optional<Block> allocate(std::size_t bytes);
  void release(Block b);

  void* pointer(const Block& b) { return buffer_.data() + b.offset; }
  std::size_t capacity() const { return capacity_; }
  std::size_t allocated() const { return allocated_; }
  std::size_t peak_allocated() const { return peak_; }

 private:
  int order_of(std::size_t bytes) const;
  std::size_t block_size(int order) const { return min_block_ << order; }

  std::size_t capacity_ = 0;
  std::size_t min_block_ = 0;
  int max_order_ = 0;
  std::size_t allocated_ = 0;
  std::size_t peak_ = 0;
  std::vector<std::vector<std::size_t>> free_lists_;  // per order, block offsets
  std::vector<char> buffer_;
};

}  // namespace qsim
