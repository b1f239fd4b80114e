#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace etas {

/// Latent parent of every event: 0 marks a background (immigrant) event,
/// j >= 1 means the event was triggered by event j (1-indexed, so parent
/// j of event i always satisfies j < i).
class BranchingVector {
 public:
  BranchingVector() = default;
  /// All events immigrants.
  explicit BranchingVector(std::size_t n) : parent_(n, 0) {}
  /// Throws Error(domain) when some parent does not precede its child.
  explicit BranchingVector(std::vector<std::uint32_t> parents);

  [[nodiscard]] std::size_t size() const noexcept { return parent_.size(); }
  /// Parent of the event at zero-based position i.
  [[nodiscard]] std::uint32_t parent(std::size_t i) const { return parent_[i]; }
  void set_parent(std::size_t i, std::uint32_t parent);
  [[nodiscard]] std::span<const std::uint32_t> parents() const noexcept { return parent_; }

  [[nodiscard]] std::size_t num_immigrants() const noexcept;
  /// Direct offspring count per event (|S_j| for j = 1..n, zero-based).
  [[nodiscard]] std::vector<std::size_t> offspring_counts() const;

  friend bool operator==(const BranchingVector&, const BranchingVector&) = default;

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace etas
