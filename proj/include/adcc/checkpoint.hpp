#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "adcc/arena.hpp"
#include "adcc/sim_engine.hpp"

namespace adcc {

/// Memory checkpoint: copy protected arrays into a shadow region through the
/// cache, flush every shadow line, then bump and flush a commit sequence.
/// Two shadow buffers alternate, so a torn checkpoint never touches the last
/// committed one.
class CheckpointRegion {
 public:
  struct Layout {
    std::vector<ArrayHandle> live;
    std::array<std::vector<ArrayHandle>, 2> shadows;
    ArrayHandle sequence;  // id of the last committed checkpoint, 0 = none
  };

  struct RestoredArray {
    std::string name;
    ElementKind kind = ElementKind::kF64;
    std::vector<double> f64;
    std::vector<std::int64_t> i64;
  };

  struct Restored {
    std::uint64_t id = 0;
    std::vector<RestoredArray> arrays;  // same order as Layout::live
  };

  /// Allocates both shadow buffers and the sequence scalar in `arena`.
  CheckpointRegion(Arena& arena, std::vector<ArrayHandle> protect,
                   const std::string& prefix = "ckpt");

  /// Returns the id just committed (1, 2, ...).
  std::uint64_t checkpoint(Arena& arena);

  /// Last committed contents. Throws kNoCommittedCheckpoint when none exists.
  static Restored restore(const NvmImage& snapshot, const Layout& layout);

  const Layout& layout() const { return layout_; }
  std::uint64_t committed() const { return committed_; }

 private:
  Layout layout_;
  std::uint64_t committed_ = 0;
};

}  // namespace adcc
