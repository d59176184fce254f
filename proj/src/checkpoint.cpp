#include "adcc/checkpoint.hpp"

#include "adcc/error.hpp"

namespace adcc {

CheckpointRegion::CheckpointRegion(Arena& arena, std::vector<ArrayHandle> protect,
                                   const std::string& prefix) {
  layout_.live = std::move(protect);
  for (int b = 0; b < 2; ++b) {
    for (const auto& h : layout_.live) {
      const std::string name = prefix + "_" + std::to_string(b) + "_" + h.name;
      layout_.shadows[b].push_back(h.kind == ElementKind::kF64 ? arena.alloc_f64(name, h.length)
                                                               : arena.alloc_i64(name, h.length));
    }
  }
  layout_.sequence = arena.alloc_i64(prefix + "_sequence", 1);
}

std::uint64_t CheckpointRegion::checkpoint(Arena& arena) {
  const std::uint64_t id = committed_ + 1;
  const auto& shadows = layout_.shadows[id % 2];
  for (std::size_t a = 0; a < layout_.live.size(); ++a) {
    const ArrayHandle& src = layout_.live[a];
    const ArrayHandle& dst = shadows[a];
    if (src.kind == ElementKind::kF64) {
      for (std::uint64_t e = 0; e < src.length; ++e) arena.store_f64(dst, e, arena.load_f64(src, e));
    } else {
      for (std::uint64_t e = 0; e < src.length; ++e) arena.store_i64(dst, e, arena.load_i64(src, e));
    }
    arena.engine().note_memcpy(8 * src.length);
    arena.flush_range(dst, 0, dst.length);
  }
  arena.store_i64(layout_.sequence, 0, static_cast<std::int64_t>(id));
  arena.flush_element(layout_.sequence, 0);
  committed_ = id;
  return id;
}

CheckpointRegion::Restored CheckpointRegion::restore(const NvmImage& snapshot,
                                                     const Layout& layout) {
  const auto seq = Arena::read_i64(snapshot, layout.sequence, 0);
  if (seq <= 0) throw Error(ErrorCode::kNoCommittedCheckpoint, "no committed checkpoint");
  Restored out;
  out.id = static_cast<std::uint64_t>(seq);
  const auto& shadows = layout.shadows[out.id % 2];
  for (std::size_t a = 0; a < layout.live.size(); ++a) {
    const ArrayHandle& s = shadows[a];
    RestoredArray r{layout.live[a].name, s.kind, {}, {}};
    if (s.kind == ElementKind::kF64) {
      r.f64 = Arena::read_f64_range(snapshot, s, 0, s.length);
    } else {
      r.i64.resize(s.length);
      for (std::uint64_t e = 0; e < s.length; ++e) r.i64[e] = Arena::read_i64(snapshot, s, e);
    }
    out.arrays.push_back(std::move(r));
  }
  return out;
}

}  // namespace adcc
