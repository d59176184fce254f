#pragma once

// Naive cache model used only as a test oracle. Every line lives in a
// std::map keyed by line number; recency is a per-set std::list (front is
// most recent). Written independently of SimEngine.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adcc::testing {

class ReferenceCache {
 public:
  struct Line {
    bool dirty = false;
    std::vector<std::byte> bytes;
  };

  ReferenceCache(std::uint64_t line_size, std::uint64_t capacity, std::uint64_t ways)
      : line_size_(line_size),
        lines_total_(capacity / line_size),
        ways_(ways == 0 ? capacity / line_size : ways),
        sets_(lines_total_ / ways_),
        recency_(sets_) {}

  // Optional crash trigger mirroring "crash before op number n + 1".
  void crash_after(std::uint64_t n) { crash_after_ = n; }
  void crash_at_label(std::string label, std::uint64_t occurrence) {
    label_ = std::move(label);
    occurrence_ = occurrence;
  }

  bool crashed() const { return crashed_; }

  // Each returns false when the crash fired instead of the operation.
  bool read(std::uint64_t addr, std::byte* out, std::size_t len) {
    if (!start_op()) return false;
    ++loads;
    for (std::size_t k = 0; k < len; ++k) out[k] = line_for(addr + k).bytes[offset(addr + k)];
    return true;
  }

  bool write(std::uint64_t addr, const std::byte* in, std::size_t len) {
    if (!start_op()) return false;
    ++stores;
    for (std::size_t k = 0; k < len; ++k) {
      Line& l = line_for(addr + k);
      l.bytes[offset(addr + k)] = in[k];
      l.dirty = true;
    }
    return true;
  }

  bool clflush(std::uint64_t addr) {
    if (!start_op()) return false;
    ++flush_ops;
    const std::uint64_t ln = addr / line_size_;
    auto it = cache_.find(ln);
    if (it == cache_.end()) {
      ++flushed_clean;
      return true;
    }
    if (it->second.dirty) {
      store_line(ln, it->second.bytes);
      ++flushed_dirty;
      ++writebacks;
    } else {
      ++flushed_clean;
    }
    cache_.erase(it);
    recency_[ln % sets_].remove(ln);
    return true;
  }

  bool label(const std::string& l) {
    if (crashed_) return true;
    if (crash_after_ && ops_ >= *crash_after_) {
      crashed_ = true;
      return false;
    }
    if (!label_.empty() && l == label_ && ++label_hits_ == occurrence_) {
      crashed_ = true;
      return false;
    }
    return true;
  }

  void persist(std::uint64_t addr, const std::byte* in, std::size_t len) {
    for (std::size_t k = 0; k < len; ++k) {
      const std::uint64_t a = addr + k;
      nvm_[a] = in[k];
      auto it = cache_.find(a / line_size_);
      if (it != cache_.end() && !it->second.dirty) it->second.bytes[offset(a)] = in[k];
    }
  }

  std::byte nvm_byte(std::uint64_t addr) const {
    auto it = nvm_.find(addr);
    return it == nvm_.end() ? std::byte{0} : it->second;
  }

  // Cached lines sorted by line address.
  const std::map<std::uint64_t, Line>& cache() const { return cache_; }

  // Lines of one set from most to least recently used.
  const std::list<std::uint64_t>& recency(std::uint64_t set) const { return recency_[set]; }
  std::uint64_t sets() const { return sets_; }

  const std::map<std::uint64_t, std::byte>& nvm() const { return nvm_; }

  std::uint64_t loads = 0, stores = 0, hits = 0, misses = 0, evictions = 0, writebacks = 0,
                flush_ops = 0, flushed_dirty = 0, flushed_clean = 0;

 private:
  bool start_op() {
    if (crash_after_ && ops_ >= *crash_after_) {
      crashed_ = true;
      return false;
    }
    ++ops_;
    touched_.clear();
    return true;
  }

  std::uint64_t offset(std::uint64_t addr) const { return addr % line_size_; }

  void store_line(std::uint64_t ln, const std::vector<std::byte>& bytes) {
    for (std::uint64_t k = 0; k < line_size_; ++k) nvm_[ln * line_size_ + k] = bytes[k];
  }

  // Touches the line once per operation (a multi-byte access counts one
  // hit or miss per line, not per byte).
  Line& line_for(std::uint64_t addr) {
    const std::uint64_t ln = addr / line_size_;
    std::list<std::uint64_t>& order = recency_[ln % sets_];
    if (!touched_.count(ln)) {
      touched_[ln] = true;
      if (cache_.count(ln)) {
        ++hits;
        order.remove(ln);
        order.push_front(ln);
      } else {
        ++misses;
        if (order.size() == ways_) {
          const std::uint64_t victim = order.back();
          order.pop_back();
          ++evictions;
          if (cache_[victim].dirty) {
            store_line(victim, cache_[victim].bytes);
            ++writebacks;
          }
          cache_.erase(victim);
        }
        Line fresh;
        fresh.bytes.resize(line_size_);
        for (std::uint64_t k = 0; k < line_size_; ++k) fresh.bytes[k] = nvm_byte(ln * line_size_ + k);
        cache_[ln] = std::move(fresh);
        order.push_front(ln);
      }
    }
    return cache_[ln];
  }

  std::uint64_t line_size_, lines_total_, ways_, sets_;
  std::map<std::uint64_t, Line> cache_;
  std::vector<std::list<std::uint64_t>> recency_;
  std::map<std::uint64_t, std::byte> nvm_;
  std::map<std::uint64_t, bool> touched_;
  std::optional<std::uint64_t> crash_after_;
  std::string label_;
  std::uint64_t occurrence_ = 0, label_hits_ = 0, ops_ = 0;
  bool crashed_ = false;
};

}  // namespace adcc::testing
