#include "adcc/arena.hpp"

#include <algorithm>
#include <bit>

namespace adcc {

// The NVM image stores elements in native byte order.
static_assert(std::endian::native == std::endian::little, "NVM images are little-endian");

std::string_view element_kind_name(ElementKind kind) noexcept {
  return kind == ElementKind::kF64 ? "f64" : "i64";
}

const ArrayHandle* ArenaLayout::find(std::string_view name) const {
  auto it = std::find_if(allocations.begin(), allocations.end(),
                         [&](const ArrayHandle& h) { return h.name == name; });
  return it == allocations.end() ? nullptr : &*it;
}

Arena::Arena(SimEngine& engine, Address base, Address limit)
    : engine_(&engine), next_(base), limit_(limit) {
  const Address ls = engine.config().line_size;
  next_ = (next_ + ls - 1) / ls * ls;
}

ArrayHandle Arena::reserve(std::string name, ElementKind kind, std::uint64_t length) {
  if (layout_.find(name)) throw Error(ErrorCode::kDuplicateName, name);
  const Address ls = line_size();
  const std::uint64_t bytes = length * 8;
  if (length > (limit_ - next_) / 8 || next_ + bytes > limit_)
    throw Error(ErrorCode::kAddressSpaceExhausted, name);
  ArrayHandle h{std::move(name), kind, length, next_};
  next_ = (next_ + bytes + ls - 1) / ls * ls;
  engine_->map_range(h.base, bytes);
  layout_.allocations.push_back(h);
  return h;
}

ArrayHandle Arena::alloc_f64(std::string name, std::uint64_t length,
                             std::span<const double> initial) {
  if (!initial.empty() && initial.size() != length)
    throw Error(ErrorCode::kInvalidArgument, name + ": initial values do not match length");
  ArrayHandle h = reserve(std::move(name), ElementKind::kF64, length);
  if (!initial.empty()) persist_f64(h, 0, initial);
  return h;
}

ArrayHandle Arena::alloc_i64(std::string name, std::uint64_t length,
                             std::span<const std::int64_t> initial) {
  if (!initial.empty() && initial.size() != length)
    throw Error(ErrorCode::kInvalidArgument, name + ": initial values do not match length");
  ArrayHandle h = reserve(std::move(name), ElementKind::kI64, length);
  if (!initial.empty()) persist_i64(h, 0, initial);
  return h;
}

void Arena::flush_element(const ArrayHandle& h, std::uint64_t i) {
  if (i >= h.length) throw Error(ErrorCode::kIndexOutOfRange, h.name);
  engine_->clflush(h.address_of(i));
}

void Arena::flush_range(const ArrayHandle& h, std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi || hi > h.length) throw Error(ErrorCode::kIndexOutOfRange, h.name);
  if (lo == hi) return;
  const Address ls = line_size();
  const Address first = h.address_of(lo) / ls * ls;
  const Address last = h.address_of(hi) - 1;
  for (Address line = first; line <= last; line += ls)
    engine_->clflush(std::max(line, h.address_of(lo)));
}

void Arena::persist_f64(const ArrayHandle& h, std::uint64_t offset,
                        std::span<const double> values) {
  if (h.kind != ElementKind::kF64) throw Error(ErrorCode::kKindMismatch, h.name);
  if (offset > h.length || values.size() > h.length - offset)
    throw Error(ErrorCode::kIndexOutOfRange, h.name);
  engine_->persist_initialize(h.address_of(offset), std::as_bytes(values));
}

void Arena::persist_i64(const ArrayHandle& h, std::uint64_t offset,
                        std::span<const std::int64_t> values) {
  if (h.kind != ElementKind::kI64) throw Error(ErrorCode::kKindMismatch, h.name);
  if (offset > h.length || values.size() > h.length - offset)
    throw Error(ErrorCode::kIndexOutOfRange, h.name);
  engine_->persist_initialize(h.address_of(offset), std::as_bytes(values));
}

double Arena::read_f64(const NvmImage& snapshot, const ArrayHandle& h, std::uint64_t i) {
  check(h, i, ElementKind::kF64);
  return snapshot.read_f64(h.address_of(i));
}

std::int64_t Arena::read_i64(const NvmImage& snapshot, const ArrayHandle& h, std::uint64_t i) {
  check(h, i, ElementKind::kI64);
  return snapshot.read_i64(h.address_of(i));
}

std::vector<double> Arena::read_f64_range(const NvmImage& snapshot, const ArrayHandle& h,
                                          std::uint64_t lo, std::uint64_t hi) {
  if (h.kind != ElementKind::kF64) throw Error(ErrorCode::kKindMismatch, h.name);
  if (lo > hi || hi > h.length) throw Error(ErrorCode::kIndexOutOfRange, h.name);
  std::vector<double> out(hi - lo);
  snapshot.read(h.address_of(lo), reinterpret_cast<std::byte*>(out.data()), out.size() * 8);
  return out;
}

}  // namespace adcc
