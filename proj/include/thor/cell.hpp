#pragma once

#include <cstdint>

namespace thor {

// Absolute address of a stack slot: the per-worker, per-stack base plus the
// slot's offset. Bases of distinct workers never overlap, so moving a
// segment between workers requires translating every address inside it.
using Address = std::uint64_t;

enum class StackKind : std::uint8_t { heap = 0, choice = 1, trail = 2 };

inline constexpr unsigned kOffsetBits = 36;
inline constexpr std::uint64_t kOffsetMask = (std::uint64_t{1} << kOffsetBits) - 1;
inline constexpr unsigned kMaxSlots = 1024;

constexpr Address stack_base(unsigned slot, StackKind kind) {
  return Address(slot * 3u + static_cast<unsigned>(kind) + 1u) << kOffsetBits;
}

struct DecodedAddress {
  unsigned slot;
  StackKind kind;
  std::uint64_t offset;
  bool valid;
};

constexpr DecodedAddress decode(Address a) {
  const std::uint64_t id = a >> kOffsetBits;
  if (id == 0 || id > std::uint64_t{kMaxSlots} * 3) return {0, StackKind::heap, 0, false};
  return {static_cast<unsigned>((id - 1) / 3), static_cast<StackKind>((id - 1) % 3),
          a & kOffsetMask, true};
}

enum class Tag : std::uint8_t {
  ref = 0,
  atom = 1,
  integer = 2,
  str = 3,
  functor = 4,
  // clause templates only
  tvar = 5,
  tstr = 6,
};

inline constexpr std::int64_t kMaxInt = (std::int64_t{1} << 60) - 1;
inline constexpr std::int64_t kMinInt = -(std::int64_t{1} << 60);

// One tagged 64-bit slot: 3 tag bits, 61 payload bits.
class Cell {
 public:
  Cell() = default;

  static constexpr Cell ref(Address a) { return Cell((a << 3) | std::uint64_t(Tag::ref)); }
  static constexpr Cell str(Address a) { return Cell((a << 3) | std::uint64_t(Tag::str)); }
  static constexpr Cell atom(std::uint32_t id) {
    return Cell((std::uint64_t(id) << 3) | std::uint64_t(Tag::atom));
  }
  static constexpr Cell integer(std::int64_t v) {
    return Cell((static_cast<std::uint64_t>(v) << 3) | std::uint64_t(Tag::integer));
  }
  static constexpr Cell functor(std::uint32_t id) {
    return Cell((std::uint64_t(id) << 3) | std::uint64_t(Tag::functor));
  }
  static constexpr Cell tvar(std::uint32_t index) {
    return Cell((std::uint64_t(index) << 3) | std::uint64_t(Tag::tvar));
  }
  static constexpr Cell tstr(std::uint32_t offset) {
    return Cell((std::uint64_t(offset) << 3) | std::uint64_t(Tag::tstr));
  }
  static constexpr Cell from_raw(std::uint64_t raw) { return Cell(raw); }

  constexpr Tag tag() const { return static_cast<Tag>(raw_ & 7); }
  constexpr bool is_ref() const { return tag() == Tag::ref; }
  constexpr bool is_str() const { return tag() == Tag::str; }
  constexpr bool holds_address() const { return is_ref() || is_str(); }

  constexpr Address address() const { return raw_ >> 3; }
  constexpr std::int64_t integer_value() const { return static_cast<std::int64_t>(raw_) >> 3; }
  constexpr std::uint32_t id() const { return static_cast<std::uint32_t>(raw_ >> 3); }
  constexpr std::uint64_t raw() const { return raw_; }

  constexpr Cell with_address(Address a) const { return Cell((a << 3) | (raw_ & 7)); }

  friend constexpr bool operator==(Cell a, Cell b) { return a.raw_ == b.raw_; }

 private:
  constexpr explicit Cell(std::uint64_t raw) : raw_(raw) {}
  std::uint64_t raw_;
};

constexpr bool fits_cell_integer(std::int64_t v) { return v >= kMinInt && v <= kMaxInt; }

}  // namespace thor
