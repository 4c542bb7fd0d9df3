#pragma once

#include "inblock/errors.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace inblock {

using u128 = unsigned __int128;

/// A canonical address prefix over a `Width`-bit address space.
///
/// Bit 0 is the most significant address bit, so a prefix of length L fixes
/// bits 0..L-1 and every lower-order bit is zero. Production code uses the
/// 128-bit instantiation (`Ipv6Prefix`); narrow widths exist so tests can
/// enumerate the whole address space.
template <unsigned Width>
class BasicPrefix {
  static_assert(Width >= 1 && Width <= 128, "prefix width must be in [1,128]");

public:
  static constexpr unsigned width = Width;

  /// The whole address space (`::/0`).
  constexpr BasicPrefix() noexcept = default;

  /// Throws Error(LengthOutOfRange) or Error(NonCanonicalPrefix).
  static BasicPrefix make(u128 address, unsigned length) {
    if (length > Width)
      throw Error(errc::LengthOutOfRange, "length " + std::to_string(length));
    if ((address & ~space_mask()) != 0 || (address & host_mask(length)) != 0)
      throw Error(errc::NonCanonicalPrefix);
    return BasicPrefix(address, length);
  }

  constexpr u128 address() const noexcept { return address_; }
  constexpr unsigned length() const noexcept { return length_; }

  /// Mask of the bits a prefix of `length` leaves free.
  static constexpr u128 host_mask(unsigned length) noexcept {
    unsigned free_bits = Width - length;
    return free_bits >= 128 ? ~u128{0} : (u128{1} << free_bits) - 1;
  }

  static constexpr u128 space_mask() noexcept { return host_mask(0); }

  /// Value of address bit `index` (0 = most significant).
  static constexpr u128 bit(unsigned index) noexcept {
    return u128{1} << (Width - 1 - index);
  }

  constexpr u128 last_address() const noexcept {
    return address_ | host_mask(length_);
  }

  /// log2 of the number of addresses covered.
  constexpr unsigned size_log2() const noexcept { return Width - length_; }

  constexpr bool contains(const BasicPrefix& inner) const noexcept {
    return length_ <= inner.length_
           && (inner.address_ & ~host_mask(length_)) == address_;
  }

  constexpr bool overlaps(const BasicPrefix& other) const noexcept {
    return contains(other) || other.contains(*this);
  }

  /// Equal-length sibling: flips bit length-1.
  BasicPrefix buddy() const {
    if (length_ == 0)
      throw Error(errc::LengthOutOfRange, "the root prefix has no buddy");
    return BasicPrefix(address_ ^ bit(length_ - 1), length_);
  }

  BasicPrefix parent() const {
    if (length_ == 0)
      throw Error(errc::LengthOutOfRange, "the root prefix has no parent");
    return BasicPrefix(address_ & ~host_mask(length_ - 1), length_ - 1);
  }

  /// Lower and upper halves, each one bit longer.
  std::pair<BasicPrefix, BasicPrefix> split() const {
    if (length_ >= Width)
      throw Error(errc::LengthOutOfRange, "cannot split a host prefix");
    BasicPrefix lower(address_, length_ + 1);
    return {lower, BasicPrefix(address_ | bit(length_), length_ + 1)};
  }

  /// The prefix of length `length` (>= this one's) at the lowest address.
  BasicPrefix first_subprefix(unsigned length) const {
    if (length < length_ || length > Width)
      throw Error(errc::LengthOutOfRange, "length " + std::to_string(length));
    return BasicPrefix(address_, length);
  }

  /// The enclosing prefix of `length` (<= this one's).
  BasicPrefix truncate(unsigned length) const {
    if (length > length_)
      throw Error(errc::LengthOutOfRange, "length " + std::to_string(length));
    return BasicPrefix(address_ & ~host_mask(length), length);
  }

  friend constexpr bool operator==(const BasicPrefix&, const BasicPrefix&) = default;

  /// Address order, shorter prefix first on equal addresses.
  friend constexpr std::strong_ordering operator<=>(const BasicPrefix& a,
                                                    const BasicPrefix& b) noexcept {
    if (a.address_ != b.address_)
      return a.address_ < b.address_ ? std::strong_ordering::less
                                     : std::strong_ordering::greater;
    return a.length_ <=> b.length_;
  }

private:
  constexpr BasicPrefix(u128 address, unsigned length) noexcept
    : address_(address), length_(length) {
  }

  u128 address_{0};
  unsigned length_{0};
};

using Ipv6Prefix = BasicPrefix<128>;

template <unsigned W>
bool contains(const BasicPrefix<W>& outer, const BasicPrefix<W>& inner) noexcept {
  return outer.contains(inner);
}

template <unsigned W>
BasicPrefix<W> buddy(const BasicPrefix<W>& p) {
  return p.buddy();
}

template <unsigned W>
std::pair<BasicPrefix<W>, BasicPrefix<W>> split(const BasicPrefix<W>& p) {
  return p.split();
}

/// Parses `<ipv6-address>/<length>`; rejects prefixes with host bits set.
Ipv6Prefix parse_prefix(std::string_view text);

/// Parses a bare IPv6 address. Throws Error(MalformedAddress).
u128 parse_address(std::string_view text);

/// Lower-case hex with the longest zero run (leftmost on ties, at least two
/// groups) compressed to `::`.
std::string format_address(u128 address);

std::string format_prefix(const Ipv6Prefix& p);

/// Debug rendering for narrow test widths: "<address>/<length>" in decimal.
template <unsigned W>
std::string to_debug_string(const BasicPrefix<W>& p) {
  if constexpr (W == 128) {
    return format_prefix(p);
  } else {
    return std::to_string(static_cast<unsigned long long>(p.address())) + "/"
           + std::to_string(p.length());
  }
}

} // namespace inblock
