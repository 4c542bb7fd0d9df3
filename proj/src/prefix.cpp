#include "inblock/prefix.hpp"

#include <arpa/inet.h>

#include <array>
#include <charconv>

namespace inblock {

u128 parse_address(std::string_view text) {
  std::string buf(text);
  std::array<unsigned char, 16> bytes{};
  if (inet_pton(AF_INET6, buf.c_str(), bytes.data()) != 1)
    throw Error(errc::MalformedAddress, buf);
  u128 value = 0;
  for (unsigned char b : bytes)
    value = (value << 8) | b;
  return value;
}

Ipv6Prefix parse_prefix(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos)
    throw Error(errc::MalformedAddress, "missing prefix length: " + std::string(text));
  u128 address = parse_address(text.substr(0, slash));
  auto len_text = text.substr(slash + 1);
  unsigned length = 0;
  auto [end, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), length);
  if (len_text.empty() || ec != std::errc{} || end != len_text.data() + len_text.size())
    throw Error(errc::MalformedAddress, "bad prefix length: " + std::string(text));
  if (length > 128)
    throw Error(errc::LengthOutOfRange, "prefix length " + std::to_string(length));
  if ((address & Ipv6Prefix::host_mask(length)) != 0)
    throw Error(errc::NonCanonicalPrefix, std::string(text));
  return Ipv6Prefix::make(address, length);
}

std::string format_address(u128 address) {
  std::array<unsigned, 8> groups{};
  for (int i = 7; i >= 0; --i) {
    groups[static_cast<size_t>(i)] = static_cast<unsigned>(address & 0xffff);
    address >>= 16;
  }

  int best_start = -1;
  int best_len = 0;
  for (int i = 0; i < 8;) {
    if (groups[static_cast<size_t>(i)] != 0) {
      ++i;
      continue;
    }
    int j = i;
    while (j < 8 && groups[static_cast<size_t>(j)] == 0)
      ++j;
    if (j - i > best_len) {
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len < 2)
    best_start = -1;

  std::string out;
  char hex[8];
  for (int i = 0; i < 8; ++i) {
    if (i == best_start) {
      out += "::";
      i += best_len - 1;
      continue;
    }
    if (!out.empty() && out.back() != ':')
      out += ':';
    auto [p, ec] = std::to_chars(hex, hex + sizeof hex, groups[static_cast<size_t>(i)], 16);
    out.append(hex, p);
  }
  return out;
}

std::string format_prefix(const Ipv6Prefix& p) {
  return format_address(p.address()) + "/" + std::to_string(p.length());
}

} // namespace inblock
