#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace inblock {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  static Digest from_hex(std::string_view text);

  friend auto operator<=>(const Digest&, const Digest&) = default;
};

/// 256-bit digest used for block hashes, transaction ids, and snapshots.
Digest sha256(ByteView data);
Digest sha256(std::string_view data);

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view text);

/// Account identity: digest of the account's public key.
struct AccountId {
  Digest digest;

  std::string hex() const { return digest.hex(); }
  static AccountId from_hex(std::string_view text) { return {Digest::from_hex(text)}; }
  static AccountId of_public_key(ByteView public_key) { return {sha256(public_key)}; }

  friend auto operator<=>(const AccountId&, const AccountId&) = default;
};

struct KeyPair {
  Bytes public_key;
  Bytes secret_key;

  AccountId id() const { return AccountId::of_public_key(public_key); }
};

/// Signing and verification behind one interface, so the ledger can run with
/// a real scheme or a fast deterministic stub.
class SignatureScheme {
public:
  virtual ~SignatureScheme() = default;

  virtual std::string_view name() const noexcept = 0;
  /// Deterministic key derivation from a 32-byte seed.
  virtual KeyPair derive_keypair(const Digest& seed) const = 0;
  virtual Bytes sign(const KeyPair& key, ByteView message) const = 0;
  virtual bool verify(ByteView public_key, ByteView message, ByteView signature) const = 0;
};

/// Ed25519 via libsodium.
std::shared_ptr<const SignatureScheme> ed25519_scheme();

/// Test stub: the public key is the seed itself and a signature is
/// sha256(public_key || message). Offers no security whatsoever.
std::shared_ptr<const SignatureScheme> stub_scheme();

/// Looks a scheme up by name ("ed25519" or "stub").
std::shared_ptr<const SignatureScheme> scheme_by_name(std::string_view name);

} // namespace inblock
