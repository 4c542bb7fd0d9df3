#include "inblock/crypto.hpp"

#include "inblock/errors.hpp"

#include <sodium.h>

#include <algorithm>

namespace inblock {

namespace {

void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0)
      throw std::runtime_error("libsodium initialisation failed");
    return true;
  }();
  (void)ready;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

class Ed25519Scheme final : public SignatureScheme {
public:
  Ed25519Scheme() { ensure_sodium(); }

  std::string_view name() const noexcept override { return "ed25519"; }

  KeyPair derive_keypair(const Digest& seed) const override {
    KeyPair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.bytes.data());
    return kp;
  }

  Bytes sign(const KeyPair& key, ByteView message) const override {
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                         key.secret_key.data());
    return sig;
  }

  bool verify(ByteView public_key, ByteView message, ByteView signature) const override {
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES)
      return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data())
           == 0;
  }
};

class StubScheme final : public SignatureScheme {
public:
  std::string_view name() const noexcept override { return "stub"; }

  KeyPair derive_keypair(const Digest& seed) const override {
    KeyPair kp;
    kp.public_key.assign(seed.bytes.begin(), seed.bytes.end());
    kp.secret_key = kp.public_key;
    return kp;
  }

  Bytes sign(const KeyPair& key, ByteView message) const override {
    return tag(key.public_key, message);
  }

  bool verify(ByteView public_key, ByteView message, ByteView signature) const override {
    Bytes expected = tag(public_key, message);
    return std::equal(expected.begin(), expected.end(), signature.begin(), signature.end());
  }

private:
  static Bytes tag(ByteView public_key, ByteView message) {
    Bytes buf(public_key.begin(), public_key.end());
    buf.insert(buf.end(), message.begin(), message.end());
    Digest d = sha256(buf);
    return Bytes(d.bytes.begin(), d.bytes.end());
  }
};

} // namespace

std::string to_hex(ByteView data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out += digits[b >> 4];
    out += digits[b & 0xf];
  }
  return out;
}

Bytes from_hex(std::string_view text) {
  if (text.size() % 2 != 0)
    throw Error(errc::MalformedTransaction, "odd-length hex");
  Bytes out(text.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    int hi = hex_value(text[2 * i]);
    int lo = hex_value(text[2 * i + 1]);
    if (hi < 0 || lo < 0)
      throw Error(errc::MalformedTransaction, "bad hex digit");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

std::string Digest::hex() const {
  return to_hex(bytes);
}

Digest Digest::from_hex(std::string_view text) {
  Bytes raw = inblock::from_hex(text);
  if (raw.size() != 32)
    throw Error(errc::MalformedTransaction, "digest must be 32 bytes");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

Digest sha256(ByteView data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

Digest sha256(std::string_view data) {
  return sha256(ByteView(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::shared_ptr<const SignatureScheme> ed25519_scheme() {
  static const auto scheme = std::make_shared<const Ed25519Scheme>();
  return scheme;
}

std::shared_ptr<const SignatureScheme> stub_scheme() {
  static const auto scheme = std::make_shared<const StubScheme>();
  return scheme;
}

std::shared_ptr<const SignatureScheme> scheme_by_name(std::string_view name) {
  if (name == "ed25519")
    return ed25519_scheme();
  if (name == "stub")
    return stub_scheme();
  throw Error(errc::BadConfig, "unknown signature scheme: " + std::string(name));
}

} // namespace inblock
