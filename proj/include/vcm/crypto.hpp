#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string_view>

#include "vcm/bytes.hpp"
#include "vcm/result.hpp"

// Deterministic keyed-keystream / keyed-digest crypto backend. It gives every
// protocol message real key material, signatures and recipient-bound
// ciphertexts with reproducible bytes, which is what the simulator needs.
// It has no cryptographic strength and must never leave a test or simulation
// context. Protocol code only touches the types and free functions below, so
// a hardened backend can replace this one without touching callers.

namespace vcm::crypto {

inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kPrivateKeySize = 32;
inline constexpr std::size_t kFingerprintSize = 16;
inline constexpr std::size_t kSignatureSize = 40;
inline constexpr std::size_t kCiphertextTagSize = 8;
inline constexpr std::size_t kMaxPlaintextSize = 64 * 1024;

using PublicKey = std::array<std::uint8_t, kPublicKeySize>;
using PrivateKey = std::array<std::uint8_t, kPrivateKeySize>;
using Fingerprint = std::array<std::uint8_t, kFingerprintSize>;

struct Signature {
  std::array<std::uint8_t, kSignatureSize> bytes{};
  bool operator==(const Signature&) const = default;
};

struct Ciphertext {
  Fingerprint recipient_fingerprint{};
  Bytes payload;  // keystream-masked plaintext followed by an 8-byte tag
  bool operator==(const Ciphertext&) const = default;
};

struct KeyPair {
  PublicKey public_key{};
  PrivateKey private_key{};
  Fingerprint fingerprint{};
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Two independent 64-bit accumulators over (domain, key, data), expanded via
// splitmix64 into as many output bytes as requested.
struct Absorber {
  std::uint64_t a = 0xcbf29ce484222325ULL;  // FNV-1a basis
  std::uint64_t b = 0x9ae16a3b2f90404fULL;

  void byte(std::uint8_t c) {
    a = (a ^ c) * 0x100000001b3ULL;
    b = (b + c + 1) * 0xc2b2ae3d27d4eb4fULL;
    b ^= b >> 29;
  }
  void block(std::span<const std::uint8_t> d) {
    for (std::uint8_t c : d) byte(c);
  }
  void length(std::uint64_t n) {
    for (int s = 0; s < 64; s += 8) byte(static_cast<std::uint8_t>(n >> s));
  }

  void squeeze(std::span<std::uint8_t> out) {
    std::uint64_t s0 = a, s1 = b;
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t w = splitmix64(s0) ^ splitmix64(s1);
      for (int s = 0; s < 64 && i < out.size(); s += 8) out[i++] = static_cast<std::uint8_t>(w >> s);
    }
  }
};

inline void keyed_digest(std::string_view domain, std::span<const std::uint8_t> key,
                         std::span<const std::uint8_t> data, std::span<std::uint8_t> out) {
  Absorber ab;
  ab.length(domain.size());
  for (char c : domain) ab.byte(static_cast<std::uint8_t>(c));
  ab.length(key.size());
  ab.block(key);
  ab.length(data.size());
  ab.block(data);
  ab.squeeze(out);
}

inline void keystream(std::string_view domain, std::span<const std::uint8_t> key,
                      std::span<std::uint8_t> out) {
  keyed_digest(domain, key, {}, out);
}

}  // namespace detail

inline Fingerprint fingerprint_of(const PublicKey& pk) {
  Fingerprint fp{};
  detail::keyed_digest("vcm.fp", pk, {}, fp);
  return fp;
}

inline PublicKey derive_public(const PrivateKey& sk) {
  PublicKey pk{};
  detail::keyed_digest("vcm.pk", sk, {}, pk);
  return pk;
}

inline KeyPair generate_keypair(std::uint64_t seed) {
  KeyPair kp;
  std::array<std::uint8_t, 8> seed_bytes{};
  for (int i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(seed >> (8 * i));
  detail::keyed_digest("vcm.sk", seed_bytes, {}, kp.private_key);
  kp.public_key = derive_public(kp.private_key);
  kp.fingerprint = fingerprint_of(kp.public_key);
  return kp;
}

inline Result<Signature> sign(const PrivateKey& sk, std::span<const std::uint8_t> message) {
  if (message.empty()) return err(Errc::invalid_input, "cannot sign an empty message");
  Signature sig;
  PublicKey pk = derive_public(sk);
  detail::keyed_digest("vcm.sig", pk, message, sig.bytes);
  return sig;
}

inline bool verify(const PublicKey& pk, std::span<const std::uint8_t> message, const Signature& sig) {
  if (message.empty()) return false;
  Signature expect;
  detail::keyed_digest("vcm.sig", pk, message, expect.bytes);
  return expect == sig;
}

inline Result<Ciphertext> encrypt_for(const PublicKey& pk, std::span<const std::uint8_t> plaintext) {
  if (plaintext.size() > kMaxPlaintextSize) return err(Errc::invalid_input, "plaintext exceeds 64 KiB");
  Ciphertext ct;
  ct.recipient_fingerprint = fingerprint_of(pk);
  ct.payload.resize(plaintext.size() + kCiphertextTagSize);
  Bytes stream(plaintext.size());
  detail::keystream("vcm.enc", pk, stream);
  for (std::size_t i = 0; i < plaintext.size(); ++i) ct.payload[i] = plaintext[i] ^ stream[i];
  detail::keyed_digest("vcm.tag", pk, plaintext,
                       std::span<std::uint8_t>(ct.payload.data() + plaintext.size(), kCiphertextTagSize));
  return ct;
}

inline Result<Bytes> decrypt(const PrivateKey& sk, const Ciphertext& ct) {
  PublicKey pk = derive_public(sk);
  if (fingerprint_of(pk) != ct.recipient_fingerprint)
    return err(Errc::wrong_recipient, "ciphertext is bound to a different key");
  if (ct.payload.size() < kCiphertextTagSize) return err(Errc::malformed, "ciphertext payload truncated");
  std::size_t n = ct.payload.size() - kCiphertextTagSize;
  Bytes plaintext(n);
  Bytes stream(n);
  detail::keystream("vcm.enc", pk, stream);
  for (std::size_t i = 0; i < n; ++i) plaintext[i] = ct.payload[i] ^ stream[i];
  std::array<std::uint8_t, kCiphertextTagSize> tag{};
  detail::keyed_digest("vcm.tag", pk, plaintext, tag);
  if (!std::equal(tag.begin(), tag.end(), ct.payload.begin() + n))
    return err(Errc::malformed, "ciphertext integrity tag mismatch");
  return plaintext;
}

}  // namespace vcm::crypto
