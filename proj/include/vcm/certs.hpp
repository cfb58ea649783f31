#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "vcm/bytes.hpp"
#include "vcm/crypto.hpp"
#include "vcm/result.hpp"

// The three certificate kinds carried on the road:
//   VC       - valid certificate, marks a vehicle as non-adversary
//   AC       - adversary certificate, brands a revoked vehicle
//   Identity - short-lived pseudonym binding messages to a sender
// Every certificate encodes to exactly 100 bytes.

namespace vcm::certs {

inline constexpr std::size_t kCertificateSize = 100;
inline constexpr std::size_t kSignedPrefixSize = 60;  // bytes 0..59, everything before the signature
inline constexpr std::uint64_t kIdentityLifetimeS = 600;        // 10 minutes
inline constexpr std::uint64_t kStatusLifetimeS = 31'536'000;   // one year

enum class CertType : std::uint8_t {
  VC = 1,
  AC = 2,
  Identity = 3,
};

inline const char* cert_type_name(CertType t) {
  switch (t) {
    case CertType::VC: return "VC";
    case CertType::AC: return "AC";
    case CertType::Identity: return "Identity";
  }
  return "?";
}

struct ReasonCode {
  std::uint8_t code;
  const char* description;
};

inline constexpr std::array<ReasonCode, 4> kReasonTable = {{
    {1, "Bogus traffic information"},
    {2, "Disruption of network operation"},
    {3, "Cheating with identity, position or speed"},
    {4, "Uncovering the identities of other vehicles"},
}};

inline Result<ReasonCode> reason_lookup(std::uint32_t code) {
  if (code < 1 || code > 4) return err(Errc::unknown_reason, "reason code " + std::to_string(code));
  return kReasonTable[code - 1];
}

// Layout (big-endian), 100 bytes total:
//   type(1) vehicle_id(8) issuer_id(8) issued_at(8) expires_at(8)
//   reason(1) review_date(8) key_fingerprint(16) reserved(2, zero) signature(40)
// The signature covers bytes 0..59. key_fingerprint identifies the issuer's
// signing key. Times are whole seconds from simulation epoch 0.
struct Certificate {
  CertType cert_type = CertType::VC;
  std::uint64_t vehicle_id = 0;
  std::uint64_t issuer_id = 0;
  std::uint64_t issued_at_s = 0;
  std::uint64_t expires_at_s = 0;
  std::uint8_t reason_code = 0;       // 0 unless AC
  std::uint64_t review_date_s = 0;    // 0 unless AC
  crypto::Fingerprint key_fingerprint{};
  crypto::Signature signature{};

  bool operator==(const Certificate&) const = default;

  Bytes signed_prefix() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(cert_type));
    w.u64(vehicle_id);
    w.u64(issuer_id);
    w.u64(issued_at_s);
    w.u64(expires_at_s);
    w.u8(reason_code);
    w.u64(review_date_s);
    w.raw(key_fingerprint);
    w.u16(0);  // reserved
    return w.take();
  }
};

inline Bytes encode(const Certificate& c) {
  Bytes out = c.signed_prefix();
  out.insert(out.end(), c.signature.bytes.begin(), c.signature.bytes.end());
  return out;
}

inline Result<Certificate> decode(std::span<const std::uint8_t> in) {
  if (in.size() != kCertificateSize)
    return err(Errc::malformed, "certificate must be 100 bytes, got " + std::to_string(in.size()));
  ByteReader r(in);
  Certificate c;
  std::uint8_t type_byte = r.u8();
  if (type_byte < 1 || type_byte > 3)
    return err(Errc::malformed, "unknown certificate type byte " + std::to_string(type_byte));
  c.cert_type = static_cast<CertType>(type_byte);
  c.vehicle_id = r.u64();
  c.issuer_id = r.u64();
  c.issued_at_s = r.u64();
  c.expires_at_s = r.u64();
  c.reason_code = r.u8();
  c.review_date_s = r.u64();
  c.key_fingerprint = r.raw_array<crypto::kFingerprintSize>();
  if (r.u16() != 0) return err(Errc::malformed, "reserved bytes 58..59 must be zero");
  c.signature.bytes = r.raw_array<crypto::kSignatureSize>();
  if (!r.done()) return err(Errc::malformed, "trailing bytes after certificate");
  return c;
}

inline Result<Certificate> issue(CertType type, std::uint64_t vehicle_id, const crypto::KeyPair& issuer,
                                 std::uint64_t issuer_id, std::uint64_t now_s,
                                 std::optional<std::uint8_t> reason = std::nullopt) {
  if (type == CertType::AC) {
    if (!reason) return err(Errc::invalid_input, "AC requires a reason code");
    if (*reason < 1 || *reason > 4)
      return err(Errc::invalid_input, "reason code " + std::to_string(*reason) + " outside 1..4");
  } else if (reason) {
    return err(Errc::invalid_input, "reason code only valid for AC");
  }

  Certificate c;
  c.cert_type = type;
  c.vehicle_id = vehicle_id;
  c.issuer_id = issuer_id;
  c.issued_at_s = now_s;
  c.key_fingerprint = issuer.fingerprint;
  switch (type) {
    case CertType::VC:
      c.expires_at_s = now_s + kStatusLifetimeS;
      break;
    case CertType::AC:
      c.expires_at_s = now_s + kStatusLifetimeS;
      c.reason_code = *reason;
      c.review_date_s = now_s + kStatusLifetimeS;
      break;
    case CertType::Identity:
      c.expires_at_s = now_s + kIdentityLifetimeS;
      break;
  }
  auto sig = crypto::sign(issuer.private_key, c.signed_prefix());
  if (!sig.ok()) return sig.error();
  c.signature = sig.value();
  return c;
}

enum class ValidationResult {
  Valid,
  InvariantViolation,
  BadSignature,
  Expired,
};

inline const char* validation_name(ValidationResult v) {
  switch (v) {
    case ValidationResult::Valid: return "Valid";
    case ValidationResult::InvariantViolation: return "InvariantViolation";
    case ValidationResult::BadSignature: return "BadSignature";
    case ValidationResult::Expired: return "Expired";
  }
  return "?";
}

// Checks run in order: structural invariants, issuer signature, then expiry
// (identity certificates only). The first failure names the result.
inline ValidationResult validate(const Certificate& c, const crypto::PublicKey& issuer_pk,
                                 std::uint64_t now_s) {
  switch (c.cert_type) {
    case CertType::VC:
      if (c.reason_code != 0 || c.review_date_s != 0) return ValidationResult::InvariantViolation;
      break;
    case CertType::AC:
      if (c.reason_code < 1 || c.reason_code > 4) return ValidationResult::InvariantViolation;
      if (c.review_date_s != c.issued_at_s + kStatusLifetimeS) return ValidationResult::InvariantViolation;
      break;
    case CertType::Identity:
      if (c.reason_code != 0 || c.review_date_s != 0) return ValidationResult::InvariantViolation;
      if (c.expires_at_s != c.issued_at_s + kIdentityLifetimeS) return ValidationResult::InvariantViolation;
      break;
  }
  if (!crypto::verify(issuer_pk, c.signed_prefix(), c.signature)) return ValidationResult::BadSignature;
  if (c.cert_type == CertType::Identity && now_s >= c.expires_at_s) return ValidationResult::Expired;
  return ValidationResult::Valid;
}

// One-line dump used by the CLI, followed by the raw hex on a second line.
inline std::string dump(const Certificate& c) {
  std::string s = "type=";
  s += cert_type_name(c.cert_type);
  s += " vehicle=" + std::to_string(c.vehicle_id);
  s += " issuer=" + std::to_string(c.issuer_id);
  s += " issued=" + std::to_string(c.issued_at_s);
  s += " expires=" + std::to_string(c.expires_at_s);
  s += " reason=" + std::to_string(c.reason_code);
  s += " review=" + std::to_string(c.review_date_s);
  if (c.cert_type == CertType::AC) {
    auto reason = reason_lookup(c.reason_code);
    s += " reason_text=\"";
    s += reason.ok() ? reason.value().description : "?";
    s += "\"";
  }
  s += " fp=" + to_hex(c.key_fingerprint);
  return s;
}

}  // namespace vcm::certs
