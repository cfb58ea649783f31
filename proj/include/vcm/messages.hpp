#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vcm/bytes.hpp"
#include "vcm/certs.hpp"
#include "vcm/crypto.hpp"
#include "vcm/result.hpp"

// Wire formats for everything that crosses the simulated channel. All
// encodings are big-endian, self-describing behind a format-version byte and
// a one-byte message-kind tag. Encrypted message bodies keep the field order
// of the orders they implement:
//   accusation to RSU   {RR, VC, Sig, TS, AV}
//   accusation to CA    {RR, Sig, TS, AV}
//   erase to RSU        {RR, Sig, TS, AV, AC}
//   erase to vehicle    {RR, Sig, TS, AV}
//   insert to vehicle   {AC, TS, Sig}
//   add broadcast       {AV, TS, Sig, RR, RD}
//   CRL record          {AV, TS, RR}

namespace vcm::msg {

inline constexpr std::uint8_t kWireVersion = 0x01;

enum class Priority : std::uint8_t {
  SafetyOfLife = 0,
  Safety = 1,
  NonSafety = 2,
};

inline const char* priority_name(Priority p) {
  switch (p) {
    case Priority::SafetyOfLife: return "Safety of Life";
    case Priority::Safety: return "Safety";
    case Priority::NonSafety: return "Non-Safety";
  }
  return "?";
}

struct MessageCategory {
  std::uint16_t code;  // printed as a 3-digit code, 001..007
  Priority priority;
  const char* application;
};

inline constexpr std::array<MessageCategory, 7> kCategoryTable = {{
    {1, Priority::SafetyOfLife, "Intersection Collision Warning /Avoidance"},
    {2, Priority::SafetyOfLife, "Cooperative Collision Warning"},
    {3, Priority::Safety, "Work Zone Warning"},
    {4, Priority::Safety, "Transit Vehicle Signal Priority"},
    {5, Priority::NonSafety, "Toll Collection"},
    {6, Priority::NonSafety, "Service Announcement"},
    {7, Priority::NonSafety, "Movie Download(2 hours of MPEG 1)"},
}};

inline Result<MessageCategory> category_lookup(std::uint32_t code) {
  if (code < 1 || code > 7) return err(Errc::unknown_category, "category code " + std::to_string(code));
  return kCategoryTable[code - 1];
}

// ---------------------------------------------------------------------------
// Message structs
// ---------------------------------------------------------------------------

// Broadcast data message. The payload (category + claim) and the identity
// certificate travel in clear; the status certificate (VC or AC) travels
// encrypted to the road group key. The signature covers every prior field.
struct DataMessage {
  std::uint64_t sender_id = 0;
  std::uint16_t category_code = 0;
  std::uint64_t claim = 0;  // abstract message content; equal-category messages contradict iff claims differ
  std::uint64_t timestamp_ms = 0;
  certs::Certificate identity_cert;
  crypto::Ciphertext status_cert_ct;
  crypto::Signature signature{};

  bool operator==(const DataMessage&) const = default;

  Bytes signed_portion() const {
    ByteWriter w;
    w.u8(0xD1);  // domain separator
    w.u64(sender_id);
    w.u16(category_code);
    w.u64(claim);
    w.u64(timestamp_ms);
    w.raw(certs::encode(identity_cert));
    w.raw(status_cert_ct.recipient_fingerprint);
    w.var_bytes(status_cert_ct.payload);
    return w.take();
  }
};

// Adversary warning broadcast to neighbors. The first five fields are the
// adversary-list row; the issuer's VC and signature authenticate it.
struct WarningMessage {
  std::uint64_t warning_issuer_id = 0;
  std::uint64_t adversary_id = 0;
  std::uint64_t timestamp_ms = 0;
  std::uint8_t reason_code = 0;
  std::uint64_t review_date_s = 0;
  certs::Certificate issuer_vc;
  crypto::Signature signature{};

  bool operator==(const WarningMessage&) const = default;

  Bytes signed_portion() const {
    ByteWriter w;
    w.u8(0xD2);
    w.u64(warning_issuer_id);
    w.u64(adversary_id);
    w.u64(timestamp_ms);
    w.u8(reason_code);
    w.u64(review_date_s);
    return w.take();
  }
};

// Encrypted envelopes. Each carries one ciphertext; the plaintext bodies are
// defined below and keep the field sets listed at the top of this header.
struct AccusationToRsu {
  crypto::Ciphertext ct;
  bool operator==(const AccusationToRsu&) const = default;
};
struct AccusationToCa {
  crypto::Ciphertext ct;
  bool operator==(const AccusationToCa&) const = default;
};
struct EraseFromCa {
  crypto::Ciphertext ct;
  bool operator==(const EraseFromCa&) const = default;
};
struct EraseToVehicle {
  crypto::Ciphertext ct;
  bool operator==(const EraseToVehicle&) const = default;
};
struct InsertAc {
  crypto::Ciphertext ct;
  bool operator==(const InsertAc&) const = default;
};
struct AddBroadcast {
  crypto::Ciphertext ct;
  bool operator==(const AddBroadcast&) const = default;
};

// CRL record {AV, TS, RR}; 17 bytes encoded. Unencrypted, lives inside the
// CA and in CRL responses.
struct CrlAdd {
  std::uint64_t accused_id = 0;
  std::uint64_t timestamp_ms = 0;
  std::uint8_t reason_code = 0;

  bool operator==(const CrlAdd&) const = default;
};

inline constexpr std::size_t kCrlAddSize = 17;

struct CrlRequest {
  std::uint64_t requester_id = 0;
  bool operator==(const CrlRequest&) const = default;
};

struct CrlResponse {
  std::vector<CrlAdd> entries;
  bool operator==(const CrlResponse&) const = default;
};

using WireMessage = std::variant<DataMessage, WarningMessage, AccusationToRsu, AccusationToCa,
                                 EraseFromCa, EraseToVehicle, InsertAc, AddBroadcast, CrlRequest,
                                 CrlResponse>;

// ---------------------------------------------------------------------------
// Encrypted plaintext bodies
// ---------------------------------------------------------------------------

// {RR, VC, Sig, TS, AV} - vehicle accuses AV to the RSU.
struct AccusationBody {
  std::uint8_t reason_code = 0;
  certs::Certificate accuser_vc;
  crypto::Signature signature{};
  std::uint64_t timestamp_ms = 0;
  std::uint64_t accused_id = 0;

  bool operator==(const AccusationBody&) const = default;

  Bytes signed_portion() const {
    ByteWriter w;
    w.u8(0xA1);
    w.u8(reason_code);
    w.u64(timestamp_ms);
    w.u64(accused_id);
    return w.take();
  }

  Bytes encode() const {
    ByteWriter w;
    w.u8(reason_code);
    w.raw(certs::encode(accuser_vc));
    w.raw(signature.bytes);
    w.u64(timestamp_ms);
    w.u64(accused_id);
    return w.take();
  }

  static Result<AccusationBody> decode(std::span<const std::uint8_t> in) {
    ByteReader r(in);
    AccusationBody b;
    b.reason_code = r.u8();
    auto vc = certs::decode(r.raw(certs::kCertificateSize));
    if (!vc.ok()) return vc.error();
    b.accuser_vc = vc.value();
    b.signature.bytes = r.raw_array<crypto::kSignatureSize>();
    b.timestamp_ms = r.u64();
    b.accused_id = r.u64();
    if (!r.done()) return err(Errc::malformed, "bad accusation body");
    return b;
  }
};

// {RR, Sig, TS, AV} - RSU forwards the accusation to the CA; the same shape
// carries the CA-ordered erase from the RSU down to the vehicle.
struct ForwardedAccusationBody {
  std::uint8_t reason_code = 0;
  crypto::Signature signature{};
  std::uint64_t timestamp_ms = 0;
  std::uint64_t accused_id = 0;

  bool operator==(const ForwardedAccusationBody&) const = default;

  Bytes signed_portion(std::uint8_t domain) const {
    ByteWriter w;
    w.u8(domain);
    w.u8(reason_code);
    w.u64(timestamp_ms);
    w.u64(accused_id);
    return w.take();
  }

  Bytes encode() const {
    ByteWriter w;
    w.u8(reason_code);
    w.raw(signature.bytes);
    w.u64(timestamp_ms);
    w.u64(accused_id);
    return w.take();
  }

  static Result<ForwardedAccusationBody> decode(std::span<const std::uint8_t> in) {
    ByteReader r(in);
    ForwardedAccusationBody b;
    b.reason_code = r.u8();
    b.signature.bytes = r.raw_array<crypto::kSignatureSize>();
    b.timestamp_ms = r.u64();
    b.accused_id = r.u64();
    if (!r.done()) return err(Errc::malformed, "bad forwarded accusation body");
    return b;
  }
};

inline constexpr std::uint8_t kDomainAccusationToCa = 0xA2;
inline constexpr std::uint8_t kDomainEraseToVehicle = 0xA4;

// {RR, Sig, TS, AV, AC} - CA orders the RSU to erase AV's credentials and
// hands over the freshly issued AC.
struct EraseOrderBody {
  std::uint8_t reason_code = 0;
  crypto::Signature signature{};
  std::uint64_t timestamp_ms = 0;
  std::uint64_t accused_id = 0;
  certs::Certificate adversary_cert;

  bool operator==(const EraseOrderBody&) const = default;

  Bytes signed_portion() const {
    ByteWriter w;
    w.u8(0xA3);
    w.u8(reason_code);
    w.u64(timestamp_ms);
    w.u64(accused_id);
    w.raw(certs::encode(adversary_cert));
    return w.take();
  }

  Bytes encode() const {
    ByteWriter w;
    w.u8(reason_code);
    w.raw(signature.bytes);
    w.u64(timestamp_ms);
    w.u64(accused_id);
    w.raw(certs::encode(adversary_cert));
    return w.take();
  }

  static Result<EraseOrderBody> decode(std::span<const std::uint8_t> in) {
    ByteReader r(in);
    EraseOrderBody b;
    b.reason_code = r.u8();
    b.signature.bytes = r.raw_array<crypto::kSignatureSize>();
    b.timestamp_ms = r.u64();
    b.accused_id = r.u64();
    auto ac = certs::decode(r.raw(certs::kCertificateSize));
    if (!ac.ok()) return ac.error();
    b.adversary_cert = ac.value();
    if (!r.done()) return err(Errc::malformed, "bad erase order body");
    return b;
  }
};

// {AC, TS, Sig} - RSU installs the AC into the adversary vehicle.
struct InsertBody {
  certs::Certificate adversary_cert;
  std::uint64_t timestamp_ms = 0;
  crypto::Signature signature{};

  bool operator==(const InsertBody&) const = default;

  Bytes signed_portion() const {
    ByteWriter w;
    w.u8(0xA5);
    w.raw(certs::encode(adversary_cert));
    w.u64(timestamp_ms);
    return w.take();
  }

  Bytes encode() const {
    ByteWriter w;
    w.raw(certs::encode(adversary_cert));
    w.u64(timestamp_ms);
    w.raw(signature.bytes);
    return w.take();
  }

  static Result<InsertBody> decode(std::span<const std::uint8_t> in) {
    ByteReader r(in);
    InsertBody b;
    auto ac = certs::decode(r.raw(certs::kCertificateSize));
    if (!ac.ok()) return ac.error();
    b.adversary_cert = ac.value();
    b.timestamp_ms = r.u64();
    b.signature.bytes = r.raw_array<crypto::kSignatureSize>();
    if (!r.done()) return err(Errc::malformed, "bad insert body");
    return b;
  }
};

// {AV, TS, Sig, RR, RD} - RSU tells every vehicle on the road to put AV at
// the top of its adversary list.
struct AddBody {
  std::uint64_t accused_id = 0;
  std::uint64_t timestamp_ms = 0;
  crypto::Signature signature{};
  std::uint8_t reason_code = 0;
  std::uint64_t review_date_s = 0;

  bool operator==(const AddBody&) const = default;

  Bytes signed_portion() const {
    ByteWriter w;
    w.u8(0xA6);
    w.u64(accused_id);
    w.u64(timestamp_ms);
    w.u8(reason_code);
    w.u64(review_date_s);
    return w.take();
  }

  Bytes encode() const {
    ByteWriter w;
    w.u64(accused_id);
    w.u64(timestamp_ms);
    w.raw(signature.bytes);
    w.u8(reason_code);
    w.u64(review_date_s);
    return w.take();
  }

  static Result<AddBody> decode(std::span<const std::uint8_t> in) {
    ByteReader r(in);
    AddBody b;
    b.accused_id = r.u64();
    b.timestamp_ms = r.u64();
    b.signature.bytes = r.raw_array<crypto::kSignatureSize>();
    b.reason_code = r.u8();
    b.review_date_s = r.u64();
    if (!r.done()) return err(Errc::malformed, "bad add body");
    return b;
  }
};

// ---------------------------------------------------------------------------
// Wire codec
// ---------------------------------------------------------------------------

namespace detail {

enum class Tag : std::uint8_t {
  Data = 0x01,
  Warning = 0x02,
  AccusationToRsu = 0x03,
  AccusationToCa = 0x04,
  EraseFromCa = 0x05,
  EraseToVehicle = 0x06,
  InsertAc = 0x07,
  AddBroadcast = 0x08,
  CrlRequest = 0x09,
  CrlResponse = 0x0A,
};

inline void write_ciphertext(ByteWriter& w, const crypto::Ciphertext& ct) {
  w.raw(ct.recipient_fingerprint);
  w.var_bytes(ct.payload);
}

inline crypto::Ciphertext read_ciphertext(ByteReader& r) {
  crypto::Ciphertext ct;
  ct.recipient_fingerprint = r.raw_array<crypto::kFingerprintSize>();
  ct.payload = r.var_bytes();
  return ct;
}

}  // namespace detail

inline Bytes encode_wire(const WireMessage& m) {
  ByteWriter w;
  w.u8(kWireVersion);
  std::visit(
      [&w](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        using detail::Tag;
        if constexpr (std::is_same_v<T, DataMessage>) {
          w.u8(static_cast<std::uint8_t>(Tag::Data));
          w.u64(v.sender_id);
          w.u16(v.category_code);
          w.u64(v.claim);
          w.u64(v.timestamp_ms);
          w.raw(certs::encode(v.identity_cert));
          detail::write_ciphertext(w, v.status_cert_ct);
          w.raw(v.signature.bytes);
        } else if constexpr (std::is_same_v<T, WarningMessage>) {
          w.u8(static_cast<std::uint8_t>(Tag::Warning));
          w.u64(v.warning_issuer_id);
          w.u64(v.adversary_id);
          w.u64(v.timestamp_ms);
          w.u8(v.reason_code);
          w.u64(v.review_date_s);
          w.raw(certs::encode(v.issuer_vc));
          w.raw(v.signature.bytes);
        } else if constexpr (std::is_same_v<T, AccusationToRsu>) {
          w.u8(static_cast<std::uint8_t>(Tag::AccusationToRsu));
          detail::write_ciphertext(w, v.ct);
        } else if constexpr (std::is_same_v<T, AccusationToCa>) {
          w.u8(static_cast<std::uint8_t>(Tag::AccusationToCa));
          detail::write_ciphertext(w, v.ct);
        } else if constexpr (std::is_same_v<T, EraseFromCa>) {
          w.u8(static_cast<std::uint8_t>(Tag::EraseFromCa));
          detail::write_ciphertext(w, v.ct);
        } else if constexpr (std::is_same_v<T, EraseToVehicle>) {
          w.u8(static_cast<std::uint8_t>(Tag::EraseToVehicle));
          detail::write_ciphertext(w, v.ct);
        } else if constexpr (std::is_same_v<T, InsertAc>) {
          w.u8(static_cast<std::uint8_t>(Tag::InsertAc));
          detail::write_ciphertext(w, v.ct);
        } else if constexpr (std::is_same_v<T, AddBroadcast>) {
          w.u8(static_cast<std::uint8_t>(Tag::AddBroadcast));
          detail::write_ciphertext(w, v.ct);
        } else if constexpr (std::is_same_v<T, CrlRequest>) {
          w.u8(static_cast<std::uint8_t>(Tag::CrlRequest));
          w.u64(v.requester_id);
        } else if constexpr (std::is_same_v<T, CrlResponse>) {
          w.u8(static_cast<std::uint8_t>(Tag::CrlResponse));
          w.u32(static_cast<std::uint32_t>(v.entries.size()));
          for (const CrlAdd& e : v.entries) {
            w.u64(e.accused_id);
            w.u64(e.timestamp_ms);
            w.u8(e.reason_code);
          }
        }
      },
      m);
  return w.take();
}

inline Result<WireMessage> decode_wire(std::span<const std::uint8_t> in) {
  if (in.size() < 2) return err(Errc::malformed, "wire message shorter than 2 bytes");
  ByteReader r(in);
  if (r.u8() != kWireVersion) return err(Errc::malformed, "unsupported wire format version");
  auto tag = static_cast<detail::Tag>(r.u8());

  WireMessage out;
  switch (tag) {
    case detail::Tag::Data: {
      DataMessage v;
      v.sender_id = r.u64();
      v.category_code = r.u16();
      v.claim = r.u64();
      v.timestamp_ms = r.u64();
      auto cert = certs::decode(r.raw(certs::kCertificateSize));
      if (!r.ok() || !cert.ok()) return err(Errc::malformed, "bad identity certificate");
      v.identity_cert = cert.value();
      v.status_cert_ct = detail::read_ciphertext(r);
      v.signature.bytes = r.raw_array<crypto::kSignatureSize>();
      out = v;
      break;
    }
    case detail::Tag::Warning: {
      WarningMessage v;
      v.warning_issuer_id = r.u64();
      v.adversary_id = r.u64();
      v.timestamp_ms = r.u64();
      v.reason_code = r.u8();
      v.review_date_s = r.u64();
      auto cert = certs::decode(r.raw(certs::kCertificateSize));
      if (!r.ok() || !cert.ok()) return err(Errc::malformed, "bad issuer certificate");
      v.issuer_vc = cert.value();
      v.signature.bytes = r.raw_array<crypto::kSignatureSize>();
      out = v;
      break;
    }
    case detail::Tag::AccusationToRsu:
      out = AccusationToRsu{detail::read_ciphertext(r)};
      break;
    case detail::Tag::AccusationToCa:
      out = AccusationToCa{detail::read_ciphertext(r)};
      break;
    case detail::Tag::EraseFromCa:
      out = EraseFromCa{detail::read_ciphertext(r)};
      break;
    case detail::Tag::EraseToVehicle:
      out = EraseToVehicle{detail::read_ciphertext(r)};
      break;
    case detail::Tag::InsertAc:
      out = InsertAc{detail::read_ciphertext(r)};
      break;
    case detail::Tag::AddBroadcast:
      out = AddBroadcast{detail::read_ciphertext(r)};
      break;
    case detail::Tag::CrlRequest: {
      CrlRequest v;
      v.requester_id = r.u64();
      out = v;
      break;
    }
    case detail::Tag::CrlResponse: {
      CrlResponse v;
      std::uint32_t n = r.u32();
      if (r.ok() && r.remaining() != std::size_t{n} * kCrlAddSize)
        return err(Errc::malformed, "CRL entry count disagrees with payload size");
      v.entries.reserve(r.ok() ? n : 0);
      for (std::uint32_t i = 0; i < n && r.ok(); ++i) {
        CrlAdd e;
        e.accused_id = r.u64();
        e.timestamp_ms = r.u64();
        e.reason_code = r.u8();
        v.entries.push_back(e);
      }
      out = v;
      break;
    }
    default:
      return err(Errc::malformed, "unknown message tag");
  }
  if (!r.ok()) return err(Errc::malformed, "truncated message");
  if (!r.done()) return err(Errc::malformed, "trailing bytes after message");
  return out;
}

inline std::size_t wire_size(const WireMessage& m) { return encode_wire(m).size(); }

inline const char* kind_name(const WireMessage& m) {
  struct Visitor {
    const char* operator()(const DataMessage&) { return "data"; }
    const char* operator()(const WarningMessage&) { return "warning"; }
    const char* operator()(const AccusationToRsu&) { return "accusation_to_rsu"; }
    const char* operator()(const AccusationToCa&) { return "accusation_to_ca"; }
    const char* operator()(const EraseFromCa&) { return "erase_from_ca"; }
    const char* operator()(const EraseToVehicle&) { return "erase_to_vehicle"; }
    const char* operator()(const InsertAc&) { return "insert_ac"; }
    const char* operator()(const AddBroadcast&) { return "add_broadcast"; }
    const char* operator()(const CrlRequest&) { return "crl_request"; }
    const char* operator()(const CrlResponse&) { return "crl_response"; }
  };
  return std::visit(Visitor{}, m);
}

// Channel accounting class.
enum class TrafficClass { Data, Warning, Accusation, Control, Crl };

inline const char* traffic_class_name(TrafficClass c) {
  switch (c) {
    case TrafficClass::Data: return "data";
    case TrafficClass::Warning: return "warning";
    case TrafficClass::Accusation: return "accusation";
    case TrafficClass::Control: return "control";
    case TrafficClass::Crl: return "crl";
  }
  return "?";
}

inline TrafficClass traffic_class(const WireMessage& m) {
  struct Visitor {
    TrafficClass operator()(const DataMessage&) { return TrafficClass::Data; }
    TrafficClass operator()(const WarningMessage&) { return TrafficClass::Warning; }
    TrafficClass operator()(const AccusationToRsu&) { return TrafficClass::Accusation; }
    TrafficClass operator()(const AccusationToCa&) { return TrafficClass::Accusation; }
    TrafficClass operator()(const EraseFromCa&) { return TrafficClass::Control; }
    TrafficClass operator()(const EraseToVehicle&) { return TrafficClass::Control; }
    TrafficClass operator()(const InsertAc&) { return TrafficClass::Control; }
    TrafficClass operator()(const AddBroadcast&) { return TrafficClass::Control; }
    TrafficClass operator()(const CrlRequest&) { return TrafficClass::Crl; }
    TrafficClass operator()(const CrlResponse&) { return TrafficClass::Crl; }
  };
  return std::visit(Visitor{}, m);
}

}  // namespace vcm::msg
