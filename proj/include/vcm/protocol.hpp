#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vcm/adversary_list.hpp"
#include "vcm/certs.hpp"
#include "vcm/crypto.hpp"
#include "vcm/messages.hpp"
#include "vcm/result.hpp"

// Behavioral core: the per-vehicle receive pipeline, warning handling,
// suspicion tracking, and the RSU/CA sides of the VAP revocation round
// (accuse -> threshold -> erase -> insert -> add-broadcast -> CRL append).

namespace vcm {

struct ProtocolParams {
  std::size_t al_capacity = 10;
  std::uint64_t freshness_window_ms = 5'000;    // TS checks on warnings/accusations/orders
  std::uint64_t observation_window_ms = 10'000; // suspicion window
  std::uint64_t presence_window_ms = 30'000;    // RSU presence horizon
};

// Shared, read-only road context. The group key is held by every vehicle on
// the road and gives broadcast-encrypted payloads (status certificates, the
// add-broadcast order) a recipient without breaking broadcast.
struct RoadContext {
  std::uint64_t ca_id = 0;
  std::uint64_t rsu_id = 0;
  crypto::PublicKey ca_pk{};
  crypto::PublicKey rsu_pk{};
  crypto::KeyPair group_key;
  std::map<std::uint64_t, crypto::PublicKey> vehicle_keys;
  ProtocolParams params;

  const crypto::PublicKey* vehicle_key(std::uint64_t id) const {
    auto it = vehicle_keys.find(id);
    return it == vehicle_keys.end() ? nullptr : &it->second;
  }
};

enum class RejectCause : std::uint8_t {
  MalformedCert,
  BadSignature,
  ExpiredIdentity,
  IdentityMismatch,
};

inline const char* reject_cause_name(RejectCause c) {
  switch (c) {
    case RejectCause::MalformedCert: return "MalformedCert";
    case RejectCause::BadSignature: return "BadSignature";
    case RejectCause::ExpiredIdentity: return "ExpiredIdentity";
    case RejectCause::IdentityMismatch: return "IdentityMismatch";
  }
  return "?";
}

struct ReceiveDecision {
  enum class Kind : std::uint8_t {
    Accept,
    IgnoreKnownAdversary,
    NewAdversaryDetected,
    Reject,
  };
  Kind kind = Kind::Accept;
  RejectCause cause = RejectCause::MalformedCert;  // meaningful only for Reject

  bool operator==(const ReceiveDecision&) const = default;

  static ReceiveDecision accept() { return {Kind::Accept, {}}; }
  static ReceiveDecision ignore() { return {Kind::IgnoreKnownAdversary, {}}; }
  static ReceiveDecision new_adversary() { return {Kind::NewAdversaryDetected, {}}; }
  static ReceiveDecision reject(RejectCause c) { return {Kind::Reject, c}; }

  std::string to_string() const {
    switch (kind) {
      case Kind::Accept: return "Accept";
      case Kind::IgnoreKnownAdversary: return "IgnoreKnownAdversary";
      case Kind::NewAdversaryDetected: return "NewAdversaryDetected";
      case Kind::Reject: return std::string("Reject:") + reject_cause_name(cause);
    }
    return "?";
  }
};

// Tracks contradictory claims per (sender, category). Claims collected within
// one observation window are compared against the window majority at window
// close; a sender contradicting the majority gets its counter bumped, and the
// second contradiction fires. Window claims reset every window, counters only
// reset when they fire.
class SuspicionTracker {
 public:
  struct Outlier {
    std::uint64_t sender_id;
    std::uint16_t category_code;
  };

  void observe(std::uint64_t sender_id, std::uint16_t category_code, std::uint64_t claim) {
    window_claims_[category_code][sender_id] = claim;
  }

  std::vector<Outlier> close_window() {
    std::vector<Outlier> fired;
    for (const auto& [category, claims] : window_claims_) {
      if (claims.size() < 2) continue;
      std::map<std::uint64_t, std::size_t> freq;
      for (const auto& [sender, claim] : claims) ++freq[claim];
      std::uint64_t majority_claim = 0;
      std::size_t best = 0;
      for (const auto& [claim, count] : freq) {
        if (count > best) {  // ties resolve to the smallest claim value
          best = count;
          majority_claim = claim;
        }
      }
      for (const auto& [sender, claim] : claims) {
        if (claim == majority_claim) continue;
        auto& count = counts_[{sender, category}];
        ++count;
        ++total_contradictions_;
        if (count >= 2) {
          count = 0;
          fired.push_back({sender, category});
        }
      }
    }
    window_claims_.clear();
    return fired;
  }

  std::uint64_t contradiction_count(std::uint64_t sender_id, std::uint16_t category_code) const {
    auto it = counts_.find({sender_id, category_code});
    return it == counts_.end() ? 0 : it->second;
  }

  std::uint64_t total_contradictions() const { return total_contradictions_; }

 private:
  std::map<std::uint16_t, std::map<std::uint64_t, std::uint64_t>> window_claims_;
  std::map<std::pair<std::uint64_t, std::uint16_t>, std::uint64_t> counts_;
  std::uint64_t total_contradictions_ = 0;
};

// ---------------------------------------------------------------------------
// Vehicle
// ---------------------------------------------------------------------------

struct ReceiveResult {
  ReceiveDecision decision;
  std::optional<msg::WarningMessage> warning;  // set when a new adversary was detected
};

class VehicleAgent {
 public:
  VehicleAgent(std::uint64_t id, crypto::KeyPair key, certs::Certificate vc,
               std::vector<certs::Certificate> identity_pool, bool compliant, const RoadContext* ctx)
      : id_(id),
        key_(std::move(key)),
        status_cert_(std::move(vc)),
        identity_pool_(std::move(identity_pool)),
        compliant_(compliant),
        ctx_(ctx),
        al_(ctx->params.al_capacity) {}

  std::uint64_t id() const { return id_; }
  const crypto::KeyPair& key() const { return key_; }
  const AdversaryList& adversary_list() const { return al_; }
  AdversaryList& adversary_list() { return al_; }
  const SuspicionTracker& tracker() const { return tracker_; }
  bool compliant() const { return compliant_; }
  bool credentials_erased() const { return credentials_erased_; }
  bool has_status_cert() const { return status_cert_.has_value(); }
  const std::optional<certs::Certificate>& status_cert() const { return status_cert_; }

  std::uint64_t decrypt_count() const { return decrypt_count_; }
  std::uint64_t al_lookup_count() const { return al_lookup_count_; }

  // The identity pool is pre-provisioned; each pseudonym covers one
  // 10-minute slot of the run.
  const certs::Certificate* current_identity(std::uint64_t now_ms) const {
    std::uint64_t slot = (now_ms / 1000) / certs::kIdentityLifetimeS;
    if (slot >= identity_pool_.size()) return nullptr;
    return &identity_pool_[slot];
  }

  std::optional<msg::DataMessage> make_data_message(std::uint16_t category_code, std::uint64_t claim,
                                                    std::uint64_t now_ms) {
    const certs::Certificate* identity = current_identity(now_ms);
    if (!identity || !status_cert_) return std::nullopt;
    msg::DataMessage m;
    m.sender_id = id_;
    m.category_code = category_code;
    m.claim = claim;
    m.timestamp_ms = now_ms;
    m.identity_cert = *identity;
    auto ct = crypto::encrypt_for(ctx_->group_key.public_key, certs::encode(*status_cert_));
    if (!ct.ok()) return std::nullopt;
    m.status_cert_ct = std::move(ct.value());
    auto sig = crypto::sign(key_.private_key, m.signed_portion());
    if (!sig.ok()) return std::nullopt;
    m.signature = sig.value();
    return m;
  }

  // Receive pipeline for data messages. The adversary-list lookup comes
  // first; a hit skips the decryption entirely. Otherwise the status
  // certificate is decrypted: an AC brands the sender a new adversary (add to
  // AL, warn neighbors, ignore payload); a VC goes through message-signature,
  // identity-expiry and identity-binding checks before the payload is
  // accepted and fed to the suspicion tracker.
  ReceiveResult receive(const msg::DataMessage& m, std::uint64_t now_ms) {
    ++al_lookup_count_;
    if (al_.contains(m.sender_id)) {
      (void)al_.touch(m.sender_id, now_ms);
      return {ReceiveDecision::ignore(), std::nullopt};
    }

    std::uint64_t now_s = now_ms / 1000;
    ++decrypt_count_;
    auto plaintext = crypto::decrypt(ctx_->group_key.private_key, m.status_cert_ct);
    if (!plaintext.ok()) return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    auto status = certs::decode(plaintext.value());
    if (!status.ok()) return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    const certs::Certificate& cert = status.value();

    if (cert.cert_type == certs::CertType::AC) {
      if (certs::validate(cert, ctx_->ca_pk, now_s) != certs::ValidationResult::Valid ||
          cert.vehicle_id != m.sender_id)
        return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
      AdversaryListEntry e{id_, m.sender_id, now_ms, cert.reason_code, cert.review_date_s};
      al_.record(e);
      return {ReceiveDecision::new_adversary(), make_warning(e)};
    }

    if (cert.cert_type != certs::CertType::VC ||
        certs::validate(cert, ctx_->ca_pk, now_s) != certs::ValidationResult::Valid)
      return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};

    const crypto::PublicKey* sender_pk = ctx_->vehicle_key(m.sender_id);
    if (!sender_pk || !crypto::verify(*sender_pk, m.signed_portion(), m.signature))
      return {ReceiveDecision::reject(RejectCause::BadSignature), std::nullopt};

    if (m.identity_cert.cert_type != certs::CertType::Identity)
      return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    switch (certs::validate(m.identity_cert, ctx_->ca_pk, now_s)) {
      case certs::ValidationResult::Valid:
        break;
      case certs::ValidationResult::Expired:
        return {ReceiveDecision::reject(RejectCause::ExpiredIdentity), std::nullopt};
      default:
        return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    }
    if (m.identity_cert.vehicle_id != m.sender_id)
      return {ReceiveDecision::reject(RejectCause::IdentityMismatch), std::nullopt};

    tracker_.observe(m.sender_id, m.category_code, m.claim);
    return {ReceiveDecision::accept(), std::nullopt};
  }

  // Warning acceptance: issuer must hold a valid VC (warnings carrying an AC
  // are dropped, same rule as accusations), the signature must verify, and
  // the timestamp must be fresh. A warning about an already-listed adversary
  // refreshes the entry and moves it to the top.
  bool process_warning(const msg::WarningMessage& w, std::uint64_t now_ms) {
    std::uint64_t now_s = now_ms / 1000;
    if (w.issuer_vc.cert_type != certs::CertType::VC) return false;
    if (certs::validate(w.issuer_vc, ctx_->ca_pk, now_s) != certs::ValidationResult::Valid) return false;
    if (w.issuer_vc.vehicle_id != w.warning_issuer_id) return false;
    const crypto::PublicKey* issuer_pk = ctx_->vehicle_key(w.warning_issuer_id);
    if (!issuer_pk || !crypto::verify(*issuer_pk, w.signed_portion(), w.signature)) return false;
    if (!fresh(w.timestamp_ms, now_ms)) return false;
    al_.record({w.warning_issuer_id, w.adversary_id, w.timestamp_ms, w.reason_code, w.review_date_s});
    return true;
  }

  // Window close: compare collected claims against the majority and emit an
  // accusation for every sender that contradicted it for the second time.
  std::vector<msg::AccusationToRsu> close_observation_window(std::uint64_t now_ms) {
    std::vector<msg::AccusationToRsu> out;
    for (const auto& outlier : tracker_.close_window()) {
      auto acc = make_accusation(outlier.sender_id, 1, now_ms);
      if (acc) out.push_back(std::move(*acc));
    }
    return out;
  }

  std::optional<msg::AccusationToRsu> make_accusation(std::uint64_t accused_id, std::uint8_t reason,
                                                      std::uint64_t now_ms) {
    if (!status_cert_ || status_cert_->cert_type != certs::CertType::VC) return std::nullopt;
    msg::AccusationBody body;
    body.reason_code = reason;
    body.accuser_vc = *status_cert_;
    body.timestamp_ms = now_ms;
    body.accused_id = accused_id;
    auto sig = crypto::sign(key_.private_key, body.signed_portion());
    if (!sig.ok()) return std::nullopt;
    body.signature = sig.value();
    auto ct = crypto::encrypt_for(ctx_->rsu_pk, body.encode());
    if (!ct.ok()) return std::nullopt;
    return msg::AccusationToRsu{std::move(ct.value())};
  }

  // Erase order (CA-initiated, relayed by the RSU). A compliant vehicle
  // destroys its status credential; a non-compliant one keeps transmitting
  // with the stale VC, which is exactly the containment case the adversary
  // list covers.
  bool apply_erase(const msg::EraseToVehicle& order, std::uint64_t now_ms) {
    ++decrypt_count_;
    auto plaintext = crypto::decrypt(key_.private_key, order.ct);
    if (!plaintext.ok()) return false;
    auto body = msg::ForwardedAccusationBody::decode(plaintext.value());
    if (!body.ok()) return false;
    if (!crypto::verify(ctx_->rsu_pk, body.value().signed_portion(msg::kDomainEraseToVehicle),
                        body.value().signature))
      return false;
    if (!fresh(body.value().timestamp_ms, now_ms)) return false;
    if (body.value().accused_id != id_) return false;
    if (!compliant_) return true;  // order authenticated but the device refuses it
    status_cert_.reset();
    credentials_erased_ = true;
    return true;
  }

  bool apply_insert(const msg::InsertAc& order, std::uint64_t now_ms) {
    ++decrypt_count_;
    auto plaintext = crypto::decrypt(key_.private_key, order.ct);
    if (!plaintext.ok()) return false;
    auto body = msg::InsertBody::decode(plaintext.value());
    if (!body.ok()) return false;
    const msg::InsertBody& b = body.value();
    if (!crypto::verify(ctx_->rsu_pk, b.signed_portion(), b.signature)) return false;
    if (!fresh(b.timestamp_ms, now_ms)) return false;
    if (b.adversary_cert.cert_type != certs::CertType::AC || b.adversary_cert.vehicle_id != id_)
      return false;
    if (!compliant_) return true;
    status_cert_ = b.adversary_cert;
    return true;
  }

  // Road-wide add order: decrypts with the group key, then lands in the AL
  // like a warning issued by the RSU.
  bool apply_add_broadcast(const msg::AddBroadcast& order, std::uint64_t now_ms) {
    ++decrypt_count_;
    auto plaintext = crypto::decrypt(ctx_->group_key.private_key, order.ct);
    if (!plaintext.ok()) return false;
    auto body = msg::AddBody::decode(plaintext.value());
    if (!body.ok()) return false;
    const msg::AddBody& b = body.value();
    if (!crypto::verify(ctx_->rsu_pk, b.signed_portion(), b.signature)) return false;
    if (!fresh(b.timestamp_ms, now_ms)) return false;
    al_.record({ctx_->rsu_id, b.accused_id, b.timestamp_ms, b.reason_code, b.review_date_s});
    return true;
  }

  void purge_departed(std::span<const std::uint64_t> departed_ids) { al_.purge_departed(departed_ids); }

  void store_crl(std::vector<msg::CrlAdd> entries) { crl_copy_ = std::move(entries); }
  const std::vector<msg::CrlAdd>& crl_copy() const { return crl_copy_; }

  bool crl_lists(std::uint64_t vehicle_id) const {
    return std::any_of(crl_copy_.begin(), crl_copy_.end(),
                       [&](const msg::CrlAdd& e) { return e.accused_id == vehicle_id; });
  }

  // Baseline receive path: no adversary list, the sender id is checked
  // against the most recently received CRL instead. Listed senders are
  // ignored without touching the certificate; everyone else goes through the
  // normal certificate checks.
  ReceiveResult receive_crl_mode(const msg::DataMessage& m, std::uint64_t now_ms) {
    if (crl_lists(m.sender_id)) return {ReceiveDecision::ignore(), std::nullopt};

    std::uint64_t now_s = now_ms / 1000;
    ++decrypt_count_;
    auto plaintext = crypto::decrypt(ctx_->group_key.private_key, m.status_cert_ct);
    if (!plaintext.ok()) return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    auto status = certs::decode(plaintext.value());
    if (!status.ok() || status.value().cert_type != certs::CertType::VC ||
        certs::validate(status.value(), ctx_->ca_pk, now_s) != certs::ValidationResult::Valid)
      return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    const crypto::PublicKey* sender_pk = ctx_->vehicle_key(m.sender_id);
    if (!sender_pk || !crypto::verify(*sender_pk, m.signed_portion(), m.signature))
      return {ReceiveDecision::reject(RejectCause::BadSignature), std::nullopt};
    if (m.identity_cert.cert_type != certs::CertType::Identity)
      return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    switch (certs::validate(m.identity_cert, ctx_->ca_pk, now_s)) {
      case certs::ValidationResult::Valid:
        break;
      case certs::ValidationResult::Expired:
        return {ReceiveDecision::reject(RejectCause::ExpiredIdentity), std::nullopt};
      default:
        return {ReceiveDecision::reject(RejectCause::MalformedCert), std::nullopt};
    }
    if (m.identity_cert.vehicle_id != m.sender_id)
      return {ReceiveDecision::reject(RejectCause::IdentityMismatch), std::nullopt};
    return {ReceiveDecision::accept(), std::nullopt};
  }

 private:
  std::optional<msg::WarningMessage> make_warning(const AdversaryListEntry& e) {
    if (!status_cert_ || status_cert_->cert_type != certs::CertType::VC) return std::nullopt;
    msg::WarningMessage w;
    w.warning_issuer_id = id_;
    w.adversary_id = e.adversary_id;
    w.timestamp_ms = e.timestamp_ms;
    w.reason_code = e.reason_code;
    w.review_date_s = e.review_date_s;
    w.issuer_vc = *status_cert_;
    auto sig = crypto::sign(key_.private_key, w.signed_portion());
    if (!sig.ok()) return std::nullopt;
    w.signature = sig.value();
    return w;
  }

  bool fresh(std::uint64_t ts_ms, std::uint64_t now_ms) const {
    std::uint64_t age = now_ms >= ts_ms ? now_ms - ts_ms : ts_ms - now_ms;
    return age <= ctx_->params.freshness_window_ms;
  }

  std::uint64_t id_;
  crypto::KeyPair key_;
  std::optional<certs::Certificate> status_cert_;
  std::vector<certs::Certificate> identity_pool_;
  bool compliant_;
  const RoadContext* ctx_;
  AdversaryList al_;
  SuspicionTracker tracker_;
  bool credentials_erased_ = false;
  std::vector<msg::CrlAdd> crl_copy_;

  std::uint64_t decrypt_count_ = 0;
  std::uint64_t al_lookup_count_ = 0;
};

// ---------------------------------------------------------------------------
// RSU
// ---------------------------------------------------------------------------

class RsuAgent {
 public:
  RsuAgent(crypto::KeyPair key, const RoadContext* ctx) : key_(std::move(key)), ctx_(ctx) {}

  void note_presence(std::uint64_t vehicle_id, std::uint64_t now_ms) {
    last_seen_[vehicle_id] = now_ms;
  }

  void note_departure(std::uint64_t vehicle_id) { last_seen_.erase(vehicle_id); }

  std::size_t present_count(std::uint64_t now_ms) {
    prune(now_ms);
    return last_seen_.size();
  }

  // Accusation intake. Enforced in order: decryptable and well-formed, fresh,
  // accuser holds a valid VC (AC accusers are ignored), accuser signature
  // verifies. Each distinct accuser counts once per accused; the forward to
  // the CA fires exactly once, when the count first exceeds half the present
  // vehicles.
  std::optional<msg::AccusationToCa> collect_accusation(const msg::AccusationToRsu& acc,
                                                        std::uint64_t now_ms) {
    auto plaintext = crypto::decrypt(key_.private_key, acc.ct);
    if (!plaintext.ok()) return drop();
    auto decoded = msg::AccusationBody::decode(plaintext.value());
    if (!decoded.ok()) return drop();
    const msg::AccusationBody& body = decoded.value();
    if (!fresh(body.timestamp_ms, now_ms)) return drop();
    if (body.accuser_vc.cert_type != certs::CertType::VC) return drop();
    if (certs::validate(body.accuser_vc, ctx_->ca_pk, now_ms / 1000) != certs::ValidationResult::Valid)
      return drop();
    std::uint64_t accuser_id = body.accuser_vc.vehicle_id;
    const crypto::PublicKey* accuser_pk = ctx_->vehicle_key(accuser_id);
    if (!accuser_pk || !crypto::verify(*accuser_pk, body.signed_portion(), body.signature))
      return drop();

    auto& box = accusation_box_[body.accused_id];
    box.accusers.insert(accuser_id);
    box.reason_code = body.reason_code;
    if (box.forwarded) return std::nullopt;

    std::size_t present = present_count(now_ms);
    if (box.accusers.size() <= present / 2) return std::nullopt;

    box.forwarded = true;
    msg::ForwardedAccusationBody fwd;
    fwd.reason_code = body.reason_code;
    fwd.timestamp_ms = now_ms;
    fwd.accused_id = body.accused_id;
    auto sig = crypto::sign(key_.private_key, fwd.signed_portion(msg::kDomainAccusationToCa));
    if (!sig.ok()) return std::nullopt;
    fwd.signature = sig.value();
    auto ct = crypto::encrypt_for(ctx_->ca_pk, fwd.encode());
    if (!ct.ok()) return std::nullopt;
    return msg::AccusationToCa{std::move(ct.value())};
  }

  struct ExecuteOrders {
    std::uint64_t accused_id = 0;
    msg::EraseToVehicle erase;
    msg::InsertAc insert;
    msg::AddBroadcast add;
  };

  // CA erase order: authenticate, then emit the three outbound orders -
  // erase the vehicle's keys, insert the AC, and tell the whole road to add
  // the adversary to their lists.
  std::optional<ExecuteOrders> execute_erase_order(const msg::EraseFromCa& order, std::uint64_t now_ms) {
    auto plaintext = crypto::decrypt(key_.private_key, order.ct);
    if (!plaintext.ok()) return std::nullopt;
    auto decoded = msg::EraseOrderBody::decode(plaintext.value());
    if (!decoded.ok()) return std::nullopt;
    const msg::EraseOrderBody& body = decoded.value();
    if (!crypto::verify(ctx_->ca_pk, body.signed_portion(), body.signature)) return std::nullopt;
    if (!fresh(body.timestamp_ms, now_ms)) return std::nullopt;
    const crypto::PublicKey* target_pk = ctx_->vehicle_key(body.accused_id);
    if (!target_pk) return std::nullopt;

    crl_mirror_.push_back({body.accused_id, body.timestamp_ms, body.reason_code});

    ExecuteOrders out;
    out.accused_id = body.accused_id;

    msg::ForwardedAccusationBody erase_body;
    erase_body.reason_code = body.reason_code;
    erase_body.timestamp_ms = now_ms;
    erase_body.accused_id = body.accused_id;
    auto erase_sig = crypto::sign(key_.private_key, erase_body.signed_portion(msg::kDomainEraseToVehicle));
    if (!erase_sig.ok()) return std::nullopt;
    erase_body.signature = erase_sig.value();
    auto erase_ct = crypto::encrypt_for(*target_pk, erase_body.encode());
    if (!erase_ct.ok()) return std::nullopt;
    out.erase.ct = std::move(erase_ct.value());

    msg::InsertBody insert_body;
    insert_body.adversary_cert = body.adversary_cert;
    insert_body.timestamp_ms = now_ms;
    auto insert_sig = crypto::sign(key_.private_key, insert_body.signed_portion());
    if (!insert_sig.ok()) return std::nullopt;
    insert_body.signature = insert_sig.value();
    auto insert_ct = crypto::encrypt_for(*target_pk, insert_body.encode());
    if (!insert_ct.ok()) return std::nullopt;
    out.insert.ct = std::move(insert_ct.value());

    msg::AddBody add_body;
    add_body.accused_id = body.accused_id;
    add_body.timestamp_ms = now_ms;
    add_body.reason_code = body.reason_code;
    add_body.review_date_s = body.adversary_cert.review_date_s;
    auto add_sig = crypto::sign(key_.private_key, add_body.signed_portion());
    if (!add_sig.ok()) return std::nullopt;
    add_body.signature = add_sig.value();
    auto add_ct = crypto::encrypt_for(ctx_->group_key.public_key, add_body.encode());
    if (!add_ct.ok()) return std::nullopt;
    out.add.ct = std::move(add_ct.value());

    return out;
  }

  msg::CrlResponse serve_crl(const msg::CrlRequest&) const { return {crl_mirror_}; }

  std::size_t distinct_accusers(std::uint64_t accused_id) const {
    auto it = accusation_box_.find(accused_id);
    return it == accusation_box_.end() ? 0 : it->second.accusers.size();
  }
  bool forwarded(std::uint64_t accused_id) const {
    auto it = accusation_box_.find(accused_id);
    return it != accusation_box_.end() && it->second.forwarded;
  }
  std::uint64_t dropped_accusations() const { return dropped_accusations_; }
  const crypto::KeyPair& key() const { return key_; }

 private:
  struct AccusationBox {
    std::set<std::uint64_t> accusers;
    std::uint8_t reason_code = 0;
    bool forwarded = false;
  };

  std::optional<msg::AccusationToCa> drop() {
    ++dropped_accusations_;
    return std::nullopt;
  }

  void prune(std::uint64_t now_ms) {
    std::erase_if(last_seen_, [&](const auto& kv) {
      return kv.second + ctx_->params.presence_window_ms < now_ms;
    });
  }

  bool fresh(std::uint64_t ts_ms, std::uint64_t now_ms) const {
    std::uint64_t age = now_ms >= ts_ms ? now_ms - ts_ms : ts_ms - now_ms;
    return age <= ctx_->params.freshness_window_ms;
  }

  crypto::KeyPair key_;
  const RoadContext* ctx_;
  std::map<std::uint64_t, std::uint64_t> last_seen_;
  std::map<std::uint64_t, AccusationBox> accusation_box_;
  std::vector<msg::CrlAdd> crl_mirror_;
  std::uint64_t dropped_accusations_ = 0;
};

// ---------------------------------------------------------------------------
// CA
// ---------------------------------------------------------------------------

class CaAgent {
 public:
  CaAgent(std::uint64_t id, crypto::KeyPair key, const RoadContext* ctx)
      : id_(id), key_(std::move(key)), ctx_(ctx) {}

  const crypto::KeyPair& key() const { return key_; }
  std::uint64_t id() const { return id_; }
  const std::vector<msg::CrlAdd>& crl() const { return crl_; }

  Result<certs::Certificate> issue(certs::CertType type, std::uint64_t vehicle_id, std::uint64_t now_s,
                                   std::optional<std::uint8_t> reason = std::nullopt) {
    return certs::issue(type, vehicle_id, key_, id_, now_s, reason);
  }

  bool is_revoked(std::uint64_t vehicle_id) const {
    return std::any_of(crl_.begin(), crl_.end(),
                       [&](const msg::CrlAdd& e) { return e.accused_id == vehicle_id; });
  }

  // Forwarded accusation from the RSU: authenticate, then revoke - issue the
  // AC, append the CRL record, and order the RSU to erase. Accusations about
  // an already-revoked vehicle are absorbed.
  std::optional<msg::EraseFromCa> process_accusation(const msg::AccusationToCa& acc,
                                                     std::uint64_t now_ms) {
    auto plaintext = crypto::decrypt(key_.private_key, acc.ct);
    if (!plaintext.ok()) return std::nullopt;
    auto decoded = msg::ForwardedAccusationBody::decode(plaintext.value());
    if (!decoded.ok()) return std::nullopt;
    const msg::ForwardedAccusationBody& body = decoded.value();
    if (!crypto::verify(ctx_->rsu_pk, body.signed_portion(msg::kDomainAccusationToCa), body.signature))
      return std::nullopt;
    if (!fresh(body.timestamp_ms, now_ms)) return std::nullopt;
    if (is_revoked(body.accused_id)) return std::nullopt;

    auto ac = issue(certs::CertType::AC, body.accused_id, now_ms / 1000, body.reason_code);
    if (!ac.ok()) return std::nullopt;
    crl_.push_back({body.accused_id, now_ms, body.reason_code});

    msg::EraseOrderBody order;
    order.reason_code = body.reason_code;
    order.timestamp_ms = now_ms;
    order.accused_id = body.accused_id;
    order.adversary_cert = ac.value();
    auto sig = crypto::sign(key_.private_key, order.signed_portion());
    if (!sig.ok()) return std::nullopt;
    order.signature = sig.value();
    auto ct = crypto::encrypt_for(ctx_->rsu_pk, order.encode());
    if (!ct.ok()) return std::nullopt;
    return msg::EraseFromCa{std::move(ct.value())};
  }

  msg::CrlResponse serve_crl(const msg::CrlRequest&) const { return {crl_}; }

  // Baseline mode only: pre-populate the CRL.
  void seed_crl(std::vector<msg::CrlAdd> entries) { crl_ = std::move(entries); }

 private:
  bool fresh(std::uint64_t ts_ms, std::uint64_t now_ms) const {
    std::uint64_t age = now_ms >= ts_ms ? now_ms - ts_ms : ts_ms - now_ms;
    return age <= ctx_->params.freshness_window_ms;
  }

  std::uint64_t id_;
  crypto::KeyPair key_;
  const RoadContext* ctx_;
  std::vector<msg::CrlAdd> crl_;
};

}  // namespace vcm
