#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcm/protocol.hpp"

// Deterministic discrete-event simulator: one road segment, one RSU, one CA,
// vehicles joining and leaving on a schedule, an instantaneous-broadcast
// channel with a fixed delivery delay, and byte/decrypt accounting. Runs in
// adversary-list mode (the certificate scheme under test) or CRL-baseline
// mode (periodic full-CRL rebroadcast) on identical traffic so the two can
// be compared.

namespace vcm::sim {

using nlohmann::json;

enum class Mode { AdversaryList, CrlBaseline };

inline const char* mode_name(Mode m) {
  return m == Mode::AdversaryList ? "adversary_list" : "crl_baseline";
}

struct AdversarySpec {
  std::uint64_t id = 0;
  bool compliant = true;
};

struct VehicleSchedule {
  std::uint64_t id = 0;
  std::uint64_t join_ms = 0;
  std::uint64_t leave_ms = 0;
};

struct CrlRequestSpec {
  std::uint64_t vehicle_id = 0;
  std::uint64_t at_ms = 0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::uint64_t duration_ms = 300'000;
  std::uint32_t vehicle_count = 10;
  std::vector<AdversarySpec> adversaries;
  std::uint64_t beacon_period_ms = 2'000;   // category-002 beacons from every vehicle
  std::uint64_t report_period_ms = 5'000;   // category-001 traffic reports from every vehicle
  std::uint64_t al_capacity = 10;
  std::uint64_t presence_window_ms = 30'000;
  std::uint64_t freshness_window_ms = 5'000;
  std::uint64_t observation_window_ms = 10'000;
  Mode mode = Mode::AdversaryList;
  std::uint64_t crl_broadcast_period_ms = 10'000;
  std::uint32_t crl_seed_size = 0;
  std::uint64_t delivery_delay_ms = 10;
  double loss_probability = 0.0;
  std::vector<VehicleSchedule> schedule_overrides;  // default: join 0, stay to the end
  std::vector<CrlRequestSpec> crl_requests;
  std::uint64_t honest_claim = 100;
  std::uint64_t adversary_claim = 55;

  Result<void> validate() const {
    if (duration_ms == 0) return err(Errc::config_error, "duration_s must be > 0");
    if (vehicle_count == 0) return err(Errc::config_error, "vehicle_count must be > 0");
    if (beacon_period_ms == 0) return err(Errc::config_error, "beacon_period_s must be > 0");
    if (report_period_ms == 0) return err(Errc::config_error, "report_period_s must be > 0");
    if (al_capacity == 0) return err(Errc::config_error, "al_capacity must be > 0");
    if (presence_window_ms == 0) return err(Errc::config_error, "presence_window_s must be > 0");
    if (freshness_window_ms == 0) return err(Errc::config_error, "freshness_window_s must be > 0");
    if (observation_window_ms == 0) return err(Errc::config_error, "observation_window_s must be > 0");
    if (crl_broadcast_period_ms == 0) return err(Errc::config_error, "crl_broadcast_period_s must be > 0");
    if (loss_probability < 0.0 || loss_probability >= 1.0)
      return err(Errc::config_error, "loss_probability must be in [0, 1)");
    std::set<std::uint64_t> seen;
    for (const auto& a : adversaries) {
      if (a.id >= vehicle_count)
        return err(Errc::config_error, "adversaries: id " + std::to_string(a.id) + " outside vehicle ids");
      if (!seen.insert(a.id).second)
        return err(Errc::config_error, "adversaries: duplicate id " + std::to_string(a.id));
    }
    std::set<std::uint64_t> sched_seen;
    for (const auto& s : schedule_overrides) {
      if (s.id >= vehicle_count)
        return err(Errc::config_error, "schedule: id " + std::to_string(s.id) + " outside vehicle ids");
      if (!sched_seen.insert(s.id).second)
        return err(Errc::config_error, "schedule: duplicate id " + std::to_string(s.id));
      std::uint64_t leave = s.leave_ms == 0 ? duration_ms : s.leave_ms;
      if (s.join_ms >= leave)
        return err(Errc::config_error, "schedule: join must precede leave for id " + std::to_string(s.id));
    }
    for (const auto& r : crl_requests) {
      if (r.vehicle_id >= vehicle_count)
        return err(Errc::config_error, "crl_requests: id " + std::to_string(r.vehicle_id) + " outside vehicle ids");
    }
    return {};
  }

  bool is_adversary(std::uint64_t id) const {
    return std::any_of(adversaries.begin(), adversaries.end(),
                       [&](const AdversarySpec& a) { return a.id == id; });
  }

  // Digest over the traffic-shaping fields only; two runs are comparable iff
  // their digests match. Mode and protocol knobs are deliberately excluded.
  std::string scenario_digest() const {
    std::ostringstream os;
    os << seed << "|" << duration_ms << "|" << vehicle_count << "|" << beacon_period_ms << "|"
       << report_period_ms << "|" << delivery_delay_ms << "|" << loss_probability << "|" << honest_claim
       << "|" << adversary_claim;
    for (const auto& a : adversaries) os << "|a" << a.id << (a.compliant ? "c" : "n");
    for (const auto& s : schedule_overrides) os << "|s" << s.id << ":" << s.join_ms << "-" << s.leave_ms;
    for (const auto& r : crl_requests) os << "|q" << r.vehicle_id << "@" << r.at_ms;
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : os.str()) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
  }
};

// ---------------------------------------------------------------------------
// Config file I/O (JSON; durations in seconds except where noted)
// ---------------------------------------------------------------------------

namespace detail {

inline Result<std::uint64_t> get_u64(const json& j, const std::string& key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_unsigned() && !j[key].is_number_integer())
    return err(Errc::config_error, key + " must be a non-negative integer");
  if (j[key].is_number_integer() && j[key].get<std::int64_t>() < 0)
    return err(Errc::config_error, key + " must be a non-negative integer");
  return j[key].get<std::uint64_t>();
}

}  // namespace detail

inline Result<SimConfig> config_from_json(const json& j) {
  if (!j.is_object()) return err(Errc::config_error, "config root must be an object");
  static const std::set<std::string> known = {
      "seed", "duration_s", "vehicle_count", "adversaries", "beacon_period_s", "report_period_s",
      "al_capacity", "presence_window_s", "freshness_window_s", "observation_window_s", "mode",
      "crl_broadcast_period_s", "crl_seed_size", "delivery_delay_ms", "loss_probability", "schedule",
      "crl_requests", "honest_claim", "adversary_claim"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) return err(Errc::config_error, "unknown config key: " + it.key());

  SimConfig c;
  auto scaled = [&](const char* key, std::uint64_t fallback_ms,
                    std::uint64_t scale) -> Result<std::uint64_t> {
    auto v = detail::get_u64(j, key, fallback_ms / scale);
    if (!v.ok()) return v.error();
    return v.value() * scale;
  };

  auto seed = detail::get_u64(j, "seed", c.seed);
  if (!seed.ok()) return seed.error();
  c.seed = seed.value();

#define VCM_FIELD(name, key, scale)                      \
  {                                                      \
    auto v = scaled(key, c.name, scale);                 \
    if (!v.ok()) return v.error();                       \
    c.name = v.value();                                  \
  }
  VCM_FIELD(duration_ms, "duration_s", 1000)
  VCM_FIELD(beacon_period_ms, "beacon_period_s", 1000)
  VCM_FIELD(report_period_ms, "report_period_s", 1000)
  VCM_FIELD(presence_window_ms, "presence_window_s", 1000)
  VCM_FIELD(freshness_window_ms, "freshness_window_s", 1000)
  VCM_FIELD(observation_window_ms, "observation_window_s", 1000)
  VCM_FIELD(crl_broadcast_period_ms, "crl_broadcast_period_s", 1000)
  VCM_FIELD(delivery_delay_ms, "delivery_delay_ms", 1)
  VCM_FIELD(al_capacity, "al_capacity", 1)
#undef VCM_FIELD

  auto count = detail::get_u64(j, "vehicle_count", c.vehicle_count);
  if (!count.ok()) return count.error();
  c.vehicle_count = static_cast<std::uint32_t>(count.value());
  auto crl_size = detail::get_u64(j, "crl_seed_size", c.crl_seed_size);
  if (!crl_size.ok()) return crl_size.error();
  c.crl_seed_size = static_cast<std::uint32_t>(crl_size.value());
  auto honest = detail::get_u64(j, "honest_claim", c.honest_claim);
  if (!honest.ok()) return honest.error();
  c.honest_claim = honest.value();
  auto advc = detail::get_u64(j, "adversary_claim", c.adversary_claim);
  if (!advc.ok()) return advc.error();
  c.adversary_claim = advc.value();

  if (j.contains("loss_probability")) {
    if (!j["loss_probability"].is_number())
      return err(Errc::config_error, "loss_probability must be a number");
    c.loss_probability = j["loss_probability"].get<double>();
  }
  if (j.contains("mode")) {
    std::string m = j["mode"].is_string() ? j["mode"].get<std::string>() : "";
    if (m == "adversary_list")
      c.mode = Mode::AdversaryList;
    else if (m == "crl_baseline")
      c.mode = Mode::CrlBaseline;
    else
      return err(Errc::config_error, "mode must be adversary_list or crl_baseline");
  }
  if (j.contains("adversaries")) {
    if (!j["adversaries"].is_array()) return err(Errc::config_error, "adversaries must be an array");
    for (const auto& e : j["adversaries"]) {
      AdversarySpec a;
      if (e.is_number_unsigned() || e.is_number_integer()) {
        a.id = e.get<std::uint64_t>();
      } else if (e.is_object()) {
        auto id = detail::get_u64(e, "id", 0);
        if (!id.ok()) return id.error();
        a.id = id.value();
        if (e.contains("compliant")) {
          if (!e["compliant"].is_boolean()) return err(Errc::config_error, "adversaries: compliant must be a bool");
          a.compliant = e["compliant"].get<bool>();
        }
      } else {
        return err(Errc::config_error, "adversaries entries must be ids or objects");
      }
      c.adversaries.push_back(a);
    }
  }
  if (j.contains("schedule")) {
    if (!j["schedule"].is_array()) return err(Errc::config_error, "schedule must be an array");
    for (const auto& e : j["schedule"]) {
      if (!e.is_object()) return err(Errc::config_error, "schedule entries must be objects");
      VehicleSchedule s;
      auto id = detail::get_u64(e, "id", 0);
      if (!id.ok()) return id.error();
      s.id = id.value();
      auto join = detail::get_u64(e, "join_s", 0);
      if (!join.ok()) return join.error();
      s.join_ms = join.value() * 1000;
      auto leave = detail::get_u64(e, "leave_s", 0);
      if (!leave.ok()) return leave.error();
      s.leave_ms = leave.value() * 1000;
      c.schedule_overrides.push_back(s);
    }
  }
  if (j.contains("crl_requests")) {
    if (!j["crl_requests"].is_array()) return err(Errc::config_error, "crl_requests must be an array");
    for (const auto& e : j["crl_requests"]) {
      if (!e.is_object()) return err(Errc::config_error, "crl_requests entries must be objects");
      CrlRequestSpec r;
      auto id = detail::get_u64(e, "id", 0);
      if (!id.ok()) return id.error();
      r.vehicle_id = id.value();
      auto at = detail::get_u64(e, "at_s", 0);
      if (!at.ok()) return at.error();
      r.at_ms = at.value() * 1000;
      c.crl_requests.push_back(r);
    }
  }

  auto valid = c.validate();
  if (!valid.ok()) return valid.error();
  return c;
}

inline json config_to_json(const SimConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["duration_s"] = c.duration_ms / 1000;
  j["vehicle_count"] = c.vehicle_count;
  json advs = json::array();
  for (const auto& a : c.adversaries) advs.push_back({{"id", a.id}, {"compliant", a.compliant}});
  j["adversaries"] = advs;
  j["beacon_period_s"] = c.beacon_period_ms / 1000;
  j["report_period_s"] = c.report_period_ms / 1000;
  j["al_capacity"] = c.al_capacity;
  j["presence_window_s"] = c.presence_window_ms / 1000;
  j["freshness_window_s"] = c.freshness_window_ms / 1000;
  j["observation_window_s"] = c.observation_window_ms / 1000;
  j["mode"] = mode_name(c.mode);
  j["crl_broadcast_period_s"] = c.crl_broadcast_period_ms / 1000;
  j["crl_seed_size"] = c.crl_seed_size;
  j["delivery_delay_ms"] = c.delivery_delay_ms;
  j["loss_probability"] = c.loss_probability;
  if (!c.schedule_overrides.empty()) {
    json s = json::array();
    for (const auto& e : c.schedule_overrides)
      s.push_back({{"id", e.id}, {"join_s", e.join_ms / 1000}, {"leave_s", e.leave_ms / 1000}});
    j["schedule"] = s;
  }
  if (!c.crl_requests.empty()) {
    json r = json::array();
    for (const auto& e : c.crl_requests)
      r.push_back({{"id", e.vehicle_id}, {"at_s", e.at_ms / 1000}});
    j["crl_requests"] = r;
  }
  j["honest_claim"] = c.honest_claim;
  j["adversary_claim"] = c.adversary_claim;
  return j;
}

inline Result<SimConfig> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return err(Errc::config_error, "cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) return err(Errc::config_error, "config file is not valid JSON: " + path);
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Event log and metrics
// ---------------------------------------------------------------------------

class EventLog {
 public:
  void emit(std::uint64_t t_ms, std::string_view agent, std::string_view event, json fields = json::object()) {
    fields["t_ms"] = t_ms;
    fields["agent"] = std::string(agent);
    fields["event"] = std::string(event);
    lines_.push_back(fields.dump());
  }

  const std::vector<std::string>& lines() const { return lines_; }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

struct Metrics {
  std::string mode;
  std::string scenario_digest;

  std::map<std::string, std::uint64_t> channel_bytes;  // per traffic class
  std::uint64_t total_channel_bytes = 0;

  std::map<std::uint64_t, std::uint64_t> decrypt_count;  // per vehicle
  std::uint64_t total_decrypt_count = 0;
  std::uint64_t al_lookup_count = 0;

  std::int64_t first_contradiction_ms = -1;
  std::int64_t isolation_complete_ms = -1;
  std::int64_t time_to_isolation_ms = -1;  // -1 when isolation never completed

  std::uint64_t acceptance_of_adversary_count = 0;  // accepted messages from currently-revoked senders
  std::uint64_t accepted_after_isolation = 0;

  std::uint64_t messages_sent = 0;
  std::uint64_t messages_delivered = 0;
  std::uint64_t messages_lost = 0;
  std::uint64_t warnings_sent = 0;
  std::uint64_t accusations_sent = 0;
  std::uint64_t accusations_forwarded = 0;
  std::uint64_t revocations = 0;
  std::uint64_t crl_broadcasts = 0;

  std::uint64_t revocation_bytes() const {
    std::uint64_t total = 0;
    for (const auto& [cls, bytes] : channel_bytes)
      if (cls != "data") total += bytes;
    return total;
  }

  // One row per metric: name,value,unit.
  std::string to_csv() const {
    std::ostringstream os;
    os << "name,value,unit\n";
    os << "mode," << mode << ",-\n";
    os << "scenario_digest," << scenario_digest << ",-\n";
    for (const auto& [cls, bytes] : channel_bytes) os << "channel_bytes_" << cls << "," << bytes << ",B\n";
    os << "total_channel_bytes," << total_channel_bytes << ",B\n";
    os << "revocation_bytes," << revocation_bytes() << ",B\n";
    for (const auto& [id, n] : decrypt_count) os << "decrypt_count_vehicle_" << id << "," << n << ",ops\n";
    os << "total_decrypt_count," << total_decrypt_count << ",ops\n";
    os << "al_lookup_count," << al_lookup_count << ",ops\n";
    os << "first_contradiction_ms," << first_contradiction_ms << ",ms\n";
    os << "isolation_complete_ms," << isolation_complete_ms << ",ms\n";
    os << "time_to_isolation_ms," << time_to_isolation_ms << ",ms\n";
    os << "acceptance_of_adversary_count," << acceptance_of_adversary_count << ",msgs\n";
    os << "accepted_after_isolation," << accepted_after_isolation << ",msgs\n";
    os << "messages_sent," << messages_sent << ",msgs\n";
    os << "messages_delivered," << messages_delivered << ",msgs\n";
    os << "messages_lost," << messages_lost << ",msgs\n";
    os << "warnings_sent," << warnings_sent << ",msgs\n";
    os << "accusations_sent," << accusations_sent << ",msgs\n";
    os << "accusations_forwarded," << accusations_forwarded << ",msgs\n";
    os << "revocations," << revocations << ",events\n";
    os << "crl_broadcasts," << crl_broadcasts << ",msgs\n";
    return os.str();
  }
};

struct RunResult {
  EventLog log;
  Metrics metrics;
  std::vector<msg::CrlAdd> final_crl;
  std::map<std::uint64_t, std::vector<AdversaryListEntry>> final_als;
  std::map<std::uint64_t, std::string> final_al_dumps;
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

class Simulation {
 public:
  explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {}

  RunResult run() {
    setup();
    schedule_traffic();
    loop();
    return finish();
  }

 private:
  static constexpr std::uint64_t kRsuAddr = 0xFFFF0001;
  static constexpr std::uint64_t kCaAddr = 0xFFFF0002;
  static constexpr std::uint64_t kFillerRevokedBase = 1'000'000;

  enum class Ev : std::uint8_t { Join, Leave, Beacon, Report, WindowClose, CrlBroadcast, CrlAsk, Deliver };

  struct Event {
    std::uint64_t t = 0;
    std::uint64_t seq = 0;
    Ev kind = Ev::Deliver;
    std::uint64_t subject = 0;  // vehicle id, or delivery target address
    std::uint64_t from = 0;     // delivery sender
    std::shared_ptr<const msg::WireMessage> message;
  };

  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };

  struct VehicleSlot {
    std::unique_ptr<VehicleAgent> agent;
    std::uint64_t join_ms = 0;
    std::uint64_t leave_ms = 0;
    bool active = false;
  };

  // --- setup -------------------------------------------------------------

  void setup() {
    metrics_.mode = mode_name(cfg_.mode);
    metrics_.scenario_digest = cfg_.scenario_digest();
    for (const char* cls : {"data", "warning", "accusation", "control", "crl"})
      metrics_.channel_bytes[cls] = 0;

    ctx_.ca_id = kCaAddr;
    ctx_.rsu_id = kRsuAddr;
    ctx_.params.al_capacity = cfg_.al_capacity;
    ctx_.params.freshness_window_ms = cfg_.freshness_window_ms;
    ctx_.params.observation_window_ms = cfg_.observation_window_ms;
    ctx_.params.presence_window_ms = cfg_.presence_window_ms;

    auto ca_key = crypto::generate_keypair(mix_seed(1));
    auto rsu_key = crypto::generate_keypair(mix_seed(2));
    ctx_.group_key = crypto::generate_keypair(mix_seed(3));
    ctx_.ca_pk = ca_key.public_key;
    ctx_.rsu_pk = rsu_key.public_key;

    ca_ = std::make_unique<CaAgent>(kCaAddr, ca_key, &ctx_);
    rsu_ = std::make_unique<RsuAgent>(rsu_key, &ctx_);

    std::map<std::uint64_t, VehicleSchedule> schedule;
    for (const auto& s : cfg_.schedule_overrides) schedule[s.id] = s;

    std::size_t identity_slots = static_cast<std::size_t>(cfg_.duration_ms / 1000 / certs::kIdentityLifetimeS) + 1;
    for (std::uint64_t id = 0; id < cfg_.vehicle_count; ++id) {
      auto key = crypto::generate_keypair(mix_seed(100 + id));
      ctx_.vehicle_keys[id] = key.public_key;
      auto vc = ca_->issue(certs::CertType::VC, id, 0);
      std::vector<certs::Certificate> pool;
      for (std::size_t slot = 0; slot < identity_slots; ++slot) {
        auto identity = ca_->issue(certs::CertType::Identity, id, slot * certs::kIdentityLifetimeS);
        pool.push_back(identity.value());
      }
      bool compliant = true;
      for (const auto& a : cfg_.adversaries)
        if (a.id == id) compliant = a.compliant;

      VehicleSlot slot;
      slot.agent = std::make_unique<VehicleAgent>(id, key, vc.value(), std::move(pool), compliant, &ctx_);
      auto it = schedule.find(id);
      slot.join_ms = it == schedule.end() ? 0 : it->second.join_ms;
      slot.leave_ms = it == schedule.end() || it->second.leave_ms == 0 ? cfg_.duration_ms : it->second.leave_ms;
      vehicles_.push_back(std::move(slot));
    }

    if (cfg_.mode == Mode::CrlBaseline) {
      std::vector<msg::CrlAdd> seeded;
      for (const auto& a : cfg_.adversaries) {
        if (seeded.size() >= cfg_.crl_seed_size) break;
        seeded.push_back({a.id, 0, 1});
      }
      for (std::uint64_t k = 0; seeded.size() < cfg_.crl_seed_size; ++k)
        seeded.push_back({kFillerRevokedBase + k, 0, 1});
      ca_->seed_crl(std::move(seeded));
    }
  }

  void schedule_traffic() {
    for (std::uint64_t id = 0; id < vehicles_.size(); ++id) {
      const VehicleSlot& slot = vehicles_[id];
      push({slot.join_ms, next_seq(), Ev::Join, id});
      if (slot.leave_ms < cfg_.duration_ms) push({slot.leave_ms, next_seq(), Ev::Leave, id});
      for (std::uint64_t t = slot.join_ms; t < slot.leave_ms && t < cfg_.duration_ms; t += cfg_.beacon_period_ms)
        push({t, next_seq(), Ev::Beacon, id});
      for (std::uint64_t t = slot.join_ms; t < slot.leave_ms && t < cfg_.duration_ms; t += cfg_.report_period_ms)
        push({t, next_seq(), Ev::Report, id});
    }
    if (cfg_.mode == Mode::AdversaryList) {
      for (std::uint64_t t = cfg_.observation_window_ms; t <= cfg_.duration_ms; t += cfg_.observation_window_ms)
        push({t, next_seq(), Ev::WindowClose, 0});
    } else {
      for (std::uint64_t t = 0; t < cfg_.duration_ms; t += cfg_.crl_broadcast_period_ms)
        push({t, next_seq(), Ev::CrlBroadcast, 0});
    }
    for (const auto& r : cfg_.crl_requests) push({r.at_ms, next_seq(), Ev::CrlAsk, r.vehicle_id});
  }

  // --- event loop ----------------------------------------------------------

  void loop() {
    while (!queue_.empty()) {
      Event ev = queue_.top();
      queue_.pop();
      now_ = ev.t;
      switch (ev.kind) {
        case Ev::Join: on_join(ev.subject); break;
        case Ev::Leave: on_leave(ev.subject); break;
        case Ev::Beacon: on_tick(ev.subject, 2, 0); break;
        case Ev::Report: on_report(ev.subject); break;
        case Ev::WindowClose: on_window_close(); break;
        case Ev::CrlBroadcast: on_crl_broadcast(); break;
        case Ev::CrlAsk: on_crl_request(ev.subject); break;
        case Ev::Deliver: on_deliver(ev); break;
      }
    }
  }

  void on_join(std::uint64_t id) {
    vehicles_[id].active = true;
    log_.emit(now_, "sim", "join", {{"vehicle", id}});
  }

  void on_leave(std::uint64_t id) {
    vehicles_[id].active = false;
    rsu_->note_departure(id);
    std::uint64_t departed[] = {id};
    for (auto& slot : vehicles_)
      if (slot.active) slot.agent->purge_departed(departed);
    log_.emit(now_, "sim", "leave", {{"vehicle", id}});
  }

  void on_tick(std::uint64_t id, std::uint16_t category, std::uint64_t claim) {
    VehicleSlot& slot = vehicles_[id];
    if (!slot.active) return;
    auto m = slot.agent->make_data_message(category, claim, now_);
    if (!m) return;  // no status certificate between erase and insert
    broadcast(id, msg::WireMessage(std::move(*m)));
  }

  void on_report(std::uint64_t id) {
    std::uint64_t claim = cfg_.is_adversary(id) ? cfg_.adversary_claim : cfg_.honest_claim;
    on_tick(id, 1, claim);
  }

  void on_window_close() {
    for (auto& slot : vehicles_) {
      if (!slot.active) continue;
      auto accusations = slot.agent->close_observation_window(now_);
      for (auto& acc : accusations) {
        ++metrics_.accusations_sent;
        log_.emit(now_, agent_name(slot.agent->id()), "accuse", {{"accusations", accusations.size()}});
        unicast(slot.agent->id(), kRsuAddr, msg::WireMessage(std::move(acc)));
      }
      if (metrics_.first_contradiction_ms < 0 && slot.agent->tracker().total_contradictions() > 0)
        metrics_.first_contradiction_ms = static_cast<std::int64_t>(now_);
    }
  }

  void on_crl_broadcast() {
    msg::CrlResponse response{ca_->crl()};
    ++metrics_.crl_broadcasts;
    auto shared = std::make_shared<const msg::WireMessage>(std::move(response));
    count_send(*shared);
    log_.emit(now_, "rsu", "crl_broadcast", {{"entries", ca_->crl().size()}});
    for (std::uint64_t id = 0; id < vehicles_.size(); ++id)
      if (vehicles_[id].active) deliver_to(id, kRsuAddr, shared);
  }

  void on_crl_request(std::uint64_t id) {
    if (!vehicles_[id].active) return;
    unicast(id, kRsuAddr, msg::WireMessage(msg::CrlRequest{id}));
  }

  // --- channel -------------------------------------------------------------

  void broadcast(std::uint64_t from, msg::WireMessage m) {
    auto shared = std::make_shared<const msg::WireMessage>(std::move(m));
    count_send(*shared);
    for (std::uint64_t id = 0; id < vehicles_.size(); ++id) {
      if (id == from || !vehicles_[id].active) continue;
      deliver_to(id, from, shared);
    }
    deliver_to(kRsuAddr, from, shared);  // the RSU hears all road traffic
  }

  void unicast(std::uint64_t from, std::uint64_t to, msg::WireMessage m) {
    auto shared = std::make_shared<const msg::WireMessage>(std::move(m));
    count_send(*shared);
    deliver_to(to, from, shared);
  }

  void deliver_to(std::uint64_t to, std::uint64_t from, std::shared_ptr<const msg::WireMessage> m) {
    if (cfg_.loss_probability > 0.0 && to < vehicles_.size()) {
      if (std::bernoulli_distribution(cfg_.loss_probability)(rng_)) {
        ++metrics_.messages_lost;
        return;
      }
    }
    Event ev{now_ + cfg_.delivery_delay_ms, next_seq(), Ev::Deliver, to, from};
    ev.message = std::move(m);
    push(ev);
  }

  void count_send(const msg::WireMessage& m) {
    std::size_t size = msg::wire_size(m);
    ++metrics_.messages_sent;
    metrics_.channel_bytes[msg::traffic_class_name(msg::traffic_class(m))] += size;
    metrics_.total_channel_bytes += size;
    log_.emit(now_, "channel", "send",
              {{"kind", msg::kind_name(m)}, {"bytes", size}});
  }

  // --- delivery ------------------------------------------------------------

  void on_deliver(const Event& ev) {
    ++metrics_.messages_delivered;
    if (ev.subject == kRsuAddr) {
      deliver_rsu(ev);
    } else if (ev.subject == kCaAddr) {
      deliver_ca(ev);
    } else {
      if (!vehicles_[ev.subject].active) return;
      deliver_vehicle(ev);
    }
  }

  void deliver_vehicle(const Event& ev) {
    VehicleAgent& agent = *vehicles_[ev.subject].agent;
    const msg::WireMessage& m = *ev.message;

    if (const auto* data = std::get_if<msg::DataMessage>(&m)) {
      ReceiveResult r = cfg_.mode == Mode::AdversaryList ? agent.receive(*data, now_)
                                                         : agent.receive_crl_mode(*data, now_);
      log_.emit(now_, agent_name(agent.id()), "receive",
                {{"from", data->sender_id}, {"decision", r.decision.to_string()}});
      if (r.decision.kind == ReceiveDecision::Kind::Accept && ca_->is_revoked(data->sender_id)) {
        ++metrics_.acceptance_of_adversary_count;
        if (metrics_.isolation_complete_ms >= 0 &&
            now_ > static_cast<std::uint64_t>(metrics_.isolation_complete_ms))
          ++metrics_.accepted_after_isolation;
      }
      if (r.decision.kind == ReceiveDecision::Kind::NewAdversaryDetected) {
        log_.emit(now_, agent_name(agent.id()), "al_record", {{"adversary", data->sender_id}, {"via", "detect"}});
        check_isolation(data->sender_id);
        if (r.warning) {
          ++metrics_.warnings_sent;
          broadcast(agent.id(), msg::WireMessage(std::move(*r.warning)));
        }
      }
      return;
    }
    if (const auto* warning = std::get_if<msg::WarningMessage>(&m)) {
      if (cfg_.mode != Mode::AdversaryList) return;
      if (agent.process_warning(*warning, now_)) {
        log_.emit(now_, agent_name(agent.id()), "al_record",
                  {{"adversary", warning->adversary_id}, {"via", "warning"}});
        check_isolation(warning->adversary_id);
      }
      return;
    }
    if (const auto* erase = std::get_if<msg::EraseToVehicle>(&m)) {
      if (agent.apply_erase(*erase, now_))
        log_.emit(now_, agent_name(agent.id()), "erase_order",
                  {{"applied", agent.credentials_erased()}});
      return;
    }
    if (const auto* insert = std::get_if<msg::InsertAc>(&m)) {
      if (agent.apply_insert(*insert, now_))
        log_.emit(now_, agent_name(agent.id()), "insert_order",
                  {{"ac_installed", agent.status_cert().has_value() &&
                                        agent.status_cert()->cert_type == certs::CertType::AC}});
      return;
    }
    if (const auto* add = std::get_if<msg::AddBroadcast>(&m)) {
      if (agent.apply_add_broadcast(*add, now_)) {
        std::uint64_t av = agent.adversary_list().entries().front().adversary_id;
        log_.emit(now_, agent_name(agent.id()), "al_record", {{"adversary", av}, {"via", "add_broadcast"}});
        check_isolation(av);
      }
      return;
    }
    if (const auto* crl = std::get_if<msg::CrlResponse>(&m)) {
      agent.store_crl(crl->entries);
      log_.emit(now_, agent_name(agent.id()), "crl_update", {{"entries", crl->entries.size()}});
      return;
    }
  }

  void deliver_rsu(const Event& ev) {
    const msg::WireMessage& m = *ev.message;
    if (const auto* data = std::get_if<msg::DataMessage>(&m)) {
      rsu_->note_presence(data->sender_id, now_);
      return;
    }
    if (const auto* acc = std::get_if<msg::AccusationToRsu>(&m)) {
      if (cfg_.mode != Mode::AdversaryList) return;
      auto forward = rsu_->collect_accusation(*acc, now_);
      log_.emit(now_, "rsu", "accusation",
                {{"from", ev.from},
                 {"present", rsu_->present_count(now_)},
                 {"forwarded", forward.has_value()}});
      if (forward) {
        ++metrics_.accusations_forwarded;
        unicast(kRsuAddr, kCaAddr, msg::WireMessage(std::move(*forward)));
      }
      return;
    }
    if (const auto* request = std::get_if<msg::CrlRequest>(&m)) {
      msg::CrlResponse response = cfg_.mode == Mode::AdversaryList ? rsu_->serve_crl(*request)
                                                                   : ca_->serve_crl(*request);
      unicast(kRsuAddr, request->requester_id, msg::WireMessage(std::move(response)));
      return;
    }
    if (const auto* order = std::get_if<msg::EraseFromCa>(&m)) {
      auto orders = rsu_->execute_erase_order(*order, now_);
      if (!orders) return;
      log_.emit(now_, "rsu", "execute", {{"adversary", orders->accused_id}});
      unicast(kRsuAddr, orders->accused_id, msg::WireMessage(std::move(orders->erase)));
      unicast(kRsuAddr, orders->accused_id, msg::WireMessage(std::move(orders->insert)));
      auto shared = std::make_shared<const msg::WireMessage>(std::move(orders->add));
      count_send(*shared);
      for (std::uint64_t id = 0; id < vehicles_.size(); ++id)
        if (vehicles_[id].active) deliver_to(id, kRsuAddr, shared);
      return;
    }
  }

  void deliver_ca(const Event& ev) {
    const msg::WireMessage& m = *ev.message;
    if (const auto* acc = std::get_if<msg::AccusationToCa>(&m)) {
      auto order = ca_->process_accusation(*acc, now_);
      if (!order) return;
      const msg::CrlAdd& entry = ca_->crl().back();
      ++metrics_.revocations;
      log_.emit(now_, "ca", "revoked",
                {{"adversary", entry.accused_id}, {"reason", entry.reason_code}, {"crl_len", ca_->crl().size()}});
      unicast(kCaAddr, kRsuAddr, msg::WireMessage(std::move(*order)));
      return;
    }
  }

  // Isolation: every active vehicle lists every configured adversary.
  void check_isolation(std::uint64_t) {
    if (metrics_.isolation_complete_ms >= 0 || cfg_.adversaries.empty()) return;
    for (const auto& a : cfg_.adversaries) {
      for (const auto& slot : vehicles_) {
        if (!slot.active) continue;
        if (!slot.agent->adversary_list().contains(a.id)) return;
      }
    }
    metrics_.isolation_complete_ms = static_cast<std::int64_t>(now_);
    log_.emit(now_, "sim", "isolation", json::object());
  }

  RunResult finish() {
    for (const auto& slot : vehicles_) {
      metrics_.decrypt_count[slot.agent->id()] = slot.agent->decrypt_count();
      metrics_.total_decrypt_count += slot.agent->decrypt_count();
      metrics_.al_lookup_count += slot.agent->al_lookup_count();
    }
    if (metrics_.first_contradiction_ms >= 0 && metrics_.isolation_complete_ms >= 0)
      metrics_.time_to_isolation_ms = metrics_.isolation_complete_ms - metrics_.first_contradiction_ms;

    RunResult out;
    out.metrics = std::move(metrics_);
    out.final_crl = ca_->crl();
    for (const auto& slot : vehicles_) {
      out.final_als[slot.agent->id()] = slot.agent->adversary_list().entries();
      out.final_al_dumps[slot.agent->id()] = slot.agent->adversary_list().dump();
    }
    out.log = std::move(log_);
    return out;
  }

  static std::string agent_name(std::uint64_t id) { return "vehicle:" + std::to_string(id); }

  std::uint64_t mix_seed(std::uint64_t salt) const {
    std::uint64_t x = cfg_.seed ^ (salt * 0x9E3779B97F4A7C15ULL);
    x ^= x >> 33;
    x *= 0xFF51AFD7ED558CCDULL;
    x ^= x >> 33;
    return x;
  }

  std::uint64_t next_seq() { return seq_++; }
  void push(Event ev) { queue_.push(std::move(ev)); }

  SimConfig cfg_;
  std::mt19937_64 rng_;
  RoadContext ctx_;
  std::unique_ptr<CaAgent> ca_;
  std::unique_ptr<RsuAgent> rsu_;
  std::vector<VehicleSlot> vehicles_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
  EventLog log_;
  Metrics metrics_;
};

inline Result<RunResult> run(const SimConfig& cfg) {
  auto valid = cfg.validate();
  if (!valid.ok()) return valid.error();
  Simulation sim(cfg);
  return sim.run();
}

inline Result<RunResult> run_baseline(const SimConfig& cfg) {
  if (cfg.mode != Mode::CrlBaseline)
    return err(Errc::config_error, "mode: run_baseline requires crl_baseline");
  return run(cfg);
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

struct CompareReport {
  std::uint64_t al_total_bytes = 0;
  std::uint64_t crl_total_bytes = 0;
  std::uint64_t al_revocation_bytes = 0;
  std::uint64_t crl_revocation_bytes = 0;
  double byte_ratio = 0.0;  // CRL revocation bytes per AL revocation byte
  std::uint64_t al_decrypts = 0;
  std::uint64_t crl_decrypts = 0;
  std::int64_t al_time_to_isolation_ms = -1;
  std::uint64_t al_adversary_acceptances = 0;
  std::uint64_t crl_adversary_acceptances = 0;
  bool al_cheaper = false;
  bool degenerate_baseline = false;  // baseline ran with an empty CRL

  std::string to_text() const {
    std::ostringstream os;
    os << "revocation channel bytes: adversary-list=" << al_revocation_bytes
       << " crl-baseline=" << crl_revocation_bytes << "\n";
    os << "total channel bytes: adversary-list=" << al_total_bytes << " crl-baseline=" << crl_total_bytes
       << "\n";
    os << "byte ratio (crl/al): " << byte_ratio << "\n";
    os << "decrypt operations: adversary-list=" << al_decrypts << " crl-baseline=" << crl_decrypts << "\n";
    os << "time to isolation (al mode): " << al_time_to_isolation_ms << " ms\n";
    os << "adversary acceptances: adversary-list=" << al_adversary_acceptances
       << " crl-baseline=" << crl_adversary_acceptances << "\n";
    os << "adversary-list cheaper: " << (al_cheaper ? "yes" : "no") << "\n";
    if (degenerate_baseline) os << "note: degenerate baseline (empty CRL broadcast)\n";
    return os.str();
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "name,value,unit\n";
    os << "al_revocation_bytes," << al_revocation_bytes << ",B\n";
    os << "crl_revocation_bytes," << crl_revocation_bytes << ",B\n";
    os << "al_total_bytes," << al_total_bytes << ",B\n";
    os << "crl_total_bytes," << crl_total_bytes << ",B\n";
    os << "byte_ratio," << byte_ratio << ",x\n";
    os << "al_decrypts," << al_decrypts << ",ops\n";
    os << "crl_decrypts," << crl_decrypts << ",ops\n";
    os << "al_time_to_isolation_ms," << al_time_to_isolation_ms << ",ms\n";
    os << "al_adversary_acceptances," << al_adversary_acceptances << ",msgs\n";
    os << "crl_adversary_acceptances," << crl_adversary_acceptances << ",msgs\n";
    os << "al_cheaper," << (al_cheaper ? 1 : 0) << ",bool\n";
    os << "degenerate_baseline," << (degenerate_baseline ? 1 : 0) << ",bool\n";
    return os.str();
  }
};

inline Result<CompareReport> compare(const Metrics& al, const Metrics& crl) {
  if (al.mode != "adversary_list" || crl.mode != "crl_baseline")
    return err(Errc::incomparable_runs, "expected one adversary_list run and one crl_baseline run");
  if (al.scenario_digest != crl.scenario_digest)
    return err(Errc::incomparable_runs, "runs used different traffic scenarios");
  CompareReport r;
  r.al_total_bytes = al.total_channel_bytes;
  r.crl_total_bytes = crl.total_channel_bytes;
  r.al_revocation_bytes = al.revocation_bytes();
  r.crl_revocation_bytes = crl.revocation_bytes();
  r.byte_ratio = r.al_revocation_bytes == 0
                     ? 0.0
                     : static_cast<double>(r.crl_revocation_bytes) / static_cast<double>(r.al_revocation_bytes);
  r.al_decrypts = al.total_decrypt_count;
  r.crl_decrypts = crl.total_decrypt_count;
  r.al_time_to_isolation_ms = al.time_to_isolation_ms;
  r.al_adversary_acceptances = al.acceptance_of_adversary_count;
  r.crl_adversary_acceptances = crl.acceptance_of_adversary_count;
  r.al_cheaper = r.al_revocation_bytes < r.crl_revocation_bytes;
  r.degenerate_baseline = crl.crl_broadcasts > 0 && crl.channel_bytes.count("crl") &&
                          crl.channel_bytes.at("crl") / std::max<std::uint64_t>(crl.crl_broadcasts, 1) <= 6;
  return r;
}

}  // namespace vcm::sim
