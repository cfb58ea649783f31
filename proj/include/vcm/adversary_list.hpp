#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vcm/result.hpp"

namespace vcm {

// One row of the per-vehicle adversary list. Field set matches the warning
// message: who warned, about whom, when, why, and the AC review date.
struct AdversaryListEntry {
  std::uint64_t warning_issuer_id = 0;
  std::uint64_t adversary_id = 0;
  std::uint64_t timestamp_ms = 0;
  std::uint8_t reason_code = 0;
  std::uint64_t review_date_s = 0;

  bool operator==(const AdversaryListEntry&) const = default;
};

// Bounded, recency-ordered local revocation memory. Newest entry sits at
// position 0; recording an already-listed adversary refreshes its fields and
// moves it to the top; a new entry on a full list evicts the last one.
// Entries also leave the list when their vehicle leaves the street. There is
// no expiry-based removal.
class AdversaryList {
 public:
  static constexpr std::size_t kDefaultCapacity = 10;

  explicit AdversaryList(std::size_t capacity = kDefaultCapacity) : capacity_(capacity) {}

  void record(const AdversaryListEntry& entry) {
    auto it = find(entry.adversary_id);
    if (it != entries_.end()) entries_.erase(it);
    if (entries_.size() >= capacity_ && capacity_ > 0) entries_.pop_back();
    if (capacity_ > 0) entries_.insert(entries_.begin(), entry);
  }

  bool contains(std::uint64_t vehicle_id) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const AdversaryListEntry& e) { return e.adversary_id == vehicle_id; });
  }

  Result<void> touch(std::uint64_t vehicle_id, std::uint64_t now_ms) {
    auto it = find(vehicle_id);
    if (it == entries_.end())
      return err(Errc::not_found, "vehicle " + std::to_string(vehicle_id) + " not in adversary list");
    AdversaryListEntry e = *it;
    e.timestamp_ms = now_ms;
    entries_.erase(it);
    entries_.insert(entries_.begin(), e);
    return {};
  }

  void purge_departed(std::span<const std::uint64_t> departed_ids) {
    std::erase_if(entries_, [&](const AdversaryListEntry& e) {
      return std::find(departed_ids.begin(), departed_ids.end(), e.adversary_id) != departed_ids.end();
    });
  }

  const std::vector<AdversaryListEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t capacity() const { return capacity_; }

  // CLI dump: one entry per line, `pos issuer adv ts reason review`, newest first.
  std::string dump() const {
    std::string out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      out += std::to_string(i) + " " + std::to_string(e.warning_issuer_id) + " " +
             std::to_string(e.adversary_id) + " " + std::to_string(e.timestamp_ms) + " " +
             std::to_string(e.reason_code) + " " + std::to_string(e.review_date_s) + "\n";
    }
    return out;
  }

 private:
  std::vector<AdversaryListEntry>::iterator find(std::uint64_t vehicle_id) {
    return std::find_if(entries_.begin(), entries_.end(),
                        [&](const AdversaryListEntry& e) { return e.adversary_id == vehicle_id; });
  }

  std::size_t capacity_;
  std::vector<AdversaryListEntry> entries_;  // newest first
};

}  // namespace vcm
