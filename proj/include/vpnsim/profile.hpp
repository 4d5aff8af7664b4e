#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "vpnsim/config.hpp"
#include "vpnsim/types.hpp"

namespace vpnsim {

enum class AllocationMode : uint8_t { Preservation, Random };

struct PortAllocation {
  AllocationMode mode = AllocationMode::Preservation;
  // Random mode draws from [lo, hi]; Preservation falls back to the
  // profile's fallback range on collision.
  Port random_lo = 32768;
  Port random_hi = 65535;
};

enum class RstCheck : uint8_t { NoCheck, InWindow, Strict };

struct RstPolicy {
  RstCheck check = RstCheck::InWindow;
  uint32_t window = 65536;        // acceptance window around the expected seq
  double reduced_timeout_s = 10;  // InWindow: entry lingers this long
  double restore_timeout_s = 300; // InWindow: after the challenge ACK
};

enum class ExhaustionBehavior : uint8_t { DropPacket, BypassNat };

// One framework's connection-tracking behavior. The five shipped pairs
// (preservation/random each) mirror observed Linux and FreeBSD stacks.
struct FrameworkProfile {
  std::string name;
  PortAllocation allocation;
  RstPolicy rst;

  double syn_sent_s = 120;
  double established_s = 432000;
  double close_s = 10;
  double udp_s = 30;
  // Entries instantiated from mid-stream packets start with this timeout.
  double loose_established_s = 300;

  uint64_t table_limit = 0;     // 0 = unlimited
  uint64_t per_dst_limit = 0;   // 0 = off; max live entries per (client, remote)
  bool loose_instantiation = true;
  ExhaustionBehavior exhaustion = ExhaustionBehavior::DropPacket;

  // Random selection probes this many candidate ports before giving up;
  // 0 means exhaustive search (allocation fails only when the range is
  // literally full). Bounded probing is what makes a large random range
  // impractical to exhaust.
  uint32_t alloc_attempts = 0;

  // Preservation collision fallback range.
  Port fallback_lo = 32768;
  Port fallback_hi = 65535;

  // Keys whose values are defaults rather than verified behavior; flagged
  // in dumps so nobody mistakes them for ground truth.
  std::set<std::string> unverified;

  double timeout_for_state_name(const std::string& which) const;
  void apply_override(const std::string& key, const std::string& value, int line);
};

// The ten built-ins: netfilter/pf/ipfilter/ipfw/natd x preservation/random.
const std::vector<FrameworkProfile>& builtin_profiles();
const FrameworkProfile* find_builtin(const std::string& name);

// Canonical key=value dump, unverified defaults marked with a comment.
std::string dump_profile(const FrameworkProfile& p);

// Builds a profile from a config section: "profile = <base>" picks a
// built-in, remaining keys override fields.
FrameworkProfile profile_from_section(const ConfigSection& sec);

}  // namespace vpnsim
