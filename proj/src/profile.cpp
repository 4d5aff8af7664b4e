#include "vpnsim/profile.hpp"

#include <cstdio>

namespace vpnsim {

namespace {

FrameworkProfile base_profile(const std::string& name) {
  FrameworkProfile p;
  p.name = name;
  return p;
}

std::vector<FrameworkProfile> build_all() {
  std::vector<FrameworkProfile> out;

  // Linux netfilter. In-window RST check with the challenge-ACK grace
  // period: an accepted RST keeps ESTABLISHED but drops the timeout to
  // 10 s; a challenge ACK restores 300 s. Random selection probes a
  // bounded number of candidates (the kernel gives up after a few probe
  // rounds), which is why its range resists exhaustion.
  {
    FrameworkProfile p = base_profile("netfilter_pre");
    p.allocation = {AllocationMode::Preservation, 1024, 65535};
    p.rst = {RstCheck::InWindow, 65536, 10, 300};
    p.syn_sent_s = 120;
    p.established_s = 432000;
    p.close_s = 10;
    p.udp_s = 30;
    p.loose_established_s = 300;
    p.alloc_attempts = 240;
    p.unverified = {"udp_s"};
    out.push_back(p);

    p.name = "netfilter_rand";
    p.allocation = {AllocationMode::Random, 1024, 65535};
    p.unverified = {"udp_s", "random_lo", "random_hi"};
    out.push_back(p);
  }

  // FreeBSD PF. No RST validation: any sequence number moves the entry to
  // CLOSE for 90 s. Random mode uses 50001-65535 and, once that range is
  // consumed, forwards packets untranslated (the NAT-bypass bug).
  {
    FrameworkProfile p = base_profile("pf_pre");
    p.allocation = {AllocationMode::Preservation, 50001, 65535};
    p.rst = {RstCheck::NoCheck, 0, 90, 90};
    p.close_s = 90;
    p.unverified = {"syn_sent_s", "established_s", "udp_s", "loose_established_s"};
    out.push_back(p);

    p.name = "pf_rand";
    p.allocation = {AllocationMode::Random, 50001, 65535};
    p.exhaustion = ExhaustionBehavior::BypassNat;
    out.push_back(p);
  }

  // FreeBSD IPFilter. No RST validation (CLOSE 60 s) but hard entry caps:
  // 30,000 under preservation, 256 under random selection.
  {
    FrameworkProfile p = base_profile("ipfilter_pre");
    p.allocation = {AllocationMode::Preservation, 32768, 65535};
    p.rst = {RstCheck::NoCheck, 0, 60, 60};
    p.close_s = 60;
    p.table_limit = 30000;
    p.unverified = {"syn_sent_s", "established_s", "udp_s", "loose_established_s"};
    out.push_back(p);

    p.name = "ipfilter_rand";
    p.allocation = {AllocationMode::Random, 32768, 65535};
    p.table_limit = 256;
    p.unverified.insert("random_lo");
    p.unverified.insert("random_hi");
    out.push_back(p);
  }

  // FreeBSD IPFW. Strict RST sequence validation, 16,384-entry cap.
  {
    FrameworkProfile p = base_profile("ipfw_pre");
    p.allocation = {AllocationMode::Preservation, 32768, 65535};
    p.rst = {RstCheck::Strict, 0, 30, 30};
    p.close_s = 30;
    p.table_limit = 16384;
    p.unverified = {"syn_sent_s", "established_s", "close_s", "udp_s",
                    "loose_established_s"};
    out.push_back(p);

    p.name = "ipfw_rand";
    p.allocation = {AllocationMode::Random, 32768, 65535};
    p.unverified.insert("random_lo");
    p.unverified.insert("random_hi");
    out.push_back(p);
  }

  // FreeBSD natd. Strict RST checks; random range 32768-65535; shares the
  // PF bug of emitting untranslated packets once allocation fails.
  {
    FrameworkProfile p = base_profile("natd_pre");
    p.allocation = {AllocationMode::Preservation, 32768, 65535};
    p.rst = {RstCheck::Strict, 0, 30, 30};
    p.close_s = 30;
    p.exhaustion = ExhaustionBehavior::BypassNat;
    p.unverified = {"syn_sent_s", "established_s", "close_s", "udp_s",
                    "loose_established_s"};
    out.push_back(p);

    p.name = "natd_rand";
    p.allocation = {AllocationMode::Random, 32768, 65535};
    out.push_back(p);
  }

  return out;
}

const char* alloc_name(AllocationMode m) {
  return m == AllocationMode::Preservation ? "preservation" : "random";
}

const char* check_name(RstCheck c) {
  switch (c) {
    case RstCheck::NoCheck: return "none";
    case RstCheck::InWindow: return "in_window";
    case RstCheck::Strict: return "strict";
  }
  return "?";
}

std::string fmt_seconds(double v) {
  char buf[32];
  if (v == static_cast<int64_t>(v))
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(v));
  else
    std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

const std::vector<FrameworkProfile>& builtin_profiles() {
  static const std::vector<FrameworkProfile> all = build_all();
  return all;
}

const FrameworkProfile* find_builtin(const std::string& name) {
  for (const auto& p : builtin_profiles()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

double FrameworkProfile::timeout_for_state_name(const std::string& which) const {
  if (which == "syn_sent") return syn_sent_s;
  if (which == "established") return established_s;
  if (which == "close") return close_s;
  if (which == "udp") return udp_s;
  if (which == "loose_established") return loose_established_s;
  return 0;
}

void FrameworkProfile::apply_override(const std::string& key,
                                      const std::string& value, int line) {
  auto touched = [&](const char* k) { unverified.erase(k); };
  if (key == "allocation") {
    if (value == "preservation") allocation.mode = AllocationMode::Preservation;
    else if (value == "random") allocation.mode = AllocationMode::Random;
    else throw ConfigError(line, "allocation must be preservation|random");
  } else if (key == "random_lo") {
    allocation.random_lo = static_cast<Port>(parse_int(value, line));
    touched("random_lo");
  } else if (key == "random_hi") {
    allocation.random_hi = static_cast<Port>(parse_int(value, line));
    touched("random_hi");
  } else if (key == "rst_check") {
    if (value == "none") rst.check = RstCheck::NoCheck;
    else if (value == "in_window") rst.check = RstCheck::InWindow;
    else if (value == "strict") rst.check = RstCheck::Strict;
    else throw ConfigError(line, "rst_check must be none|in_window|strict");
  } else if (key == "window") {
    rst.window = static_cast<uint32_t>(parse_int(value, line));
  } else if (key == "reduced_timeout_s") {
    rst.reduced_timeout_s = parse_double(value, line);
  } else if (key == "restore_timeout_s") {
    rst.restore_timeout_s = parse_double(value, line);
  } else if (key == "syn_sent_s") {
    syn_sent_s = parse_double(value, line);
    touched("syn_sent_s");
  } else if (key == "established_s") {
    established_s = parse_double(value, line);
    touched("established_s");
  } else if (key == "close_s") {
    close_s = parse_double(value, line);
    touched("close_s");
  } else if (key == "udp_s") {
    udp_s = parse_double(value, line);
    touched("udp_s");
  } else if (key == "loose_established_s") {
    loose_established_s = parse_double(value, line);
    touched("loose_established_s");
  } else if (key == "table_limit") {
    table_limit = static_cast<uint64_t>(parse_int(value, line));
  } else if (key == "per_dst_limit") {
    per_dst_limit = static_cast<uint64_t>(parse_int(value, line));
  } else if (key == "loose_instantiation") {
    loose_instantiation = parse_bool(value, line);
  } else if (key == "exhaustion") {
    if (value == "drop") exhaustion = ExhaustionBehavior::DropPacket;
    else if (value == "bypass_nat") exhaustion = ExhaustionBehavior::BypassNat;
    else throw ConfigError(line, "exhaustion must be drop|bypass_nat");
  } else if (key == "alloc_attempts") {
    alloc_attempts = static_cast<uint32_t>(parse_int(value, line));
  } else if (key == "fallback_lo") {
    fallback_lo = static_cast<Port>(parse_int(value, line));
  } else if (key == "fallback_hi") {
    fallback_hi = static_cast<Port>(parse_int(value, line));
  } else {
    throw ConfigError(line, "unknown profile key '" + key + "'");
  }
  if (allocation.random_lo > allocation.random_hi)
    throw ConfigError(line, "random_lo > random_hi");
  if (fallback_lo > fallback_hi) throw ConfigError(line, "fallback_lo > fallback_hi");
}

std::string dump_profile(const FrameworkProfile& p) {
  std::string s;
  auto emit = [&](const std::string& key, const std::string& value) {
    s += key + " = " + value;
    if (p.unverified.count(key)) s += "   # unverified default";
    s += "\n";
  };
  s += "[profile " + p.name + "]\n";
  emit("allocation", alloc_name(p.allocation.mode));
  emit("random_lo", std::to_string(p.allocation.random_lo));
  emit("random_hi", std::to_string(p.allocation.random_hi));
  emit("rst_check", check_name(p.rst.check));
  if (p.rst.check == RstCheck::InWindow) {
    emit("window", std::to_string(p.rst.window));
    emit("reduced_timeout_s", fmt_seconds(p.rst.reduced_timeout_s));
    emit("restore_timeout_s", fmt_seconds(p.rst.restore_timeout_s));
  }
  emit("syn_sent_s", fmt_seconds(p.syn_sent_s));
  emit("established_s", fmt_seconds(p.established_s));
  emit("close_s", fmt_seconds(p.close_s));
  emit("udp_s", fmt_seconds(p.udp_s));
  emit("loose_established_s", fmt_seconds(p.loose_established_s));
  emit("table_limit", std::to_string(p.table_limit));
  emit("per_dst_limit", std::to_string(p.per_dst_limit));
  emit("loose_instantiation", p.loose_instantiation ? "true" : "false");
  emit("exhaustion",
       p.exhaustion == ExhaustionBehavior::BypassNat ? "bypass_nat" : "drop");
  emit("alloc_attempts", std::to_string(p.alloc_attempts));
  emit("fallback_lo", std::to_string(p.fallback_lo));
  emit("fallback_hi", std::to_string(p.fallback_hi));
  return s;
}

FrameworkProfile profile_from_section(const ConfigSection& sec) {
  FrameworkProfile p;
  const auto* base = sec.find("profile");
  if (base) {
    const FrameworkProfile* b = find_builtin(base->value);
    if (!b) throw ConfigError(base->line, "unknown profile '" + base->value + "'");
    p = *b;
  }
  for (const auto& e : sec.entries) {
    if (e.key == "profile") continue;
    p.apply_override(e.key, e.value, e.line);
  }
  return p;
}

}  // namespace vpnsim
