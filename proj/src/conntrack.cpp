#include "vpnsim/conntrack.hpp"

#include <algorithm>
#include <stdexcept>

namespace vpnsim {

const char* state_name(TcpConnState s) {
  switch (s) {
    case TcpConnState::SynSent: return "syn_sent";
    case TcpConnState::Established: return "established";
    case TcpConnState::Close: return "close";
  }
  return "?";
}

uint32_t ConnTable::range_count(const RemoteOccupancy& occ, Port lo, Port hi) const {
  auto it = occ.range_counts.find({lo, hi});
  if (it != occ.range_counts.end()) return it->second;
  uint32_t n = 0;
  for (auto p = occ.used.lower_bound(lo); p != occ.used.end() && *p <= hi; ++p) ++n;
  occ.range_counts[{lo, hi}] = n;
  return n;
}

void ConnTable::occupancy_insert(const SessionKey& k) {
  auto& occ = occupancy_[{k.proto, k.remote.addr, k.remote.port}];
  occ.used.insert(k.translated.port);
  for (auto& [range, count] : occ.range_counts) {
    if (k.translated.port >= range.first && k.translated.port <= range.second)
      ++count;
  }
  uint64_t dst = (static_cast<uint64_t>(k.remote.addr) << 16) | k.remote.port;
  ++per_dst_count_[{k.internal.addr, dst}];
}

void ConnTable::occupancy_erase(const SessionKey& k) {
  auto it = occupancy_.find({k.proto, k.remote.addr, k.remote.port});
  if (it != occupancy_.end()) {
    it->second.used.erase(k.translated.port);
    for (auto& [range, count] : it->second.range_counts) {
      if (k.translated.port >= range.first && k.translated.port <= range.second)
        --count;
    }
  }
  uint64_t dst = (static_cast<uint64_t>(k.remote.addr) << 16) | k.remote.port;
  auto cit = per_dst_count_.find({k.internal.addr, dst});
  if (cit != per_dst_count_.end() && --cit->second == 0) per_dst_count_.erase(cit);
}

bool ConnTable::wire_port_free(Protocol proto, Port port,
                               const Endpoint& remote) const {
  return !wire_.count(WireKey{proto, port, remote.addr, remote.port});
}

uint32_t ConnTable::occupied_in_range(Protocol proto, const Endpoint& remote,
                                      Port lo, Port hi) const {
  auto it = occupancy_.find({proto, remote.addr, remote.port});
  if (it == occupancy_.end()) return 0;
  return range_count(it->second, lo, hi);
}

uint64_t ConnTable::live_count_for_client(Addr internal_addr,
                                          const Endpoint& remote) const {
  uint64_t dst = (static_cast<uint64_t>(remote.addr) << 16) | remote.port;
  auto it = per_dst_count_.find({internal_addr, dst});
  return it == per_dst_count_.end() ? 0 : it->second;
}

AllocResult ConnTable::pick_random_free(Protocol proto, const Endpoint& remote,
                                        Port lo, Port hi, uint32_t attempts,
                                        Rng& rng) const {
  const uint32_t range_size = static_cast<uint32_t>(hi) - lo + 1;
  if (attempts > 0) {
    // Bounded probing: candidates are independent uniform draws; give up
    // after `attempts` collisions even if free ports remain.
    for (uint32_t i = 0; i < attempts; ++i) {
      Port cand = rng.uniform_port(lo, hi);
      if (wire_port_free(proto, cand, remote))
        return {AllocResult::Status::Ok, cand};
    }
    return {AllocResult::Status::Exhausted, 0};
  }
  // Exhaustive: fail only when the range is literally full.
  auto it = occupancy_.find({proto, remote.addr, remote.port});
  if (it != occupancy_.end() && range_count(it->second, lo, hi) >= range_size)
    return {AllocResult::Status::Exhausted, 0};
  for (uint64_t i = 0; i < 100000000ULL; ++i) {
    Port cand = rng.uniform_port(lo, hi);
    if (wire_port_free(proto, cand, remote))
      return {AllocResult::Status::Ok, cand};
  }
  throw std::runtime_error("port allocation failed to terminate");
}

AllocResult ConnTable::allocate_port(Protocol proto, const Endpoint& internal,
                                     const Endpoint& remote,
                                     const FrameworkProfile& profile,
                                     Rng& rng) const {
  AllocResult r;
  if (profile.allocation.mode == AllocationMode::Preservation) {
    if (wire_port_free(proto, internal.port, remote))
      return {AllocResult::Status::Ok, internal.port};
    r = pick_random_free(proto, remote, profile.fallback_lo, profile.fallback_hi,
                         profile.alloc_attempts, rng);
  } else {
    r = pick_random_free(proto, remote, profile.allocation.random_lo,
                         profile.allocation.random_hi, profile.alloc_attempts, rng);
  }
  if (r.status == AllocResult::Status::Exhausted &&
      profile.exhaustion == ExhaustionBehavior::BypassNat)
    r.status = AllocResult::Status::BypassNat;
  return r;
}

void ConnTable::set_expiry(SessionEntry& e, double expiry) {
  e.expiry = expiry;
  e.heap_gen = ++gen_counter_;
  heap_.push({expiry, e.heap_gen, wire_key(e.key)});
}

CreateResult ConnTable::create_entry(const SessionKey& key,
                                     TcpConnState initial_state, double now,
                                     const FrameworkProfile& profile, bool loose) {
  if (profile.table_limit > 0 && wire_.size() >= profile.table_limit)
    return {CreateResult::Status::TableFull, nullptr};
  if (profile.per_dst_limit > 0 &&
      live_count_for_client(key.internal.addr, key.remote) >= profile.per_dst_limit)
    return {CreateResult::Status::ConnLimit, nullptr};

  SessionEntry e;
  e.key = key;
  e.state = initial_state;
  e.created = now;
  e.loose = loose;
  if (loose) e.synack_seen = true;

  double timeout;
  if (key.proto == Protocol::Udp) {
    timeout = profile.udp_s;
  } else if (loose) {
    timeout = profile.loose_established_s;
  } else {
    switch (initial_state) {
      case TcpConnState::SynSent: timeout = profile.syn_sent_s; break;
      case TcpConnState::Established: timeout = profile.established_s; break;
      case TcpConnState::Close: timeout = profile.close_s; break;
      default: timeout = profile.syn_sent_s; break;
    }
  }

  auto [it, inserted] = wire_.emplace(wire_key(key), std::move(e));
  if (!inserted)
    throw std::runtime_error("NAT uniqueness violated: duplicate wire tuple");
  internal_[int_key(key)] = wire_key(key);
  occupancy_insert(key);
  set_expiry(it->second, now + timeout);
  return {CreateResult::Status::Ok, &it->second};
}

void ConnTable::remove_entry(const SessionEntry& entry) {
  occupancy_erase(entry.key);
  internal_.erase(int_key(entry.key));
  wire_.erase(wire_key(entry.key));
}

SessionEntry* ConnTable::lookup_outbound(Protocol proto, const Endpoint& internal,
                                         const Endpoint& remote, double now) {
  auto it = internal_.find(IntKey{proto, internal.addr, internal.port, remote.addr,
                                  remote.port});
  if (it == internal_.end()) return nullptr;
  auto wit = wire_.find(it->second);
  if (wit == wire_.end()) return nullptr;
  if (expired(wit->second, now)) {
    remove_entry(wit->second);
    return nullptr;
  }
  return &wit->second;
}

SessionEntry* ConnTable::lookup_inbound(Protocol proto, Port translated_port,
                                        const Endpoint& remote, double now) {
  auto wit = wire_.find(WireKey{proto, translated_port, remote.addr, remote.port});
  if (wit == wire_.end()) return nullptr;
  if (expired(wit->second, now)) {
    remove_entry(wit->second);
    return nullptr;
  }
  return &wit->second;
}

void ConnTable::note_segment(SessionEntry& e, const TcpSegment& seg, Direction dir) {
  uint32_t advance = seg.payload_len();
  if (seg.has(tcpflag::Syn) || seg.has(tcpflag::Fin)) ++advance;
  if (dir == Direction::Outbound) {
    e.seq.out_seq = seg.seq + advance;
    if (seg.has(tcpflag::Ack)) e.seq.out_ack = seg.ack;
  } else {
    e.seq.in_seq = seg.seq + advance;
    if (seg.has(tcpflag::Ack)) e.seq.in_ack = seg.ack;
  }
}

SegmentResult ConnTable::handle_segment(SessionEntry& entry, const Packet& pkt,
                                        Direction dir,
                                        const FrameworkProfile& profile,
                                        double now) {
  SegmentResult r;
  r.old_state = entry.state;
  r.old_expiry = entry.expiry;
  r.new_expiry = entry.expiry;

  if (entry.key.proto == Protocol::Udp) {
    set_expiry(entry, now + profile.udp_s);
    r.new_expiry = entry.expiry;
    return r;
  }
  const TcpSegment& seg = *pkt.tcp;

  switch (entry.state) {
    case TcpConnState::SynSent:
      if (dir == Direction::Inbound && seg.has(tcpflag::Syn) &&
          seg.has(tcpflag::Ack)) {
        entry.synack_seen = true;
        set_expiry(entry, now + profile.syn_sent_s);
      } else if (dir == Direction::Outbound && entry.synack_seen &&
                 seg.has(tcpflag::Ack) && !seg.has(tcpflag::Syn)) {
        entry.state = TcpConnState::Established;
        set_expiry(entry, now + profile.established_s);
        r.state_changed = true;
      } else if (dir == Direction::Outbound && seg.has(tcpflag::Syn)) {
        set_expiry(entry, now + profile.syn_sent_s);  // retransmitted SYN
      }
      break;
    case TcpConnState::Established: {
      const bool pure_ack = seg.flags == tcpflag::Ack && seg.payload.empty();
      if (dir == Direction::Outbound && entry.challenge_armed && pure_ack) {
        on_challenge_ack(entry, profile, now);
        r.challenge_restored = true;
      } else {
        if (dir == Direction::Outbound) entry.challenge_armed = false;
        set_expiry(entry, now + profile.established_s);
      }
      break;
    }
    case TcpConnState::Close:
      break;  // mapping persists until expiry, no transitions out
  }
  note_segment(entry, seg, dir);
  r.new_expiry = entry.expiry;
  return r;
}

uint32_t ConnTable::expected_rst_seq(const SessionEntry& entry, Direction dir) {
  return dir == Direction::Inbound ? entry.seq.out_ack : entry.seq.in_ack;
}

RstResult ConnTable::handle_rst(SessionEntry& entry, const Packet& rst,
                                Direction dir, const FrameworkProfile& profile,
                                double now) {
  RstResult r;
  r.old_expiry = entry.expiry;
  r.new_expiry = entry.expiry;
  const uint32_t seq = rst.tcp->seq;
  const uint32_t expected = expected_rst_seq(entry, dir);

  switch (profile.rst.check) {
    case RstCheck::NoCheck:
      entry.state = TcpConnState::Close;
      set_expiry(entry, now + profile.close_s);
      r.action = RstAction::Closed;
      break;
    case RstCheck::InWindow:
      if (seq_in_window(seq, expected, profile.rst.window)) {
        entry.challenge_armed = true;
        set_expiry(entry, now + profile.rst.reduced_timeout_s);
        r.action = RstAction::TimeoutReduced;
        r.challenge_ack_armed = true;
      }
      break;
    case RstCheck::Strict:
      if (seq == expected) {
        entry.state = TcpConnState::Close;
        set_expiry(entry, now + profile.close_s);
        r.action = RstAction::Closed;
      }
      break;
  }
  r.new_expiry = entry.expiry;
  return r;
}

bool ConnTable::on_challenge_ack(SessionEntry& entry,
                                 const FrameworkProfile& profile, double now) {
  if (!entry.challenge_armed) return false;
  entry.challenge_armed = false;
  set_expiry(entry, now + profile.rst.restore_timeout_s);
  return true;
}

std::vector<SessionKey> ConnTable::expire_sweep(double now) {
  std::vector<SessionKey> removed;
  while (!heap_.empty() && heap_.top().expiry <= now) {
    HeapNode node = heap_.top();
    heap_.pop();
    auto it = wire_.find(node.key);
    if (it == wire_.end() || it->second.heap_gen != node.gen) continue;  // stale
    removed.push_back(it->second.key);
    remove_entry(it->second);
  }
  return removed;
}

std::vector<const SessionEntry*> ConnTable::snapshot() const {
  std::vector<const SessionEntry*> out;
  out.reserve(wire_.size());
  for (const auto& [k, e] : wire_) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const SessionEntry* a, const SessionEntry* b) {
    return std::tie(a->key.translated.port, a->key.remote.addr,
                    a->key.remote.port) < std::tie(b->key.translated.port,
                                                   b->key.remote.addr,
                                                   b->key.remote.port);
  });
  return out;
}

}  // namespace vpnsim
