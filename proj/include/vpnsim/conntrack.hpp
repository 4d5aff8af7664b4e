#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <unordered_map>
#include <vector>

#include "vpnsim/profile.hpp"
#include "vpnsim/rng.hpp"
#include "vpnsim/types.hpp"

namespace vpnsim {

enum class TcpConnState : uint8_t { SynSent, Established, Close };

const char* state_name(TcpConnState s);

struct SessionKey {
  Protocol proto = Protocol::Tcp;
  Endpoint internal;    // client side of the mapping
  Endpoint translated;  // gateway public side; translated.addr = public addr
  Endpoint remote;      // target server side
};

// Bidirectional sequence bookkeeping. out_* tracks the internal client's
// segments, in_* the remote's. The expected sequence for an inbound RST is
// the opposite direction's last ACK (the next byte the remote would send).
struct SeqTrack {
  uint32_t out_seq = 0;
  uint32_t out_ack = 0;
  uint32_t in_seq = 0;
  uint32_t in_ack = 0;
};

struct SessionEntry {
  SessionKey key;
  TcpConnState state = TcpConnState::SynSent;  // TCP only; UDP is stateless
  double created = 0;
  double expiry = 0;
  SeqTrack seq;
  bool synack_seen = false;
  bool challenge_armed = false;  // in-window RST seen, awaiting challenge ACK
  bool loose = false;            // instantiated from a mid-stream packet
  uint64_t heap_gen = 0;
};

enum class Direction : uint8_t { Outbound, Inbound };

struct AllocResult {
  enum class Status : uint8_t { Ok, Exhausted, BypassNat, ConnLimit };
  Status status = Status::Ok;
  Port port = 0;
};

struct CreateResult {
  enum class Status : uint8_t { Ok, TableFull, ConnLimit };
  Status status = Status::Ok;
  SessionEntry* entry = nullptr;
};

struct SegmentResult {
  bool state_changed = false;
  bool challenge_restored = false;
  TcpConnState old_state = TcpConnState::SynSent;
  double old_expiry = 0;
  double new_expiry = 0;
};

enum class RstAction : uint8_t { Ignored, TimeoutReduced, Closed };

struct RstResult {
  RstAction action = RstAction::Ignored;
  bool challenge_ack_armed = false;
  double old_expiry = 0;
  double new_expiry = 0;
};

// The shared connection-tracking table of one gateway. Single-writer: owned
// by a simulation, mutated only through these operations.
class ConnTable {
public:
  explicit ConnTable(Addr public_addr) : public_addr_(public_addr) {}

  // Picks the public-side port for a new mapping. Preservation keeps the
  // client's port when (proto, port, remote) is free and otherwise falls
  // back to a random free port in the fallback range; Random always draws
  // from the profile range. When no port can be found the result is
  // Exhausted or BypassNat depending on the profile.
  AllocResult allocate_port(Protocol proto, const Endpoint& internal,
                            const Endpoint& remote, const FrameworkProfile& profile,
                            Rng& rng) const;

  CreateResult create_entry(const SessionKey& key, TcpConnState initial_state,
                            double now, const FrameworkProfile& profile,
                            bool loose = false);

  // Expired entries are treated as absent and removed.
  SessionEntry* lookup_outbound(Protocol proto, const Endpoint& internal,
                                const Endpoint& remote, double now);
  SessionEntry* lookup_inbound(Protocol proto, Port translated_port,
                               const Endpoint& remote, double now);

  // Non-RST traffic: drives SYN_SENT -> ESTABLISHED, refreshes timeouts,
  // updates sequence tracking. A pure ACK on a challenge-armed entry is the
  // challenge ACK and restores the long timeout.
  SegmentResult handle_segment(SessionEntry& entry, const Packet& pkt,
                               Direction dir, const FrameworkProfile& profile,
                               double now);

  RstResult handle_rst(SessionEntry& entry, const Packet& rst, Direction dir,
                       const FrameworkProfile& profile, double now);

  // No-op unless the entry was armed by an in-window RST.
  bool on_challenge_ack(SessionEntry& entry, const FrameworkProfile& profile,
                        double now);

  // Removes every entry with expiry <= now; returns their keys in expiry
  // order (insertion order breaking ties).
  std::vector<SessionKey> expire_sweep(double now);

  void remove_entry(const SessionEntry& entry);

  size_t live_count() const { return wire_.size(); }
  bool wire_port_free(Protocol proto, Port port, const Endpoint& remote) const;
  uint32_t occupied_in_range(Protocol proto, const Endpoint& remote, Port lo,
                             Port hi) const;
  uint64_t live_count_for_client(Addr internal_addr, const Endpoint& remote) const;
  Addr public_addr() const { return public_addr_; }

  static uint32_t expected_rst_seq(const SessionEntry& entry, Direction dir);

  // Live entries ordered by wire port; test/inspection helper.
  std::vector<const SessionEntry*> snapshot() const;

private:
  struct WireKey {
    Protocol proto;
    Port port;
    Addr raddr;
    Port rport;
    bool operator==(const WireKey&) const = default;
  };
  struct WireKeyHash {
    size_t operator()(const WireKey& k) const {
      uint64_t h = 0xcbf29ce484222325ULL;
      auto mix = [&h](uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
      };
      mix(static_cast<uint64_t>(k.proto));
      mix(k.port);
      mix(k.raddr);
      mix(k.rport);
      return static_cast<size_t>(h);
    }
  };
  struct IntKey {
    Protocol proto;
    Addr iaddr;
    Port iport;
    Addr raddr;
    Port rport;
    bool operator==(const IntKey&) const = default;
  };
  struct IntKeyHash {
    size_t operator()(const IntKey& k) const {
      uint64_t h = 0xcbf29ce484222325ULL;
      auto mix = [&h](uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
      };
      mix(static_cast<uint64_t>(k.proto));
      mix(k.iaddr);
      mix(k.iport);
      mix(k.raddr);
      mix(k.rport);
      return static_cast<size_t>(h);
    }
  };
  struct RemoteKey {
    Protocol proto;
    Addr raddr;
    Port rport;
    bool operator<(const RemoteKey& o) const {
      return std::tie(proto, raddr, rport) < std::tie(o.proto, o.raddr, o.rport);
    }
  };
  // Port occupancy per (proto, remote), with cached counts for the port
  // ranges allocation cares about.
  struct RemoteOccupancy {
    std::set<Port> used;
    mutable std::map<std::pair<Port, Port>, uint32_t> range_counts;
  };
  struct HeapNode {
    double expiry;
    uint64_t gen;
    WireKey key;
    bool operator>(const HeapNode& o) const {
      return std::tie(expiry, gen) > std::tie(o.expiry, o.gen);
    }
  };

  static WireKey wire_key(const SessionKey& k) {
    return {k.proto, k.translated.port, k.remote.addr, k.remote.port};
  }
  static IntKey int_key(const SessionKey& k) {
    return {k.proto, k.internal.addr, k.internal.port, k.remote.addr, k.remote.port};
  }

  bool expired(const SessionEntry& e, double now) const { return e.expiry <= now; }
  void set_expiry(SessionEntry& e, double expiry);
  void note_segment(SessionEntry& e, const TcpSegment& seg, Direction dir);
  AllocResult pick_random_free(Protocol proto, const Endpoint& remote, Port lo,
                               Port hi, uint32_t attempts, Rng& rng) const;
  uint32_t range_count(const RemoteOccupancy& occ, Port lo, Port hi) const;
  void occupancy_insert(const SessionKey& k);
  void occupancy_erase(const SessionKey& k);

  Addr public_addr_;
  std::unordered_map<WireKey, SessionEntry, WireKeyHash> wire_;
  std::unordered_map<IntKey, WireKey, IntKeyHash> internal_;
  std::map<RemoteKey, RemoteOccupancy> occupancy_;
  std::map<std::pair<Addr, uint64_t>, uint64_t> per_dst_count_;
  std::priority_queue<HeapNode, std::vector<HeapNode>, std::greater<HeapNode>> heap_;
  uint64_t gen_counter_ = 0;
};

}  // namespace vpnsim
