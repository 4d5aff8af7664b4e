#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "vpnsim/rng.hpp"
#include "vpnsim/types.hpp"

namespace vpnsim {

class Simulation;

using HostId = uint32_t;

class Host {
public:
  virtual ~Host() = default;
  virtual void on_packet(Simulation& sim, const Packet& pkt) = 0;
  virtual void on_timer(Simulation& sim, uint64_t tag) { (void)sim; (void)tag; }

  HostId id = 0;
  std::string name;
};

enum class PathKind : uint8_t { Tunnel, Direct };

struct Route {
  uint32_t hops = 1;      // TTL units consumed end to end
  double latency_s = 0;
};

// Deterministic discrete-event network. Events run in (time, insertion)
// order; identical (config, seed) gives bit-identical traces.
class Simulation {
public:
  explicit Simulation(uint64_t seed) : seed_(seed) {}

  HostId add_host(std::unique_ptr<Host> host, const std::string& name);
  Host& host(HostId id) { return *hosts_[id]; }
  template <typename T>
  T& host_as(HostId id) { return static_cast<T&>(*hosts_[id]); }

  void register_wire_addr(Addr addr, HostId id) { wire_addrs_[addr] = id; }
  HostId find_wire_host(Addr addr) const;  // returns kNoHost when unroutable
  static constexpr HostId kNoHost = UINT32_MAX;

  void add_route(HostId from, HostId to, uint32_t hops, double latency_s);
  const Route* route(HostId from, HostId to) const;

  double now() const { return now_; }
  uint64_t seed() const { return seed_; }
  Rng& rng(const std::string& stream);

  // Sends from a host. Tunnel packets carry the sender's VPN-assigned
  // internal source address regardless of pkt.src (set by the gateway at
  // attach time); Direct packets keep pkt.src verbatim, spoofed or not.
  // The tunnel consumes one TTL unit, a wire route consumes its hop count.
  void send(HostId origin, Packet pkt, PathKind path);
  // Deferred send, used by paced attack loops.
  void send_at(double t, HostId origin, Packet pkt, PathKind path);

  // Forwarding helpers for the gateway: deliver into a tunnel (one hop) or
  // onto the wire (route by destination address).
  void forward_tunnel(HostId gateway, HostId client, Packet pkt);
  void forward_wire(HostId gateway, Packet pkt);

  void schedule_timer(double at, HostId host, uint64_t tag);

  // Runs all events with at <= t_end, then advances the clock to t_end.
  // Returns the number of events executed.
  uint64_t run_until(double t_end);

  void set_tunnel_endpoint(HostId client, Addr internal_addr, HostId gateway);
  Addr internal_addr_of(HostId client) const;

  void set_drop_probability(double p) { drop_probability_ = p; }

  void enable_trace() { trace_enabled_ = true; }
  bool trace_enabled() const { return trace_enabled_; }
  const std::string& trace_text() const { return trace_; }
  void trace(const std::string& host, const std::string& verb,
             const std::string& detail);

  // Called whenever the clock moves; the gateway hooks its expiry sweep here.
  std::function<void(double)> on_clock_advance;

  uint64_t events_executed() const { return events_executed_; }

private:
  struct Event {
    double at;
    uint64_t seq;
    enum class Kind : uint8_t { Deliver, Timer, Send } kind;
    Packet pkt;
    HostId host = 0;
    uint64_t tag = 0;
    PathKind path = PathKind::Direct;
    bool operator>(const Event& o) const {
      return std::tie(at, seq) > std::tie(o.at, o.seq);
    }
  };

  void do_send(HostId origin, Packet& pkt, PathKind path);
  void deliver_leg(HostId from, HostId to, Packet pkt, uint32_t hops,
                   double latency, bool wire_leg);
  void advance_clock(double t);

  uint64_t seed_;
  double now_ = 0;
  uint64_t event_seq_ = 0;
  uint64_t events_executed_ = 0;
  double drop_probability_ = 0;
  std::vector<std::unique_ptr<Host>> hosts_;
  std::unordered_map<Addr, HostId> wire_addrs_;
  std::map<std::pair<HostId, HostId>, Route> routes_;
  std::map<std::string, Rng> rngs_;
  std::unordered_map<HostId, std::pair<Addr, HostId>> tunnels_;  // client -> (addr, gw)
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  bool trace_enabled_ = false;
  std::string trace_;
};

}  // namespace vpnsim
