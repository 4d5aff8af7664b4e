#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vpnsim/netsim.hpp"
#include "vpnsim/types.hpp"

namespace vpnsim {

// Minimal per-connection TCP view of an endpoint stack: enough for
// handshakes, in-order data, duplicate ACKs and RFC 5961 challenge ACKs.
struct TcpLite {
  Port local_port = 0;
  Endpoint remote;
  uint32_t snd_nxt = 0;
  uint32_t rcv_nxt = 0;
  enum class State : uint8_t { SynSent, Established, Closed, Failed } state =
      State::SynSent;
  double connect_deadline = 0;
  uint32_t syn_retx_left = 0;
  double syn_retx_interval = 1.0;
  uint32_t isn = 0;
};

struct DnsQueryState {
  Port local_port = 0;
  uint16_t txid = 0;
  std::string qname;
  Endpoint resolver;
  double issued_at = 0;
  double deadline = 0;
  double retransmit_s = 0;
  enum class Outcome : uint8_t { Outstanding, Accepted, Expired } outcome =
      Outcome::Outstanding;
  Addr accepted_answer = 0;
  double accepted_at = 0;
  uint32_t ignored_txid = 0;  // responses discarded on txid mismatch
};

struct ClientBehavior {
  double request_interval_s = 0;  // 0 = one priming request, then idle
  double dns_query_timeout_s = 10;
  double dns_retransmit_s = 5;    // 0 = no retransmits
  Port ephemeral_lo = 32768;
  Port ephemeral_hi = 65535;
};

// A well-behaved VPN user: periodic application requests over open TCP
// sessions, DNS queries with a timeout, challenge ACKs on suspect segments.
class VictimClient : public Host {
public:
  explicit VictimClient(ClientBehavior behavior) : behavior(behavior) {}

  void on_packet(Simulation& sim, const Packet& pkt) override;
  void on_timer(Simulation& sim, uint64_t tag) override;

  // Active open toward `remote`; SYN retransmits until the deadline.
  // Returns the session index.
  size_t connect_to(Simulation& sim, const Endpoint& remote, double give_up_s = 30,
                    uint32_t syn_retries = 6);
  // One application request on an established session, right now.
  void send_request(Simulation& sim, size_t session);
  // Issues a DNS query with a fresh source port and random txid.
  size_t query_dns(Simulation& sim, const Endpoint& resolver,
                   const std::string& qname);

  ClientBehavior behavior;
  std::vector<TcpLite> sessions;
  std::vector<DnsQueryState> dns_queries;

  struct AcceptedData {
    double at;
    size_t session;
    std::string payload;
  };
  std::vector<AcceptedData> accepted;
  uint64_t challenge_acks_sent = 0;
  uint64_t rst_terminations = 0;
  uint64_t requests_sent = 0;

private:
  TcpLite* find_session(Port local, const Endpoint& remote);
  Port fresh_port(Simulation& sim);
  void emit(Simulation& sim, const TcpLite& s, uint8_t flags, uint32_t seq,
            uint32_t ack, std::string payload = {});
  void handle_tcp(Simulation& sim, const Packet& pkt);
  void handle_udp(Simulation& sim, const Packet& pkt);
};

// A public TCP service: ordinary handshakes, echoes a response for every
// in-order request, answers desynchronized segments with an exact-counter
// ACK, tears down on an exact-sequence RST.
class TargetServer : public Host {
public:
  explicit TargetServer(std::vector<Port> listen_ports)
      : listen_ports(std::move(listen_ports)) {}

  void on_packet(Simulation& sim, const Packet& pkt) override;

  struct Conn {
    uint32_t rcv_nxt = 0;
    uint32_t snd_nxt = 0;
    bool established = false;
  };

  // Ground truth for tests: the exact counters a hijacker must recover.
  const Conn* find_conn(const Endpoint& peer, Port local) const;

  std::vector<Port> listen_ports;
  uint64_t rst_teardowns = 0;
  uint64_t resets_sent = 0;   // RSTs to unknown tuples
  uint64_t requests_served = 0;

private:
  bool listening_on(Port p) const;
  std::map<std::tuple<Addr, Port, Port>, Conn> conns_;  // (peer addr, peer port, local)
};

struct ResolverBehavior {
  double response_delay_s = 0.05;
  bool muted = false;
  std::map<std::string, Addr> zone;
};

class DnsResolver : public Host {
public:
  explicit DnsResolver(ResolverBehavior behavior) : behavior(std::move(behavior)) {}

  void on_packet(Simulation& sim, const Packet& pkt) override;

  ResolverBehavior behavior;
  uint64_t queries_seen = 0;
};

}  // namespace vpnsim
