#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace vpnsim {

using Addr = uint32_t;  // 32-bit host identifier, dotted-quad in traces
using Port = uint16_t;

struct Endpoint {
  Addr addr = 0;
  Port port = 0;

  bool operator==(const Endpoint&) const = default;
};

enum class Protocol : uint8_t { Tcp, Udp };

namespace tcpflag {
constexpr uint8_t Syn = 0x01;
constexpr uint8_t Ack = 0x02;
constexpr uint8_t Rst = 0x04;
constexpr uint8_t Psh = 0x08;
constexpr uint8_t Fin = 0x10;
}  // namespace tcpflag

struct TcpSegment {
  uint8_t flags = 0;
  uint32_t seq = 0;
  uint32_t ack = 0;
  std::string payload;

  bool has(uint8_t f) const { return (flags & f) != 0; }
  uint32_t payload_len() const { return static_cast<uint32_t>(payload.size()); }
};

struct DnsMessage {
  uint16_t txid = 0;
  std::string qname;
  bool is_response = false;
  Addr answer = 0;      // responses only; 0 = empty answer (zone miss)
  uint32_t ttl_s = 60;
};

struct UdpDatagram {
  std::string payload;            // opaque bytes when not DNS
  std::optional<DnsMessage> dns;
};

struct Packet {
  Endpoint src;
  Endpoint dst;
  uint8_t ttl = 64;
  Protocol proto = Protocol::Tcp;
  std::optional<TcpSegment> tcp;
  std::optional<UdpDatagram> udp;
  bool via_tunnel = false;
};

inline Packet make_tcp(Endpoint src, Endpoint dst, uint8_t flags, uint32_t seq,
                       uint32_t ack, std::string payload = {}, uint8_t ttl = 64) {
  Packet p;
  p.src = src;
  p.dst = dst;
  p.ttl = ttl;
  p.proto = Protocol::Tcp;
  p.tcp = TcpSegment{flags, seq, ack, std::move(payload)};
  return p;
}

inline Packet make_udp(Endpoint src, Endpoint dst, std::string payload,
                       uint8_t ttl = 64) {
  Packet p;
  p.src = src;
  p.dst = dst;
  p.ttl = ttl;
  p.proto = Protocol::Udp;
  p.udp = UdpDatagram{std::move(payload), std::nullopt};
  return p;
}

inline Packet make_dns(Endpoint src, Endpoint dst, DnsMessage msg, uint8_t ttl = 64) {
  Packet p;
  p.src = src;
  p.dst = dst;
  p.ttl = ttl;
  p.proto = Protocol::Udp;
  p.udp = UdpDatagram{{}, std::move(msg)};
  return p;
}

std::string format_addr(Addr a);
std::string format_endpoint(const Endpoint& e);
std::string format_flags(uint8_t flags);
std::string packet_summary(const Packet& p);

// TCP sequence space wraps; distances are modular.
inline bool seq_in_window(uint32_t seq, uint32_t expected, uint32_t window) {
  const uint32_t d = seq - expected;
  return d < window || (0u - d) < window;
}

}  // namespace vpnsim
