#include "vpnsim/types.hpp"

#include <cstdio>

namespace vpnsim {

std::string format_addr(Addr a) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (a >> 24) & 0xff,
                (a >> 16) & 0xff, (a >> 8) & 0xff, a & 0xff);
  return buf;
}

std::string format_endpoint(const Endpoint& e) {
  return format_addr(e.addr) + ":" + std::to_string(e.port);
}

std::string format_flags(uint8_t flags) {
  std::string s;
  if (flags & tcpflag::Syn) s += 'S';
  if (flags & tcpflag::Ack) s += 'A';
  if (flags & tcpflag::Rst) s += 'R';
  if (flags & tcpflag::Psh) s += 'P';
  if (flags & tcpflag::Fin) s += 'F';
  if (s.empty()) s = "-";
  return s;
}

std::string packet_summary(const Packet& p) {
  std::string s = (p.proto == Protocol::Tcp) ? "tcp " : "udp ";
  s += format_endpoint(p.src) + ">" + format_endpoint(p.dst);
  s += " ttl=" + std::to_string(p.ttl);
  if (p.tcp) {
    s += " flags=" + format_flags(p.tcp->flags);
    s += " seq=" + std::to_string(p.tcp->seq);
    s += " ack=" + std::to_string(p.tcp->ack);
    s += " len=" + std::to_string(p.tcp->payload_len());
  } else if (p.udp) {
    if (p.udp->dns) {
      s += p.udp->dns->is_response ? " dns_r" : " dns_q";
      s += " txid=" + std::to_string(p.udp->dns->txid);
      s += " q=" + p.udp->dns->qname;
    } else {
      s += " len=" + std::to_string(p.udp->payload.size());
    }
  }
  return s;
}

}  // namespace vpnsim
