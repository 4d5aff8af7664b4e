#include "vpnsim/endpoints.hpp"

#include <algorithm>

namespace vpnsim {

namespace {
constexpr uint64_t kTagRequest = 1ULL << 32;
constexpr uint64_t kTagSynRetx = 2ULL << 32;
constexpr uint64_t kTagConnectGiveUp = 3ULL << 32;
constexpr uint64_t kTagDnsRetx = 4ULL << 32;
constexpr uint64_t kTagDnsTimeout = 5ULL << 32;
constexpr uint64_t kTagMask = 0xffffffffULL;
}  // namespace

TcpLite* VictimClient::find_session(Port local, const Endpoint& remote) {
  for (auto& s : sessions) {
    if (s.local_port == local && s.remote == remote) return &s;
  }
  return nullptr;
}

Port VictimClient::fresh_port(Simulation& sim) {
  Rng& rng = sim.rng("client");
  for (;;) {
    Port p = rng.uniform_port(behavior.ephemeral_lo, behavior.ephemeral_hi);
    bool used = false;
    for (const auto& s : sessions) used |= (s.local_port == p);
    for (const auto& q : dns_queries) used |= (q.local_port == p);
    if (!used) return p;
  }
}

void VictimClient::emit(Simulation& sim, const TcpLite& s, uint8_t flags,
                        uint32_t seq, uint32_t ack, std::string payload) {
  Endpoint src{sim.internal_addr_of(id), s.local_port};
  sim.send(id, make_tcp(src, s.remote, flags, seq, ack, std::move(payload)),
           PathKind::Tunnel);
}

size_t VictimClient::connect_to(Simulation& sim, const Endpoint& remote,
                                double give_up_s, uint32_t syn_retries) {
  TcpLite s;
  s.local_port = fresh_port(sim);
  s.remote = remote;
  s.isn = sim.rng("client_isn").uniform_u32(0, 0xffffffff);
  s.snd_nxt = s.isn + 1;
  s.state = TcpLite::State::SynSent;
  s.connect_deadline = sim.now() + give_up_s;
  s.syn_retx_left = syn_retries;
  sessions.push_back(s);
  size_t idx = sessions.size() - 1;
  emit(sim, s, tcpflag::Syn, s.isn, 0);
  sim.schedule_timer(sim.now() + s.syn_retx_interval, id, kTagSynRetx | idx);
  sim.schedule_timer(s.connect_deadline, id, kTagConnectGiveUp | idx);
  return idx;
}

void VictimClient::send_request(Simulation& sim, size_t session) {
  TcpLite& s = sessions[session];
  if (s.state != TcpLite::State::Established) return;
  std::string payload = "req:" + std::to_string(requests_sent++);
  uint32_t seq = s.snd_nxt;
  s.snd_nxt += static_cast<uint32_t>(payload.size());
  emit(sim, s, tcpflag::Psh | tcpflag::Ack, seq, s.rcv_nxt, std::move(payload));
}

size_t VictimClient::query_dns(Simulation& sim, const Endpoint& resolver,
                               const std::string& qname) {
  DnsQueryState q;
  Rng& rng = sim.rng("client");
  q.local_port = fresh_port(sim);
  q.txid = static_cast<uint16_t>(rng.uniform_u32(0, 65535));
  q.qname = qname;
  q.resolver = resolver;
  q.issued_at = sim.now();
  q.deadline = sim.now() + behavior.dns_query_timeout_s;
  q.retransmit_s = behavior.dns_retransmit_s;
  dns_queries.push_back(q);
  size_t idx = dns_queries.size() - 1;

  Endpoint src{sim.internal_addr_of(id), q.local_port};
  DnsMessage msg{q.txid, qname, false, 0, 60};
  sim.send(id, make_dns(src, resolver, msg), PathKind::Tunnel);
  if (q.retransmit_s > 0)
    sim.schedule_timer(sim.now() + q.retransmit_s, id, kTagDnsRetx | idx);
  sim.schedule_timer(q.deadline, id, kTagDnsTimeout | idx);
  return idx;
}

void VictimClient::on_timer(Simulation& sim, uint64_t tag) {
  const uint64_t kind = tag & ~kTagMask;
  const size_t idx = static_cast<size_t>(tag & kTagMask);
  if (kind == kTagRequest) {
    if (!sessions.empty() && sessions[0].state == TcpLite::State::Established) {
      send_request(sim, 0);
      sim.schedule_timer(sim.now() + behavior.request_interval_s, id, kTagRequest);
    }
    return;
  }
  if (kind == kTagSynRetx) {
    TcpLite& s = sessions[idx];
    if (s.state == TcpLite::State::SynSent && s.syn_retx_left > 0 &&
        sim.now() < s.connect_deadline) {
      --s.syn_retx_left;
      emit(sim, s, tcpflag::Syn, s.isn, 0);
      s.syn_retx_interval *= 2;
      sim.schedule_timer(sim.now() + s.syn_retx_interval, id, kTagSynRetx | idx);
    }
    return;
  }
  if (kind == kTagConnectGiveUp) {
    TcpLite& s = sessions[idx];
    if (s.state == TcpLite::State::SynSent) s.state = TcpLite::State::Failed;
    return;
  }
  if (kind == kTagDnsRetx) {
    DnsQueryState& q = dns_queries[idx];
    if (q.outcome == DnsQueryState::Outcome::Outstanding && sim.now() < q.deadline) {
      Endpoint src{sim.internal_addr_of(id), q.local_port};
      DnsMessage msg{q.txid, q.qname, false, 0, 60};
      sim.send(id, make_dns(src, q.resolver, msg), PathKind::Tunnel);
      sim.schedule_timer(sim.now() + q.retransmit_s, id, kTagDnsRetx | idx);
    }
    return;
  }
  if (kind == kTagDnsTimeout) {
    DnsQueryState& q = dns_queries[idx];
    if (q.outcome == DnsQueryState::Outcome::Outstanding)
      q.outcome = DnsQueryState::Outcome::Expired;  // socket closed
    return;
  }
}

void VictimClient::handle_tcp(Simulation& sim, const Packet& pkt) {
  const TcpSegment& seg = *pkt.tcp;
  TcpLite* s = find_session(pkt.dst.port, pkt.src);
  if (!s || s->state == TcpLite::State::Closed ||
      s->state == TcpLite::State::Failed)
    return;

  if (s->state == TcpLite::State::SynSent) {
    if (seg.has(tcpflag::Syn) && seg.has(tcpflag::Ack) && seg.ack == s->snd_nxt) {
      s->rcv_nxt = seg.seq + 1;
      s->state = TcpLite::State::Established;
      emit(sim, *s, tcpflag::Ack, s->snd_nxt, s->rcv_nxt);
      // prime the session so both sides hold real counters
      send_request(sim, static_cast<size_t>(s - sessions.data()));
      if (behavior.request_interval_s > 0 && s == sessions.data())
        sim.schedule_timer(sim.now() + behavior.request_interval_s, id, kTagRequest);
    }
    return;
  }

  // established
  if (seg.has(tcpflag::Rst)) {
    if (seg.seq == s->rcv_nxt) {
      s->state = TcpLite::State::Closed;  // genuine reset
      ++rst_terminations;
    } else {
      ++challenge_acks_sent;  // RFC 5961: suspicious RST gets a challenge ACK
      emit(sim, *s, tcpflag::Ack, s->snd_nxt, s->rcv_nxt);
    }
    return;
  }
  if (seg.has(tcpflag::Syn)) {
    ++challenge_acks_sent;  // unexpected SYN on a live connection
    emit(sim, *s, tcpflag::Ack, s->snd_nxt, s->rcv_nxt);
    return;
  }
  if (!seg.payload.empty()) {
    if (seg.seq == s->rcv_nxt) {
      s->rcv_nxt += seg.payload_len();
      accepted.push_back({sim.now(), static_cast<size_t>(s - sessions.data()),
                          seg.payload});
      emit(sim, *s, tcpflag::Ack, s->snd_nxt, s->rcv_nxt);
    } else {
      emit(sim, *s, tcpflag::Ack, s->snd_nxt, s->rcv_nxt);  // duplicate ACK
    }
  }
}

void VictimClient::handle_udp(Simulation& sim, const Packet& pkt) {
  if (!pkt.udp->dns || !pkt.udp->dns->is_response) return;
  const DnsMessage& msg = *pkt.udp->dns;
  for (auto& q : dns_queries) {
    if (q.local_port != pkt.dst.port) continue;
    if (pkt.src != q.resolver) continue;
    if (q.outcome != DnsQueryState::Outcome::Outstanding) continue;
    if (sim.now() >= q.deadline) {
      q.outcome = DnsQueryState::Outcome::Expired;
      continue;
    }
    if (msg.txid != q.txid) {
      ++q.ignored_txid;
      continue;
    }
    q.outcome = DnsQueryState::Outcome::Accepted;  // first match wins
    q.accepted_answer = msg.answer;
    q.accepted_at = sim.now();
  }
}

void VictimClient::on_packet(Simulation& sim, const Packet& pkt) {
  if (pkt.proto == Protocol::Tcp)
    handle_tcp(sim, pkt);
  else
    handle_udp(sim, pkt);
}

bool TargetServer::listening_on(Port p) const {
  return std::find(listen_ports.begin(), listen_ports.end(), p) !=
         listen_ports.end();
}

const TargetServer::Conn* TargetServer::find_conn(const Endpoint& peer,
                                                  Port local) const {
  auto it = conns_.find({peer.addr, peer.port, local});
  return it == conns_.end() ? nullptr : &it->second;
}

void TargetServer::on_packet(Simulation& sim, const Packet& pkt) {
  if (pkt.proto != Protocol::Tcp) return;
  const TcpSegment& seg = *pkt.tcp;
  const Endpoint peer = pkt.src;
  const Port local = pkt.dst.port;
  auto reply = [&](uint8_t flags, uint32_t seq, uint32_t ack,
                   std::string payload = {}) {
    sim.send(id, make_tcp(pkt.dst, peer, flags, seq, ack, std::move(payload)),
             PathKind::Direct);
  };

  auto it = conns_.find({peer.addr, peer.port, local});

  if (seg.flags == tcpflag::Syn) {
    if (!listening_on(local)) {
      reply(tcpflag::Rst | tcpflag::Ack, 0, seg.seq + 1);
      return;
    }
    Conn c;
    c.rcv_nxt = seg.seq + 1;
    c.snd_nxt = sim.rng("server").uniform_u32(0, 0xffffffff);
    reply(tcpflag::Syn | tcpflag::Ack, c.snd_nxt, c.rcv_nxt);
    ++c.snd_nxt;  // SYN consumes one sequence number
    conns_[{peer.addr, peer.port, local}] = c;
    return;
  }

  if (it == conns_.end()) {
    // No such connection: reset, per classic stack behavior.
    ++resets_sent;
    uint32_t seq = seg.has(tcpflag::Ack) ? seg.ack : 0;
    reply(tcpflag::Rst | tcpflag::Ack, seq, seg.seq + seg.payload_len());
    return;
  }
  Conn& c = it->second;

  if (seg.has(tcpflag::Rst)) {
    if (seg.seq == c.rcv_nxt) {
      conns_.erase(it);
      ++rst_teardowns;
    }
    return;
  }
  if (!c.established) {
    if (seg.has(tcpflag::Ack) && seg.ack == c.snd_nxt) c.established = true;
  }
  if (!seg.payload.empty()) {
    if (seg.seq == c.rcv_nxt) {
      c.rcv_nxt += seg.payload_len();
      std::string resp = "RE:" + seg.payload;
      uint32_t seq = c.snd_nxt;
      c.snd_nxt += static_cast<uint32_t>(resp.size());
      ++requests_served;
      reply(tcpflag::Psh | tcpflag::Ack, seq, c.rcv_nxt, std::move(resp));
    } else {
      // Out-of-sync segment: pure ACK carrying the exact expected counters.
      reply(tcpflag::Ack, c.snd_nxt, c.rcv_nxt);
    }
  }
}

void DnsResolver::on_packet(Simulation& sim, const Packet& pkt) {
  if (pkt.proto != Protocol::Udp || !pkt.udp->dns || pkt.udp->dns->is_response)
    return;
  ++queries_seen;
  if (behavior.muted) return;
  const DnsMessage& q = *pkt.udp->dns;
  DnsMessage resp;
  resp.txid = q.txid;
  resp.qname = q.qname;
  resp.is_response = true;
  auto it = behavior.zone.find(q.qname);
  resp.answer = it == behavior.zone.end() ? 0 : it->second;  // 0 = empty answer
  Packet out = make_dns(pkt.dst, pkt.src, resp);
  sim.send_at(sim.now() + behavior.response_delay_s, id, std::move(out),
              PathKind::Direct);
}

}  // namespace vpnsim
