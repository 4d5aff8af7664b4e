#include "vpnsim/netsim.hpp"

#include <cstdio>
#include <stdexcept>

namespace vpnsim {

HostId Simulation::add_host(std::unique_ptr<Host> host, const std::string& name) {
  HostId id = static_cast<HostId>(hosts_.size());
  host->id = id;
  host->name = name;
  hosts_.push_back(std::move(host));
  return id;
}

HostId Simulation::find_wire_host(Addr addr) const {
  auto it = wire_addrs_.find(addr);
  return it == wire_addrs_.end() ? kNoHost : it->second;
}

void Simulation::add_route(HostId from, HostId to, uint32_t hops, double latency_s) {
  routes_[{from, to}] = Route{hops, latency_s};
}

const Route* Simulation::route(HostId from, HostId to) const {
  auto it = routes_.find({from, to});
  return it == routes_.end() ? nullptr : &it->second;
}

Rng& Simulation::rng(const std::string& stream) {
  auto it = rngs_.find(stream);
  if (it == rngs_.end())
    it = rngs_.emplace(stream, Rng::substream(seed_, stream)).first;
  return it->second;
}

void Simulation::set_tunnel_endpoint(HostId client, Addr internal_addr,
                                     HostId gateway) {
  tunnels_[client] = {internal_addr, gateway};
}

Addr Simulation::internal_addr_of(HostId client) const {
  auto it = tunnels_.find(client);
  return it == tunnels_.end() ? 0 : it->second.first;
}

void Simulation::trace(const std::string& host, const std::string& verb,
                       const std::string& detail) {
  if (!trace_enabled_) return;
  char head[64];
  std::snprintf(head, sizeof(head), "t=%.6f ", now_);
  trace_ += head;
  trace_ += "host=" + host + " verb=" + verb;
  if (!detail.empty()) {
    trace_ += ' ';
    trace_ += detail;
  }
  trace_ += '\n';
}

void Simulation::deliver_leg(HostId from, HostId to, Packet pkt, uint32_t hops,
                             double latency, bool wire_leg) {
  if (pkt.ttl < hops) {
    trace(hosts_[from]->name, "drop", "reason=ttl " + packet_summary(pkt));
    return;
  }
  if (wire_leg && drop_probability_ > 0 && rng("loss").chance(drop_probability_)) {
    trace(hosts_[from]->name, "drop", "reason=loss " + packet_summary(pkt));
    return;
  }
  pkt.ttl = static_cast<uint8_t>(pkt.ttl - hops);
  Event ev{now_ + latency, ++event_seq_, Event::Kind::Deliver, std::move(pkt), to,
           0, PathKind::Direct};
  queue_.push(std::move(ev));
}

void Simulation::do_send(HostId origin, Packet& pkt, PathKind path) {
  if (path == PathKind::Tunnel) {
    auto it = tunnels_.find(origin);
    if (it == tunnels_.end())
      throw std::runtime_error("tunnel send from unattached host");
    pkt.src.addr = it->second.first;  // the tunnel pins the true source
    pkt.via_tunnel = true;
    trace(hosts_[origin]->name, "send", "path=tunnel " + packet_summary(pkt));
    const Route* r = route(origin, it->second.second);
    if (!r) throw std::runtime_error("no route to gateway");
    deliver_leg(origin, it->second.second, pkt, 1, r->latency_s, false);
    return;
  }
  pkt.via_tunnel = false;
  HostId dst = find_wire_host(pkt.dst.addr);
  trace(hosts_[origin]->name, "send", "path=direct " + packet_summary(pkt));
  if (dst == kNoHost) {
    trace(hosts_[origin]->name, "drop", "reason=no_route " + packet_summary(pkt));
    return;
  }
  const Route* r = route(origin, dst);
  if (!r) {
    trace(hosts_[origin]->name, "drop", "reason=no_route " + packet_summary(pkt));
    return;
  }
  deliver_leg(origin, dst, pkt, r->hops, r->latency_s, true);
}

void Simulation::send(HostId origin, Packet pkt, PathKind path) {
  do_send(origin, pkt, path);
}

void Simulation::send_at(double t, HostId origin, Packet pkt, PathKind path) {
  Event ev{t, ++event_seq_, Event::Kind::Send, std::move(pkt), origin, 0, path};
  queue_.push(std::move(ev));
}

void Simulation::forward_tunnel(HostId gateway, HostId client, Packet pkt) {
  pkt.via_tunnel = true;
  const Route* r = route(gateway, client);
  if (!r) throw std::runtime_error("no tunnel route to client");
  deliver_leg(gateway, client, std::move(pkt), 1, r->latency_s, false);
}

void Simulation::forward_wire(HostId gateway, Packet pkt) {
  pkt.via_tunnel = false;
  HostId dst = find_wire_host(pkt.dst.addr);
  if (dst == kNoHost) {
    trace(hosts_[gateway]->name, "drop", "reason=no_route " + packet_summary(pkt));
    return;
  }
  const Route* r = route(gateway, dst);
  if (!r) {
    trace(hosts_[gateway]->name, "drop", "reason=no_route " + packet_summary(pkt));
    return;
  }
  deliver_leg(gateway, dst, std::move(pkt), r->hops, r->latency_s, true);
}

void Simulation::schedule_timer(double at, HostId host, uint64_t tag) {
  Event ev{at, ++event_seq_, Event::Kind::Timer, Packet{}, host, tag,
           PathKind::Direct};
  queue_.push(std::move(ev));
}

void Simulation::advance_clock(double t) {
  if (t < now_) throw std::runtime_error("virtual clock moved backwards");
  if (t == now_) return;
  now_ = t;
  if (on_clock_advance) on_clock_advance(now_);
}

uint64_t Simulation::run_until(double t_end) {
  uint64_t count = 0;
  while (!queue_.empty() && queue_.top().at <= t_end) {
    Event ev = queue_.top();
    queue_.pop();
    advance_clock(ev.at);
    ++count;
    ++events_executed_;
    switch (ev.kind) {
      case Event::Kind::Deliver:
        trace(hosts_[ev.host]->name, "deliver", packet_summary(ev.pkt));
        hosts_[ev.host]->on_packet(*this, ev.pkt);
        break;
      case Event::Kind::Timer:
        hosts_[ev.host]->on_timer(*this, ev.tag);
        break;
      case Event::Kind::Send:
        do_send(ev.host, ev.pkt, ev.path);
        break;
    }
  }
  advance_clock(t_end);
  return count;
}

}  // namespace vpnsim
