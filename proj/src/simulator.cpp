#include "wsn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wsn {

namespace {
constexpr double kNotListening = std::numeric_limits<double>::infinity();

bool listening(RadioState s) { return s == RadioState::Idle || s == RadioState::Receive; }
}  // namespace

Simulator::Simulator(const Topology& topology, EnergyModel energy, MacParams mac,
                     std::uint64_t seed)
    : topology_(topology), energy_(energy), mac_(mac), rng_(seed) {
    energy_.validate();
    if (mac_.stack_size < 1) throw Error("mac: stack_size must be >= 1");
    if (mac_.max_packet_bytes < 1) throw Error("mac: max_packet_bytes must be >= 1");
    max_serialization_ = energy_.serialization_time(mac_.max_packet_bytes);

    nodes_.resize(topology_.size());
    std::size_t i = 0;
    for (const auto& rec : topology_.nodes()) {
        idx_.emplace(rec.id, i);
        nodes_[i].listen_since = 0.0;  // everyone starts awake and listening
        ++i;
    }
    for (std::size_t k = 0; k < nodes_.size(); ++k) schedule_death_check(k);
}

std::size_t Simulator::index_of(NodeId id) const {
    auto it = idx_.find(id);
    if (it == idx_.end()) throw Error("simulator: unknown node id " + std::to_string(id));
    return it->second;
}

NodeRuntime& Simulator::runtime(NodeId node) { return nodes_[index_of(node)]; }
const NodeRuntime& Simulator::runtime(NodeId node) const { return nodes_[index_of(node)]; }

bool Simulator::is_listening(NodeId node) const { return listening(runtime(node).state); }

double Simulator::remaining_energy(NodeId node) const {
    std::size_t i = index_of(node);
    const NodeRuntime& n = nodes_[i];
    double pending = energy_.power(n.state) * (now_ - n.state_since);
    return std::max(0.0, topology_.nodes()[i].initial_energy - n.consumed - pending);
}

double Simulator::total_consumed() const {
    double total = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const NodeRuntime& n = nodes_[i];
        double pending = energy_.power(n.state) * (now_ - n.state_since);
        total += std::min(n.consumed + pending, topology_.nodes()[i].initial_energy);
    }
    return total;
}

bool Simulator::mark_seen(NodeId node, PacketId id) {
    return runtime(node).seen.insert(id).second;
}

// --- events -----------------------------------------------------------------

void Simulator::schedule(SimEvent ev) {
    if (ev.time < now_)
        throw EngineBug("schedule: event at t=" + std::to_string(ev.time) +
                        " lies in the past (now=" + std::to_string(now_) + ")");
    ev.sequence = next_sequence_++;
    queue_.push(std::move(ev));
}

void Simulator::schedule_timer(double time, std::function<void()> action) {
    SimEvent ev;
    ev.time = time;
    ev.kind = EventKind::Timer;
    ev.action = std::move(action);
    schedule(std::move(ev));
}

void Simulator::schedule_epoch(double time, std::function<void()> action) {
    SimEvent ev;
    ev.time = time;
    ev.kind = EventKind::EpochBoundary;
    ev.action = std::move(action);
    schedule(std::move(ev));
}

MetricsRecord Simulator::run_until(double t_end) {
    while (!queue_.empty() && queue_.top().time <= t_end) {
        SimEvent ev = queue_.top();
        queue_.pop();
        if (ev.time < now_) throw EngineBug("event queue went backwards");
        now_ = ev.time;
        switch (ev.kind) {
            case EventKind::TransmitStart:
                handle_transmit_start(ev);
                break;
            case EventKind::TransmitEnd:
                handle_transmit_end(ev.tag);
                break;
            case EventKind::Deliver: {
                std::size_t vi = index_of(ev.subject);
                if (nodes_[vi].state == RadioState::Dead) break;
                metrics_.on_received(ev.packet->size_bytes);
                if (on_deliver) on_deliver(ev.subject, *ev.packet, static_cast<NodeId>(ev.tag));
                break;
            }
            case EventKind::WakeComplete: {
                std::size_t vi = index_of(ev.subject);
                NodeRuntime& n = nodes_[vi];
                if (n.state_epoch != ev.tag || n.state != RadioState::WakingUp) break;
                set_state(vi, n.carrier > 0 ? RadioState::Receive : RadioState::Idle);
                break;
            }
            case EventKind::DeathCheck: {
                std::size_t vi = index_of(ev.subject);
                NodeRuntime& n = nodes_[vi];
                if (n.state_epoch != ev.tag || n.state == RadioState::Dead) break;
                account_interval(vi);
                kill(vi);
                break;
            }
            case EventKind::Timer:
            case EventKind::EpochBoundary:
                if (ev.action) ev.action();
                break;
        }
    }
    if (t_end > now_) now_ = t_end;
    for (std::size_t i = 0; i < nodes_.size(); ++i) account_interval(i);
    if (max_occupancy_ > static_cast<std::size_t>(mac_.stack_size))
        throw EngineBug("buffer bound violated");
    return metrics_.finalize(now_);
}

// --- energy accounting ------------------------------------------------------

void Simulator::account_interval(std::size_t idx) {
    NodeRuntime& n = nodes_[idx];
    double dt = now_ - n.state_since;
    if (dt <= 0.0) {
        n.state_since = now_;
        return;
    }
    double initial = topology_.nodes()[idx].initial_energy;
    double joules = energy_.power(n.state) * dt;
    // death checks fire exactly at the crossing; clamp residual rounding so
    // consumption never exceeds the initial charge
    joules = std::min(joules, initial - n.consumed);
    n.consumed += joules;
    n.state_since = now_;
    metrics_.on_state_interval(topology_.nodes()[idx].id, n.state, dt, joules);
}

void Simulator::set_state(std::size_t idx, RadioState next) {
    NodeRuntime& n = nodes_[idx];
    if (n.state == next) return;
    if (n.state == RadioState::Dead) throw EngineBug("state change on a dead node");
    account_interval(idx);
    RadioState previous = n.state;
    bool was_listening = listening(previous);
    n.state = next;
    n.state_epoch++;
    if (listening(next)) {
        if (!was_listening) n.listen_since = now_;
    } else {
        n.listen_since = kNotListening;
    }
    schedule_death_check(idx);
    if (on_state_change) on_state_change(topology_.nodes()[idx].id, previous, next, now_);
}

void Simulator::schedule_death_check(std::size_t idx) {
    NodeRuntime& n = nodes_[idx];
    if (n.state == RadioState::Dead) return;
    double p = energy_.power(n.state);
    if (p <= 0.0) return;
    double remaining = topology_.nodes()[idx].initial_energy - n.consumed;
    SimEvent ev;
    ev.time = std::max(now_, now_ + remaining / p);
    ev.kind = EventKind::DeathCheck;
    ev.subject = topology_.nodes()[idx].id;
    ev.tag = n.state_epoch;
    schedule(std::move(ev));
}

void Simulator::kill(std::size_t idx) {
    NodeRuntime& n = nodes_[idx];
    NodeId id = topology_.nodes()[idx].id;
    RadioState previous = n.state;
    n.state = RadioState::Dead;
    n.state_epoch++;
    n.listen_since = kNotListening;
    metrics_.on_death(id, now_);
    if (on_state_change) on_state_change(id, previous, RadioState::Dead, now_);

    // a transmission in flight stops radiating now; its receivers get nothing
    for (std::uint64_t a = records_base_ + records_.size(); a-- > records_base_;) {
        Transmission& rec = record_at(a);
        if (rec.start + max_serialization_ < now_) break;
        if (rec.sender == id && !rec.aborted && rec.effective_end > now_) {
            rec.aborted = true;
            rec.effective_end = now_;
            if (!rec.carrier_released) release_carrier(rec);
            if (rec.done) {
                auto done = std::move(rec.done);
                rec.done = nullptr;
                done(false);
            }
        }
    }
    if (on_death) on_death(id);
    check_sink_connectivity();
}

void Simulator::check_sink_connectivity() {
    std::size_t sink_idx = index_of(topology_.sink());
    std::vector<char> reached(nodes_.size(), 0);
    std::vector<std::size_t> frontier;
    if (nodes_[sink_idx].state != RadioState::Dead) {
        reached[sink_idx] = 1;
        frontier.push_back(sink_idx);
    }
    while (!frontier.empty()) {
        std::size_t u = frontier.back();
        frontier.pop_back();
        for (NodeId v : topology_.neighbors(topology_.nodes()[u].id)) {
            std::size_t vi = index_of(v);
            if (!reached[vi] && nodes_[vi].state != RadioState::Dead) {
                reached[vi] = 1;
                frontier.push_back(vi);
            }
        }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].state != RadioState::Dead && !reached[i]) {
            metrics_.set_sink_disconnect(now_);
            return;
        }
    }
}

// --- medium -----------------------------------------------------------------

Simulator::Transmission& Simulator::record_at(std::uint64_t abs_index) {
    return records_[static_cast<std::size_t>(abs_index - records_base_)];
}

void Simulator::transmit(NodeId sender, const Packet& packet, double start) {
    if (start < now_) throw EngineBug("transmit: start time lies in the past");
    if (packet.size_bytes < 1 || packet.size_bytes > mac_.max_packet_bytes)
        throw EngineBug("transmit: packet size " + std::to_string(packet.size_bytes) +
                        " outside (0, " + std::to_string(mac_.max_packet_bytes) + "]");
    const NodeRuntime& n = runtime(sender);
    if (start <= now_) {
        if (n.state == RadioState::Dead) throw EngineBug("transmit: sender is dead");
        if (n.state == RadioState::Sleep || n.state == RadioState::WakingUp)
            throw EngineBug("transmit: sender is sleeping");
        if (n.state == RadioState::Transmit)
            throw EngineBug("transmit: sender already transmitting");
    }
    SimEvent ev;
    ev.time = start;
    ev.kind = EventKind::TransmitStart;
    ev.subject = sender;
    ev.packet = packet;
    schedule(std::move(ev));
}

void Simulator::start_transmission(NodeId sender, const Packet& packet,
                                   std::function<void(bool)> done) {
    std::size_t si = index_of(sender);
    NodeRuntime& n = nodes_[si];
    // the sender may have died or slept since this start was scheduled
    if (!listening(n.state)) {
        if (done) done(false);
        return;
    }

    // prune records that can no longer overlap anything current
    while (!records_.empty() &&
           records_.front().effective_end + max_serialization_ < now_) {
        records_.pop_front();
        ++records_base_;
    }

    set_state(si, RadioState::Transmit);

    Transmission rec;
    rec.sender = sender;
    rec.packet = packet;
    rec.start = now_;
    rec.end = now_ + energy_.serialization_time(packet.size_bytes);
    rec.effective_end = rec.end;
    rec.done = std::move(done);
    std::uint64_t abs_index = records_base_ + records_.size();
    records_.push_back(std::move(rec));

    for (NodeId v : topology_.neighbors(sender)) {
        std::size_t vi = index_of(v);
        NodeRuntime& nv = nodes_[vi];
        nv.carrier++;
        nv.last_carrier_rise = now_;
        if (nv.state == RadioState::Idle) set_state(vi, RadioState::Receive);
    }

    SimEvent end;
    end.time = records_.back().end;
    end.kind = EventKind::TransmitEnd;
    end.subject = sender;
    end.tag = abs_index;
    schedule(std::move(end));
}

void Simulator::handle_transmit_start(SimEvent& ev) {
    start_transmission(ev.subject, *ev.packet, std::move(ev.tx_done));
}

void Simulator::handle_transmit_end(std::uint64_t rec_index) {
    Transmission& rec = record_at(rec_index);
    NodeId sender = rec.sender;
    std::size_t si = index_of(sender);

    if (!rec.carrier_released) release_carrier(rec);
    if (rec.aborted) return;  // sender died mid-air; done() already fired

    if (nodes_[si].state != RadioState::Transmit)
        throw EngineBug("transmit end: sender not in Transmit state");
    set_state(si, nodes_[si].carrier > 0 ? RadioState::Receive : RadioState::Idle);
    ++transmissions_;
    metrics_.on_sent(rec.packet.size_bytes);

    for (NodeId v : topology_.neighbors(sender)) {
        std::size_t vi = index_of(v);
        NodeRuntime& nv = nodes_[vi];
        if (nv.state == RadioState::Dead) continue;
        if (!listening(nv.state)) continue;
        if (nv.listen_since > rec.start) continue;  // not listening the whole interval

        // any in-range transmission overlapping in time corrupts this one here
        bool collided = false;
        double interference_end = rec.end;
        for (std::uint64_t a = records_base_ + records_.size(); a-- > records_base_;) {
            if (a == rec_index) continue;
            const Transmission& other = record_at(a);
            if (other.start + max_serialization_ < rec.start) break;  // start-ordered
            if (other.start >= rec.end) continue;
            if (other.sender == sender || other.sender == v) continue;
            if (other.effective_end <= rec.start) continue;
            if (!topology_.adjacent(other.sender, v)) continue;
            collided = true;
            interference_end = std::max(interference_end, other.effective_end);
        }
        if (collided) {
            // one collision per overlap episode at this receiver
            if (rec.start >= nv.collision_episode_end) {
                metrics_.on_collision();
                nv.collision_episode_end = interference_end;
            } else {
                nv.collision_episode_end = std::max(nv.collision_episode_end, interference_end);
            }
            continue;
        }
        SimEvent del;
        del.time = now_;
        del.kind = EventKind::Deliver;
        del.subject = v;
        del.tag = static_cast<std::uint64_t>(sender);
        del.packet = rec.packet;
        schedule(std::move(del));
    }

    if (rec.done) {
        auto done = std::move(rec.done);
        rec.done = nullptr;
        done(true);
    }
}

void Simulator::release_carrier(Transmission& rec) {
    rec.carrier_released = true;
    for (NodeId v : topology_.neighbors(rec.sender)) {
        std::size_t vi = index_of(v);
        NodeRuntime& nv = nodes_[vi];
        nv.carrier--;
        if (nv.carrier == 0 && nv.state == RadioState::Receive) set_state(vi, RadioState::Idle);
    }
}

// --- buffers ----------------------------------------------------------------

bool Simulator::enqueue(NodeId node, const Packet& packet) {
    NodeRuntime& n = runtime(node);
    if (n.state == RadioState::Dead) throw EngineBug("enqueue on a dead node");
    if (n.buffer.size() >= static_cast<std::size_t>(mac_.stack_size)) {
        metrics_.on_drop();
        return false;
    }
    n.buffer.push_back(packet);
    max_occupancy_ = std::max(max_occupancy_, n.buffer.size());
    if (on_enqueue) on_enqueue(node);
    return true;
}

std::optional<Packet> Simulator::dequeue(NodeId node) {
    NodeRuntime& n = runtime(node);
    if (n.buffer.empty()) return std::nullopt;
    Packet p = n.buffer.front();
    n.buffer.pop_front();
    return p;
}

// --- radio state control ----------------------------------------------------

void Simulator::radio_sleep(NodeId node) {
    std::size_t vi = index_of(node);
    NodeRuntime& n = nodes_[vi];
    if (n.state == RadioState::Dead || n.state == RadioState::Sleep) return;
    if (n.state == RadioState::Transmit) throw EngineBug("radio_sleep during transmission");
    set_state(vi, RadioState::Sleep);
}

void Simulator::radio_wake(NodeId node) {
    std::size_t vi = index_of(node);
    NodeRuntime& n = nodes_[vi];
    if (n.state != RadioState::Sleep) return;
    set_state(vi, RadioState::WakingUp);
    SimEvent ev;
    ev.time = now_ + energy_.wake_latency;
    ev.kind = EventKind::WakeComplete;
    ev.subject = node;
    ev.tag = n.state_epoch;
    schedule(std::move(ev));
}

// --- CSMA -------------------------------------------------------------------

double Simulator::backoff_jitter() {
    std::uniform_real_distribution<double> u(0.0, mac_.backoff_window * mac_.backoff_unit);
    return u(rng_);
}

void Simulator::csma_send(NodeId sender, std::function<std::optional<Packet>()> build,
                          std::function<void(bool)> done) {
    csma_attempt(sender, std::move(build), std::move(done));
}

void Simulator::csma_send(NodeId sender, Packet packet, std::function<void(bool)> done) {
    csma_send(
        sender, [packet = std::move(packet)]() -> std::optional<Packet> { return packet; },
        std::move(done));
}

void Simulator::csma_attempt(NodeId sender, std::function<std::optional<Packet>()> build,
                             std::function<void(bool)> done) {
    NodeRuntime& n = runtime(sender);
    if (n.state == RadioState::Dead || n.state == RadioState::Sleep ||
        n.state == RadioState::WakingUp) {
        if (done) done(false);
        return;
    }
    bool busy =
        channel_claimed_until_ > now_ || n.carrier > 0 || n.state == RadioState::Transmit;
    if (busy) {
        double retry = std::max(channel_claimed_until_, now_) + backoff_jitter();
        schedule_timer(retry,
                       [this, sender, build = std::move(build), done = std::move(done)]() mutable {
                           csma_attempt(sender, std::move(build), std::move(done));
                       });
        return;
    }
    auto packet = build();
    if (!packet) {
        if (done) done(false);
        return;
    }
    channel_claimed_until_ = now_ + energy_.serialization_time(packet->size_bytes);
    SimEvent ev;
    ev.time = now_;
    ev.kind = EventKind::TransmitStart;
    ev.subject = sender;
    ev.packet = std::move(*packet);
    ev.tx_done = std::move(done);
    schedule(std::move(ev));
}

void Simulator::csma_send_contended(NodeId sender, std::function<std::optional<Packet>()> build,
                                    std::function<void(bool)> done) {
    double first = now_ + backoff_jitter();
    schedule_timer(first, [this, sender, build = std::move(build), done = std::move(done),
                           attempts = mac_.setup_retries]() mutable {
        csma_attempt_contended(sender, std::move(build), std::move(done), attempts);
    });
}

void Simulator::csma_attempt_contended(NodeId sender,
                                       std::function<std::optional<Packet>()> build,
                                       std::function<void(bool)> done, int attempts_left) {
    NodeRuntime& n = runtime(sender);
    if (n.state == RadioState::Dead || n.state == RadioState::Sleep ||
        n.state == RadioState::WakingUp) {
        if (done) done(false);
        return;
    }
    if (n.carrier > 0 || n.state != RadioState::Idle) {
        if (attempts_left <= 1) {
            ++csma_aborts_;
            if (done) done(false);
            return;
        }
        schedule_timer(now_ + backoff_jitter(),
                       [this, sender, build = std::move(build), done = std::move(done),
                        attempts_left]() mutable {
                           csma_attempt_contended(sender, std::move(build), std::move(done),
                                                  attempts_left - 1);
                       });
        return;
    }
    auto packet = build();
    if (!packet) {
        if (done) done(false);
        return;
    }
    SimEvent ev;
    ev.time = now_;
    ev.kind = EventKind::TransmitStart;
    ev.subject = sender;
    ev.packet = std::move(*packet);
    ev.tx_done = std::move(done);
    schedule(std::move(ev));
}

}  // namespace wsn
