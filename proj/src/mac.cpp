#include "wsn/mac.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace wsn {

TreeLinks bfs_tree(const Topology& topology) {
    std::vector<int> depths = topology.hop_depths();
    std::vector<NodeId> unreachable;
    for (std::size_t i = 0; i < topology.size(); ++i)
        if (depths[i] < 0) unreachable.push_back(topology.nodes()[i].id);
    if (!unreachable.empty()) {
        std::ostringstream msg;
        msg << "tree setup: topology disconnected; unreachable nodes:";
        for (NodeId id : unreachable) msg << ' ' << id;
        throw Error(msg.str());
    }

    std::map<NodeId, int> depth;
    for (std::size_t i = 0; i < topology.size(); ++i)
        depth[topology.nodes()[i].id] = depths[i];

    TreeLinks tree;
    tree.depth = depth;
    for (const auto& rec : topology.nodes()) {
        if (rec.id == topology.sink()) continue;
        NodeId best = kNoNode;
        for (NodeId nb : topology.neighbors(rec.id)) {
            if (depth[nb] == depth[rec.id] - 1) {
                best = nb;  // neighbors are sorted by id; first hit is lowest
                break;
            }
        }
        if (best == kNoNode) throw Error("tree setup: no parent candidate for node " +
                                         std::to_string(rec.id));
        tree.parent[rec.id] = best;
        tree.children[best].push_back(rec.id);
    }
    for (auto& [p, kids] : tree.children) std::sort(kids.begin(), kids.end());
    return tree;
}

SlotSchedule allocate_slots(const TreeLinks& tree, int frame_length, double slot_duration,
                            int miss_limit) {
    if (frame_length < 2) throw Error("allocate_slots: frame_length must be >= 2");
    if (slot_duration <= 0.0) throw Error("allocate_slots: slot_duration must be > 0");

    SlotSchedule schedule;
    schedule.frame_length = frame_length;
    schedule.slot_duration = slot_duration;
    schedule.miss_limit = miss_limit;

    // parents in depth order so a parent's own slot is known before its children's
    std::vector<std::pair<int, NodeId>> parents;
    for (const auto& [p, kids] : tree.children)
        parents.push_back({tree.depth.count(p) ? tree.depth.at(p) : 0, p});
    std::sort(parents.begin(), parents.end());

    for (const auto& [d, p] : parents) {
        const auto& kids = tree.children.at(p);
        if (static_cast<int>(kids.size()) > frame_length - 1)
            throw Error("allocate_slots: node " + std::to_string(p) + " has " +
                        std::to_string(kids.size()) + " children, frame holds " +
                        std::to_string(frame_length - 1));
        int own = schedule.send_slot.count(p) ? schedule.send_slot.at(p) : -1;
        int next = 0;
        for (NodeId child : kids) {  // kids sorted by id
            if (next == own) ++next;
            schedule.send_slot[child] = next++;
        }
    }
    return schedule;
}

void install_tree(Simulator& sim, const TreeLinks& tree, const SlotSchedule& slots) {
    for (const auto& rec : sim.topology().nodes()) {
        NodeRuntime& rt = sim.runtime(rec.id);
        rt.parent = tree.parent.count(rec.id) ? tree.parent.at(rec.id) : kNoNode;
        rt.depth = tree.depth.at(rec.id);
        rt.children = tree.children.count(rec.id) ? tree.children.at(rec.id)
                                                  : std::vector<NodeId>{};
        rt.send_slot = slots.send_slot.count(rec.id) ? slots.send_slot.at(rec.id) : -1;
    }
}

// --- CSMA tree setup ----------------------------------------------------------

TreeSetup::TreeSetup(Simulator& sim, Params params) : sim_(sim), params_(params) {}

void TreeSetup::start() {
    depth_[sim_.topology().sink()] = 0;
    broadcast_beacon(sim_.topology().sink());
}

void TreeSetup::broadcast_beacon(NodeId node) {
    for (int i = 0; i < params_.repeats; ++i) {
        sim_.schedule_timer(sim_.now() + i * params_.repeat_spacing, [this, node] {
            if (!sim_.is_alive(node)) return;
            sim_.csma_send_contended(node, [this, node]() -> std::optional<Packet> {
                auto it = depth_.find(node);
                if (it == depth_.end()) return std::nullopt;
                Packet p;
                p.id = sim_.next_packet_id();
                p.kind = PacketKind::Control;
                p.src = node;
                p.created_at = sim_.now();
                p.size_bytes = params_.beacon_bytes;
                p.meta = TreeBeaconPayload{it->second};  // depth as of send time
                return p;
            });
        });
    }
}

void TreeSetup::on_deliver(NodeId receiver, const Packet& packet, NodeId from) {
    if (receiver == sim_.topology().sink()) return;
    int candidate = std::get<TreeBeaconPayload>(packet.meta).depth + 1;
    auto it = depth_.find(receiver);
    if (it != depth_.end() && candidate >= it->second) return;
    depth_[receiver] = candidate;
    parent_[receiver] = from;
    broadcast_beacon(receiver);
}

TreeLinks TreeSetup::finalize() const {
    std::vector<NodeId> missing;
    for (const auto& rec : sim_.topology().nodes()) {
        if (rec.id == sim_.topology().sink()) continue;
        if (!parent_.count(rec.id)) missing.push_back(rec.id);
    }
    if (!missing.empty()) {
        std::ostringstream msg;
        if (!sim_.topology().is_connected())
            msg << "tree setup: topology disconnected; unreachable nodes:";
        else
            msg << "tree setup: beacons never reached nodes:";
        for (NodeId id : missing) msg << ' ' << id;
        throw Error(msg.str());
    }
    TreeLinks tree;
    tree.parent = parent_;
    tree.depth = depth_;
    for (const auto& [child, parent] : parent_) tree.children[parent].push_back(child);
    for (auto& [p, kids] : tree.children) std::sort(kids.begin(), kids.end());
    return tree;
}

// --- always-on forwarding service ----------------------------------------------

void CsmaService::kick(NodeId node) {
    if (sending_[node]) return;
    if (!sim_.is_alive(node) || sim_.buffer_occupancy(node) == 0) return;
    sending_[node] = true;
    sim_.csma_send(
        node,
        [this, node]() -> std::optional<Packet> {
            auto pkt = sim_.dequeue(node);
            if (!pkt) return std::nullopt;
            if (on_forward) on_forward(node, *pkt);
            last_sent_[node] = *pkt;
            return pkt;
        },
        [this, node](bool sent) {
            sending_[node] = false;
            if (sent && on_sent) on_sent(node, last_sent_[node]);
            kick(node);
        });
}

// --- duty cycle engine --------------------------------------------------------

DutyCycleMac::DutyCycleMac(Simulator& sim, SlotSchedule schedule, const TreeLinks& tree,
                           double frames_start, DutyParams params)
    : sim_(sim), schedule_(std::move(schedule)), frames_start_(frames_start), params_(params) {
    for (const auto& rec : sim_.topology().nodes()) {
        NodeMac& m = nodes_[rec.id];
        if (schedule_.send_slot.count(rec.id)) {
            OwnedSlot s;
            s.slot = schedule_.send_slot.at(rec.id);
            s.recv = false;
            m.owned.push_back(s);
        }
        if (tree.children.count(rec.id)) {
            for (NodeId child : tree.children.at(rec.id)) {
                OwnedSlot s;
                s.slot = schedule_.send_slot.at(child);
                s.recv = true;
                s.child = child;
                m.owned.push_back(s);
            }
        }
    }
}

void DutyCycleMac::start() {
    for (const auto& rec : sim_.topology().nodes()) {
        NodeId id = rec.id;
        sim_.schedule_timer(frames_start_, [this, id] { plan(id); });
    }
}

void DutyCycleMac::hold_awake(NodeId node) {
    NodeMac& m = nodes_.at(node);
    m.hold++;
    if (!sim_.is_alive(node)) return;
    if (sim_.radio_state(node) == RadioState::Sleep) sim_.radio_wake(node);
    plan(node);
}

void DutyCycleMac::release_hold(NodeId node) {
    NodeMac& m = nodes_.at(node);
    m.hold--;
    if (m.hold <= 0 && sim_.is_alive(node)) plan(node);
}

void DutyCycleMac::notify_enqueue(NodeId node) {
    NodeMac& m = nodes_.at(node);
    if (m.sleeping_planned || sim_.radio_state(node) == RadioState::Sleep) plan(node);
}

void DutyCycleMac::notify_rx_from(NodeId parent, NodeId child, PacketId packet) {
    NodeMac& m = nodes_.at(parent);
    for (auto& slot : m.owned) {
        if (slot.recv && slot.child == child) {
            slot.last_rx = sim_.now();
            break;
        }
    }
    // ack inside the guard time so the child stops retrying
    if (!sim_.is_alive(parent) || !sim_.is_listening(parent)) return;
    Packet ack;
    ack.id = sim_.next_packet_id();
    ack.kind = PacketKind::Control;
    ack.src = parent;
    ack.dest = child;
    ack.created_at = sim_.now();
    ack.size_bytes = params_.ack_bytes;
    ack.meta = SlotAckPayload{packet};
    sim_.transmit(parent, ack);
}

void DutyCycleMac::on_ack(NodeId child, PacketId acked) {
    NodeMac& m = nodes_.at(child);
    if (m.head_id != acked) return;  // already moved on
    sim_.dequeue(child);
    m.head_id = 0;
    m.head_attempts = 0;
}

double DutyCycleMac::next_slot_start(int slot, double after, int frame_multiple) const {
    const double tau = schedule_.slot_duration;
    const double frame = schedule_.frame_duration();
    double base = frames_start_ + slot * tau;
    double frames = std::ceil((after - base) / frame);
    long f = frames <= 0.0 ? 0 : static_cast<long>(frames);
    if (frame_multiple > 1) {
        long rem = f % frame_multiple;
        if (rem != 0) f += frame_multiple - rem;
    }
    double start = base + static_cast<double>(f) * frame;
    while (start < after) {
        f += frame_multiple > 1 ? frame_multiple : 1;
        start = base + static_cast<double>(f) * frame;
    }
    return start;
}

void DutyCycleMac::plan(NodeId node) {
    NodeMac& m = nodes_.at(node);
    std::uint64_t epoch = ++m.plan_epoch;
    m.sleeping_planned = false;
    if (!sim_.is_alive(node)) return;

    const double now = sim_.now();
    const double horizon = now;  // a slot starting right now is still serviceable

    double best = -1.0;
    std::size_t best_index = 0;
    bool best_is_send = false;
    for (std::size_t i = 0; i < m.owned.size(); ++i) {
        const OwnedSlot& s = m.owned[i];
        double start;
        if (!s.recv) {
            if (sim_.buffer_occupancy(node) == 0) continue;  // nothing to send
            start = next_slot_start(s.slot, horizon, 1);
        } else if (s.active) {
            start = next_slot_start(s.slot, horizon, 1);
        } else {
            start = next_slot_start(s.slot, horizon, params_.resync_frames);
        }
        if (best < 0.0 || start < best) {
            best = start;
            best_index = i;
            best_is_send = !s.recv;
        }
    }

    if (best >= 0.0) {
        const double slot_start = best;
        const std::size_t owned_index = best_index;
        const bool is_send = best_is_send;
        sim_.schedule_timer(slot_start, [this, node, epoch, owned_index, is_send, slot_start] {
            NodeMac& mm = nodes_.at(node);
            if (mm.plan_epoch != epoch) return;
            if (is_send)
                service_send(node, epoch, slot_start);
            else
                service_recv(node, epoch, owned_index, slot_start);
        });
    }

    if (m.hold > 0 || !params_.sleep_enabled) return;  // staying awake

    // best < 0: nothing ahead; sleep until an enqueue or a hold wakes us
    double wake_trigger = best < 0.0 ? -1.0
                                     : best - sim_.energy_model().wake_latency -
                                           params_.wake_margin;
    RadioState st = sim_.radio_state(node);
    if (best < 0.0 || wake_trigger > now) {
        if (st == RadioState::Idle || st == RadioState::Receive) {
            sim_.radio_sleep(node);
            m.sleeping_planned = true;
        } else if (st == RadioState::Sleep) {
            m.sleeping_planned = true;
        } else {
            // Transmit or WakingUp: revisit once the radio can settle
            double delay = std::max(sim_.energy_model().serialization_time(
                                        sim_.mac_params().max_packet_bytes),
                                    sim_.energy_model().wake_latency) +
                           params_.wake_margin;
            sim_.schedule_timer(now + delay, [this, node, epoch] {
                if (nodes_.at(node).plan_epoch == epoch && sim_.is_alive(node)) plan(node);
            });
            return;
        }
        if (wake_trigger > now) {
            sim_.schedule_timer(wake_trigger, [this, node, epoch] {
                NodeMac& mm = nodes_.at(node);
                if (mm.plan_epoch != epoch) return;
                if (sim_.is_alive(node) && sim_.radio_state(node) == RadioState::Sleep)
                    sim_.radio_wake(node);
            });
        }
    } else if (st == RadioState::Sleep) {
        sim_.radio_wake(node);  // slot is close; get up for it
    }
}

void DutyCycleMac::service_send(NodeId node, std::uint64_t epoch, double slot_start) {
    (void)epoch;
    (void)slot_start;
    if (!sim_.is_alive(node)) return;
    NodeMac& m = nodes_.at(node);
    if (sim_.is_listening(node) && sim_.buffer_occupancy(node) > 0) {
        bool congested = static_cast<double>(sim_.buffer_occupancy(node)) >
                         kCongestionFraction * sim_.mac_params().stack_size;
        // the head stays queued until its ACK arrives or the attempts run out
        Packet pkt = sim_.runtime(node).buffer.front();
        if (m.head_id != pkt.id) {
            m.head_id = pkt.id;
            m.head_attempts = 0;
        }
        if (congested && pkt.src != node) pkt.congestion_bit = true;
        sim_.transmit(node, pkt);
        if (++m.head_attempts >= params_.tx_attempts) {
            sim_.dequeue(node);  // no ACK after the last try; give up
            m.head_id = 0;
            m.head_attempts = 0;
            ++giveups_;
        }
    }
    sim_.schedule_timer(sim_.now() + schedule_.slot_duration, [this, node] {
        if (sim_.is_alive(node)) plan(node);
    });
}

void DutyCycleMac::service_recv(NodeId node, std::uint64_t epoch, std::size_t owned_index,
                                double slot_start) {
    if (!sim_.is_alive(node)) return;
    // listen briefly; a silent slot is abandoned early
    sim_.schedule_timer(slot_start + params_.cs_window, [this, node, epoch, owned_index,
                                                         slot_start] {
        NodeMac& m = nodes_.at(node);
        if (!sim_.is_alive(node)) return;
        OwnedSlot& slot = m.owned[owned_index];
        const NodeRuntime& rt = sim_.runtime(node);
        bool carrier_seen = rt.carrier > 0 || rt.last_carrier_rise >= slot_start;
        if (!carrier_seen) {
            slot.miss++;
            if (slot.miss >= schedule_.miss_limit) slot.active = false;
            if (m.plan_epoch == epoch) plan(node);
            return;
        }
        // stay up for the slot; judge reception at its end
        sim_.schedule_timer(slot_start + schedule_.slot_duration, [this, node, epoch,
                                                                   owned_index, slot_start] {
            NodeMac& mm = nodes_.at(node);
            if (!sim_.is_alive(node)) return;
            OwnedSlot& s = mm.owned[owned_index];
            if (s.last_rx >= slot_start) {
                s.miss = 0;
                s.active = true;
            } else {
                s.miss++;  // carrier without a packet counts as an empty slot
                if (s.miss >= schedule_.miss_limit) s.active = false;
            }
            if (mm.plan_epoch == epoch) plan(node);
        });
    });
}

}  // namespace wsn
