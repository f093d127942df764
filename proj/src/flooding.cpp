#include "wsn/flooding.hpp"

namespace wsn {

Flooding::Flooding(Simulator& sim, SendMode mode, CsmaService* service)
    : sim_(sim), mode_(mode), service_(service) {
    if (mode_ == SendMode::Buffered && service_ == nullptr)
        throw Error("flooding: buffered mode needs a CSMA service");
}

const Flooding::FloodStats& Flooding::stats(PacketId flood) const {
    auto it = stats_.find(flood);
    if (it == stats_.end()) throw Error("flooding: unknown flood id");
    return it->second;
}

void Flooding::note_transmission(const Packet& packet) {
    auto it = stats_.find(packet.id);
    if (it != stats_.end()) it->second.transmissions++;
}

void Flooding::start_flood(NodeId source, Packet packet) {
    if (!sim_.is_alive(source)) throw Error("flooding: source is dead");
    stats_[packet.id];  // create
    sim_.mark_seen(source, packet.id);
    packet.hop_count++;  // hop_count on the wire = hops from the origin at receipt
    if (auto* q = std::get_if<QueryPayload>(&packet.meta); q && q->flood_round)
        q->flood_path.push_back(source);
    forward(source, std::move(packet));
}

bool Flooding::handle_flood_packet(NodeId node, const Packet& packet, NodeId from) {
    auto it = stats_.find(packet.id);
    if (it != stats_.end()) {
        it->second.receptions++;
        it->second.receivers.insert(node);
    }
    bool first = sim_.mark_seen(node, packet.id);
    if (tap) tap(node, packet, from, first);
    if (!first) return false;  // duplicate: drop silently

    Packet copy = packet;
    copy.hop_count++;
    if (auto* q = std::get_if<QueryPayload>(&copy.meta); q && q->flood_round)
        q->flood_path.push_back(node);
    forward(node, std::move(copy));
    return true;
}

void Flooding::forward(NodeId node, Packet packet) {
    packet.dest = kBroadcast;
    if (mode_ == SendMode::Buffered) {
        if (sim_.enqueue(node, packet)) service_->kick(node);
        return;
    }
    // Immediate: capacity still gates admission, but the send bypasses the
    // slot-serviced queue (used inside all-awake windows under duty cycling)
    if (sim_.buffer_occupancy(node) >=
        static_cast<std::size_t>(sim_.mac_params().stack_size)) {
        sim_.metrics().on_drop();
        return;
    }
    PacketId id = packet.id;
    sim_.csma_send(node, std::move(packet), [this, id](bool sent) {
        if (!sent) return;
        auto it = stats_.find(id);
        if (it != stats_.end()) it->second.transmissions++;
    });
}

}  // namespace wsn
