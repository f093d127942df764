#include "wsn/irs.hpp"

#include <algorithm>
#include <cmath>

namespace wsn {

namespace {
constexpr double kTau = 6.283185307179586476925286766559;
}

std::vector<Ray> spawn_rays(int k, double corridor_width) {
    if (k < 1) throw Error("spawn_rays: ray count must be >= 1");
    std::vector<Ray> rays;
    rays.reserve(k);
    for (int i = 0; i < k; ++i)
        rays.push_back({i, kTau * static_cast<double>(i) / static_cast<double>(k),
                        corridor_width});
    return rays;
}

Escalation increase_rays(int k, int k_max) {
    if (k < 1) throw Error("increase_rays: ray count must be >= 1");
    if (k >= k_max) return {k_max, true};
    return {std::min(2 * k, k_max), false};
}

namespace {

struct RayFrame {
    Vec2 origin;
    double cos_a;
    double sin_a;
    double projection(const Vec2& p) const {
        return (p.x - origin.x) * cos_a + (p.y - origin.y) * sin_a;
    }
    double perpendicular(const Vec2& p) const {
        return std::abs((p.x - origin.x) * -sin_a + (p.y - origin.y) * cos_a);
    }
};

RayFrame frame_for(const Topology& topology, const Ray& ray) {
    Vec2 origin = topology.node(topology.sink()).position;
    return {origin, std::cos(ray.angle), std::sin(ray.angle)};
}

}  // namespace

std::optional<NodeId> next_hop_on_ray(const Topology& topology, NodeId current, const Ray& ray,
                                      const std::unordered_set<NodeId>& seen,
                                      const std::function<bool(NodeId)>& alive) {
    RayFrame f = frame_for(topology, ray);
    double here = f.projection(topology.node(current).position);
    std::optional<NodeId> best;
    double best_proj = here;
    for (NodeId v : topology.neighbors(current)) {  // sorted by id: ties keep the lowest
        if (seen.count(v)) continue;
        if (alive && !alive(v)) continue;
        const Vec2& p = topology.node(v).position;
        if (f.perpendicular(p) > ray.corridor_width / 2.0) continue;
        double proj = f.projection(p);
        if (proj <= here) continue;  // forward progress must be strict
        if (!best || proj > best_proj) {
            best = v;
            best_proj = proj;
        }
    }
    return best;
}

std::vector<NodeId> corridor_members(const Topology& topology, const std::vector<Ray>& rays) {
    std::vector<RayFrame> frames;
    frames.reserve(rays.size());
    for (const Ray& r : rays) frames.push_back(frame_for(topology, r));
    std::vector<NodeId> members;
    for (const auto& rec : topology.nodes()) {
        for (std::size_t i = 0; i < frames.size(); ++i) {
            if (frames[i].perpendicular(rec.position) <= rays[i].corridor_width / 2.0 &&
                frames[i].projection(rec.position) >= 0.0) {
                members.push_back(rec.id);
                break;
            }
        }
    }
    return members;
}

// --- search controller --------------------------------------------------------

IrsSearch::IrsSearch(Simulator& sim, Params params, Flooding& flooding, DutyCycleMac* mac)
    : sim_(sim), params_(params), flooding_(flooding), mac_(mac) {
    if (params_.corridor_width <= 0.0) params_.corridor_width = sim_.topology().radio_range();
    if (params_.timeout_per_round <= 0.0) {
        double frame = params_.frame_duration;
        if (frame <= 0.0) throw Error("irs: need frame_duration to derive the round timeout");
        params_.timeout_per_round = 2.0 * sim_.topology().diameter_hops() * frame;
    }
}

Ray IrsSearch::ray_for(int index) const {
    return {index, kTau * static_cast<double>(index) / static_cast<double>(ray_count_),
            params_.corridor_width};
}

void IrsSearch::start_search(std::function<bool(NodeId)> predicate,
                             std::function<void(const SearchResult&)> on_complete) {
    if (!sim_.is_alive(sim_.topology().sink())) throw Error("irs: sink is dead");
    if (active_) throw Error("irs: a search is already running");
    active_ = true;
    ++search_id_;
    round_ = 0;
    ray_count_ = params_.k0;
    flood_round_ = false;
    used_fallback_ = false;
    issued_at_ = sim_.now();
    energy_at_start_ = sim_.total_consumed();
    latency_target_.reset();
    total_tx_ = 0;
    max_round_tx_ = 0;
    predicate_ = std::move(predicate);
    on_complete_ = std::move(on_complete);
    run_round();
}

void IrsSearch::hold_round_members() {
    if (!mac_) return;
    if (flood_round_) {
        for (const auto& rec : sim_.topology().nodes())
            if (sim_.is_alive(rec.id)) held_.push_back(rec.id);
    } else {
        for (NodeId id : corridor_members(sim_.topology(), rays_))
            if (sim_.is_alive(id)) held_.push_back(id);
        NodeId sink = sim_.topology().sink();
        if (std::find(held_.begin(), held_.end(), sink) == held_.end())
            held_.push_back(sink);
    }
    for (NodeId id : held_) mac_->hold_awake(id);
}

void IrsSearch::release_round_members() {
    if (!mac_) return;
    for (NodeId id : held_) mac_->release_hold(id);
    held_.clear();
}

void IrsSearch::run_round() {
    ++round_;
    round_tx_ = 0;
    target_replied_this_round_ = false;
    forwarded_.clear();
    pending_.clear();
    send_scheduled_.clear();
    flood_round_ = params_.flood_only || used_fallback_;
    rays_ = flood_round_ ? std::vector<Ray>{} : spawn_rays(ray_count_, params_.corridor_width);

    hold_round_members();

    // under duty cycling the corridor needs wake latency before queries launch
    double lead = mac_ ? sim_.energy_model().wake_latency + 0.002 : 0.0;
    int sid = search_id_;
    int r = round_;
    sim_.schedule_timer(sim_.now() + lead, [this, sid, r] {
        if (!active_ || search_id_ != sid || round_ != r) return;
        launch_queries();
    });
    sim_.schedule_timer(sim_.now() + lead + params_.timeout_per_round, [this, sid, r] {
        if (!active_ || search_id_ != sid || round_ != r) return;
        finish_round();
    });
}

void IrsSearch::launch_queries() {
    NodeId sink = sim_.topology().sink();
    if (!sim_.is_alive(sink)) return;  // round will time out

    if (flood_round_) {
        Packet p;
        p.id = sim_.next_packet_id();
        p.kind = PacketKind::Query;
        p.src = sink;
        p.created_at = sim_.now();
        p.size_bytes = params_.query_bytes;
        QueryPayload q;
        q.search_id = search_id_;
        q.round = round_;
        q.flood_round = true;
        p.meta = std::move(q);
        flood_query_id_ = p.id;
        flood_tx_seen_ = 0;
        flooding_.start_flood(sink, std::move(p));
        return;
    }

    auto alive = [this](NodeId id) { return sim_.is_alive(id); };
    std::vector<QueryRayTask> tasks;
    std::unordered_set<NodeId> seen{sink};
    for (const Ray& ray : rays_) {
        auto hop = next_hop_on_ray(sim_.topology(), sink, ray, seen, alive);
        if (!hop) continue;  // this ray has nowhere to go
        QueryRayTask t;
        t.ray_index = ray.index;
        t.next_hop = *hop;
        t.path = {sink};
        tasks.push_back(std::move(t));
    }
    forwarded_.insert(sink);
    if (tasks.empty()) return;  // no first hops at all: wait out the round

    Packet p;
    p.id = sim_.next_packet_id();
    p.kind = PacketKind::Query;
    p.src = sink;
    p.created_at = sim_.now();
    p.size_bytes = params_.query_bytes;
    p.hop_count = 1;
    QueryPayload q;
    q.search_id = search_id_;
    q.round = round_;
    q.ray_count = ray_count_;
    q.rays = std::move(tasks);
    p.meta = std::move(q);

    int sid = search_id_;
    int r = round_;
    sim_.csma_send(sink, std::move(p), [this, sid, r](bool sent) {
        if (sent && active_ && search_id_ == sid && r == round_) {
            ++round_tx_;
            ++total_tx_;
        }
    });
}

void IrsSearch::on_deliver(NodeId receiver, const Packet& packet, NodeId from) {
    (void)from;
    if (!active_) return;
    if (packet.kind == PacketKind::Reply) {
        const auto& reply = std::get<ReplyPayload>(packet.meta);
        if (reply.search_id != search_id_) return;
        if (packet.dest != receiver) return;
        forward_reply(receiver, packet);
        return;
    }
    if (packet.kind != PacketKind::Query) return;
    const auto& q = std::get<QueryPayload>(packet.meta);
    if (q.search_id != search_id_ || q.round != round_ || q.flood_round) return;

    // anyone who hears a query and matches the predicate answers
    if (predicate_(receiver) && !target_replied_this_round_) {
        target_replied_this_round_ = true;
        if (!latency_target_) latency_target_ = sim_.now() - issued_at_;
        send_reply(receiver, q.rays.front().path, q.round);
    }

    if (forwarded_.count(receiver)) return;
    auto alive = [this](NodeId id) { return sim_.is_alive(id); };
    for (const QueryRayTask& task : q.rays) {
        if (task.next_hop != receiver) continue;
        Ray ray = ray_for(task.ray_index);
        std::vector<NodeId> path = task.path;
        path.push_back(receiver);
        std::unordered_set<NodeId> seen(path.begin(), path.end());
        auto hop = next_hop_on_ray(sim_.topology(), receiver, ray, seen, alive);
        if (!hop) continue;  // corridor ends here for this ray
        QueryRayTask next;
        next.ray_index = task.ray_index;
        next.next_hop = *hop;
        next.path = std::move(path);
        pending_[receiver].push_back(std::move(next));
    }
    auto it = pending_.find(receiver);
    if (it != pending_.end() && !it->second.empty()) schedule_forward(receiver);
}

void IrsSearch::schedule_forward(NodeId node) {
    if (send_scheduled_.count(node)) return;
    send_scheduled_.insert(node);
    int sid = search_id_;
    int r = round_;
    sim_.csma_send(
        node,
        [this, node, sid, r]() -> std::optional<Packet> {
            if (!active_ || search_id_ != sid || round_ != r) return std::nullopt;
            auto it = pending_.find(node);
            if (it == pending_.end() || it->second.empty()) return std::nullopt;
            Packet p;
            p.id = sim_.next_packet_id();
            p.kind = PacketKind::Query;
            p.src = sim_.topology().sink();
            p.created_at = sim_.now();
            p.size_bytes = params_.query_bytes;
            p.hop_count = static_cast<int>(it->second.front().path.size());
            QueryPayload q;
            q.search_id = sid;
            q.round = r;
            q.ray_count = ray_count_;
            q.rays = std::move(it->second);
            pending_.erase(it);
            p.meta = std::move(q);
            return p;
        },
        [this, node, sid, r](bool sent) {
            send_scheduled_.erase(node);
            if (!active_ || search_id_ != sid || round_ != r) return;
            if (sent) {
                forwarded_.insert(node);
                ++round_tx_;
                ++total_tx_;
            } else if (pending_.count(node) && !pending_[node].empty()) {
                schedule_forward(node);  // designations arrived while abandoning
            }
        });
}

void IrsSearch::on_flood_query(NodeId receiver, const Packet& packet, NodeId from) {
    (void)from;
    if (!active_ || !flood_round_) return;
    const auto& q = std::get<QueryPayload>(packet.meta);
    if (q.search_id != search_id_ || q.round != round_) return;
    if (predicate_(receiver) && !target_replied_this_round_) {
        target_replied_this_round_ = true;
        if (!latency_target_) latency_target_ = sim_.now() - issued_at_;
        send_reply(receiver, q.flood_path, q.round);
    }
}

void IrsSearch::send_reply(NodeId node, const std::vector<NodeId>& path_to_sender, int round) {
    // path runs sink .. transmitter; the reply retraces it in reverse
    Packet p;
    p.id = sim_.next_packet_id();
    p.kind = PacketKind::Reply;
    p.src = node;
    p.created_at = sim_.now();
    p.size_bytes = params_.reply_bytes;
    p.hop_count = 1;
    p.dest = path_to_sender.back();
    ReplyPayload reply;
    reply.search_id = search_id_;
    reply.round = round;
    reply.reverse_path.assign(path_to_sender.rbegin() + 1, path_to_sender.rend());
    p.meta = std::move(reply);

    int sid = search_id_;
    sim_.csma_send(node, std::move(p), [this, sid](bool sent) {
        if (sent && active_ && search_id_ == sid) {
            ++round_tx_;
            ++total_tx_;
        }
    });
}

void IrsSearch::forward_reply(NodeId node, const Packet& packet) {
    if (node == sim_.topology().sink()) {
        complete(true);
        return;
    }
    const auto& reply = std::get<ReplyPayload>(packet.meta);
    if (reply.reverse_path.empty()) return;  // malformed; let the round time out
    Packet p = packet;
    p.hop_count++;
    p.dest = reply.reverse_path.front();
    auto& rp = std::get<ReplyPayload>(p.meta);
    rp.reverse_path.erase(rp.reverse_path.begin());
    int sid = search_id_;
    sim_.csma_send(node, std::move(p), [this, sid](bool sent) {
        if (sent && active_ && search_id_ == sid) {
            ++round_tx_;
            ++total_tx_;
        }
    });
}

void IrsSearch::finish_round() {
    // flood-round transmissions were counted by the flooding module
    if (flood_round_) {
        std::int64_t tx = flooding_.stats(flood_query_id_).transmissions - flood_tx_seen_;
        round_tx_ += tx;
        total_tx_ += tx;
        flood_tx_seen_ += tx;
    }
    max_round_tx_ = std::max(max_round_tx_, round_tx_);
    release_round_members();

    if (flood_round_ || (params_.max_rounds > 0 && round_ >= params_.max_rounds)) {
        complete(false);
        return;
    }
    Escalation next = increase_rays(ray_count_, params_.k_max);
    if (next.flood_fallback) {
        used_fallback_ = true;
    } else {
        ray_count_ = next.k;
    }
    run_round();
}

void IrsSearch::complete(bool found) {
    if (!active_) return;
    if (flood_round_) {
        std::int64_t tx = flooding_.stats(flood_query_id_).transmissions - flood_tx_seen_;
        round_tx_ += tx;
        total_tx_ += tx;
        flood_tx_seen_ += tx;
    }
    max_round_tx_ = std::max(max_round_tx_, round_tx_);
    release_round_members();
    active_ = false;

    SearchResult result;
    result.found = found;
    result.rounds = round_;
    result.issued_at = issued_at_;
    if (found) {
        result.latency_sink = sim_.now() - issued_at_;
        result.latency_target = latency_target_;
    }
    result.energy = sim_.total_consumed() - energy_at_start_;
    result.transmissions = total_tx_;
    result.max_round_transmissions = max_round_tx_;
    result.final_ray_count = ray_count_;
    result.used_flood_fallback = used_fallback_;
    if (on_complete_) on_complete_(result);
}

}  // namespace wsn
