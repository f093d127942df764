#include "wsn/scenario.hpp"

#include <algorithm>
#include <sstream>

namespace wsn {

std::string to_string(const StackChoice& stack) {
    std::string out;
    auto add = [&out](const char* token) {
        if (!out.empty()) out += '-';
        out += token;
    };
    if (stack.duty_cycle) add("zigbee");
    if (stack.irs) add("irs");
    if (stack.esrt) add("esrt");
    if (stack.flood) add("flood");
    return out;
}

std::optional<StackChoice> stack_from_string(const std::string& s) {
    StackChoice stack;
    std::stringstream in(s);
    std::string token;
    while (std::getline(in, token, '-')) {
        if (token == "zigbee")
            stack.duty_cycle = true;
        else if (token == "irs")
            stack.irs = true;
        else if (token == "esrt")
            stack.esrt = true;
        else if (token == "flood")
            stack.flood = true;
        else if (!token.empty())
            return std::nullopt;
    }
    if (!stack.irs && !stack.flood) return std::nullopt;  // need a routing protocol
    return stack;
}

Scenario::Scenario(Simulator& sim, ScenarioParams params)
    : sim_(sim), params_(std::move(params)) {
    const EnergyModel& em = sim_.energy_model();
    slot_duration_ = em.serialization_time(sim_.mac_params().max_packet_bytes) +
                     params_.guard_time;
    frame_duration_ = params_.frame_length * slot_duration_;
    data_start_ = params_.instant_tree ? 0.0 : params_.setup_window;

    int diameter = sim_.topology().diameter_hops();
    control_window_ = em.wake_latency + 0.002 + (diameter + 2) * 4.0 * slot_duration_;

    service_ = std::make_unique<CsmaService>(sim_);
    service_->on_forward = [this](NodeId node, Packet& pkt) {
        // relays mark congestion when they forward from a nearly full queue
        std::size_t occupancy_with_this = sim_.buffer_occupancy(node) + 1;
        if (pkt.kind == PacketKind::Report && pkt.src != node &&
            static_cast<double>(occupancy_with_this) >
                DutyCycleMac::kCongestionFraction * sim_.mac_params().stack_size)
            pkt.congestion_bit = true;
    };
    flooding_ = std::make_unique<Flooding>(
        sim_, params_.stack.duty_cycle ? Flooding::SendMode::Immediate
                                       : Flooding::SendMode::Buffered,
        service_.get());
    service_->on_sent = [this](NodeId, const Packet& pkt) { flooding_->note_transmission(pkt); };

    sim_.on_deliver = [this](NodeId receiver, const Packet& packet, NodeId from) {
        dispatch(receiver, packet, from);
    };
}

void Scenario::start() {
    if (params_.stack.duty_cycle && !params_.instant_tree) {
        setup_phase_ = true;
        tree_setup_ = std::make_unique<TreeSetup>(
            sim_, TreeSetup::Params{params_.beacon_bytes, params_.beacon_repeats, 0.02,
                                    params_.setup_window});
        tree_setup_->start();
        sim_.schedule_timer(params_.setup_window, [this] {
            setup_phase_ = false;
            TreeLinks tree = tree_setup_->finalize();  // throws when setup failed
            finish_setup(tree);
        });
        return;
    }
    if (params_.stack.duty_cycle) {
        finish_setup(bfs_tree(sim_.topology()));
        return;
    }
    start_protocols();
}

void Scenario::finish_setup(const TreeLinks& tree) {
    // dense placements can hand one parent more children than the configured
    // frame holds; grow the frame to fit (all depth-1 nodes must attach to the
    // sink, so there is no parent to rebalance them onto)
    int fanout = 0;
    for (const auto& [p, kids] : tree.children)
        fanout = std::max(fanout, static_cast<int>(kids.size()));
    int frame_length = std::max(params_.frame_length, fanout + 1);
    frame_duration_ = frame_length * slot_duration_;
    SlotSchedule slots = allocate_slots(tree, frame_length, slot_duration_,
                                        params_.miss_limit);
    install_tree(sim_, tree, slots);
    DutyParams duty;
    duty.sleep_enabled = true;
    duty.resync_frames = params_.resync_frames;
    duty.cs_window = params_.cs_window;
    mac_ = std::make_unique<DutyCycleMac>(sim_, slots, tree, data_start_, duty);
    sim_.on_enqueue = [this](NodeId node) { mac_->notify_enqueue(node); };
    mac_->start();
    start_protocols();
}

std::vector<NodeId> Scenario::pick_sources() const {
    std::vector<NodeId> sources;
    if (params_.sources_all) {
        for (const auto& rec : sim_.topology().nodes())
            if (rec.role != NodeRole::Sink) sources.push_back(rec.id);
    } else if (auto target = sim_.topology().target()) {
        sources.push_back(*target);
    }
    return sources;
}

void Scenario::start_protocols() {
    if (params_.stack.irs || params_.stack.flood) {
        IrsSearch::Params ip;
        ip.k0 = params_.rays_k0;
        ip.k_max = params_.rays_max;
        ip.corridor_width = params_.corridor_width;
        ip.frame_duration = frame_duration_;
        ip.query_bytes = params_.query_bytes;
        ip.reply_bytes = params_.reply_bytes;
        ip.flood_only = !params_.stack.irs;
        irs_ = std::make_unique<IrsSearch>(sim_, ip, *flooding_, mac_.get());
        if (params_.max_searches != 0) schedule_search(data_start_);
    }

    std::vector<NodeId> sources = pick_sources();
    if (params_.stack.esrt) {
        EsrtParams ep = params_.esrt;
        esrt_ = std::make_unique<EsrtController>(sim_, ep, *flooding_, sources);
        if (params_.stack.duty_cycle) {
            esrt_->on_epoch_boundary = [this](int, double boundary) {
                hold_control_window(boundary);
            };
        }
        esrt_->start(data_start_ + params_.esrt.epoch_length);
    }

    // report traffic, staggered per source
    std::uniform_real_distribution<double> phase(0.0, 1.0);
    for (NodeId source : sources) {
        double f = esrt_ ? esrt_->source_frequency(source) : params_.fixed_report_rate;
        if (f <= 0.0) continue;
        schedule_report(source, data_start_ + phase(sim_.rng()) / f);
    }
}

void Scenario::hold_control_window(double boundary) {
    if (!mac_) return;
    std::vector<NodeId> held;
    for (const auto& rec : sim_.topology().nodes())
        if (sim_.is_alive(rec.id)) held.push_back(rec.id);
    for (NodeId id : held) mac_->hold_awake(id);
    sim_.schedule_timer(boundary + control_window_, [this, held = std::move(held)] {
        for (NodeId id : held)
            if (sim_.is_alive(id)) mac_->release_hold(id);
    });
}

void Scenario::schedule_search(double at) {
    sim_.schedule_timer(at, [this, at] {
        if (params_.max_searches >= 0 &&
            static_cast<int>(searches_.size()) >= params_.max_searches)
            return;
        if (!irs_->search_running() && sim_.is_alive(sim_.topology().sink())) {
            auto target = sim_.topology().target();
            irs_->start_search(
                [this, target](NodeId id) { return target && id == *target; },
                [this](const SearchResult& result) { searches_.push_back(result); });
        }
        schedule_search(at + params_.search_period);
    });
}

void Scenario::schedule_report(NodeId source, double at) {
    sim_.schedule_timer(at, [this, source, at] {
        if (!sim_.is_alive(source)) return;
        double f = esrt_ ? esrt_->source_frequency(source) : params_.fixed_report_rate;
        Packet p;
        p.id = sim_.next_packet_id();
        p.kind = PacketKind::Report;
        p.src = source;
        p.created_at = sim_.now();
        p.size_bytes = params_.report_bytes;
        p.meta = ReportPayload{static_cast<std::int64_t>(p.id)};

        if (params_.stack.duty_cycle) {
            p.hop_count = 1;
            p.dest = sim_.runtime(source).parent;
            if (p.dest != kNoNode) sim_.enqueue(source, p);
        } else if (params_.stack.flood) {
            flooding_->start_flood(source, std::move(p));
        }
        if (f > 0.0) schedule_report(source, at + 1.0 / f);
    });
}

void Scenario::dispatch(NodeId receiver, const Packet& packet, NodeId from) {
    switch (packet.kind) {
        case PacketKind::Control: {
            if (TreeSetup::is_beacon(packet)) {
                if (setup_phase_ && tree_setup_) tree_setup_->on_deliver(receiver, packet, from);
                return;
            }
            if (DutyCycleMac::is_slot_ack(packet)) {
                if (mac_ && packet.dest == receiver)
                    mac_->on_ack(receiver, std::get<SlotAckPayload>(packet.meta).acked);
                return;
            }
            if (std::holds_alternative<FrequencyPayload>(packet.meta)) {
                bool first = flooding_->handle_flood_packet(receiver, packet, from);
                if (first && esrt_) esrt_->on_frequency_packet(receiver, packet);
            }
            return;
        }
        case PacketKind::Report: {
            if (params_.stack.duty_cycle) {
                if (packet.dest != receiver) return;  // overheard
                if (mac_) mac_->notify_rx_from(receiver, from, packet.id);
                if (!sim_.mark_seen(receiver, packet.id)) return;  // slot retry duplicate
                if (receiver == sim_.topology().sink()) {
                    if (esrt_) esrt_->on_report(packet);
                    return;
                }
                Packet fwd = packet;
                fwd.hop_count++;
                fwd.dest = sim_.runtime(receiver).parent;
                if (fwd.dest != kNoNode) sim_.enqueue(receiver, fwd);
                return;
            }
            bool first = flooding_->handle_flood_packet(receiver, packet, from);
            if (first && receiver == sim_.topology().sink() && esrt_)
                esrt_->on_report(packet);
            return;
        }
        case PacketKind::Query: {
            if (!irs_) return;
            const auto* q = std::get_if<QueryPayload>(&packet.meta);
            if (q && q->flood_round) {
                flooding_->handle_flood_packet(receiver, packet, from);
                irs_->on_flood_query(receiver, packet, from);
            } else {
                irs_->on_deliver(receiver, packet, from);
            }
            return;
        }
        case PacketKind::Reply:
            if (irs_) irs_->on_deliver(receiver, packet, from);
            return;
    }
}

MetricsRecord Scenario::finish(double duration) {
    MetricsRecord rec = sim_.run_until(duration);
    if (!searches_.empty()) {
        const SearchResult& first = searches_.front();
        sim_.metrics().set_discovery(first.found, first.latency_target, first.latency_sink);
        rec = sim_.metrics().finalize(sim_.now());
    }
    return rec;
}

}  // namespace wsn
