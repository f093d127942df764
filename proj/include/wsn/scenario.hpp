#pragma once

#include <memory>
#include <string>

#include "wsn/esrt.hpp"
#include "wsn/flooding.hpp"
#include "wsn/irs.hpp"
#include "wsn/mac.hpp"
#include "wsn/simulator.hpp"

namespace wsn {

struct StackChoice {
    bool duty_cycle{false};  // the "zigbee" token
    bool irs{false};
    bool esrt{false};
    bool flood{false};
};

std::string to_string(const StackChoice& stack);
std::optional<StackChoice> stack_from_string(const std::string& s);

struct ScenarioParams {
    StackChoice stack;
    double setup_window{2.0};   // s; CSMA tree setup, then data traffic starts
    bool instant_tree{false};   // install the BFS tree directly, no setup phase
    double search_period{10.0};
    int max_searches{-1};       // < 0: as many as fit; 0: none
    int frame_length{16};
    int miss_limit{1};
    int resync_frames{4};
    double guard_time{0.001};
    double cs_window{0.001};
    int rays_k0{4};
    int rays_max{64};
    double corridor_width{0.0};  // <= 0: radio range
    EsrtParams esrt;
    bool sources_all{false};     // default: the target node is the only source
    double fixed_report_rate{1.0};  // reports/s when ESRT is off
    int report_bytes{100};
    int query_bytes{64};
    int reply_bytes{64};
    int beacon_bytes{32};
    int beacon_repeats{3};
};

// Assembles one simulation: tree setup, duty-cycled TDMA or always-on CSMA,
// flooding, IRS discovery, ESRT regulation and report traffic, per the stack.
class Scenario {
  public:
    Scenario(Simulator& sim, ScenarioParams params);

    void start();

    // discovery result of the run's first search lands in the metrics record
    MetricsRecord finish(double duration);

    const std::vector<SearchResult>& searches() const { return searches_; }
    double data_start() const { return data_start_; }
    double slot_duration() const { return slot_duration_; }
    Flooding& flooding() { return *flooding_; }
    IrsSearch* irs() { return irs_.get(); }
    EsrtController* esrt() { return esrt_.get(); }
    DutyCycleMac* mac() { return mac_.get(); }

  private:
    Simulator& sim_;
    ScenarioParams params_;
    double slot_duration_;
    double frame_duration_;
    double data_start_;
    double control_window_;

    std::unique_ptr<TreeSetup> tree_setup_;
    std::unique_ptr<DutyCycleMac> mac_;
    std::unique_ptr<CsmaService> service_;
    std::unique_ptr<Flooding> flooding_;
    std::unique_ptr<IrsSearch> irs_;
    std::unique_ptr<EsrtController> esrt_;

    bool setup_phase_{false};
    std::vector<SearchResult> searches_;

    void dispatch(NodeId receiver, const Packet& packet, NodeId from);
    void finish_setup(const TreeLinks& tree);
    void start_protocols();
    void schedule_search(double at);
    void schedule_report(NodeId source, double at);
    void hold_control_window(double boundary);
    std::vector<NodeId> pick_sources() const;
};

}  // namespace wsn
