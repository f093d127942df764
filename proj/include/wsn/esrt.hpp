#pragma once

#include <map>
#include <vector>

#include "wsn/flooding.hpp"
#include "wsn/simulator.hpp"

namespace wsn {

enum class EsrtRegion { OOR, NC_LR, NC_HR, C_HR, C_LR };

const char* to_string(EsrtRegion region);

struct EpochObservation {
    double eta{0.0};
    bool congested{false};
};

// eta = received reports / desired reports; congested iff any received packet
// carried the congestion bit.
EpochObservation observe_epoch(double received_reports, bool any_congestion_bit,
                               double desired_reports);

EsrtRegion classify_region(double eta, bool congested, double epsilon);

// OOR: f.  NC_LR: f/eta.  NC_HR: (f/2)(1 + 1/eta).  C_HR: f/eta.  C_LR: f*eta/2.
// eta = 0 under a division rule clamps to f_max. Result clamped to [f_min, f_max].
double update_frequency(double f, EsrtRegion region, double eta, double f_min, double f_max);

struct EsrtParams {
    double desired_reports{40.0};  // R, per epoch
    double epsilon{0.05};
    double epoch_length{2.0};  // s
    double f0{1.0};            // reports/s installed at setup
    double f_min{0.1};
    double f_max{100.0};
    int control_bytes{32};
};

struct EsrtHistoryEntry {
    int epoch{0};
    double eta{0.0};
    EsrtRegion region{EsrtRegion::OOR};
    double frequency{0.0};
};

// Sink-resident regulation loop: tallies Report packets per epoch, classifies
// the operating region, and floods one updated frequency to every source.
// Sources adopt a received frequency starting at the next epoch boundary.
class EsrtController {
  public:
    EsrtController(Simulator& sim, EsrtParams params, Flooding& flooding,
                   std::vector<NodeId> sources);

    // schedules epoch boundaries at first_boundary, +epoch_length, ...
    void start(double first_boundary);

    void on_report(const Packet& packet);                 // sink receipt
    void on_frequency_packet(NodeId node, const Packet&); // source adoption (pending)

    double source_frequency(NodeId node) const;  // frequency in force right now
    double sink_frequency() const { return frequency_; }
    const std::vector<EsrtHistoryEntry>& history() const { return history_; }
    const std::vector<NodeId>& sources() const { return sources_; }

    // fires right before the sink classifies, with the boundary time
    std::function<void(int epoch, double boundary)> on_epoch_boundary;

  private:
    Simulator& sim_;
    EsrtParams params_;
    Flooding& flooding_;
    std::vector<NodeId> sources_;

    int epoch_{0};
    double received_{0.0};
    bool congestion_seen_{false};
    double frequency_;  // sink's view
    std::map<NodeId, double> source_current_;
    std::map<NodeId, double> source_pending_;
    std::vector<EsrtHistoryEntry> history_;

    void boundary(double time);
    void broadcast_frequency(double f_new);
};

}  // namespace wsn
