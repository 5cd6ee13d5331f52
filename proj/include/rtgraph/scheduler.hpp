#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace rtgraph {

using Clock = std::chrono::steady_clock;
using TimePoint = Clock::time_point;
using Micros = std::chrono::microseconds;

struct EpochReport {
    std::uint64_t safe_count = 0;
    std::uint64_t unsafe_count = 0;
    std::uint64_t deferred_count = 0;
    Micros epoch_wall_time{0};
    std::vector<Micros> latencies;  // enqueue-to-reply, one per completed update
};

struct SchedulerConfig {
    Micros latency_limit{20'000};
    double target_fraction = 0.999;
    double trigger_fraction = 0.8;
    int adjust_period_epochs = 3;
    double increase_rate = 0.01;
    double decrease_rate = 0.10;
    double initial_threshold = 1.0;  // the configured worker count
};

// Decides when the epoch loop stops packing safe updates and drains the
// unsafe FIFO. Two triggers: the oldest queued unsafe update has waited
// trigger_fraction of the latency limit, or the queue reached a dynamic
// threshold adjusted from the qualified-latency fraction of recent epochs.
class Scheduler {
public:
    explicit Scheduler(SchedulerConfig config = {})
        : config_(config), threshold_(std::max(1.0, config.initial_threshold)) {}

    const SchedulerConfig& config() const { return config_; }

    bool should_start_unsafe_phase(TimePoint now, std::optional<TimePoint> oldest_enqueue,
                                   std::uint64_t queue_length) const {
        if (queue_length == 0) return false;
        if (oldest_enqueue) {
            auto waited = std::chrono::duration_cast<Micros>(now - *oldest_enqueue);
            auto trigger = Micros(static_cast<std::int64_t>(
                config_.trigger_fraction * static_cast<double>(config_.latency_limit.count())));
            if (waited >= trigger) return true;
        }
        return queue_length >= threshold_ceiling();
    }

    // Every adjust_period_epochs epochs: raise the threshold slowly while the
    // qualified fraction holds, cut it quickly when it does not. The window
    // covers all updates since the last adjustment.
    void on_epoch_complete(const EpochReport& report) {
        for (Micros lat : report.latencies)
            if (lat <= config_.latency_limit) window_qualified_++;
        window_total_ += report.latencies.size();
        if (++epochs_in_window_ < config_.adjust_period_epochs) return;

        bool qualified = window_total_ == 0 ||
                         static_cast<double>(window_qualified_) >=
                             config_.target_fraction * static_cast<double>(window_total_);
        if (qualified)
            threshold_ *= 1.0 + config_.increase_rate;
        else
            threshold_ *= 1.0 - config_.decrease_rate;
        threshold_ = std::max(1.0, threshold_);
        epochs_in_window_ = 0;
        window_qualified_ = 0;
        window_total_ = 0;
    }

    double threshold() const { return threshold_; }
    std::uint64_t threshold_ceiling() const {
        return static_cast<std::uint64_t>(std::ceil(threshold_));
    }

private:
    SchedulerConfig config_;
    double threshold_;
    int epochs_in_window_ = 0;
    std::uint64_t window_qualified_ = 0;
    std::uint64_t window_total_ = 0;
};

}  // namespace rtgraph
