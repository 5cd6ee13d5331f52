#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rtgraph/scheduler.hpp"

namespace rtgraph {

struct LatencySample {
    std::uint64_t ts_us = 0;  // since run start
    std::uint64_t op_index = 0;
    char cls = 'S';  // S safe, U unsafe, E error
    std::uint64_t latency_us = 0;
};

struct RunMetrics {
    std::uint64_t total_ops = 0;
    Micros wall{0};
    double throughput_ops_s = 0;
    Micros mean_latency{0};
    // exact percentile over the full sample; absent for runs under 10^4
    // updates, which are too short to report a P999
    std::optional<Micros> p999;
    double timeout_fraction = 0;
    std::vector<double> threshold_trace;  // per epoch
};

RunMetrics compute_metrics(const std::vector<LatencySample>& samples, Micros wall,
                           Micros latency_limit, std::vector<double> threshold_trace);

void write_latency_csv(const std::string& path, const std::vector<LatencySample>& samples);
void write_epoch_csv(const std::string& path, const std::vector<EpochReport>& reports,
                     const std::vector<double>& thresholds);

}  // namespace rtgraph
