#include "rtgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rtgraph {

RunMetrics compute_metrics(const std::vector<LatencySample>& samples, Micros wall,
                           Micros latency_limit, std::vector<double> threshold_trace) {
    RunMetrics m;
    m.total_ops = samples.size();
    m.wall = wall;
    m.threshold_trace = std::move(threshold_trace);
    if (samples.empty()) return m;

    if (wall.count() > 0)
        m.throughput_ops_s = static_cast<double>(samples.size()) * 1e6 /
                             static_cast<double>(wall.count());

    std::uint64_t sum = 0, timeouts = 0;
    std::vector<std::uint64_t> lat;
    lat.reserve(samples.size());
    for (const auto& s : samples) {
        sum += s.latency_us;
        lat.push_back(s.latency_us);
        if (static_cast<std::int64_t>(s.latency_us) > latency_limit.count()) timeouts++;
    }
    m.mean_latency = Micros(sum / samples.size());
    m.timeout_fraction = static_cast<double>(timeouts) / static_cast<double>(samples.size());

    if (samples.size() >= 10'000) {
        std::sort(lat.begin(), lat.end());
        std::size_t idx = static_cast<std::size_t>(
            std::ceil(0.999 * static_cast<double>(lat.size())));
        m.p999 = Micros(static_cast<std::int64_t>(lat[std::min(idx, lat.size()) - 1]));
    }
    return m;
}

void write_latency_csv(const std::string& path, const std::vector<LatencySample>& samples) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "ts,op_index,class,latency_us\n";
    for (const auto& s : samples)
        out << s.ts_us << ',' << s.op_index << ',' << s.cls << ',' << s.latency_us << '\n';
}

void write_epoch_csv(const std::string& path, const std::vector<EpochReport>& reports,
                     const std::vector<double>& thresholds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "epoch,safe,unsafe,deferred,wall_us,threshold\n";
    for (std::size_t i = 0; i < reports.size(); i++) {
        out << i << ',' << reports[i].safe_count << ',' << reports[i].unsafe_count << ','
            << reports[i].deferred_count << ',' << reports[i].epoch_wall_time.count() << ','
            << (i < thresholds.size() ? thresholds[i] : 0.0) << '\n';
    }
}

}  // namespace rtgraph
