#pragma once

#include <string>
#include <vector>

#include "rtgraph/ccontrol.hpp"
#include "rtgraph/metrics.hpp"
#include "rtgraph/workload.hpp"

namespace rtgraph {

// -- oracle verification ----------------------------------------------------

struct VerifyResult {
    bool pass = true;
    std::uint64_t updates_run = 0;
    std::uint64_t safe_count = 0;
    std::uint64_t unsafe_count = 0;
    std::uint64_t error_count = 0;
    // first divergence, when pass == false
    std::uint64_t failed_update = 0;
    std::string what;
};

// Applies the stream one update at a time; after every update the engine
// state must equal a from-scratch recompute exactly, validate_state must
// hold, safe updates must change nothing, and unsafe updates must change
// something or be a tree-edge event.
VerifyResult verify_stream(Database& db, const std::vector<UpdateOp>& stream,
                           bool check_every = true);

// -- closed-loop benchmark ---------------------------------------------------

struct BenchOptions {
    std::uint32_t sessions = 1;
    Micros duration{0};        // 0: single pass over the stream
    Micros latency_limit{20'000};
    // Open loop pre-enqueues every session's stream and measures drain rate
    // (server-side throughput); closed loop emulates synchronous users.
    bool open_loop = false;
    std::string latency_csv;   // optional outputs
    std::string epoch_csv;
};

struct BenchOutcome {
    RunMetrics metrics;
    std::vector<LatencySample> samples;
    std::vector<EpochReport> reports;
    std::vector<double> thresholds;
    std::uint64_t safe_count = 0;
    std::uint64_t unsafe_count = 0;
    std::uint64_t error_count = 0;
};

// Emulated synchronous users: each session repeatedly sends one update and
// waits for the response. Duration-bound runs replay the stream with op
// kinds flipped on alternating passes, so every pass is valid against the
// evolving graph.
BenchOutcome run_bench_inprocess(Database& db, const Workload& workload,
                                 const BenchOptions& options);

// -- line-protocol client (TCP bench / tests) --------------------------------

class JsonClient {
public:
    JsonClient(const std::string& host, std::uint16_t port);
    ~JsonClient();

    // sends {"id":..,"op":..,"args":[..]} and waits for the matching line
    std::string request(const std::string& op, const std::string& args_json);
    void send_raw(const std::string& line);
    std::string read_line();

private:
    int fd_ = -1;
    std::uint64_t next_id_ = 1;
    std::string buffer_;
};

}  // namespace rtgraph
