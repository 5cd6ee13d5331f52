#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "rtgraph/ccontrol.hpp"

namespace rtgraph {

struct ServerConfig {
    std::string graph_path;  // optional preload edge list
    std::string algorithm = "bfs";
    VertexId root = 0;
    int threads = 1;
    int latency_ms = 20;
    double target_percentile = 0.999;
    std::string wal_path;
    FsyncPolicy fsync = FsyncPolicy::EveryEpochPhase;
    std::uint16_t port = 0;  // 0 picks an ephemeral port
    std::uint64_t index_threshold = 512;
    EngineConfig::Mode mode = EngineConfig::Mode::Hybrid;
    std::string model_path;
    bool epoch_parallel = true;
    int reclaim_period_ms = 1000;
    std::uint64_t retained_warning = 100'000;
};

// Network front door: one TCP connection per session, newline-delimited JSON
// requests and responses. Updates flow through the epoch loop; reads execute
// directly against the history store but responses still leave in per-session
// request order.
class Server {
public:
    explicit Server(ServerConfig config);
    ~Server();

    // Loads the graph, replays any WAL, binds and spawns the worker threads.
    void start();
    std::uint16_t port() const { return port_; }
    void stop();

    Database& database() { return *db_; }

private:
    struct Connection;

    void accept_loop();
    void reclaim_loop();
    void connection_loop(std::shared_ptr<Connection> conn);
    void handle_request(Connection& conn, const std::string& line);

    ServerConfig config_;
    std::unique_ptr<Database> db_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stop_{false};
    std::thread epoch_thread_;
    std::thread accept_thread_;
    std::thread reclaim_thread_;
    std::mutex connections_mutex_;
    std::vector<std::shared_ptr<Connection>> connections_;
    bool warned_retained_ = false;
};

}  // namespace rtgraph
