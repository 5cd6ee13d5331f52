#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rtgraph/engine.hpp"
#include "rtgraph/graph_store.hpp"
#include "rtgraph/history.hpp"
#include "rtgraph/scheduler.hpp"
#include "rtgraph/wal.hpp"

namespace rtgraph {

struct InsEdgeOp {
    VertexId src, dst;
    Weight weight;
};
struct DelEdgeOp {
    VertexId src, dst;
    Weight weight;
};
struct InsVertexOp {};
struct DelVertexOp {
    VertexId v;
};
using SingleOp = std::variant<InsEdgeOp, DelEdgeOp, InsVertexOp, DelVertexOp>;
struct TxnOp {
    std::vector<SingleOp> ops;
};
using UpdateOp = std::variant<InsEdgeOp, DelEdgeOp, InsVertexOp, DelVertexOp, TxnOp>;

enum class Classification { Safe, Unsafe, NextEpoch };

struct Reply {
    bool ok = false;
    VersionId version = 0;
    std::optional<VertexId> vertex;  // id assigned by ins_vertex
    std::string error;
    char cls = 'S';  // S safe, U unsafe, E error; for metrics

    static Reply success(VersionId v) { return Reply{true, v, std::nullopt, {}, 'S'}; }
    static Reply failure(const GraphError& e) {
        return Reply{false, 0, std::nullopt, error_code_name(e.code()), 'E'};
    }
};

struct UpdateEnvelope {
    SessionId session = 0;
    UpdateOp op;
    Classification cls = Classification::Safe;
    TimePoint enqueue_time;
    std::uint64_t seq = 0;
    std::function<void(const Reply&)> on_reply;
};

struct DatabaseConfig {
    GraphStoreConfig store;
    EngineConfig engine;
    SchedulerConfig scheduler;
    // false runs the single-executor baseline: updates processed one by one
    // with no inter-update parallelism.
    bool epoch_parallel = true;
    std::size_t max_run_per_session = 64;  // envelopes per session per micro-round
    std::string wal_path;                  // empty disables durability
    FsyncPolicy fsync = FsyncPolicy::EveryEpochPhase;
};

// Safe/unsafe classification and the epoch loop. Each epoch first applies
// safe updates from all sessions in parallel (Phase A), then drains the
// unsafe FIFO one by one (Phase B). An update is safe only when it is safe
// for every maintained algorithm; classification never scans an adjacency
// list. Per-session submission order is preserved end to end.
class Database {
public:
    Database(std::vector<AlgorithmDef> algos, DatabaseConfig config);
    ~Database();

    // -- loading (before initialize) --
    GraphStore& store() { return store_; }
    void ensure_vertices(std::uint64_t n);
    void preload_edge(VertexId src, VertexId dst, Weight weight);
    // Full recompute for every algorithm; snapshots version 0.
    void initialize();

    // -- sessions and submission --
    SessionId open_session();
    void close_session(SessionId session);
    std::future<Reply> submit(SessionId session, UpdateOp op);
    void submit_cb(SessionId session, UpdateOp op, std::function<void(const Reply&)> cb);

    // -- epoch loop --
    // Runs one epoch: Phase A until the scheduler triggers, then Phase B.
    // With wait_for_work it blocks briefly when completely idle.
    EpochReport run_epoch(bool wait_for_work = false);
    void run_loop(const std::atomic<bool>& stop);

    // Single-executor path: classify and execute one update to completion.
    // Used by the baseline mode, WAL replay, and the serial-equivalence
    // oracle.
    Reply execute_now(SessionId session, const UpdateOp& op);

    // Classification against the current state, concurrency aside. A Txn is
    // safe only when every constituent write is safe.
    Classification classify(const UpdateOp& op) const;

    // Replays committed records through the classify/apply path,
    // single-threaded, without re-appending to the log.
    void replay_wal(const std::string& path);

    // -- introspection --
    VersionId current_version() const { return version_.load(std::memory_order_acquire); }
    std::size_t algo_count() const { return engines_.size(); }
    Engine& engine(std::size_t idx = 0) { return *engines_[idx]; }
    HistoryStore& history(std::size_t idx = 0) { return *histories_[idx]; }
    Scheduler& scheduler() { return scheduler_; }
    const DatabaseConfig& config() const { return config_; }
    WalWriter* wal() { return wal_.get(); }
    std::uint64_t epochs_run() const { return epochs_run_; }

private:
    struct Session {
        std::mutex mutex;
        std::deque<UpdateEnvelope> queue;
        std::uint64_t next_seq = 0;
        bool blocked = false;  // saw an unsafe update this epoch
        bool open = true;
    };

    struct Staged {
        UpdateEnvelope env;
        Reply reply;
    };

    enum class SafeAttempt { Applied, Unsafe, Errored };

    // Phase A worker body: classify + apply under the vertex stripe locks.
    SafeAttempt try_process_safe(UpdateEnvelope& env, Reply& reply);
    Reply execute_unsafe(const UpdateOp& op);
    // exclusive = Phase B / replay: may reallocate the vertex tables.
    // Returns no reply in Phase A when growth must escalate to Phase B.
    std::optional<Reply> apply_vertex_op(const UpdateOp& op, bool exclusive);
    void grow_vertex_tables();

    bool edge_op_missing(VertexId src, VertexId dst, Weight weight, bool require_exists,
                         Reply& error) const;
    bool insert_safe_all_algos(VertexId src, VertexId dst, Weight weight) const;
    bool delete_safe_all_algos(VertexId src, VertexId dst, Weight weight) const;
    void apply_insert_to_store(VertexId src, VertexId dst, Weight weight);
    void apply_delete_to_store(VertexId src, VertexId dst, Weight weight);
    // Validates every constituent against current state plus the txn's own
    // earlier writes; optionally evaluates safety. Returns an error reply for
    // an invalid transaction.
    std::optional<Reply> validate_txn(const TxnOp& txn, bool* all_safe) const;
    void apply_txn_writes(const TxnOp& txn, std::vector<Edge>* deleted, std::vector<Edge>* inserted);
    Reply commit_engine_batch(const std::vector<Edge>& deleted, const std::vector<Edge>& inserted);
    void wal_append_op(const UpdateOp& op);

    void release_staged(std::vector<Staged>& staged, EpochReport& report);
    void lock_stripes(VertexId a, VertexId b);
    void unlock_stripes(VertexId a, VertexId b);
    std::vector<std::size_t> txn_stripe_set(const TxnOp& txn) const;

    bool undirected_;        // WCC view: edge ops are (u->v, v->u) pairs
    bool sssp_maintained_ = false;  // negative weights rejected at ingestion
    std::vector<AlgorithmDef> algo_defs_;
    DatabaseConfig config_;
    GraphStore store_;
    std::vector<std::unique_ptr<Engine>> engines_;
    std::vector<std::unique_ptr<HistoryStore>> histories_;
    Scheduler scheduler_;
    std::unique_ptr<WalWriter> wal_;
    bool replaying_ = false;

    std::atomic<VersionId> version_{0};

    // Serializes vertex creation/removal; edge appliers are excluded per
    // vertex by the stripes, never globally. Vertex-table reallocation
    // escalates to Phase B, which runs with no concurrent appliers.
    std::mutex vertex_ops_mutex_;
    static constexpr std::size_t kStripes = 256;
    struct alignas(64) Stripe {
        SpinMutex m;
    };
    std::array<Stripe, kStripes> stripes_;

    mutable std::mutex sessions_mutex_;
    std::unordered_map<SessionId, std::shared_ptr<Session>> sessions_;
    SessionId next_session_ = 1;
    std::condition_variable work_cv_;
    std::atomic<std::uint64_t> pending_ops_{0};

    std::mutex fifo_mutex_;
    std::deque<UpdateEnvelope> unsafe_fifo_;

    std::uint64_t epochs_run_ = 0;
};

}  // namespace rtgraph
