#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rtgraph/active_set.hpp"
#include "rtgraph/algorithms.hpp"
#include "rtgraph/graph_store.hpp"
#include "rtgraph/parallel_mode.hpp"
#include "rtgraph/types.hpp"

namespace rtgraph {

// Per-vertex current value plus the bottom-up parent link justifying it.
// Values are atomics so push workers can read them concurrently; parent
// writes and test-and-improve are serialized by a per-vertex spinlock.
class DependencyState {
public:
    DependencyState() = default;
    explicit DependencyState(std::uint64_t n) { ensure(n); }

    DependencyState(const DependencyState& other) { *this = other; }
    DependencyState& operator=(const DependencyState& other);
    DependencyState(DependencyState&&) = default;
    DependencyState& operator=(DependencyState&&) = default;

    // Reallocates the backing arrays; exclusive contexts only.
    void reserve(std::uint64_t cap);
    // Grows the logical size, reallocating only past the reservation. Within
    // it, new slots are initialized in place and become meaningful once the
    // owning vertex is published.
    void ensure(std::uint64_t n);
    std::uint64_t size() const { return size_; }
    std::uint64_t reserved() const { return cap_; }

    Value value(VertexId v) const { return values_[v].load(std::memory_order_acquire); }
    void set_value(VertexId v, Value x) { values_[v].store(x, std::memory_order_release); }

    std::optional<ParentLink> parent(VertexId v) const {
        const ParentLink& p = parents_[v];
        if (p.src == kNoVertex) return std::nullopt;
        return p;
    }
    bool has_parent(VertexId v) const { return parents_[v].src != kNoVertex; }
    const ParentLink& parent_raw(VertexId v) const { return parents_[v]; }
    void set_parent(VertexId v, ParentLink p) { parents_[v] = p; }
    void clear_parent(VertexId v) { parents_[v] = ParentLink{}; }

    void lock(VertexId v) {
        while (locks_[v].exchange(1, std::memory_order_acquire)) {
        }
    }
    void unlock(VertexId v) { locks_[v].store(0, std::memory_order_release); }

    std::vector<Value> values_snapshot() const;
    std::vector<ParentLink> parents_snapshot() const { return parents_; }

private:
    std::unique_ptr<std::atomic<Value>[]> values_;
    std::unique_ptr<std::atomic<std::uint8_t>[]> locks_;
    std::vector<ParentLink> parents_;
    std::uint64_t size_ = 0;
    std::uint64_t cap_ = 0;
};

struct ChangeEntry {
    VertexId vertex = 0;
    Value old_value = 0;
    Value new_value = 0;
    std::optional<ParentLink> old_parent;
    std::optional<ParentLink> new_parent;
};

// Modified vertices of one unsafe update, each listed exactly once with its
// final value/parent. Empty for updates that turned out not to change state.
using ChangeSet = std::vector<ChangeEntry>;

// First-touch log of pre-update values. record() runs under the vertex's
// spinlock, so the stamp array needs no further synchronization.
class ChangeLogSink {
public:
    void reset(std::uint64_t vertices, int workers);
    void record(int worker, VertexId v, Value old_value, const ParentLink& old_parent) {
        if (stamp_[v] == generation_) return;
        stamp_[v] = generation_;
        logs_[worker].push_back({v, old_value, old_parent});
    }
    ChangeSet collect(const DependencyState& state) const;

private:
    struct OldRec {
        VertexId vertex;
        Value value;
        ParentLink parent;
    };
    std::vector<std::uint64_t> stamp_;
    std::vector<std::vector<OldRec>> logs_;
    std::uint64_t generation_ = 0;
};

struct EngineConfig {
    int threads = 1;
    bool parallel = true;  // OpenMP kernels; false selects the serial reference path
    enum class Mode { Vertex, Edge, Hybrid } mode = Mode::Hybrid;
    ParallelModeModel model = ParallelModeModel::default_model();

    static EngineConfig serial_reference() {
        EngineConfig c;
        c.threads = 1;
        c.parallel = false;
        return c;
    }
};

// Least-fixpoint state reached from init_val by gen_next/need_upd relaxation.
// The serial-reference configuration of this routine is the oracle the tests
// replay against.
DependencyState full_recompute(const GraphStore& graph, const AlgorithmDef& algo,
                               const EngineConfig& config = EngineConfig::serial_reference());

// Incremental maintenance of one algorithm's DependencyState. Unsafe updates
// run one at a time (callers hold engine-wide exclusivity); inside an update
// push/pull rounds fan out over the configured worker pool.
class Engine {
public:
    Engine(const GraphStore& graph, AlgorithmDef algo, EngineConfig config);

    const AlgorithmDef& algo() const { return algo_; }
    const EngineConfig& config() const { return config_; }
    DependencyState& state() { return state_; }
    const DependencyState& state() const { return state_; }

    // Recompute from scratch into the live state (initial load).
    void initialize();

    // The edges must already be applied to / removed from the graph store.
    ChangeSet apply_unsafe_batch(std::span<const Edge> deleted, std::span<const Edge> inserted);
    ChangeSet apply_unsafe_insert(const Edge& e) { return apply_unsafe_batch({}, {&e, 1}); }
    ChangeSet apply_unsafe_delete(const Edge& e) { return apply_unsafe_batch({&e, 1}, {}); }

    // O(1) classification hooks.
    bool is_tree_edge(const Edge& e) const {
        return state_.parent_raw(e.dst) == ParentLink{e.src, e.weight};
    }
    bool insert_is_safe(const Edge& e) const {
        return !algo_.need_upd(e.dst, state_.value(e.dst),
                               algo_.gen_next(e.weight, state_.value(e.src)));
    }

    // Checks the DependencyState invariants: parent links live and
    // value-justifying, unreached/root parent rules, forest shape, and the
    // no-improvable-edge fixpoint. O(V + E); test mode only.
    bool validate_state(std::string* why = nullptr) const;

    void ensure_capacity(std::uint64_t n);
    void reserve_capacity(std::uint64_t n);
    // (Re)initialize one vertex, used when ids are created or recycled.
    void reset_vertex(VertexId v);

    // Exposed for the round-level unit tests and the mode benchmark.
    void seed_active(VertexId v, Value value) { active_in_.push(0, v, value); }
    std::uint64_t push_round(ChangeLogSink* log);
    void push_to_fixpoint(ChangeLogSink* log);

private:
    friend DependencyState full_recompute(const GraphStore&, const AlgorithmDef&,
                                          const EngineConfig&);

    bool try_improve(int worker, VertexId src, VertexId dst, Weight weight, Value src_value,
                     ChangeLogSink* log);
    PushStrategy pick_strategy(std::uint64_t active_vertices, std::uint64_t active_degree) const;

    const GraphStore& graph_;
    AlgorithmDef algo_;
    EngineConfig config_;
    DependencyState state_;

    SparseActiveSet active_in_;
    SparseActiveSet active_out_;
    std::vector<SparseActiveSet::Entry> flat_;
    std::vector<std::uint64_t> edge_offsets_;
    Bitmap invalidated_;
    ChangeLogSink log_;
};

}  // namespace rtgraph
