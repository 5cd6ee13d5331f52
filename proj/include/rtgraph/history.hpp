#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "rtgraph/engine.hpp"
#include "rtgraph/types.hpp"

namespace rtgraph {

// Multi-version result snapshots. Each vertex carries a linked chain of
// (version, value, parent) entries, newest first; each version records the
// vertices its commit modified. Version 0 is the post-initial-load snapshot;
// vertices never modified resolve against the baseline arrays, so chains are
// materialized lazily on first modification.
//
// Writes happen inside the commit critical section (single-threaded). Reads
// may run concurrently; they share a lock only with reclamation, which is the
// one writer that frees memory.
class HistoryStore {
public:
    HistoryStore() = default;
    ~HistoryStore();

    HistoryStore(const HistoryStore&) = delete;
    HistoryStore& operator=(const HistoryStore&) = delete;

    // Version-0 baseline.
    void set_initial(const DependencyState& state);
    // Registers a created (or recycled) vertex id with its initial value.
    void note_new_vertex(VertexId v, Value initial_value);

    // Commit hooks. record_version mints current + 1; record_at is the
    // multi-algorithm path where the caller owns the version counter.
    VersionId record_version(const ChangeSet& changes);
    void record_at(VersionId version, const ChangeSet& changes);

    Value get_value(VersionId version, VertexId v) const;
    std::optional<ParentLink> get_parent(VersionId version, VertexId v) const;
    std::vector<VertexId> get_modified_vertices(VersionId version) const;

    VersionId current_version() const { return current_.load(std::memory_order_acquire); }

    void open_session(SessionId session);
    void close_session(SessionId session);
    // Marks all versions <= version unused by the session.
    void release_history(SessionId session, VersionId version);
    // Periodic reclamation: advances the frontier to the minimum released
    // version over all sessions, eagerly drops modified-vertex lists at or
    // below it; chain tails are trimmed lazily when their vertex is next
    // written. A vertex untouched since the frontier keeps one resolvable
    // entry for current reads.
    void reclaim_tick();

    // Versions still holding modified lists (reclaim monitoring).
    std::uint64_t retained_versions() const;

private:
    struct Node {
        VersionId version;
        Value value;
        ParentLink parent;  // src == kNoVertex when none
        Node* older = nullptr;
        Node* newer = nullptr;
    };
    struct Chain {
        std::atomic<Node*> head{nullptr};
        Node* tail = nullptr;
    };

    const Node* resolve(VersionId version, VertexId v) const;
    void check_readable(VersionId version) const;
    void check_vertex(VertexId v) const;
    void trim_chain(Chain& chain);
    void free_chain(Chain& chain);

    std::atomic<VersionId> current_{0};
    std::atomic<std::int64_t> frontier_{-1};  // highest reclaimed version

    std::vector<Value> initial_values_;
    std::vector<ParentLink> initial_parents_;
    std::deque<Chain> chains_;  // deque: growth never moves existing chains

    // Guards reads against reclamation (the only writer that frees memory)
    // and the modified-list deque against concurrent growth.
    mutable std::shared_mutex mutex_;
    std::deque<std::vector<VertexId>> modified_;  // index 0 <-> version modified_base_
    VersionId modified_base_ = 0;

    mutable std::mutex sessions_mutex_;
    std::unordered_map<SessionId, std::int64_t> released_;  // -1: nothing released yet
};

}  // namespace rtgraph
