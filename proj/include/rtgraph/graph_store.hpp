#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "rtgraph/types.hpp"

namespace rtgraph {

// One adjacency slot. count == 0 marks a tomb: the edge was deleted but its
// slot is kept in place until the next capacity doubling reclaims it.
struct EdgeRecord {
    VertexId dst = 0;
    Weight weight = 0;
    std::uint64_t count = 0;
};

struct EdgeKey {
    VertexId dst = 0;
    Weight weight = 0;

    bool operator==(const EdgeKey&) const = default;
};

struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const noexcept {
        // splitmix64-style mix of both fields
        std::uint64_t x = k.dst + 0x9e3779b97f4a7c15ull;
        x ^= static_cast<std::uint64_t>(k.weight) * 0xbf58476d1ce4e5b9ull;
        x ^= x >> 30;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 31;
        return static_cast<std::size_t>(x);
    }
};

enum class InsertOutcome { NewEdge, DuplicateIncrement };
enum class DeleteOutcome { Removed, DuplicateDecrement };

// Per-vertex edge array with an optional (dst, weight) -> offset hash index.
// The index is built once live_degree first exceeds the threshold and is
// never dropped. Entries are keyed per edge class: at most one record per
// (dst, weight), duplicates tracked by count.
class AdjacencyList {
public:
    using Index = std::unordered_map<EdgeKey, std::uint64_t, EdgeKeyHash>;

    InsertOutcome insert(VertexId dst, Weight weight, std::uint64_t index_threshold);
    // Throws EdgeNotFound when no live record matches.
    DeleteOutcome erase(VertexId dst, Weight weight);

    std::uint64_t count(VertexId dst, Weight weight) const;

    // Raw record span including tombs; iteration must skip count == 0.
    std::span<const EdgeRecord> records() const { return {records_.data(), records_.size()}; }

    std::uint64_t live_degree() const { return live_degree_; }
    bool has_index() const { return index_ != nullptr; }
    std::uint64_t capacity() const { return capacity_; }
    std::uint64_t tomb_count() const;

    // Drops tombs and rebuilds the index without changing capacity.
    void compact();

private:
    static constexpr std::uint64_t kNotFound = std::numeric_limits<std::uint64_t>::max();

    std::uint64_t find(VertexId dst, Weight weight) const;
    void grow();
    void build_index();

    std::vector<EdgeRecord> records_;
    std::unique_ptr<Index> index_;
    std::uint64_t live_degree_ = 0;
    std::uint64_t capacity_ = 0;
};

struct GraphStoreConfig {
    std::uint64_t index_threshold = 512;  // power of two
};

// Mutable directed multigraph: per-vertex edge arrays plus a transpose for
// incoming-edge traversal. Deleted vertex ids are recycled.
//
// Concurrency: mutations on the same vertex's adjacency must be serialized
// externally (the engine layer holds stripe locks). Vertex creation follows
// an allocate/publish protocol: within reserved capacity a new id can be
// installed while edge appliers run, becoming visible only at the
// release-store of its live flag. Anything that reallocates (reserve,
// add_vertex past the reservation) requires exclusive access.
class GraphStore {
public:
    explicit GraphStore(GraphStoreConfig config = {});

    // Exclusive contexts only; grows the reservation as needed.
    VertexId add_vertex();
    // Phase-A path: fails (nullopt) when growth would reallocate. The id is
    // not visible to is_live until publish_vertex.
    std::optional<VertexId> try_allocate_vertex();
    void publish_vertex(VertexId v);
    // Pre-sizes the vertex table; exclusive contexts only.
    void reserve(std::uint64_t n);
    std::uint64_t reserved() const { return reserved_; }

    void remove_vertex(VertexId v);
    bool is_live(VertexId v) const {
        return v < size_.load(std::memory_order_acquire) &&
               live_[v].load(std::memory_order_acquire);
    }

    InsertOutcome insert_edge(VertexId src, VertexId dst, Weight weight);
    DeleteOutcome delete_edge(VertexId src, VertexId dst, Weight weight);
    std::uint64_t lookup_count(VertexId src, VertexId dst, Weight weight) const;

    // Live-record iteration; fn(const EdgeRecord&). Tombs are skipped and the
    // index is never consulted.
    template <typename F>
    void for_each_out(VertexId v, F&& fn) const {
        check_live(v);
        for (const EdgeRecord& r : out_[v].records())
            if (r.count > 0) fn(r);
    }
    template <typename F>
    void for_each_in(VertexId v, F&& fn) const {
        check_live(v);
        for (const EdgeRecord& r : in_[v].records())
            if (r.count > 0) fn(r);
    }

    // Unchecked raw spans for engine hot loops (tombs included).
    std::span<const EdgeRecord> out_records(VertexId v) const { return out_[v].records(); }
    std::span<const EdgeRecord> in_records(VertexId v) const { return in_[v].records(); }

    const AdjacencyList& out_list(VertexId v) const { return out_[v]; }
    const AdjacencyList& in_list(VertexId v) const { return in_[v]; }

    std::uint64_t out_degree(VertexId v) const;
    std::uint64_t in_degree(VertexId v) const;

    // Dense id upper bound (live or recycled); engine arrays size to this.
    std::uint64_t capacity() const { return size_.load(std::memory_order_acquire); }
    std::uint64_t num_vertices() const { return num_vertices_; }
    // Live edge count including duplicate multiplicity.
    std::uint64_t num_edges() const {
        std::int64_t sum = 0;
        for (const auto& shard : edge_count_) sum += shard.n.load(std::memory_order_relaxed);
        return static_cast<std::uint64_t>(sum);
    }
    std::uint64_t index_threshold() const { return config_.index_threshold; }

    // Maintenance hook for tests; reclaims tombs in both directions of v.
    void compact(VertexId v);

private:
    void check_live(VertexId v) const;
    void bump_edges(VertexId src, std::int64_t d) {
        edge_count_[src % kCountShards].n.fetch_add(d, std::memory_order_relaxed);
    }

    // sharded so concurrent appliers do not fight over one counter line
    static constexpr std::size_t kCountShards = 16;
    struct alignas(64) CountShard {
        std::atomic<std::int64_t> n{0};
    };

    GraphStoreConfig config_;
    std::vector<AdjacencyList> out_;
    std::vector<AdjacencyList> in_;
    std::unique_ptr<std::atomic<std::uint8_t>[]> live_;
    std::atomic<std::uint64_t> size_{0};  // ids handed out so far
    std::uint64_t reserved_ = 0;
    std::vector<VertexId> recycled_;
    std::uint64_t num_vertices_ = 0;
    std::array<CountShard, kCountShards> edge_count_;
};

}  // namespace rtgraph
