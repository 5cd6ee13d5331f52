#include "rtgraph/graph_store.hpp"

#include <algorithm>

namespace rtgraph {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownVertex: return "UnknownVertex";
        case ErrorCode::NotIsolated: return "NotIsolated";
        case ErrorCode::EdgeNotFound: return "EdgeNotFound";
        case ErrorCode::NegativeWeight: return "NegativeWeight";
        case ErrorCode::VersionReclaimed: return "VersionReclaimed";
        case ErrorCode::UnknownVersion: return "UnknownVersion";
        case ErrorCode::CorruptTail: return "CorruptTail";
        case ErrorCode::CorruptBody: return "CorruptBody";
        case ErrorCode::Protocol: return "Protocol";
    }
    return "Unknown";
}

std::uint64_t AdjacencyList::find(VertexId dst, Weight weight) const {
    if (index_) {
        auto it = index_->find(EdgeKey{dst, weight});
        return it == index_->end() ? kNotFound : it->second;
    }
    for (std::uint64_t i = 0; i < records_.size(); i++)
        if (records_[i].dst == dst && records_[i].weight == weight) return i;
    return kNotFound;
}

void AdjacencyList::build_index() {
    index_ = std::make_unique<Index>();
    index_->reserve(records_.size() * 2);
    for (std::uint64_t i = 0; i < records_.size(); i++)
        index_->emplace(EdgeKey{records_[i].dst, records_[i].weight}, i);
}

void AdjacencyList::grow() {
    capacity_ = std::max<std::uint64_t>(4, capacity_ * 2);
    std::vector<EdgeRecord> fresh;
    fresh.reserve(capacity_);
    for (const EdgeRecord& r : records_)
        if (r.count > 0) fresh.push_back(r);
    records_ = std::move(fresh);
    if (index_) build_index();
}

void AdjacencyList::compact() {
    std::erase_if(records_, [](const EdgeRecord& r) { return r.count == 0; });
    if (index_) build_index();
}

std::uint64_t AdjacencyList::tomb_count() const {
    std::uint64_t tombs = 0;
    for (const EdgeRecord& r : records_)
        if (r.count == 0) tombs++;
    return tombs;
}

InsertOutcome AdjacencyList::insert(VertexId dst, Weight weight, std::uint64_t index_threshold) {
    std::uint64_t off = find(dst, weight);
    if (off != kNotFound) {
        EdgeRecord& r = records_[off];
        if (r.count > 0) {
            r.count++;
            return InsertOutcome::DuplicateIncrement;
        }
        // revive a tomb in place
        r.count = 1;
        live_degree_++;
    } else {
        if (records_.size() == capacity_) grow();
        records_.push_back(EdgeRecord{dst, weight, 1});
        if (index_) index_->emplace(EdgeKey{dst, weight}, records_.size() - 1);
        live_degree_++;
    }
    if (!index_ && live_degree_ > index_threshold) build_index();
    return InsertOutcome::NewEdge;
}

DeleteOutcome AdjacencyList::erase(VertexId dst, Weight weight) {
    std::uint64_t off = find(dst, weight);
    if (off == kNotFound || records_[off].count == 0)
        throw_error(ErrorCode::EdgeNotFound, "no live edge to delete");
    EdgeRecord& r = records_[off];
    if (--r.count == 0) {
        live_degree_--;
        return DeleteOutcome::Removed;
    }
    return DeleteOutcome::DuplicateDecrement;
}

std::uint64_t AdjacencyList::count(VertexId dst, Weight weight) const {
    std::uint64_t off = find(dst, weight);
    return off == kNotFound ? 0 : records_[off].count;
}

GraphStore::GraphStore(GraphStoreConfig config) : config_(config) {
    if (config_.index_threshold == 0 ||
        (config_.index_threshold & (config_.index_threshold - 1)) != 0)
        throw std::invalid_argument("index_threshold must be a power of two");
}

void GraphStore::check_live(VertexId v) const {
    if (!is_live(v)) throw_error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v) + " is not live");
}

void GraphStore::reserve(std::uint64_t n) {
    if (n <= reserved_) return;
    auto live = std::make_unique<std::atomic<std::uint8_t>[]>(n);
    std::uint64_t size = size_.load(std::memory_order_relaxed);
    for (std::uint64_t v = 0; v < size; v++)
        live[v].store(live_[v].load(std::memory_order_relaxed), std::memory_order_relaxed);
    for (std::uint64_t v = size; v < n; v++) live[v].store(0, std::memory_order_relaxed);
    live_ = std::move(live);
    out_.reserve(n);
    in_.reserve(n);
    reserved_ = n;
}

std::optional<VertexId> GraphStore::try_allocate_vertex() {
    VertexId v;
    if (!recycled_.empty()) {
        v = recycled_.back();
        recycled_.pop_back();
    } else {
        std::uint64_t size = size_.load(std::memory_order_relaxed);
        if (size >= reserved_) return std::nullopt;  // would reallocate
        v = size;
        out_.emplace_back();
        in_.emplace_back();
        size_.store(size + 1, std::memory_order_release);
    }
    num_vertices_++;
    return v;
}

void GraphStore::publish_vertex(VertexId v) { live_[v].store(1, std::memory_order_release); }

VertexId GraphStore::add_vertex() {
    if (recycled_.empty() && size_.load(std::memory_order_relaxed) >= reserved_)
        reserve(std::max<std::uint64_t>(64, reserved_ * 2));
    VertexId v = *try_allocate_vertex();
    publish_vertex(v);
    return v;
}

void GraphStore::remove_vertex(VertexId v) {
    check_live(v);
    if (out_[v].live_degree() > 0 || in_[v].live_degree() > 0)
        throw_error(ErrorCode::NotIsolated, "vertex " + std::to_string(v) + " has live edges");
    live_[v].store(0, std::memory_order_release);
    recycled_.push_back(v);
    num_vertices_--;
}

InsertOutcome GraphStore::insert_edge(VertexId src, VertexId dst, Weight weight) {
    check_live(src);
    check_live(dst);
    InsertOutcome out = out_[src].insert(dst, weight, config_.index_threshold);
    in_[dst].insert(src, weight, config_.index_threshold);
    bump_edges(src, 1);
    return out;
}

DeleteOutcome GraphStore::delete_edge(VertexId src, VertexId dst, Weight weight) {
    check_live(src);
    check_live(dst);
    DeleteOutcome out = out_[src].erase(dst, weight);
    in_[dst].erase(src, weight);
    bump_edges(src, -1);
    return out;
}

std::uint64_t GraphStore::lookup_count(VertexId src, VertexId dst, Weight weight) const {
    check_live(src);
    return out_[src].count(dst, weight);
}

std::uint64_t GraphStore::out_degree(VertexId v) const {
    check_live(v);
    return out_[v].live_degree();
}

std::uint64_t GraphStore::in_degree(VertexId v) const {
    check_live(v);
    return in_[v].live_degree();
}

void GraphStore::compact(VertexId v) {
    check_live(v);
    out_[v].compact();
    in_[v].compact();
}

}  // namespace rtgraph
