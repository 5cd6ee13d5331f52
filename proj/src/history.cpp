#include "rtgraph/history.hpp"

#include <algorithm>

namespace rtgraph {

HistoryStore::~HistoryStore() {
    for (Chain& chain : chains_) free_chain(chain);
}

void HistoryStore::free_chain(Chain& chain) {
    Node* node = chain.head.load(std::memory_order_relaxed);
    while (node) {
        Node* older = node->older;
        delete node;
        node = older;
    }
    chain.head.store(nullptr, std::memory_order_relaxed);
    chain.tail = nullptr;
}

void HistoryStore::set_initial(const DependencyState& state) {
    std::unique_lock lock(mutex_);
    initial_values_.resize(state.size());
    initial_parents_.resize(state.size());
    for (VertexId v = 0; v < state.size(); v++) {
        initial_values_[v] = state.value(v);
        initial_parents_[v] = state.parent_raw(v);
    }
    chains_.resize(state.size());
    modified_.clear();
    modified_.emplace_back();  // version 0: load baseline, nothing modified
    modified_base_ = 0;
    current_.store(0, std::memory_order_release);
    frontier_.store(-1, std::memory_order_release);
}

void HistoryStore::note_new_vertex(VertexId v, Value initial_value) {
    std::unique_lock lock(mutex_);
    if (v >= chains_.size()) {
        chains_.resize(v + 1);
        initial_values_.resize(v + 1, kUnreached);
        initial_parents_.resize(v + 1);
    }
    // A recycled id keeps its older chain entries; they already end at this
    // same init value (a vertex must be isolated, hence init-valued, before
    // removal), so only the baseline needs to cover chainless reads.
    if (chains_[v].head.load(std::memory_order_relaxed) == nullptr) {
        initial_values_[v] = initial_value;
        initial_parents_[v] = ParentLink{};
    }
}

VersionId HistoryStore::record_version(const ChangeSet& changes) {
    VersionId next = current_version() + 1;
    record_at(next, changes);
    return next;
}

void HistoryStore::record_at(VersionId version, const ChangeSet& changes) {
    std::unique_lock lock(mutex_);
    std::vector<VertexId> vertices;
    vertices.reserve(changes.size());
    for (const ChangeEntry& e : changes) {
        vertices.push_back(e.vertex);
        Chain& chain = chains_.at(e.vertex);
        Node* node = new Node{version, e.new_value,
                              e.new_parent ? *e.new_parent : ParentLink{}, nullptr, nullptr};
        Node* head = chain.head.load(std::memory_order_relaxed);
        node->older = head;
        if (head)
            head->newer = node;
        else
            chain.tail = node;
        chain.head.store(node, std::memory_order_release);
        trim_chain(chain);
    }
    modified_.push_back(std::move(vertices));
    current_.store(version, std::memory_order_release);
}

void HistoryStore::trim_chain(Chain& chain) {
    std::int64_t frontier = frontier_.load(std::memory_order_relaxed);
    // keep the newest entry at or below the frontier; everything older is dead
    while (chain.tail && chain.tail->newer &&
           static_cast<std::int64_t>(chain.tail->version) <= frontier &&
           static_cast<std::int64_t>(chain.tail->newer->version) <= frontier) {
        Node* dead = chain.tail;
        chain.tail = dead->newer;
        chain.tail->older = nullptr;
        delete dead;
    }
}

void HistoryStore::check_readable(VersionId version) const {
    if (version > current_version())
        throw_error(ErrorCode::UnknownVersion, "version " + std::to_string(version) + " not committed");
    if (static_cast<std::int64_t>(version) <= frontier_.load(std::memory_order_acquire))
        throw_error(ErrorCode::VersionReclaimed, "version " + std::to_string(version) + " reclaimed");
}

void HistoryStore::check_vertex(VertexId v) const {
    if (v >= chains_.size())
        throw_error(ErrorCode::UnknownVertex, "vertex " + std::to_string(v) + " has no history");
}

const HistoryStore::Node* HistoryStore::resolve(VersionId version, VertexId v) const {
    const Node* node = chains_[v].head.load(std::memory_order_acquire);
    while (node && node->version > version) node = node->older;
    return node;
}

Value HistoryStore::get_value(VersionId version, VertexId v) const {
    std::shared_lock lock(mutex_);
    check_readable(version);
    check_vertex(v);
    const Node* node = resolve(version, v);
    return node ? node->value : initial_values_[v];
}

std::optional<ParentLink> HistoryStore::get_parent(VersionId version, VertexId v) const {
    std::shared_lock lock(mutex_);
    check_readable(version);
    check_vertex(v);
    const Node* node = resolve(version, v);
    const ParentLink& p = node ? node->parent : initial_parents_[v];
    if (p.src == kNoVertex) return std::nullopt;
    return p;
}

std::vector<VertexId> HistoryStore::get_modified_vertices(VersionId version) const {
    std::shared_lock lock(mutex_);
    check_readable(version);
    return modified_.at(version - modified_base_);
}

void HistoryStore::open_session(SessionId session) {
    std::lock_guard lock(sessions_mutex_);
    released_.emplace(session, -1);
}

void HistoryStore::close_session(SessionId session) {
    std::lock_guard lock(sessions_mutex_);
    released_.erase(session);
}

void HistoryStore::release_history(SessionId session, VersionId version) {
    if (version > current_version())
        throw_error(ErrorCode::UnknownVersion, "cannot release uncommitted version");
    std::lock_guard lock(sessions_mutex_);
    auto it = released_.find(session);
    if (it == released_.end()) return;
    it->second = std::max(it->second, static_cast<std::int64_t>(version));
}

void HistoryStore::reclaim_tick() {
    std::int64_t new_frontier;
    {
        std::lock_guard lock(sessions_mutex_);
        if (released_.empty()) return;  // no sessions, nothing to base reclamation on
        new_frontier = std::numeric_limits<std::int64_t>::max();
        for (const auto& [session, released] : released_)
            new_frontier = std::min(new_frontier, released);
    }
    if (new_frontier <= frontier_.load(std::memory_order_relaxed)) return;

    std::unique_lock lock(mutex_);
    frontier_.store(new_frontier, std::memory_order_release);
    while (!modified_.empty() && static_cast<std::int64_t>(modified_base_) <= new_frontier) {
        modified_.pop_front();
        modified_base_++;
    }
}

std::uint64_t HistoryStore::retained_versions() const {
    std::shared_lock lock(mutex_);
    return modified_.size();
}

}  // namespace rtgraph
