#include "rtgraph/engine.hpp"

#include <omp.h>

#include <algorithm>
#include <cstring>

namespace rtgraph {

namespace {

constexpr std::uint64_t kParallelThreshold = 512;

// fn(index, worker)
template <typename F>
void parallel_for(std::uint64_t n, int threads, bool parallel, F&& fn) {
    if (!parallel || threads <= 1 || n < kParallelThreshold) {
        for (std::uint64_t i = 0; i < n; i++) fn(i, 0);
        return;
    }
#pragma omp parallel for num_threads(threads) schedule(dynamic, 64)
    for (std::uint64_t i = 0; i < n; i++) fn(i, omp_get_thread_num());
}

}  // namespace

DependencyState& DependencyState::operator=(const DependencyState& other) {
    if (this == &other) return *this;
    ensure(other.size_);
    for (std::uint64_t v = 0; v < other.size_; v++) {
        values_[v].store(other.values_[v].load(std::memory_order_relaxed),
                         std::memory_order_relaxed);
        parents_[v] = other.parents_[v];
    }
    return *this;
}

void DependencyState::reserve(std::uint64_t cap) {
    if (cap <= cap_) return;
    auto values = std::make_unique<std::atomic<Value>[]>(cap);
    auto locks = std::make_unique<std::atomic<std::uint8_t>[]>(cap);
    for (std::uint64_t v = 0; v < size_; v++)
        values[v].store(values_[v].load(std::memory_order_relaxed), std::memory_order_relaxed);
    for (std::uint64_t v = size_; v < cap; v++) values[v].store(0, std::memory_order_relaxed);
    for (std::uint64_t v = 0; v < cap; v++) locks[v].store(0, std::memory_order_relaxed);
    values_ = std::move(values);
    locks_ = std::move(locks);
    parents_.reserve(cap);
    cap_ = cap;
}

void DependencyState::ensure(std::uint64_t n) {
    if (n <= size_) return;
    if (n > cap_) reserve(std::max(n, cap_ * 2));
    parents_.resize(n);
    size_ = n;
}

std::vector<Value> DependencyState::values_snapshot() const {
    std::vector<Value> out(size_);
    for (std::uint64_t v = 0; v < size_; v++) out[v] = values_[v].load(std::memory_order_relaxed);
    return out;
}

void ChangeLogSink::reset(std::uint64_t vertices, int workers) {
    if (stamp_.size() < vertices) stamp_.resize(vertices, 0);
    logs_.resize(std::max(workers, 1));
    for (auto& log : logs_) log.clear();
    generation_++;
}

ChangeSet ChangeLogSink::collect(const DependencyState& state) const {
    ChangeSet out;
    for (const auto& log : logs_) {
        for (const OldRec& rec : log) {
            ChangeEntry e;
            e.vertex = rec.vertex;
            e.old_value = rec.value;
            e.new_value = state.value(rec.vertex);
            if (rec.parent.src != kNoVertex) e.old_parent = rec.parent;
            e.new_parent = state.parent(rec.vertex);
            if (e.old_value == e.new_value && e.old_parent == e.new_parent) continue;
            out.push_back(std::move(e));
        }
    }
    return out;
}

Engine::Engine(const GraphStore& graph, AlgorithmDef algo, EngineConfig config)
    : graph_(graph),
      algo_(algo),
      config_(config),
      state_(graph.capacity()),
      active_in_(config.threads),
      active_out_(config.threads) {}

void Engine::ensure_capacity(std::uint64_t n) { state_.ensure(n); }

void Engine::reserve_capacity(std::uint64_t n) { state_.reserve(n); }

void Engine::reset_vertex(VertexId v) {
    ensure_capacity(v + 1);
    state_.set_value(v, algo_.init_val(v));
    state_.clear_parent(v);
}

bool Engine::try_improve(int worker, VertexId src, VertexId dst, Weight weight, Value src_value,
                         ChangeLogSink* log) {
    Value cand = algo_.gen_next(weight, src_value);
    if (!algo_.need_upd(dst, state_.value(dst), cand)) return false;
    bool won = false;
    state_.lock(dst);
    Value cur = state_.value(dst);
    if (algo_.need_upd(dst, cur, cand)) {
        if (log) log->record(worker, dst, cur, state_.parent_raw(dst));
        state_.set_value(dst, cand);
        state_.set_parent(dst, ParentLink{src, weight});
        won = true;
    }
    state_.unlock(dst);
    if (won) active_out_.push(worker, dst, cand);
    return won;
}

PushStrategy Engine::pick_strategy(std::uint64_t active_vertices,
                                   std::uint64_t active_degree) const {
    switch (config_.mode) {
        case EngineConfig::Mode::Vertex: return PushStrategy::VertexParallel;
        case EngineConfig::Mode::Edge: return PushStrategy::EdgeParallel;
        case EngineConfig::Mode::Hybrid: break;
    }
    return config_.model.choose(active_vertices, active_degree);
}

std::uint64_t Engine::push_round(ChangeLogSink* log) {
    active_in_.flatten(flat_);
    active_out_.clear();
    if (flat_.empty()) return 0;

    std::uint64_t active_degree = 0;
    for (const auto& e : flat_) active_degree += graph_.out_list(e.vertex).live_degree();

    PushStrategy strategy = pick_strategy(flat_.size(), active_degree);
    if (strategy == PushStrategy::VertexParallel) {
        parallel_for(flat_.size(), config_.threads, config_.parallel, [&](std::uint64_t i, int w) {
            const auto& entry = flat_[i];
            if (state_.value(entry.vertex) != entry.value) return;  // stale activation
            for (const EdgeRecord& r : graph_.out_records(entry.vertex)) {
                if (r.count == 0) continue;
                try_improve(w, entry.vertex, r.dst, r.weight, entry.value, log);
            }
        });
    } else {
        edge_offsets_.assign(1, 0);
        edge_offsets_.reserve(flat_.size() + 1);
        for (const auto& e : flat_)
            edge_offsets_.push_back(edge_offsets_.back() + graph_.out_records(e.vertex).size());
        parallel_for(edge_offsets_.back(), config_.threads, config_.parallel,
                     [&](std::uint64_t i, int w) {
                         std::uint64_t owner =
                             std::upper_bound(edge_offsets_.begin(), edge_offsets_.end(), i) -
                             edge_offsets_.begin() - 1;
                         const auto& entry = flat_[owner];
                         if (state_.value(entry.vertex) != entry.value) return;
                         const EdgeRecord& r =
                             graph_.out_records(entry.vertex)[i - edge_offsets_[owner]];
                         if (r.count == 0) return;
                         try_improve(w, entry.vertex, r.dst, r.weight, entry.value, log);
                     });
    }
    std::swap(active_in_, active_out_);
    return active_in_.size();
}

void Engine::push_to_fixpoint(ChangeLogSink* log) {
    while (push_round(log) != 0) {
    }
    active_in_.clear();
}

ChangeSet Engine::apply_unsafe_batch(std::span<const Edge> deleted, std::span<const Edge> inserted) {
    ensure_capacity(graph_.capacity());
    invalidated_.ensure(graph_.capacity());
    log_.reset(graph_.capacity(), config_.threads);
    active_in_.clear();
    active_out_.clear();

    // Phase 1: invalidation closure. Seeds are deleted edges that were the
    // destination's parent link and whose duplicate count reached zero.
    std::vector<VertexId> closure;
    for (const Edge& e : deleted) {
        if (!graph_.is_live(e.dst)) continue;  // removed later in the same transaction
        if (!(state_.parent_raw(e.dst) == ParentLink{e.src, e.weight})) continue;
        if (graph_.is_live(e.src) && graph_.lookup_count(e.src, e.dst, e.weight) > 0)
            continue;  // a duplicate of the tree edge survives
        if (!invalidated_.test(e.dst)) {
            invalidated_.set(e.dst);
            closure.push_back(e.dst);
        }
    }
    for (std::uint64_t i = 0; i < closure.size(); i++) {
        VertexId x = closure[i];
        log_.record(0, x, state_.value(x), state_.parent_raw(x));
        for (const EdgeRecord& r : graph_.out_records(x)) {
            if (r.count == 0) continue;
            if (state_.parent_raw(r.dst) == ParentLink{x, r.weight} && !invalidated_.test(r.dst)) {
                invalidated_.set(r.dst);
                closure.push_back(r.dst);
            }
        }
    }

    // Phase 2: trim. Pull the best candidate over live in-edges from vertices
    // outside the closure; members of the closure re-feed each other through
    // the push phase instead.
    parallel_for(closure.size(), config_.threads, config_.parallel, [&](std::uint64_t i, int) {
        VertexId x = closure[i];
        Value best = algo_.init_val(x);
        ParentLink best_parent{};
        for (const EdgeRecord& r : graph_.in_records(x)) {
            if (r.count == 0 || invalidated_.test(r.dst)) continue;
            Value cand = algo_.gen_next(r.weight, state_.value(r.dst));
            if (algo_.need_upd(x, best, cand)) {
                best = cand;
                best_parent = ParentLink{r.dst, r.weight};
            }
        }
        state_.set_value(x, best);
        state_.set_parent(x, best_parent);
    });
    invalidated_.clear_from(closure.begin(), closure.end());

    // Phase 3: push from the whole closure plus the inserted edges. Seeds
    // collect in the out set (try_improve activates there) and one swap makes
    // them the first round's input.
    for (VertexId x : closure)
        if (!algo_.is_unreached(state_.value(x))) active_out_.push(0, x, state_.value(x));
    for (const Edge& e : inserted) try_improve(0, e.src, e.dst, e.weight, state_.value(e.src), &log_);
    std::swap(active_in_, active_out_);
    push_to_fixpoint(&log_);

    return log_.collect(state_);
}

void Engine::initialize() { state_ = full_recompute(graph_, algo_, config_); }

DependencyState full_recompute(const GraphStore& graph, const AlgorithmDef& algo,
                               const EngineConfig& config) {
    if (algo.kind == AlgoKind::Sssp) {
        for (VertexId v = 0; v < graph.capacity(); v++) {
            if (!graph.is_live(v)) continue;
            for (const EdgeRecord& r : graph.out_records(v))
                if (r.count > 0 && r.weight < 0)
                    throw_error(ErrorCode::NegativeWeight, "negative weight in shortest path");
        }
    }

    Engine scratch(graph, algo, config);
    std::uint64_t n = graph.capacity();
    scratch.ensure_capacity(n);
    parallel_for(n, config.threads, config.parallel, [&](std::uint64_t v, int) {
        scratch.state_.set_value(v, algo.init_val(v));
        scratch.state_.clear_parent(v);
    });

    if (algo.kind == AlgoKind::Wcc) {
        for (VertexId v = 0; v < n; v++)
            if (graph.is_live(v)) scratch.seed_active(v, scratch.state_.value(v));
    } else if (graph.is_live(algo.root)) {
        scratch.seed_active(algo.root, scratch.state_.value(algo.root));
    }
    scratch.push_to_fixpoint(nullptr);
    return std::move(scratch.state_);
}

bool Engine::validate_state(std::string* why) const {
    auto fail = [&](const std::string& what) {
        if (why) *why = what;
        return false;
    };
    std::uint64_t n = graph_.capacity();
    if (state_.size() < n) return fail("state smaller than graph");

    for (VertexId v = 0; v < n; v++) {
        if (!graph_.is_live(v)) continue;
        Value val = state_.value(v);
        auto p = state_.parent(v);
        if (p) {
            if (algo_.kind != AlgoKind::Wcc && v == algo_.root)
                return fail("root has a parent");
            if (!graph_.is_live(p->src))
                return fail("dangling parent src at vertex " + std::to_string(v));
            if (graph_.lookup_count(p->src, v, p->weight) == 0)
                return fail("dead parent edge at vertex " + std::to_string(v));
            if (val != algo_.gen_next(p->weight, state_.value(p->src)))
                return fail("parent does not justify value at vertex " + std::to_string(v));
        } else {
            if (val != algo_.init_val(v))
                return fail("parentless vertex " + std::to_string(v) + " off its init value");
        }
    }

    // parent links must form a forest
    std::vector<std::uint8_t> color(n, 0);
    std::vector<VertexId> path;
    for (VertexId v = 0; v < n; v++) {
        if (!graph_.is_live(v) || color[v] != 0) continue;
        path.clear();
        VertexId x = v;
        while (true) {
            if (color[x] == 1) return fail("parent cycle through vertex " + std::to_string(x));
            if (color[x] == 2) break;
            color[x] = 1;
            path.push_back(x);
            if (!state_.has_parent(x)) break;
            x = state_.parent_raw(x).src;
        }
        for (VertexId y : path) color[y] = 2;
    }

    // fixpoint: no live edge can still improve its destination
    for (VertexId u = 0; u < n; u++) {
        if (!graph_.is_live(u)) continue;
        Value val_u = state_.value(u);
        for (const EdgeRecord& r : graph_.out_records(u)) {
            if (r.count == 0) continue;
            if (algo_.need_upd(r.dst, state_.value(r.dst), algo_.gen_next(r.weight, val_u)))
                return fail("edge " + std::to_string(u) + "->" + std::to_string(r.dst) +
                            " still improves its destination");
        }
    }
    return true;
}

}  // namespace rtgraph
