#include "rtgraph/ccontrol.hpp"

#include <omp.h>

#include <algorithm>
#include <thread>

namespace rtgraph {

namespace {

// Edge-count overlay so a transaction can be validated and classified
// against "current state plus my earlier writes" without mutating the store.
struct TxnOverlay {
    struct Key {
        VertexId src, dst;
        Weight weight;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            EdgeKeyHash h;
            return h(EdgeKey{k.src, k.weight}) * 1315423911u ^ h(EdgeKey{k.dst, k.weight});
        }
    };

    const GraphStore& store;
    std::unordered_map<Key, std::int64_t, KeyHash> delta;

    std::int64_t count(VertexId src, VertexId dst, Weight weight) const {
        std::int64_t base = store.is_live(src) && store.is_live(dst)
                                ? static_cast<std::int64_t>(store.lookup_count(src, dst, weight))
                                : 0;
        auto it = delta.find(Key{src, dst, weight});
        return base + (it == delta.end() ? 0 : it->second);
    }
    void add(VertexId src, VertexId dst, Weight weight, std::int64_t d) {
        delta[Key{src, dst, weight}] += d;
    }
};

}  // namespace

Database::Database(std::vector<AlgorithmDef> algos, DatabaseConfig config)
    : algo_defs_(std::move(algos)), config_(config), store_(config.store), scheduler_([&] {
          SchedulerConfig sc = config.scheduler;
          if (sc.initial_threshold < 1.0) sc.initial_threshold = config.engine.threads;
          return sc;
      }()) {
    if (algo_defs_.empty()) throw std::invalid_argument("at least one algorithm required");
    bool any_undirected = false, all_undirected = true;
    for (const auto& a : algo_defs_) {
        any_undirected |= a.undirected();
        all_undirected &= a.undirected();
    }
    if (any_undirected && !all_undirected)
        throw std::invalid_argument("undirected algorithms cannot share a graph with directed ones");
    undirected_ = any_undirected;
    for (const auto& a : algo_defs_) sssp_maintained_ |= a.kind == AlgoKind::Sssp;

    for (const auto& a : algo_defs_) {
        engines_.push_back(std::make_unique<Engine>(store_, a, config_.engine));
        histories_.push_back(std::make_unique<HistoryStore>());
    }
    if (!config_.wal_path.empty())
        wal_ = std::make_unique<WalWriter>(config_.wal_path, config_.fsync);
}

Database::~Database() = default;

void Database::ensure_vertices(std::uint64_t n) {
    while (store_.capacity() < n) store_.add_vertex();
}

void Database::preload_edge(VertexId src, VertexId dst, Weight weight) {
    store_.insert_edge(src, dst, weight);
    if (undirected_) store_.insert_edge(dst, src, weight);
}

void Database::initialize() {
    // headroom so vertex creation during Phase A does not reallocate
    store_.reserve(store_.capacity() + 1024);
    for (auto& engine : engines_) {
        engine->reserve_capacity(store_.reserved());
        engine->ensure_capacity(store_.capacity());
        engine->initialize();
    }
    for (std::size_t i = 0; i < histories_.size(); i++)
        histories_[i]->set_initial(engines_[i]->state());
    version_.store(0, std::memory_order_release);
}

void Database::grow_vertex_tables() {
    std::uint64_t target = std::max<std::uint64_t>(store_.reserved() * 2, 1024);
    store_.reserve(target);
    for (auto& engine : engines_) engine->reserve_capacity(target);
}

SessionId Database::open_session() {
    std::lock_guard lock(sessions_mutex_);
    SessionId id = next_session_++;
    sessions_.emplace(id, std::make_shared<Session>());
    for (auto& h : histories_) h->open_session(id);
    return id;
}

void Database::close_session(SessionId id) {
    std::lock_guard lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return;
    it->second->open = false;
    sessions_.erase(it);
    for (auto& h : histories_) h->close_session(id);
}

std::future<Reply> Database::submit(SessionId session, UpdateOp op) {
    auto promise = std::make_shared<std::promise<Reply>>();
    auto future = promise->get_future();
    submit_cb(session, std::move(op), [promise](const Reply& r) { promise->set_value(r); });
    return future;
}

void Database::submit_cb(SessionId session, UpdateOp op, std::function<void(const Reply&)> cb) {
    std::shared_ptr<Session> s;
    {
        std::lock_guard lock(sessions_mutex_);
        auto it = sessions_.find(session);
        if (it == sessions_.end()) throw std::invalid_argument("unknown session");
        s = it->second;
    }
    UpdateEnvelope env;
    env.session = session;
    env.op = std::move(op);
    env.enqueue_time = Clock::now();
    env.on_reply = std::move(cb);
    {
        std::lock_guard lock(s->mutex);
        env.seq = s->next_seq++;
        s->queue.push_back(std::move(env));
    }
    pending_ops_.fetch_add(1, std::memory_order_release);
    work_cv_.notify_all();
}

void Database::lock_stripes(VertexId a, VertexId b) {
    std::size_t sa = a % kStripes, sb = b % kStripes;
    if (sa > sb) std::swap(sa, sb);
    stripes_[sa].m.lock();
    if (sb != sa) stripes_[sb].m.lock();
}

void Database::unlock_stripes(VertexId a, VertexId b) {
    std::size_t sa = a % kStripes, sb = b % kStripes;
    if (sa > sb) std::swap(sa, sb);
    if (sb != sa) stripes_[sb].m.unlock();
    stripes_[sa].m.unlock();
}

bool Database::edge_op_missing(VertexId src, VertexId dst, Weight weight, bool require_exists,
                               Reply& error) const {
    if (!store_.is_live(src) || !store_.is_live(dst)) {
        error = Reply{false, 0, std::nullopt, error_code_name(ErrorCode::UnknownVertex)};
        return true;
    }
    if (require_exists) {
        bool present = store_.lookup_count(src, dst, weight) > 0;
        if (present && undirected_) present = store_.lookup_count(dst, src, weight) > 0;
        if (!present) {
            error = Reply{false, 0, std::nullopt, error_code_name(ErrorCode::EdgeNotFound)};
            return true;
        }
    }
    return false;
}

bool Database::insert_safe_all_algos(VertexId src, VertexId dst, Weight weight) const {
    for (const auto& engine : engines_) {
        if (!engine->insert_is_safe(Edge{src, dst, weight})) return false;
        if (undirected_ && !engine->insert_is_safe(Edge{dst, src, weight})) return false;
    }
    return true;
}

bool Database::delete_safe_all_algos(VertexId src, VertexId dst, Weight weight) const {
    // Safe when the edge is off the dependency tree, or a duplicate keeps the
    // tree edge alive after this deletion.
    bool survivor = store_.lookup_count(src, dst, weight) > 1;
    for (const auto& engine : engines_) {
        if (engine->is_tree_edge(Edge{src, dst, weight}) && !survivor) return false;
        if (undirected_ && engine->is_tree_edge(Edge{dst, src, weight}) && !survivor) return false;
    }
    return true;
}

void Database::apply_insert_to_store(VertexId src, VertexId dst, Weight weight) {
    store_.insert_edge(src, dst, weight);
    if (undirected_) store_.insert_edge(dst, src, weight);
}

void Database::apply_delete_to_store(VertexId src, VertexId dst, Weight weight) {
    store_.delete_edge(src, dst, weight);
    if (undirected_) store_.delete_edge(dst, src, weight);
}

void Database::wal_append_op(const UpdateOp& op) {
    if (!wal_ || replaying_) return;
    std::visit(
        [&](const auto& o) {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, InsEdgeOp>)
                wal_->append(WalOp::InsEdge, wal_encode_edge(o.src, o.dst, o.weight));
            else if constexpr (std::is_same_v<T, DelEdgeOp>)
                wal_->append(WalOp::DelEdge, wal_encode_edge(o.src, o.dst, o.weight));
            else if constexpr (std::is_same_v<T, DelVertexOp>)
                wal_->append(WalOp::DelVertex, wal_encode_vertex(o.v));
            else if constexpr (std::is_same_v<T, TxnOp>) {
                std::vector<std::uint8_t> payload =
                    wal_encode_count(static_cast<std::uint32_t>(o.ops.size()));
                for (const SingleOp& sub : o.ops) {
                    std::visit(
                        [&](const auto& s) {
                            using S = std::decay_t<decltype(s)>;
                            std::vector<std::uint8_t> p;
                            WalOp code;
                            if constexpr (std::is_same_v<S, InsEdgeOp>) {
                                code = WalOp::InsEdge;
                                p = wal_encode_edge(s.src, s.dst, s.weight);
                            } else if constexpr (std::is_same_v<S, DelEdgeOp>) {
                                code = WalOp::DelEdge;
                                p = wal_encode_edge(s.src, s.dst, s.weight);
                            } else if constexpr (std::is_same_v<S, InsVertexOp>) {
                                code = WalOp::InsVertex;
                            } else {
                                code = WalOp::DelVertex;
                                p = wal_encode_vertex(s.v);
                            }
                            payload.push_back(static_cast<std::uint8_t>(code));
                            payload.insert(payload.end(), p.begin(), p.end());
                        },
                        sub);
                }
                wal_->append(WalOp::Txn, payload);
            }
        },
        op);
}

// Vertex operations never affect results. Creation publishes the id only
// after the store slot, engine state, history baseline, and WAL record are in
// place, so concurrent edge appliers never observe a half-built vertex.
std::optional<Reply> Database::apply_vertex_op(const UpdateOp& op, bool exclusive) {
    std::lock_guard lock(vertex_ops_mutex_);
    try {
        if (std::holds_alternative<InsVertexOp>(op)) {
            auto v = store_.try_allocate_vertex();
            if (!v) {
                if (!exclusive) return std::nullopt;  // reallocation: Phase B only
                grow_vertex_tables();
                v = store_.try_allocate_vertex();
            }
            for (std::size_t i = 0; i < engines_.size(); i++) {
                engines_[i]->reset_vertex(*v);
                histories_[i]->note_new_vertex(*v, algo_defs_[i].init_val(*v));
            }
            if (wal_ && !replaying_) wal_->append(WalOp::InsVertex, wal_encode_vertex(*v));
            store_.publish_vertex(*v);
            Reply r = Reply::success(current_version());
            r.vertex = *v;
            return r;
        }
        const auto& del = std::get<DelVertexOp>(op);
        std::size_t stripe = del.v % kStripes;
        stripes_[stripe].m.lock();
        try {
            store_.remove_vertex(del.v);
        } catch (...) {
            stripes_[stripe].m.unlock();
            throw;
        }
        for (auto& engine : engines_) engine->reset_vertex(del.v);
        wal_append_op(op);
        stripes_[stripe].m.unlock();
        return Reply::success(current_version());
    } catch (const GraphError& e) {
        return Reply::failure(e);
    }
}

Database::SafeAttempt Database::try_process_safe(UpdateEnvelope& env, Reply& reply) {
    const UpdateOp& op = env.op;

    if (std::holds_alternative<InsVertexOp>(op) || std::holds_alternative<DelVertexOp>(op)) {
        auto r = apply_vertex_op(op, false);
        if (!r) return SafeAttempt::Unsafe;  // table growth runs in Phase B
        reply = *r;
        return SafeAttempt::Applied;  // vertex ops are always safe (or errored)
    }

    if (const auto* ins = std::get_if<InsEdgeOp>(&op)) {
        lock_stripes(ins->src, ins->dst);
        SafeAttempt result;
        if (edge_op_missing(ins->src, ins->dst, ins->weight, false, reply)) {
            result = SafeAttempt::Errored;
        } else if (sssp_maintained_ && ins->weight < 0) {
            reply = Reply{false, 0, std::nullopt, error_code_name(ErrorCode::NegativeWeight)};
            result = SafeAttempt::Errored;
        } else if (insert_safe_all_algos(ins->src, ins->dst, ins->weight)) {
            apply_insert_to_store(ins->src, ins->dst, ins->weight);
            wal_append_op(op);
            reply = Reply::success(current_version());
            result = SafeAttempt::Applied;
        } else {
            result = SafeAttempt::Unsafe;
        }
        unlock_stripes(ins->src, ins->dst);
        return result;
    }

    if (const auto* del = std::get_if<DelEdgeOp>(&op)) {
        lock_stripes(del->src, del->dst);
        SafeAttempt result;
        if (edge_op_missing(del->src, del->dst, del->weight, true, reply)) {
            result = SafeAttempt::Errored;
        } else if (delete_safe_all_algos(del->src, del->dst, del->weight)) {
            apply_delete_to_store(del->src, del->dst, del->weight);
            wal_append_op(op);
            reply = Reply::success(current_version());
            result = SafeAttempt::Applied;
        } else {
            result = SafeAttempt::Unsafe;
        }
        unlock_stripes(del->src, del->dst);
        return result;
    }

    // Edge-only transactions validate and classify against an overlay under
    // every touched stripe, then commit all writes only when every
    // constituent is safe. Transactions that create or remove vertices go
    // through Phase B, where they run exclusively.
    const auto& txn = std::get<TxnOp>(op);
    for (const SingleOp& sub : txn.ops)
        if (std::holds_alternative<InsVertexOp>(sub) || std::holds_alternative<DelVertexOp>(sub))
            return SafeAttempt::Unsafe;

    std::vector<std::size_t> stripes = txn_stripe_set(txn);
    for (std::size_t s : stripes) stripes_[s].m.lock();
    SafeAttempt result;
    bool all_safe = true;
    if (auto error = validate_txn(txn, &all_safe)) {
        reply = *error;
        result = SafeAttempt::Errored;
    } else if (!all_safe) {
        result = SafeAttempt::Unsafe;
    } else {
        apply_txn_writes(txn, nullptr, nullptr);
        wal_append_op(op);
        reply = Reply::success(current_version());
        result = SafeAttempt::Applied;
    }
    for (std::size_t i = stripes.size(); i-- > 0;) stripes_[stripes[i]].m.unlock();
    return result;
}

std::vector<std::size_t> Database::txn_stripe_set(const TxnOp& txn) const {
    std::vector<std::size_t> stripes;
    for (const SingleOp& sub : txn.ops) {
        if (const auto* i = std::get_if<InsEdgeOp>(&sub)) {
            stripes.push_back(i->src % kStripes);
            stripes.push_back(i->dst % kStripes);
        } else if (const auto* d = std::get_if<DelEdgeOp>(&sub)) {
            stripes.push_back(d->src % kStripes);
            stripes.push_back(d->dst % kStripes);
        }
    }
    std::sort(stripes.begin(), stripes.end());
    stripes.erase(std::unique(stripes.begin(), stripes.end()), stripes.end());
    return stripes;
}

std::optional<Reply> Database::validate_txn(const TxnOp& txn, bool* all_safe) const {
    auto fail = [](ErrorCode code) {
        return Reply{false, 0, std::nullopt, error_code_name(code)};
    };
    TxnOverlay overlay{store_, {}};
    // vertices whose adjacency the txn touches; del_vertex on them is refused
    std::vector<VertexId> touched;
    for (const SingleOp& sub : txn.ops) {
        if (const auto* i = std::get_if<InsEdgeOp>(&sub)) {
            if (!store_.is_live(i->src) || !store_.is_live(i->dst))
                return fail(ErrorCode::UnknownVertex);
            if (sssp_maintained_ && i->weight < 0) return fail(ErrorCode::NegativeWeight);
            if (all_safe) *all_safe &= insert_safe_all_algos(i->src, i->dst, i->weight);
            overlay.add(i->src, i->dst, i->weight, 1);
            if (undirected_) overlay.add(i->dst, i->src, i->weight, 1);
            touched.push_back(i->src);
            touched.push_back(i->dst);
        } else if (const auto* d = std::get_if<DelEdgeOp>(&sub)) {
            if (!store_.is_live(d->src) || !store_.is_live(d->dst))
                return fail(ErrorCode::UnknownVertex);
            if (overlay.count(d->src, d->dst, d->weight) < 1) return fail(ErrorCode::EdgeNotFound);
            if (all_safe) {
                bool survivor = overlay.count(d->src, d->dst, d->weight) > 1;
                for (const auto& engine : engines_) {
                    if (engine->is_tree_edge(Edge{d->src, d->dst, d->weight}) && !survivor)
                        *all_safe = false;
                    if (undirected_ && engine->is_tree_edge(Edge{d->dst, d->src, d->weight}) &&
                        !survivor)
                        *all_safe = false;
                }
            }
            overlay.add(d->src, d->dst, d->weight, -1);
            if (undirected_) overlay.add(d->dst, d->src, d->weight, -1);
            touched.push_back(d->src);
            touched.push_back(d->dst);
        } else if (std::holds_alternative<DelVertexOp>(sub)) {
            const auto& dv = std::get<DelVertexOp>(sub);
            if (!store_.is_live(dv.v)) return fail(ErrorCode::UnknownVertex);
            // must be isolated before the txn and untouched by it
            if (store_.out_degree(dv.v) > 0 || store_.in_degree(dv.v) > 0)
                return fail(ErrorCode::NotIsolated);
            for (VertexId t : touched)
                if (t == dv.v) return fail(ErrorCode::NotIsolated);
        }
        // ins_vertex is always valid and safe
    }
    return std::nullopt;
}

void Database::apply_txn_writes(const TxnOp& txn, std::vector<Edge>* deleted,
                                std::vector<Edge>* inserted) {
    for (const SingleOp& sub : txn.ops) {
        if (const auto* i = std::get_if<InsEdgeOp>(&sub)) {
            apply_insert_to_store(i->src, i->dst, i->weight);
            if (inserted) {
                inserted->push_back(Edge{i->src, i->dst, i->weight});
                if (undirected_) inserted->push_back(Edge{i->dst, i->src, i->weight});
            }
        } else if (const auto* d = std::get_if<DelEdgeOp>(&sub)) {
            apply_delete_to_store(d->src, d->dst, d->weight);
            if (deleted) {
                deleted->push_back(Edge{d->src, d->dst, d->weight});
                if (undirected_) deleted->push_back(Edge{d->dst, d->src, d->weight});
            }
        } else if (std::holds_alternative<InsVertexOp>(sub)) {
            VertexId v = store_.add_vertex();
            for (std::size_t i = 0; i < engines_.size(); i++) {
                engines_[i]->reset_vertex(v);
                histories_[i]->note_new_vertex(v, algo_defs_[i].init_val(v));
            }
        } else {
            VertexId v = std::get<DelVertexOp>(sub).v;
            store_.remove_vertex(v);
            for (auto& engine : engines_) engine->reset_vertex(v);
        }
    }
}

Reply Database::execute_unsafe(const UpdateOp& op) {
    // Phase B runs on the epoch thread with no concurrent appliers; the
    // engine parallelizes internally.
    std::vector<Edge> deleted, inserted;
    try {
        if (const auto* ins = std::get_if<InsEdgeOp>(&op)) {
            Reply err;
            if (edge_op_missing(ins->src, ins->dst, ins->weight, false, err)) return err;
            apply_insert_to_store(ins->src, ins->dst, ins->weight);
            inserted.push_back(Edge{ins->src, ins->dst, ins->weight});
            if (undirected_) inserted.push_back(Edge{ins->dst, ins->src, ins->weight});
        } else if (const auto* del = std::get_if<DelEdgeOp>(&op)) {
            Reply err;
            if (edge_op_missing(del->src, del->dst, del->weight, true, err)) return err;
            apply_delete_to_store(del->src, del->dst, del->weight);
            deleted.push_back(Edge{del->src, del->dst, del->weight});
            if (undirected_) deleted.push_back(Edge{del->dst, del->src, del->weight});
        } else if (const auto* txn = std::get_if<TxnOp>(&op)) {
            // The classification is stale by Phase B; re-validate atomically
            // before mutating anything so an invalid txn applies nothing.
            if (auto error = validate_txn(*txn, nullptr)) return *error;
            apply_txn_writes(*txn, &deleted, &inserted);
        } else {
            return *apply_vertex_op(op, true);
        }
    } catch (const GraphError& e) {
        return Reply::failure(e);
    }

    Reply reply = commit_engine_batch(deleted, inserted);
    wal_append_op(op);
    return reply;
}

Reply Database::commit_engine_batch(const std::vector<Edge>& deleted,
                                    const std::vector<Edge>& inserted) {
    std::vector<ChangeSet> changes(engines_.size());
    bool any = false;
    for (std::size_t i = 0; i < engines_.size(); i++) {
        changes[i] = engines_[i]->apply_unsafe_batch(deleted, inserted);
        any = any || !changes[i].empty();
    }
    if (!any) return Reply::success(current_version());

    VersionId version = current_version() + 1;
    for (std::size_t i = 0; i < histories_.size(); i++)
        histories_[i]->record_at(version, changes[i]);
    version_.store(version, std::memory_order_release);
    return Reply::success(version);
}

Classification Database::classify(const UpdateOp& op) const {
    if (std::holds_alternative<InsVertexOp>(op) || std::holds_alternative<DelVertexOp>(op))
        return Classification::Safe;
    if (const auto* ins = std::get_if<InsEdgeOp>(&op)) {
        Reply err;
        if (edge_op_missing(ins->src, ins->dst, ins->weight, false, err))
            throw GraphError(ErrorCode::UnknownVertex, err.error);
        return insert_safe_all_algos(ins->src, ins->dst, ins->weight) ? Classification::Safe
                                                                      : Classification::Unsafe;
    }
    if (const auto* del = std::get_if<DelEdgeOp>(&op)) {
        Reply err;
        if (edge_op_missing(del->src, del->dst, del->weight, true, err))
            throw GraphError(ErrorCode::EdgeNotFound, err.error);
        return delete_safe_all_algos(del->src, del->dst, del->weight) ? Classification::Safe
                                                                      : Classification::Unsafe;
    }
    const auto& txn = std::get<TxnOp>(op);
    TxnOverlay overlay{store_, {}};
    bool all_safe = true;
    for (const SingleOp& sub : txn.ops) {
        if (const auto* i = std::get_if<InsEdgeOp>(&sub)) {
            all_safe = all_safe && insert_safe_all_algos(i->src, i->dst, i->weight);
            overlay.add(i->src, i->dst, i->weight, 1);
            if (undirected_) overlay.add(i->dst, i->src, i->weight, 1);
        } else if (const auto* d = std::get_if<DelEdgeOp>(&sub)) {
            bool survivor = overlay.count(d->src, d->dst, d->weight) > 1;
            for (const auto& engine : engines_) {
                if (engine->is_tree_edge(Edge{d->src, d->dst, d->weight}) && !survivor)
                    all_safe = false;
                if (undirected_ && engine->is_tree_edge(Edge{d->dst, d->src, d->weight}) &&
                    !survivor)
                    all_safe = false;
            }
            overlay.add(d->src, d->dst, d->weight, -1);
            if (undirected_) overlay.add(d->dst, d->src, d->weight, -1);
        }
    }
    return all_safe ? Classification::Safe : Classification::Unsafe;
}

Reply Database::execute_now(SessionId, const UpdateOp& op) {
    UpdateEnvelope env;
    env.op = op;
    Reply reply;
    SafeAttempt attempt = try_process_safe(env, reply);
    if (attempt == SafeAttempt::Unsafe) {
        reply = execute_unsafe(op);
        reply.cls = reply.ok ? 'U' : 'E';
    } else if (attempt == SafeAttempt::Errored) {
        reply.cls = 'E';
    }
    if (wal_ && !replaying_) wal_->flush();
    return reply;
}

void Database::release_staged(std::vector<Staged>& staged, EpochReport& report) {
    if (wal_ && !replaying_) wal_->flush();  // reply only after durable
    TimePoint now = Clock::now();
    for (Staged& s : staged) {
        if (!s.reply.ok)
            s.reply.cls = 'E';
        else
            s.reply.cls = s.env.cls == Classification::Unsafe ? 'U' : 'S';
        if (s.env.on_reply) s.env.on_reply(s.reply);
        report.latencies.push_back(std::chrono::duration_cast<Micros>(now - s.env.enqueue_time));
    }
    staged.clear();
}

EpochReport Database::run_epoch(bool wait_for_work) {
    EpochReport report;
    TimePoint epoch_start = Clock::now();
    std::vector<Staged> staged;
    bool processed_any = false;

    // Phase A: pack safe updates from all sessions in parallel until the
    // scheduler calls for the unsafe phase.
    int idle_spins = 0;
    while (true) {
        TimePoint now = Clock::now();
        std::optional<TimePoint> oldest;
        std::uint64_t fifo_len;
        {
            std::lock_guard lock(fifo_mutex_);
            fifo_len = unsafe_fifo_.size();
            if (fifo_len > 0) oldest = unsafe_fifo_.front().enqueue_time;
        }
        if (scheduler_.should_start_unsafe_phase(now, oldest, fifo_len)) break;
        // bound the epoch so reports and threshold adjustments keep flowing
        // under safe-only load
        if (processed_any && now - epoch_start >= scheduler_.config().latency_limit) break;

        // snapshot runnable sessions
        std::vector<std::shared_ptr<Session>> runnable;
        {
            std::lock_guard lock(sessions_mutex_);
            for (auto& [id, s] : sessions_) {
                if (s->blocked) continue;
                std::lock_guard qlock(s->mutex);
                if (!s->queue.empty()) runnable.push_back(s);
            }
        }
        if (runnable.empty()) {
            if (fifo_len > 0) {
                // no safe work left to pack; give arrivals a short grace
                // before draining the queue early
                if (++idle_spins >= 4) break;
                std::this_thread::sleep_for(std::chrono::microseconds(50));
                continue;
            }
            if (processed_any || !wait_for_work) break;
            std::unique_lock lock(sessions_mutex_);
            work_cv_.wait_for(lock, std::chrono::microseconds(200),
                              [&] { return pending_ops_.load(std::memory_order_acquire) > 0; });
            lock.unlock();
            if (Clock::now() - epoch_start > std::chrono::milliseconds(5)) break;
            continue;
        }
        idle_spins = 0;
        processed_any = true;

        // pop one run per session
        std::vector<std::vector<UpdateEnvelope>> runs(runnable.size());
        std::uint64_t popped = 0;
        for (std::size_t i = 0; i < runnable.size(); i++) {
            std::lock_guard qlock(runnable[i]->mutex);
            auto& q = runnable[i]->queue;
            std::size_t take = std::min(config_.max_run_per_session, q.size());
            for (std::size_t k = 0; k < take; k++) {
                runs[i].push_back(std::move(q.front()));
                q.pop_front();
            }
            popped += take;
        }
        pending_ops_.fetch_sub(popped, std::memory_order_release);

        // Without a WAL there is no durability gate, so workers reply inline
        // and the client wakeups overlap; with one, replies stage until the
        // phase flush.
        bool direct_reply = wal_ == nullptr;
        std::vector<std::vector<Staged>> run_staged(runs.size());
        std::vector<std::vector<Micros>> run_latencies(runs.size());
        std::vector<std::uint64_t> run_safe(runs.size(), 0), run_unsafe(runs.size(), 0),
            run_deferred(runs.size(), 0), run_requeued(runs.size(), 0);

        auto process_run = [&](std::size_t r) {
            auto& run = runs[r];
            for (std::size_t k = 0; k < run.size(); k++) {
                UpdateEnvelope& env = run[k];
                Reply reply;
                SafeAttempt attempt = try_process_safe(env, reply);
                if (attempt == SafeAttempt::Unsafe) {
                    env.cls = Classification::Unsafe;
                    run_unsafe[r]++;
                    {
                        std::lock_guard flock(fifo_mutex_);
                        unsafe_fifo_.push_back(std::move(env));
                    }
                    runnable[r]->blocked = true;
                    // everything behind the unsafe update waits for the next
                    // epoch and a fresh classification
                    std::lock_guard qlock(runnable[r]->mutex);
                    for (std::size_t j = run.size(); j-- > k + 1;) {
                        run[j].cls = Classification::NextEpoch;
                        run_deferred[r]++;
                        run_requeued[r]++;
                        runnable[r]->queue.push_front(std::move(run[j]));
                    }
                    break;
                }
                env.cls = Classification::Safe;
                run_safe[r]++;
                if (direct_reply) {
                    reply.cls = reply.ok ? 'S' : 'E';
                    if (env.on_reply) env.on_reply(reply);
                    run_latencies[r].push_back(
                        std::chrono::duration_cast<Micros>(Clock::now() - env.enqueue_time));
                } else {
                    run_staged[r].push_back(Staged{std::move(env), reply});
                }
            }
        };

        if (config_.epoch_parallel && runs.size() > 1) {
#pragma omp parallel for num_threads(config_.engine.threads) schedule(dynamic, 1)
            for (std::size_t r = 0; r < runs.size(); r++) process_run(r);
        } else {
            for (std::size_t r = 0; r < runs.size(); r++) process_run(r);
        }

        std::uint64_t requeued = 0;
        for (std::size_t r = 0; r < runs.size(); r++) {
            report.safe_count += run_safe[r];
            report.unsafe_count += run_unsafe[r];
            report.deferred_count += run_deferred[r];
            requeued += run_requeued[r];
            for (auto& s : run_staged[r]) staged.push_back(std::move(s));
            for (Micros lat : run_latencies[r]) report.latencies.push_back(lat);
        }
        if (requeued > 0) pending_ops_.fetch_add(requeued, std::memory_order_release);
        release_staged(staged, report);
    }

    // Phase B: drain the unsafe FIFO one by one.
    while (true) {
        UpdateEnvelope env;
        {
            std::lock_guard lock(fifo_mutex_);
            if (unsafe_fifo_.empty()) break;
            env = std::move(unsafe_fifo_.front());
            unsafe_fifo_.pop_front();
        }
        Reply reply = execute_unsafe(env.op);
        if (wal_ == nullptr) {
            reply.cls = reply.ok ? 'U' : 'E';
            if (env.on_reply) env.on_reply(reply);
            report.latencies.push_back(
                std::chrono::duration_cast<Micros>(Clock::now() - env.enqueue_time));
        } else {
            staged.push_back(Staged{std::move(env), reply});
            if (!replaying_ && config_.fsync == FsyncPolicy::EveryRecord)
                release_staged(staged, report);
        }
    }
    release_staged(staged, report);

    // re-enable blocked sessions for the next epoch
    {
        std::lock_guard lock(sessions_mutex_);
        for (auto& [id, s] : sessions_) s->blocked = false;
    }

    report.epoch_wall_time = std::chrono::duration_cast<Micros>(Clock::now() - epoch_start);
    scheduler_.on_epoch_complete(report);
    epochs_run_++;
    return report;
}

void Database::run_loop(const std::atomic<bool>& stop) {
    while (!stop.load(std::memory_order_acquire)) run_epoch(true);
}

void Database::replay_wal(const std::string& path) {
    replaying_ = true;
    auto records = wal_read(path, true);
    for (const WalRecord& rec : records) {
        UpdateOp op;
        switch (rec.op) {
            case WalOp::InsEdge: {
                VertexId s, d;
                Weight w;
                wal_decode_edge(rec.payload, s, d, w);
                op = InsEdgeOp{s, d, w};
                break;
            }
            case WalOp::DelEdge: {
                VertexId s, d;
                Weight w;
                wal_decode_edge(rec.payload, s, d, w);
                op = DelEdgeOp{s, d, w};
                break;
            }
            case WalOp::InsVertex: {
                op = InsVertexOp{};
                break;
            }
            case WalOp::DelVertex: {
                op = DelVertexOp{wal_decode_vertex(rec.payload)};
                break;
            }
            case WalOp::Txn: {
                TxnOp txn;
                std::uint32_t count = wal_decode_count(rec.payload);
                std::size_t off = 4;
                for (std::uint32_t i = 0; i < count; i++) {
                    if (off >= rec.payload.size()) throw_error(ErrorCode::CorruptBody, "txn payload");
                    WalOp sub = static_cast<WalOp>(rec.payload[off++]);
                    auto take = [&](std::size_t n) {
                        if (off + n > rec.payload.size())
                            throw_error(ErrorCode::CorruptBody, "txn payload");
                        std::vector<std::uint8_t> out(rec.payload.begin() + off,
                                                      rec.payload.begin() + off + n);
                        off += n;
                        return out;
                    };
                    if (sub == WalOp::InsEdge || sub == WalOp::DelEdge) {
                        VertexId s, d;
                        Weight w;
                        wal_decode_edge(take(24), s, d, w);
                        if (sub == WalOp::InsEdge)
                            txn.ops.push_back(InsEdgeOp{s, d, w});
                        else
                            txn.ops.push_back(DelEdgeOp{s, d, w});
                    } else if (sub == WalOp::InsVertex) {
                        txn.ops.push_back(InsVertexOp{});
                    } else if (sub == WalOp::DelVertex) {
                        txn.ops.push_back(DelVertexOp{wal_decode_vertex(take(8))});
                    } else {
                        throw_error(ErrorCode::CorruptBody, "unknown txn sub-op");
                    }
                }
                op = std::move(txn);
                break;
            }
            default: throw_error(ErrorCode::CorruptBody, "unknown WAL op");
        }
        Reply r = execute_now(0, op);
        if (rec.op == WalOp::InsVertex && r.vertex &&
            *r.vertex != wal_decode_vertex(rec.payload))
            throw_error(ErrorCode::CorruptBody, "vertex id mismatch on replay");
    }
    replaying_ = false;
}

}  // namespace rtgraph
