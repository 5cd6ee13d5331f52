#include "rtgraph/harness.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <sstream>
#include <thread>

namespace rtgraph {

namespace {

bool touches_tree_edge(const Database& db, const Engine& engine, const UpdateOp& op,
                       bool undirected) {
    auto edge_hits = [&](VertexId src, VertexId dst, Weight w) {
        if (engine.is_tree_edge(Edge{src, dst, w})) return true;
        return undirected && engine.is_tree_edge(Edge{dst, src, w});
    };
    (void)db;
    if (const auto* del = std::get_if<DelEdgeOp>(&op)) return edge_hits(del->src, del->dst, del->weight);
    if (const auto* txn = std::get_if<TxnOp>(&op)) {
        for (const SingleOp& sub : txn->ops)
            if (const auto* d = std::get_if<DelEdgeOp>(&sub))
                if (edge_hits(d->src, d->dst, d->weight)) return true;
    }
    return false;
}

UpdateOp flip_edge_kinds(const UpdateOp& op) {
    if (const auto* ins = std::get_if<InsEdgeOp>(&op)) return DelEdgeOp{ins->src, ins->dst, ins->weight};
    if (const auto* del = std::get_if<DelEdgeOp>(&op)) return InsEdgeOp{del->src, del->dst, del->weight};
    if (const auto* txn = std::get_if<TxnOp>(&op)) {
        TxnOp flipped;
        for (const SingleOp& sub : txn->ops) {
            if (const auto* i = std::get_if<InsEdgeOp>(&sub))
                flipped.ops.push_back(DelEdgeOp{i->src, i->dst, i->weight});
            else if (const auto* d = std::get_if<DelEdgeOp>(&sub))
                flipped.ops.push_back(InsEdgeOp{d->src, d->dst, d->weight});
            else
                flipped.ops.push_back(sub);
        }
        return flipped;
    }
    return op;
}

}  // namespace

VerifyResult verify_stream(Database& db, const std::vector<UpdateOp>& stream, bool check_every) {
    VerifyResult result;
    std::size_t algos = db.algo_count();

    std::vector<std::vector<Value>> pre_values(algos);
    std::vector<std::vector<ParentLink>> pre_parents(algos);

    for (std::size_t i = 0; i < stream.size(); i++) {
        const UpdateOp& op = stream[i];
        for (std::size_t k = 0; k < algos; k++) {
            pre_values[k] = db.engine(k).state().values_snapshot();
            pre_parents[k] = db.engine(k).state().parents_snapshot();
        }

        bool classifiable = true;
        Classification cls = Classification::Safe;
        bool tree_event = false;
        try {
            cls = db.classify(op);
            for (std::size_t k = 0; k < algos; k++)
                tree_event = tree_event || touches_tree_edge(db, db.engine(k), op,
                                                             db.engine(k).algo().undirected());
        } catch (const GraphError&) {
            classifiable = false;  // invalid op; the reply will carry the error
        }

        Reply reply = db.execute_now(0, op);
        result.updates_run++;

        auto fail = [&](const std::string& what) {
            result.pass = false;
            result.failed_update = i;
            result.what = what;
        };

        if (!reply.ok) {
            result.error_count++;
            if (classifiable && cls == Classification::Safe &&
                !std::holds_alternative<DelVertexOp>(op) && !std::holds_alternative<TxnOp>(op)) {
                // safe single edge ops only fail validation, which classify
                // already performed
                fail("classified-safe update failed to apply: " + reply.error);
                return result;
            }
            continue;
        }

        if (cls == Classification::Safe) {
            result.safe_count++;
            for (std::size_t k = 0; k < algos; k++) {
                const auto& state = db.engine(k).state();
                for (VertexId v = 0; v < pre_values[k].size(); v++) {
                    if (state.value(v) != pre_values[k][v]) {
                        fail("safe update changed value of vertex " + std::to_string(v));
                        return result;
                    }
                    if (!(state.parent_raw(v) == pre_parents[k][v])) {
                        fail("safe update changed parent of vertex " + std::to_string(v));
                        return result;
                    }
                }
            }
        } else {
            result.unsafe_count++;
            bool changed = false;
            for (std::size_t k = 0; k < algos && !changed; k++) {
                const auto& state = db.engine(k).state();
                for (VertexId v = 0; v < pre_values[k].size(); v++) {
                    if (state.value(v) != pre_values[k][v] ||
                        !(state.parent_raw(v) == pre_parents[k][v])) {
                        changed = true;
                        break;
                    }
                }
            }
            if (!changed && !tree_event) {
                fail("unsafe update changed nothing and touched no tree edge");
                return result;
            }
        }

        if (check_every) {
            for (std::size_t k = 0; k < algos; k++) {
                std::string why;
                if (!db.engine(k).validate_state(&why)) {
                    fail(std::string("validate_state failed for ") + db.engine(k).algo().name() +
                         ": " + why);
                    return result;
                }
                DependencyState oracle = full_recompute(db.store(), db.engine(k).algo());
                const auto& state = db.engine(k).state();
                for (VertexId v = 0; v < db.store().capacity(); v++) {
                    if (!db.store().is_live(v)) continue;
                    if (state.value(v) != oracle.value(v)) {
                        std::ostringstream what;
                        what << db.engine(k).algo().name() << " diverged at vertex " << v
                             << ": engine " << state.value(v) << " oracle " << oracle.value(v);
                        fail(what.str());
                        return result;
                    }
                }
            }
        }
    }
    return result;
}

BenchOutcome run_bench_inprocess(Database& db, const Workload& workload,
                                 const BenchOptions& options) {
    BenchOutcome outcome;
    std::uint32_t sessions = std::max<std::uint32_t>(1, options.sessions);

    std::vector<std::vector<std::size_t>> per_session(sessions);
    for (std::size_t i = 0; i < workload.stream.size(); i++) {
        std::uint32_t s = workload.stream_session.empty()
                              ? static_cast<std::uint32_t>(i % sessions)
                              : workload.stream_session[i] % sessions;
        per_session[s].push_back(i);
    }

    std::vector<SessionId> ids;
    for (std::uint32_t s = 0; s < sessions; s++) ids.push_back(db.open_session());

    std::atomic<bool> stop_epochs{false};
    std::thread epoch_thread([&] {
        while (!stop_epochs.load(std::memory_order_acquire)) {
            EpochReport report = db.run_epoch(true);
            outcome.thresholds.push_back(db.scheduler().threshold());
            outcome.reports.push_back(std::move(report));
        }
    });

    if (options.open_loop) {
        std::vector<std::vector<LatencySample>> by_session(sessions);
        std::atomic<std::uint64_t> done{0};
        std::uint64_t total = workload.stream.size();
        TimePoint start = Clock::now();
        for (std::size_t i = 0; i < workload.stream.size(); i++) {
            std::uint32_t s = workload.stream_session.empty()
                                  ? static_cast<std::uint32_t>(i % sessions)
                                  : workload.stream_session[i] % sessions;
            TimePoint t0 = Clock::now();
            db.submit_cb(ids[s], workload.stream[i],
                         [&, s, i, t0](const Reply& reply) {
                             TimePoint t1 = Clock::now();
                             LatencySample sample;
                             sample.ts_us = std::chrono::duration_cast<Micros>(t1 - start).count();
                             sample.op_index = i;
                             sample.cls = reply.cls;
                             sample.latency_us =
                                 std::chrono::duration_cast<Micros>(t1 - t0).count();
                             by_session[s].push_back(sample);
                             done.fetch_add(1, std::memory_order_release);
                         });
        }
        while (done.load(std::memory_order_acquire) < total)
            std::this_thread::sleep_for(std::chrono::microseconds(100));
        Micros wall = std::chrono::duration_cast<Micros>(Clock::now() - start);

        stop_epochs.store(true, std::memory_order_release);
        epoch_thread.join();
        for (SessionId id : ids) db.close_session(id);

        for (auto& s : by_session)
            outcome.samples.insert(outcome.samples.end(), s.begin(), s.end());
        std::sort(outcome.samples.begin(), outcome.samples.end(),
                  [](const LatencySample& a, const LatencySample& b) { return a.ts_us < b.ts_us; });
        for (const auto& s : outcome.samples) {
            if (s.cls == 'S') outcome.safe_count++;
            else if (s.cls == 'U') outcome.unsafe_count++;
            else outcome.error_count++;
        }
        outcome.metrics =
            compute_metrics(outcome.samples, wall, options.latency_limit, outcome.thresholds);
        if (!options.latency_csv.empty()) write_latency_csv(options.latency_csv, outcome.samples);
        if (!options.epoch_csv.empty())
            write_epoch_csv(options.epoch_csv, outcome.reports, outcome.thresholds);
        return outcome;
    }

    TimePoint start = Clock::now();
    std::atomic<bool> time_up{false};
    std::vector<std::vector<LatencySample>> session_samples(sessions);

    auto worker = [&](std::uint32_t s) {
        auto& samples = session_samples[s];
        for (std::uint64_t pass = 0;; pass++) {
            if (per_session[s].empty()) break;
            for (std::size_t idx : per_session[s]) {
                if (options.duration.count() > 0 && time_up.load(std::memory_order_relaxed)) return;
                UpdateOp op = pass % 2 == 0 ? workload.stream[idx]
                                            : flip_edge_kinds(workload.stream[idx]);
                TimePoint t0 = Clock::now();
                Reply reply = db.submit(ids[s], std::move(op)).get();
                TimePoint t1 = Clock::now();
                LatencySample sample;
                sample.ts_us = std::chrono::duration_cast<Micros>(t1 - start).count();
                sample.op_index = idx;
                sample.cls = reply.cls;
                sample.latency_us = std::chrono::duration_cast<Micros>(t1 - t0).count();
                samples.push_back(sample);
                if (options.duration.count() > 0 &&
                    t1 - start >= std::chrono::duration_cast<Clock::duration>(options.duration)) {
                    time_up.store(true, std::memory_order_relaxed);
                    return;
                }
            }
            if (options.duration.count() == 0) return;  // single pass
        }
    };

    std::vector<std::thread> threads;
    for (std::uint32_t s = 0; s < sessions; s++) threads.emplace_back(worker, s);
    for (auto& t : threads) t.join();
    Micros wall = std::chrono::duration_cast<Micros>(Clock::now() - start);

    stop_epochs.store(true, std::memory_order_release);
    epoch_thread.join();
    for (SessionId id : ids) db.close_session(id);

    for (auto& s : session_samples)
        outcome.samples.insert(outcome.samples.end(), s.begin(), s.end());
    std::sort(outcome.samples.begin(), outcome.samples.end(),
              [](const LatencySample& a, const LatencySample& b) { return a.ts_us < b.ts_us; });
    for (const auto& s : outcome.samples) {
        if (s.cls == 'S') outcome.safe_count++;
        else if (s.cls == 'U') outcome.unsafe_count++;
        else outcome.error_count++;
    }
    outcome.metrics =
        compute_metrics(outcome.samples, wall, options.latency_limit, outcome.thresholds);
    if (!options.latency_csv.empty()) write_latency_csv(options.latency_csv, outcome.samples);
    if (!options.epoch_csv.empty())
        write_epoch_csv(options.epoch_csv, outcome.reports, outcome.thresholds);
    return outcome;
}

JsonClient::JsonClient(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("bad host: " + host);
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0)
        throw std::runtime_error("connect() failed");
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

JsonClient::~JsonClient() {
    if (fd_ >= 0) ::close(fd_);
}

void JsonClient::send_raw(const std::string& line) {
    std::string out = line;
    if (out.empty() || out.back() != '\n') out.push_back('\n');
    if (::send(fd_, out.data(), out.size(), MSG_NOSIGNAL) < 0)
        throw std::runtime_error("send() failed");
}

std::string JsonClient::read_line() {
    while (true) {
        std::size_t pos = buffer_.find('\n');
        if (pos != std::string::npos) {
            std::string line = buffer_.substr(0, pos);
            buffer_.erase(0, pos + 1);
            return line;
        }
        char chunk[4096];
        ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
        if (n <= 0) throw std::runtime_error("connection closed");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::string JsonClient::request(const std::string& op, const std::string& args_json) {
    std::ostringstream req;
    req << "{\"id\":" << next_id_++ << ",\"op\":\"" << op << "\",\"args\":" << args_json << "}";
    send_raw(req.str());
    return read_line();
}

}  // namespace rtgraph
