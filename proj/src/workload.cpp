#include "rtgraph/workload.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "rtgraph/edge_io.hpp"

namespace rtgraph {

std::vector<Edge> rmat_edges(int scale, std::uint64_t edge_count, std::uint64_t seed,
                             Weight max_weight) {
    // classic quadrant probabilities a=0.57 b=0.19 c=0.19 d=0.05
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Edge> edges;
    edges.reserve(edge_count);
    for (std::uint64_t i = 0; i < edge_count; i++) {
        VertexId src = 0, dst = 0;
        for (int bit = 0; bit < scale; bit++) {
            double r = uni(rng);
            src <<= 1;
            dst <<= 1;
            if (r < 0.57) {
            } else if (r < 0.76) {
                dst |= 1;
            } else if (r < 0.95) {
                src |= 1;
            } else {
                src |= 1;
                dst |= 1;
            }
        }
        Weight w = 0;
        if (max_weight > 0)
            w = static_cast<Weight>(rng() % static_cast<std::uint64_t>(max_weight)) + 1;
        edges.push_back(Edge{src, dst, w});
    }
    return edges;
}

Workload gen_workload(const std::vector<Edge>& edges, const WorkloadSpec& spec) {
    if (spec.preload_fraction < 0 || spec.preload_fraction > 1 || spec.insert_ratio < 0 ||
        spec.insert_ratio > 1)
        throw std::invalid_argument("workload fractions must be in [0,1]");

    std::mt19937_64 rng(spec.seed);
    std::vector<Edge> ordered = edges;
    if (!spec.timestamped) std::shuffle(ordered.begin(), ordered.end(), rng);

    std::size_t n = ordered.size();
    std::size_t upd = static_cast<std::size_t>((1.0 - spec.preload_fraction) * n);
    std::size_t preload_n = n - upd;

    std::vector<Edge> preload(ordered.begin(), ordered.begin() + preload_n);
    std::vector<Edge> insert_set(ordered.begin() + preload_n, ordered.end());

    // deletions come out of the loaded part: the oldest slice when the input
    // is chronological, a seeded sample otherwise
    std::size_t del_n = std::min(upd, preload.size());
    std::vector<Edge> delete_set;
    delete_set.reserve(del_n);
    if (spec.timestamped) {
        delete_set.assign(preload.begin(), preload.begin() + del_n);
    } else {
        std::vector<std::size_t> idx(preload.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < del_n; i++) {
            std::size_t j = i + rng() % (idx.size() - i);
            std::swap(idx[i], idx[j]);
            delete_set.push_back(preload[idx[i]]);
        }
    }

    // deterministic interleaving at the requested ratio
    std::vector<SingleOp> updates;
    updates.reserve(insert_set.size() + delete_set.size());
    std::size_t ins_i = 0, del_i = 0;
    double acc = 0;
    while (ins_i < insert_set.size() || del_i < delete_set.size()) {
        acc += spec.insert_ratio;
        bool pick_insert = acc >= 1.0;
        if (pick_insert && ins_i >= insert_set.size()) pick_insert = false;
        if (!pick_insert && del_i >= delete_set.size()) pick_insert = true;
        if (pick_insert) {
            if (acc >= 1.0) acc -= 1.0;
            const Edge& e = insert_set[ins_i++];
            updates.push_back(InsEdgeOp{e.src, e.dst, e.weight});
        } else {
            const Edge& e = delete_set[del_i++];
            updates.push_back(DelEdgeOp{e.src, e.dst, e.weight});
        }
    }

    Workload out;
    out.preload = std::move(preload);
    out.vertex_count = edges.empty() ? 0 : max_vertex_id(edges) + 1;

    // round-robin to sessions; per session, txn_size consecutive updates form
    // one atomic envelope
    std::uint32_t sessions = std::max<std::uint32_t>(1, spec.session_count);
    std::uint32_t txn = std::max<std::uint32_t>(1, spec.txn_size);
    if (txn == 1) {
        for (std::size_t i = 0; i < updates.size(); i++) {
            std::visit([&](const auto& o) { out.stream.push_back(o); }, updates[i]);
            out.stream_session.push_back(static_cast<std::uint32_t>(i % sessions));
        }
        return out;
    }
    std::vector<TxnOp> pending(sessions);
    for (std::size_t i = 0; i < updates.size(); i++) {
        std::uint32_t s = static_cast<std::uint32_t>(i % sessions);
        pending[s].ops.push_back(updates[i]);
        if (pending[s].ops.size() == txn) {
            out.stream.push_back(std::move(pending[s]));
            out.stream_session.push_back(s);
            pending[s] = TxnOp{};
        }
    }
    for (std::uint32_t s = 0; s < sessions; s++) {
        if (!pending[s].ops.empty()) {
            out.stream.push_back(std::move(pending[s]));
            out.stream_session.push_back(s);
        }
    }
    return out;
}

void write_workload(const std::string& path, const Workload& workload) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    auto emit_single = [&](const SingleOp& op) {
        std::visit(
            [&](const auto& o) {
                using T = std::decay_t<decltype(o)>;
                if constexpr (std::is_same_v<T, InsEdgeOp>)
                    out << "a " << o.src << ' ' << o.dst << ' ' << o.weight << '\n';
                else if constexpr (std::is_same_v<T, DelEdgeOp>)
                    out << "d " << o.src << ' ' << o.dst << ' ' << o.weight << '\n';
                else if constexpr (std::is_same_v<T, InsVertexOp>)
                    out << "av\n";
                else
                    out << "dv " << o.v << '\n';
            },
            op);
    };
    for (const UpdateOp& op : workload.stream) {
        if (const auto* txn = std::get_if<TxnOp>(&op)) {
            out << "txn " << txn->ops.size() << '\n';
            for (const SingleOp& sub : txn->ops) emit_single(sub);
        } else {
            std::visit(
                [&](const auto& o) {
                    using T = std::decay_t<decltype(o)>;
                    if constexpr (!std::is_same_v<T, TxnOp>) emit_single(SingleOp{o});
                },
                op);
        }
    }
}

std::vector<UpdateOp> read_workload_ops(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<UpdateOp> ops;
    std::string line;
    auto parse_single = [](const std::string& text) -> SingleOp {
        std::istringstream ss(text);
        std::string kind;
        ss >> kind;
        if (kind == "a" || kind == "d") {
            VertexId src, dst;
            Weight w = 0;
            if (!(ss >> src >> dst)) throw std::runtime_error("bad workload line: " + text);
            ss >> w;
            if (kind == "a") return InsEdgeOp{src, dst, w};
            return DelEdgeOp{src, dst, w};
        }
        if (kind == "av") return InsVertexOp{};
        if (kind == "dv") {
            VertexId v;
            if (!(ss >> v)) throw std::runtime_error("bad workload line: " + text);
            return DelVertexOp{v};
        }
        throw std::runtime_error("bad workload line: " + text);
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("txn ", 0) == 0) {
            std::size_t count = std::stoull(line.substr(4));
            TxnOp txn;
            for (std::size_t i = 0; i < count; i++) {
                if (!std::getline(in, line)) throw std::runtime_error("truncated txn block");
                txn.ops.push_back(parse_single(line));
            }
            ops.push_back(std::move(txn));
            continue;
        }
        std::visit([&](const auto& o) { ops.push_back(o); }, parse_single(line));
    }
    return ops;
}

}  // namespace rtgraph
