#pragma once

#include <algorithm>
#include <string>

#include "rtgraph/types.hpp"

namespace rtgraph {

enum class AlgoKind { Bfs, Sssp, Sswp, Wcc };

// The three-function monotonic algorithm contract. All functions are pure.
//
// Value encodings: BFS/SSSP use kUnreached for "not reached"; SSWP uses 0 for
// "no path" and kUnreached as the root's infinite width; WCC values are
// vertex-id labels and every vertex is always reached.
struct AlgorithmDef {
    AlgoKind kind = AlgoKind::Bfs;
    VertexId root = 0;  // unused by WCC

    Value init_val(VertexId vid) const {
        switch (kind) {
            case AlgoKind::Bfs:
            case AlgoKind::Sssp: return vid == root ? 0 : kUnreached;
            case AlgoKind::Sswp: return vid == root ? kUnreached : 0;
            case AlgoKind::Wcc: return vid;
        }
        return kUnreached;
    }

    // Candidate value for dst along (src -> dst, weight). Absorbing on the
    // unreached sentinel so that edges between unreached vertices propagate
    // nothing. SSSP requires weight >= 0.
    Value gen_next(Weight weight, Value src_value) const {
        switch (kind) {
            case AlgoKind::Bfs:
                if (src_value == kUnreached) return kUnreached;
                return saturating_add(src_value, 1);
            case AlgoKind::Sssp:
                if (weight < 0) throw_error(ErrorCode::NegativeWeight, "negative weight in shortest path");
                if (src_value == kUnreached) return kUnreached;
                return saturating_add(src_value, static_cast<Value>(weight));
            case AlgoKind::Sswp:
                // non-positive weights carry no width
                if (weight <= 0) return 0;
                return std::min(static_cast<Value>(weight), src_value);
            case AlgoKind::Wcc: return src_value;
        }
        return kUnreached;
    }

    bool need_upd(VertexId /*vid*/, Value cur, Value next) const {
        return kind == AlgoKind::Sswp ? next > cur : next < cur;
    }

    Value unreached_value() const { return kind == AlgoKind::Sswp ? 0 : kUnreached; }

    bool is_unreached(Value v) const {
        return kind == AlgoKind::Wcc ? false : v == unreached_value();
    }

    // WCC maintains an undirected view: edge updates are applied as
    // (u -> v, v -> u) pairs.
    bool undirected() const { return kind == AlgoKind::Wcc; }

    const char* name() const {
        switch (kind) {
            case AlgoKind::Bfs: return "bfs";
            case AlgoKind::Sssp: return "sssp";
            case AlgoKind::Sswp: return "sswp";
            case AlgoKind::Wcc: return "wcc";
        }
        return "?";
    }

    static AlgorithmDef parse(const std::string& name, VertexId root);

private:
    static Value saturating_add(Value a, Value b) {
        // saturate into the sentinel: a distance that large is as good as
        // unreached and must not wrap
        return a >= kUnreached - b ? kUnreached : a + b;
    }
};

}  // namespace rtgraph
