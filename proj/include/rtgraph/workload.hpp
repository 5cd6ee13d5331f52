#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rtgraph/ccontrol.hpp"
#include "rtgraph/types.hpp"

namespace rtgraph {

struct WorkloadSpec {
    double preload_fraction = 0.9;
    double insert_ratio = 0.5;
    // With timestamped inputs the file order is chronological: the newest
    // decile becomes the insertion set and the oldest the deletion set.
    bool timestamped = false;
    std::uint64_t seed = 0;
    std::uint32_t session_count = 1;
    std::uint32_t txn_size = 1;
};

struct Workload {
    std::vector<Edge> preload;
    std::vector<UpdateOp> stream;               // submission order, txns grouped
    std::vector<std::uint32_t> stream_session;  // parallel to stream
    VertexId vertex_count = 0;
};

// Seeded recursive-matrix power-law generator: 2^scale vertices. Weights are
// uniform in [1, max_weight], or all zero when max_weight == 0.
std::vector<Edge> rmat_edges(int scale, std::uint64_t edge_count, std::uint64_t seed,
                             Weight max_weight);

Workload gen_workload(const std::vector<Edge>& edges, const WorkloadSpec& spec);

// Op stream file: one op per line, "a src dst w" / "d src dst w" / "av" /
// "dv v"; "txn n" prefixes n grouped lines.
void write_workload(const std::string& path, const Workload& workload);
std::vector<UpdateOp> read_workload_ops(const std::string& path);

}  // namespace rtgraph
