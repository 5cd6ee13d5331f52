#pragma once

#include <cstdint>

#include "rtgraph/engine.hpp"

namespace rtgraph {

// Affected-area accounting over the dependency tree. For a tree edge into j,
// the vertices a deletion can touch are bounded by |subtree(j)| and the edges
// inspected by the total degree summed over that subtree; non-tree edges
// touch nothing. Averaged exactly over every live edge:
//   mean_affv <= (D_T + 1) / mean_degree      (mean_degree = |E| / |V|)
//   mean_affe <= 2 (D_T + 1)
// Both hold as identities of the averaging, so a violation is a bug.
struct AffReport {
    double mean_affv = 0;
    double mean_affe = 0;
    std::uint64_t tree_diameter = 0;  // longest root-to-leaf depth
    double mean_degree = 0;
    double bound_v = 0;
    double bound_e = 0;

    // exact integer accumulators backing the bound checks
    std::uint64_t affv_total = 0;
    std::uint64_t affe_total = 0;
    std::uint64_t live_edges = 0;
    std::uint64_t live_vertices = 0;

    bool bounds_hold() const {
        // mean_affv <= (D_T+1)/dbar  <=>  affv_total <= (D_T+1) * |V|
        // mean_affe <= 2(D_T+1)      <=>  affe_total <= 2 (D_T+1) |E|
        return affv_total <= (tree_diameter + 1) * live_vertices &&
               affe_total <= 2 * (tree_diameter + 1) * live_edges;
    }
};

AffReport aff_analyze(const GraphStore& graph, const AlgorithmDef& algo,
                      const DependencyState& state);

}  // namespace rtgraph
