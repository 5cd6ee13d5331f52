#include "rtgraph/aff.hpp"

#include <vector>

namespace rtgraph {

AffReport aff_analyze(const GraphStore& graph, const AlgorithmDef& algo,
                      const DependencyState& state) {
    (void)algo;
    std::uint64_t n = graph.capacity();
    AffReport report;

    // children lists of the dependency forest
    std::vector<std::vector<VertexId>> children(n);
    std::vector<VertexId> roots;
    for (VertexId v = 0; v < n; v++) {
        if (!graph.is_live(v)) continue;
        report.live_vertices++;
        if (state.has_parent(v))
            children[state.parent_raw(v).src].push_back(v);
        else
            roots.push_back(v);
    }
    report.live_edges = graph.num_edges();

    // iterative post-order: subtree vertex counts, subtree degree sums, depths
    std::vector<std::uint64_t> subtree_v(n, 0), subtree_d(n, 0), depth(n, 0);
    std::vector<std::pair<VertexId, std::size_t>> stack;
    for (VertexId r : roots) {
        stack.emplace_back(r, 0);
        depth[r] = 0;
        while (!stack.empty()) {
            auto& [v, child_idx] = stack.back();
            if (child_idx < children[v].size()) {
                VertexId c = children[v][child_idx++];
                depth[c] = depth[v] + 1;
                report.tree_diameter = std::max(report.tree_diameter, depth[c]);
                stack.emplace_back(c, 0);
                continue;
            }
            std::uint64_t total_degree = 0;
            for (const EdgeRecord& rec : graph.out_records(v))
                total_degree += rec.count;
            for (const EdgeRecord& rec : graph.in_records(v))
                total_degree += rec.count;
            subtree_v[v] = 1;
            subtree_d[v] = total_degree;
            for (VertexId c : children[v]) {
                subtree_v[v] += subtree_v[c];
                subtree_d[v] += subtree_d[c];
            }
            stack.pop_back();
        }
    }

    // each parented vertex j is one tree edge; duplicates of the tree edge do
    // not add area because the parent link is a single edge instance
    for (VertexId v = 0; v < n; v++) {
        if (!graph.is_live(v) || !state.has_parent(v)) continue;
        report.affv_total += subtree_v[v];
        report.affe_total += subtree_d[v];
    }

    if (report.live_edges > 0) {
        report.mean_affv =
            static_cast<double>(report.affv_total) / static_cast<double>(report.live_edges);
        report.mean_affe =
            static_cast<double>(report.affe_total) / static_cast<double>(report.live_edges);
    }
    if (report.live_vertices > 0)
        report.mean_degree =
            static_cast<double>(report.live_edges) / static_cast<double>(report.live_vertices);
    if (report.mean_degree > 0)
        report.bound_v = static_cast<double>(report.tree_diameter + 1) / report.mean_degree;
    report.bound_e = 2.0 * static_cast<double>(report.tree_diameter + 1);
    return report;
}

}  // namespace rtgraph
