#pragma once

#include <string>
#include <vector>

#include "rtgraph/types.hpp"

namespace rtgraph {

// Text format: one edge per line, "src dst [weight]", '#" starts a comment.
// Binary format (.bin): little-endian triples of u64 src, u64 dst, i64 weight.
std::vector<Edge> load_edges(const std::string& path);
void save_edges_text(const std::string& path, const std::vector<Edge>& edges);
void save_edges_binary(const std::string& path, const std::vector<Edge>& edges);

VertexId max_vertex_id(const std::vector<Edge>& edges);

}  // namespace rtgraph
