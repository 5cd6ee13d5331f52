#include "rtgraph/algorithms.hpp"

namespace rtgraph {

AlgorithmDef AlgorithmDef::parse(const std::string& name, VertexId root) {
    if (name == "bfs") return {AlgoKind::Bfs, root};
    if (name == "sssp") return {AlgoKind::Sssp, root};
    if (name == "sswp") return {AlgoKind::Sswp, root};
    if (name == "wcc") return {AlgoKind::Wcc, root};
    throw std::invalid_argument("unknown algorithm: " + name);
}

}  // namespace rtgraph
