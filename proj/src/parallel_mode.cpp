#include "rtgraph/parallel_mode.hpp"

#include <cmath>
#include <fstream>

#include "rtgraph/types.hpp"

namespace rtgraph {

ParallelModeModel ParallelModeModel::default_model() {
    // fit-mode-model output on an rmat graph (scale 14, degree 16); see
    // data/parallel_mode.txt for the raw fit
    return linear(-2.21, 0.58, -14.5);
}

ParallelModeModel ParallelModeModel::load(const std::string& path) {
    std::ifstream in(path);
    double a, b, c;
    if (!(in >> a >> b >> c))
        throw std::runtime_error("model file must hold three decimals: " + path);
    return linear(a, b, c);
}

PushStrategy ParallelModeModel::choose(std::uint64_t active_vertices,
                                       std::uint64_t active_out_degree) const {
    // nothing to traverse: the cheaper setup wins by default
    if (active_vertices == 0 || active_out_degree == 0) return PushStrategy::VertexParallel;
    if (kind_ == Kind::Heuristic) {
        bool few_vertices = active_vertices < 4ull * static_cast<std::uint64_t>(workers_);
        bool dense = active_out_degree / std::max<std::uint64_t>(1, active_vertices) > 32;
        return few_vertices && dense ? PushStrategy::EdgeParallel : PushStrategy::VertexParallel;
    }
    double x = std::log(static_cast<double>(std::max<std::uint64_t>(1, active_vertices)));
    double y = std::log(static_cast<double>(std::max<std::uint64_t>(1, active_out_degree)));
    return a_ * x + b_ * y >= c_ ? PushStrategy::EdgeParallel : PushStrategy::VertexParallel;
}

}  // namespace rtgraph
