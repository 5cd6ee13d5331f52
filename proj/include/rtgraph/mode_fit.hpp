#pragma once

#include <cstdint>
#include <iosfwd>

#include "rtgraph/parallel_mode.hpp"

namespace rtgraph {

struct ModeFitResult {
    double a = 0, b = 0, c = 0;
    std::size_t samples = 0;
    std::size_t edge_wins = 0;
    std::size_t vertex_wins = 0;
};

// Micro-benchmarks vertex- vs edge-parallel push rounds over a grid of
// (active vertices, active out-degree) drawn from a synthetic power-law
// graph, then fits a linear boundary in log space by least squares. Samples
// where the two modes differ by less than 20% are discarded.
ModeFitResult fit_mode_model(int scale, int avg_degree, std::uint64_t seed, int threads,
                             std::ostream* log);

}  // namespace rtgraph
