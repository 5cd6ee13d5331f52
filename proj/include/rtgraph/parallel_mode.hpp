#pragma once

#include <cstdint>
#include <string>

namespace rtgraph {

enum class PushStrategy { VertexParallel, EdgeParallel };

// Decides the push-round strategy from (active vertex count, summed live
// out-degree of the active set). The default is a linear boundary in log
// space fitted offline by `fit-mode-model` on a synthetic power-law graph;
// without coefficients a documented hand heuristic is used instead.
class ParallelModeModel {
public:
    static ParallelModeModel linear(double a, double b, double c) {
        ParallelModeModel m;
        m.kind_ = Kind::Linear;
        m.a_ = a;
        m.b_ = b;
        m.c_ = c;
        return m;
    }

    // EdgeParallel iff the active set is small relative to the worker pool
    // and dense in out-edges (invented fallback, used when no model file is
    // configured and the built-in fit is disabled).
    static ParallelModeModel heuristic(int worker_count) {
        ParallelModeModel m;
        m.kind_ = Kind::Heuristic;
        m.workers_ = worker_count < 1 ? 1 : worker_count;
        return m;
    }

    // Shipped coefficients; produced by `fit-mode-model` (see README).
    static ParallelModeModel default_model();

    // Three whitespace-separated decimals: a b c.
    static ParallelModeModel load(const std::string& path);

    PushStrategy choose(std::uint64_t active_vertices, std::uint64_t active_out_degree) const;

    bool is_linear() const { return kind_ == Kind::Linear; }
    double a() const { return a_; }
    double b() const { return b_; }
    double c() const { return c_; }

private:
    enum class Kind { Linear, Heuristic };

    Kind kind_ = Kind::Heuristic;
    double a_ = 0, b_ = 0, c_ = 0;
    int workers_ = 1;
};

}  // namespace rtgraph
