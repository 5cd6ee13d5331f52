#include "rtgraph/mode_fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "rtgraph/engine.hpp"
#include "rtgraph/workload.hpp"

namespace rtgraph {

namespace {

// One push round at a fixpoint traverses every live out-edge of the active
// set without writing anything, which is exactly the cost the strategy choice
// trades off. Median of repeated rounds.
double time_round(Engine& engine, const std::vector<VertexId>& actives, int reps) {
    std::vector<double> times;
    for (int r = 0; r < reps; r++) {
        for (VertexId v : actives) engine.seed_active(v, engine.state().value(v));
        auto t0 = std::chrono::steady_clock::now();
        engine.push_round(nullptr);
        auto t1 = std::chrono::steady_clock::now();
        engine.push_to_fixpoint(nullptr);  // clear any stragglers
        times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

}  // namespace

ModeFitResult fit_mode_model(int scale, int avg_degree, std::uint64_t seed, int threads,
                             std::ostream* log) {
    auto edges = rmat_edges(scale, (1ull << scale) * static_cast<std::uint64_t>(avg_degree), seed, 64);

    GraphStore store;
    VertexId n = (1ull << scale);
    for (VertexId v = 0; v < n; v++) store.add_vertex();
    for (const Edge& e : edges) store.insert_edge(e.src, e.dst, e.weight);

    // root at the heaviest vertex so a large region is reachable
    VertexId root = 0;
    for (VertexId v = 0; v < n; v++)
        if (store.out_degree(v) > store.out_degree(root)) root = v;
    AlgorithmDef algo{AlgoKind::Bfs, root};

    EngineConfig vcfg, ecfg;
    vcfg.threads = ecfg.threads = std::max(1, threads);
    vcfg.parallel = ecfg.parallel = true;
    vcfg.mode = EngineConfig::Mode::Vertex;
    ecfg.mode = EngineConfig::Mode::Edge;

    DependencyState base = full_recompute(store, algo, vcfg);
    Engine vertex_engine(store, algo, vcfg), edge_engine(store, algo, ecfg);
    vertex_engine.state() = base;
    edge_engine.state() = base;

    std::vector<VertexId> by_degree(n);
    std::iota(by_degree.begin(), by_degree.end(), 0);
    std::sort(by_degree.begin(), by_degree.end(),
              [&](VertexId a, VertexId b) { return store.out_degree(a) > store.out_degree(b); });

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    struct Sample {
        double x, y, label;
    };
    std::vector<Sample> samples;
    ModeFitResult result;

    for (std::uint64_t size = 1; size <= n; size *= 2) {
        for (int variant = 0; variant < 2; variant++) {
            std::vector<VertexId> actives;
            if (variant == 0) {
                // heaviest vertices: few actives, many edges
                actives.assign(by_degree.begin(),
                               by_degree.begin() + std::min<std::uint64_t>(size, n));
            } else {
                for (std::uint64_t i = 0; i < size; i++) actives.push_back(rng() % n);
            }
            std::uint64_t degree_sum = 0;
            for (VertexId v : actives) degree_sum += store.out_degree(v);
            if (degree_sum == 0) continue;

            double tv = time_round(vertex_engine, actives, 5);
            double te = time_round(edge_engine, actives, 5);
            if (std::abs(tv - te) < 0.2 * std::max(tv, te)) continue;  // too close to teach

            Sample s;
            s.x = std::log(static_cast<double>(actives.size()));
            s.y = std::log(static_cast<double>(degree_sum));
            s.label = te < tv ? 1.0 : -1.0;
            (s.label > 0 ? result.edge_wins : result.vertex_wins)++;
            samples.push_back(s);
            if (log)
                (*log) << "sample av=" << actives.size() << " aod=" << degree_sum
                       << " t_vertex=" << tv << "us t_edge=" << te << "us winner="
                       << (s.label > 0 ? "edge" : "vertex") << "\n";
        }
    }
    result.samples = samples.size();
    if (samples.size() < 4 || result.edge_wins == 0 || result.vertex_wins == 0) {
        if (log) (*log) << "degenerate sample set; keeping built-in coefficients\n";
        ParallelModeModel d = ParallelModeModel::default_model();
        result.a = d.a();
        result.b = d.b();
        result.c = d.c();
        return result;
    }

    // least squares for w0 + w1 x + w2 y ~ label; boundary at 0
    double m[3][3] = {};
    double rhs[3] = {};
    for (const Sample& s : samples) {
        double row[3] = {1.0, s.x, s.y};
        for (int i = 0; i < 3; i++) {
            rhs[i] += row[i] * s.label;
            for (int j = 0; j < 3; j++) m[i][j] += row[i] * row[j];
        }
    }
    // gaussian elimination with partial pivoting
    for (int col = 0; col < 3; col++) {
        int pivot = col;
        for (int r = col + 1; r < 3; r++)
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (int r = col + 1; r < 3; r++) {
            double f = m[r][col] / m[col][col];
            for (int j = col; j < 3; j++) m[r][j] -= f * m[col][j];
            rhs[r] -= f * rhs[col];
        }
    }
    double w[3];
    for (int i = 2; i >= 0; i--) {
        double acc = rhs[i];
        for (int j = i + 1; j < 3; j++) acc -= m[i][j] * w[j];
        w[i] = acc / m[i][i];
    }

    result.a = w[1];
    result.b = w[2];
    result.c = -w[0];
    if (log)
        (*log) << "fit: a=" << result.a << " b=" << result.b << " c=" << result.c << " ("
               << samples.size() << " samples)\n";
    return result;
}

}  // namespace rtgraph
