#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rtgraph/aff.hpp"
#include "rtgraph/edge_io.hpp"
#include "rtgraph/harness.hpp"
#include "rtgraph/mode_fit.hpp"
#include "rtgraph/server.hpp"
#include "rtgraph/workload.hpp"

using namespace rtgraph;

namespace {

std::atomic<bool> g_shutdown{false};

void handle_signal(int) { g_shutdown.store(true); }

struct GraphArgs {
    std::string graph_path;
    int scale = 14;
    int degree = 8;
    std::uint64_t seed = 42;
    Weight max_weight = 64;

    void attach(CLI::App* cmd) {
        cmd->add_option("--graph", graph_path, "edge list file (text or .bin)");
        cmd->add_option("--scale", scale, "synthetic graph: log2 vertex count");
        cmd->add_option("--degree", degree, "synthetic graph: average degree");
        cmd->add_option("--seed", seed, "rng seed");
        cmd->add_option("--max-weight", max_weight, "synthetic weights in [1,w], 0 = unweighted");
    }

    std::vector<Edge> load() const {
        if (!graph_path.empty()) return load_edges(graph_path);
        return rmat_edges(scale, (1ull << scale) * static_cast<std::uint64_t>(degree), seed,
                          max_weight);
    }
};

struct WorkloadArgs {
    WorkloadSpec spec;

    void attach(CLI::App* cmd) {
        cmd->add_option("--preload", spec.preload_fraction, "fraction of edges loaded up front");
        cmd->add_option("--insert-ratio", spec.insert_ratio, "fraction of updates that insert");
        cmd->add_flag("--timestamped", spec.timestamped, "treat file order as chronological");
        cmd->add_option("--sessions", spec.session_count, "number of client sessions");
        cmd->add_option("--txn-size", spec.txn_size, "updates per transaction");
    }
};

void prepare_database(Database& db, const std::vector<Edge>& preload, VertexId vertex_count) {
    db.ensure_vertices(std::max<VertexId>(vertex_count, 1));
    for (const Edge& e : preload) db.preload_edge(e.src, e.dst, e.weight);
    db.initialize();
}

int cmd_serve(const ServerConfig& config) {
    Server server(config);
    server.start();
    std::printf("listening on port %u\n", server.port());
    std::fflush(stdout);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_shutdown.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
    return 0;
}

void print_metrics(const BenchOutcome& outcome) {
    const RunMetrics& m = outcome.metrics;
    std::printf("ops            %llu (safe %llu, unsafe %llu, errors %llu)\n",
                (unsigned long long)m.total_ops, (unsigned long long)outcome.safe_count,
                (unsigned long long)outcome.unsafe_count, (unsigned long long)outcome.error_count);
    std::printf("wall           %.3f s\n", m.wall.count() / 1e6);
    std::printf("throughput     %.0f ops/s\n", m.throughput_ops_s);
    std::printf("mean latency   %lld us\n", (long long)m.mean_latency.count());
    if (m.p999)
        std::printf("p999 latency   %lld us\n", (long long)m.p999->count());
    else
        std::printf("p999 latency   n/a (needs >= 10000 updates)\n");
    std::printf("timeout frac   %.5f\n", m.timeout_fraction);
    std::printf("epochs         %zu\n", outcome.reports.size());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"real-time streaming graph engine with per-update incremental analysis"};
    app.require_subcommand(1);

    // ---- serve ----
    ServerConfig server_config;
    std::string fsync_mode = "phase";
    auto* serve = app.add_subcommand("serve", "run the TCP server");
    serve->add_option("--graph", server_config.graph_path, "edge list to preload");
    serve->add_option("--algorithm", server_config.algorithm, "bfs|sssp|sswp|wcc");
    serve->add_option("--root", server_config.root, "root vertex");
    serve->add_option("--threads", server_config.threads, "worker threads");
    serve->add_option("--latency-ms", server_config.latency_ms, "tail latency limit");
    serve->add_option("--target-percentile", server_config.target_percentile,
                      "qualified-latency target fraction");
    serve->add_option("--wal", server_config.wal_path, "write-ahead log path");
    serve->add_option("--port", server_config.port, "listen port (0 = ephemeral)");
    serve->add_option("--index-threshold", server_config.index_threshold,
                      "adjacency index threshold (power of two)");
    serve->add_option("--model", server_config.model_path, "parallel-mode coefficients file");
    std::string mode_name = "hybrid";
    serve->add_option("--mode", mode_name, "push strategy: vertex|edge|hybrid");
    serve->add_option("--fsync", fsync_mode, "every-record|phase");
    bool no_epoch_parallel = false;
    serve->add_flag("--no-epoch-parallel", no_epoch_parallel, "single-executor mode");

    // ---- bench ----
    GraphArgs bench_graph;
    WorkloadArgs bench_load;
    auto* bench = app.add_subcommand("bench", "closed-loop throughput/latency benchmark");
    bench_graph.attach(bench);
    bench_load.attach(bench);
    std::string bench_algo = "bfs";
    VertexId bench_root = 0;
    int bench_threads = 1;
    int bench_latency_ms = 20;
    double bench_duration_s = 0;
    std::string bench_csv, bench_epoch_csv, bench_workload, bench_wal;
    bool bench_baseline = false;
    bench->add_option("--algorithm", bench_algo, "bfs|sssp|sswp|wcc");
    bench->add_option("--root", bench_root, "root vertex");
    bench->add_option("--threads", bench_threads, "worker threads");
    bench->add_option("--latency-ms", bench_latency_ms, "latency limit");
    bench->add_option("--duration-s", bench_duration_s, "run time; 0 = one pass");
    bench->add_option("--csv", bench_csv, "latency csv output");
    bench->add_option("--epoch-csv", bench_epoch_csv, "per-epoch csv output");
    bench->add_option("--workload", bench_workload, "op stream file (else generated)");
    bench->add_option("--wal", bench_wal, "write-ahead log path");
    bench->add_flag("--baseline", bench_baseline, "single-executor baseline (no epoch loop)");
    bool bench_open_loop = false;
    bench->add_flag("--open-loop", bench_open_loop, "pre-enqueue streams and measure drain rate");

    // ---- verify ----
    GraphArgs verify_graph;
    WorkloadArgs verify_load;
    auto* verify = app.add_subcommand("verify", "per-update oracle verification");
    verify_graph.attach(verify);
    verify_load.attach(verify);
    std::string verify_algo = "bfs";
    VertexId verify_root = 0;
    std::uint64_t verify_updates = 10'000;
    std::string verify_workload;
    verify->add_option("--algorithm", verify_algo, "bfs|sssp|sswp|wcc");
    verify->add_option("--root", verify_root, "root vertex");
    verify->add_option("--updates", verify_updates, "max updates to verify");
    verify->add_option("--workload", verify_workload, "op stream file (else generated)");

    // ---- aff ----
    GraphArgs aff_graph;
    auto* aff = app.add_subcommand("aff", "affected-area analysis and bound check");
    aff_graph.attach(aff);
    std::string aff_algo = "bfs";
    VertexId aff_root = 0;
    aff->add_option("--algorithm", aff_algo, "bfs|sssp|sswp|wcc");
    aff->add_option("--root", aff_root, "root vertex");

    // ---- fit-mode-model ----
    auto* fit = app.add_subcommand("fit-mode-model", "fit the push-strategy classifier");
    int fit_scale = 14, fit_degree = 16, fit_threads = 0;
    std::uint64_t fit_seed = 42;
    std::string fit_out;
    fit->add_option("--scale", fit_scale, "log2 vertex count");
    fit->add_option("--degree", fit_degree, "average degree");
    fit->add_option("--seed", fit_seed, "rng seed");
    fit->add_option("--threads", fit_threads, "worker threads (0 = hardware)");
    fit->add_option("--out", fit_out, "write coefficients here");

    // ---- gen ----
    GraphArgs gen_graph;
    WorkloadArgs gen_load;
    auto* gen = app.add_subcommand("gen", "emit base graph + workload stream files");
    gen_graph.attach(gen);
    gen_load.attach(gen);
    std::string gen_out = "workload";
    gen->add_option("--out", gen_out, "output prefix: <out>.base, <out>.stream");

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve->parsed()) {
            if (mode_name == "vertex") server_config.mode = EngineConfig::Mode::Vertex;
            else if (mode_name == "edge") server_config.mode = EngineConfig::Mode::Edge;
            else server_config.mode = EngineConfig::Mode::Hybrid;
            server_config.fsync = fsync_mode == "every-record" ? FsyncPolicy::EveryRecord
                                                               : FsyncPolicy::EveryEpochPhase;
            server_config.epoch_parallel = !no_epoch_parallel;
            return cmd_serve(server_config);
        }

        if (bench->parsed()) {
            auto edges = bench_graph.load();
            bench_load.spec.seed = bench_graph.seed;
            Workload workload = gen_workload(edges, bench_load.spec);
            if (!bench_workload.empty()) {
                workload.stream = read_workload_ops(bench_workload);
                workload.stream_session.clear();
            }

            DatabaseConfig config;
            config.engine.threads = bench_threads;
            config.engine.parallel = true;
            config.epoch_parallel = !bench_baseline;
            config.scheduler.latency_limit = Micros(std::int64_t(bench_latency_ms) * 1000);
            config.wal_path = bench_wal;
            Database db({AlgorithmDef::parse(bench_algo, bench_root)}, config);
            prepare_database(db, workload.preload, workload.vertex_count);

            BenchOptions options;
            options.sessions = bench_load.spec.session_count;
            options.duration = Micros(std::int64_t(bench_duration_s * 1e6));
            options.latency_limit = config.scheduler.latency_limit;
            options.open_loop = bench_open_loop;
            options.latency_csv = bench_csv;
            options.epoch_csv = bench_epoch_csv;
            BenchOutcome outcome = run_bench_inprocess(db, workload, options);
            print_metrics(outcome);
            return 0;
        }

        if (verify->parsed()) {
            auto edges = verify_graph.load();
            verify_load.spec.seed = verify_graph.seed;
            Workload workload = gen_workload(edges, verify_load.spec);
            if (!verify_workload.empty()) workload.stream = read_workload_ops(verify_workload);
            if (workload.stream.size() > verify_updates) workload.stream.resize(verify_updates);

            DatabaseConfig config;
            config.engine.threads = 1;
            Database db({AlgorithmDef::parse(verify_algo, verify_root)}, config);
            prepare_database(db, workload.preload, workload.vertex_count);

            VerifyResult result = verify_stream(db, workload.stream, true);
            std::printf("updates %llu  safe %llu  unsafe %llu  errors %llu\n",
                        (unsigned long long)result.updates_run,
                        (unsigned long long)result.safe_count,
                        (unsigned long long)result.unsafe_count,
                        (unsigned long long)result.error_count);
            if (result.pass) {
                std::printf("verify: PASS\n");
                return 0;
            }
            std::printf("verify: FAIL at update %llu: %s\n",
                        (unsigned long long)result.failed_update, result.what.c_str());
            return 1;
        }

        if (aff->parsed()) {
            auto edges = aff_graph.load();
            DatabaseConfig config;
            Database db({AlgorithmDef::parse(aff_algo, aff_root)}, config);
            prepare_database(db, edges, edges.empty() ? 1 : max_vertex_id(edges) + 1);
            AffReport report = aff_analyze(db.store(), db.engine().algo(), db.engine().state());
            std::printf("vertices       %llu\n", (unsigned long long)report.live_vertices);
            std::printf("edges          %llu\n", (unsigned long long)report.live_edges);
            std::printf("tree diameter  %llu\n", (unsigned long long)report.tree_diameter);
            std::printf("mean degree    %.4f\n", report.mean_degree);
            std::printf("mean AFFV      %.6f  (bound %.6f)\n", report.mean_affv, report.bound_v);
            std::printf("mean AFFE      %.6f  (bound %.6f)\n", report.mean_affe, report.bound_e);
            std::printf("bounds         %s\n", report.bounds_hold() ? "hold" : "VIOLATED");
            return report.bounds_hold() ? 0 : 1;
        }

        if (fit->parsed()) {
            int threads = fit_threads > 0 ? fit_threads : (int)std::thread::hardware_concurrency();
            ModeFitResult result = fit_mode_model(fit_scale, fit_degree, fit_seed, threads,
                                                  &std::cerr);
            std::printf("%.6f %.6f %.6f\n", result.a, result.b, result.c);
            if (!fit_out.empty()) {
                std::ofstream out(fit_out);
                out << result.a << ' ' << result.b << ' ' << result.c << '\n';
            }
            return 0;
        }

        if (gen->parsed()) {
            auto edges = gen_graph.load();
            gen_load.spec.seed = gen_graph.seed;
            Workload workload = gen_workload(edges, gen_load.spec);
            save_edges_text(gen_out + ".base", workload.preload);
            write_workload(gen_out + ".stream", workload);
            std::printf("wrote %s.base (%zu edges) and %s.stream (%zu ops)\n", gen_out.c_str(),
                        workload.preload.size(), gen_out.c_str(), workload.stream.size());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
