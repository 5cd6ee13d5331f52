#include "rtgraph/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <map>

#include <json.hpp>

#include "rtgraph/edge_io.hpp"

namespace rtgraph {

using nlohmann::json;

struct Server::Connection {
    int fd = -1;
    SessionId session = 0;
    std::atomic<bool> closed{false};

    // responses leave in request order even though reads complete early
    std::mutex mutex;
    std::uint64_t next_request = 0;  // sequence assigned to incoming requests
    std::uint64_t next_to_send = 0;
    std::map<std::uint64_t, std::string> pending;

    void send_ordered(std::uint64_t seq, std::string line) {
        std::lock_guard lock(mutex);
        pending.emplace(seq, std::move(line));
        while (!pending.empty() && pending.begin()->first == next_to_send) {
            if (!closed.load()) {
                const std::string& out = pending.begin()->second;
                if (::send(fd, out.data(), out.size(), MSG_NOSIGNAL) < 0) closed.store(true);
            }
            pending.erase(pending.begin());
            next_to_send++;
        }
    }
};

Server::Server(ServerConfig config) : config_(std::move(config)) {}

Server::~Server() { stop(); }

void Server::start() {
    AlgorithmDef algo = AlgorithmDef::parse(config_.algorithm, config_.root);

    DatabaseConfig db_config;
    db_config.store.index_threshold = config_.index_threshold;
    db_config.engine.threads = std::max(1, config_.threads);
    db_config.engine.parallel = true;
    db_config.engine.mode = config_.mode;
    if (!config_.model_path.empty())
        db_config.engine.model = ParallelModeModel::load(config_.model_path);
    db_config.scheduler.latency_limit = Micros(std::int64_t(config_.latency_ms) * 1000);
    db_config.scheduler.target_fraction = config_.target_percentile;
    db_config.epoch_parallel = config_.epoch_parallel;
    db_config.wal_path = config_.wal_path;
    db_config.fsync = config_.fsync;

    db_ = std::make_unique<Database>(std::vector<AlgorithmDef>{algo}, db_config);

    if (!config_.graph_path.empty()) {
        auto edges = load_edges(config_.graph_path);
        db_->ensure_vertices(edges.empty() ? config_.root + 1 : max_vertex_id(edges) + 1);
        for (const Edge& e : edges) db_->preload_edge(e.src, e.dst, e.weight);
    } else {
        db_->ensure_vertices(config_.root + 1);
    }
    db_->initialize();
    if (!config_.wal_path.empty()) db_->replay_wal(config_.wal_path);

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(config_.port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0)
        throw std::runtime_error("bind() failed");
    if (::listen(listen_fd_, 64) < 0) throw std::runtime_error("listen() failed");
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);

    epoch_thread_ = std::thread([this] { db_->run_loop(stop_); });
    accept_thread_ = std::thread([this] { accept_loop(); });
    reclaim_thread_ = std::thread([this] { reclaim_loop(); });
}

void Server::stop() {
    if (stop_.exchange(true)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    {
        std::lock_guard lock(connections_mutex_);
        for (auto& conn : connections_) {
            conn->closed.store(true);
            ::shutdown(conn->fd, SHUT_RDWR);
        }
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    if (epoch_thread_.joinable()) epoch_thread_.join();
    if (reclaim_thread_.joinable()) reclaim_thread_.join();
}

void Server::reclaim_loop() {
    auto period = std::chrono::milliseconds(config_.reclaim_period_ms);
    while (!stop_.load()) {
        std::this_thread::sleep_for(period);
        for (std::size_t i = 0; i < db_->algo_count(); i++) {
            db_->history(i).reclaim_tick();
            if (!warned_retained_ && db_->history(i).retained_versions() > config_.retained_warning) {
                std::fprintf(stderr,
                             "warning: %llu versions retained; some session never calls "
                             "release_history\n",
                             static_cast<unsigned long long>(db_->history(i).retained_versions()));
                warned_retained_ = true;
            }
        }
    }
}

void Server::accept_loop() {
    while (!stop_.load()) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (stop_.load()) break;
            continue;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        auto conn = std::make_shared<Connection>();
        conn->fd = fd;
        conn->session = db_->open_session();
        {
            std::lock_guard lock(connections_mutex_);
            connections_.push_back(conn);
        }
        std::thread([this, conn] { connection_loop(conn); }).detach();
    }
}

void Server::connection_loop(std::shared_ptr<Connection> conn) {
    std::string buffer;
    char chunk[4096];
    while (!stop_.load() && !conn->closed.load()) {
        ssize_t n = ::recv(conn->fd, chunk, sizeof(chunk), 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t pos;
        while ((pos = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, pos);
            buffer.erase(0, pos + 1);
            if (line.empty()) continue;
            handle_request(*conn, line);
            if (conn->closed.load()) break;
        }
    }
    conn->closed.store(true);
    db_->close_session(conn->session);
    ::close(conn->fd);
}

void Server::handle_request(Connection& conn, const std::string& line) {
    std::uint64_t seq = conn.next_request++;
    json req;
    std::uint64_t id = 0;
    try {
        req = json::parse(line);
        id = req.at("id").get<std::uint64_t>();
        std::string op = req.at("op").get<std::string>();
        const json& args = req.contains("args") ? req.at("args") : json::array();

        auto respond = [this, &conn, seq](json j) { conn.send_ordered(seq, j.dump() + "\n"); };
        auto submit = [&](UpdateOp update) {
            auto cb = [respond, id](const Reply& r) {
                json j{{"id", id}, {"ok", r.ok}};
                if (r.ok) j["version"] = r.version;
                if (r.vertex) j["vertices"] = json::array({*r.vertex});
                if (!r.ok) j["error"] = r.error;
                respond(std::move(j));
            };
            db_->submit_cb(conn.session, std::move(update), std::move(cb));
        };

        auto parse_single = [](const json& a) -> SingleOp {
            std::string kind = a.at(0).get<std::string>();
            if (kind == "ins_edge")
                return InsEdgeOp{a.at(1).get<VertexId>(), a.at(2).get<VertexId>(),
                                 a.size() > 3 ? a.at(3).get<Weight>() : 0};
            if (kind == "del_edge")
                return DelEdgeOp{a.at(1).get<VertexId>(), a.at(2).get<VertexId>(),
                                 a.size() > 3 ? a.at(3).get<Weight>() : 0};
            if (kind == "ins_vertex") return InsVertexOp{};
            if (kind == "del_vertex") return DelVertexOp{a.at(1).get<VertexId>()};
            throw GraphError(ErrorCode::Protocol, "unknown txn op: " + kind);
        };

        if (op == "ins_edge") {
            submit(InsEdgeOp{args.at(0).get<VertexId>(), args.at(1).get<VertexId>(),
                             args.size() > 2 ? args.at(2).get<Weight>() : 0});
        } else if (op == "del_edge") {
            submit(DelEdgeOp{args.at(0).get<VertexId>(), args.at(1).get<VertexId>(),
                             args.size() > 2 ? args.at(2).get<Weight>() : 0});
        } else if (op == "ins_vertex") {
            submit(InsVertexOp{});
        } else if (op == "del_vertex") {
            submit(DelVertexOp{args.at(0).get<VertexId>()});
        } else if (op == "txn_updates") {
            TxnOp txn;
            for (const json& a : args) txn.ops.push_back(parse_single(a));
            submit(std::move(txn));
        } else if (op == "get_value") {
            Value v = db_->history().get_value(args.at(0).get<VersionId>(),
                                               args.at(1).get<VertexId>());
            respond(json{{"id", id}, {"ok", true}, {"value", v}});
        } else if (op == "get_parent") {
            auto p = db_->history().get_parent(args.at(0).get<VersionId>(),
                                               args.at(1).get<VertexId>());
            json j{{"id", id}, {"ok", true}};
            if (p) j["parent"] = json::array({p->src, p->weight});
            respond(std::move(j));
        } else if (op == "get_current_version") {
            respond(json{{"id", id}, {"ok", true}, {"version", db_->current_version()}});
        } else if (op == "get_modified_vertices") {
            auto vertices = db_->history().get_modified_vertices(args.at(0).get<VersionId>());
            respond(json{{"id", id}, {"ok", true}, {"vertices", vertices}});
        } else if (op == "release_history") {
            db_->history().release_history(conn.session, args.at(0).get<VersionId>());
            respond(json{{"id", id}, {"ok", true}});
        } else {
            throw GraphError(ErrorCode::Protocol, "unknown op: " + op);
        }
    } catch (const GraphError& e) {
        conn.send_ordered(seq, json{{"id", id}, {"ok", false}, {"error", error_code_name(e.code())}}
                                   .dump() +
                                   "\n");
        if (e.code() == ErrorCode::Protocol) conn.closed.store(true);
    } catch (const std::exception&) {
        // malformed request: error response, then the connection closes
        conn.send_ordered(seq,
                          json{{"id", id}, {"ok", false}, {"error", "Protocol"}}.dump() + "\n");
        conn.closed.store(true);
    }
}

}  // namespace rtgraph
