#include "rtgraph/edge_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rtgraph {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<Edge> load_edges(const std::string& path) {
    std::vector<Edge> edges;
    if (has_suffix(path, ".bin")) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::uint64_t buf[3];
        while (in.read(reinterpret_cast<char*>(buf), sizeof(buf)))
            edges.push_back(Edge{buf[0], buf[1], static_cast<Weight>(buf[2])});
        return edges;
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ss(line);
        Edge e;
        if (!(ss >> e.src >> e.dst)) continue;
        if (!(ss >> e.weight)) e.weight = 0;
        edges.push_back(e);
    }
    return edges;
}

void save_edges_text(const std::string& path, const std::vector<Edge>& edges) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const Edge& e : edges) out << e.src << ' ' << e.dst << ' ' << e.weight << '\n';
}

void save_edges_binary(const std::string& path, const std::vector<Edge>& edges) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const Edge& e : edges) {
        std::uint64_t buf[3] = {e.src, e.dst, static_cast<std::uint64_t>(e.weight)};
        out.write(reinterpret_cast<const char*>(buf), sizeof(buf));
    }
}

VertexId max_vertex_id(const std::vector<Edge>& edges) {
    VertexId max = 0;
    for (const Edge& e : edges) max = std::max({max, e.src, e.dst});
    return max;
}

}  // namespace rtgraph
