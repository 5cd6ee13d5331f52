#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

namespace rtgraph {

using VertexId = std::uint64_t;
using Weight = std::int64_t;
using Value = std::uint64_t;
using VersionId = std::uint64_t;
using SessionId = std::uint64_t;

inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();
inline constexpr Value kUnreached = std::numeric_limits<Value>::max();

struct Edge {
    VertexId src = 0;
    VertexId dst = 0;
    Weight weight = 0;

    bool operator==(const Edge&) const = default;
};

// Bottom-up dependency-tree link: the in-edge (src -> v, weight) that
// justifies v's current value.
struct ParentLink {
    VertexId src = kNoVertex;
    Weight weight = 0;

    bool operator==(const ParentLink&) const = default;
};

enum class ErrorCode {
    UnknownVertex,
    NotIsolated,
    EdgeNotFound,
    NegativeWeight,
    VersionReclaimed,
    UnknownVersion,
    CorruptTail,
    CorruptBody,
    Protocol,
};

const char* error_code_name(ErrorCode code);

class GraphError : public std::runtime_error {
public:
    GraphError(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& what) {
    throw GraphError(code, what);
}

// Short-critical-section lock. Sections here run a few hundred nanoseconds,
// where parking on a futex costs more than the work being protected.
class SpinMutex {
public:
    void lock() noexcept {
        int spins = 0;
        while (flag_.exchange(1, std::memory_order_acquire)) {
            do {
#if defined(__x86_64__) || defined(__i386__)
                __builtin_ia32_pause();
#endif
                if (++spins >= 256) {
                    spins = 0;
                    std::this_thread::yield();
                }
            } while (flag_.load(std::memory_order_relaxed));
        }
    }
    void unlock() noexcept { flag_.store(0, std::memory_order_release); }

private:
    std::atomic<std::uint8_t> flag_{0};
};

}  // namespace rtgraph
