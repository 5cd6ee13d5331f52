#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "rtgraph/types.hpp"

namespace rtgraph {

// Write-ahead log record. Layout on disk, little-endian:
//   [u64 sequence][u8 op][u16 payload_len][payload bytes][u32 crc32]
// The CRC covers everything before it. A torn or CRC-failing record at the
// tail is discarded on recovery; corruption mid-file is fatal.
enum class WalOp : std::uint8_t {
    InsEdge = 1,
    DelEdge = 2,
    InsVertex = 3,
    DelVertex = 4,
    // One record per transaction so a commit is all-or-nothing:
    // payload = [u32 count] then count x ([u8 sub-op][sub-payload]).
    Txn = 5,
};

struct WalRecord {
    std::uint64_t sequence = 0;
    WalOp op = WalOp::InsEdge;
    std::vector<std::uint8_t> payload;
};

enum class FsyncPolicy { EveryRecord, EveryEpochPhase };

class WalWriter {
public:
    WalWriter(const std::string& path, FsyncPolicy policy);
    ~WalWriter();

    WalWriter(const WalWriter&) = delete;
    WalWriter& operator=(const WalWriter&) = delete;

    // Appends and, under EveryRecord, makes the record durable before
    // returning. Thread-safe; append order defines the commit order.
    std::uint64_t append(WalOp op, const std::vector<std::uint8_t>& payload);
    // Phase-boundary flush for the EveryEpochPhase policy.
    void flush();

    std::uint64_t next_sequence() const { return next_sequence_; }

private:
    std::mutex mutex_;
    FILE* file_ = nullptr;
    int fd_ = -1;
    FsyncPolicy policy_;
    std::uint64_t next_sequence_ = 1;
    bool dirty_ = false;
};

// Reads all complete records. Throws CorruptBody for mid-file corruption;
// tolerates a torn tail (truncating it when truncate_tail is set) and keeps
// going from the last good record.
std::vector<WalRecord> wal_read(const std::string& path, bool truncate_tail = true);

// Payload codecs.
std::vector<std::uint8_t> wal_encode_edge(VertexId src, VertexId dst, Weight weight);
void wal_decode_edge(const std::vector<std::uint8_t>& payload, VertexId& src, VertexId& dst,
                     Weight& weight);
std::vector<std::uint8_t> wal_encode_vertex(VertexId v);
VertexId wal_decode_vertex(const std::vector<std::uint8_t>& payload);
std::vector<std::uint8_t> wal_encode_count(std::uint32_t n);
std::uint32_t wal_decode_count(const std::vector<std::uint8_t>& payload);

}  // namespace rtgraph
