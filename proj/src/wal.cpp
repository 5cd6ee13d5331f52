#include "rtgraph/wal.hpp"

#include <unistd.h>
#include <zlib.h>

#include <cstring>
#include <filesystem>

namespace rtgraph {

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); i++)
        buf.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); i++) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

std::uint32_t record_crc(const std::vector<std::uint8_t>& head_and_payload) {
    return static_cast<std::uint32_t>(
        ::crc32(0, head_and_payload.data(), static_cast<uInt>(head_and_payload.size())));
}

}  // namespace

WalWriter::WalWriter(const std::string& path, FsyncPolicy policy) : policy_(policy) {
    // continue after any existing complete records
    if (std::filesystem::exists(path)) {
        auto records = wal_read(path, true);
        if (!records.empty()) next_sequence_ = records.back().sequence + 1;
    }
    file_ = std::fopen(path.c_str(), "ab");
    if (!file_) throw std::runtime_error("cannot open WAL: " + path);
    fd_ = fileno(file_);
}

WalWriter::~WalWriter() {
    if (file_) {
        flush();
        std::fclose(file_);
    }
}

std::uint64_t WalWriter::append(WalOp op, const std::vector<std::uint8_t>& payload) {
    if (payload.size() > std::numeric_limits<std::uint16_t>::max())
        throw std::length_error("WAL payload too large");
    std::lock_guard lock(mutex_);
    std::uint64_t seq = next_sequence_++;

    std::vector<std::uint8_t> buf;
    buf.reserve(15 + payload.size());
    put_le<std::uint64_t>(buf, seq);
    buf.push_back(static_cast<std::uint8_t>(op));
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(payload.size()));
    buf.insert(buf.end(), payload.begin(), payload.end());
    std::uint32_t crc = record_crc(buf);
    put_le<std::uint32_t>(buf, crc);

    if (std::fwrite(buf.data(), 1, buf.size(), file_) != buf.size())
        throw std::runtime_error("WAL write failed");
    if (policy_ == FsyncPolicy::EveryRecord) {
        std::fflush(file_);
        ::fsync(fd_);
        dirty_ = false;
    } else {
        dirty_ = true;
    }
    return seq;
}

void WalWriter::flush() {
    std::lock_guard lock(mutex_);
    if (!dirty_) return;
    std::fflush(file_);
    ::fsync(fd_);
    dirty_ = false;
}

std::vector<WalRecord> wal_read(const std::string& path, bool truncate_tail) {
    std::vector<WalRecord> records;
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return records;
    std::fseek(f, 0, SEEK_END);
    long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<std::uint8_t> data(static_cast<std::size_t>(size));
    if (size > 0 && std::fread(data.data(), 1, data.size(), f) != data.size()) {
        std::fclose(f);
        throw std::runtime_error("cannot read WAL: " + path);
    }
    std::fclose(f);

    constexpr std::size_t kHeader = 8 + 1 + 2;
    std::size_t off = 0;
    std::size_t good_end = 0;
    std::string fault;
    while (off < data.size()) {
        if (off + kHeader > data.size()) {
            fault = "truncated header";
            break;
        }
        std::uint16_t len = get_le<std::uint16_t>(&data[off + 9]);
        std::size_t total = kHeader + len + 4;
        if (off + total > data.size()) {
            fault = "truncated record";
            break;
        }
        std::vector<std::uint8_t> body(data.begin() + off, data.begin() + off + kHeader + len);
        std::uint32_t stored = get_le<std::uint32_t>(&data[off + kHeader + len]);
        if (record_crc(body) != stored) {
            fault = "crc mismatch";
            break;
        }
        WalRecord rec;
        rec.sequence = get_le<std::uint64_t>(&data[off]);
        rec.op = static_cast<WalOp>(data[off + 8]);
        rec.payload.assign(data.begin() + off + kHeader, data.begin() + off + kHeader + len);
        records.push_back(std::move(rec));
        off += total;
        good_end = off;
    }

    if (!fault.empty()) {
        // A bad record that is not the last thing in the file means the body
        // is corrupt, not just a torn tail.
        bool at_tail = true;
        if (fault == "crc mismatch") {
            std::uint16_t len = get_le<std::uint16_t>(&data[good_end + 9]);
            at_tail = good_end + kHeader + len + 4 >= data.size();
        }
        if (!at_tail) throw_error(ErrorCode::CorruptBody, "WAL corrupt mid-file: " + path);
        if (truncate_tail && good_end < data.size())
            std::filesystem::resize_file(path, good_end);
    }
    return records;
}

std::vector<std::uint8_t> wal_encode_edge(VertexId src, VertexId dst, Weight weight) {
    std::vector<std::uint8_t> p;
    p.reserve(24);
    put_le<std::uint64_t>(p, src);
    put_le<std::uint64_t>(p, dst);
    put_le<std::int64_t>(p, weight);
    return p;
}

void wal_decode_edge(const std::vector<std::uint8_t>& payload, VertexId& src, VertexId& dst,
                     Weight& weight) {
    if (payload.size() != 24) throw_error(ErrorCode::CorruptBody, "bad edge payload");
    src = get_le<std::uint64_t>(&payload[0]);
    dst = get_le<std::uint64_t>(&payload[8]);
    weight = get_le<std::int64_t>(&payload[16]);
}

std::vector<std::uint8_t> wal_encode_vertex(VertexId v) {
    std::vector<std::uint8_t> p;
    put_le<std::uint64_t>(p, v);
    return p;
}

VertexId wal_decode_vertex(const std::vector<std::uint8_t>& payload) {
    if (payload.size() != 8) throw_error(ErrorCode::CorruptBody, "bad vertex payload");
    return get_le<std::uint64_t>(&payload[0]);
}

std::vector<std::uint8_t> wal_encode_count(std::uint32_t n) {
    std::vector<std::uint8_t> p;
    put_le<std::uint32_t>(p, n);
    return p;
}

std::uint32_t wal_decode_count(const std::vector<std::uint8_t>& payload) {
    if (payload.size() < 4) throw_error(ErrorCode::CorruptBody, "bad count payload");
    return get_le<std::uint32_t>(&payload[0]);
}

}  // namespace rtgraph
