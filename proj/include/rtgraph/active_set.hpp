#pragma once

#include <cstdint>
#include <vector>

#include "rtgraph/types.hpp"

namespace rtgraph {

// Membership bitmap for pull phases. Cleared by re-walking the set bits that
// were handed to clear_from, never by scanning all words.
class Bitmap {
public:
    void ensure(std::uint64_t bits) {
        std::uint64_t words = (bits + 63) / 64;
        if (words_.size() < words) words_.resize(words, 0);
    }

    void set(std::uint64_t i) { words_[i >> 6] |= 1ull << (i & 63); }
    bool test(std::uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

    template <typename It>
    void set_from(It begin, It end) {
        for (It it = begin; it != end; ++it) set(*it);
    }
    template <typename It>
    void clear_from(It begin, It end) {
        for (It it = begin; it != end; ++it) words_[*it >> 6] &= ~(1ull << (*it & 63));
    }

    bool all_zero() const {
        for (std::uint64_t w : words_)
            if (w) return false;
        return true;
    }

private:
    std::vector<std::uint64_t> words_;
};

// Active vertices of one push round: per-worker arrays of
// (vertex, value-at-activation). An entry is stale, and skipped at push time,
// when the vertex has since been improved again (a fresher entry exists).
class SparseActiveSet {
public:
    struct Entry {
        VertexId vertex;
        Value value;
    };

    explicit SparseActiveSet(int workers = 1) : shards_(std::max(workers, 1)) {}

    void push(int worker, VertexId v, Value value) { shards_[worker].push_back({v, value}); }

    std::uint64_t size() const {
        std::uint64_t n = 0;
        for (const auto& s : shards_) n += s.size();
        return n;
    }
    bool empty() const { return size() == 0; }

    // O(entries), never O(|V|)
    void clear() {
        for (auto& s : shards_) s.clear();
    }

    int shard_count() const { return static_cast<int>(shards_.size()); }
    const std::vector<Entry>& shard(int i) const { return shards_[i]; }

    // Concatenated view for edge-parallel flattening.
    void flatten(std::vector<Entry>& out) const {
        out.clear();
        for (const auto& s : shards_) out.insert(out.end(), s.begin(), s.end());
    }

private:
    std::vector<std::vector<Entry>> shards_;
};

}  // namespace rtgraph
