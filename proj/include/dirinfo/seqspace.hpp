// seqspace.hpp
//
// Dense index space for fixed-length symbol sequences over finite alphabets.
// Sequences map to flat table indices big-endian: position 1 is the most
// significant digit, so a sequence prefix owns a contiguous block of high
// digits. All other modules address their tables through this convention.

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dirinfo {

/// Multiplies with overflow check; table sizes must stay inside 64 bits.
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > UINT64_MAX / a)
        throw std::overflow_error("index space exceeds 64-bit range");
    return a * b;
}

/// base^exp with the same overflow policy.
inline std::uint64_t checked_pow(std::uint64_t base, int exp) {
    std::uint64_t r = 1;
    for (int i = 0; i < exp; ++i) r = checked_mul(r, base);
    return r;
}

struct AlphabetSpec {
    int x_size = 2;  // |X|
    int y_size = 2;  // |Y|
    int z_size = 2;  // |Z|, equals |Y| when the feedback map is the identity

    void validate() const {
        if (x_size < 2 || y_size < 2)
            throw std::domain_error("input/output alphabets need at least two symbols");
        if (z_size < 1)
            throw std::domain_error("feedback alphabet must be nonempty");
    }
};

/// Bijection between length-n symbol sequences (possibly different alphabet
/// size per position) and indices in [0, prod of sizes).
class SequenceCodec {
public:
    explicit SequenceCodec(std::vector<int> sizes) : sizes_(std::move(sizes)) {
        total_ = 1;
        for (std::size_t i = 0; i < sizes_.size(); ++i) {
            if (sizes_[i] < 1)
                throw std::invalid_argument("alphabet size must be >= 1 at position " +
                                            std::to_string(i + 1));
            total_ = checked_mul(total_, static_cast<std::uint64_t>(sizes_[i]));
        }
    }

    static SequenceCodec uniform(int alphabet_size, int horizon) {
        return SequenceCodec(std::vector<int>(static_cast<std::size_t>(horizon), alphabet_size));
    }

    int horizon() const { return static_cast<int>(sizes_.size()); }
    std::uint64_t size() const { return total_; }
    int size_at(int position) const { return sizes_.at(static_cast<std::size_t>(position)); }

    std::uint64_t encode(std::span<const int> seq) const {
        if (seq.size() != sizes_.size())
            throw std::invalid_argument("sequence length " + std::to_string(seq.size()) +
                                        " does not match horizon " + std::to_string(sizes_.size()));
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i] < 0 || seq[i] >= sizes_[i])
                throw std::domain_error("symbol " + std::to_string(seq[i]) +
                                        " out of range [0," + std::to_string(sizes_[i]) +
                                        ") at position " + std::to_string(i + 1));
            idx = idx * static_cast<std::uint64_t>(sizes_[i]) + static_cast<std::uint64_t>(seq[i]);
        }
        return idx;
    }

    std::vector<int> decode(std::uint64_t index) const {
        if (index >= total_)
            throw std::domain_error("index " + std::to_string(index) + " out of range [0," +
                                    std::to_string(total_) + ")");
        std::vector<int> seq(sizes_.size());
        for (std::size_t i = sizes_.size(); i-- > 0;) {
            const auto s = static_cast<std::uint64_t>(sizes_[i]);
            seq[i] = static_cast<int>(index % s);
            index /= s;
        }
        return seq;
    }

private:
    std::vector<int> sizes_;
    std::uint64_t total_ = 1;
};

enum class Reduce { sum, max };

struct ReduceAxis {
    int size;
    Reduce kind;
};

/// Folds a dense row-major table to a scalar, one axis at a time starting
/// from the innermost, e.g. schedule (max,sum) on a 2x2 table computes
/// max_i sum_j t[i][j]. Sums run left to right so results are reproducible.
inline double alternating_reduce(std::span<const double> table,
                                 std::span<const ReduceAxis> schedule) {
    std::uint64_t expected = 1;
    for (const auto& ax : schedule) {
        if (ax.size < 1)
            throw std::invalid_argument("reduction axis must have size >= 1");
        expected = checked_mul(expected, static_cast<std::uint64_t>(ax.size));
    }
    if (expected != table.size())
        throw std::invalid_argument("table size " + std::to_string(table.size()) +
                                    " does not match schedule volume " + std::to_string(expected));
    if (schedule.empty()) return table[0];

    std::span<const double> cur = table;
    std::vector<double> buf;
    for (std::size_t a = schedule.size(); a-- > 0;) {
        const auto sz = static_cast<std::size_t>(schedule[a].size);
        const std::size_t rows = cur.size() / sz;
        std::vector<double> next(rows);
        if (schedule[a].kind == Reduce::sum) {
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = 0.0;
                for (std::size_t j = 0; j < sz; ++j) acc += cur[r * sz + j];
                next[r] = acc;
            }
        } else {
            for (std::size_t r = 0; r < rows; ++r) {
                double acc = cur[r * sz];
                for (std::size_t j = 1; j < sz; ++j) acc = acc < cur[r * sz + j] ? cur[r * sz + j] : acc;
                next[r] = acc;
            }
        }
        buf = std::move(next);
        cur = buf;
    }
    return buf[0];
}

}  // namespace dirinfo
