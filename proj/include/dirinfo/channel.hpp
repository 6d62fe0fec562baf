// channel.hpp
//
// Stationary finite-state channels p(y_i, s_i | x_i, s_{i-1}) and their
// unrolling into per-step ChannelFactors for a fixed horizon and initial
// state. Includes the builders for the bundled example channels and the
// line-oriented channel file format used by the CLI.

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dirinfo/causal.hpp"
#include "dirinfo/seqspace.hpp"

namespace dirinfo {

/// Stationary FSC transition law. Rows (x, s) are distributions over (y, s'),
/// stored ((x*S + s) * Y*S + y*S + s').
struct FscKernel {
    int x_size = 2;
    int y_size = 2;
    int state_count = 1;
    int s0 = 0;  // default initial state; unroll() takes the state explicitly
    std::vector<double> t;

    FscKernel(int x, int y, int states)
        : x_size(x), y_size(y), state_count(states),
          t(checked_mul(checked_mul(static_cast<std::uint64_t>(x), static_cast<std::uint64_t>(states)),
                        checked_mul(static_cast<std::uint64_t>(y), static_cast<std::uint64_t>(states))),
            0.0) {
        if (x < 2 || y < 2) throw std::domain_error("alphabets need at least two symbols");
        if (states < 1) throw std::domain_error("state count must be >= 1");
    }

    double& at(int x, int s, int y, int s2) {
        return t[idx(x, s, y, s2)];
    }
    double at(int x, int s, int y, int s2) const {
        return t[idx(x, s, y, s2)];
    }

    double max_row_deviation() const {
        double dev = 0.0;
        for (int x = 0; x < x_size; ++x)
            for (int s = 0; s < state_count; ++s) {
                double sum = 0.0;
                for (int y = 0; y < y_size; ++y)
                    for (int s2 = 0; s2 < state_count; ++s2) sum += at(x, s, y, s2);
                dev = std::max(dev, std::abs(sum - 1.0));
            }
        return dev;
    }

    void validate(double tol = 1e-12) const {
        if (max_row_deviation() > tol)
            throw std::domain_error("FSC rows must be probability distributions");
    }

private:
    std::size_t idx(int x, int s, int y, int s2) const {
        return ((static_cast<std::size_t>(x) * static_cast<std::size_t>(state_count) + static_cast<std::size_t>(s)) *
                    static_cast<std::size_t>(y_size) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(state_count) +
               static_cast<std::size_t>(s2);
    }
};

/// Deterministic per-symbol feedback reduction z = f(y). The map must cover
/// 0..max(f) so that Z carries no unused symbols.
class FeedbackMap {
public:
    explicit FeedbackMap(std::vector<int> f) : map_(std::move(f)) {
        if (map_.empty()) throw std::invalid_argument("feedback map must cover at least one symbol");
        z_size_ = 0;
        for (int v : map_) {
            if (v < 0) throw std::invalid_argument("feedback map values must be nonnegative");
            z_size_ = std::max(z_size_, v + 1);
        }
        std::vector<bool> hit(static_cast<std::size_t>(z_size_), false);
        for (int v : map_) hit[static_cast<std::size_t>(v)] = true;
        for (int z = 0; z < z_size_; ++z)
            if (!hit[static_cast<std::size_t>(z)])
                throw std::invalid_argument("feedback map skips symbol " + std::to_string(z) +
                                            "; values must cover 0..max contiguously");
    }

    static FeedbackMap identity(int y_size) {
        std::vector<int> f(static_cast<std::size_t>(y_size));
        for (int y = 0; y < y_size; ++y) f[static_cast<std::size_t>(y)] = y;
        return FeedbackMap(std::move(f));
    }
    static FeedbackMap constant(int y_size) {
        return FeedbackMap(std::vector<int>(static_cast<std::size_t>(y_size), 0));
    }

    int y_size() const { return static_cast<int>(map_.size()); }
    int z_size() const { return z_size_; }
    int operator()(int y) const { return map_.at(static_cast<std::size_t>(y)); }
    std::span<const int> table() const { return map_; }

    /// Fiber A(z) = { y : f(y) = z }.
    std::vector<int> fiber(int z) const {
        std::vector<int> ys;
        for (int y = 0; y < y_size(); ++y)
            if (map_[static_cast<std::size_t>(y)] == z) ys.push_back(y);
        return ys;
    }

private:
    std::vector<int> map_;
    int z_size_ = 0;
};

/// Unrolls the FSC from a fixed initial state into per-step factors
/// p(y_i | x^i, y^{i-1}, s0) via the forward state-belief recursion
/// alpha_i(s) = p(y^i, s_i = s || x^i, s0). Histories that are impossible
/// under the channel get a uniform placeholder row; they carry zero weight.
inline ChannelFactors unroll(const FscKernel& fsc, int n, int s0) {
    if (n < 1) throw std::domain_error("horizon must be >= 1");
    if (s0 < 0 || s0 >= fsc.state_count) throw std::domain_error("initial state out of range");
    const int X = fsc.x_size, Y = fsc.y_size, S = fsc.state_count;

    ChannelFactors out(n, X, Y);
    std::vector<double> prev(static_cast<std::size_t>(S), 0.0);
    prev[static_cast<std::size_t>(s0)] = 1.0;

    std::uint64_t xh = 1, yh = 1;  // X^{i-1}, Y^{i-1}
    for (int i = 1; i <= n; ++i) {
        const std::uint64_t xh_next = checked_mul(xh, static_cast<std::uint64_t>(X));
        const std::uint64_t yh_next = checked_mul(yh, static_cast<std::uint64_t>(Y));
        std::vector<double> cur(checked_mul(checked_mul(xh_next, yh_next), static_cast<std::uint64_t>(S)), 0.0);
        auto fac = out.factor(i);
        for (std::uint64_t xp = 0; xp < xh; ++xp) {
            for (std::uint64_t yp = 0; yp < yh; ++yp) {
                const double* ap = prev.data() + (xp * yh + yp) * static_cast<std::uint64_t>(S);
                double tot = 0.0;
                for (int s = 0; s < S; ++s) tot += ap[s];
                for (int x = 0; x < X; ++x) {
                    const std::uint64_t xe = xp * static_cast<std::uint64_t>(X) + static_cast<std::uint64_t>(x);
                    double* frow = fac.data() + (xe * yh + yp) * static_cast<std::uint64_t>(Y);
                    for (int y = 0; y < Y; ++y) {
                        const std::uint64_t ye = yp * static_cast<std::uint64_t>(Y) + static_cast<std::uint64_t>(y);
                        double* ac = cur.data() + (xe * yh_next + ye) * static_cast<std::uint64_t>(S);
                        double num = 0.0;
                        for (int s2 = 0; s2 < S; ++s2) {
                            double a = 0.0;
                            for (int s = 0; s < S; ++s) a += ap[s] * fsc.at(x, s, y, s2);
                            ac[s2] = a;
                            num += a;
                        }
                        frow[y] = tot > 0.0 ? num / tot : 1.0 / Y;
                    }
                }
            }
        }
        prev = std::move(cur);
        xh = xh_next;
        yh = yh_next;
    }
    return out;
}

/// Binary symmetric channel as a one-state FSC.
inline FscKernel bsc(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("crossover probability must lie in [0,1]");
    FscKernel fsc(2, 2, 1);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) fsc.at(x, 0, y, 0) = (x == y) ? 1.0 - p : p;
    return fsc;
}

/// Trapdoor channel with m cells. The state counts the ones held in the box;
/// a one is emitted with probability (s + x)/m and the box keeps the rest:
/// s' = s + x - y.
inline FscKernel trapdoor(int m) {
    if (m < 2) throw std::domain_error("trapdoor channel needs at least two cells");
    FscKernel fsc(2, 2, m);
    for (int s = 0; s < m; ++s)
        for (int x = 0; x < 2; ++x) {
            const double p1 = static_cast<double>(s + x) / m;
            if (s + x >= 1) fsc.at(x, s, 1, s + x - 1) = p1;
            if (s + x <= m - 1) fsc.at(x, s, 0, s + x) = 1.0 - p1;
        }
    return fsc;
}

/// Ising channel: the state is the previous input; the output equals the
/// input when it matches the state and is otherwise uniform over the two.
inline FscKernel ising() {
    FscKernel fsc(2, 2, 2);
    for (int x = 0; x < 2; ++x)
        for (int s = 0; s < 2; ++s) {
            if (x == s) {
                fsc.at(x, s, x, x) = 1.0;
            } else {
                fsc.at(x, s, x, x) = 0.5;
                fsc.at(x, s, s, x) = 0.5;
            }
        }
    return fsc;
}

/// Reads the channel text format: a header line `fsc |X| |Y| |S|`, then one
/// line per (x, s) row (x-major, s-minor) carrying |Y|*|S| probabilities in
/// (y-major, s'-minor) order. Lines starting with # and blank lines are
/// skipped. Errors name the offending line.
inline FscKernel load_fsc(std::istream& in) {
    std::string line;
    int line_no = 0;
    auto next_line = [&](std::string& out) -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            std::size_t b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos || line[b] == '#') continue;
            out = line;
            return true;
        }
        return false;
    };

    std::string header;
    if (!next_line(header)) throw std::invalid_argument("channel file is empty");
    std::istringstream hs(header);
    std::string tag;
    int X = 0, Y = 0, S = 0;
    if (!(hs >> tag >> X >> Y >> S) || tag != "fsc")
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": expected header `fsc |X| |Y| |S|`");
    if (X < 2 || Y < 2 || S < 1)
        throw std::invalid_argument("line " + std::to_string(line_no) + ": invalid dimensions");

    FscKernel fsc(X, Y, S);
    for (int x = 0; x < X; ++x)
        for (int s = 0; s < S; ++s) {
            std::string row;
            if (!next_line(row))
                throw std::invalid_argument("unexpected end of file: missing row (x=" +
                                            std::to_string(x) + ", s=" + std::to_string(s) + ")");
            std::istringstream rs(row);
            double sum = 0.0;
            for (int y = 0; y < Y; ++y)
                for (int s2 = 0; s2 < S; ++s2) {
                    double v;
                    if (!(rs >> v))
                        throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(Y * S) + " probabilities");
                    if (v < 0.0)
                        throw std::invalid_argument("line " + std::to_string(line_no) +
                                                    ": negative probability");
                    fsc.at(x, s, y, s2) = v;
                    sum += v;
                }
            double extra;
            if (rs >> extra)
                throw std::invalid_argument("line " + std::to_string(line_no) + ": trailing values");
            if (std::abs(sum - 1.0) > 1e-9)
                throw std::invalid_argument("line " + std::to_string(line_no) +
                                            ": row sums to " + std::to_string(sum) + ", expected 1");
        }
    return fsc;
}

inline FscKernel load_fsc_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open channel file: " + path);
    return load_fsc(in);
}

/// Resolves a CLI channel spec: `bsc:p`, `trapdoor:m`, `ising`, or a file path.
inline FscKernel channel_from_spec(const std::string& spec) {
    if (spec == "ising") return ising();
    if (spec.rfind("bsc:", 0) == 0) {
        std::size_t used = 0;
        double p = std::stod(spec.substr(4), &used);
        if (used != spec.size() - 4) throw std::invalid_argument("malformed bsc spec: " + spec);
        return bsc(p);
    }
    if (spec.rfind("trapdoor:", 0) == 0) {
        std::size_t used = 0;
        int m = std::stoi(spec.substr(9), &used);
        if (used != spec.size() - 9) throw std::invalid_argument("malformed trapdoor spec: " + spec);
        return trapdoor(m);
    }
    return load_fsc_file(spec);
}

}  // namespace dirinfo
