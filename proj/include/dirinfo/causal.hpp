// causal.hpp
//
// Causally conditioned PMFs as products of per-step conditional tables.
//
// A CausalKernel holds one table per step i: rows are histories
// (x^{i-1}, z^{i-d}), columns are the next input x_i, so the product of the
// looked-up entries over i = 1..n is p(x^n || z^{n-d}). ChannelFactors is
// the same idea for a fixed channel: per-step tables p(y_i | x^i, y^{i-1})
// whose product is p(y^n || x^n). Flat indices follow the big-endian prefix
// convention of seqspace.hpp:
//
//   kernel table i:  ((x_hist * Z^len_i + z_hist) * |X| + x),  len_i = max(i-d, 0)
//   channel factor i: ((x_pref * Y^{i-1} + y_hist) * |Y| + y), x_pref over X^i
//   posterior:        (x_idx * |Y|^n + y_idx), normalized over x for fixed y

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "dirinfo/seqspace.hpp"

namespace dirinfo {

class CausalKernel {
public:
    /// Uniform kernel: every history row is the uniform distribution over x_i.
    CausalKernel(int horizon, int delay, int x_size, int z_size)
        : horizon_(horizon), delay_(delay), x_size_(x_size), z_size_(z_size) {
        if (horizon < 1) throw std::domain_error("horizon must be >= 1");
        if (delay < 1) throw std::domain_error("feedback delay must be >= 1");
        if (x_size < 2) throw std::domain_error("input alphabet needs at least two symbols");
        if (z_size < 1) throw std::domain_error("feedback alphabet must be nonempty");
        tables_.resize(static_cast<std::size_t>(horizon));
        for (int i = 1; i <= horizon; ++i) {
            const std::uint64_t n = checked_mul(rows(i), static_cast<std::uint64_t>(x_size_));
            tables_[static_cast<std::size_t>(i - 1)].assign(n, 1.0 / x_size_);
        }
    }

    int horizon() const { return horizon_; }
    int delay() const { return delay_; }
    int x_size() const { return x_size_; }
    int z_size() const { return z_size_; }

    /// Length of the feedback history visible at step i.
    int z_len(int i) const { return i - delay_ > 0 ? i - delay_ : 0; }

    std::uint64_t rows(int i) const {
        return checked_mul(checked_pow(static_cast<std::uint64_t>(x_size_), i - 1),
                           checked_pow(static_cast<std::uint64_t>(z_size_), z_len(i)));
    }

    std::span<double> table(int i) { return tables_[check_step(i)]; }
    std::span<const double> table(int i) const { return tables_[check_step(i)]; }

    double& at(int i, std::uint64_t x_hist, std::uint64_t z_hist, int x) {
        return tables_[check_step(i)][flat(i, x_hist, z_hist, x)];
    }
    double at(int i, std::uint64_t x_hist, std::uint64_t z_hist, int x) const {
        return tables_[check_step(i)][flat(i, x_hist, z_hist, x)];
    }

    /// p(x^n || z^{n-d}): product of the per-step factors along one pair of
    /// sequences. z_seq must have length max(n-d, 0).
    double evaluate(std::span<const int> x_seq, std::span<const int> z_seq) const {
        if (static_cast<int>(x_seq.size()) != horizon_)
            throw std::invalid_argument("input sequence length does not match horizon");
        if (static_cast<int>(z_seq.size()) != z_len(horizon_))
            throw std::invalid_argument("feedback sequence length does not match horizon - delay");
        double p = 1.0;
        std::uint64_t x_hist = 0, z_hist = 0;
        for (int i = 1; i <= horizon_; ++i) {
            if (i > delay_) {
                const int z = z_seq[static_cast<std::size_t>(i - delay_ - 1)];
                if (z < 0 || z >= z_size_) throw std::domain_error("feedback symbol out of range");
                z_hist = z_hist * static_cast<std::uint64_t>(z_size_) + static_cast<std::uint64_t>(z);
            }
            const int x = x_seq[static_cast<std::size_t>(i - 1)];
            if (x < 0 || x >= x_size_) throw std::domain_error("input symbol out of range");
            p *= at(i, x_hist, z_hist, x);
            x_hist = x_hist * static_cast<std::uint64_t>(x_size_) + static_cast<std::uint64_t>(x);
        }
        return p;
    }

    /// Drops the last per-step table: sum_{x_n} p(x^n||z^{n-d}) = p(x^{n-1}||z^{n-1-d}).
    CausalKernel marginalize_last() const {
        if (horizon_ < 2) throw std::domain_error("cannot marginalize a horizon-1 kernel");
        CausalKernel out(horizon_ - 1, delay_, x_size_, z_size_);
        for (int i = 1; i < horizon_; ++i) out.tables_[static_cast<std::size_t>(i - 1)] = tables_[static_cast<std::size_t>(i - 1)];
        return out;
    }

    /// Largest |row sum - 1| over all history rows.
    double max_row_deviation() const {
        double dev = 0.0;
        for (int i = 1; i <= horizon_; ++i) {
            const auto& t = tables_[static_cast<std::size_t>(i - 1)];
            const std::uint64_t nrows = rows(i);
            for (std::uint64_t r = 0; r < nrows; ++r) {
                double s = 0.0;
                for (int x = 0; x < x_size_; ++x) s += t[r * static_cast<std::uint64_t>(x_size_) + static_cast<std::uint64_t>(x)];
                const double d = std::abs(s - 1.0);
                if (d > dev) dev = d;
            }
        }
        return dev;
    }

    /// Rescales every row to sum to one; all-zero rows become uniform.
    void normalize_rows() {
        for (int i = 1; i <= horizon_; ++i) {
            auto& t = tables_[static_cast<std::size_t>(i - 1)];
            const std::uint64_t nrows = rows(i);
            for (std::uint64_t r = 0; r < nrows; ++r) {
                double s = 0.0;
                for (int x = 0; x < x_size_; ++x) s += t[r * static_cast<std::uint64_t>(x_size_) + static_cast<std::uint64_t>(x)];
                for (int x = 0; x < x_size_; ++x) {
                    auto& v = t[r * static_cast<std::uint64_t>(x_size_) + static_cast<std::uint64_t>(x)];
                    v = s > 0.0 ? v / s : 1.0 / x_size_;
                }
            }
        }
    }

private:
    std::size_t check_step(int i) const {
        if (i < 1 || i > horizon_) throw std::invalid_argument("step index out of range");
        return static_cast<std::size_t>(i - 1);
    }
    std::uint64_t flat(int i, std::uint64_t x_hist, std::uint64_t z_hist, int x) const {
        const std::uint64_t zcard = checked_pow(static_cast<std::uint64_t>(z_size_), z_len(i));
        return (x_hist * zcard + z_hist) * static_cast<std::uint64_t>(x_size_) + static_cast<std::uint64_t>(x);
    }

    int horizon_, delay_, x_size_, z_size_;
    std::vector<std::vector<double>> tables_;
};

class ChannelFactors {
public:
    /// Uniform channel: every factor row is uniform over y_i.
    ChannelFactors(int horizon, int x_size, int y_size)
        : horizon_(horizon), x_size_(x_size), y_size_(y_size) {
        if (horizon < 1) throw std::domain_error("horizon must be >= 1");
        if (x_size < 2 || y_size < 2) throw std::domain_error("alphabets need at least two symbols");
        factors_.resize(static_cast<std::size_t>(horizon));
        for (int i = 1; i <= horizon; ++i)
            factors_[static_cast<std::size_t>(i - 1)].assign(checked_mul(rows(i), static_cast<std::uint64_t>(y_size_)), 1.0 / y_size_);
    }

    int horizon() const { return horizon_; }
    int x_size() const { return x_size_; }
    int y_size() const { return y_size_; }

    /// Rows of factor i index (x^i, y^{i-1}).
    std::uint64_t rows(int i) const {
        return checked_mul(checked_pow(static_cast<std::uint64_t>(x_size_), i),
                           checked_pow(static_cast<std::uint64_t>(y_size_), i - 1));
    }

    std::span<double> factor(int i) { return factors_[check_step(i)]; }
    std::span<const double> factor(int i) const { return factors_[check_step(i)]; }

    double& at(int i, std::uint64_t x_pref, std::uint64_t y_hist, int y) {
        return factors_[check_step(i)][flat(i, x_pref, y_hist, y)];
    }
    double at(int i, std::uint64_t x_pref, std::uint64_t y_hist, int y) const {
        return factors_[check_step(i)][flat(i, x_pref, y_hist, y)];
    }

    /// p(y^n || x^n): product of the per-step factors.
    double evaluate(std::span<const int> x_seq, std::span<const int> y_seq) const {
        if (static_cast<int>(x_seq.size()) != horizon_ || static_cast<int>(y_seq.size()) != horizon_)
            throw std::invalid_argument("sequence length does not match horizon");
        double p = 1.0;
        std::uint64_t x_pref = 0, y_hist = 0;
        for (int i = 1; i <= horizon_; ++i) {
            const int x = x_seq[static_cast<std::size_t>(i - 1)];
            const int y = y_seq[static_cast<std::size_t>(i - 1)];
            if (x < 0 || x >= x_size_) throw std::domain_error("input symbol out of range");
            if (y < 0 || y >= y_size_) throw std::domain_error("output symbol out of range");
            x_pref = x_pref * static_cast<std::uint64_t>(x_size_) + static_cast<std::uint64_t>(x);
            p *= at(i, x_pref, y_hist, y);
            y_hist = y_hist * static_cast<std::uint64_t>(y_size_) + static_cast<std::uint64_t>(y);
        }
        return p;
    }

    double max_row_deviation() const {
        double dev = 0.0;
        for (int i = 1; i <= horizon_; ++i) {
            const auto& t = factors_[static_cast<std::size_t>(i - 1)];
            const std::uint64_t nrows = rows(i);
            for (std::uint64_t r = 0; r < nrows; ++r) {
                double s = 0.0;
                for (int y = 0; y < y_size_; ++y) s += t[r * static_cast<std::uint64_t>(y_size_) + static_cast<std::uint64_t>(y)];
                const double d = std::abs(s - 1.0);
                if (d > dev) dev = d;
            }
        }
        return dev;
    }

    void normalize_rows() {
        for (int i = 1; i <= horizon_; ++i) {
            auto& t = factors_[static_cast<std::size_t>(i - 1)];
            const std::uint64_t nrows = rows(i);
            for (std::uint64_t r = 0; r < nrows; ++r) {
                double s = 0.0;
                for (int y = 0; y < y_size_; ++y) s += t[r * static_cast<std::uint64_t>(y_size_) + static_cast<std::uint64_t>(y)];
                for (int y = 0; y < y_size_; ++y) {
                    auto& v = t[r * static_cast<std::uint64_t>(y_size_) + static_cast<std::uint64_t>(y)];
                    v = s > 0.0 ? v / s : 1.0 / y_size_;
                }
            }
        }
    }

private:
    std::size_t check_step(int i) const {
        if (i < 1 || i > horizon_) throw std::invalid_argument("step index out of range");
        return static_cast<std::size_t>(i - 1);
    }
    std::uint64_t flat(int i, std::uint64_t x_pref, std::uint64_t y_hist, int y) const {
        const std::uint64_t ycard = checked_pow(static_cast<std::uint64_t>(y_size_), i - 1);
        return (x_pref * ycard + y_hist) * static_cast<std::uint64_t>(y_size_) + static_cast<std::uint64_t>(y);
    }

    int horizon_, x_size_, y_size_;
    std::vector<std::vector<double>> factors_;
};

/// q(x^n | y^n), stored x-major. Rows (fixed y^n) are normalized over x^n;
/// rows of probability-zero outputs hold a uniform placeholder.
class PosteriorTable {
public:
    PosteriorTable(int horizon, int x_size, int y_size)
        : horizon_(horizon), x_size_(x_size), y_size_(y_size),
          x_total_(checked_pow(static_cast<std::uint64_t>(x_size), horizon)),
          y_total_(checked_pow(static_cast<std::uint64_t>(y_size), horizon)),
          data_(checked_mul(x_total_, y_total_), 1.0 / static_cast<double>(checked_pow(static_cast<std::uint64_t>(x_size), horizon))) {}

    int horizon() const { return horizon_; }
    int x_size() const { return x_size_; }
    int y_size() const { return y_size_; }
    std::uint64_t x_count() const { return x_total_; }
    std::uint64_t y_count() const { return y_total_; }

    double& at(std::uint64_t x_idx, std::uint64_t y_idx) { return data_[x_idx * y_total_ + y_idx]; }
    double at(std::uint64_t x_idx, std::uint64_t y_idx) const { return data_[x_idx * y_total_ + y_idx]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    double row_sum(std::uint64_t y_idx) const {
        double s = 0.0;
        for (std::uint64_t x = 0; x < x_total_; ++x) s += data_[x * y_total_ + y_idx];
        return s;
    }

private:
    int horizon_, x_size_, y_size_;
    std::uint64_t x_total_, y_total_;
    std::vector<double> data_;
};

namespace detail {

/// Shared guts of the joint-space sweeps below: walks every (x^n, y^n) pair
/// depth-first in step order x_1, y_1, x_2, y_2, ..., maintaining the prefix
/// indices, the kernel/channel products, and the feedback history z^{i-d}
/// (z_i = fmap[y_i]; empty fmap means identity). Subtrees of zero weight are
/// skipped. Leaf receives (x_idx, y_idx, kernel_product, channel_product).
template <typename Leaf>
void for_each_joint(const CausalKernel& k, const ChannelFactors& ch, std::span<const int> fmap,
                    const Leaf& leaf) {
    const int n = ch.horizon();
    const int X = ch.x_size();
    const int Y = ch.y_size();
    const int Z = k.z_size();
    const int d = k.delay();
    if (k.horizon() != n || k.x_size() != X)
        throw std::invalid_argument("kernel and channel shapes do not match");
    if (fmap.empty()) {
        if (Z != Y) throw std::invalid_argument("identity feedback requires |Z| = |Y|");
    } else {
        if (static_cast<int>(fmap.size()) != Y)
            throw std::invalid_argument("feedback map must define every output symbol");
        for (int v : fmap)
            if (v < 0 || v >= Z) throw std::invalid_argument("feedback map value out of range");
    }

    std::vector<int> y_path(static_cast<std::size_t>(n), 0);
    // rec(i): choose x_i then y_i given prefixes of length i-1.
    auto rec = [&](auto&& self, int i, std::uint64_t xp, std::uint64_t yp, std::uint64_t zp,
                   double rw, double pw) -> void {
        // feedback symbol that becomes visible when stepping into level i
        std::uint64_t z_here = zp;
        if (i > d) {
            const int ysym = y_path[static_cast<std::size_t>(i - d - 1)];
            const int zsym = fmap.empty() ? ysym : fmap[static_cast<std::size_t>(ysym)];
            z_here = zp * static_cast<std::uint64_t>(Z) + static_cast<std::uint64_t>(zsym);
        }
        for (int x = 0; x < X; ++x) {
            const double rv = k.at(i, xp, z_here, x);
            if (rv == 0.0) continue;
            const std::uint64_t xe = xp * static_cast<std::uint64_t>(X) + static_cast<std::uint64_t>(x);
            for (int y = 0; y < Y; ++y) {
                const double pv = ch.at(i, xe, yp, y);
                if (pv == 0.0) continue;
                const std::uint64_t ye = yp * static_cast<std::uint64_t>(Y) + static_cast<std::uint64_t>(y);
                if (i == n) {
                    leaf(xe, ye, rw * rv, pw * pv);
                } else {
                    y_path[static_cast<std::size_t>(i - 1)] = y;
                    self(self, i + 1, xe, ye, z_here, rw * rv, pw * pv);
                }
            }
        }
    };
    rec(rec, 1, 0, 0, 0, 1.0, 1.0);
}

}  // namespace detail

/// Joint p(x^n, y^n) = p(x^n||z^{n-d}) p(y^n||x^n) as a dense table indexed
/// (x_idx * |Y|^n + y_idx). fmap maps output symbols to feedback symbols;
/// empty means identity feedback.
inline std::vector<double> joint(const CausalKernel& k, const ChannelFactors& ch,
                                 std::span<const int> fmap = {}) {
    const std::uint64_t yt = checked_pow(static_cast<std::uint64_t>(ch.y_size()), ch.horizon());
    const std::uint64_t xt = checked_pow(static_cast<std::uint64_t>(ch.x_size()), ch.horizon());
    std::vector<double> out(checked_mul(xt, yt), 0.0);
    detail::for_each_joint(k, ch, fmap, [&](std::uint64_t xi, std::uint64_t yi, double rw, double pw) {
        out[xi * yt + yi] = rw * pw;
    });
    return out;
}

/// Exact posterior of (kernel, channel): q(x^n|y^n) = joint / output marginal,
/// with uniform placeholder rows for probability-zero outputs.
inline PosteriorTable exact_posterior(const CausalKernel& k, const ChannelFactors& ch,
                                      std::span<const int> fmap = {}) {
    PosteriorTable q(ch.horizon(), ch.x_size(), ch.y_size());
    std::fill(q.data().begin(), q.data().end(), 0.0);
    std::vector<double> denom(q.y_count(), 0.0);
    detail::for_each_joint(k, ch, fmap, [&](std::uint64_t xi, std::uint64_t yi, double rw, double pw) {
        const double v = rw * pw;
        q.at(xi, yi) = v;
        denom[yi] += v;
    });
    const double uniform = 1.0 / static_cast<double>(q.x_count());
    for (std::uint64_t y = 0; y < q.y_count(); ++y) {
        if (denom[y] > 0.0) {
            for (std::uint64_t x = 0; x < q.x_count(); ++x) q.at(x, y) /= denom[y];
        } else {
            for (std::uint64_t x = 0; x < q.x_count(); ++x) q.at(x, y) = uniform;
        }
    }
    return q;
}

/// Directed information sum_{x^n,y^n} p(y^n||x^n) r(x^n||z^{n-d})
/// log2[q(x^n|y^n) / r(x^n||z^{n-d})] in bits. Zero-weight terms contribute
/// nothing; a zero q under positive weight drives the result to -infinity.
inline double directed_information(const CausalKernel& k, const ChannelFactors& ch,
                                   const PosteriorTable& q, std::span<const int> fmap = {}) {
    if (q.horizon() != ch.horizon() || q.x_size() != ch.x_size() || q.y_size() != ch.y_size())
        throw std::invalid_argument("posterior shape does not match channel");
    double acc = 0.0;
    detail::for_each_joint(k, ch, fmap, [&](std::uint64_t xi, std::uint64_t yi, double rw, double pw) {
        const double qv = q.at(xi, yi);
        const double w = rw * pw;
        if (w == 0.0) return;
        if (qv == 0.0) {
            acc = -std::numeric_limits<double>::infinity();
            return;
        }
        acc += w * (std::log(qv) - std::log(rw));
    });
    return acc / std::numbers::ln2;
}

}  // namespace dirinfo
