// baa.hpp
//
// Alternating maximization of directed information over causally conditioned
// input kernels, for a fixed channel p(y^n||x^n), feedback delay d >= 1 and
// an optional deterministic feedback reduction z = f(y).
//
// One iteration runs a backward pass that recomputes the per-step kernel
// tables r_n, r_{n-1}, ..., r_1 in closed form (each step folds the already
// updated later steps into its weights), then refreshes the posterior
// q(x^n|y^n) by Bayes' rule, and finally evaluates the lower bound I_L and
// the nested max/sum upper bound I_U whose gap drives the stopping rule.
//
// Two r-update routes exist on purpose. Identity feedback uses the direct
// weight prod_{j>i-d} p_j * prod_{j>i} r_j; a feedback map uses the general
// weight p(y^n||x^n) * prod_{j>i} r_j / S_i, where S_i sums the output-prefix
// probabilities over the fiber of sequences that f maps to the same feedback
// string. With f = identity the two agree up to rounding, and a test holds
// them together.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dirinfo/causal.hpp"
#include "dirinfo/channel.hpp"
#include "dirinfo/seqspace.hpp"

namespace dirinfo {

struct FeedbackSpec {
    enum class Kind { identity, constant, mapped };
    Kind kind = Kind::identity;
    std::optional<FeedbackMap> map{};

    static FeedbackSpec identity() { return {}; }
    static FeedbackSpec constant() { return {Kind::constant, std::nullopt}; }
    static FeedbackSpec mapped(FeedbackMap m) { return {Kind::mapped, std::move(m)}; }

    int z_size(int y_size) const {
        switch (kind) {
            case Kind::identity: return y_size;
            case Kind::constant: return 1;
            case Kind::mapped: return map->z_size();
        }
        return y_size;
    }

    /// Per-symbol map y -> z with the kind folded in.
    std::vector<int> resolve(int y_size) const {
        std::vector<int> f(static_cast<std::size_t>(y_size), 0);
        for (int y = 0; y < y_size; ++y) {
            if (kind == Kind::identity) f[static_cast<std::size_t>(y)] = y;
            else if (kind == Kind::mapped) f[static_cast<std::size_t>(y)] = (*map)(y);
        }
        if (kind == Kind::mapped && map->y_size() != y_size)
            throw std::invalid_argument("feedback map does not cover the output alphabet");
        return f;
    }
};

struct BaaProblem {
    ChannelFactors channel;
    int delay = 1;
    FeedbackSpec feedback{};
    double epsilon = 1e-6;      // stopping threshold on I_U - I_L, bits
    int max_iterations = 10000;

    int horizon() const { return channel.horizon(); }
};

struct IterationRecord {
    double lower;  // I_L, bits per channel use
    double upper;  // I_U, bits per channel use
};

struct BaaRun {
    CausalKernel kernel;       // current r(x_i | x^{i-1}, z^{i-d})
    PosteriorTable posterior;  // current q(x^n | y^n)
    int iterations = 0;
    bool converged = false;
    std::vector<IterationRecord> history;

    /// Final C_n estimate: the last lower bound, bits per channel use.
    double capacity() const {
        if (history.empty()) throw std::logic_error("run has no iterations");
        return history.back().lower;
    }
    double gap() const {
        if (history.empty()) throw std::logic_error("run has no iterations");
        return history.back().upper - history.back().lower;
    }
};

class BaaEngine {
public:
    explicit BaaEngine(const BaaProblem& problem)
        : prob_(problem), ch_(problem.channel), n_(ch_.horizon()), x_(ch_.x_size()),
          y_(ch_.y_size()), d_(problem.delay), kind_(problem.feedback.kind) {
        if (d_ < 1) throw std::domain_error("feedback delay must be >= 1");
        if (!(problem.epsilon > 0.0)) throw std::domain_error("epsilon must be positive");
        if (problem.max_iterations < 1) throw std::domain_error("iteration cap must be >= 1");
        z_ = problem.feedback.z_size(y_);
        fmap_ = problem.feedback.resolve(y_);

        xpow_.resize(static_cast<std::size_t>(n_) + 1);
        ypow_.resize(static_cast<std::size_t>(n_) + 1);
        zpow_.resize(static_cast<std::size_t>(n_) + 1);
        xpow_[0] = ypow_[0] = zpow_[0] = 1;
        for (int i = 1; i <= n_; ++i) {
            xpow_[static_cast<std::size_t>(i)] = checked_mul(xpow_[static_cast<std::size_t>(i - 1)], static_cast<std::uint64_t>(x_));
            ypow_[static_cast<std::size_t>(i)] = checked_mul(ypow_[static_cast<std::size_t>(i - 1)], static_cast<std::uint64_t>(y_));
            zpow_[static_cast<std::size_t>(i)] = checked_mul(zpow_[static_cast<std::size_t>(i - 1)], static_cast<std::uint64_t>(z_));
        }
        zc_.resize(static_cast<std::size_t>(n_) + 1);
        for (int i = 1; i <= n_; ++i) zc_[static_cast<std::size_t>(i)] = zpow_[static_cast<std::size_t>(z_len(i))];
        ypath_.assign(static_cast<std::size_t>(n_), 0);

        build_upper_schedule();
        if (kind_ == FeedbackSpec::Kind::mapped) build_fiber_denominators();
    }

    const BaaProblem& problem() const { return prob_; }

    /// Fresh run: uniform posterior, uniform kernel, empty history.
    BaaRun init() const {
        return BaaRun{CausalKernel(n_, d_, x_, z_), PosteriorTable(n_, x_, y_), 0, false, {}};
    }

    /// Backward pass: recompute r_n down to r_1 from the current posterior.
    ///
    /// Each step's closed form sums, over all completions of its history, the
    /// weight of the already-updated later steps times (log q minus their log
    /// factors). That sum telescopes through the suffix aggregate
    ///   G_i(x^i, y^i) = sum over completions of prod_{j>i} p_j r_j *
    ///                   (log q - sum_{j>i} log r_j)
    /// with G_n = log q and G_{i-1} = sum_{x_i,y_i} p_i r_i (G_i - log r_i),
    /// so the whole pass costs one level-by-level sweep instead of one full
    /// sweep per step.
    void update_r_backward(BaaRun& run) {
        check_shapes(run);
        const auto qdata = run.posterior.data();
        g_.resize(qdata.size());
        for (std::size_t k = 0; k < qdata.size(); ++k)
            g_[k] = qdata[k] > 0.0 ? std::log(qdata[k]) : -std::numeric_limits<double>::infinity();
        if (logr_.empty()) {
            logr_.resize(static_cast<std::size_t>(n_) + 1);
            for (int i = 1; i <= n_; ++i)
                logr_[static_cast<std::size_t>(i)].resize(run.kernel.table(i).size());
        }
        for (int i = n_; i >= 1; --i) {
            assemble_step(run.kernel, i);
            normalize_step(run.kernel, i);
            if (i > 1) shrink_suffix(run.kernel, i);
        }
    }

    /// Bayes step: q(x^n|y^n) = r(x^n||z^{n-d}) p(y^n||x^n) / marginal.
    void update_q(BaaRun& run) {
        check_shapes(run);
        auto q = run.posterior.data();
        std::fill(q.begin(), q.end(), 0.0);
        denom_.assign(ypow_[static_cast<std::size_t>(n_)], 0.0);
        const std::uint64_t yt = ypow_[static_cast<std::size_t>(n_)];
        sweep_weighted(run.kernel, [&](std::uint64_t xe, std::uint64_t ye, double w) {
            q[xe * yt + ye] = w;
            denom_[ye] += w;
        });
        const double uniform = 1.0 / static_cast<double>(xpow_[static_cast<std::size_t>(n_)]);
        const std::uint64_t xt = xpow_[static_cast<std::size_t>(n_)];
        for (std::uint64_t xi = 0; xi < xt; ++xi) {
            double* row = q.data() + xi * yt;
            for (std::uint64_t yi = 0; yi < yt; ++yi)
                row[yi] = denom_[yi] > 0.0 ? row[yi] / denom_[yi] : uniform;
        }
    }

    /// I_L in bits per channel use for the run's current (r, q) pair.
    double lower_bound(const BaaRun& run) {
        check_shapes(run);
        const std::uint64_t yt = ypow_[static_cast<std::size_t>(n_)];
        const auto q = run.posterior.data();
        double acc = 0.0;
        bool dead = false;
        sweep_weighted_log(run.kernel, [&](std::uint64_t xe, std::uint64_t ye, double w, double logr_sum) {
            const double qv = q[xe * yt + ye];
            if (qv <= 0.0) {
                dead = true;
                return;
            }
            acc += w * (std::log(qv) - logr_sum);
        });
        if (dead) return -std::numeric_limits<double>::infinity();
        return acc / std::numbers::ln2 / n_;
    }

    /// Nested max/sum upper bound I_U in bits per channel use; needs only r.
    /// Can return +infinity when r gives zero mass to an output the channel
    /// can produce; that cannot happen to iterates of solve().
    double upper_bound(const BaaRun& run) {
        check_shapes(run);
        marginal_.assign(ypow_[static_cast<std::size_t>(n_)], 0.0);
        sweep_weighted(run.kernel, [&](std::uint64_t, std::uint64_t ye, double w) { marginal_[ye] += w; });

        upper_table_.assign(upper_size_, 0.0);
        sweep_channel_only([&](std::uint64_t, std::uint64_t ye, std::uint64_t didx, double pw) {
            if (marginal_[ye] <= 0.0)
                upper_table_[didx] = std::numeric_limits<double>::infinity();
            else
                upper_table_[didx] += pw * std::log(pw / marginal_[ye]);
        });
        return alternating_reduce(upper_table_, upper_schedule_) / std::numbers::ln2 / n_;
    }

    /// Full alternating-maximization loop; deterministic for a given problem.
    BaaRun solve() {
        BaaRun run = init();
        for (int k = 1; k <= prob_.max_iterations; ++k) {
            update_r_backward(run);
            update_q(run);
            const double il = lower_bound(run);
            const double iu = upper_bound(run);
            run.history.push_back({il, iu});
            run.iterations = k;
            if (iu - il < prob_.epsilon) {
                run.converged = true;
                break;
            }
        }
        return run;
    }

private:
    int z_len(int i) const { return i - d_ > 0 ? i - d_ : 0; }

    void check_shapes(const BaaRun& run) const {
        if (run.kernel.horizon() != n_ || run.kernel.x_size() != x_ || run.kernel.z_size() != z_ ||
            run.kernel.delay() != d_)
            throw std::invalid_argument("run kernel does not match problem shape");
        if (run.posterior.horizon() != n_ || run.posterior.x_size() != x_ || run.posterior.y_size() != y_)
            throw std::invalid_argument("run posterior does not match problem shape");
    }

    // Fills acc_ with the step-i exponents, per kernel slot
    // (x^{i-1}, z^{i-d}, x_i):
    //   identity feedback:  A = sum_{y between the feedback cut and i}
    //                           [prod_{j in (i-d, i]} p_j] * G_i(x^i, y^i)
    //   feedback map:       A = sum over the fiber of y^i
    //                           [prod_{j <= i} p_j] * G_i / S_{i-d}
    // Slots no completion reaches keep 0, which the softmax turns uniform;
    // they carry zero forward weight.
    void assemble_step(const CausalKernel& kernel, int i) {
        acc_.assign(kernel.table(i).size(), 0.0);
        const bool plain = kind_ == FeedbackSpec::Kind::identity;
        const int m = z_len(i);
        const double* g = g_.data();
        const std::uint64_t ylvl = ypow_[static_cast<std::size_t>(i)];

        auto rec = [&](auto&& self, int lvl, std::uint64_t xp, std::uint64_t yp, std::uint64_t zrun,
                       double pw) -> void {
            const double* ft = ch_.factor(lvl).data();
            const std::uint64_t yhc = ypow_[static_cast<std::size_t>(lvl - 1)];
            const bool include_p = plain ? lvl > i - d_ : true;
            for (int x = 0; x < x_; ++x) {
                const std::uint64_t xe = xp * static_cast<std::uint64_t>(x_) + static_cast<std::uint64_t>(x);
                const double* frow = ft + (xe * yhc + yp) * static_cast<std::uint64_t>(y_);
                if (lvl == i) {
                    const std::uint64_t slot = (xp * zc_[static_cast<std::size_t>(i)] + zrun) *
                                                   static_cast<std::uint64_t>(x_) +
                                               static_cast<std::uint64_t>(x);
                    double a = 0.0;
                    for (int y = 0; y < y_; ++y) {
                        const double pv = frow[y];
                        if (pv == 0.0) continue;
                        a += pw * pv * g[xe * ylvl + yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y)];
                    }
                    acc_[slot] += a;
                    continue;
                }
                for (int y = 0; y < y_; ++y) {
                    const double pv = frow[y];
                    double wy = pw;
                    if (include_p) {
                        if (pv == 0.0) continue;
                        wy *= pv;
                    }
                    const std::uint64_t ye = yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y);
                    const std::uint64_t znext =
                        lvl <= i - d_ ? zrun * static_cast<std::uint64_t>(z_) +
                                            static_cast<std::uint64_t>(fmap_[static_cast<std::size_t>(y)])
                                      : zrun;
                    self(self, lvl + 1, xe, ye, znext, wy);
                }
            }
        };
        rec(rec, 1, 0, 0, 0, 1.0);

        // the feedback-map exponent divides by the fiber mass of the visible
        // feedback string; a zero mass means the whole group accumulated zero
        if (kind_ == FeedbackSpec::Kind::mapped && m > 0) {
            const auto& sden = fiber_den_[static_cast<std::size_t>(m)];
            const std::uint64_t zcard = zc_[static_cast<std::size_t>(i)];
            const std::uint64_t xh = xpow_[static_cast<std::size_t>(i - 1)];
            const std::uint64_t cut = xpow_[static_cast<std::size_t>(d_ - 1)];
            for (std::uint64_t xhist = 0; xhist < xh; ++xhist) {
                const std::uint64_t xpre = xhist / cut;  // x^{i-d}
                for (std::uint64_t zi = 0; zi < zcard; ++zi) {
                    const double s = sden[xpre * zpow_[static_cast<std::size_t>(m)] + zi];
                    if (s <= 0.0) continue;
                    double* row = acc_.data() + (xhist * zcard + zi) * static_cast<std::uint64_t>(x_);
                    for (int x = 0; x < x_; ++x) row[x] /= s;
                }
            }
        }
    }

    // Row softmax of acc_ over x_i into r_i and log r_i. All-(-inf) rows
    // become uniform; they describe histories of zero forward weight.
    void normalize_step(CausalKernel& kernel, int i) {
        auto rtab = kernel.table(i);
        auto& ltab = logr_[static_cast<std::size_t>(i)];
        const std::uint64_t nrows = rtab.size() / static_cast<std::uint64_t>(x_);
        for (std::uint64_t r = 0; r < nrows; ++r) {
            double* arow = acc_.data() + r * static_cast<std::uint64_t>(x_);
            double mx = -std::numeric_limits<double>::infinity();
            for (int x = 0; x < x_; ++x) mx = std::max(mx, arow[x]);
            double* rrow = rtab.data() + r * static_cast<std::uint64_t>(x_);
            double* lrow = ltab.data() + r * static_cast<std::uint64_t>(x_);
            if (mx == -std::numeric_limits<double>::infinity()) {
                for (int x = 0; x < x_; ++x) {
                    rrow[x] = 1.0 / x_;
                    lrow[x] = std::log(1.0 / x_);
                }
                continue;
            }
            double se = 0.0;
            for (int x = 0; x < x_; ++x) se += std::exp(arow[x] - mx);
            const double lse = std::log(se);
            for (int x = 0; x < x_; ++x) {
                lrow[x] = arow[x] - mx - lse;
                rrow[x] = std::exp(lrow[x]);
            }
        }
    }

    // G_{i-1}(x^{i-1}, y^{i-1}) = sum_{x_i} r_i (sum_{y_i} p_i G_i - log r_i),
    // using the step-i tables written moments ago.
    void shrink_suffix(const CausalKernel& kernel, int i) {
        gnext_.resize(xpow_[static_cast<std::size_t>(i - 1)] * ypow_[static_cast<std::size_t>(i - 1)]);
        const double* rt = kernel.table(i).data();
        const double* lt = logr_[static_cast<std::size_t>(i)].data();
        const double* ft = ch_.factor(i).data();
        const double* g = g_.data();
        const std::uint64_t ylvl = ypow_[static_cast<std::size_t>(i)];
        const std::uint64_t yh = ypow_[static_cast<std::size_t>(i - 1)];

        auto rec = [&](auto&& self, int lvl, std::uint64_t xp, std::uint64_t yp,
                       std::uint64_t zp) -> void {
            if (lvl == i) {
                std::uint64_t z_here = zp;
                if (i > d_) {
                    const int ysym = ypath_[static_cast<std::size_t>(i - d_ - 1)];
                    z_here = zp * static_cast<std::uint64_t>(z_) +
                             static_cast<std::uint64_t>(fmap_[static_cast<std::size_t>(ysym)]);
                }
                double total = 0.0;
                for (int x = 0; x < x_; ++x) {
                    const std::uint64_t rk = (xp * zc_[static_cast<std::size_t>(i)] + z_here) *
                                                 static_cast<std::uint64_t>(x_) +
                                             static_cast<std::uint64_t>(x);
                    const double rv = rt[rk];
                    if (rv == 0.0) continue;
                    const std::uint64_t xe = xp * static_cast<std::uint64_t>(x_) + static_cast<std::uint64_t>(x);
                    const double* frow = ft + (xe * yh + yp) * static_cast<std::uint64_t>(y_);
                    double inner = 0.0;
                    for (int y = 0; y < y_; ++y) {
                        const double pv = frow[y];
                        if (pv == 0.0) continue;
                        inner += pv * g[xe * ylvl + yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y)];
                    }
                    total += rv * (inner - lt[rk]);
                }
                gnext_[xp * yh + yp] = total;
                return;
            }
            std::uint64_t z_here = zp;
            if (lvl > d_) {
                const int ysym = ypath_[static_cast<std::size_t>(lvl - d_ - 1)];
                z_here = zp * static_cast<std::uint64_t>(z_) +
                         static_cast<std::uint64_t>(fmap_[static_cast<std::size_t>(ysym)]);
            }
            for (int x = 0; x < x_; ++x) {
                const std::uint64_t xe = xp * static_cast<std::uint64_t>(x_) + static_cast<std::uint64_t>(x);
                for (int y = 0; y < y_; ++y) {
                    const std::uint64_t ye = yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y);
                    ypath_[static_cast<std::size_t>(lvl - 1)] = y;
                    self(self, lvl + 1, xe, ye, z_here);
                }
            }
        };
        rec(rec, 1, 0, 0, 0);
        std::swap(g_, gnext_);
    }

    /// Walks every (x^n, y^n) of positive kernel-times-channel weight; leaf
    /// receives (x index, y index, r*p product).
    template <typename Leaf>
    void sweep_weighted(const CausalKernel& kernel, const Leaf& leaf) {
        auto rec = [&](auto&& self, int lvl, std::uint64_t xp, std::uint64_t yp, std::uint64_t zp,
                       double w) -> void {
            std::uint64_t z_here = zp;
            if (lvl > d_) {
                const int ysym = ypath_[static_cast<std::size_t>(lvl - d_ - 1)];
                z_here = zp * static_cast<std::uint64_t>(z_) +
                         static_cast<std::uint64_t>(fmap_[static_cast<std::size_t>(ysym)]);
            }
            const double* rt = kernel.table(lvl).data();
            const double* ft = ch_.factor(lvl).data();
            const std::uint64_t yhc = ypow_[static_cast<std::size_t>(lvl - 1)];
            for (int x = 0; x < x_; ++x) {
                const double rv = rt[(xp * zc_[static_cast<std::size_t>(lvl)] + z_here) * static_cast<std::uint64_t>(x_) +
                                     static_cast<std::uint64_t>(x)];
                if (rv == 0.0) continue;
                const std::uint64_t xe = xp * static_cast<std::uint64_t>(x_) + static_cast<std::uint64_t>(x);
                const double* frow = ft + (xe * yhc + yp) * static_cast<std::uint64_t>(y_);
                for (int y = 0; y < y_; ++y) {
                    const double pv = frow[y];
                    if (pv == 0.0) continue;
                    const std::uint64_t ye = yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y);
                    if (lvl == n_) {
                        leaf(xe, ye, w * rv * pv);
                    } else {
                        ypath_[static_cast<std::size_t>(lvl - 1)] = y;
                        self(self, lvl + 1, xe, ye, z_here, w * rv * pv);
                    }
                }
            }
        };
        rec(rec, 1, 0, 0, 0, 1.0);
    }

    /// Same walk, but also hands the leaf sum_j log r_j along the path.
    template <typename Leaf>
    void sweep_weighted_log(const CausalKernel& kernel, const Leaf& leaf) {
        auto rec = [&](auto&& self, int lvl, std::uint64_t xp, std::uint64_t yp, std::uint64_t zp,
                       double w, double lsum) -> void {
            std::uint64_t z_here = zp;
            if (lvl > d_) {
                const int ysym = ypath_[static_cast<std::size_t>(lvl - d_ - 1)];
                z_here = zp * static_cast<std::uint64_t>(z_) +
                         static_cast<std::uint64_t>(fmap_[static_cast<std::size_t>(ysym)]);
            }
            const double* rt = kernel.table(lvl).data();
            const double* ft = ch_.factor(lvl).data();
            const std::uint64_t yhc = ypow_[static_cast<std::size_t>(lvl - 1)];
            for (int x = 0; x < x_; ++x) {
                const double rv = rt[(xp * zc_[static_cast<std::size_t>(lvl)] + z_here) * static_cast<std::uint64_t>(x_) +
                                     static_cast<std::uint64_t>(x)];
                if (rv == 0.0) continue;
                const double lnext = lsum + std::log(rv);
                const std::uint64_t xe = xp * static_cast<std::uint64_t>(x_) + static_cast<std::uint64_t>(x);
                const double* frow = ft + (xe * yhc + yp) * static_cast<std::uint64_t>(y_);
                for (int y = 0; y < y_; ++y) {
                    const double pv = frow[y];
                    if (pv == 0.0) continue;
                    const std::uint64_t ye = yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y);
                    if (lvl == n_) {
                        leaf(xe, ye, w * rv * pv, lnext);
                    } else {
                        ypath_[static_cast<std::size_t>(lvl - 1)] = y;
                        self(self, lvl + 1, xe, ye, z_here, w * rv * pv, lnext);
                    }
                }
            }
        };
        rec(rec, 1, 0, 0, 0, 1.0, 0.0);
    }

    /// Walks every (x^n, y^n) with positive channel probability, maintaining
    /// the flat index into the interleaved upper-bound table.
    template <typename Leaf>
    void sweep_channel_only(const Leaf& leaf) {
        auto rec = [&](auto&& self, int lvl, std::uint64_t xp, std::uint64_t yp, std::uint64_t didx,
                       double pw) -> void {
            const double* ft = ch_.factor(lvl).data();
            const std::uint64_t yhc = ypow_[static_cast<std::size_t>(lvl - 1)];
            for (int x = 0; x < x_; ++x) {
                const std::uint64_t xe = xp * static_cast<std::uint64_t>(x_) + static_cast<std::uint64_t>(x);
                const std::uint64_t dx = didx + static_cast<std::uint64_t>(x) * xstride_[static_cast<std::size_t>(lvl)];
                const double* frow = ft + (xe * yhc + yp) * static_cast<std::uint64_t>(y_);
                for (int y = 0; y < y_; ++y) {
                    const double pv = frow[y];
                    if (pv == 0.0) continue;
                    const std::uint64_t ye = yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y);
                    std::uint64_t dxy = dx;
                    if (lvl <= n_ - d_)
                        dxy += static_cast<std::uint64_t>(fmap_[static_cast<std::size_t>(y)]) *
                               zstride_[static_cast<std::size_t>(lvl)];
                    if (lvl == n_) {
                        leaf(xe, ye, dxy, pw * pv);
                    } else {
                        self(self, lvl + 1, xe, ye, dxy, pw * pv);
                    }
                }
            }
        };
        rec(rec, 1, 0, 0, 0, 1.0);
    }

    // Axis order of the upper-bound table, outermost first:
    //   x_1 .. x_deff, then (z_1, x_{deff+1}), (z_2, x_{deff+2}), ...
    // folded as max over each x axis and sum over each z axis.
    void build_upper_schedule() {
        const int deff = std::min(d_, n_);
        upper_schedule_.clear();
        std::vector<std::pair<char, int>> axes;  // ('x', step) or ('z', k)
        for (int j = 1; j <= deff; ++j) axes.push_back({'x', j});
        for (int k = 1; k <= n_ - deff; ++k) {
            axes.push_back({'z', k});
            axes.push_back({'x', deff + k});
        }
        xstride_.assign(static_cast<std::size_t>(n_) + 1, 0);
        zstride_.assign(static_cast<std::size_t>(n_) + 1, 0);
        std::uint64_t stride = 1;
        for (std::size_t a = axes.size(); a-- > 0;) {
            const auto [which, idx] = axes[a];
            if (which == 'x') {
                xstride_[static_cast<std::size_t>(idx)] = stride;
                stride = checked_mul(stride, static_cast<std::uint64_t>(x_));
            } else {
                zstride_[static_cast<std::size_t>(idx)] = stride;
                stride = checked_mul(stride, static_cast<std::uint64_t>(z_));
            }
        }
        upper_size_ = stride;
        for (const auto& [which, idx] : axes)
            upper_schedule_.push_back(which == 'x' ? ReduceAxis{x_, Reduce::max}
                                                   : ReduceAxis{z_, Reduce::sum});
    }

    // S_m(x^m, z^m) = sum over the fiber {y^m : f(y^m) = z^m} of the
    // output-prefix probability prod_{j<=m} p_j. Depends only on the channel,
    // so it is built once. Used by the feedback-map r-update denominators.
    void build_fiber_denominators() {
        const int mmax = n_ - std::min(d_, n_);
        fiber_den_.resize(static_cast<std::size_t>(mmax) + 1);
        for (int m = 1; m <= mmax; ++m)
            fiber_den_[static_cast<std::size_t>(m)].assign(
                checked_mul(xpow_[static_cast<std::size_t>(m)], zpow_[static_cast<std::size_t>(m)]), 0.0);
        if (mmax == 0) return;
        auto rec = [&](auto&& self, int lvl, std::uint64_t xp, std::uint64_t yp, std::uint64_t zp,
                       double pw) -> void {
            const double* ft = ch_.factor(lvl).data();
            const std::uint64_t yhc = ypow_[static_cast<std::size_t>(lvl - 1)];
            for (int x = 0; x < x_; ++x) {
                const std::uint64_t xe = xp * static_cast<std::uint64_t>(x_) + static_cast<std::uint64_t>(x);
                const double* frow = ft + (xe * yhc + yp) * static_cast<std::uint64_t>(y_);
                for (int y = 0; y < y_; ++y) {
                    const double pv = frow[y];
                    if (pv == 0.0) continue;
                    const std::uint64_t ye = yp * static_cast<std::uint64_t>(y_) + static_cast<std::uint64_t>(y);
                    const std::uint64_t ze = zp * static_cast<std::uint64_t>(z_) +
                                             static_cast<std::uint64_t>(fmap_[static_cast<std::size_t>(y)]);
                    fiber_den_[static_cast<std::size_t>(lvl)][xe * zpow_[static_cast<std::size_t>(lvl)] + ze] += pw * pv;
                    if (lvl < mmax) self(self, lvl + 1, xe, ye, ze, pw * pv);
                }
            }
        };
        rec(rec, 1, 0, 0, 0, 1.0);
    }

    const BaaProblem& prob_;
    const ChannelFactors& ch_;
    int n_, x_, y_, d_, z_ = 0;
    FeedbackSpec::Kind kind_;
    std::vector<int> fmap_;
    std::vector<std::uint64_t> xpow_, ypow_, zpow_, zc_;
    std::vector<int> ypath_;

    std::vector<double> g_, gnext_, acc_, denom_, marginal_, upper_table_;
    std::vector<std::vector<double>> logr_;
    std::vector<std::vector<double>> fiber_den_;
    std::vector<ReduceAxis> upper_schedule_;
    std::vector<std::uint64_t> xstride_, zstride_;
    std::uint64_t upper_size_ = 0;
};

inline BaaRun init(const BaaProblem& problem) { return BaaEngine(problem).init(); }

inline void update_r_backward(const BaaProblem& problem, BaaRun& run) {
    BaaEngine(problem).update_r_backward(run);
}

inline void update_q(const BaaProblem& problem, BaaRun& run) { BaaEngine(problem).update_q(run); }

inline double lower_bound(const BaaProblem& problem, const BaaRun& run) {
    return BaaEngine(problem).lower_bound(run);
}

inline double upper_bound(const BaaProblem& problem, const BaaRun& run) {
    return BaaEngine(problem).upper_bound(run);
}

inline BaaRun solve(const BaaProblem& problem) { return BaaEngine(problem).solve(); }

struct ClassicBaaResult {
    double capacity = 0.0;  // bits per letter
    std::vector<double> input;
    int iterations = 0;
    bool converged = false;
};

/// Classical single-letter Blahut-Arimoto on a row-stochastic channel table
/// w[x*y_size + y]. Serves as the reduction oracle for n = 1 and d = n.
inline ClassicBaaResult classic_baa(std::span<const double> w, int x_size, int y_size,
                                    double epsilon = 1e-6, int max_iterations = 10000) {
    if (w.size() != static_cast<std::size_t>(x_size) * static_cast<std::size_t>(y_size))
        throw std::invalid_argument("channel table size does not match alphabets");
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> r(static_cast<std::size_t>(x_size), 1.0 / x_size);
    std::vector<double> q(w.size(), 1.0 / x_size);
    std::vector<double> marg(static_cast<std::size_t>(y_size));
    ClassicBaaResult res;
    for (int k = 1; k <= max_iterations; ++k) {
        // r(x) proportional to exp(sum_y w(y|x) log q(x|y))
        double mx = neg_inf;
        std::vector<double> a(static_cast<std::size_t>(x_size), 0.0);
        for (int x = 0; x < x_size; ++x) {
            double s = 0.0;
            for (int y = 0; y < y_size; ++y) {
                const double wv = w[static_cast<std::size_t>(x * y_size + y)];
                if (wv == 0.0) continue;
                const double qv = q[static_cast<std::size_t>(x * y_size + y)];
                s += qv > 0.0 ? wv * std::log(qv) : neg_inf;
            }
            a[static_cast<std::size_t>(x)] = s;
            mx = std::max(mx, s);
        }
        double se = 0.0;
        for (int x = 0; x < x_size; ++x) se += std::exp(a[static_cast<std::size_t>(x)] - mx);
        for (int x = 0; x < x_size; ++x) r[static_cast<std::size_t>(x)] = std::exp(a[static_cast<std::size_t>(x)] - mx) / se;

        std::fill(marg.begin(), marg.end(), 0.0);
        for (int x = 0; x < x_size; ++x)
            for (int y = 0; y < y_size; ++y)
                marg[static_cast<std::size_t>(y)] += r[static_cast<std::size_t>(x)] * w[static_cast<std::size_t>(x * y_size + y)];
        for (int x = 0; x < x_size; ++x)
            for (int y = 0; y < y_size; ++y) {
                const auto k2 = static_cast<std::size_t>(x * y_size + y);
                q[k2] = marg[static_cast<std::size_t>(y)] > 0.0
                            ? r[static_cast<std::size_t>(x)] * w[k2] / marg[static_cast<std::size_t>(y)]
                            : 1.0 / x_size;
            }

        double il = 0.0;
        for (int x = 0; x < x_size; ++x) {
            if (r[static_cast<std::size_t>(x)] == 0.0) continue;
            for (int y = 0; y < y_size; ++y) {
                const auto k2 = static_cast<std::size_t>(x * y_size + y);
                if (w[k2] == 0.0) continue;
                il += r[static_cast<std::size_t>(x)] * w[k2] * std::log(q[k2] / r[static_cast<std::size_t>(x)]);
            }
        }
        double iu = neg_inf;
        for (int x = 0; x < x_size; ++x) {
            double s = 0.0;
            for (int y = 0; y < y_size; ++y) {
                const auto k2 = static_cast<std::size_t>(x * y_size + y);
                if (w[k2] == 0.0) continue;
                s += marg[static_cast<std::size_t>(y)] > 0.0
                         ? w[k2] * std::log(w[k2] / marg[static_cast<std::size_t>(y)])
                         : std::numeric_limits<double>::infinity();
            }
            iu = std::max(iu, s);
        }
        res.capacity = il / std::numbers::ln2;
        res.iterations = k;
        if ((iu - il) / std::numbers::ln2 < epsilon) {
            res.converged = true;
            break;
        }
    }
    res.input = std::move(r);
    return res;
}

}  // namespace dirinfo
