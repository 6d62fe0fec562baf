// estimators.hpp
//
// Assembles per-horizon solver results into finite-state-channel capacity
// bounds. For an FSC with |S| states the optimum over initial states brackets
// the capacity within +-(log2 |S|)/n: the upper bound adds the offset to the
// best initial state's value, and the lower bound re-evaluates the winning
// kernel on every other initial state's channel (paired with that channel's
// exact posterior) before subtracting it. The rate estimator
// (n+1) C_{n+1} - n C_n typically settles long before C_n itself does.

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "dirinfo/baa.hpp"
#include "dirinfo/causal.hpp"
#include "dirinfo/channel.hpp"

namespace dirinfo {

namespace detail {

/// Runs fn(0..count-1) on up to `workers` threads. Callers index results by
/// task id, so the assembly is deterministic regardless of the worker count.
inline void run_parallel(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr error;
    std::mutex error_mu;
    for (std::size_t t = 0; t < nthreads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace detail

struct SandwichResult {
    int n = 0;
    int delay = 1;
    double upper = 0.0;  // best-state value + (log2 |S|)/n
    double value = 0.0;  // C_n estimate: best value over initial states
    double lower = 0.0;  // worst re-paired value - (log2 |S|)/n
    bool converged = false;
    int iterations = 0;  // of the winning state's run
    double seconds = 0.0;
    int best_state = 0;
    std::vector<double> per_state;          // solve value per initial state
    std::vector<IterationRecord> history;   // winning state's trace
};

/// Solves the directed-information optimization for every initial state and
/// forms the capacity bracket. `workers` parallelizes the per-state solves.
inline SandwichResult bound_sandwich(const FscKernel& fsc, int n, int d,
                                     const FeedbackSpec& feedback, double epsilon,
                                     int max_iterations = 10000, int workers = 1) {
    if (n < 1) throw std::domain_error("horizon must be >= 1");
    fsc.validate(1e-9);
    const auto t0 = std::chrono::steady_clock::now();
    const int S = fsc.state_count;

    std::vector<BaaProblem> problems;
    problems.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s)
        problems.push_back(BaaProblem{unroll(fsc, n, s), d, feedback, epsilon, max_iterations});
    std::vector<std::optional<BaaRun>> slots(static_cast<std::size_t>(S));
    detail::run_parallel(static_cast<std::size_t>(S), workers,
                         [&](std::size_t s) { slots[s] = solve(problems[s]); });

    SandwichResult res;
    res.n = n;
    res.delay = d;
    res.per_state.resize(static_cast<std::size_t>(S));
    res.best_state = 0;
    for (int s = 0; s < S; ++s) {
        res.per_state[static_cast<std::size_t>(s)] = slots[static_cast<std::size_t>(s)]->capacity();
        if (res.per_state[static_cast<std::size_t>(s)] > res.per_state[static_cast<std::size_t>(res.best_state)])
            res.best_state = s;
    }
    const BaaRun& best = *slots[static_cast<std::size_t>(res.best_state)];
    res.value = best.capacity();
    res.iterations = best.iterations;
    res.converged = true;
    for (int s = 0; s < S; ++s) res.converged = res.converged && slots[static_cast<std::size_t>(s)]->converged;
    res.history = best.history;

    const double offset = std::log2(static_cast<double>(S)) / n;
    res.upper = res.value + offset;

    // Re-pair the winning kernel with each state's channel and its exact
    // posterior; the worst value lower-bounds what that kernel guarantees.
    const auto fmap = feedback.resolve(fsc.y_size);
    double worst = res.value;
    for (int s = 0; s < S; ++s) {
        const ChannelFactors& chs = problems[static_cast<std::size_t>(s)].channel;
        const PosteriorTable qs = exact_posterior(best.kernel, chs, fmap);
        const double v = directed_information(best.kernel, chs, qs, fmap) / n;
        worst = std::min(worst, v);
    }
    res.lower = worst - offset;

    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

struct CapacityPoint {
    double param = 0.0;  // the swept value: horizon, delay, or cell count
    int n = 0;
    double upper = 0.0;
    double value = 0.0;
    double lower = 0.0;
    std::optional<double> delta;  // rate estimator attached to this row
    bool converged = false;
    int iterations = 0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct CapacityCurve {
    std::vector<CapacityPoint> points;

    const CapacityPoint* find_horizon(int n) const {
        for (const auto& p : points)
            if (p.n == n && !p.failed) return &p;
        return nullptr;
    }
};

/// Delta_n = (n+1) C_{n+1} - n C_n from two solved horizons of one curve.
inline double rate_estimator(const CapacityCurve& curve, int n) {
    const CapacityPoint* a = curve.find_horizon(n);
    const CapacityPoint* b = curve.find_horizon(n + 1);
    if (a == nullptr || b == nullptr || !a->converged || !b->converged)
        throw std::domain_error("rate estimator needs converged horizons n and n+1");
    return (n + 1) * b->value - n * a->value;
}

/// One bound sandwich per horizon in [n_lo, n_hi]; rows for n < n_hi carry
/// the rate estimator (n+1)C_{n+1} - nC_n.
inline CapacityCurve sweep_horizons(const FscKernel& fsc, int n_lo, int n_hi, int d,
                                    const FeedbackSpec& feedback, double epsilon,
                                    int max_iterations = 10000, int workers = 1) {
    if (n_lo < 1 || n_hi < n_lo) throw std::domain_error("horizon range is empty");
    const std::size_t count = static_cast<std::size_t>(n_hi - n_lo + 1);
    CapacityCurve curve;
    curve.points.resize(count);
    detail::run_parallel(count, workers, [&](std::size_t i) {
        const int n = n_lo + static_cast<int>(i);
        auto& pt = curve.points[i];
        pt.param = n;
        pt.n = n;
        try {
            const SandwichResult sw = bound_sandwich(fsc, n, d, feedback, epsilon, max_iterations, 1);
            pt.upper = sw.upper;
            pt.value = sw.value;
            pt.lower = sw.lower;
            pt.converged = sw.converged;
            pt.iterations = sw.iterations;
            pt.seconds = sw.seconds;
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
        }
    });
    for (std::size_t i = 0; i + 1 < count; ++i) {
        auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        if (!a.failed && !b.failed && a.converged && b.converged)
            a.delta = (a.n + 1) * b.value - a.n * a.value;
    }
    return curve;
}

/// One point per (param, channel) pair at fixed horizon n. Each point also
/// solves horizon n-1 so the row can carry the rate estimator
/// n C_n - (n-1) C_{n-1}.
inline CapacityCurve sweep_family(const std::vector<std::pair<double, FscKernel>>& family, int n,
                                  int d, const FeedbackSpec& feedback, double epsilon,
                                  int max_iterations = 10000, int workers = 1) {
    if (family.empty()) throw std::domain_error("parameter range is empty");
    if (n < 1) throw std::domain_error("horizon must be >= 1");
    CapacityCurve curve;
    curve.points.resize(family.size());
    detail::run_parallel(family.size(), workers, [&](std::size_t i) {
        auto& pt = curve.points[i];
        pt.param = family[i].first;
        pt.n = n;
        try {
            const SandwichResult sw =
                bound_sandwich(family[i].second, n, d, feedback, epsilon, max_iterations, 1);
            pt.upper = sw.upper;
            pt.value = sw.value;
            pt.lower = sw.lower;
            pt.converged = sw.converged;
            pt.iterations = sw.iterations;
            pt.seconds = sw.seconds;
            if (n >= 2) {
                const SandwichResult prev =
                    bound_sandwich(family[i].second, n - 1, d, feedback, epsilon, max_iterations, 1);
                if (sw.converged && prev.converged) pt.delta = n * sw.value - (n - 1) * prev.value;
                pt.seconds += prev.seconds;
            }
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
        }
    });
    return curve;
}

/// One point per feedback delay in [d_lo, d_hi] at fixed horizon n.
inline CapacityCurve sweep_delays(const FscKernel& fsc, int d_lo, int d_hi, int n,
                                  const FeedbackSpec& feedback, double epsilon,
                                  int max_iterations = 10000, int workers = 1) {
    if (d_lo < 1 || d_hi < d_lo) throw std::domain_error("delay range is empty");
    CapacityCurve curve;
    const std::size_t count = static_cast<std::size_t>(d_hi - d_lo + 1);
    curve.points.resize(count);
    detail::run_parallel(count, workers, [&](std::size_t i) {
        const int d = d_lo + static_cast<int>(i);
        auto& pt = curve.points[i];
        pt.param = d;
        pt.n = n;
        try {
            const SandwichResult sw = bound_sandwich(fsc, n, d, feedback, epsilon, max_iterations, 1);
            pt.upper = sw.upper;
            pt.value = sw.value;
            pt.lower = sw.lower;
            pt.converged = sw.converged;
            pt.iterations = sw.iterations;
            pt.seconds = sw.seconds;
            if (n >= 2) {
                const SandwichResult prev =
                    bound_sandwich(fsc, n - 1, d, feedback, epsilon, max_iterations, 1);
                if (sw.converged && prev.converged) pt.delta = n * sw.value - (n - 1) * prev.value;
                pt.seconds += prev.seconds;
            }
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
        }
    });
    return curve;
}

/// Trend check used by the sweep summaries: true when the delta column never
/// increases along the curve (failed or delta-less points are skipped).
inline bool deltas_non_increasing(const CapacityCurve& curve, double slack = 1e-9) {
    std::optional<double> prev;
    for (const auto& p : curve.points) {
        if (p.failed || !p.delta) continue;
        if (prev && *p.delta > *prev + slack) return false;
        prev = p.delta;
    }
    return true;
}

}  // namespace dirinfo
