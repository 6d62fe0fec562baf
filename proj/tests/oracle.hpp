// Test-only brute-force oracles. Everything here evaluates directed
// information by plain enumeration over decoded sequences, independent of the
// sweep machinery in the library, so it can sit on the other side of an
// assertion from it.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "dirinfo/baa.hpp"
#include "dirinfo/causal.hpp"
#include "dirinfo/channel.hpp"
#include "dirinfo/seqspace.hpp"

namespace oracle {

inline dirinfo::CausalKernel random_kernel(std::mt19937& rng, int n, int d, int x_size, int z_size) {
    dirinfo::CausalKernel k(n, d, x_size, z_size);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 1; i <= n; ++i)
        for (auto& v : k.table(i)) v = u(rng);
    k.normalize_rows();
    return k;
}

inline dirinfo::ChannelFactors random_channel(std::mt19937& rng, int n, int x_size, int y_size) {
    dirinfo::ChannelFactors ch(n, x_size, y_size);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int i = 1; i <= n; ++i)
        for (auto& v : ch.factor(i)) v = u(rng);
    ch.normalize_rows();
    return ch;
}

inline dirinfo::FscKernel random_fsc(std::mt19937& rng, int x_size, int y_size, int states) {
    dirinfo::FscKernel fsc(x_size, y_size, states);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (auto& v : fsc.t) v = u(rng);
    for (int x = 0; x < x_size; ++x)
        for (int s = 0; s < states; ++s) {
            double sum = 0.0;
            for (int y = 0; y < y_size; ++y)
                for (int s2 = 0; s2 < states; ++s2) sum += fsc.at(x, s, y, s2);
            for (int y = 0; y < y_size; ++y)
                for (int s2 = 0; s2 < states; ++s2) fsc.at(x, s, y, s2) /= sum;
        }
    return fsc;
}

/// p(y^n) under (kernel, channel): the output marginal by enumeration.
inline std::vector<double> output_marginal(const dirinfo::CausalKernel& k,
                                           const dirinfo::ChannelFactors& ch,
                                           std::span<const int> fmap = {}) {
    const auto j = dirinfo::joint(k, ch, fmap);
    const std::uint64_t xt = dirinfo::checked_pow(static_cast<std::uint64_t>(ch.x_size()), ch.horizon());
    const std::uint64_t yt = dirinfo::checked_pow(static_cast<std::uint64_t>(ch.y_size()), ch.horizon());
    std::vector<double> m(yt, 0.0);
    for (std::uint64_t x = 0; x < xt; ++x)
        for (std::uint64_t y = 0; y < yt; ++y) m[y] += j[x * yt + y];
    return m;
}

/// Directed information in bits from the definition:
/// sum_{x^n,y^n} p(x^n,y^n) log2[ p(y^n||x^n) / p(y^n) ].
inline double definitional_di(const dirinfo::CausalKernel& k, const dirinfo::ChannelFactors& ch,
                              std::span<const int> fmap = {}) {
    const int n = ch.horizon();
    const dirinfo::SequenceCodec xs = dirinfo::SequenceCodec::uniform(ch.x_size(), n);
    const dirinfo::SequenceCodec ys = dirinfo::SequenceCodec::uniform(ch.y_size(), n);
    const auto j = dirinfo::joint(k, ch, fmap);
    const auto m = output_marginal(k, ch, fmap);
    double acc = 0.0;
    for (std::uint64_t xi = 0; xi < xs.size(); ++xi) {
        const auto xseq = xs.decode(xi);
        for (std::uint64_t yi = 0; yi < ys.size(); ++yi) {
            const double w = j[xi * ys.size() + yi];
            if (w == 0.0) continue;
            const auto yseq = ys.decode(yi);
            acc += w * std::log2(ch.evaluate(xseq, yseq) / m[yi]);
        }
    }
    return acc;
}

/// The alternating-maximization objective on explicit full tables:
/// I(r, q) = sum p(y^n||x^n) r_full(x^n, z-part) log2[q / r_full], in bits.
/// r_full is indexed (x_idx * Z^{n-d} + z_idx); q is a PosteriorTable.
inline double objective_on_tables(std::span<const double> r_full,
                                  const dirinfo::PosteriorTable& q,
                                  const dirinfo::ChannelFactors& ch, int delay,
                                  std::span<const int> fmap = {}) {
    const int n = ch.horizon();
    const int zlen = std::max(n - delay, 0);
    const int zsz = fmap.empty() ? ch.y_size() : 1 + *std::max_element(fmap.begin(), fmap.end());
    const dirinfo::SequenceCodec xs = dirinfo::SequenceCodec::uniform(ch.x_size(), n);
    const dirinfo::SequenceCodec ys = dirinfo::SequenceCodec::uniform(ch.y_size(), n);
    const std::uint64_t zt = dirinfo::checked_pow(static_cast<std::uint64_t>(zsz), zlen);
    double acc = 0.0;
    for (std::uint64_t xi = 0; xi < xs.size(); ++xi) {
        const auto xseq = xs.decode(xi);
        for (std::uint64_t yi = 0; yi < ys.size(); ++yi) {
            const auto yseq = ys.decode(yi);
            std::uint64_t zi = 0;
            for (int t = 0; t < zlen; ++t) {
                const int z = fmap.empty() ? yseq[static_cast<std::size_t>(t)]
                                           : fmap[static_cast<std::size_t>(yseq[static_cast<std::size_t>(t)])];
                zi = zi * static_cast<std::uint64_t>(zsz) + static_cast<std::uint64_t>(z);
            }
            const double rv = r_full[xi * zt + zi];
            if (rv == 0.0) continue;
            const double pv = ch.evaluate(xseq, yseq);
            if (pv == 0.0) continue;
            acc += pv * rv * std::log2(q.at(xi, yi) / rv);
        }
    }
    return acc;
}

/// Expands a kernel into the full table r(x^n || z^{n-d}) used above.
inline std::vector<double> full_kernel_table(const dirinfo::CausalKernel& k) {
    const int n = k.horizon();
    const int zlen = std::max(n - k.delay(), 0);
    const dirinfo::SequenceCodec xs = dirinfo::SequenceCodec::uniform(k.x_size(), n);
    const dirinfo::SequenceCodec zs = dirinfo::SequenceCodec::uniform(k.z_size(), zlen);
    std::vector<double> out(xs.size() * zs.size());
    for (std::uint64_t xi = 0; xi < xs.size(); ++xi) {
        const auto xseq = xs.decode(xi);
        for (std::uint64_t zi = 0; zi < zs.size(); ++zi) {
            const auto zseq = zs.decode(zi);
            out[xi * zs.size() + zi] = k.evaluate(xseq, zseq);
        }
    }
    return out;
}

// ---- brute-force maximizers for binary n=2, d=1 instances ----------------
//
// The kernel has five free parameters: r1(x1=0) and r2(x2=0 | x1, y1) for the
// four histories. A coarse grid pass feeds coordinate-wise golden-section
// refinement; directed information is concave over the causal set, so the
// refined point is the global maximum to well within the tolerances used.

struct Binary2Params {
    double p1 = 0.5;
    std::array<double, 4> p2{0.5, 0.5, 0.5, 0.5};  // index = x1*2 + y1
};

inline dirinfo::CausalKernel kernel_from_params(const Binary2Params& th) {
    dirinfo::CausalKernel k(2, 1, 2, 2);
    k.at(1, 0, 0, 0) = th.p1;
    k.at(1, 0, 0, 1) = 1.0 - th.p1;
    for (int x1 = 0; x1 < 2; ++x1)
        for (int y1 = 0; y1 < 2; ++y1) {
            const double p = th.p2[static_cast<std::size_t>(x1 * 2 + y1)];
            k.at(2, static_cast<std::uint64_t>(x1), static_cast<std::uint64_t>(y1), 0) = p;
            k.at(2, static_cast<std::uint64_t>(x1), static_cast<std::uint64_t>(y1), 1) = 1.0 - p;
        }
    return k;
}

/// Maximizes fn over the five parameters: coarse grid then golden-section
/// sweeps per coordinate until the step shrinks below 1e-6.
inline Binary2Params maximize_binary2(const std::function<double(const Binary2Params&)>& fn) {
    Binary2Params best;
    double best_val = -std::numeric_limits<double>::infinity();
    const double step = 0.05;
    Binary2Params th;
    for (th.p1 = 0.0; th.p1 <= 1.0 + 1e-12; th.p1 += step)
        for (th.p2[0] = 0.0; th.p2[0] <= 1.0 + 1e-12; th.p2[0] += step)
            for (th.p2[1] = 0.0; th.p2[1] <= 1.0 + 1e-12; th.p2[1] += step)
                for (th.p2[2] = 0.0; th.p2[2] <= 1.0 + 1e-12; th.p2[2] += step)
                    for (th.p2[3] = 0.0; th.p2[3] <= 1.0 + 1e-12; th.p2[3] += step) {
                        const double v = fn(th);
                        if (v > best_val) {
                            best_val = v;
                            best = th;
                        }
                    }

    auto coord = [&](int c) -> double& { return c == 0 ? best.p1 : best.p2[static_cast<std::size_t>(c - 1)]; };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int round = 0; round < 60; ++round) {
        double moved = 0.0;
        for (int c = 0; c < 5; ++c) {
            const double orig = coord(c);
            double lo = std::max(0.0, orig - 0.1), hi = std::min(1.0, orig + 0.1);
            double a = lo, b = hi;
            double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
            coord(c) = x1;
            double f1 = fn(best);
            coord(c) = x2;
            double f2 = fn(best);
            for (int it = 0; it < 40 && b - a > 1e-7; ++it) {
                if (f1 < f2) {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + phi * (b - a);
                    coord(c) = x2;
                    f2 = fn(best);
                } else {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - phi * (b - a);
                    coord(c) = x1;
                    f1 = fn(best);
                }
            }
            coord(c) = (a + b) / 2;
            const double fv = fn(best);
            if (fv < best_val) coord(c) = orig;  // keep the better point
            else best_val = fv;
            moved = std::max(moved, std::abs(coord(c) - orig));
        }
        if (moved < 1e-7) break;
    }
    return best;
}

/// p(y^2||x^2) as a flat 16-entry table indexed xi*4 + yi with xi = 2*x1+x2.
inline std::array<double, 16> channel_table2(const dirinfo::ChannelFactors& ch) {
    std::array<double, 16> p{};
    for (int xi = 0; xi < 4; ++xi)
        for (int yi = 0; yi < 4; ++yi) {
            const std::vector<int> xs{xi >> 1, xi & 1};
            const std::vector<int> ys{yi >> 1, yi & 1};
            p[static_cast<std::size_t>(xi * 4 + yi)] = ch.evaluate(xs, ys);
        }
    return p;
}

/// r(x^2||y^1) for one parameter point, indexed xi*2 + y1.
inline std::array<double, 8> full_table2(const Binary2Params& th) {
    std::array<double, 8> r{};
    for (int x1 = 0; x1 < 2; ++x1)
        for (int x2 = 0; x2 < 2; ++x2)
            for (int y1 = 0; y1 < 2; ++y1) {
                const double r1 = x1 == 0 ? th.p1 : 1.0 - th.p1;
                const double p2 = th.p2[static_cast<std::size_t>(x1 * 2 + y1)];
                const double r2 = x2 == 0 ? p2 : 1.0 - p2;
                r[static_cast<std::size_t>((x1 * 2 + x2) * 2 + y1)] = r1 * r2;
            }
    return r;
}

/// I(X^2 -> Y^2)/2 in bits for a parameterized kernel on a fixed channel.
inline double di_rate2(const std::array<double, 16>& p, const Binary2Params& th) {
    const auto r = full_table2(th);
    std::array<double, 4> m{};
    for (int yi = 0; yi < 4; ++yi)
        for (int xi = 0; xi < 4; ++xi)
            m[static_cast<std::size_t>(yi)] += p[static_cast<std::size_t>(xi * 4 + yi)] *
                                               r[static_cast<std::size_t>(xi * 2 + (yi >> 1))];
    double acc = 0.0;
    for (int xi = 0; xi < 4; ++xi)
        for (int yi = 0; yi < 4; ++yi) {
            const double w = p[static_cast<std::size_t>(xi * 4 + yi)] *
                             r[static_cast<std::size_t>(xi * 2 + (yi >> 1))];
            if (w == 0.0) continue;
            acc += w * std::log2(p[static_cast<std::size_t>(xi * 4 + yi)] / m[static_cast<std::size_t>(yi)]);
        }
    return acc / 2.0;
}

/// The fixed-q objective I(r, q) in bits for a parameterized kernel.
inline double objective_q2(const std::array<double, 16>& p, const std::array<double, 16>& q,
                           const Binary2Params& th) {
    const auto r = full_table2(th);
    double acc = 0.0;
    for (int xi = 0; xi < 4; ++xi)
        for (int yi = 0; yi < 4; ++yi) {
            const double rv = r[static_cast<std::size_t>(xi * 2 + (yi >> 1))];
            const double w = p[static_cast<std::size_t>(xi * 4 + yi)] * rv;
            if (w == 0.0) continue;
            const double qv = q[static_cast<std::size_t>(xi * 4 + yi)];
            if (qv == 0.0) return -std::numeric_limits<double>::infinity();
            acc += w * std::log2(qv / rv);
        }
    return acc;
}

/// max over the kernel of directed information per use, by brute force.
inline double brute_force_capacity2(const dirinfo::ChannelFactors& ch) {
    const auto p = channel_table2(ch);
    const auto value = [&](const Binary2Params& th) { return di_rate2(p, th); };
    return value(maximize_binary2(value));
}

}  // namespace oracle
