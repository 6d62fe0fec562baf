// dirinfo command-line front end.
//
//   dirinfo solve    --channel bsc:0.3 --n 4 [--d 1] [--s0 fixed:0|sandwich]
//   dirinfo sweep    --channel trapdoor:2 --n 1..8 | --d 2..6 --n 8 | --cells 2..4 --n 6
//   dirinfo validate --channel trapdoor:2 --n 12
//
// Channels are built-in names (bsc:p, trapdoor:m, ising) or a file in the
// `fsc |X| |Y| |S|` text format. Output is CSV with 9-significant-digit
// numerics. Exit codes: 0 success/converged, 1 usage or config error,
// 2 iteration cap reached.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dirinfo/dirinfo.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIterationCap = 2;

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

struct IntRange {
    int lo = 0;
    int hi = 0;
    bool is_range = false;  // written as a..b rather than a single value
};

IntRange parse_range(const std::string& text, const std::string& flag) {
    IntRange r;
    const auto dots = text.find("..");
    try {
        std::size_t used = 0;
        if (dots == std::string::npos) {
            r.lo = r.hi = std::stoi(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
        } else {
            r.is_range = true;
            r.lo = std::stoi(text.substr(0, dots), &used);
            if (used != dots) throw std::invalid_argument(text);
            const std::string hi = text.substr(dots + 2);
            r.hi = std::stoi(hi, &used);
            if (used != hi.size()) throw std::invalid_argument(text);
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("invalid " + flag + " value '" + text +
                                    "': expected an integer or lo..hi");
    }
    return r;
}

dirinfo::FeedbackSpec parse_feedback(const std::string& text) {
    if (text == "identity") return dirinfo::FeedbackSpec::identity();
    if (text == "const") return dirinfo::FeedbackSpec::constant();
    // comma-separated z values indexed by y, e.g. "0,0" collapses both outputs
    std::vector<int> f;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            f.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw std::invalid_argument("invalid --feedback '" + text +
                                        "': expected identity, const, or z values like 0,0");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return dirinfo::FeedbackSpec::mapped(dirinfo::FeedbackMap(std::move(f)));
}

int resolve_workers(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("DIRINFO_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

double estimate_bytes(const dirinfo::FscKernel& fsc, int n) {
    // Table footprint scales like n * (|X||Y|)^n cells of double.
    return 8.0 * n * std::pow(static_cast<double>(fsc.x_size) * fsc.y_size, n);
}

void check_memory_gate(const dirinfo::FscKernel& fsc, int n, bool allow_large) {
    const double bytes = estimate_bytes(fsc, n);
    constexpr double kGib = 1024.0 * 1024.0 * 1024.0;
    if (bytes > kGib && !allow_large)
        throw std::invalid_argument("estimated table footprint " + fmt9(bytes / kGib) +
                                    " GiB exceeds 1 GiB; pass --allow-large to proceed");
}

struct S0Mode {
    bool sandwich = false;
    int state = 0;
};

S0Mode parse_s0(const std::string& text) {
    if (text == "sandwich") return {true, 0};
    if (text.rfind("fixed:", 0) == 0) {
        try {
            std::size_t used = 0;
            const std::string v = text.substr(6);
            const int s = std::stoi(v, &used);
            if (used != v.size() || s < 0) throw std::invalid_argument(v);
            return {false, s};
        } catch (const std::exception&) {
        }
    }
    throw std::invalid_argument("invalid --s0 '" + text + "': expected fixed:k or sandwich");
}

void write_trace(const std::string& path, const std::vector<dirinfo::IterationRecord>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::invalid_argument("cannot open trace file: " + path);
    out << "iter,I_L,I_U,gap\n";
    for (std::size_t k = 0; k < history.size(); ++k)
        out << (k + 1) << ',' << fmt9(history[k].lower) << ',' << fmt9(history[k].upper) << ','
            << fmt9(history[k].upper - history[k].lower) << '\n';
}

int cmd_solve(const std::string& channel, const std::string& n_spec, int d,
              const std::string& feedback, const std::string& s0_spec, double eps, int max_iters,
              int workers, bool allow_large, const std::string& trace_path) {
    if (d < 1) throw std::invalid_argument("--d must be >= 1");
    if (!(eps > 0.0)) throw std::invalid_argument("--eps must be positive");
    if (max_iters < 1) throw std::invalid_argument("--max-iters must be >= 1");
    const IntRange nr = parse_range(n_spec, "--n");
    if (nr.is_range) throw std::invalid_argument("solve takes a single --n; use sweep for ranges");
    const int n = nr.lo;
    if (n < 1) throw std::invalid_argument("--n must be >= 1");

    const dirinfo::FscKernel fsc = dirinfo::channel_from_spec(channel);
    const dirinfo::FeedbackSpec fb = parse_feedback(feedback);
    static_cast<void>(fb.z_size(fsc.y_size));
    check_memory_gate(fsc, n, allow_large);
    const S0Mode s0 = parse_s0(s0_spec);

    if (s0.sandwich) {
        const dirinfo::SandwichResult sw = dirinfo::bound_sandwich(
            fsc, n, d, fb, eps, max_iters, resolve_workers(workers));
        if (!trace_path.empty()) write_trace(trace_path, sw.history);
        std::cout << "n,d,C_upper,C_n,C_lower,converged,iters,seconds\n";
        std::cout << n << ',' << d << ',' << fmt9(sw.upper) << ',' << fmt9(sw.value) << ','
                  << fmt9(sw.lower) << ',' << (sw.converged ? 1 : 0) << ',' << sw.iterations << ','
                  << fmt9(sw.seconds) << '\n';
        return sw.converged ? kExitOk : kExitIterationCap;
    }

    if (s0.state >= fsc.state_count)
        throw std::invalid_argument("--s0 fixed:" + std::to_string(s0.state) +
                                    " out of range: channel has " +
                                    std::to_string(fsc.state_count) + " states");
    const auto t0 = std::chrono::steady_clock::now();
    const dirinfo::BaaProblem problem{dirinfo::unroll(fsc, n, s0.state), d, fb, eps, max_iters};
    const dirinfo::BaaRun run = dirinfo::solve(problem);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (!trace_path.empty()) write_trace(trace_path, run.history);
    std::cout << "n,d,C_n,converged,iters,seconds\n";
    std::cout << n << ',' << d << ',' << fmt9(run.capacity()) << ',' << (run.converged ? 1 : 0)
              << ',' << run.iterations << ',' << fmt9(seconds) << '\n';
    return run.converged ? kExitOk : kExitIterationCap;
}

void write_curve(std::ostream& out, const dirinfo::CapacityCurve& curve) {
    out << "param,n,C_upper,C_n,C_lower,delta_n,converged,seconds\n";
    for (const auto& p : curve.points) {
        out << fmt9(p.param) << ',' << p.n << ',';
        if (p.failed) {
            out << "nan,nan,nan,,0," << fmt9(p.seconds) << '\n';
            continue;
        }
        out << fmt9(p.upper) << ',' << fmt9(p.value) << ',' << fmt9(p.lower) << ',';
        if (p.delta) out << fmt9(*p.delta);
        out << ',' << (p.converged ? 1 : 0) << ',' << fmt9(p.seconds) << '\n';
    }
}

int cmd_sweep(const std::string& channel, const std::string& n_spec, const std::string& d_spec,
              const std::string& cells_spec, const std::string& feedback, double eps,
              int max_iters, int workers, bool allow_large, const std::string& out_path) {
    if (!(eps > 0.0)) throw std::invalid_argument("--eps must be positive");
    if (max_iters < 1) throw std::invalid_argument("--max-iters must be >= 1");
    const IntRange nr = parse_range(n_spec, "--n");
    const IntRange dr = parse_range(d_spec, "--d");
    const bool cells_given = !cells_spec.empty();
    const int ranged = (nr.is_range ? 1 : 0) + (dr.is_range ? 1 : 0) + (cells_given ? 1 : 0);
    if (ranged != 1)
        throw std::invalid_argument("sweep needs exactly one ranged parameter: --n lo..hi, "
                                    "--d lo..hi, or --cells lo..hi");

    const dirinfo::FeedbackSpec fb = parse_feedback(feedback);
    const int wk = resolve_workers(workers);
    dirinfo::CapacityCurve curve;

    if (nr.is_range) {
        if (nr.lo < 1 || nr.hi < nr.lo) throw std::invalid_argument("--n range is empty");
        if (dr.lo < 1) throw std::invalid_argument("--d must be >= 1");
        const dirinfo::FscKernel fsc = dirinfo::channel_from_spec(channel);
        check_memory_gate(fsc, nr.hi, allow_large);
        curve = dirinfo::sweep_horizons(fsc, nr.lo, nr.hi, dr.lo, fb, eps, max_iters, wk);
    } else if (dr.is_range) {
        if (dr.lo < 1 || dr.hi < dr.lo) throw std::invalid_argument("--d range is empty");
        if (nr.lo < 1) throw std::invalid_argument("--n must be >= 1");
        const dirinfo::FscKernel fsc = dirinfo::channel_from_spec(channel);
        check_memory_gate(fsc, nr.lo, allow_large);
        curve = dirinfo::sweep_delays(fsc, dr.lo, dr.hi, nr.lo, fb, eps, max_iters, wk);
    } else {
        const IntRange cr = parse_range(cells_spec, "--cells");
        if (cr.lo < 2 || cr.hi < cr.lo) throw std::invalid_argument("--cells range is empty or below 2");
        if (nr.lo < 1) throw std::invalid_argument("--n must be >= 1");
        if (channel.rfind("trapdoor", 0) != 0)
            throw std::invalid_argument("--cells sweeps apply to the trapdoor channel only");
        std::vector<std::pair<double, dirinfo::FscKernel>> family;
        for (int m = cr.lo; m <= cr.hi; ++m) family.emplace_back(m, dirinfo::trapdoor(m));
        check_memory_gate(family.front().second, nr.lo, allow_large);
        curve = dirinfo::sweep_family(family, nr.lo, dr.lo, fb, eps, max_iters, wk);
    }

    if (out_path.empty()) {
        write_curve(std::cout, curve);
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::invalid_argument("cannot open output file: " + out_path);
        write_curve(out, curve);
    }

    int with_delta = 0;
    for (const auto& p : curve.points)
        if (!p.failed && p.delta) ++with_delta;
    if (with_delta >= 2)
        std::cerr << "trend: delta_n non-increasing along the sweep: "
                  << (dirinfo::deltas_non_increasing(curve) ? "yes" : "no") << '\n';
    for (const auto& p : curve.points)
        if (p.failed) std::cerr << "point param=" << fmt9(p.param) << " failed: " << p.error << '\n';
    return kExitOk;
}

int cmd_validate(const std::string& channel, const std::string& n_spec, int d) {
    const IntRange nr = parse_range(n_spec, "--n");
    if (nr.is_range) throw std::invalid_argument("validate takes a single --n");
    const int n = nr.lo;
    if (n < 1) throw std::invalid_argument("--n must be >= 1");
    if (d < 1) throw std::invalid_argument("--d must be >= 1");

    const dirinfo::FscKernel fsc = dirinfo::channel_from_spec(channel);
    if (channel == "ising" && d == 1)
        std::cerr << "warning: the ising channel output for time i depends on input i+1, so "
                     "delay 1 feedback is degenerate; use --d 2 or more\n";

    std::cout << "channel: |X|=" << fsc.x_size << " |Y|=" << fsc.y_size
              << " |S|=" << fsc.state_count << '\n';
    double dev = 0.0;
    for (int s = 0; s < fsc.state_count; ++s) {
        const dirinfo::ChannelFactors probe = dirinfo::unroll(fsc, 2, s);
        dev = std::max(dev, probe.max_row_deviation());
    }
    std::cout << "row-stochastic at n=2: max deviation " << fmt9(dev) << '\n';
    if (dev > 1e-9) throw std::invalid_argument("channel rows are not probability distributions");

    for (int i = 1; i <= n; ++i)
        std::cout << "factor " << i << ": rows |X|^" << i << "*|Y|^" << (i - 1) << " = "
                  << fmt9(std::pow(fsc.x_size, i) * std::pow(fsc.y_size, i - 1)) << ", cols "
                  << fsc.y_size << '\n';
    const double cells = static_cast<double>(n) * std::pow(static_cast<double>(fsc.x_size) * fsc.y_size, n);
    const double bytes = cells * 8.0;
    std::cout << "memory estimate for n=" << n << ": " << fmt9(cells) << " cells (~"
              << fmt9(bytes / (1024.0 * 1024.0 * 1024.0)) << " GiB)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"directed-information capacity bounds for channels with delayed feedback"};
    app.require_subcommand(1);

    std::string channel, n_spec = "1", d_spec = "1", cells_spec, feedback = "identity";
    std::string s0_spec = "fixed:0", trace_path, out_path;
    double eps = 1e-6;
    int max_iters = 10000, workers = 0, d = 1;
    bool allow_large = false;

    auto* solve = app.add_subcommand("solve", "run the solver for one horizon");
    solve->add_option("--channel", channel, "bsc:p, trapdoor:m, ising, or a channel file")->required();
    solve->add_option("--n", n_spec, "block length")->required();
    solve->add_option("--d", d, "feedback delay (default 1)");
    solve->add_option("--feedback", feedback, "identity, const, or z values like 0,0");
    solve->add_option("--s0", s0_spec, "fixed:k or sandwich (default fixed:0)");
    solve->add_option("--eps", eps, "stopping threshold on I_U - I_L in bits");
    solve->add_option("--max-iters", max_iters, "iteration cap");
    solve->add_option("--workers", workers, "worker threads (default: DIRINFO_WORKERS or cores)");
    solve->add_flag("--allow-large", allow_large, "permit runs estimated above 1 GiB");
    solve->add_option("--trace", trace_path, "write per-iteration CSV trace here");

    auto* sweep = app.add_subcommand("sweep", "solve across a parameter range");
    sweep->add_option("--channel", channel, "bsc:p, trapdoor:m, ising, or a channel file")->required();
    sweep->add_option("--n", n_spec, "block length or range lo..hi");
    sweep->add_option("--d", d_spec, "feedback delay or range lo..hi");
    sweep->add_option("--cells", cells_spec, "trapdoor cell range lo..hi");
    sweep->add_option("--feedback", feedback, "identity, const, or z values like 0,0");
    sweep->add_option("--eps", eps, "stopping threshold on I_U - I_L in bits");
    sweep->add_option("--max-iters", max_iters, "iteration cap");
    sweep->add_option("--workers", workers, "worker threads (default: DIRINFO_WORKERS or cores)");
    sweep->add_flag("--allow-large", allow_large, "permit runs estimated above 1 GiB");
    sweep->add_option("--out", out_path, "curve CSV path (default stdout)");

    auto* validate = app.add_subcommand("validate", "check a channel and print size estimates");
    validate->add_option("--channel", channel, "bsc:p, trapdoor:m, ising, or a channel file")->required();
    validate->add_option("--n", n_spec, "block length the estimate is for (default 2)");
    validate->add_option("--d", d, "feedback delay the run would use");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (solve->parsed())
            return cmd_solve(channel, n_spec, d, feedback, s0_spec, eps, max_iters, workers,
                             allow_large, trace_path);
        if (sweep->parsed())
            return cmd_sweep(channel, n_spec, d_spec, cells_spec, feedback, eps, max_iters,
                             workers, allow_large, out_path);
        if (validate->parsed()) {
            if (validate->count("--n") == 0) n_spec = "2";
            return cmd_validate(channel, n_spec, d);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
