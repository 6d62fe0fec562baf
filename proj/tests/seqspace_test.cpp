#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "dirinfo/seqspace.hpp"

using dirinfo::alternating_reduce;
using dirinfo::Reduce;
using dirinfo::ReduceAxis;
using dirinfo::SequenceCodec;

TEST_CASE("encode maps sequences big-endian", "[seqspace]") {
    const SequenceCodec binary3 = SequenceCodec::uniform(2, 3);
    CHECK(binary3.encode(std::vector<int>{0, 0, 0}) == 0);
    CHECK(binary3.encode(std::vector<int>{1, 0, 1}) == 5);

    const SequenceCodec mixed({2, 3});
    CHECK(mixed.encode(std::vector<int>{1, 2}) == 5);
    CHECK(mixed.size() == 6);
}

TEST_CASE("decode inverts encode on the listed examples", "[seqspace]") {
    const SequenceCodec binary3 = SequenceCodec::uniform(2, 3);
    CHECK(binary3.decode(0) == std::vector<int>{0, 0, 0});
    CHECK(binary3.decode(5) == std::vector<int>{1, 0, 1});
    CHECK(SequenceCodec({2, 3}).decode(5) == std::vector<int>{1, 2});
}

TEST_CASE("codec rejects out-of-range symbols and indices", "[seqspace]") {
    const SequenceCodec codec({2, 3});
    CHECK_THROWS_AS(codec.encode(std::vector<int>{0, 3}), std::domain_error);
    CHECK_THROWS_AS(codec.encode(std::vector<int>{-1, 0}), std::domain_error);
    CHECK_THROWS_AS(codec.encode(std::vector<int>{0}), std::invalid_argument);
    CHECK_THROWS_AS(codec.decode(6), std::domain_error);
    CHECK_THROWS_WITH(codec.encode(std::vector<int>{0, 3}),
                      Catch::Matchers::ContainsSubstring("position 2"));
}

TEST_CASE("codec construction fails fast on 64-bit overflow", "[seqspace]") {
    CHECK_THROWS_AS(SequenceCodec::uniform(3, 41), std::overflow_error);
    CHECK_NOTHROW(SequenceCodec::uniform(2, 60));
}

TEST_CASE("round trip is a bijection for random codecs", "[seqspace]") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> len(1, 6), card(1, 4);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> sizes(static_cast<std::size_t>(len(rng)));
        for (auto& s : sizes) s = card(rng);
        const SequenceCodec codec(sizes);
        for (std::uint64_t i = 0; i < codec.size(); ++i) {
            const auto seq = codec.decode(i);
            CHECK(codec.encode(seq) == i);
        }
    }
}

TEST_CASE("alternating_reduce follows the schedule order", "[seqspace]") {
    const std::vector<double> table{1, 2, 3, 4};
    const std::vector<ReduceAxis> max_out{{2, Reduce::max}, {2, Reduce::sum}};
    CHECK(alternating_reduce(table, max_out) == 7.0);
    const std::vector<ReduceAxis> sum_out{{2, Reduce::sum}, {2, Reduce::max}};
    CHECK(alternating_reduce(table, sum_out) == 6.0);
}

TEST_CASE("alternating_reduce on constant tables counts sum axes", "[seqspace]") {
    // constant c with sum axes of sizes m1..mk folds to c * prod m_i
    const std::vector<double> table(2 * 3 * 4, 2.5);
    const std::vector<ReduceAxis> schedule{{2, Reduce::max}, {3, Reduce::sum}, {4, Reduce::sum}};
    CHECK(alternating_reduce(table, schedule) == Catch::Approx(2.5 * 12).epsilon(1e-12));
}

TEST_CASE("alternating_reduce all-sum equals total, all-max equals maximum", "[seqspace]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<double> table(3 * 2 * 4);
    for (auto& v : table) v = val(rng);
    double total = 0.0, mx = table[0];
    for (double v : table) {
        total += v;
        mx = std::max(mx, v);
    }
    const std::vector<ReduceAxis> sums{{3, Reduce::sum}, {2, Reduce::sum}, {4, Reduce::sum}};
    const std::vector<ReduceAxis> maxes{{3, Reduce::max}, {2, Reduce::max}, {4, Reduce::max}};
    CHECK(alternating_reduce(table, sums) == Catch::Approx(total).margin(1e-12));
    CHECK(alternating_reduce(table, maxes) == mx);
}

TEST_CASE("alternating_reduce rejects schedule mismatch", "[seqspace]") {
    const std::vector<double> table{1, 2, 3};
    const std::vector<ReduceAxis> schedule{{2, Reduce::sum}, {2, Reduce::sum}};
    CHECK_THROWS_AS(alternating_reduce(table, schedule), std::invalid_argument);
}
