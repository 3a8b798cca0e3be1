#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "adex/parallel.hpp"
#include "adex/rng.hpp"

using namespace adex;

TEST_CASE("rng streams are deterministic and split streams are distinct") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(Rng::split(7, i));
    CHECK(seeds.size() == 1000);
    CHECK(Rng::split(7, 3) != Rng::split(8, 3));
}

TEST_CASE("gaussian moments are sane") {
    Rng rng(1);
    const int n = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(std::fabs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle is a seeded permutation") {
    std::vector<int> v1{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, v2 = v1;
    Rng r1(5), r2(5);
    shuffle(v1, r1);
    shuffle(v2, r2);
    CHECK(v1 == v2);
    std::set<int> s(v1.begin(), v1.end());
    CHECK(s.size() == 10);
}

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<std::atomic<int>> hits(10000);
    parallel_for(10000, [&](long i) { hits[i].fetch_add(1); });
    for (auto& h : hits) CHECK(h.load() == 1);
}
