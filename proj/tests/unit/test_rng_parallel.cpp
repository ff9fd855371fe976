#include <doctest.h>

#include <atomic>
#include <numeric>
#include <set>
#include <stdexcept>

#include "rmask/parallel.hpp"
#include "rmask/rng.hpp"

using namespace rmask;

TEST_SUITE("rng-parallel") {
  TEST_CASE("philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("streams are reproducible and distinct") {
    CounterRng a(42, StreamTag::walk, 1, 2, 3), b(42, StreamTag::walk, 1, 2, 3);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());
    std::set<std::uint64_t> firsts;
    for (std::uint32_t s = 0; s < 50; ++s) firsts.insert(CounterRng(42, StreamTag::walk, s).next_u64());
    firsts.insert(CounterRng(42, StreamTag::dropout, 0).next_u64());
    firsts.insert(CounterRng(43, StreamTag::walk, 0).next_u64());
    CHECK(firsts.size() == 52);
  }

  TEST_CASE("uniform and below stay in range with sane moments") {
    CounterRng rng(7, StreamTag::synthetic, 0);
    double sum = 0.0;
    std::array<int, 6> counts{};
    const int n = 600000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
      const auto k = rng.below(6);
      REQUIRE(k < 6);
      ++counts[k];
    }
    CHECK(std::abs(sum / n - 0.5) < 0.005);
    for (int c : counts) CHECK(std::abs(c - n / 6) < 3000);
    CHECK(rng.block_index() > 0);
  }

  TEST_CASE("parallel_for covers every index once for any worker count") {
    for (std::size_t workers : {1u, 2u, 3u, 8u}) {
      std::vector<int> hits(10007, 0);
      parallel_for(hits.size(), workers, 97, [&](std::size_t b, std::size_t e, std::size_t w) {
        CHECK(w < workers);
        for (std::size_t i = b; i < e; ++i) ++hits[i];
      });
      CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 10007);
      CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
    }
    bool called = false;
    parallel_for(0, 4, 1, [&](std::size_t, std::size_t, std::size_t) { called = true; });
    CHECK_FALSE(called);
  }

  TEST_CASE("parallel_for rethrows worker exceptions") {
    CHECK_THROWS_AS(parallel_for(1000, 4, 10,
                                 [](std::size_t b, std::size_t, std::size_t) {
                                   if (b == 500) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
  }
}
