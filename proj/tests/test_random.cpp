#include <doctest.h>

#include <cmath>
#include <set>

#include "pdmp/random.hpp"

using namespace pdmp;

TEST_CASE("philox4x32-10 known answers") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                             K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                             K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a = RandomStream::for_item(7, StreamPurpose::Test, 3);
  RandomStream b = RandomStream::for_item(7, StreamPurpose::Test, 3);
  RandomStream c = RandomStream::for_item(7, StreamPurpose::Test, 4);
  RandomStream d = RandomStream::for_item(7, StreamPurpose::Census, 3);
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    firsts.insert(x);
  }
  CHECK(firsts.size() == 100);
  CHECK(RandomStream::for_item(7, StreamPurpose::Test, 3)() != c());
  CHECK(RandomStream::for_item(7, StreamPurpose::Test, 3)() != d());

  RandomStream parent(11, 0);
  const RandomStream child = parent.split(1);
  RandomStream untouched(11, 0);
  CHECK(parent() == untouched());
  CHECK(child.stream_id() != parent.stream_id());
}

TEST_CASE("uniform and exponential moments") {
  RandomStream rng(2024, 1);
  constexpr int n = 200000;
  double su = 0.0, se = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    se += rng.exponential(4.0);
  }
  // 5 sigma: sd(U) = 0.2887, sd(Exp(4)) = 0.25.
  CHECK(std::abs(su / n - 0.5) < 5 * 0.2887 / std::sqrt(n));
  CHECK(std::abs(se / n - 0.25) < 5 * 0.25 / std::sqrt(n));
}
