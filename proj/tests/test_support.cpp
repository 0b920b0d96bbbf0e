#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "csmusic/support.hpp"

using csmusic::SupportSet;

TEST_CASE("construction sorts and validates") {
  SupportSet s({4, 1, 7});
  CHECK(s.indices() == std::vector<int>{1, 4, 7});
  CHECK(s.size() == 3);
  CHECK_FALSE(s.empty());

  CHECK(SupportSet{}.empty());
  CHECK(SupportSet(std::vector<int>{}).empty());

  CHECK_THROWS_AS(SupportSet({1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(SupportSet({3, -1}), std::invalid_argument);
}

TEST_CASE("contains and max_index") {
  SupportSet s({0, 5, 9});
  CHECK(s.contains(0));
  CHECK(s.contains(5));
  CHECK_FALSE(s.contains(4));
  CHECK_FALSE(s.contains(-2));
  CHECK(s.max_index() == 9);
  CHECK(SupportSet{}.max_index() == -1);
}

TEST_CASE("indexing and iteration stay ascending") {
  SupportSet s({8, 2, 5});
  CHECK(s[0] == 2);
  CHECK(s[1] == 5);
  CHECK(s[2] == 8);
  int prev = -1;
  for (int j : s) {
    CHECK(j > prev);
    prev = j;
  }
}

TEST_CASE("set operations") {
  SupportSet a({1, 3, 5});
  SupportSet b({3, 4});

  CHECK(a.set_union(b) == SupportSet({1, 3, 4, 5}));
  CHECK(a.set_difference(b) == SupportSet({1, 5}));
  CHECK(b.set_difference(a) == SupportSet({4}));
  CHECK(a.difference_size(b) == 2);
  CHECK(b.difference_size(a) == 1);
  CHECK(a.difference_size(a) == 0);

  SupportSet empty;
  CHECK(a.set_union(empty) == a);
  CHECK(a.set_difference(empty) == a);
  CHECK(empty.set_difference(a) == empty);
}

TEST_CASE("complement enumerates the unused indices") {
  SupportSet s({0, 2});
  CHECK(s.complement(5) == std::vector<int>{1, 3, 4});
  CHECK(SupportSet{}.complement(3) == std::vector<int>{0, 1, 2});
  CHECK(SupportSet({0, 1, 2}).complement(3).empty());
}

TEST_CASE("equality is by index content") {
  CHECK(SupportSet({2, 1}) == SupportSet({1, 2}));
  CHECK_FALSE(SupportSet({1, 2}) == SupportSet({1, 3}));
}
