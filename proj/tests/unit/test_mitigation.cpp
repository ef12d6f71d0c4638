#include "doctest.h"
#include "tracelens/mitigation.hpp"

using namespace tracelens;

namespace {

BehaviorSnapshot Nominal(std::vector<std::string> keys, std::vector<double> observed,
                         std::vector<double> target) {
  BehaviorSnapshot s;
  s.attribute = "attr";
  s.keys = std::move(keys);
  s.observed = std::move(observed);
  s.target = std::move(target);
  for (double m : s.observed) s.total += m;
  return s;
}

}  // namespace

TEST_SUITE("mitigation") {

TEST_CASE("under-target categories become the reverse filter") {
  const auto s = Nominal({"A", "B"}, {9, 1}, {0.6, 0.4});
  const auto f = SuggestReverseFilter(s);
  REQUIRE(f.has_value());
  CHECK(f->attribute == "attr");
  CHECK(std::get<CategoryFilter>(f->kind).selected == std::vector<std::string>{"B"});
}

TEST_CASE("home ownership over-emphasis suggests Mortgage") {
  const auto s = Nominal({"Mortgage", "Own", "Rent"}, {0, 6, 10}, {0.5, 0.1, 0.4});
  const auto f = SuggestReverseFilter(s);
  REQUIRE(f.has_value());
  CHECK(std::get<CategoryFilter>(f->kind).selected == std::vector<std::string>{"Mortgage"});
}

TEST_CASE("no suggestion when behaviour is on target or evidence is missing") {
  CHECK_FALSE(SuggestReverseFilter(Nominal({"A", "B"}, {6, 4}, {0.6, 0.4})).has_value());
  CHECK_FALSE(SuggestReverseFilter(Nominal({"A", "B"}, {64, 36}, {0.6, 0.4})).has_value());
  CHECK_FALSE(SuggestReverseFilter(Nominal({"A", "B"}, {0, 0}, {0.6, 0.4})).has_value());
  MitigationOptions strict;
  strict.under_share_threshold = 0.01;
  CHECK(SuggestReverseFilter(Nominal({"A", "B"}, {63, 37}, {0.6, 0.4}), strict).has_value());
}

TEST_CASE("binned supports pick the largest contiguous under-target run") {
  BehaviorSnapshot s = Nominal({"b0", "b1", "b2", "b3", "b4"}, {0, 10, 0, 0, 10},
                               {0.1, 0.2, 0.25, 0.25, 0.2});
  s.bin_edges = {0, 10, 20, 30, 40, 50};
  const auto f = SuggestReverseFilter(s);
  REQUIRE(f.has_value());
  const auto& range = std::get<RangeFilter>(f->kind);
  CHECK(range.lo == 20.0);
  CHECK(range.hi == 40.0);
}

}  // TEST_SUITE
