#include <cmath>
#include <map>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "tracelens/error.hpp"
#include "tracelens/targets.hpp"

using namespace tracelens;

namespace {

// 10 applicants: 5 male, 4 female, 1 non-binary; ages 18..60.
const Dataset& Applicants() {
  static const Dataset d = Ingest(
      "Gender,Age\n"
      "male,18\nfemale,22\nmale,25\nnon-binary,31\nfemale,40\n"
      "male,44\nfemale,52\nmale,23\nfemale,33\nmale,60\n");
  return d;
}

double Sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

ErrorCode CodeOf(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kIoError;
}

}  // namespace

TEST_SUITE("targets") {

TEST_CASE("proportional target mirrors category frequencies") {
  const auto t = ProportionalTarget(Applicants(), "Gender");
  CHECK(t.mode == TargetMode::kProportional);
  CHECK(t.keys == std::vector<std::string>{"female", "male", "non-binary"});
  CHECK(t.WeightOf("male") == 0.5);
  CHECK(t.WeightOf("female") == 0.4);
  CHECK(t.WeightOf("non-binary") == 0.1);

  CHECK(ProportionalTarget(Ingest("k\nonly\nonly\n"), "k").weights == std::vector<double>{1.0});
  const auto g = ProportionalTarget(Ingest("Content Rating\nG\nR\nR\n"), "Content Rating");
  CHECK(g.weights == std::vector<double>{1.0 / 3.0, 2.0 / 3.0});
}

TEST_CASE("proportional Q target equals brute-force bin counts") {
  const Dataset d = Ingest(oracle::SyntheticCsv(400, 1, 2, 3));
  const auto t = ProportionalTarget(d, "q0");
  const AttributeSchema& a = d.attribute("q0");
  std::vector<double> counts(10, 0.0);
  double n = 0;
  const double width = (a.max - a.min) / 10.0;
  for (const Cell& c : d.column(a.index)) {
    if (IsNull(c)) continue;
    const double v = std::get<double>(c);
    int bin = static_cast<int>(std::floor((v - a.min) / width));
    bin = std::min(bin, 9);
    counts[bin] += 1;
    n += 1;
  }
  for (int b = 0; b < 10; ++b) CHECK(t.weights[b] == doctest::Approx(counts[b] / n).epsilon(1e-15));
  CHECK(Sum(t.weights) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("equal targets") {
  const auto t = EqualTarget(Applicants(), "Gender");
  CHECK(t.weights == std::vector<double>{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  CHECK(EqualTarget(Ingest("k\nonly\n"), "k").weights == std::vector<double>{1.0});
  const auto q = EqualTarget(Applicants(), "Age");
  REQUIRE(q.weights.size() == 10);
  for (double w : q.weights) CHECK(w == 0.1);
}

TEST_CASE("custom nominal weights") {
  const auto t = SetCustomTarget(Applicants(), "Gender",
                                 {{"female", 0.4}, {"non-binary", 0.4}, {"male", 0.2}});
  CHECK(t.WeightOf("female") == 0.4);
  CHECK(t.WeightOf("non-binary") == 0.4);
  CHECK(t.WeightOf("male") == 0.2);
  const auto raw = SetCustomTarget(Applicants(), "Gender",
                                   {{"female", 2}, {"non-binary", 2}, {"male", 1}});
  CHECK(raw.weights == t.weights);
  // Zeros are allowed.
  const auto z = SetCustomTarget(Applicants(), "Gender", {{"female", 1}, {"non-binary", 0}, {"male", 0}});
  CHECK(z.weights == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("custom target errors") {
  const Dataset& d = Applicants();
  CHECK(CodeOf([&] { SetCustomTarget(d, "Gender", {{"female", -1}, {"non-binary", 1}, {"male", 1}}); }) ==
        ErrorCode::kNegativeWeight);
  CHECK(CodeOf([&] { SetCustomTarget(d, "Gender", {{"female", 0}, {"non-binary", 0}, {"male", 0}}); }) ==
        ErrorCode::kDegenerateSketch);
  CHECK(CodeOf([&] { SetCustomTarget(d, "Gender", {{"female", 1}}); }) == ErrorCode::kInvalidSpec);
  CHECK(CodeOf([&] { SetCustomTarget(d, "Gender", {{"female", 1}, {"male", 1}, {"non-binary", 1}, {"x", 1}}); }) ==
        ErrorCode::kInvalidSpec);
  CHECK(CodeOf([&] { SetCustomTarget(d, "Age", std::vector<ControlPoint>{{18, 1}}); }) ==
        ErrorCode::kInvalidControlPoints);
  CHECK(CodeOf([&] { SetCustomTarget(d, "Age", std::vector<ControlPoint>{{30, 1}, {20, 1}}); }) ==
        ErrorCode::kInvalidControlPoints);
  CHECK(CodeOf([&] { SetCustomTarget(d, "Age", std::vector<ControlPoint>{{18, 1}, {60, -1}}); }) ==
        ErrorCode::kNegativeWeight);
  CHECK(CodeOf([&] { SetCustomTarget(d, "Age", std::vector<ControlPoint>{{18, 0}, {60, 0}}); }) ==
        ErrorCode::kDegenerateSketch);
  CHECK(CodeOf([&] { ProportionalTarget(Ingest("a,b\nx,NA\n", {',', true, {{"b", Datatype::kQuantitative}}}), "b"); }) ==
        ErrorCode::kAllNullColumn);
  CHECK(CodeOf([&] { ProportionalTarget(d, "Income"); }) == ErrorCode::kUnknownAttribute);
}

TEST_CASE("step sketch integrates to the numeric oracle") {
  const Dataset& d = Applicants();
  const double eps = 1e-9;
  const std::vector<ControlPoint> sketch = {{18, 0.5},        {23, 0.5}, {23 + eps, 0.15},
                                            {32, 0.15},       {32 + eps, 0.35}, {60, 0.35}};
  const auto t = SetCustomTarget(d, "Age", sketch);
  REQUIRE(t.weights.size() == 10);

  // Midpoint rule at 10,000 samples across [18, 60].
  auto density = [&](double x) {
    for (size_t i = 0; i + 1 < sketch.size(); ++i) {
      if (x >= sketch[i].position && x <= sketch[i + 1].position) {
        const double f = (x - sketch[i].position) / (sketch[i + 1].position - sketch[i].position);
        return sketch[i].density + f * (sketch[i + 1].density - sketch[i].density);
      }
    }
    return 0.0;
  };
  const int n = 10000;
  const double lo = 18, hi = 60, dx = (hi - lo) / n, bw = (hi - lo) / 10;
  std::vector<double> mass(10, 0.0);
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * dx;
    mass[std::min(9, static_cast<int>((x - lo) / bw))] += density(x) * dx;
  }
  const double total = Sum(mass);
  for (int b = 0; b < 10; ++b) CHECK(t.weights[b] == doctest::Approx(mass[b] / total).epsilon(5e-4));
  CHECK(Sum(t.weights) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.points == sketch);
}

TEST_CASE("sketch integration is exact on linear pieces") {
  const std::vector<ControlPoint> ramp = {{0, 0}, {10, 10}};
  CHECK(IntegrateSketch(ramp, 0, 10) == 50.0);
  CHECK(IntegrateSketch(ramp, 2, 4) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(IntegrateSketch(ramp, -5, 0) == 0.0);
  CHECK(IntegrateSketch(ramp, 10, 20) == 0.0);
}

TEST_CASE("set_custom_target is idempotent") {
  const Dataset& d = Applicants();
  const auto first = SetCustomTarget(d, "Gender", {{"female", 3}, {"non-binary", 1}, {"male", 7}});
  std::map<std::string, double> stored;
  for (size_t i = 0; i < first.keys.size(); ++i) stored[first.keys[i]] = first.weights[i];
  CHECK(SetCustomTarget(d, "Gender", stored) == first);

  const auto sketch = SetCustomTarget(d, "Age", std::vector<ControlPoint>{{18, 1}, {40, 3}, {60, 0.5}});
  CHECK(SetCustomTarget(d, "Age", sketch.points) == sketch);
}

TEST_CASE("all modes share the observed support and sum to one") {
  const Dataset d = Ingest(oracle::SyntheticCsv(300, 2, 2, 9));
  for (const AttributeSchema& a : d.schema()) {
    const Support s = SupportFor(a);
    const auto p = ProportionalTarget(d, a.name);
    const auto e = EqualTarget(d, a.name);
    CHECK(p.keys == s.keys);
    CHECK(e.keys == s.keys);
    CHECK(Sum(p.weights) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(Sum(e.weights) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("target JSON round trip and target set") {
  const Dataset& d = Applicants();
  const auto custom = SetCustomTarget(d, "Gender", {{"female", 0.4}, {"non-binary", 0.4}, {"male", 0.2}});
  const auto json = TargetToJson(custom);
  CHECK(json.dump() == R"({"attribute":"Gender","mode":"custom","weights":{"female":0.4,"male":0.2,"non-binary":0.4}})");
  CHECK(TargetFromJson(d, nlohmann::json::parse(json.dump())) == custom);
  const auto sketch = SetCustomTarget(d, "Age", std::vector<ControlPoint>{{18, 1}, {60, 2}});
  CHECK(TargetFromJson(d, nlohmann::json::parse(TargetToJson(sketch).dump())) == sketch);
  CHECK(TargetFromJson(d, nlohmann::json::parse(R"({"attribute":"Age","mode":"equal"})")) ==
        EqualTarget(d, "Age"));
  CHECK(CodeOf([&] { TargetFromJson(d, nlohmann::json::parse(R"({"attribute":"Age","mode":"odd"})")); }) ==
        ErrorCode::kProtocolError);
  CHECK(CodeOf([&] { TargetFromJson(d, nlohmann::json::parse(R"({"attribute":"Age","mode":"custom"})")); }) ==
        ErrorCode::kProtocolError);

  TargetSet set(d);
  CHECK(set.Get("Gender") == ProportionalTarget(d, "Gender"));
  set.Set(custom);
  CHECK(set.Get("Gender") == custom);
  CHECK(CodeOf([&] { set.Get("Nope"); }) == ErrorCode::kUnknownAttribute);
}

}  // TEST_SUITE
