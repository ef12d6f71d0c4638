// Acceptance suite: one PASS/FAIL line per headline criterion. Exit status is
// the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "tcp_client.hpp"
#include "tracelens/behavior.hpp"
#include "tracelens/error.hpp"
#include "tracelens/mitigation.hpp"
#include "tracelens/server.hpp"
#include "tracelens/session.hpp"
#include "tracelens/temporal.hpp"

using namespace tracelens;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

Outcome Debounce() {
  const auto start = Clock::now();
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dwell(0, 700), row(0, 199), size(1, 6);
  Ledger ledger(200, {"a"});
  size_t mismatches = 0, accepted = 0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<DatapointId> members;
    for (int n = size(rng); n > 0; --n) members.push_back(static_cast<DatapointId>(row(rng)));
    const int d = dwell(rng);
    const std::vector<double> before = ledger.datapoint_counters();
    ledger.Record(InteractionEvent::Hover(10 * i, "e" + std::to_string(i), members, d));
    const bool changed = ledger.datapoint_counters() != before;
    if (changed != (d >= 350)) ++mismatches;
    accepted += changed;
  }
  const double secs = Seconds(start);
  return {mismatches == 0 && secs < 1.0,
          Fmt("%zu/1000 accepted, %zu gate mismatches, %.3f s", accepted, mismatches, secs)};
}

Outcome Conservation() {
  const auto start = Clock::now();
  std::mt19937_64 rng(12);
  const size_t rows = 500;
  std::uniform_int_distribution<int> kind(0, 19), dwell(0, 700), size(1, 40), attr(0, 3);
  std::uniform_int_distribution<DatapointId> row(0, rows - 1);
  const std::vector<std::string> names = {"a", "b", "c", "d"};
  Ledger ledger(rows, names);
  double worst = 0.0;
  int64_t t = 0;
  for (int i = 0; i < 10000; ++i) {
    t += 37;
    const int k = kind(rng);
    if (k < 14) {
      std::vector<DatapointId> members;
      for (int n = size(rng); n > 0; --n) members.push_back(row(rng));
      std::sort(members.begin(), members.end());
      members.erase(std::unique(members.begin(), members.end()), members.end());
      ledger.Record(InteractionEvent::Hover(t, "e" + std::to_string(k), members, dwell(rng)));
    } else if (k < 17) {
      ledger.Record(InteractionEvent::DetailRow(t, row(rng), dwell(rng)));
    } else {
      const EventKind ek = k == 17 ? EventKind::kEncodingAssign
                         : k == 18 ? EventKind::kFilterApply
                                   : EventKind::kFilterChange;
      ledger.Record(InteractionEvent::OnAttribute(t, ek, names[attr(rng)]));
    }
    if (i % 500 == 499) {
      const double mass = std::accumulate(ledger.datapoint_counters().begin(),
                                          ledger.datapoint_counters().end(), 0.0);
      size_t hovers = 0;
      for (const LoggedEvent& e : ledger.log())
        hovers += (e.event.kind == EventKind::kHoverElement ||
                   e.event.kind == EventKind::kHoverDetailRow) &&
                  e.disposition == Disposition::kAccepted;
      worst = std::max(worst, std::fabs(mass - static_cast<double>(hovers)));
    }
  }
  const double secs = Seconds(start);
  return {worst <= 1e-9 && secs < 5.0,
          Fmt("max |mass - accepted hovers| = %.3g over 10000 events, %.3f s", worst, secs)};
}

Outcome Normalization() {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> length(1, 300), zero(0, 3);
  std::uniform_real_distribution<double> value(0.0, 50.0);
  size_t bad = 0;
  double worst_sum = 0.0;
  for (int m = 0; m < 100; ++m) {
    std::vector<double> c(length(rng));
    for (double& x : c) x = zero(rng) == 0 ? 0.0 : std::round(value(rng) * 8.0) / 8.0;
    c[0] = 1.0;
    const auto rel = Normalize(c, NormalizeMode::kRelative);
    const auto abs = Normalize(c, NormalizeMode::kAbsolute);
    const auto bin = Normalize(c, NormalizeMode::kBinary);
    if (*std::max_element(rel.begin(), rel.end()) != 1.0) ++bad;
    for (size_t i = 0; i < c.size(); ++i)
      if (bin[i] != (c[i] > 0 ? 1.0 : 0.0)) ++bad;
    worst_sum = std::max(worst_sum, std::fabs(std::accumulate(abs.begin(), abs.end(), 0.0) - 1.0));
  }
  // Absolute sums are exact up to the rounding of n divisions and additions.
  return {bad == 0 && worst_sum <= 1e-12,
          Fmt("100 maps, %zu relative/binary violations, max |sum(absolute) - 1| = %.3g", bad,
              worst_sum)};
}

Outcome AdOracle() {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<int> support(1, 8), mass(0, 30);
  double worst = 0.0;
  bool identity = true;
  for (int i = 0; i < 200; ++i) {
    const size_t n = support(rng);
    const auto target = oracle::RandomSimplex(rng, n, 0.05);
    std::vector<double> observed(n);
    for (double& x : observed) x = mass(rng);
    observed[0] += 1;
    const bool ks = i % 2 == 1;
    const double got = AdMetric(observed, target, ks ? DeviationTest::kKolmogorovSmirnov
                                                     : DeviationTest::kChiSquare);
    const double want = ks ? oracle::KsAd(observed, target) : oracle::ChiSquareAd(observed, target);
    worst = std::max(worst, std::fabs(got - want));
    std::vector<double> same(target);
    for (double& x : same) x *= 40.0;
    for (auto test : {DeviationTest::kChiSquare, DeviationTest::kKolmogorovSmirnov})
      identity = identity && AdMetric(same, target, test) == 0.0;
  }
  const std::vector<double> half = {0.5, 0.5};
  const double hand = AdMetric(std::vector<double>{10, 0}, half, DeviationTest::kChiSquare);
  return {identity && worst <= 1e-6 && std::fabs(hand - 0.998) <= 0.001,
          Fmt("identity %s, max |ad - oracle| = %.3g on 200 pairs, 50/50 with 10 on one side = %.5f",
              identity ? "exact" : "BROKEN", worst, hand)};
}

Outcome TargetModes() {
  const Dataset d = Ingest(
      "Gender\nmale\nfemale\nmale\nnon-binary\nfemale\nmale\nfemale\nmale\nfemale\nmale\n");
  const auto p = ProportionalTarget(d, "Gender");
  const auto e = EqualTarget(d, "Gender");
  const auto c = SetCustomTarget(d, "Gender", {{"female", 2}, {"non-binary", 2}, {"male", 1}});
  const bool ok = p.WeightOf("male") == 0.5 && p.WeightOf("female") == 0.4 &&
                  p.WeightOf("non-binary") == 0.1 &&
                  e.weights == std::vector<double>(3, 1.0 / 3.0) && c.WeightOf("female") == 0.4 &&
                  c.WeightOf("non-binary") == 0.4 && c.WeightOf("male") == 0.2;
  return {ok, Fmt("proportional {%.3g,%.3g,%.3g}, equal {%.4g x3}, custom {%.3g,%.3g,%.3g}",
                  p.WeightOf("male"), p.WeightOf("female"), p.WeightOf("non-binary"), e.weights[0],
                  c.WeightOf("female"), c.WeightOf("non-binary"), c.WeightOf("male"))};
}

std::vector<Frame> Send(Session& s, const json& message) { return s.HandleMessage(message); }

Outcome Determinism() {
  const auto movies = std::make_shared<const Dataset>(IngestFile(oracle::DataPath("movies.csv")));
  Session s(movies);
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> kind(0, 19), dwell(50, 900), gap(0, 400);
  const std::vector<json> encodings = {
      {{"type", "set_encoding"}, {"chart_type", "Bar"}, {"x", "Genre"}, {"y", "Worldwide Gross"}, {"aggregation", "Average"}},
      {{"type", "set_encoding"}, {"chart_type", "Scatter"}, {"x", "Running Time"}, {"y", "IMDB Rating"}},
      {{"type", "set_encoding"}, {"chart_type", "Line"}, {"x", "Release Year"}, {"aggregation", "Count"}},
      {{"type", "set_encoding"}, {"chart_type", "Strip"}, {"x", "Production Budget"}, {"y", "Content Rating"}},
  };
  const std::vector<json> filters = {
      {{"type", "set_filter"}, {"filter", {{"attribute", "Content Rating"}, {"categories", {"R", "PG-13"}}}}},
      {{"type", "set_filter"}, {"filter", {{"attribute", "Running Time"}, {"range", {80, 150}}}}},
      {{"type", "set_filter"}, {"attribute", "Running Time"}, {"remove", true}},
  };
  int64_t t = 0;
  size_t attempts = 0;
  Send(s, {{"type", "set_target"}, {"target", {{"attribute", "Genre"}, {"mode", "equal"}}}, {"t", 0}});
  while (s.EventLog().size() < 500 && attempts < 5000) {
    ++attempts;
    json m;
    const int k = kind(rng);
    if (k == 0 || s.elements().empty()) {
      m = encodings[std::uniform_int_distribution<size_t>(0, encodings.size() - 1)(rng)];
    } else if (k == 1) {
      m = filters[std::uniform_int_distribution<size_t>(0, filters.size() - 1)(rng)];
    } else if (k < 4) {
      const auto row = std::uniform_int_distribution<int>(0, 708)(rng);
      t += gap(rng);
      s.HandleMessage({{"type", "detail_hover"}, {"row", row}, {"phase", "start"}, {"t", t}});
      m = {{"type", "detail_hover"}, {"row", row}, {"phase", "end"}};
      t += dwell(rng);
    } else {
      const auto& el = s.elements()[std::uniform_int_distribution<size_t>(0, s.elements().size() - 1)(rng)];
      t += gap(rng);
      s.HandleMessage({{"type", "hover"}, {"element", el.id}, {"phase", "start"}, {"t", t}});
      m = {{"type", "hover"}, {"element", el.id}, {"phase", "end"}};
      t += dwell(rng);
    }
    m["t"] = t += 1;
    s.HandleMessage(m);
  }

  const Session restored = Session::RestoreArchive(s.SaveArchive(), movies);
  const auto series = ReplaySeries(*movies, s.EventLog(), s.targets());
  const auto live = s.Snapshots();
  const auto back = restored.Snapshots();
  std::vector<std::string> names;
  for (const auto& a : movies->schema()) names.push_back(a.name);
  const Ledger replayed = ReplayLedger(movies->row_count(), names, s.EventLog());
  size_t mismatched = 0;
  for (size_t a = 0; a < live.size(); ++a) {
    mismatched += live[a].ad != back[a].ad;
    mismatched += live[a].ad != series[a].points.back().ad;
  }
  const bool counters = restored.ledger().datapoint_counters() == s.ledger().datapoint_counters() &&
                        replayed.datapoint_counters() == s.ledger().datapoint_counters() &&
                        restored.ledger().attribute_counters() == s.ledger().attribute_counters();
  return {mismatched == 0 && counters && s.EventLog().size() >= 500,
          Fmt("%zu messages, %zu events; %zu ad mismatches across %zu attributes, counters %s",
              s.message_log().size(), s.EventLog().size(), mismatched, live.size(),
              counters ? "identical" : "DIFFER")};
}

Outcome LoansScenario() {
  const auto start = Clock::now();
  Session s;
  Send(s, {{"type", "load_dataset"}, {"path", oracle::DataPath("loans.csv")}});
  Send(s, {{"type", "set_encoding"}, {"chart_type", "Strip"}, {"x", "Loan Amount"}, {"y", "Home Ownership"}, {"t", 0}});
  const size_t ownership = s.dataset().attribute("Home Ownership").index;
  auto rows_of = [&](const std::string& category) {
    std::vector<std::string> ids;
    for (const VisualElement& e : s.elements())
      if (std::get<std::string>(s.dataset().cell(e.members[0], ownership)) == category) ids.push_back(e.id);
    return ids;
  };
  int64_t t = 1000;
  auto hover = [&](const std::string& id) {
    Send(s, {{"type", "hover"}, {"element", id}, {"phase", "start"}, {"t", t}});
    Send(s, {{"type", "hover"}, {"element", id}, {"phase", "end"}, {"t", t + 500}});
    t += 1000;
  };
  const auto own = rows_of("Own"), rent = rows_of("Rent");
  for (int i = 0; i < 3; ++i) hover(own[i]);
  for (int i = 0; i < 5; ++i) hover(rent[i]);

  const auto opened = Send(s, {{"type", "open_card"}, {"attribute", "Home Ownership"}, {"t", t}});
  const json card = json::parse(opened.back()["card"].dump());
  const bool red_side = card["color_t"].get<double>() > 0.5;
  const std::string color = card["color"];
  const double seeded = card["ad"];
  const json suggestion = card["suggestion"];
  const bool mortgage = suggestion.is_object() &&
                        suggestion.value("categories", json::array()) == json::array({"Mortgage"});
  // The library call agrees with what the card carried.
  const auto direct = SuggestReverseFilter(s.SnapshotOf("Home Ownership"));
  const bool agrees = direct && std::get<CategoryFilter>(direct->kind).selected ==
                                    std::vector<std::string>{"Mortgage"};

  bool decreasing = mortgage;
  std::vector<double> trail = {seeded};
  if (mortgage) {
    Send(s, {{"type", "set_filter"}, {"filter", suggestion}, {"t", t}});
    std::vector<std::string> burst;
    for (const VisualElement& e : s.elements()) burst.push_back(e.id);
    for (size_t i = 0; i < 8 && i < burst.size(); ++i) {
      hover(burst[i]);
      trail.push_back(s.SnapshotOf("Home Ownership").ad);
      decreasing = decreasing && trail.back() < trail[trail.size() - 2];
    }
  }
  const double secs = Seconds(start);
  std::ostringstream path;
  for (double v : trail) path << Fmt("%.4f ", v);
  return {red_side && mortgage && agrees && decreasing && secs < 2.0,
          Fmt("seeded ad %.4f (%s), suggestion %s, burst ad ", seeded, color.c_str(),
              suggestion.dump().c_str()) +
              path.str() + Fmt("%s, %.3f s", decreasing ? "strictly decreasing" : "NOT decreasing", secs)};
}

// Independent group key for a row under a spec; nullopt when the row has no mark.
std::optional<std::string> GroupKey(const Dataset& d, const ChartSpec& spec, DatapointId row) {
  const AttributeSchema& x = d.attribute(spec.x);
  const Cell& xc = d.cell(row, x.index);
  if (IsNull(xc)) return std::nullopt;
  if (spec.chart_type == ChartType::kScatter || spec.chart_type == ChartType::kStrip) {
    if (spec.y && IsNull(d.cell(row, d.attribute(*spec.y).index))) return std::nullopt;
    return "row " + std::to_string(row);
  }
  if (x.is_nominal()) return std::get<std::string>(xc);
  const double v = std::get<double>(xc);
  if (x.datatype == Datatype::kTemporal) return Fmt("%.17g", v);
  if (x.max == x.min) return std::string("bin 0");
  const int bin = std::clamp(static_cast<int>(std::floor((v - x.min) / (x.max - x.min) * 10.0)), 0, 9);
  return "bin " + std::to_string(bin);
}

bool PassesFilters(const Dataset& d, const std::vector<FilterPredicate>& filters, DatapointId row) {
  for (const FilterPredicate& f : filters) {
    const Cell& c = d.cell(row, d.attribute(f.attribute).index);
    if (IsNull(c)) return false;
    if (const auto* r = std::get_if<RangeFilter>(&f.kind)) {
      const double v = std::get<double>(c);
      if (v < r->lo || v > r->hi) return false;
    } else {
      const auto& sel = std::get<CategoryFilter>(f.kind).selected;
      if (std::find(sel.begin(), sel.end(), std::get<std::string>(c)) == sel.end()) return false;
    }
  }
  return true;
}

Outcome ChartPartition() {
  const Dataset d = Ingest(oracle::SyntheticCsv(1000, 3, 3, 16));
  std::mt19937_64 rng(16);
  std::vector<std::string> names;
  for (const auto& a : d.schema()) names.push_back(a.name);
  auto pick = [&](size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); };
  const std::vector<ChartType> charts = {ChartType::kScatter, ChartType::kStrip, ChartType::kBar, ChartType::kLine};
  const std::vector<Aggregation> aggs = {Aggregation::kNone, Aggregation::kCount, Aggregation::kSum,
                                         Aggregation::kMin, Aggregation::kMax, Aggregation::kAverage};
  size_t specs = 0, failures = 0, tries = 0, marks = 0;
  std::set<ChartType> covered;
  while (specs < 50 && tries < 100000) {
    ++tries;
    ChartSpec spec;
    spec.chart_type = charts[specs % charts.size()];
    spec.x = names[pick(names.size())];
    if (pick(3) != 0) spec.y = names[pick(names.size())];
    spec.aggregation = aggs[pick(aggs.size())];
    for (int f = static_cast<int>(pick(3)); f > 0; --f) {
      const AttributeSchema& a = d.schema()[pick(names.size())];
      if (a.is_nominal()) {
        std::vector<std::string> sel;
        for (const auto& c : a.categories)
          if (pick(2)) sel.push_back(c);
        if (sel.empty()) sel.push_back(a.categories.front());
        spec.filters.push_back(FilterPredicate::Categories(a.name, sel));
      } else {
        std::uniform_real_distribution<double> u(a.min, a.max);
        double lo = u(rng), hi = u(rng);
        if (lo > hi) std::swap(lo, hi);
        spec.filters.push_back(FilterPredicate::Range(a.name, lo, hi));
      }
    }
    if (!ValidateSpec(spec, d).empty()) continue;
    ++specs;
    covered.insert(spec.chart_type);
    const auto elements = BuildElements(d, spec);
    std::map<std::string, std::string> key_to_element;
    std::vector<DatapointId> seen;
    bool ok = true;
    std::set<std::string> ids;
    for (const VisualElement& e : elements) {
      ok = ok && !e.members.empty() && ids.insert(e.id).second;
      for (DatapointId r : e.members) {
        const auto key = GroupKey(d, spec, r);
        ok = ok && key && PassesFilters(d, spec.filters, r);
        if (!key) continue;
        auto [it, fresh] = key_to_element.emplace(*key, e.id);
        ok = ok && it->second == e.id;
        seen.push_back(r);
      }
    }
    std::sort(seen.begin(), seen.end());
    std::vector<DatapointId> expected;
    for (DatapointId r = 0; r < d.row_count(); ++r)
      if (PassesFilters(d, spec.filters, r) && GroupKey(d, spec, r)) expected.push_back(r);
    ok = ok && seen == expected;
    marks += elements.size();
    failures += !ok;
  }
  return {specs == 50 && failures == 0 && covered.size() == 4,
          Fmt("%zu specs (%zu chart types), %zu marks, %zu partition failures", specs, covered.size(),
              marks, failures)};
}

Outcome Latency() {
  const auto dataset = std::make_shared<const Dataset>(Ingest(oracle::SyntheticCsv(10000, 5, 14, 17)));
  net::ServerOptions options;
  options.dataset = dataset;
  options.enable_http = false;
  net::Server server(options);
  server.Start();
  std::vector<double> samples;
  {
    oracle::TcpClient client(server.port());
    std::mt19937_64 rng(17);
    int64_t t = 0;
    const std::vector<json> charts = {
        {{"type", "set_encoding"}, {"chart_type", "Bar"}, {"x", "n0"}, {"y", "q0"}, {"aggregation", "Average"}},
        {{"type", "set_encoding"}, {"chart_type", "Scatter"}, {"x", "q1"}, {"y", "q2"}},
        {{"type", "set_encoding"}, {"chart_type", "Line"}, {"x", "year"}, {"aggregation", "Count"}},
    };
    for (const json& chart : charts) {
      json m = chart;
      m["t"] = t;
      client.Send(m);
      const json elements = client.ReceiveUntil("elements");
      client.ReceiveUntil("attributes");
      const auto& list = elements["elements"];
      for (int i = 0; i < 100; ++i) {
        const std::string id = list[std::uniform_int_distribution<size_t>(0, list.size() - 1)(rng)]["id"];
        client.Send({{"type", "hover"}, {"element", id}, {"phase", "start"}, {"t", t += 100}});
        client.ReceiveUntil("details");
        const auto sent = Clock::now();
        client.Send({{"type", "hover"}, {"element", id}, {"phase", "end"}, {"t", t += 400}});
        // The first hover on an element changes intensities; every accepted
        // hover moves at least one card.
        const json last = client.ReceiveUntil("cards");
        samples.push_back(Seconds(sent) * 1000.0);
        if (last.is_null()) break;
      }
    }
  }
  server.Stop();
  std::sort(samples.begin(), samples.end());
  const double p50 = samples[samples.size() / 2];
  const double p95 = samples[static_cast<size_t>(std::ceil(0.95 * samples.size())) - 1];
  return {samples.size() == 300 && p95 <= 50.0,
          Fmt("10000 rows x %zu attributes, %zu hovers over TCP: p50 %.2f ms, p95 %.2f ms, max %.2f ms",
              dataset->attribute_count(), samples.size(), p50, p95, samples.back())};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"debounce-gate", Debounce},
      {"conservation", Conservation},
      {"normalization", Normalization},
      {"ad-identity-and-oracle", AdOracle},
      {"target-modes", TargetModes},
      {"determinism", Determinism},
      {"loans-reverse-filter-scenario", LoansScenario},
      {"chart-partition", ChartPartition},
      {"realtime-latency", Latency},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    failed += !outcome.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
