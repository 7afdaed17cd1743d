#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "flowseq/error.hpp"
#include "flowseq/metrics.hpp"
#include "support.hpp"

using namespace flowseq;

namespace {

std::vector<ReportRow> load(const std::string& name) {
  std::ifstream f(testing::fixture(name));
  REQUIRE(f.good());
  return read_confusion_csv(f);
}

}  // namespace

TEST_CASE("confusion examples") {
  const std::vector<int> truth = {1, 1, 1, 0, 0};
  CHECK(confusion(truth, truth) == ConfusionMatrix{3, 0, 2, 0});
  const std::vector<int> none = {0, 0, 0, 0, 0};
  const auto cm = confusion(none, truth);
  CHECK(cm.tp == 0);
  CHECK(cm.fp == 0);
  CHECK_THROWS_AS(confusion(std::vector<int>{1}, truth), DataError);
}

TEST_CASE("confusion matches a brute-force recount") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng() % 200;
    std::vector<int> p(n), t(n);
    ConfusionMatrix want;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % 2);
      t[i] = static_cast<int>(rng() % 2);
      if (t[i] && p[i]) ++want.tp;
      if (t[i] && !p[i]) ++want.fn;
      if (!t[i] && !p[i]) ++want.tn;
      if (!t[i] && p[i]) ++want.fp;
    }
    const auto cm = confusion(p, t);
    CHECK(cm == want);
    CHECK(cm.total() == n);
    const auto f = f1(cm);
    if (f) {
      CHECK(*f >= 0.0);
      CHECK(*f <= 100.0);
      if (cm.tp > 0) CHECK((*f == 100.0) == (cm.fp == 0 && cm.fn == 0));
    }
  }
}

TEST_CASE("F1 spot values") {
  CHECK(format_f1(f1({97687, 3574, 565196, 5199})) == "95.703");
  CHECK(format_f1(f1({134614, 126, 0, 768})) == "99.669");
  CHECK(format_f1(f1({3073, 0, 0, 0})) == "100.000");
  CHECK(format_f1(f1({0, 0, 10, 0})) == "n/a");
  CHECK_FALSE(f1({0, 0, 5, 0}).has_value());
}

TEST_CASE("scenario_report sums counts") {
  const auto one = scenario_report({{"only", {5, 1, 7, 2}}});
  CHECK(one.summary.cm == one.rows[0].cm);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ReportRow> rows;
    ConfusionMatrix sum;
    for (int i = 0; i < 1 + static_cast<int>(rng() % 10); ++i) {
      ConfusionMatrix cm{rng() % 100, rng() % 100, rng() % 100, rng() % 100};
      sum.tp += cm.tp;
      sum.fn += cm.fn;
      sum.tn += cm.tn;
      sum.fp += cm.fp;
      rows.push_back({"s" + std::to_string(i), cm});
    }
    const auto r = scenario_report(rows);
    CHECK(r.summary.cm == sum);
    CHECK(r.summary.name == "Summary");
  }
}

TEST_CASE("published confusion counts replay") {
  for (const char* name : {"published_cicids_lstm.csv", "published_cicids_fnn.csv", "published_ctu13_lstm.csv",
                           "published_ctu13_fnn.csv"}) {
    std::ifstream f(testing::fixture(name));
    std::string header, line;
    std::getline(f, header);
    std::vector<std::string> published;
    std::vector<std::string> names;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::stringstream ss(line);
      std::string n, v;
      std::getline(ss, n, ',');
      std::getline(ss, v, ',');
      names.push_back(n);
      published.push_back(v);
    }
    const auto rep = scenario_report(load(name));
    REQUIRE(rep.rows.size() + 1 == published.size());
    for (std::size_t i = 0; i < rep.rows.size(); ++i) CHECK(format_f1(rep.rows[i].f1()) == published[i]);
    CHECK(format_f1(rep.summary.f1()) == published.back());
  }
  const auto fnn = scenario_report(load("published_cicids_fnn.csv"));
  CHECK(fnn.summary.cm == ConfusionMatrix{134595, 145, 268128, 276});
  CHECK(format_f1(fnn.summary.f1()) == "99.844");
}

TEST_CASE("delta_report") {
  const auto a = scenario_report({{"x", {10, 2, 30, 4}}, {"y", {1, 1, 1, 1}}});
  const auto d0 = delta_report(a, a);
  for (const auto& r : d0.rows) {
    CHECK(r.delta_fn == 0);
    CHECK(r.delta_fp == 0);
  }
  CHECK(d0.summary.delta_fn == 0);

  const auto e = scenario_report({{"x", {11, 1, 29, 5}}, {"y", {2, 0, 0, 2}}});
  const auto d = delta_report(e, a);
  CHECK(d.rows[0].delta_fn == -1);
  CHECK(d.rows[0].delta_fp == 1);
  CHECK(d.summary.delta_fn == -2);
  CHECK(d.summary.delta_fp == 2);

  const auto other = scenario_report({{"x", {1, 1, 1, 1}}, {"z", {1, 1, 1, 1}}});
  CHECK_THROWS_AS(delta_report(other, a), DataError);
}

TEST_CASE("published summary deltas") {
  CHECK(delta_report(scenario_report({{"s", {134715, 25, 0, 778}}}), scenario_report({{"s", {134614, 126, 0, 768}}}))
            .summary.delta_fn == -101);
  CHECK(delta_report(scenario_report({{"s", {0, 597, 0, 19795}}}), scenario_report({{"s", {0, 3574, 0, 5199}}}))
            .summary.delta_fp == 14596);
}

TEST_CASE("report csv round trip and table layout") {
  const auto r = scenario_report({{"Neris", {100, 3, 500, 7}}, {"Rbot", {50, 0, 10, 0}}});
  std::ostringstream out;
  write_report_csv(out, r);
  std::istringstream in(out.str());
  const auto rows = read_confusion_csv(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].cm == r.rows[0].cm);
  CHECK(rows[1].name == "Rbot");

  std::ostringstream t;
  write_report_table(t, r, "LSTM");
  CHECK(t.str().find("Summary") != std::string::npos);
  CHECK(t.str().find("100.000") != std::string::npos);

  std::ostringstream dc;
  write_delta_csv(dc, delta_report(r, r));
  CHECK(dc.str().rfind("scenario,netflows,malicious,f1,fn,fp,delta_fn,delta_fp\n", 0) == 0);
}

TEST_CASE("confusion csv errors") {
  std::istringstream bad("scenario,tp,fn\nx,1,2\n");
  CHECK_THROWS_AS(read_confusion_csv(bad), DataError);
  std::istringstream neg("scenario,tp,fn,tn,fp\nx,1,-2,3,4\n");
  CHECK_THROWS_AS(read_confusion_csv(neg), DataError);
}
