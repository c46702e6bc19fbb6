#include <doctest.h>

#include <sstream>

#include "envclass/error.hpp"
#include "envclass/featmat.hpp"
#include "envclass/random.hpp"
#include "support.hpp"

using namespace envclass;

namespace {

FeatureRow row(const std::string& ds, std::size_t i, FeatureVector v) {
  return FeatureRow{ds, ds + "-s", "p" + std::to_string(i), v};
}

FeatureMatrix one_column(const std::vector<double>& col, std::size_t j = kMeanSpeed) {
  FeatureMatrix m;
  for (std::size_t i = 0; i < col.size(); ++i) {
    FeatureVector v{};
    v.fill(1.0);
    v[j] = col[i];
    m.rows.push_back(row("d", i, v));
  }
  return m;
}

FeatureMatrix random_matrix(Rng& rng, std::size_t n) {
  FeatureMatrix m;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector v{};
    for (auto& x : v) x = rng.bernoulli(0.05) ? rng.normal(0, 30) : rng.normal(0, 1);
    m.rows.push_back(row(rng.bernoulli(0.5) ? "a" : "b", i, v));
  }
  return m;
}

}  // namespace

TEST_CASE("outliers: 1..9 plus 100 drops the 100 row") {
  const auto r = remove_outliers(one_column({1, 2, 3, 4, 5, 6, 7, 8, 9, 100}));
  REQUIRE(r.dropped.size() == 1);
  CHECK(r.dropped[0].values[kMeanSpeed] == 100.0);
  CHECK(r.matrix.rows.size() == 9);
  const auto& f = r.fences.at("")[kMeanSpeed];
  CHECK(f.lower == doctest::Approx(3.25 - 6.75));
  CHECK(f.upper == doctest::Approx(7.75 + 6.75));
}

TEST_CASE("outliers: constant column drops nothing, in-range data untouched") {
  const auto c = remove_outliers(one_column({4, 4, 4, 4, 4}));
  CHECK(c.dropped.empty());
  CHECK(c.matrix.rows.size() == 5);
  const auto u = remove_outliers(one_column({1, 2, 3, 4, 5, 6}));
  CHECK(u.dropped.empty());
  CHECK_THROWS_AS(remove_outliers(one_column({1, 2, 3})), Error);
}

TEST_CASE("outliers: kept rows are inside every fence, dropped rows outside one") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_matrix(rng, 4 + rng.index(80));
    const bool per = trial % 2 == 1;
    OutlierResult r;
    try {
      r = remove_outliers(m, per);
    } catch (const Error&) {
      continue;
    }
    CHECK(r.matrix.rows.size() + r.dropped.size() == m.rows.size());
    auto fence_of = [&](const FeatureRow& x) -> const FenceArray& { return r.fences.at(per ? x.dataset_id : ""); };
    for (const auto& x : r.matrix.rows) {
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        CHECK(x.values[j] >= fence_of(x)[j].lower);
        CHECK(x.values[j] <= fence_of(x)[j].upper);
      }
    }
    for (const auto& x : r.dropped) {
      bool outside = false;
      for (std::size_t j = 0; j < kFeatureCount; ++j)
        outside = outside || x.values[j] < fence_of(x)[j].lower || x.values[j] > fence_of(x)[j].upper;
      CHECK(outside);
    }
  }
}

TEST_CASE("standardize uses the sample sd") {
  const auto s = standardize(one_column({1, 3}));
  CHECK(s.rows[0].values[kMeanSpeed] == doctest::Approx(-0.70710678118));
  CHECK(s.rows[1].values[kMeanSpeed] == doctest::Approx(0.70710678118));
  CHECK(s.rows[0].values[kStopFraction] == 0.0);
  CHECK(s.column_stats[kMeanSpeed].mean == 2.0);
  CHECK(s.column_stats[kMeanSpeed].sd == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("centering a zero-mean column is the identity") {
  const auto c = center(one_column({-2, 0, 2}));
  CHECK(c.rows[0].values[kMeanSpeed] == -2.0);
  CHECK(c.rows[2].values[kMeanSpeed] == 2.0);
  CHECK(c.rows[0].values[kVariability] == 0.0);
}

TEST_CASE("standardize: idempotent, zero mean and unit sd") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_matrix(rng, 2 + rng.index(50));
    const auto s = standardize(m);
    const auto s2 = standardize(s);
    const auto st = compute_column_stats(s.rows);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      CHECK(std::fabs(st[j].mean) <= 1e-12);
      CHECK(st[j].sd == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t i = 0; i < s.rows.size(); ++i)
        CHECK(std::fabs(s2.rows[i].values[j] - s.rows[i].values[j]) <= 1e-12);
    }
    const auto again = apply_standardization(m, s.column_stats);
    for (std::size_t i = 0; i < m.rows.size(); ++i) CHECK(again.rows[i].values == s.rows[i].values);
  }
}

TEST_CASE("matrix csv round trip") {
  Rng rng(6);
  const auto m = random_matrix(rng, 17);
  std::stringstream ss;
  write_matrix_csv(m, ss);
  const auto back = read_matrix_csv(ss, "m.csv");
  REQUIRE(back.rows.size() == m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    CHECK(back.rows[i].agent_id == m.rows[i].agent_id);
    CHECK(back.rows[i].values == m.rows[i].values);
  }
}

TEST_CASE("assemble broadcasts dataset features and excludes incomplete datasets") {
  PedestrianFeatureSet peds;
  peds.rows.push_back({"d1", "s1", "p1", 1.2, 0.1, 0.02, 0.9, 0.01, 0.0});
  peds.rows.push_back({"d1", "s1", "p2", 1.4, 0.0, 0.03, 0.95, 0.01, 0.0});
  peds.rows.push_back({"d2", "s2", "p1", 1.0, 0.2, 0.05, 0.8, 0.02, 0.01});
  peds.orientation["d1"].add(0.1);
  peds.orientation["d1"].add(3.0);
  peds.orientation["d2"].add(0.1);
  VehicleFeatureSet vehs;
  vehs.rows.push_back({"d1", "s1", "v1", 6.0, 0.1, 0.5});
  vehs.rows.push_back({"d2", "s2", "v1", 3.0, 0.3, 0.7});
  InteractionFeatureSet inter;
  inter.by_dataset["d1"] = InteractionFeatures{0.4, 0.6, 0.3, 5, 5, 3};
  inter.by_dataset["d2"] = InteractionFeatures{0.2, std::nullopt, 0.5, 2, 2, 0};
  const auto a = assemble(peds, vehs, inter);
  REQUIRE(a.matrix.rows.size() == 2);
  CHECK(a.matrix.rows[0].values[kVehMeanSpeed] == a.matrix.rows[1].values[kVehMeanSpeed]);
  CHECK(a.matrix.rows[0].values[kPriorityRatio] == 0.6);
  CHECK(a.matrix.rows[1].values[kOrientationEntropy] == doctest::Approx(std::log(2.0)));
  CHECK(a.matrix.rows[1].values[kMeanSpeed] == 1.4);
  REQUIRE(a.excluded.size() == 1);
  CHECK(a.excluded[0].dataset_id == "d2");
}
