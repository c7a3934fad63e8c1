#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "survpc/kaplan_meier.hpp"
#include "survpc/studygen.hpp"
#include "test_helpers.hpp"

using namespace survpc;
using test::record;

TEST_CASE("km_fit three-subject hand example") {
  const std::vector<StudyRecord> records{record("a", 1.0, true), record("b", 2.0, false),
                                         record("c", 3.0, true)};
  const auto km = km_fit(records);
  REQUIRE(km.event_times == std::vector<double>{1.0, 3.0});
  CHECK(km.increments[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(km.increments[1] == 0.0);
  CHECK(km.at_risk == std::vector<double>{3.0, 1.0});
  CHECK(km.events == std::vector<double>{1.0, 1.0});

  CHECK(km.survival.at(0.5) == 1.0);
  CHECK(km.survival.at(1.5) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(km.survival.at(2.5) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(km.survival.at(3.5) == 0.0);
}

TEST_CASE("km_fit with only censored records is the unit curve") {
  const std::vector<StudyRecord> records{record("a", 1.0, false), record("b", 2.5, false)};
  const auto km = km_fit(records);
  CHECK(km.event_times.empty());
  CHECK(km.survival.at(10.0) == 1.0);
}

TEST_CASE("km_fit rejects empty input") {
  CHECK_THROWS_AS(km_fit({}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_km_fit({}, unit_weights()), std::invalid_argument);
  CHECK_THROWS_AS(censoring_fit({}), std::invalid_argument);
}

TEST_CASE("km_fit ties are pooled before the increment") {
  const std::vector<StudyRecord> records{record("a", 1.0, true), record("b", 1.0, true),
                                         record("c", 1.0, false), record("d", 2.0, true)};
  const auto km = km_fit(records);
  REQUIRE(km.event_times == std::vector<double>{1.0, 2.0});
  // the subject censored at t=1 stays in the risk set of the t=1 events
  CHECK(km.at_risk == std::vector<double>{4.0, 1.0});
  CHECK(km.events == std::vector<double>{2.0, 1.0});
  CHECK(km.increments[0] == 0.5);
}

TEST_CASE("km_fit matches the analytic curve on 2000 uncensored exponential draws") {
  test::Rng rng(7);
  const ExponentialDist d(2.0);
  std::vector<StudyRecord> records;
  records.reserve(2000);
  for (int i = 0; i < 2000; ++i)
    records.push_back(record(std::to_string(i), sample_event_time(d, rng.uniform()), true));
  const auto km = km_fit(records);
  const double sup =
      test::sup_norm_vs(km.survival, [](double t) { return std::exp(-2.0 * t); }, 1.15);
  CHECK(sup < 0.05);
}

TEST_CASE("km_fit equals the empirical survival fraction on censoring-free data") {
  test::Rng rng(55);
  for (int rep = 0; rep < 20; ++rep) {
    auto records = test::random_records(rng);
    for (auto& r : records) r.event = true;
    const auto km = km_fit(records);
    const double n = double(records.size());
    for (std::size_t r = 0; r < km.event_times.size(); ++r) {
      double above = 0;
      for (const auto& rec : records)
        if (rec.time > km.event_times[r]) ++above;
      CHECK(km.survival.values()[r] == Catch::Approx(above / n).margin(1e-12));
    }
  }
}

TEST_CASE("weighted_km_fit hand example") {
  const std::vector<StudyRecord> records{record("a", 1.0, true), record("b", 1.0, false),
                                         record("c", 2.0, true)};
  const std::map<std::string, double> w{{"a", 2.0}, {"b", 1.0}, {"c", 1.0}};
  const auto km = weighted_km_fit(records, [&](const StudyRecord& rec, double) {
    return w.at(rec.subject_id);
  });
  REQUIRE(km.event_times == std::vector<double>{1.0, 2.0});
  CHECK(km.increments[0] == Catch::Approx(0.5).epsilon(1e-15));  // 1 - 2/(2+1+1)
  CHECK(km.increments[1] == 0.0);
  CHECK(km.survival.at(1.0) == Catch::Approx(0.5).epsilon(1e-15));
  CHECK(km.survival.at(2.0) == 0.0);
}

TEST_CASE("weighted_km_fit with unit weights is bit-identical to km_fit") {
  test::Rng rng(123);
  for (int rep = 0; rep < 100; ++rep) {
    const auto records = test::random_records(rng);
    CHECK(test::curves_identical(km_fit(records), weighted_km_fit(records, unit_weights())));
  }
}

TEST_CASE("weighted_km_fit is invariant to per-event-time weight rescaling") {
  test::Rng rng(321);
  for (int rep = 0; rep < 25; ++rep) {
    const auto records = test::random_records(rng);
    const WeightFn base = [](const StudyRecord& rec, double t) {
      return 0.5 + double(fnv1a64(rec.subject_id) % 997) / 500.0 + 0.1 * t;
    };
    const WeightFn scaled = [&base](const StudyRecord& rec, double t) {
      return base(rec, t) * (1.0 + t * t);  // common factor at each event time
    };
    const auto a = weighted_km_fit(records, base);
    const auto b = weighted_km_fit(records, scaled);
    REQUIRE(a.event_times == b.event_times);
    for (std::size_t r = 0; r < a.increments.size(); ++r)
      CHECK(a.increments[r] == Catch::Approx(b.increments[r]).margin(1e-12));
  }
}

TEST_CASE("weighted_km_fit rejects invalid weights naming subject and time") {
  const std::vector<StudyRecord> records{record("a", 1.0, true), record("bad", 2.0, true)};
  const WeightFn w = [](const StudyRecord& rec, double) {
    return rec.subject_id == "bad" ? 0.0 : 1.0;
  };
  try {
    weighted_km_fit(records, w);
    FAIL("expected weight_error");
  } catch (const weight_error& e) {
    CHECK(e.subject_id == "bad");
    CHECK(e.time == 1.0);  // first event time where the risk-set sweep hits it
  }

  const WeightFn nan_w = [](const StudyRecord&, double) { return std::nan(""); };
  CHECK_THROWS_AS(weighted_km_fit(records, nan_w), weight_error);
}

TEST_CASE("km survival is non-increasing within [0,1] and starts at 1") {
  test::Rng rng(888);
  for (int rep = 0; rep < 50; ++rep) {
    const auto km = km_fit(test::random_records(rng));
    double prev = 1.0;
    for (double v : km.survival.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= prev);
      prev = v;
    }
    CHECK(km.survival.at(0.0) <= 1.0);
    for (std::size_t r = 0; r < km.events.size(); ++r) {
      CHECK(km.events[r] >= 0.0);
      CHECK(km.events[r] <= km.at_risk[r]);
    }
  }
}

TEST_CASE("censoring_fit basics") {
  CHECK(censoring_fit({record("a", 1.0, true), record("b", 2.0, true)}).at(10.0) == 1.0);

  const auto s = censoring_fit({record("a", 1.0, true), record("b", 2.0, false)});
  CHECK(s.at(1.5) == 1.0);
  CHECK(s.at(2.0) == 0.0);
}

TEST_CASE("censoring_fit keeps an event at t in the censoring risk set at t") {
  const auto s = censoring_fit({record("a", 1.0, true), record("b", 1.0, false)});
  // risk set at t=1 has both subjects, one censoring
  CHECK(s.at(1.0) == 0.5);
}

TEST_CASE("censoring_fit recovers the Weibull censoring process of a generated study") {
  auto spec = default_study_spec();
  spec.seed = 97531;
  const auto data = generate_study(spec);
  const auto s = censoring_fit(data.records);
  const WeibullDist w(2.0, 5.0);
  // observed range: high censoring density sits within [0, ~2.6]
  const double sup = test::sup_norm_vs(s, [&](double t) { return survival_at(w, t); },
                                       study_horizon(data.records));
  CHECK(sup < 0.05);
}
