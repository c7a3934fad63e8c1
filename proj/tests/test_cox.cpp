#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "survpc/cox.hpp"
#include "survpc/distributions.hpp"
#include "test_helpers.hpp"

using namespace survpc;
using test::record;

namespace {

std::vector<StudyRecord> four_subject_data() {
  return {record("a", 1.0, true, {1.0}), record("b", 2.0, true, {0.0}),
          record("c", 3.0, true, {1.0}), record("d", 4.0, false, {0.0})};
}

std::vector<StudyRecord> random_cox_data(test::Rng& rng, std::size_t n, std::size_t p) {
  std::vector<StudyRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> covs;
    for (std::size_t j = 0; j < p; ++j) covs.push_back(rng.uniform(-1.0, 1.0));
    records.push_back(
        record("s" + std::to_string(i), rng.uniform(0.05, 5.0), rng.coin(0.7), std::move(covs)));
  }
  return records;
}

}  // namespace

TEST_CASE("cox_fit matches a brute-force grid search on the 4-subject example") {
  const auto records = four_subject_data();

  // independent oracle: exhaustive scan of the Breslow partial likelihood
  double best_beta = 0.0, best_ll = -1e300;
  for (int k = -100000; k <= 100000; ++k) {
    const double beta = double(k) * 1e-4;
    const double ll = cox_log_likelihood(records, {beta});
    if (ll > best_ll) {
      best_ll = ll;
      best_beta = beta;
    }
  }

  const auto model = cox_fit(records, {"z"});
  REQUIRE(model.beta.size() == 1);
  CHECK(model.beta[0] == Catch::Approx(best_beta).margin(1e-4));

  const auto score = cox_score(records, model.beta);
  CHECK(std::fabs(score[0]) < 1e-8);
}

TEST_CASE("analytic score matches central finite differences") {
  test::Rng rng(1001);
  const auto records = random_cox_data(rng, 40, 3);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> beta{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                             rng.uniform(-1.0, 1.0)};
    const auto score = cox_score(records, beta);
    for (std::size_t j = 0; j < beta.size(); ++j) {
      auto up = beta, dn = beta;
      up[j] += h;
      dn[j] -= h;
      const double fd = (cox_log_likelihood(records, up) - cox_log_likelihood(records, dn)) /
                        (2.0 * h);
      CHECK(std::fabs(score[j] - fd) <= 1e-5 * std::max(1.0, std::fabs(score[j])));
    }
  }
}

TEST_CASE("null effect stays near zero on identically distributed groups") {
  test::Rng rng(5150);
  const ExponentialDist d(1.0);
  std::vector<StudyRecord> records;
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 200; ++i)
      records.push_back(record("g" + std::to_string(g) + "_" + std::to_string(i),
                               sample_event_time(d, rng.uniform()), true, {double(g)}));
  const auto model = cox_fit(records, {"group"});
  CHECK(std::fabs(model.beta[0]) < 0.15);
}

TEST_CASE("cond_survival closed forms") {
  CoxModel m;
  m.covariate_names = {"z"};
  m.beta = {std::log(2.0)};
  m.baseline.times = {1.0};
  m.baseline.cumhaz = {0.1};

  CHECK(cond_survival(m, {1.0}, 0.0) == 1.0);
  CHECK(cond_survival(m, {1.0}, 1.5) == Catch::Approx(std::exp(-0.2)).epsilon(1e-12));
  CHECK(cond_survival(m, {0.0}, 1.5) == Catch::Approx(std::exp(-0.1)).epsilon(1e-12));
  CHECK_THROWS_AS(cond_survival(m, {1.0, 2.0}, 1.0), std::invalid_argument);
}

TEST_CASE("cond_survival is non-increasing in t") {
  test::Rng rng(77);
  const auto records = random_cox_data(rng, 60, 2);
  const auto model = cox_fit(records, {"u", "v"});
  const std::vector<double> y{0.4, -0.3};
  double prev = 1.0;
  for (double t = 0.0; t <= 6.0; t += 0.05) {
    const double s = cond_survival(model, y, t);
    CHECK(s <= prev + 1e-15);
    CHECK(s > 0.0);
    prev = s;
  }
}

TEST_CASE("marginal_survival is the arithmetic mean of conditional survivals") {
  CoxModel m;
  m.covariate_names = {"z"};
  m.beta = {std::log(std::log(0.5) / std::log(0.9))};
  m.baseline.times = {1.0};
  m.baseline.cumhaz = {-std::log(0.9)};

  CHECK(cond_survival(m, {0.0}, 1.0) == Catch::Approx(0.9).epsilon(1e-12));
  CHECK(cond_survival(m, {1.0}, 1.0) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(marginal_survival(m, {{0.0}, {1.0}}, 1.0) == Catch::Approx(0.7).epsilon(1e-12));
  CHECK(marginal_survival(m, {{1.0}}, 1.0) == cond_survival(m, {1.0}, 1.0));
  CHECK_THROWS_AS(marginal_survival(m, {}, 1.0), std::invalid_argument);
}

TEST_CASE("breslow baseline at beta = 0 is the Nelson-Aalen estimator") {
  test::Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    auto records = test::random_records(rng);
    bool any_event = false;
    for (const auto& r : records) any_event |= r.event;
    if (!any_event) records.front().event = true;

    const auto baseline = breslow_baseline(records, {});

    // independent oracle: d_r / Y_r increments accumulated by hand
    std::vector<std::pair<double, std::pair<int, int>>> groups;  // time -> (d, count)
    auto sorted = records;
    std::sort(sorted.begin(), sorted.end(),
              [](const StudyRecord& a, const StudyRecord& b) { return a.time < b.time; });
    std::size_t k = 0;
    std::vector<double> times, cumhaz;
    double acc = 0.0;
    std::size_t at_risk = sorted.size();
    while (k < sorted.size()) {
      const double t = sorted[k].time;
      int d = 0, cnt = 0;
      while (k < sorted.size() && sorted[k].time == t) {
        if (sorted[k].event) ++d;
        ++cnt;
        ++k;
      }
      if (d > 0) {
        acc += double(d) / double(at_risk);
        times.push_back(t);
        cumhaz.push_back(acc);
      }
      at_risk -= std::size_t(cnt);
    }

    REQUIRE(baseline.times == times);
    for (std::size_t r = 0; r < cumhaz.size(); ++r)
      CHECK(baseline.cumhaz[r] == Catch::Approx(cumhaz[r]).margin(1e-12));
  }
}

TEST_CASE("baseline cumulative hazard is non-decreasing and 0 before the first event") {
  test::Rng rng(4242);
  const auto records = random_cox_data(rng, 80, 2);
  const auto model = cox_fit(records, {"u", "v"});
  CHECK(model.baseline.at(0.0) == 0.0);
  double prev = 0.0;
  for (double v : model.baseline.cumhaz) {
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("shifting a covariate column moves only the baseline") {
  test::Rng rng(31337);
  const auto records = random_cox_data(rng, 120, 2);
  CoxFitOptions tight;
  tight.tol = 1e-10;
  const auto model = cox_fit(records, {"u", "v"}, tight);

  auto shifted = records;
  for (auto& r : shifted) r.covariates[0] += 3.0;
  const auto model2 = cox_fit(shifted, {"u", "v"}, tight);

  for (std::size_t i = 0; i < records.size(); i += 7) {
    for (double t : {0.5, 1.5, 3.0}) {
      CHECK(cond_survival(model, records[i].covariates, t) ==
            Catch::Approx(cond_survival(model2, shifted[i].covariates, t)).margin(1e-8));
    }
  }
}

TEST_CASE("separation raises a dedicated error") {
  // all early events in one group, all late in the other: monotone likelihood;
  // the small covariate scale keeps the score large while |beta| diverges
  std::vector<StudyRecord> records;
  for (int i = 0; i < 6; ++i)
    records.push_back(record("e" + std::to_string(i), 1.0 + 0.1 * i, true, {0.02}));
  for (int i = 0; i < 6; ++i)
    records.push_back(record("l" + std::to_string(i), 10.0 + 0.1 * i, true, {0.0}));
  CHECK_THROWS_AS(cox_fit(records, {"z"}), separation_error);
}

TEST_CASE("degenerate inputs are rejected") {
  // no events
  CHECK_THROWS_AS(cox_fit({record("a", 1.0, false, {0.5}), record("b", 2.0, false, {1.0})}, {"z"}),
                  std::invalid_argument);
  // constant column
  CHECK_THROWS_AS(cox_fit({record("a", 1.0, true, {2.0}), record("b", 2.0, true, {2.0})}, {"z"}),
                  std::invalid_argument);
  // exactly collinear duplicated column
  test::Rng rng(99);
  std::vector<StudyRecord> records;
  for (int i = 0; i < 30; ++i) {
    const double z = rng.uniform(-1.0, 1.0);
    records.push_back(record("s" + std::to_string(i), rng.uniform(0.1, 4.0), rng.coin(0.8), {z, z}));
  }
  CHECK_THROWS_AS(cox_fit(records, {"z1", "z2"}), std::invalid_argument);
}

TEST_CASE("non-convergence carries an iteration trace") {
  test::Rng rng(12);
  std::vector<StudyRecord> records;
  for (int i = 0; i < 50; ++i) {
    const double z = rng.uniform(0.0, 1.0);
    const ExponentialDist d(std::exp(2.0 * z));
    records.push_back(
        record("s" + std::to_string(i), sample_event_time(d, rng.uniform()), true, {z}));
  }
  CoxFitOptions opts;
  opts.max_iterations = 1;
  try {
    cox_fit(records, {"z"}, opts);
    FAIL("expected convergence_error");
  } catch (const convergence_error& e) {
    CHECK(!e.trace.empty());
    CHECK(std::string(e.what()).find("iter") != std::string::npos);
  }
}

TEST_CASE("sampling from the conditional survival matches the per-subject step curve") {
  test::Rng rng(2718);
  const auto records = random_cox_data(rng, 60, 2);
  const auto model = cox_fit(records, {"u", "v"});
  const std::vector<double> y{0.25, -0.5};
  const double eta = model.linear_predictor(y);

  // dual route: explicit per-subject StepSurvival, then generic inversion
  std::vector<double> values;
  values.reserve(model.baseline.times.size());
  for (double lam : model.baseline.cumhaz) values.push_back(std::exp(-lam * std::exp(eta)));
  const StepSurvival subject_curve(model.baseline.times, values);

  for (int i = 0; i < 500; ++i) {
    const double u = rng.uniform();
    CHECK(sample_cond_event_time(model, eta, u) == sample_event_time(subject_curve, u));
  }
}
