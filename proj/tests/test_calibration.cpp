#include <cmath>
#include <sstream>

#include "epi/calibration.hpp"
#include "support.hpp"

using namespace epi;

namespace {

EpidemicSeries series_from_deaths(const std::vector<double>& cum_deaths) {
  EpidemicSeries s;
  s.population = 1.0;
  for (std::size_t t = 0; t < cum_deaths.size(); ++t) {
    s.dates.push_back("day" + std::to_string(t));
    s.cum_deaths.push_back(cum_deaths[t]);
    s.cum_cases.push_back(cum_deaths[t] / 0.0133);
  }
  return s;
}

}  // namespace

TEST_CASE("loading case and death counts") {
  SUBCASE("well-formed") {
    std::istringstream in(
        "date,cum_cases,cum_deaths\n2020-03-01,10,0\n2020-03-02,20,1\n2020-03-03,40,1\n");
    const auto s = load_epidemic_csv(in, 10.38e6);
    CHECK(s.size() == 3);
    CHECK(s.dates[1] == "2020-03-02");
    CHECK(s.cum_cases[2] == doctest::Approx(40 / 10.38e6));
    CHECK(s.cum_deaths[1] == doctest::Approx(1 / 10.38e6));
  }
  auto fails_with = [](const std::string& text, const std::string& fragment) {
    std::istringstream in(text);
    try {
      load_epidemic_csv(in, 1000.0);
      FAIL("expected a data error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  fails_with("", "empty");
  fails_with("date,cum_cases,cum_deaths\n", "no data");
  fails_with("day,cases,deaths\n2020-03-01,1,0\n", "header");
  fails_with("date,cum_cases,cum_deaths\n2020-03-01,5,2\n2020-03-02,6,1\n", "line 3: cum_deaths decreases");
  fails_with("date,cum_cases,cum_deaths\n2020-03-01,5,2\n2020-03-02,4,2\n", "line 3: cum_cases decreases");
  fails_with("date,cum_cases,cum_deaths\n2020-03-01,5\n", "line 2: expected 3 columns");
  fails_with("date,cum_cases,cum_deaths\n2020-3-1,5,1\n", "bad ISO date");
  fails_with("date,cum_cases,cum_deaths\n2020-03-01,5,x\n", "cum_deaths is not");
  fails_with("date,cum_cases,cum_deaths\n2020-03-01,-5,0\n", "cum_cases is not");
  fails_with("date,cum_cases,cum_deaths\n2020-03-02,5,1\n2020-03-01,6,1\n", "dates not increasing");
  CHECK_THROWS_AS(load_epidemic_csv("/nonexistent/file.csv", 1.0), DataError);
}

TEST_CASE("case fatality rate") {
  EpidemicSeries s;
  s.dates = {"a", "b", "c", "d"};
  s.cum_cases = {0.0, 0.0, 0.5, 0.3 / 0.0133};
  s.cum_deaths = {0.0, 0.0, 0.5, 0.3};
  const auto r = case_fatality_series(s);
  REQUIRE(r.size() == 2);
  CHECK(r[0].index == 2);
  CHECK(r[0].value == 1.0);
  CHECK(r[1].value == doctest::Approx(0.0133));
}

TEST_CASE("prevalence reconstruction") {
  const ModelParams p;
  SUBCASE("constant daily deaths give constant prevalence") {
    std::vector<double> cum;
    for (int t = 0; t < 30; ++t) cum.push_back(2e-6 * t);
    for (double I : prevalence_estimate(series_from_deaths(cum), p))
      CHECK(I == doctest::Approx(2e-6 / (p.gamma * p.delta0)).epsilon(1e-12));
  }
  SUBCASE("linear in the death increments") {
    std::vector<double> cum{0}, scaled{0};
    for (int t = 1; t < 40; ++t) {
      const double d = 1e-6 * (1 + std::sin(0.3 * t));
      cum.push_back(cum.back() + d);
      scaled.push_back(scaled.back() + 3.5 * d);
    }
    const auto a = prevalence_estimate(series_from_deaths(cum), p);
    const auto b = prevalence_estimate(series_from_deaths(scaled), p);
    for (std::size_t t = 0; t < a.size(); ++t) CHECK(b[t] == doctest::Approx(3.5 * a[t]).epsilon(1e-12));
  }
  SUBCASE("recovers a slowly varying prevalence path") {
    std::vector<double> truth, cum{0};
    for (int t = 0; t < 200; ++t) {
      truth.push_back(0.05 * std::exp(-std::pow((t - 100) / 30.0, 2)));
      cum.push_back(cum.back() + p.gamma * p.delta0 * truth.back());
    }
    const auto est = prevalence_estimate(series_from_deaths(cum), p);
    double peak = 0;
    for (double x : truth) peak = std::max(peak, x);
    for (std::size_t t = 3; t + 3 < est.size(); ++t) CHECK(std::abs(est[t] - truth[t]) <= 0.02 * peak);
  }
  SUBCASE("moving average truncates at the ends") {
    const auto m = centered_moving_average({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 7);
    CHECK(m[0] == doctest::Approx(2.5));  // mean of 1..4
    CHECK(m[5] == doctest::Approx(6.0));  // mean of 3..9
    CHECK(m[9] == doctest::Approx(8.5));  // mean of 7..10
  }
  CHECK_THROWS_AS(prevalence_estimate(series_from_deaths({0, 1e-6, 2e-6}), p), DataError);
}

TEST_CASE("value of statistical life") {
  CHECK(vsl_uD(238.7, 0.05) == doctest::Approx(-11.935));
  CHECK(vsl_uD(0.0, 0.05) == 0.0);
  CHECK(vsl_uD(2 * 150.0, 0.04) == doctest::Approx(2 * vsl_uD(150.0, 0.04)));
  CHECK_THROWS_AS(vsl_uD(100.0, 1.5), DomainError);
}

TEST_CASE("bisection on a stand-in peak model") {
  const ModelParams p;
  const auto& g = epi::test::small_grid();
  // Peak increasing in u_D, as the full model's is.
  auto model = [](const ModelParams& q) { return 0.24 * std::exp(q.u_D / 10.0); };
  const auto rep = calibrate_uD(0.1, p, g, {}, model);
  CHECK(rep.converged);
  CHECK(rep.evaluations <= 40);
  CHECK(std::abs(rep.achieved_peak - 0.1) <= 1e-3);
  CHECK(std::abs(model([&] { auto q = p; q.u_D = rep.u_D; return q; }()) - 0.1) <= 1e-3);
  SUBCASE("a target outside the bracket names both endpoint peaks") {
    try {
      calibrate_uD(0.5, p, g, {}, model);
      FAIL("expected bracket failure");
    } catch (const SolverError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("-40") != std::string::npos);
      CHECK(msg.find("-0.5") != std::string::npos);
    }
  }
  SUBCASE("the evaluation cap is honoured") {
    CalibrationOptions o;
    o.tolerance = 1e-15;
    o.max_evaluations = 12;
    const auto capped = calibrate_uD(0.1, p, g, o, model);
    CHECK(capped.evaluations == 12);
    CHECK_FALSE(capped.converged);
  }
  CHECK_THROWS_AS(calibrate_uD(1.5, p, g, {}, model), DomainError);
}

TEST_CASE("calibrating the full model") {
  const ModelParams p;
  const auto& g = epi::test::benchmark_grid();
  CalibrationOptions opt;
  SUBCASE("the model peak rises with u_D across the bracket") {
    double prev = 0;
    for (double u : {-40.0, -30.0, -20.0, -10.0, -0.5}) {
      ModelParams q = p;
      q.u_D = u;
      const double pk = pbe_peak(q, g, opt);
      CHECK(pk > prev);
      prev = pk;
    }
  }
  SUBCASE("the benchmark peak recovers the benchmark utility of death") {
    const auto rep = calibrate_uD(0.0663, p, g, opt);
    CHECK(rep.converged);
    CHECK(std::abs(rep.u_D - -12.22) <= 0.5);
    ModelParams q = p;
    q.u_D = rep.u_D;
    CHECK(std::abs(pbe_peak(q, g, opt) - 0.0663) <= 1e-3);
  }
  SUBCASE("the myopic peak sits at the mild end of the bracket") {
    const auto rep = calibrate_uD(0.239, p, g, opt);
    CHECK(rep.converged);
    CHECK(rep.u_D > -2.0);
  }
  SUBCASE("from a data file") {
    const auto s = load_epidemic_csv(std::string(EPI_TEST_DATA) + "/synthetic_epidemic.csv", 10.38e6);
    const auto prev = prevalence_estimate(s, p);
    const double target = *std::max_element(prev.begin(), prev.end());
    CHECK(target == doctest::Approx(0.0663).epsilon(1e-3));
    const auto rep = calibrate_uD(target, p, g, opt);
    CHECK(std::abs(rep.achieved_peak - target) <= 1e-3);
    CHECK(std::abs(rep.u_D - -12.22) <= 0.5);
  }
}

TEST_CASE("calibration report") {
  CalibrationReport r;
  r.target = 0.0663;
  r.u_D = -12.25;
  r.probes = {{-40, 0.02}};
  std::stringstream ss;
  write_calibration_report(ss, r);
  CHECK(ss.str().find("u_D=-12.25") != std::string::npos);
  CHECK(ss.str().find("probe=-40,0.02") != std::string::npos);
}
