#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "lamwave/compare.hpp"

using lamwave::CurveSample;
using lamwave::ModeCurves;
using lamwave::ModePeaks;
using lamwave::Peak;

namespace {

std::vector<CurveSample> line_curve(double a, double b, double f0, double f1, int n) {
  std::vector<CurveSample> c;
  for (int i = 0; i < n; ++i) {
    const double f = f0 + (f1 - f0) * i / (n - 1);
    c.push_back({f, a + b * f});
  }
  return c;
}

}  // namespace

TEST_CASE("branch sweeps convert to sorted unique curves") {
  lamwave::SweepResult result;
  lamwave::DispersionBranch b;
  b.label = "A0";
  b.points = {{3e5, 600.0, 3141.6}, {1e5, 400.0, 1570.8}, {2e5, 500.0, 2513.3},
              {2e5, 500.0, 2513.3}};
  result.branches.push_back(b);
  lamwave::DispersionBranch s;
  s.label = "S0";
  s.points = {{1e5, 117.0, 5370.0}};
  result.branches.push_back(s);

  const ModeCurves curves = lamwave::curves_from_branches(result);
  REQUIRE(curves.size() == 2);
  const auto& a0 = curves.at("A0");
  REQUIRE(a0.size() == 3);  // duplicate frequency collapsed
  CHECK(a0[0].f_hz == 1e5);
  CHECK(a0[1].f_hz == 2e5);
  CHECK(a0[2].f_hz == 3e5);
  CHECK(a0[2].cp_mps == 3141.6);
  CHECK(curves.at("S0").size() == 1);
}

TEST_CASE("extracted peaks convert to phase-velocity curves") {
  ModePeaks peaks;
  Peak p;
  p.f_hz = 4e5;
  p.nu_1pm = 200.0;
  peaks["A0"].peaks.push_back(p);
  p.f_hz = 2e5;
  p.nu_1pm = 125.0;
  peaks["A0"].peaks.push_back(p);
  p.f_hz = 3e5;
  p.nu_1pm = 0.0;  // degenerate, dropped
  peaks["A0"].peaks.push_back(p);

  const ModeCurves curves = lamwave::curves_from_peaks(peaks);
  const auto& a0 = curves.at("A0");
  REQUIRE(a0.size() == 2);
  CHECK(a0[0].f_hz == 2e5);
  CHECK(a0[0].cp_mps == doctest::Approx(1600.0).epsilon(1e-15));
  CHECK(a0[1].f_hz == 4e5);
  CHECK(a0[1].cp_mps == doctest::Approx(2000.0).epsilon(1e-15));
}

TEST_CASE("identical curves compare to exactly zero difference") {
  ModeCurves ref;
  ref["A0"] = line_curve(1200.0, 1e-3, 1e5, 9e5, 41);
  const auto report = lamwave::compare_curves(ref, ref, 2.04e-3);

  REQUIRE(report.summaries.size() == 1);
  CHECK(report.summaries[0].mode == "A0");
  CHECK(report.summaries[0].count == 41);
  CHECK(report.summaries[0].mean_abs_rel_diff == 0.0);
  CHECK(report.summaries[0].max_abs_rel_diff == 0.0);
  for (const auto& p : report.points.at("A0")) CHECK(p.rel_diff == 0.0);
}

TEST_CASE("a uniform one percent offset is reported as such") {
  // Straight reference: the monotone cubic interpolant is exact off-grid.
  ModeCurves ref, test;
  ref["A0"] = line_curve(1500.0, 2e-3, 1e5, 9e5, 81);
  for (int i = 0; i < 30; ++i) {
    const double f = 1.13e5 + 2.6e4 * i;  // off the reference grid
    test["A0"].push_back({f, 1.01 * (1500.0 + 2e-3 * f)});
  }
  const auto report = lamwave::compare_curves(ref, test, 2.04e-3);

  REQUIRE(report.points.at("A0").size() == 30);
  for (const auto& p : report.points.at("A0")) {
    CHECK(p.rel_diff == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(p.fd_mhzmm == doctest::Approx(p.f_hz * 2.04e-6).epsilon(1e-15));
  }
  CHECK(report.summaries[0].mean_abs_rel_diff == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(report.summaries[0].max_abs_rel_diff == doctest::Approx(0.01).epsilon(1e-10));
}

TEST_CASE("summaries aggregate signed differences by magnitude") {
  ModeCurves ref, test;
  ref["S0"] = line_curve(1000.0, 0.0, 0.0, 1e6, 11);  // constant 1000 m/s
  test["S0"] = {{2e5, 1010.0}, {4e5, 980.0}, {6e5, 1030.0}};
  const auto report = lamwave::compare_curves(ref, test, 1e-3);

  const auto& rows = report.points.at("S0");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rel_diff == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(rows[1].rel_diff == doctest::Approx(-0.02).epsilon(1e-12));
  CHECK(rows[2].rel_diff == doctest::Approx(0.03).epsilon(1e-12));

  const auto& s = report.summaries[0];
  CHECK(s.count == 3);
  CHECK(s.mean_abs_rel_diff == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(s.max_abs_rel_diff == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(s.fd_lo_mhzmm == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.fd_hi_mhzmm == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("points outside the reference support are skipped, never extrapolated") {
  ModeCurves ref, test;
  ref["A0"] = line_curve(2000.0, 1e-3, 3e5, 6e5, 31);
  test["A0"] = {{1e5, 2100.0}, {3e5, 2300.0}, {4.5e5, 2450.0}, {6e5, 2600.0}, {9e5, 2900.0}};
  const auto report = lamwave::compare_curves(ref, test, 1e-3);

  const auto& rows = report.points.at("A0");
  REQUIRE(rows.size() == 3);
  CHECK(rows.front().f_hz == 3e5);
  CHECK(rows.back().f_hz == 6e5);
  CHECK(report.summaries[0].fd_lo_mhzmm == doctest::Approx(0.3));
  CHECK(report.summaries[0].fd_hi_mhzmm == doctest::Approx(0.6));
}

TEST_CASE("modes missing from either side are ignored") {
  ModeCurves ref, test;
  ref["A0"] = line_curve(1000.0, 1e-3, 1e5, 9e5, 11);
  ref["S0"] = line_curve(5000.0, -1e-3, 1e5, 9e5, 11);
  test["S0"] = {{5e5, 4500.0}};
  test["SH0"] = {{5e5, 3000.0}};  // absent from the reference

  const auto report = lamwave::compare_curves(ref, test, 1e-3);
  CHECK(report.points.size() == 1);
  CHECK(report.points.count("S0") == 1);
  REQUIRE(report.summaries.size() == 1);
  CHECK(report.summaries[0].mode == "S0");
}

TEST_CASE("comparison rejects impossible inputs") {
  ModeCurves ref, test;
  ref["A0"] = line_curve(1000.0, 1e-3, 1e5, 5e5, 11);
  test["S0"] = {{2e5, 1200.0}};
  CHECK_THROWS_WITH_AS(lamwave::compare_curves(ref, test, 1e-3),
                       doctest::Contains("share no mode labels"), std::runtime_error);

  ModeCurves disjoint;
  disjoint["A0"] = {{7e5, 1700.0}, {8e5, 1800.0}};
  CHECK_THROWS_WITH_AS(lamwave::compare_curves(ref, disjoint, 1e-3),
                       doctest::Contains("do not overlap"), std::runtime_error);

  ModeCurves tiny, probe;
  tiny["A0"] = {{2e5, 1200.0}};
  probe["A0"] = {{2e5, 1200.0}};
  CHECK_THROWS_WITH_AS(lamwave::compare_curves(tiny, probe, 1e-3),
                       doctest::Contains("at least two points"), std::runtime_error);

  ModeCurves ok = ref;
  CHECK_THROWS_AS(lamwave::compare_curves(ref, ok, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lamwave::compare_curves(ref, ok, -1.0), std::invalid_argument);
}

TEST_CASE("comparison reports serialize to CSV with summaries") {
  ModeCurves ref, test;
  ref["A0"] = line_curve(1000.0, 0.0, 0.0, 1e6, 11);
  test["A0"] = {{2e5, 1010.0}, {4e5, 990.0}};
  const auto report = lamwave::compare_curves(ref, test, 1e-3);

  std::ostringstream os;
  lamwave::write_comparison_csv(os, report);
  const std::string text = os.str();

  CHECK(text.rfind("# lamwave-comparison v1\n", 0) == 0);
  CHECK(text.find("# summary mode=A0 count=2 mean_abs_rel_diff=0.01 "
                  "max_abs_rel_diff=0.01") != std::string::npos);
  CHECK(text.find("mode,f_hz,fd_mhzmm,cp_ref_mps,cp_test_mps,rel_diff") != std::string::npos);
  CHECK(text.find("A0,200000,0.2") != std::string::npos);
  CHECK(text.find(",1000,1010,0.01") != std::string::npos);
  CHECK(text.find(",1000,990,-0.01") != std::string::npos);
}

TEST_CASE("comparison plots render both panels") {
  ModeCurves ref, test;
  ref["A0"] = line_curve(1000.0, 1e-3, 1e5, 9e5, 11);
  test["A0"] = {{2e5, 1220.0}, {4e5, 1380.0}};
  const auto report = lamwave::compare_curves(ref, test, 1e-3);

  std::ostringstream os;
  lamwave::write_comparison_svg(os, report, ref, test);
  const std::string svg = os.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("A0 ref") != std::string::npos);
  CHECK(svg.find("A0 test") != std::string::npos);
  CHECK(svg.find("relative difference") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}
