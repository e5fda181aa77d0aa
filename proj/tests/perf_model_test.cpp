#include <gtest/gtest.h>

#include <cmath>

#include "timetile/perf_model.hpp"

using namespace timetile;

namespace {

const MachineModel kMachine{15.168, 32, 4.0};

double rel(double got, double want) { return std::fabs(got - want) / std::fabs(want); }

struct PublishedRow {
  double ai, traffic, peak, runtime, actual_gflops, actual_runtime, runtime_change;
};

// Theoretical and measured rows as printed.
const PublishedRow kRows[] = {
    {2.15, 11.101, 32.612, 0.732, 31.625, 0.753, -2.87},
    {2.20, 83.089, 33.37, 5.478, 28.862, 6.346, -15.84},
    {2.25, 174.079, 34.129, 11.477, 28.929, 13.727, -19.60},
};

}  // namespace

TEST(MachinePeak, Products) {
  EXPECT_EQ(machine_peak_gflops(kMachine), 128.0);
  EXPECT_EQ(machine_peak_gflops({1, 1, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(machine_peak_gflops({1, 8, 2.5}), 20.0);
}

TEST(StencilPeak, PublishedRows) {
  EXPECT_NEAR(stencil_peak_gflops({2.15, 0, {}, {}}, kMachine), 32.61, 0.01);
  EXPECT_NEAR(stencil_peak_gflops({2.25, 0, {}, {}}, kMachine), 34.13, 0.01);
  EXPECT_EQ(stencil_peak_gflops({0, 0, {}, {}}, kMachine), 0.0);
  for (const auto& r : kRows) {
    const StencilPerf s{r.ai, r.traffic, {}, {}};
    EXPECT_LT(rel(stencil_peak_gflops(s, kMachine), r.peak), 0.005);
    EXPECT_LT(rel(min_runtime_s(s, kMachine), r.runtime), 0.005);
    EXPECT_TRUE(is_memory_bound(s, kMachine));
  }
}

TEST(MinRuntime, PublishedRows) {
  EXPECT_NEAR(min_runtime_s({0, 11.101, {}, {}}, kMachine), 0.732, 0.001);
  EXPECT_NEAR(min_runtime_s({0, 174.079, {}, {}}, kMachine), 11.477, 0.005);
  EXPECT_EQ(min_runtime_s({0, 0, {}, {}}, kMachine), 0.0);
}

TEST(MinRuntime, DimensionallyConsistent) {
  for (const auto& r : kRows) {
    const StencilPerf s{r.ai, r.traffic, {}, {}};
    EXPECT_NEAR(min_runtime_s(s, kMachine) * kMachine.bandwidth_gbs, r.traffic, 1e-12 * r.traffic);
  }
}

TEST(Roofline, Monotone) {
  const StencilPerf s{2.2, 83.089, {}, {}};
  double last_time = 1e300, last_peak = -1;
  for (double bw = 1; bw < 40; bw += 0.5) {
    const MachineModel m{bw, 32, 4};
    EXPECT_LT(min_runtime_s(s, m), last_time);
    EXPECT_GT(stencil_peak_gflops(s, m), last_peak);
    last_time = min_runtime_s(s, m);
    last_peak = stencil_peak_gflops(s, m);
  }
}

TEST(CompareToPeak, RuntimeChanges) {
  const auto c = compare_to_peak({2.15, 11.101, {}, 0.753}, kMachine);
  ASSERT_TRUE(c.runtime_change_pct);
  // (0.732 - 0.753) / 0.732 with the unrounded bound.
  EXPECT_NEAR(*c.runtime_change_pct, -2.87, 0.05);
  for (const auto& r : kRows) {
    const auto cr = compare_to_peak({r.ai, r.traffic, r.actual_gflops, r.actual_runtime}, kMachine);
    EXPECT_NEAR(*cr.runtime_change_pct, r.runtime_change, 0.05);
  }
}

TEST(CompareToPeak, GflopsChangeRecomputed) {
  // (31.625 - 32.612) / 32.612 = -3.03%, not the printed -2.03%.
  const auto c = compare_to_peak({2.15, 11.101, 31.625, {}}, kMachine);
  ASSERT_TRUE(c.gflops_change_pct);
  EXPECT_NEAR(*c.gflops_change_pct, (31.625 - 2.15 * 15.168) / (2.15 * 15.168) * 100, 1e-9);
  EXPECT_NEAR(*c.gflops_change_pct, -3.03, 0.01);
  EXPECT_FALSE(c.runtime_change_pct);
}

TEST(CompareToPeak, EqualIsZero) {
  const double peak = 2.15 * 15.168;
  const auto c = compare_to_peak({2.15, 11.101, peak, 11.101 / 15.168}, kMachine);
  EXPECT_DOUBLE_EQ(*c.gflops_change_pct, 0.0);
  EXPECT_DOUBLE_EQ(*c.runtime_change_pct, 0.0);
}

TEST(Validate, RejectsBadInputs) {
  EXPECT_THROW(roofline_row({1, 1, {}, {}}, {0, 32, 4}), InvalidArgument);
  EXPECT_THROW(roofline_row({-1, 1, {}, {}}, kMachine), InvalidArgument);
  EXPECT_THROW(roofline_row({1, 1, -3.0, {}}, kMachine), InvalidArgument);
}

TEST(Report, TableAndKeys) {
  std::vector<RooflineRow> rows;
  for (const auto& r : kRows) rows.push_back(roofline_row({r.ai, r.traffic, r.actual_gflops, r.actual_runtime}, kMachine));
  const auto text = format_roofline_report(rows, kMachine);
  EXPECT_NE(text.find("machine_peak_gflops=128.000000"), std::string::npos);
  EXPECT_NE(text.find("row1.stencil_peak_gflops=32.611"), std::string::npos);
  EXPECT_NE(text.find("row3.min_runtime_s=11.47"), std::string::npos);
  EXPECT_NE(text.find("row3.memory_bound=true"), std::string::npos);
  const auto single = format_roofline_report({roofline_row({2.15, 11.101, {}, {}}, kMachine)}, kMachine);
  EXPECT_NE(single.find("\nstencil_peak_gflops=32.611"), std::string::npos);
  EXPECT_EQ(single.find("gflops_change_pct"), std::string::npos);
}
