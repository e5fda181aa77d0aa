#pragma once

// Roofline arithmetic: machine peak, bandwidth-bound stencil peak, minimum
// runtime from memory traffic, and deviation of measured results from them.

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "timetile/error.hpp"

namespace timetile {

struct MachineModel {
  double bandwidth_gbs = 0;  // GB/s, GB = 1e9 bytes
  double flops_per_cycle = 0;
  double clock_ghz = 0;
};

struct StencilPerf {
  double arithmetic_intensity = 0;  // flop/byte
  double memory_traffic_gb = 0;
  std::optional<double> actual_gflops;
  std::optional<double> actual_runtime_s;
};

inline void validate(const MachineModel& m) {
  if (!(m.bandwidth_gbs > 0) || !(m.flops_per_cycle > 0) || !(m.clock_ghz > 0)) {
    throw InvalidArgument("machine bandwidth, flops per cycle and clock must be positive");
  }
}

inline void validate(const StencilPerf& s) {
  if (!(s.arithmetic_intensity >= 0) || !(s.memory_traffic_gb >= 0)) {
    throw InvalidArgument("arithmetic intensity and memory traffic must be nonnegative");
  }
  if ((s.actual_gflops && !(*s.actual_gflops >= 0)) || (s.actual_runtime_s && !(*s.actual_runtime_s >= 0))) {
    throw InvalidArgument("measured values must be nonnegative");
  }
}

inline double machine_peak_gflops(const MachineModel& m) { return m.flops_per_cycle * m.clock_ghz; }

inline double stencil_peak_gflops(const StencilPerf& s, const MachineModel& m) {
  return s.arithmetic_intensity * m.bandwidth_gbs;
}

inline double min_runtime_s(const StencilPerf& s, const MachineModel& m) {
  if (!(m.bandwidth_gbs > 0)) throw InvalidArgument("bandwidth must be positive");
  return s.memory_traffic_gb / m.bandwidth_gbs;
}

inline bool is_memory_bound(const StencilPerf& s, const MachineModel& m) {
  return stencil_peak_gflops(s, m) < machine_peak_gflops(m);
}

// Percent changes relative to the roofline bound; negative means worse.
struct PeakComparison {
  std::optional<double> gflops_change_pct;   // (actual - peak) / peak * 100
  std::optional<double> runtime_change_pct;  // (peak - actual) / peak * 100
};

inline PeakComparison compare_to_peak(const StencilPerf& s, const MachineModel& m) {
  PeakComparison c;
  const double peak = stencil_peak_gflops(s, m);
  const double fastest = min_runtime_s(s, m);
  if (s.actual_gflops && peak > 0) c.gflops_change_pct = (*s.actual_gflops - peak) / peak * 100.0;
  if (s.actual_runtime_s && fastest > 0) c.runtime_change_pct = (fastest - *s.actual_runtime_s) / fastest * 100.0;
  return c;
}

struct RooflineRow {
  StencilPerf perf;
  double stencil_peak = 0;
  double min_runtime = 0;
  PeakComparison change;
};

inline RooflineRow roofline_row(const StencilPerf& s, const MachineModel& m) {
  validate(m);
  validate(s);
  return {s, stencil_peak_gflops(s, m), min_runtime_s(s, m), compare_to_peak(s, m)};
}

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

// Aligned table followed by key=value lines (one block per row).
inline std::string format_roofline_report(const std::vector<RooflineRow>& rows, const MachineModel& m) {
  std::ostringstream os;
  char line[256];
  os << "machine peak: " << detail::fixed(machine_peak_gflops(m), 3) << " GFLOPS, bandwidth "
     << detail::fixed(m.bandwidth_gbs, 3) << " GB/s\n";
  std::snprintf(line, sizeof line, "%10s %12s %14s %12s %14s %12s %12s %14s\n", "AI", "traffic_GB", "peak_GFLOPS",
                "min_time_s", "actual_GFLOPS", "change_%", "actual_s", "change_%");
  os << line;
  auto opt = [](const std::optional<double>& v, int digits) { return v ? detail::fixed(*v, digits) : std::string("-"); };
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%10s %12s %14s %12s %14s %12s %12s %14s\n",
                  detail::fixed(r.perf.arithmetic_intensity, 3).c_str(), detail::fixed(r.perf.memory_traffic_gb, 3).c_str(),
                  detail::fixed(r.stencil_peak, 3).c_str(), detail::fixed(r.min_runtime, 3).c_str(),
                  opt(r.perf.actual_gflops, 3).c_str(), opt(r.change.gflops_change_pct, 2).c_str(),
                  opt(r.perf.actual_runtime_s, 3).c_str(), opt(r.change.runtime_change_pct, 2).c_str());
    os << line;
  }
  os << "machine_peak_gflops=" << detail::fixed(machine_peak_gflops(m), 6) << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::string p = rows.size() > 1 ? "row" + std::to_string(i + 1) + "." : "";
    os << p << "stencil_peak_gflops=" << detail::fixed(r.stencil_peak, 6) << '\n';
    os << p << "min_runtime_s=" << detail::fixed(r.min_runtime, 6) << '\n';
    os << p << "memory_bound=" << (r.stencil_peak < machine_peak_gflops(m) ? "true" : "false") << '\n';
    if (r.change.gflops_change_pct) os << p << "gflops_change_pct=" << detail::fixed(*r.change.gflops_change_pct, 6) << '\n';
    if (r.change.runtime_change_pct) os << p << "runtime_change_pct=" << detail::fixed(*r.change.runtime_change_pct, 6) << '\n';
  }
  return os.str();
}

}  // namespace timetile
