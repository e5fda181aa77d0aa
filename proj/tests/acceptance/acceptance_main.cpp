// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "support/test_support.hpp"

using namespace timetile;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      out_.pass = false;
      if (!out_.detail.empty()) out_.detail += "; ";
      out_.detail += what;
    }
  }
  void note(const std::string& s) {
    if (out_.pass) out_.detail = out_.detail.empty() ? s : out_.detail + "; " + s;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// 1. Extreme dependences of the space-order-8 wave stencil.
Outcome ac1() {
  Check c;
  const auto t0 = Clock::now();
  const auto deps = extract_dependences(tt_test::sample_spec("awe_so8.stencil"));
  const auto ext = extreme_dependences(deps);
  const std::set<DependenceVector> got(ext.begin(), ext.end());
  const std::set<DependenceVector> want = {{1, 0, 0, 4}, {1, 0, 0, -4}, {1, 0, 4, 0},
                                           {1, 0, -4, 0}, {1, 4, 0, 0}, {1, -4, 0, 0}};
  c.expect(ext.size() == 6 && got == want, "extreme vectors differ");
  const double s = seconds_since(t0);
  c.expect(s < 1.0, "took " + std::to_string(s) + " s");
  c.note(std::to_string(deps.size()) + " deps, 6 extremes");
  return c.result();
}

// 2. Minimal skew factors, minimality by exhaustive search over 0..8.
Outcome ac2() {
  Check c;
  auto band_ok = [](const std::vector<DependenceVector>& deps, std::size_t k, std::int64_t f) {
    return check_tiling_band(skew_dependences(deps, {{k, f}}), {0, k});
  };
  const auto awe = extract_dependences(tt_test::sample_spec("awe_so8.stencil"));
  const auto f = compute_skew_factors(awe, {1, 2, 3});
  for (std::size_t k = 1; k <= 3; ++k) {
    c.expect(f.at(k) == 4, "awe factor for dim " + std::to_string(k) + " is " + std::to_string(f.at(k)));
    for (std::int64_t g = 0; g <= 8; ++g) {
      c.expect(band_ok(awe, k, g) == (g >= f.at(k)), "awe band check disagrees at f=" + std::to_string(g));
    }
  }
  const std::vector<DependenceVector> toy = {{1, 1}, {1, -1}};
  const auto ft = compute_skew_factors(toy, {1}).at(1);
  c.expect(ft == 1, "toy factor is " + std::to_string(ft));
  c.expect(!band_ok(toy, 1, 0), "toy factor 0 passes the band check");
  for (std::int64_t g = 0; g <= 8; ++g) {
    c.expect(band_ok(toy, 1, g) == (g >= ft), "toy band check disagrees at f=" + std::to_string(g));
  }
  c.note("awe 4/4/4, toy 1");
  return c.result();
}

struct RandomSuite {
  int schedule_cases = 0, schedule_agree = 0, schedule_illegal = 0;
  int pipeline_cases = 0, pipeline_accepted = 0, pipeline_agree = 0, pipeline_illegal = 0;
  int preserved = 0;
  double seconds = 0;
  std::string first_disagreement;
};

const RandomSuite& random_suite() {
  static const RandomSuite suite = [] {
    RandomSuite r;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(1234567);
    for (int i = 0; i < 1000; ++i) {
      const auto inst = tt_test::random_schedule_instance(rng);
      const auto res = tt_test::run_schedule_case(inst);
      ++r.schedule_cases;
      r.schedule_agree += res.agree();
      r.schedule_illegal += !res.predicted_legal;
      // Scheduled order always visits the same points.
      auto order = execution_order(inst.domain, inst.schedule, {}).points;
      std::sort(order.begin(), order.end());
      r.preserved += order == enumerate_points(inst.domain, {});
      if (!res.agree() && r.first_disagreement.empty()) r.first_disagreement = "schedule case " + std::to_string(i);
    }
    std::mt19937_64 rng2(7654321);
    while (r.pipeline_accepted < 1000) {
      const auto inst = tt_test::random_pipeline_instance(rng2);
      const auto res = tt_test::run_pipeline_case(inst);
      ++r.pipeline_cases;
      r.preserved += res.points_preserved;
      if (!res.accepted) continue;
      ++r.pipeline_accepted;
      r.pipeline_agree += res.agree();
      r.pipeline_illegal += !res.predicted_legal;
      if (!res.agree() && r.first_disagreement.empty()) r.first_disagreement = tt_test::describe(inst);
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return suite;
}

// 3. Legality verdicts against the oracle on randomized instances.
Outcome ac3() {
  Check c;
  const auto& r = random_suite();
  c.expect(r.schedule_agree == r.schedule_cases, std::to_string(r.schedule_cases - r.schedule_agree) +
                                                     " schedule disagreements (" + r.first_disagreement + ")");
  c.expect(r.pipeline_agree == r.pipeline_accepted, std::to_string(r.pipeline_accepted - r.pipeline_agree) +
                                                        " tiling disagreements (" + r.first_disagreement + ")");
  c.expect(r.schedule_cases + r.pipeline_accepted >= 1000, "too few instances");
  c.expect(r.seconds < 60.0, "took " + std::to_string(r.seconds) + " s");
  std::ostringstream os;
  os << r.schedule_cases << " schedules (" << r.schedule_illegal << " illegal), " << r.pipeline_accepted
     << " tilings (" << r.pipeline_illegal << " illegal), " << (r.pipeline_cases - r.pipeline_accepted)
     << " too small to exhibit a violation, " << std::fixed;
  os.precision(1);
  os << r.seconds << " s";
  c.note(os.str());
  return c.result();
}

// 4. Point-set preservation over the same suite.
Outcome ac4() {
  Check c;
  const auto& r = random_suite();
  const int total = r.schedule_cases + r.pipeline_cases;
  c.expect(r.preserved == total, std::to_string(total - r.preserved) + " pipelines changed the point set");
  c.note(std::to_string(total) + " pipelines, 0 discrepancies");
  return c.result();
}

// 5. Bitwise equality of time-tiled and original orders.
Outcome ac5() {
  Check c;
  auto run = [&](const StencilSpec& s, const TileConfig& cfg, const Bindings& b, const std::string& name) {
    const auto p = time_tile(s, cfg);
    const auto order = execution_order(p, b);
    const Grid init = seeded_grid(s, b, 42);
    const Grid ref = interpret(s, b, execution_order(identity_program(s), b), init);
    Grid got;
    try {
      got = interpret(s, b, order, init);
    } catch (const Error& e) {
      c.expect(false, name + ": " + e.what());
      return;
    }
    c.expect(got == ref, name + ": grids differ");
    const auto rep = verify(s, p, b);
    c.expect(rep.legal() && rep.numeric_equal == true, name + ": verify reports a problem");
  };
  {
    TileConfig cfg;
    cfg.spatial_tile_sizes = {{"x", 8}};
    cfg.time_tile_size = 4;
    run(tt_test::sample_spec("awe_1d.stencil"), cfg, {{"T", 16}, {"N", 64}}, "1-D");
  }
  {
    TileConfig cfg;
    cfg.spatial_tile_sizes = {{"x", 4}, {"y", 4}};
    cfg.time_tile_size = 8;
    // 16^3 interior, time 1..8.
    run(tt_test::sample_spec("awe_so8_buffered.stencil"), cfg,
        {{"time_size", 10}, {"x_size", 24}, {"y_size", 24}, {"z_size", 24}}, "3-D");
  }
  c.note("1-D 64x16 and 3-D 16^3x8 (buffer 8) bitwise equal");
  return c.result();
}

// 6. Time tile bounded by the buffer.
Outcome ac6() {
  Check c;
  const auto s = tt_test::sample_spec("awe_so8_buffered.stencil");
  TileConfig cfg;
  cfg.spatial_tile_sizes = {{"x", 4}, {"y", 4}};
  cfg.time_tile_size = 9;
  bool rejected = false;
  try {
    time_tile(s, cfg);
  } catch (const BufferConstraintError&) {
    rejected = true;
  }
  c.expect(rejected, "time tile 9 with buffer 8 accepted");
  cfg.time_tile_size = 8;
  try {
    const auto p = time_tile(s, cfg);
    const auto rep = verify(s, p, {{"time_size", 12}, {"x_size", 14}, {"y_size", 14}, {"z_size", 12}});
    c.expect(rep.legal() && rep.numeric_equal == true, "time tile 8 does not verify");
  } catch (const Error& e) {
    c.expect(false, std::string("time tile 8 rejected: ") + e.what());
  }
  c.note("9 rejected, 8 legal");
  return c.result();
}

// 7. Roofline rows.
Outcome ac7() {
  Check c;
  const auto t0 = Clock::now();
  const MachineModel m{15.168, 32, 4.0};
  c.expect(machine_peak_gflops(m) == 128.0, "machine peak is not 128");
  struct Row {
    double ai, traffic, peak, runtime;
  };
  const Row rows[] = {{2.15, 11.101, 32.612, 0.732}, {2.20, 83.089, 33.37, 5.478}, {2.25, 174.079, 34.129, 11.477}};
  for (const auto& r : rows) {
    const auto row = roofline_row({r.ai, r.traffic, {}, {}}, m);
    c.expect(std::fabs(row.stencil_peak - r.peak) <= 0.005 * r.peak, "peak " + std::to_string(row.stencil_peak));
    c.expect(std::fabs(row.min_runtime - r.runtime) <= 0.005 * r.runtime, "runtime " + std::to_string(row.min_runtime));
    c.expect(is_memory_bound(row.perf, m), "row not memory bound");
  }
  c.expect(seconds_since(t0) < 1.0, "too slow");
  c.note("3 rows within 0.5%, peak 128");
  return c.result();
}

// 8. CLooG files.
Outcome ac8() {
  Check c;
  for (const char* f : {"cloog/basic_loop.cloog", "cloog/tile_input.cloog"}) {
    try {
      const auto text = tt_test::read_sample(f);
      const auto p = parse_cloog_input(text);
      c.expect(cloog_tokens(write_cloog(p)) == cloog_tokens(text), std::string(f) + " does not round-trip");
    } catch (const Error& e) {
      c.expect(false, std::string(f) + ": " + e.what());
    }
  }
  const auto basic = parse_cloog_input(tt_test::read_sample("cloog/basic_loop.cloog"));
  const auto points = enumerate_points(to_domain(basic, 0), {});
  // Visit set of for (i = 0; i <= 10; i++) for (j = i; j <= 12; j++).
  std::vector<Point> visits;
  for (std::int64_t i = 0; i <= 10; ++i) {
    for (std::int64_t j = i; j <= 12; ++j) visits.push_back({i, j});
  }
  c.expect(points == visits, "basic loop enumerates " + std::to_string(points.size()) + " points, loop visits " +
                                 std::to_string(visits.size()));
  c.note("2 files round-trip, basic loop domain equals its " + std::to_string(visits.size()) + "-point visit set");
  return c.result();
}

// 9. Structure of the time-tiled wave kernel.
Outcome ac9() {
  Check c;
  const auto s = tt_test::sample_spec("awe_so8_buffered.stencil");
  TileConfig cfg;
  cfg.spatial_tile_sizes = {{"x", 16}, {"y", 16}};
  cfg.time_tile_size = 8;
  const auto p = time_tile(s, cfg);
  const auto ast = generate_loop_ast(p);
  c.expect(ast.loop_order() == std::vector<std::string>{"tt", "xx", "yy", "time", "x", "y", "z"}, "loop order");
  const Loop* time = ast.find("time");
  c.expect(time && !time->hoisted.empty() && time->hoisted[0].name == "skew" && !time->hoisted[0].modulus &&
               time->hoisted[0].value == AffineExpr::variable("time", 4),
           "hoisted skew is not 4*time");
  for (const auto& l : ast.loops) {
    c.expect(l.has(LoopPragma::OmpFor) == (l.iterator == "x"), "omp for on " + l.iterator);
    c.expect(l.has(LoopPragma::OmpSimd) == (l.iterator == "z"), "omp simd on " + l.iterator);
  }
  const std::string text = emit_c(ast, {true, true, false, false});
  c.expect(text.find("int skew = 4*time;") != std::string::npos, "emitted text lacks the skew line");
  c.expect(text.find("#pragma omp for schedule(static)") != std::string::npos, "emitted text lacks omp for");
  c.expect(text.find("#pragma omp simd") != std::string::npos, "emitted text lacks omp simd");
  // The loop nest's own order is legal on a bounded instance.
  const Bindings b = {{"time_size", 12}, {"x_size", 44}, {"y_size", 40}, {"z_size", 10}};
  const auto order = execution_order(ast, b);
  const auto rep = verify_order(stencil_domain(s), extract_dependences(s), s.time_buffer, order, b);
  c.expect(rep.legal(), std::to_string(rep.violation_count) + " violations in the generated order");
  c.note(std::to_string(order.points.size()) + " points checked");
  return c.result();
}

// 10. Stack distance under time tiling on the 1-D toy.
Outcome ac10() {
  Check c;
  const auto s = tt_test::sample_spec("awe_1d.stencil");
  const Bindings b = {{"T", 16}, {"N", 64}};
  TileConfig cfg;
  cfg.spatial_tile_sizes = {{"x", 8}};
  cfg.time_tile_size = 4;
  const auto p = time_tile(s, cfg);
  const auto rep = verify(s, p, b);
  c.expect(rep.legal() && rep.numeric_equal == true, "tiled order is not legal");
  const auto base_trace = address_trace(s, b, execution_order(identity_program(s), b));
  const auto m0 = tt_test::brute_force_reuse(base_trace);
  const auto m0_fast = reuse_distance(base_trace);
  c.expect(m0.mean && m0_fast.mean && *m0.mean == *m0_fast.mean, "tracers disagree on the baseline");
  const auto tiled = reuse_distance(s, b, execution_order(p, b));
  c.expect(m0.mean && tiled.mean && *tiled.mean < *m0.mean, "tiled order does not lower the mean distance");
  if (m0.mean && tiled.mean) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "mean %.3f -> %.3f", *m0.mean, *tiled.mean);
    c.note(buf);
  }
  return c.result();
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 dependence extraction", ac1},   {"2 minimal skew factor", ac2},
      {"3 legality vs oracle", ac3},      {"4 iteration-set preservation", ac4},
      {"5 numeric equivalence", ac5},     {"6 buffered time tile", ac6},
      {"7 roofline rows", ac7},           {"8 cloog fidelity", ac8},
      {"9 codegen structure", ac9},       {"10 locality proxy", ac10},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  AC%s  %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
