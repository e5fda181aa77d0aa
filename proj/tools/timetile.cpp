// timetile command-line driver.
//
// Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
// 3 parse error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "timetile/timetile.hpp"

namespace {

using namespace timetile;

constexpr int kOk = 0;
constexpr int kVerifyFailed = 1;
constexpr int kBadConfig = 2;
constexpr int kParseError = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

StencilSpec load_spec(const std::string& path) {
  try {
    return parse_stencil_spec(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

// "x=16,y=16" -> {x:16, y:16}
SizeMap parse_assignments(const std::vector<std::string>& items, const std::string& flag) {
  SizeMap out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError(flag + ": expected name=value, got '" + item + "'");
    const std::string name = item.substr(0, eq), value = item.substr(eq + 1);
    std::int64_t v = 0;
    try {
      std::size_t used = 0;
      v = std::stoll(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError(flag + ": '" + value + "' is not an integer");
    }
    if (!out.emplace(name, v).second) throw ConfigError(flag + ": '" + name + "' given twice");
  }
  return out;
}

struct TransformFlags {
  std::vector<std::string> tile;
  std::vector<std::string> skew;
  std::optional<std::int64_t> time_tile;

  bool any() const { return !tile.empty() || !skew.empty() || time_tile; }

  TileConfig config() const {
    TileConfig cfg;
    cfg.spatial_tile_sizes = parse_assignments(tile, "--tile");
    cfg.time_tile_size = time_tile;
    if (!skew.empty()) cfg.skew_factors = parse_assignments(skew, "--skew");
    return cfg;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--tile", tile, "Spatial tile sizes, e.g. x=16,y=16")->delimiter(',');
    cmd->add_option("--time-tile", time_tile, "Time tile size");
    cmd->add_option("--skew", skew, "Skew factor overrides, e.g. x=4 (default: minimal legal factors)")->delimiter(',');
  }
};

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
  return s;
}

int run_analyze(const std::string& spec_path) {
  const StencilSpec spec = load_spec(spec_path);
  const auto deps = extract_dependences(spec);
  std::cout << "dimensions: " << join(spec.dims, ", ") << "\n";
  if (deps.empty()) {
    std::cout << "0 dependences; tiling trivially legal\n";
    return kOk;
  }
  std::cout << deps.size() << " dependences\n";
  std::cout << "extreme dependences:\n";
  for (const auto& d : extreme_dependences(deps)) std::cout << "  " << to_string(d) << "\n";
  std::vector<std::size_t> spatial;
  for (std::size_t k = 1; k < spec.rank(); ++k) spatial.push_back(k);
  const auto factors = compute_skew_factors(deps, spatial);
  std::cout << "skew:";
  for (const auto& [k, f] : factors) std::cout << " " << spec.dims[k] << "=" << f;
  std::cout << "\n";
  const auto skewed = skew_dependences(deps, factors);
  auto report = [&](const std::vector<std::size_t>& band) {
    std::vector<std::string> names;
    for (const auto k : band) names.push_back(spec.dims[k]);
    std::cout << "band (" << join(names, ", ") << "): "
              << (check_tiling_band(deps, band) ? "legal" : "illegal") << " unskewed, "
              << (check_tiling_band(skewed, band) ? "legal" : "illegal") << " skewed\n";
  };
  std::vector<std::size_t> all = {0};
  for (const auto k : spatial) {
    report({0, k});
    if (!spec.vectorized || *spec.vectorized != spec.dims[k]) all.push_back(k);
  }
  if (all.size() > 2) report(all);
  if (spec.time_buffer) {
    const auto anti = skew_dependences(buffer_anti_dependences(spec), factors);
    std::cout << "time buffer " << *spec.time_buffer << ": time tile must not exceed " << *spec.time_buffer
              << "; buffer reuse " << (check_tiling_band(anti, all) ? "compatible" : "incompatible")
              << " with skewed tiling\n";
  }
  return kOk;
}

TransformedProgram build(const StencilSpec& spec, const TransformFlags& flags, bool checked) {
  if (!flags.any()) return identity_program(spec);
  return checked ? time_tile(spec, flags.config()) : build_time_tiled(spec, flags.config());
}

int run_codegen(const std::string& spec_path, const TransformFlags& flags, const EmitOptions& opts,
                const std::string& out) {
  const StencilSpec spec = load_spec(spec_path);
  const auto program = build(spec, flags, true);
  write_output(out, emit_c(generate_loop_ast(program), opts));
  return kOk;
}

Bindings parse_params(const StencilSpec& spec, const std::vector<std::string>& items) {
  Bindings b;
  for (const auto& [name, v] : parse_assignments(items, "--params")) {
    if (std::find(spec.params.begin(), spec.params.end(), name) == spec.params.end()) {
      throw ConfigError("--params: '" + name + "' is not a parameter of the stencil");
    }
    b[name] = v;
  }
  for (const auto& p : spec.params) {
    if (!b.count(p)) throw ConfigError("--params: missing value for '" + p + "'");
  }
  return b;
}

int run_verify(const std::string& spec_path, const TransformFlags& flags, const std::vector<std::string>& param_items,
               const std::string& reference, double atol, const std::string& dump) {
  const StencilSpec spec = load_spec(spec_path);
  const Bindings params = parse_params(spec, param_items);
  const auto program = build(spec, flags, false);
  const auto report = verify(spec, program, params);
  const auto order = execution_order(program, params);
  std::cout << "points: " << order.points.size() << "\n";
  std::cout << "permutation: " << (report.is_permutation ? "yes" : "no") << "\n";
  for (const auto& p : report.missing) {
    std::cout << "missing point " << to_string(p) << "\n";
  }
  for (const auto& p : report.extra) {
    std::cout << "extra point " << to_string(p) << "\n";
  }
  std::cout << report.violation_count << " violations\n";
  if (!report.violations.empty()) {
    const auto& v = report.violations.front();
    std::cout << "first violation: " << (v.kind == Violation::Kind::Flow ? "flow dependence " : "buffer overwrite ")
              << to_string(v.dependence) << ": " << to_string(v.source) << " must run before " << to_string(v.sink)
              << "\n";
  }
  bool ok = report.legal();
  if (report.numeric_equal) {
    std::cout << "numeric: " << (*report.numeric_equal ? "bitwise equal" : "MISMATCH") << "\n";
    if (!report.numeric_note.empty()) std::cout << "  " << report.numeric_note << "\n";
    ok = ok && *report.numeric_equal;
  }
  if (!reference.empty() || !dump.empty()) {
    Grid result;
    try {
      result = interpret(spec, params, order, seeded_grid(spec, params, VerifyOptions{}.seed));
    } catch (const UninitializedReadError& e) {
      std::cout << "interpretation failed: " << e.what() << "\n";
      return kVerifyFailed;
    }
    if (!dump.empty()) {
      std::ofstream out(dump, std::ios::binary);
      if (!out) throw ConfigError("cannot write '" + dump + "'");
      write_grid(out, result);
    }
    if (!reference.empty()) {
      std::ifstream in(reference, std::ios::binary);
      if (!in) throw ConfigError("cannot open '" + reference + "'");
      const bool close = grids_close(result, read_grid(in), atol);
      std::cout << "reference (atol " << atol << "): " << (close ? "match" : "MISMATCH") << "\n";
      ok = ok && close;
    }
  }
  std::cout << (ok ? "verified" : "FAILED") << "\n";
  return ok ? kOk : kVerifyFailed;
}

int run_roofline(const MachineModel& m, const StencilPerf& s) {
  std::cout << format_roofline_report({roofline_row(s, m)}, m);
  return kOk;
}

int run_cloog_roundtrip(const std::string& path, const std::string& out) {
  const std::string text = read_file(path);
  const std::string written = write_cloog(parse_cloog_input(text));
  write_output(out, written);
  const bool same = cloog_tokens(text) == cloog_tokens(written);
  std::cerr << (same ? "round-trip: identical modulo comments and whitespace\n" : "round-trip: tokens differ\n");
  return same ? kOk : kVerifyFailed;
}

int run_cloog_codegen(const std::string& path, const EmitOptions& opts, const std::string& out) {
  const CloogProblem problem = parse_cloog_input(read_file(path));
  if (problem.statements.size() != 1) throw ConfigError("code generation supports exactly one statement");
  write_output(out, emit_c(generate_loop_ast(to_program(problem, 0)), opts));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polyhedral time-tiling toolkit for uniform-dependence stencils"};
  app.require_subcommand(1);

  std::string spec_path, out_path, cloog_path, reference, dump;
  TransformFlags flags;
  EmitOptions emit;
  std::vector<std::string> params;
  double atol = 1e-6;
  MachineModel machine{15.168, 32, 4.0};
  StencilPerf perf;
  std::optional<double> actual_gflops, actual_runtime;

  auto* analyze = app.add_subcommand("analyze", "Dependences, minimal skew factors and band legality");
  analyze->add_option("spec", spec_path, "Stencil spec file")->required();

  auto* codegen = app.add_subcommand("codegen", "Emit the (time-)tiled loop nest as C");
  codegen->add_option("spec", spec_path, "Stencil spec file")->required();
  flags.add_to(codegen);
  codegen->add_flag("--omp", emit.omp, "OpenMP parallel region on the outermost parallel point loop");
  codegen->add_flag("--simd", emit.simd, "ivdep/omp simd on the vectorized loop");
  codegen->add_flag("--denormals", emit.denormals, "Flush denormals to zero");
  codegen->add_flag("--compilable", emit.compilable_wrapper, "Emit a complete C file with helper macros");
  codegen->add_option("-o,--output", out_path, "Output file (default stdout)");

  auto* verify_cmd = app.add_subcommand("verify", "Check a transformation on a bounded instance");
  verify_cmd->add_option("spec", spec_path, "Stencil spec file")->required();
  flags.add_to(verify_cmd);
  verify_cmd->add_option("--params", params, "Parameter values, e.g. time_size=10,x_size=24")->delimiter(',');
  verify_cmd->add_option("--reference", reference, "Grid file to compare the final grid against");
  verify_cmd->add_option("--atol", atol, "Absolute tolerance for --reference")->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--dump-grid", dump, "Write the final grid to this file");

  auto* roofline = app.add_subcommand("roofline", "Roofline bounds and deviation of measured results");
  roofline->add_option("--ai", perf.arithmetic_intensity, "Arithmetic intensity (flop/byte)")->required();
  roofline->add_option("--traffic", perf.memory_traffic_gb, "Memory traffic (GB)")->required();
  roofline->add_option("--bw", machine.bandwidth_gbs, "Memory bandwidth (GB/s)")->capture_default_str();
  roofline->add_option("--flops-per-cycle", machine.flops_per_cycle, "Peak flops per cycle")->capture_default_str();
  roofline->add_option("--clock", machine.clock_ghz, "Clock (GHz)")->capture_default_str();
  roofline->add_option("--actual-gflops", actual_gflops, "Measured GFLOPS");
  roofline->add_option("--actual-runtime", actual_runtime, "Measured runtime (s)");

  auto* roundtrip = app.add_subcommand("cloog-roundtrip", "Parse and re-emit a .cloog file");
  roundtrip->add_option("file", cloog_path, ".cloog input")->required();
  roundtrip->add_option("-o,--output", out_path, "Output file (default stdout)");

  auto* cloog_codegen = app.add_subcommand("cloog-codegen", "Generate C loops from a .cloog file");
  cloog_codegen->add_option("file", cloog_path, ".cloog input")->required();
  cloog_codegen->add_flag("--compilable", emit.compilable_wrapper, "Emit a complete C file with helper macros");
  cloog_codegen->add_option("-o,--output", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadConfig;
  }

  try {
    if (*analyze) return run_analyze(spec_path);
    if (*codegen) return run_codegen(spec_path, flags, emit, out_path);
    if (*verify_cmd) return run_verify(spec_path, flags, params, reference, atol, dump);
    if (*roofline) {
      perf.actual_gflops = actual_gflops;
      perf.actual_runtime_s = actual_runtime;
      return run_roofline(machine, perf);
    }
    if (*roundtrip) return run_cloog_roundtrip(cloog_path, out_path);
    if (*cloog_codegen) return run_cloog_codegen(cloog_path, emit, out_path);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const BufferConstraintError& e) {
    std::cerr << "buffer constraint: " << e.what() << "\n";
    return kBadConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadConfig;
  }
  return kBadConfig;
}
