#include <gtest/gtest.h>

#include <algorithm>

#include "support/test_support.hpp"

using namespace timetile;
using tt_test::read_sample;

TEST(ParseCloog, BasicLoop) {
  const auto p = parse_cloog_input(read_sample("cloog/basic_loop.cloog"));
  EXPECT_EQ(p.language, "c");
  EXPECT_FALSE(p.context);
  ASSERT_EQ(p.statements.size(), 1u);
  EXPECT_EQ(p.statements[0].domain.rows, 4u);
  EXPECT_EQ(p.statements[0].domain.cols, 4u);
  EXPECT_EQ(p.statements[0].domain.data[2], (std::vector<std::int64_t>{1, -1, 1, 0}));
  EXPECT_TRUE(p.scatterings.empty());
  EXPECT_FALSE(p.iterator_names);

  const Domain d = to_domain(p, 0);
  EXPECT_EQ(d.iterators(), (std::vector<std::string>{"i", "j"}));
  std::vector<std::string> cs;
  for (const auto& c : d.constraints()) cs.push_back(to_string(c, d.variables()));
  EXPECT_EQ(cs, (std::vector<std::string>{"i >= 0", "-i+10 >= 0", "-i+j >= 0", "-j+12 >= 0"}));
  // The visit set of the loop the file describes.
  std::vector<Point> visits;
  for (std::int64_t i = 0; i <= 10; ++i) {
    for (std::int64_t j = i; j <= 12; ++j) visits.push_back({i, j});
  }
  EXPECT_EQ(visits.size(), 88u);
  EXPECT_EQ(enumerate_points(d, {}), visits);
  EXPECT_EQ(enumerate_points(d, {}), tt_test::brute_force_points(d, {}, {-2, -2}, {15, 15}));
}

TEST(ParseCloog, TileInput) {
  const auto p = parse_cloog_input(read_sample("cloog/tile_input.cloog"));
  ASSERT_TRUE(p.context);
  EXPECT_EQ(p.context->rows, 4u);
  EXPECT_EQ(p.context->cols, 6u);
  EXPECT_EQ(p.parameter_count(), 4u);
  EXPECT_EQ(*p.parameter_names, (std::vector<std::string>{"time_size", "ub", "lb", "ts"}));
  ASSERT_EQ(p.statements.size(), 1u);
  EXPECT_EQ(p.statements[0].domain.rows, 14u);
  EXPECT_EQ(p.statements[0].domain.cols, 13u);
  ASSERT_EQ(p.scatterings.size(), 1u);
  EXPECT_EQ(p.scatterings[0].rows, 7u);
  EXPECT_EQ(p.scatterings[0].cols, 20u);
  EXPECT_FALSE(p.iterator_names);
  EXPECT_EQ(*p.scattering_names, (std::vector<std::string>{"tt", "xx", "yy", "time", "x", "y", "z"}));

  const Domain d = to_domain(p, 0);
  const auto vars = d.variables();
  EXPECT_EQ(to_string(d.constraints()[0], vars), "-8*i+j >= 0");
}

TEST(ParseCloog, TileInputProgramMatchesTimeTiledAwe) {
  const auto raw = parse_cloog_input(read_sample("cloog/tile_input.cloog"));
  const auto prog = to_program(raw, 0);
  EXPECT_EQ(prog.domain.iterators(), (std::vector<std::string>{"tt", "xx", "yy", "time", "x", "y", "z"}));
  EXPECT_EQ(prog.domain.parameters(), (std::vector<std::string>{"time_size"}));
  EXPECT_EQ(prog.original.parameters(), (std::vector<std::string>{"time_size"}));

  // The same iteration points as the library's own time-tiled AWE nest with
  // 16x16 spatial tiles, time tile 8 and skew 4 (ub = 276 and lb = 4 leave
  // 268 interior points per axis). Compared on the first xx, yy tile.
  const auto spec = tt_test::sample_spec("awe_so8_buffered.stencil");
  TileConfig cfg;
  cfg.spatial_tile_sizes = {{"x", 16}, {"y", 16}};
  cfg.time_tile_size = 8;
  const auto ours = time_tile(spec, cfg);
  const Bindings theirs_b = {{"time_size", 5}};
  const Bindings ours_b = {{"time_size", 5}, {"x_size", 276}, {"y_size", 276}, {"z_size", 276}};
  const std::vector<Constraint> first_tile = {Constraint::eq(AffineExpr::variable("xx"), AffineExpr(0)),
                                              Constraint::eq(AffineExpr::variable("yy"), AffineExpr(0))};
  const auto a = enumerate_points(prog.domain.with_constraints(first_tile), theirs_b);
  const auto b = enumerate_points(ours.domain.with_constraints(first_tile), ours_b);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  const std::vector<Constraint> last_tile = {Constraint::eq(AffineExpr::variable("xx"), AffineExpr(17)),
                                             Constraint::eq(AffineExpr::variable("yy"), AffineExpr(16))};
  EXPECT_EQ(enumerate_points(prog.domain.with_constraints(last_tile), theirs_b),
            enumerate_points(ours.domain.with_constraints(last_tile), ours_b));
}

TEST(ParseCloog, EmptyProblem) {
  const auto p = parse_cloog_input("c\n0\n0\n");
  EXPECT_TRUE(p.statements.empty());
  EXPECT_EQ(cloog_tokens(write_cloog(p)), cloog_tokens("c\n0\n0\n"));
}

TEST(ParseCloog, Errors) {
  auto line_of = [](const char* text) -> std::size_t {
    try {
      parse_cloog_input(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 9999;
  };
  // A truncated matrix is reported at the last line read.
  EXPECT_EQ(line_of("c\n0\n1\n2 4\n1 1 0 0\n"), 5u);
  EXPECT_EQ(line_of("c\n0\n1\n1 3\n2 1 0\n0 0 0\n"), 5u);
  EXPECT_EQ(line_of("c\n0\n1\n1 3\n1 x 0\n0 0 0\n"), 5u);
  EXPECT_EQ(line_of("c\n0\n1\n1 3\n1 1 0\n0 0 0\n0\n1\n1 3\n0 1 0\n"), 9u);
  EXPECT_THROW(parse_cloog_input(""), ParseError);
}

TEST(WriteCloog, RoundTripsSampleFiles) {
  for (const char* f : {"cloog/basic_loop.cloog", "cloog/tile_input.cloog"}) {
    const auto text = read_sample(f);
    const auto p = parse_cloog_input(text);
    const auto again = write_cloog(p);
    EXPECT_EQ(cloog_tokens(again), cloog_tokens(text)) << f;
    EXPECT_EQ(parse_cloog_input(again), p) << f;
  }
}

TEST(ToDomain, TileRowMeaning) {
  const auto p = parse_cloog_input(read_sample("cloog/tile_input.cloog"));
  const auto row = p.statements[0].domain.data[0];
  EXPECT_EQ(row, (std::vector<std::int64_t>{1, -8, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}));
  // Column 1 is tt, column 2 is t: t - 8*tt >= 0.
  const auto cs = detail::rows_to_constraints({1, 13, {row}}, {"tt", "t", "xx", "yy", "x", "y", "z", "tb", "ub", "lb", "ts"});
  EXPECT_EQ(to_string(cs[0], {"tt", "t"}), "-8*tt+t >= 0");
}

TEST(FromTransformed, IdentityScatteringShape) {
  TransformedProgram p;
  p.original = Domain({"i"}, {"N"}, {Constraint::ge(AffineExpr::variable("i"), AffineExpr(0)),
                                     Constraint::le(AffineExpr::variable("i"), AffineExpr::variable("N"))});
  p.domain = p.original;
  p.schedule = Schedule::identity({"i"});
  p.body_translation = {AffineExpr::variable("i")};
  const auto c = from_transformed(p);
  ASSERT_EQ(c.scatterings.size(), 1u);
  EXPECT_EQ(c.scatterings[0].rows, 1u);
  EXPECT_EQ(c.scatterings[0].cols, 1u + 1u + 1u + 1u + 1u);
  const auto back = parse_cloog_input(write_cloog(c));
  EXPECT_EQ(back, c);
}

TEST(FromTransformed, TimeTiledProgramSurvivesRoundTrip) {
  const auto spec = tt_test::sample_spec("awe_1d.stencil");
  TileConfig cfg;
  cfg.spatial_tile_sizes = {{"x", 4}};
  cfg.time_tile_size = 3;
  const auto prog = time_tile(spec, cfg);
  const auto cloog = from_transformed(prog);
  const auto back = to_program(parse_cloog_input(write_cloog(cloog)), 0);
  EXPECT_EQ(back.domain.iterators(), prog.domain.iterators());
  const Bindings b = {{"T", 7}, {"N", 10}};
  EXPECT_EQ(enumerate_points(back.domain, b), enumerate_points(prog.domain, b));
  // The file keeps the tiled space only: statement instances come back in
  // declaration-order coordinates, visited in the same loop order.
  std::vector<Point> expect;
  const auto& loops = prog.domain.iterators();
  for (const auto& q : enumerate_points(prog.domain, b)) {
    Point r;
    for (const auto& name : prog.declaration_order) {
      r.push_back(q[static_cast<std::size_t>(std::find(loops.begin(), loops.end(), name) - loops.begin())]);
    }
    expect.push_back(r);
  }
  EXPECT_EQ(execution_order(back, b).points, expect);
}

TEST(ToProgram, RejectsNonPermutationScattering) {
  const char* text =
      "c\n0\n1\n2 4\n1 1 0 0\n1 -1 0 5\n0 0 0\n0\n1\n2 6\n0 1 0 -1 0 0\n0 0 1 -2 -1 0\n0\n";
  const auto p = parse_cloog_input(text);
  EXPECT_THROW(to_program(p, 0), InvalidArgument);
}
