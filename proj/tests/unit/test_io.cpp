#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "klgeo/config.hpp"
#include "klgeo/output.hpp"
#include "klgeo/svg.hpp"
#include "json.hpp"

using namespace klgeo;

TEST_CASE("config parse and serialize round trip") {
  RunConfig cfg = parse_config(
      "# comment\n"
      "seeds = 1..3, 9\n"
      "lambdas = 0.5, 2, 50\n"
      "order = full\n"
      "ascent.steps = 12\n"
      "tolerance = 1e-8\n");
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 9});
  CHECK(cfg.lambdas == std::vector<double>{0.5, 2, 50});
  CHECK(cfg.order == FamilyOrder::full);
  CHECK(cfg.ascent.steps == 12);
  REQUIRE(cfg.tolerance.has_value());
  CHECK(*cfg.tolerance == 1e-8);
  CHECK(parse_config(serialize_config(cfg)) == cfg);
  CHECK(parse_config(serialize_config(RunConfig{})) == RunConfig{});
}

TEST_CASE("config errors carry positions") {
  try {
    parse_config("seeds = 1\n  bogus_key = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
  }
  CHECK_THROWS_AS(parse_config("sigma = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lambdas = 5, 1\n").validate(), ConfigError);
  CHECK_THROWS_AS(parse_double_list("1, x"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("3..1"), ConfigError);
}

TEST_CASE("csv quoting round trip") {
  CsvTable t;
  t.header = {"a", "b"};
  t.rows = {{"x,y", "plain"}, {"say \"hi\"", ""}};
  std::string text = to_csv(t, Provenance{"test", {1}});
  CHECK(text.rfind("# klgeo 0.1.0", 0) == 0);
  CsvTable back = parse_csv(text);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK_THROWS(t.column("missing"));
}

TEST_CASE("sweep table round trips bitwise") {
  SeedSummary s;
  s.seed = 4;
  s.labels = {"(0)", "(1)"};
  SweepRecord r;
  r.lambda = 0.1;
  r.beta = 10.000000000000002;
  r.validity = 1.0 / 3.0;
  r.tvd_to_pstar = 2.0 / 7.0;
  r.fkl_from_pstar = ExtendedReal::infinity();
  r.rkl_to_tilted = ExtendedReal::finite(1e-300);
  r.entropy = 0.6931471805599453;
  r.j_beta_value = -0.125;
  r.log_partition = 3.3;
  r.top_sequences = {{"(1)", 1, 0.75}, {"(0)", 0, 0.25}};
  s.records.push_back(r);
  auto table = sweep_table({s});
  auto back = read_sweep_records(parse_csv(to_csv(table, Provenance{"sweep", {4}})));
  REQUIRE(back.size() == 1);
  CHECK(back[0].lambda == r.lambda);
  CHECK(back[0].beta == r.beta);
  CHECK(back[0].validity == r.validity);
  CHECK(back[0].tvd_to_pstar == r.tvd_to_pstar);
  CHECK(back[0].fkl_from_pstar.is_infinite());
  CHECK(back[0].rkl_to_tilted.value() == 1e-300);
  CHECK(back[0].entropy == r.entropy);
  CHECK(back[0].top_sequences.size() == 2);
  CHECK(back[0].top_sequences[0].probability == 0.75);
  CHECK(table.rows[0][table.column("fkl_from_pstar")] == "inf");
}

TEST_CASE("json writes infinity as a string") {
  auto rows = beta_mu_table({0.9}, {0.9});
  CHECK(betamu_csv(rows).rows[0][3] == "inf");
  MultiSeedSummary m;
  SeedSummary s;
  s.seed = 1;
  s.labels.resize(1);
  SweepRecord r;
  r.lambda = 1.0;
  r.beta = 1.0;
  r.fkl_from_pstar = ExtendedReal::infinity();
  r.rkl_to_tilted = ExtendedReal::finite(0.0);
  s.records.push_back(r);
  m.seeds.push_back(s);
  LambdaAggregate agg;
  agg.lambda = 1.0;
  agg.fkl_from_pstar.mean = std::numeric_limits<double>::infinity();
  m.per_lambda.push_back(agg);
  auto j = nlohmann::json::parse(sweep_summary_json(m, Provenance{"sweep", {1}}));
  CHECK(j["per_lambda"][0]["fkl_from_pstar"]["mean"] == "inf");
}

TEST_CASE("unwritable path raises IoError") {
  auto dir = std::filesystem::temp_directory_path() / "klgeo_unit_io";
  std::filesystem::create_directories(dir);
  write_text_file((dir / "blocker").string(), "x");
  CHECK_THROWS_AS(ensure_directory((dir / "blocker" / "sub").string()), IoError);
  CHECK_THROWS_AS(read_text_file((dir / "missing.txt").string()), IoError);
}

TEST_CASE("svg rendering") {
  SvgOptions opt;
  opt.title = "t";
  std::vector<SvgSeries> two = {{"s", {1.0, 2.0}, {0.1, 0.2}}};
  std::string a = render_svg(two, opt);
  CHECK(a == render_svg(two, opt));
  std::size_t count = 0;
  for (std::size_t p = a.find("<polyline"); p != std::string::npos; p = a.find("<polyline", p + 1))
    ++count;
  CHECK(count == 1);
  std::vector<SvgSeries> with_inf = {
      {"s", {1.0, 2.0, 3.0}, {0.1, std::numeric_limits<double>::infinity(), 0.3}}};
  CHECK(render_svg(with_inf, opt).find("omitted") != std::string::npos);
  CHECK_THROWS_AS(render_svg({{"s", {1.0}, {1.0, 2.0}}}, opt), StructuralError);
  CHECK_THROWS_AS(render_svg({}, opt), StructuralError);
}
