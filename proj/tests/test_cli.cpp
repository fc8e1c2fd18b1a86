#include "blockfa/experiment.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace blockfa;
namespace fs = std::filesystem;

namespace {

const char* small_run = R"(name = small
kind = convergence
problem = linspace
problem.n = 200
function = sqrt
w = 0
block_size = 1, 2
contour.radius = 4*span
contour.theta = 0.5*pi, 0.75*pi
k_max = 8
k_step = 2
)";

ExperimentConfig small_config() { return ExperimentConfig::from_config(Config::parse(small_run)); }

std::string validation_message(const std::string& text) {
  try {
    ExperimentConfig::from_config(Config::parse(text));
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BLOCKFA_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("blockfa_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = Config::parse(R"(# leading comment
name = demo   # trailing comment
description = "quoted # not a comment"
[contour]
radius = [1, 2, 3]
[grid]
nx = 5
)");
  CHECK(c.get("name") == "demo");
  CHECK(c.get("description") == "quoted # not a comment");
  CHECK(c.get("contour.radius") == "[1, 2, 3]");
  CHECK(c.get("grid.nx") == "5");
  CHECK(c.entries().front().first == "name");
  CHECK_FALSE(c.has("radius"));
  CHECK(c.get_or("missing", "x") == "x");
  try {
    c.get("missing");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find("missing") != std::string::npos);
  }
  Config d = c;
  d.apply_override("contour.radius=7");
  d.apply_override(" seed = 3 ");
  CHECK(d.get("contour.radius") == "7");
  CHECK(d.get("seed") == "3");
  CHECK_THROWS_AS(d.apply_override("novalue"), Error);
  CHECK_THROWS_AS(Config::parse("just words\n"), Error);
}

TEST_CASE("expressions and lists") {
  CHECK(eval_expression("3*pi/4", {{"pi", 3.0}}) == doctest::Approx(2.25));
  CHECK(eval_expression("-2^2") == doctest::Approx(-4));
  CHECK(eval_expression("2^3^2") == doctest::Approx(512));
  CHECK(eval_expression("(1 + 2) * 4 - 1e-1") == doctest::Approx(11.9));
  CHECK(eval_expression("lambda_min/100", {{"lambda_min", 0.5}}) == doctest::Approx(0.005));
  CHECK_THROWS_AS(eval_expression("2 *"), Error);
  CHECK_THROWS_AS(eval_expression("unknown + 1"), Error);
  CHECK_THROWS_AS(eval_expression("(1"), Error);
  CHECK(split_list("[1, 2 ,3]") == std::vector<std::string>{"1", "2", "3"});
  CHECK(split_list("").empty());
  CHECK(split_list("[]").empty());
  CHECK(parse_bool("on"));
  CHECK_FALSE(parse_bool("no"));
  CHECK_THROWS_AS(parse_bool("maybe"), Error);
}

TEST_CASE("experiment validation names the offending key") {
  CHECK(validation_message("name = x\nblock_size = []\n").find("block_size") != std::string::npos);
  CHECK(validation_message("name = x\nblock_size = []\n").find("empty") != std::string::npos);
  CHECK(validation_message("name = x\ncontour.theta =\n").find("contour.theta") != std::string::npos);
  CHECK(validation_message("name = x\nlookahead = ,\n").find("lookahead") != std::string::npos);
  CHECK(validation_message("name = x\ncolour = red\n").find("colour") != std::string::npos);
  CHECK(validation_message("name = x\nkind = nope\n").find("kind") != std::string::npos);
  CHECK(validation_message("name = x\nk_max = -3\n").find("k_max") != std::string::npos);
  CHECK(validation_message("description = no name\n").find("name") != std::string::npos);
  CHECK(validation_message("name = x\n").empty());
  CHECK(validation_message("name = x\ncontour.R = 2\ncontour.radius = 3\n").find("contour.R") != std::string::npos);
  CHECK(ExperimentConfig::from_config(Config::parse("name = x\ncontour.R = 2, 3\n")).radius ==
        std::vector<std::string>{"2", "3"});
  {
    Config c = Config::parse("name = x\ncontour.radius = 3\n");
    c.apply_override("contour.R=5");
    CHECK(ExperimentConfig::from_config(c).radius == std::vector<std::string>{"5"});
    Config d = Config::parse("name = x\ncontour.R = 3\n");
    d.apply_override("contour.radius=6");
    CHECK(ExperimentConfig::from_config(d).radius == std::vector<std::string>{"6"});
  }
}

TEST_CASE("sweep order") {
  const auto c = small_config();
  CHECK(c.sweep_size() == 4);
  const auto pts = sweep_points(c);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].b == 1);
  CHECK(pts[0].theta == "0.5*pi");
  CHECK(pts[1].b == 1);
  CHECK(pts[1].theta == "0.75*pi");
  CHECK(pts[2].b == 2);
  CHECK(pts[3].index == 3);
}

TEST_CASE("presets") {
  const auto& p = presets();
  std::vector<std::string> names;
  for (const auto& x : p) names.push_back(x.name);
  const std::vector<std::string> expect{"fig1", "fig2", "fig3", "fig4", "fig5",
                                        "fig6", "fig7", "fig8", "appendixA", "blocksize"};
  CHECK(names == expect);
  CHECK(find_preset("fig5").description == "bound/error ratio heatmap at k=30");
  CHECK(find_preset("appendixA").description.find("CG") != std::string::npos);
  CHECK_THROWS_AS(find_preset("fig9"), Error);
  for (const auto& x : p) {
    INFO(x.name);
    const auto c = ExperimentConfig::from_config(Config::parse(x.text, x.name));
    CHECK(c.name == x.name);
    CHECK(c.sweep_size() >= 1);
  }
  CHECK(&presets() == &presets());
}

TEST_CASE("small run: columns, sandwich and determinism") {
  const auto c = small_config();
  const auto r1 = run_experiment(c);
  RunOptions two;
  two.jobs = 2;
  const auto r2 = run_experiment(c, two);
  CHECK_FALSE(r1.numerical_failure());
  CHECK(to_csv(r1) == to_csv(r2));
  CHECK(r1.columns == experiment_columns(ExperimentKind::convergence));
  CHECK(r1.columns.front() == "point");
  CHECK(r1.columns.back() == "status");

  const auto col = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(r1.columns.begin(), r1.columns.end(), n) - r1.columns.begin());
  };
  const std::size_t te = col("true_error"), tri = col("triangle_integral"), cb = col("computable_bound"),
                    kk = col("k");
  REQUIRE(r1.points.size() == 4);
  for (const auto& p : r1.points) {
    REQUIRE(p.rows.size() == 4);
    Real last_k = 0;
    for (const auto& row : p.rows) {
      CHECK(row.status == "ok");
      CHECK(*row.values[kk] > last_k);
      last_k = *row.values[kk];
      CHECK(*row.values[te] <= *row.values[tri] * (1 + 1e-6));
      CHECK(*row.values[tri] <= *row.values[cb] * (1 + 1e-6));
    }
  }

  std::istringstream csv(to_csv(r1));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "point,b,reorth,radius,theta,k,true_error,triangle_integral,computable_bound,integral_term,"
                  "linsys_term,quad_error_estimate,fp_extra_term,recurrence_residual,status");

  const auto j = nlohmann::json::parse(to_json(r1));
  CHECK(j["name"] == "small");
  CHECK(j["status"] == "ok");
  CHECK(j["points"].size() == 4);
  CHECK(j.contains("environment"));
  CHECK(to_svg(r1).find("<svg") != std::string::npos);

  const fs::path dir = scratch_dir("outputs");
  const auto written = write_outputs(r1, dir);
  for (const char* f : {"small.csv", "small.json", "small.svg", "small.p0.csv", "small.p3.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(written.size() == 7);
  std::ifstream in(dir / "small.csv");
  std::stringstream all;
  all << in.rdbuf();
  CHECK(all.str() == to_csv(r1));
  fs::remove_all(dir);
}

TEST_CASE("format_real round-trips") {
  for (Real x : {0.1, 1.0 / 3, 1e-300, 123456789.0, -2.5e-7}) CHECK(std::stod(format_real(x)) == x);
  CHECK(format_real(0.5) == "0.5");
}

TEST_CASE("blockfa command line") {
  CHECK(run_cli("list") == 0);
  CHECK(run_cli("check") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("run --preset nope") == 2);
  CHECK(run_cli("run --preset fig3 --set contour.theta=4") == 2);
  const fs::path dir = scratch_dir("cmd");
  CHECK(run_cli("run --preset fig3 --quiet --outdir " + dir.string()) == 0);
  CHECK(fs::exists(dir / "fig3.csv"));

  std::ofstream(dir / "bad.toml") << "name = bad\nblock_size = []\n";
  CHECK(run_cli("run --config " + (dir / "bad.toml").string()) == 2);
  // sqrt of an indefinite matrix fails at every k: a numerical failure.
  std::ofstream(dir / "indef.toml") << "name = indef\nproblem = indefinite\nproblem.n = 100\nfunction = sqrt\n"
                                       "k_max = 3\nblock_size = 1\nw = -2\n";
  CHECK(run_cli("run --quiet --outdir " + dir.string() + " --config " + (dir / "indef.toml").string()) == 3);
  fs::remove_all(dir);
}
