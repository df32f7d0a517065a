#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>

#include "bergman/error.hpp"
#include "experiment.hpp"

using namespace bergman;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("bergman_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("radii table") {
  cli::ExperimentConfig c;
  c.n_radii = 10;
  c.out = scratch("radii").string();
  REQUIRE(cli::run("radii", c) == 0);
  std::ifstream in(fs::path(c.out) / "radii.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("n,r", 0) == 0);
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string n, r;
    std::getline(ls, n, ',');
    std::getline(ls, r, ',');
    CHECK(std::stod(r) == doctest::Approx(1 - std::ldexp(1.0, -std::stoi(n))).epsilon(1e-15));
    ++rows;
  }
  CHECK(rows == 11);
}

TEST_CASE("summaries are deterministic and echo the config") {
  cli::ExperimentConfig c;
  c.n_radii = 10;
  c.generate = "lattice(spacing=8, stride=1)";
  c.m_max = 6;
  c.out = scratch("det_a").string();
  REQUIRE(cli::run("density", c) == 0);
  const auto a = slurp(fs::path(c.out) / "density.json");
  c.out = scratch("det_b").string();
  REQUIRE(cli::run("density", c) == 0);
  auto b = slurp(fs::path(c.out) / "density.json");
  // Only the echoed output directory differs.
  const auto pos = b.find("det_b");
  REQUIRE(pos != std::string::npos);
  b.replace(pos, 5, "det_a");
  CHECK(a == b);

  const auto j = cli::Json::parse(a);
  CHECK(j["schema_version"] == 1);
  CHECK(j["config"]["n_radii"] == 10);
  CHECK(j["config"]["degree"].get<std::size_t>() > 0);
  CHECK(j["config"]["m_max"] == 6);
  CHECK(j["config"].contains("seed"));
}

TEST_CASE("validation failures exit 2") {
  const auto dir = scratch("bad");
  std::ofstream(dir / "empty.csv").close();
  cli::ExperimentConfig c;
  c.out = dir.string();
  c.sequence = (dir / "empty.csv").string();
  CHECK(cli::run("density", c) == 2);
  CHECK(cli::run("no-such-command", c) == 2);

  cli::ExperimentConfig base;
  CHECK_THROWS_WITH_AS(cli::apply_json(base, cli::Json::parse(R"({"n_radii": "ten"})")), doctest::Contains("n_radii"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(cli::apply_json(base, cli::Json::parse(R"({"colour": 1})")), doctest::Contains("colour"),
                       ValidationError);
  c.sequence.clear();
  c.weight = "alpha:2";
  CHECK(cli::run("radii", c) == 2);
}

TEST_CASE("tail flags escalate to exit 3") {
  cli::ExperimentConfig c;
  c.n_radii = 12;
  c.degree = 40;
  c.out = scratch("tail").string();
  CHECK(cli::run("kernel-diag", c) == 3);
  const auto j = cli::Json::parse(slurp(fs::path(c.out) / "kernel_diag.json"));
  CHECK(j["flagged"] == true);
}

TEST_CASE("config files layer under explicit values") {
  const auto dir = scratch("cfg");
  std::ofstream(dir / "c.json") << R"({"weight": "loglog", "seed": 9, "spacings": [10, 5]})";
  const auto c = cli::load_config((dir / "c.json").string());
  CHECK(c.weight == "loglog");
  CHECK(c.seed == 9);
  CHECK(c.spacings.size() == 2);
  const auto r = cli::resolve(c);
  CHECK(r.n_radii > 0);
  CHECK(r.n_radii <= 9);
}

}
