#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "microloc/cli.hpp"
#include "microloc/io.hpp"

using namespace microloc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("microloc_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(const fs::path& dir, const std::string& config, CliOptions opt = {}) {
  fs::path cfg = dir / "run.ini";
  std::ofstream(cfg) << config;
  opt.config_path = cfg.string();
  opt.out_dir = (dir / "out").string();
  if (opt.jobs == 0) opt.jobs = 2;
  std::ostringstream out, err;
  int code = run_command(opt, out, err);
  return {code, out.str(), err.str()};
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("malformed config reports line and column") {
  auto dir = scratch("malformed");
  auto r = run(dir, "[metric]\nname = minkowski\n[command]\nname = propagate\nx = [0, 0, 0\n");
  CHECK(r.code == 2);
  auto j = Json::parse(r.err);
  CHECK(j["error"]["code"] == "ConfigError");
  CHECK(j["error"]["line"] == 5);
  CHECK(j["error"]["column"] == 5);

  r = run(dir, "[metric]\nname = minkowski\n[command]\nname = propagate\nx = [0, 0, 0, 0]\nbogus = 1\n");
  CHECK(r.code == 2);
  CHECK(Json::parse(r.err)["error"]["line"] == 6);

  r = run(dir, "[command]\nname = teleport\n");
  CHECK(r.code == 2);

  CliOptions missing;
  std::ostringstream out, err;
  missing.config_path = (dir / "nope.ini").string();
  missing.out_dir = (dir / "out").string();
  CHECK(run_command(missing, out, err) == 2);
}

TEST_CASE("minkowski propagation keeps xi and moves x along the null ray") {
  auto dir = scratch("propagate");
  auto r = run(dir,
               "[metric]\nname = minkowski\n[command]\nname = propagate\n"
               "x = [1, 2, 3, 4]\nxi = [1, 0.6, 0.8, 0]\ntau1 = 4\nsteps = 8\n");
  REQUIRE(r.code == 0);
  auto rows = read_csv(dir / "out" / "strip.csv");
  REQUIRE(rows.size() == 9);
  // x' = 2 g^{-1} xi with g = diag(1,-1,-1,-1)
  const double v[4] = {2.0, -1.2, -1.6, 0.0};
  const double x0[4] = {1, 2, 3, 4};
  for (const auto& row : rows) {
    double tau = row[0];
    for (int m = 0; m < 4; ++m) CHECK(row[1 + m] == doctest::Approx(x0[m] + v[m] * tau).epsilon(1e-12));
    CHECK(row[5] == 1.0);
    CHECK(row[6] == 0.6);
    CHECK(row[7] == 0.8);
    CHECK(std::abs(row[9]) < 1e-12);
  }
  auto meta = read_json(dir / "out" / "run_meta.json");
  CHECK(meta["exit_code"] == 0);
  CHECK(meta["files"].size() == 1);
}

TEST_CASE("seed list batch writes one file per seed") {
  auto dir = scratch("batch");
  {
    std::ofstream seeds(dir / "seeds.txt");
    seeds << "# random directions\n";
    for (int i = 0; i < 99; ++i) seeds << i << "\n";
    seeds << "0 0 0 0 1 1 0 0\n";
  }
  CliOptions opt;
  opt.seed_list = (dir / "seeds.txt").string();
  opt.jobs = 3;
  auto r = run(dir,
               "[metric]\nname = minkowski\n[command]\nname = propagate\nx = [0, 0, 0, 0]\n"
               "tau1 = 1\nsteps = 2\n",
               opt);
  REQUIRE(r.code == 0);
  for (int i = 0; i < 100; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "seed_%04d.csv", i);
    REQUIRE(fs::exists(dir / "out" / name));
  }
  CHECK_FALSE(fs::exists(dir / "out" / "seed_0100.csv"));
  auto last = read_csv(dir / "out" / "seed_0099.csv");
  CHECK(last.back()[2] == doctest::Approx(-2.0));
  CHECK(read_json(dir / "out" / "run_meta.json")["files"].size() == 100);

  std::ofstream(dir / "seeds.txt") << "1 2 3\n";
  r = run(dir, "[metric]\nname = minkowski\n[command]\nname = propagate\nx = [0, 0, 0, 0]\n", opt);
  CHECK(r.code == 2);
  CHECK(Json::parse(r.err)["error"]["line"] == 1);
}

TEST_CASE("non-null start and mode mismatch are usage errors") {
  auto dir = scratch("errors");
  auto r = run(dir, "[metric]\nname = minkowski\n[command]\nname = propagate\nx = [0, 0, 0, 0]\nxi = [1, 0, 0, 0]\n");
  CHECK(r.code == 2);
  CHECK(Json::parse(r.err)["error"]["code"] == "NonNullStart");

  r = run(dir,
          "[metric]\nname = schwarzschild\nmass = 1\n[command]\nname = transport\noperator = dirac\n"
          "mode = levi-civita\nx = [0, 6, 1.5707963267948966, 0]\ndirection = [0, 1, 0]\n");
  CHECK(r.code == 2);
  CHECK(Json::parse(r.err)["error"]["line"] == 7);
}

TEST_CASE("transport writes the fibre next to the strip") {
  auto dir = scratch("transport");
  auto r = run(dir,
               "[metric]\nname = schwarzschild\nmass = 1\n[command]\nname = transport\noperator = dirac\n"
               "mode = spin\nx = [0, 6, 1.5707963267948966, 0]\ndirection = [0, 1, 0]\ntau1 = 2\nsteps = 4\n");
  REQUIRE(r.code == 0);
  auto rows = read_csv(dir / "out" / "transport.csv");
  REQUIRE(rows.size() == 5);
  REQUIRE(rows[0].size() == 10 + 8);
  for (const auto& row : rows) {
    double n = 0;
    for (size_t k = 10; k < row.size(); ++k) n += row[k] * row[k];
    CHECK(n > 1e-6);
  }
}

TEST_CASE("predict: null pair, spacelike pair, feynman diagonal") {
  auto dir = scratch("predict");
  auto r = run(dir,
               "[metric]\nname = minkowski\n[command]\nname = predict\nkind = hadamard-scalar\n"
               "pairs = [[0,0,0,0, 1,1,0,0],\n         [0,0,0,0, 0,1,0,0]]\n");
  REQUIRE(r.code == 0);
  auto j = read_json(dir / "out" / "predict.json");
  REQUIRE(j["pairs"].size() == 2);
  REQUIRE(j["pairs"][0]["elements"].size() == 1);
  const auto& e = j["pairs"][0]["elements"][0];
  CHECK(e.contains("frequency_flag"));
  CHECK(e["xi"][0].get<double>() > 0);
  CHECK(j["pairs"][1]["elements"].empty());

  r = run(dir, "[metric]\nname = minkowski\n[command]\nname = predict\nkind = feynman\nx = [0,0,0,0]\ny = [0,0,0,0]\n");
  REQUIRE(r.code == 0);
  CHECK(read_json(dir / "out" / "predict.json")["pairs"][0]["elements"].size() == 64);

  r = run(dir, "[metric]\nname = minkowski\n[command]\nname = predict\nkind = retarded\nx = [0,0,0,0]\ny = [1,1,0,0]\n");
  CHECK(r.code == 2);
}

TEST_CASE("detect: delta singular, smooth regular, missing input") {
  auto dir = scratch("detect");
  const std::string grid = "dim = 1\norigin = [-10]\nspacing = [0.00125]\ncount = [16001]\neps = 0.01\n";
  auto r = run(dir, "[command]\nname = detect\nsample = delta\n" + grid + "bases = [[0], [5]]\n");
  REQUIRE(r.code == 0);
  auto j = read_json(dir / "out" / "detect.json");
  for (const auto& e : j["report"]["entries"]) {
    bool origin = e["base"][0].get<double>() == 0.0;
    CHECK(e["verdict"] == (origin ? "Singular" : "Regular"));
  }

  // round trip through the sample file format
  Sample s = sample_examples("smooth", GridSpec{1, {-10, 0}, {0.00125, 1}, {16001, 1}}, 0.01, {});
  std::ofstream(dir / "smooth.csv") << [&] {
    std::ostringstream os;
    write_sample_csv(os, s);
    return os.str();
  }();
  r = run(dir, "[command]\nname = detect\ninput = \"" + (dir / "smooth.csv").string() +
                   "\"\nk_max = 20\nbases = [[-2], [0], [3]]\n");
  REQUIRE(r.code == 0);
  for (const auto& e : read_json(dir / "out" / "detect.json")["report"]["entries"]) CHECK(e["verdict"] == "Regular");

  r = run(dir, "[command]\nname = detect\ninput = \"" + (dir / "missing.csv").string() + "\"\nbases = [[0]]\n");
  CHECK(r.code == 2);
}

TEST_CASE("verify: pass, forced failure, subset") {
  auto dir = scratch("verify");
  auto r = run(dir, "[command]\nname = verify\n");
  CHECK(r.code == 0);
  auto j = read_json(dir / "out" / "verify.json");
  CHECK(j["pass"] == true);
  CHECK(j["results"].size() == 14);

  CliOptions tight;
  tight.tolerance_scale = 1e-30;
  r = run(dir, "[command]\nname = verify\n", tight);
  CHECK(r.code == 1);
  CHECK(r.out.find("FAIL") != std::string::npos);

  CliOptions subset;
  subset.checks = {"rpt", "kernel_form"};
  r = run(dir, "[command]\nname = verify\n[metric]\nname = minkowski\n", subset);
  CHECK(r.code == 0);
  j = read_json(dir / "out" / "verify.json");
  REQUIRE(j["results"].size() == 2);
  CHECK(j["results"][0]["check"] == "rpt");
  CHECK(j["results"][1]["check"] == "kernel_form");

  subset.checks = {"bogus"};
  CHECK(run(dir, "[command]\nname = verify\n", subset).code == 2);
}

TEST_CASE("outputs are byte-identical across runs and job counts") {
  auto a = scratch("det_a"), b = scratch("det_b");
  const std::string cfg =
      "[metric]\nname = schwarzschild\nmass = 1\n[command]\nname = propagate\n"
      "x = [0, 8, 1.2, 0.3]\ndirection = [0.3, -0.8, 0.2]\ntau1 = 5\nsteps = 50\n";
  CliOptions one, four;
  one.jobs = 1;
  four.jobs = 4;
  REQUIRE(run(a, cfg, one).code == 0);
  REQUIRE(run(b, cfg, four).code == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(a / "out" / "strip.csv") == slurp(b / "out" / "strip.csv"));
}
