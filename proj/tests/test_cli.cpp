#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "so3kit/model.hpp"
#include "so3kit/rotation.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SO3KIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("so3kit_cli_" + tag);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// header plus comma-split data rows
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string drop_last_column(const std::string& text) {
  std::string out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_CASE("grid command writes parseable grids with spacing stats") {
  const auto dir = fresh_dir("grid");
  REQUIRE(run_cli("grid --set out_dir=" + dir.string() + " --set n_sweep=4") == 0);

  const auto g = so3kit::grid_from_json(slurp(dir / "grid_4.json"));
  CHECK(g.space == so3kit::Space::Sphere);
  CHECK(g.n() == 4);

  const auto rows = csv_rows(slurp(dir / "spacing.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"space", "n", "min_nn", "mean_nn", "max_nn"});
  CHECK(rows[1][0] == "sphere");
  CHECK(rows[1][1] == "4");
  // four repulsion points settle into a tetrahedron, vertex angle acos(-1/3)
  CHECK(std::stod(rows[1][2]) == doctest::Approx(1.9106).epsilon(1e-3));

  const auto dir2 = fresh_dir("grid2");
  REQUIRE(run_cli("grid --set out_dir=" + dir2.string() + " --set n_sweep=4") == 0);
  CHECK(slurp(dir / "grid_4.json") == slurp(dir2 / "grid_4.json"));
  CHECK(slurp(dir / "spacing.csv") == slurp(dir2 / "spacing.csv"));
}

TEST_CASE("diag command reports exact octahedral orthogonality") {
  const auto dir = fresh_dir("diag");
  REQUIRE(run_cli("diag --set out_dir=" + dir.string() +
                  " --set grid=cubic --set carrier={\\\"kind\\\":\\\"regular\\\",\\\"L\\\":1}") ==
          0);
  const auto rows = csv_rows(slurp(dir / "ortho.csv"));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"model", "n", "metric", "mean", "std"});
  bool saw_rescaled = false;
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][0] == "regular_L1_cubic");
    CHECK(rows[i][1] == "24");
    if (rows[i][2] == "eps2_unnormalized") {
      saw_rescaled = true;
      CHECK(std::stod(rows[i][3]) < 1e-12);
    }
  }
  CHECK(saw_rescaled);
}

TEST_CASE("equivariance command separates the exact layer from the sampled one") {
  const auto dir = fresh_dir("equi");
  REQUIRE(run_cli("equivariance --set out_dir=" + dir.string() +
                  " --set n_sweep=4,16 --set seeds=0") == 0);
  const auto rows = csv_rows(slurp(dir / "equivariance.csv"));
  REQUIRE(rows.size() == 5);
  double fixed4 = -1, fixed16 = -1;
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 5);
    CHECK(rows[i][2] == "equivariance_error");
    const double mean = std::stod(rows[i][3]);
    if (rows[i][0] == "adaptive") CHECK(mean < 1e-10);
    if (rows[i][0] == "fixed" && rows[i][1] == "4") fixed4 = mean;
    if (rows[i][0] == "fixed" && rows[i][1] == "16") fixed16 = mean;
  }
  CHECK(fixed4 > 1e-2);
  CHECK(fixed16 < fixed4);
}

TEST_CASE("train command sweeps kinds and restores reproducible checkpoints") {
  const auto dir = fresh_dir("train");
  const std::string common =
      " --set n_sweep=2 --set seeds=0 --set train.epochs=2 --set dataset.n_per_class=2";
  REQUIRE(run_cli("train --parallel 2 --set out_dir=" + dir.string() + common) == 0);

  for (const std::string name :
       {"ckpt_fourier_fixed_n2_seed0.json", "ckpt_adaptive_n2_seed0.json",
        "ckpt_norm_n0_seed0.json", "ckpt_gated_n0_seed0.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir / name));
    so3kit::ModelConfig c;
    so3kit::ModelWeights w;
    CHECK_NOTHROW(so3kit::checkpoint_from_json(slurp(dir / name), c, w));
  }

  const auto rows = csv_rows(slurp(dir / "metrics.csv"));
  // 4 cells x 2 epochs x 2 splits plus the header
  REQUIRE(rows.size() == 17);
  CHECK(rows[0] == std::vector<std::string>{"model", "n", "seed", "epoch", "split", "accuracy",
                                            "invariance_error", "wall_ms"});
  for (size_t i = 1; i < rows.size(); ++i) {
    const double acc = std::stod(rows[i][5]);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(std::stod(rows[i][7]) > 0.0);
  }

  // a second single-threaded run reproduces everything except wall time
  const auto dir2 = fresh_dir("train2");
  REQUIRE(run_cli("train --set out_dir=" + dir2.string() + common) == 0);
  CHECK(slurp(dir / "ckpt_adaptive_n2_seed0.json") == slurp(dir2 / "ckpt_adaptive_n2_seed0.json"));
  CHECK(slurp(dir / "ckpt_norm_n0_seed0.json") == slurp(dir2 / "ckpt_norm_n0_seed0.json"));
  CHECK(drop_last_column(slurp(dir / "metrics.csv")) ==
        drop_last_column(slurp(dir2 / "metrics.csv")));
}

TEST_CASE("bench command writes a timing table and a line fit") {
  const auto dir = fresh_dir("bench");
  REQUIRE(run_cli("bench --set out_dir=" + dir.string() +
                  " --set n_sweep=2,4 --set bench.channels=2 --set bench.spatial=16") == 0);
  const auto rows = csv_rows(slurp(dir / "bench.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0][0] == "layer");
  for (size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][5]) >= 0.0);

  const auto fits = nlohmann::json::parse(slurp(dir / "bench_fit.json"));
  for (const char* layer : {"fixed", "adaptive"}) {
    REQUIRE(fits.contains(layer));
    CHECK(fits[layer].contains("slope_ms_per_sample"));
    CHECK(std::isfinite(fits[layer]["r2"].get<double>()));
  }
}

TEST_CASE("the output directory env var wins over the config") {
  const auto dir = fresh_dir("envdir");
  const auto decoy = fresh_dir("envdecoy");
  const std::string cmd = std::string("SO3KIT_OUT_DIR=") + dir.string() + " " + SO3KIT_CLI_PATH +
                          " grid --set out_dir=" + decoy.string() +
                          " --set n_sweep=4 >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  REQUIRE(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(dir / "grid_4.json"));
  CHECK(!fs::exists(decoy));
}

TEST_CASE("config mistakes exit with code one") {
  const auto dir = fresh_dir("err");
  CHECK(run_cli("") != 0);                 // a subcommand is required
  CHECK(run_cli("frobnicate") != 0);       // unknown subcommand
  CHECK(run_cli("grid --set bogus_key=1 --set out_dir=" + dir.string()) == 1);
  CHECK(run_cli("grid --set grid=hexagonal --set out_dir=" + dir.string()) == 1);
  CHECK(run_cli("grid --set n_sweep=0 --set out_dir=" + dir.string()) == 1);
  CHECK(run_cli("diag --set model.L=-2 --set out_dir=" + dir.string()) == 1);
  CHECK(run_cli("grid --config /nonexistent/cfg.json") == 1);

  const auto bad = fs::temp_directory_path() / "so3kit_cli_bad.json";
  std::ofstream(bad) << "{not json";
  CHECK(run_cli("grid --config " + bad.string()) == 1);

  const auto good = fs::temp_directory_path() / "so3kit_cli_good.json";
  std::ofstream(good) << "{\"n_sweep\": [4], \"out_dir\": \"" << dir.string() << "\"}";
  CHECK(run_cli("grid --config " + good.string()) == 0);
  CHECK(fs::exists(dir / "grid_4.json"));
}

TEST_CASE("runaway training reports a numerical failure") {
  const auto dir = fresh_dir("blowup");
  CHECK(run_cli("train --set out_dir=" + dir.string() +
                " --set n_sweep=2 --set seeds=0 --set train.epochs=2"
                " --set dataset.n_per_class=2 --set train.lr=1e300") == 2);
}
