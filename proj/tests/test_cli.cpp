#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "qdi/trajectory.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_qdi(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = qdi::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qdi_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

qdi::CsvTable read_table(const fs::path& path) {
  std::ifstream is(path);
  REQUIRE(is);
  return qdi::read_csv(is);
}

}  // namespace

TEST_CASE("solve writes the three outputs") {
  const fs::path dir = scratch("solve");
  const Run r = run_qdi({"solve", "example71", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("status:") != std::string::npos);
  REQUIRE(fs::exists(dir / "trajectory.csv"));
  REQUIRE(fs::exists(dir / "history.csv"));
  REQUIRE(fs::exists(dir / "summary.json"));

  const qdi::CsvTable traj = read_table(dir / "trajectory.csv");
  const std::vector<std::string> header{"t", "x1", "x2", "z1", "z2", "h1", "h2"};
  CHECK(traj.header == header);
  CHECK(traj.rows.rows() == 11);

  std::ifstream js(dir / "summary.json");
  const nlohmann::json summary = nlohmann::json::parse(js);
  CHECK(summary["problem"] == "example71");
  CHECK(summary["status"] == "stationary");
  CHECK(summary["parameters"]["n_grid"] == 11);
  CHECK(summary["terminal"].size() == 1);
  CHECK(summary["max_h"].size() == 2);
  CHECK(summary["boundary_error"].get<double>() <= 5e-3);

  std::ifstream hist(dir / "history.csv");
  int lines = 0;
  for (std::string line; std::getline(hist, line);) ++lines;
  CHECK(lines == summary["iterations"].get<int>() + 1);
  fs::remove_all(dir);
}

TEST_CASE("overrides reach the solver") {
  const fs::path dir = scratch("overrides");
  const Run r = run_qdi({"solve", "dryfriction", "--out", dir.string(), "-q", "--n-grid", "21", "--max-iter", "2"});
  CHECK(r.code == 2);
  CHECK(r.out.rfind("status:", 0) == 0);
  CHECK(read_table(dir / "trajectory.csv").rows.rows() == 21);
  std::ifstream js(dir / "summary.json");
  const nlohmann::json summary = nlohmann::json::parse(js);
  CHECK(summary["status"] == "max_iter");
  CHECK(summary["parameters"]["max_iter"] == 2);
  fs::remove_all(dir);
}

TEST_CASE("sphere problems write a single h column") {
  const fs::path dir = scratch("sphere");
  CHECK(run_qdi({"solve", "example72", "--out", dir.string(), "-q"}).code == 0);
  const qdi::CsvTable traj = read_table(dir / "trajectory.csv");
  CHECK(traj.header.back() == "h");
  CHECK(traj.header.size() == 6);
  fs::remove_all(dir);
}

TEST_CASE("missing problem file") {
  const Run r = run_qdi({"solve", "missing.prob"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(r.err.find("file not found") != std::string::npos);
}

TEST_CASE("problem files load from disk") {
  const fs::path dir = scratch("file");
  const fs::path problem = fs::path(QDI_PROBLEMS_DIR) / "pendulum.yaml";
  CHECK(run_qdi({"solve", problem.string(), "--out", dir.string(), "-q"}).code == 0);
  fs::remove_all(dir);
}

TEST_CASE("check reproduces the solver's deviation") {
  const fs::path dir = scratch("check");
  REQUIRE(run_qdi({"solve", "example71", "--out", dir.string(), "-q"}).code == 0);
  std::ifstream js(dir / "summary.json");
  const double solved = nlohmann::json::parse(js)["max_deviation"].get<double>();

  const Run r = run_qdi({"check", "example71", "--state", (dir / "trajectory.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("stationarity:   holds") != std::string::npos);
  const auto pos = r.out.find("max deviation:");
  REQUIRE(pos != std::string::npos);
  const double checked = std::stod(r.out.substr(pos + 14));
  CHECK(std::abs(checked - solved) <= 1e-5 * solved);

  // Per-node CSV: the last column holds node deviations.
  std::istringstream is(r.out);
  std::string header;
  std::getline(is, header);
  CHECK(header == "node,t,h1,h2,surface,coupling,deviation");
  fs::remove_all(dir);
}

TEST_CASE("check agrees with the state reread exactly") {
  const fs::path dir = scratch("reread");
  REQUIRE(run_qdi({"solve", "example72", "--out", dir.string(), "-q"}).code == 0);
  const Run a = run_qdi({"check", "example72", "--state", (dir / "trajectory.csv").string()});
  const Run b = run_qdi({"check", "example72", "--state", (dir / "trajectory.csv").string()});
  CHECK(a.out == b.out);
  CHECK(a.code == 0);
  fs::remove_all(dir);
}

TEST_CASE("check flags a perturbed state") {
  const fs::path dir = scratch("perturbed");
  REQUIRE(run_qdi({"solve", "example71", "--out", dir.string(), "-q"}).code == 0);
  qdi::CsvTable traj = read_table(dir / "trajectory.csv");
  traj.rows.col(1).array() += 0.5;
  {
    std::ofstream os(dir / "perturbed.csv");
    for (std::size_t c = 0; c < traj.header.size(); ++c) os << (c ? "," : "") << traj.header[c];
    os << '\n';
    for (Eigen::Index k = 0; k < traj.rows.rows(); ++k) {
      for (Eigen::Index c = 0; c < traj.rows.cols(); ++c) os << (c ? "," : "") << traj.rows(k, c);
      os << '\n';
    }
  }
  const Run r = run_qdi({"check", "example71", "--state", (dir / "perturbed.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.out.find("stationarity:   violated") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("check can dump a node") {
  const fs::path dir = scratch("dump");
  REQUIRE(run_qdi({"solve", "example71", "--out", dir.string(), "-q"}).code == 0);
  const Run r = run_qdi({"check", "example71", "--state", (dir / "trajectory.csv").string(), "--dump-node", "3"});
  CHECK(r.out.find("node 3:") != std::string::npos);
  CHECK(r.out.find("dimension 4") != std::string::npos);
  CHECK(run_qdi({"check", "example71", "--state", (dir / "trajectory.csv").string(), "--dump-node", "99"}).code == 1);
  CHECK(run_qdi({"check", "example71", "--state", (dir / "missing.csv").string()}).code == 1);
  fs::remove_all(dir);
}

TEST_CASE("examples listing") {
  const Run all = run_qdi({"examples"});
  CHECK(all.code == 0);
  for (const char* name : {"example71", "example72", "example73", "dryfriction", "pendulum"})
    CHECK(all.out.find(name) != std::string::npos);
  const Run some = run_qdi({"examples", "fric"});
  CHECK(some.code == 0);
  CHECK(some.out.find("dryfriction") != std::string::npos);
  CHECK(some.out.find("pendulum") == std::string::npos);
  const Run none = run_qdi({"examples", "zzz"});
  CHECK(none.code == 1);
  CHECK(none.err.rfind("error: ", 0) == 0);
}

TEST_CASE("usage errors") {
  CHECK(run_qdi({}).code == 1);
  CHECK(run_qdi({"bogus"}).code == 1);
  CHECK(run_qdi({"solve"}).code == 1);
  CHECK(run_qdi({"solve", "example71", "--n-grid", "abc"}).code == 1);
  CHECK(run_qdi({"solve", "example71", "--delta", "-1", "-q", "--out", scratch("bad").string()}).code == 1);
}
