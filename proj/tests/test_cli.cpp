#include "doctest.h"

#include "rgrow/cli.hpp"
#include "rgrow/forward.hpp"
#include "rgrow/serialize.hpp"
#include "rgrow/text_io.hpp"

#include "json.hpp"

#include <filesystem>
#include <sstream>

using namespace rgrow;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rgrow_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string file(const fs::path& p) { return read_text_file(p); }

Result simulate(const fs::path& dir, std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {"--quiet", "simulate", "--subdiv", "2", "--sensors", "24", "--region-size", "12",
                                   "--noise-sigma", "0", "--out", dir.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args);
}

Result solve(const fs::path& sim, const fs::path& dir, const std::string& lambda = "0",
             std::vector<std::string> extra = {}) {
  std::vector<std::string> args = {"--quiet", "solve",
                                   "--mesh", (sim / "mesh.txt").string(),
                                   "--leadfield", (sim / "leadfield.lfm").string(),
                                   "--measurement", (sim / "measurement.csv").string(),
                                   "--lambda", lambda,
                                   "--out", dir.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  return cli(args);
}

}  // namespace

TEST_CASE("simulate writes its artifacts reproducibly") {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  REQUIRE(simulate(a).code == 0);
  for (const char* name : {"mesh.txt", "leadfield.lfm", "measurement.csv", "truth.txt", "manifest.json"}) {
    CHECK(fs::exists(a / name));
  }
  REQUIRE(simulate(b).code == 0);
  for (const char* name : {"mesh.txt", "leadfield.lfm", "measurement.csv", "truth.txt"}) {
    CHECK(file(a / name) == file(b / name));
  }
  const auto manifest = nlohmann::json::parse(file(a / "manifest.json"));
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["version"] == kVersion);
  CHECK(manifest.contains("flags"));

  // Noiseless: the measurement is exactly the truth region's summed lead field.
  const auto L = load_lead_field(a / "leadfield.lfm");
  const auto truth = load_vertex_set(a / "truth.txt");
  CHECK(truth.size() == 12);
  CHECK(load_measurement(a / "measurement.csv") == region_signal(L, truth, 1.0));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("simulate rejects bad requests") {
  const auto dir = scratch("sim_bad");
  CHECK(cli({"simulate", "--region-size", "1000", "--subdiv", "1", "--noise-sigma", "0", "--out", dir.string()})
            .code == 2);
  CHECK(cli({"simulate", "--region-size", "5", "--mesh-kind", "cube", "--out", dir.string()}).code == 2);
  CHECK(cli({"simulate", "--out", dir.string()}).code == 2);
  CHECK(cli({"simulate", "--region-size", "5", "--noise-sigma", "0.1", "--snr-db", "20", "--out", dir.string()}).code ==
        2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({}).code == 2);
  const auto version = cli({"--version"});
  CHECK(version.code == 0);
  CHECK(version.out == std::string(kVersion) + "\n");
  fs::remove_all(dir);
}

TEST_CASE("solve and report end to end") {
  const auto sim = scratch("e2e_sim");
  const auto sol = scratch("e2e_solve");
  const auto rep = scratch("e2e_report");
  REQUIRE(simulate(sim).code == 0);

  const auto solved = cli({"solve", "--mesh", (sim / "mesh.txt").string(), "--leadfield",
                           (sim / "leadfield.lfm").string(), "--measurement", (sim / "measurement.csv").string(),
                           "--lambda", "0", "--out", sol.string()});
  REQUIRE(solved.code == 0);
  CHECK(solved.out.find("merges: 161") != std::string::npos);
  const auto d = load_dendrogram(sol / "dendrogram.json");
  CHECK(d.merges.size() == 161);
  CHECK(fs::exists(sol / "solve_manifest.json"));

  const auto reported = cli({"report", "--dendrogram", (sol / "dendrogram.json").string(), "--truth",
                             (sim / "truth.txt").string(), "--speed-threshold", "10", "--out", rep.string()});
  REQUIRE(reported.code == 0);
  const auto report = nlohmann::json::parse(file(rep / "report.json"));
  REQUIRE(report.is_array());
  CHECK(report.size() >= 1);
  CHECK(report.size() <= 3);
  for (std::size_t k = 0; k < report.size(); ++k) {
    CHECK(report[k]["rank"] == k + 1);
    CHECK(report[k]["jaccard"].is_number());
    if (k > 0) CHECK(report[k]["best_error"].get<double>() >= report[k - 1]["best_error"].get<double>());
  }
  // With no error threshold the bounds span the whole trajectory.
  const std::string curves = file(rep / "curves.csv");
  CHECK(curves.rfind("region_id,cluster_id,size,raw_error,amplitude\n", 0) == 0);
  const auto region0 = report[0]["region_id"].get<int>();
  int lo = 1 << 30;
  int hi = 0;
  std::istringstream rows(curves);
  std::string line;
  std::getline(rows, line);
  int row_count = 0;
  while (std::getline(rows, line)) {
    ++row_count;
    std::istringstream cells(line);
    std::string region;
    std::string cluster;
    std::string size;
    std::getline(cells, region, ',');
    std::getline(cells, cluster, ',');
    std::getline(cells, size, ',');
    if (std::stoi(region) != region0) continue;
    lo = std::min(lo, std::stoi(size));
    hi = std::max(hi, std::stoi(size));
  }
  CHECK(report[0]["size_lower"] == lo);
  CHECK(report[0]["size_upper"] == hi);
  CHECK(row_count >= 2);
  CHECK(fs::exists(rep / "report_manifest.json"));

  CHECK(cli({"report", "--dendrogram", (sol / "missing.json").string(), "--speed-threshold", "10", "--out",
             rep.string()})
            .code == 2);
  CHECK(cli({"report", "--dendrogram", (sol / "dendrogram.json").string(), "--speed-threshold", "0", "--out",
             rep.string()})
            .code == 2);
  for (const auto& dir : {sim, sol, rep}) fs::remove_all(dir);
}

TEST_CASE("solve engines, lambda and threads") {
  const auto sim = scratch("eng_sim");
  REQUIRE(simulate(sim).code == 0);
  const auto lazy = scratch("eng_lazy");
  const auto naive = scratch("eng_naive");
  const auto reg = scratch("eng_reg");
  const auto threaded = scratch("eng_threads");
  REQUIRE(solve(sim, lazy).code == 0);
  REQUIRE(solve(sim, naive, "0", {"--naive"}).code == 0);
  REQUIRE(solve(sim, reg, "0.5").code == 0);
  REQUIRE(cli({"--threads", "4", "--quiet", "solve", "--mesh", (sim / "mesh.txt").string(), "--leadfield",
               (sim / "leadfield.lfm").string(), "--measurement", (sim / "measurement.csv").string(), "--lambda", "0",
               "--out", threaded.string()})
              .code == 0);
  const auto base = file(lazy / "dendrogram.json");
  CHECK(file(naive / "dendrogram.json") == base);
  CHECK(file(threaded / "dendrogram.json") == base);
  CHECK(file(reg / "dendrogram.json") != base);
  CHECK(load_dendrogram(reg / "dendrogram.json").lambda == 0.5);
  for (const auto& dir : {sim, lazy, naive, reg, threaded}) fs::remove_all(dir);
}

TEST_CASE("solve rejects mismatched inputs") {
  const auto sim = scratch("mis_sim");
  const auto other = scratch("mis_other");
  const auto out = scratch("mis_out");
  REQUIRE(simulate(sim).code == 0);
  REQUIRE(cli({"--quiet", "simulate", "--subdiv", "2", "--sensors", "10", "--region-size", "3", "--noise-sigma", "0",
               "--out", other.string()})
              .code == 0);
  const auto mismatch = cli({"solve", "--mesh", (sim / "mesh.txt").string(), "--leadfield",
                             (sim / "leadfield.lfm").string(), "--measurement", (other / "measurement.csv").string(),
                             "--lambda", "0", "--out", out.string()});
  CHECK(mismatch.code == 2);
  CHECK(mismatch.err.find("error:") != std::string::npos);
  CHECK(solve(sim, out, "-1").code == 2);
  write_text_file(other / "mesh.txt", "garbage");
  CHECK(cli({"solve", "--mesh", (other / "mesh.txt").string(), "--leadfield", (sim / "leadfield.lfm").string(),
             "--measurement", (sim / "measurement.csv").string(), "--lambda", "0", "--out", out.string()})
            .code == 2);
  for (const auto& dir : {sim, other, out}) fs::remove_all(dir);
}
