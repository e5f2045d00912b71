#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qmf/config.hpp"
#include "qmf/io.hpp"
#include "qmf/scenario.hpp"

using namespace qmf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qmf_cli_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int status;
  std::string out, err;
};

Run qmfsim(const std::string& args, const fs::path& dir) {
  const char* exe = std::getenv("QMFSIM");
  REQUIRE_MESSAGE(exe != nullptr, "QMFSIM must point at the qmfsim binary");
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string(exe) + " " + args + " > " + o.string() + " 2> " + e.string();
  const int rc = std::system(cmd.c_str());
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, read_text(o), read_text(e)};
}

}  // namespace

TEST_CASE("minimal config gets the documented defaults") {
  const ExperimentConfig c = parse_config_text("[lmg]\ns = 0.55\n", false);
  CHECK(c.scenario == Scenario::lmg_run);
  CHECK(c.lmg_s == 0.55);
  CHECK(c.loop.sample_period == 2e-6);
  CHECK(c.loop.latency == 6e-6);
  CHECK(c.loop.duration == 1.5e-3);
  CHECK(c.loop.decay_half_time == 2e-3);
  CHECK(c.measurement.n1_eff == 1e6);
  CHECK(c.measurement.ratio_n2_n1 == 0.5);
  CHECK(c.measurement.f == 4.0);
}

TEST_CASE("invalid and unknown settings are rejected with their field") {
  try {
    parse_config_text("[loop]\nplant_dt = 1e-6\nsample_period = 1e-7\n", false, "bad.ini");
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK(m.find("sample_period") != std::string::npos);
    CHECK(m.find("plant_dt") != std::string::npos);
  }
  try {
    parse_config_text("seed = 3\n\n[lmg]\nq = 0.5\n", false, "bad.ini");
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "lmg.q");
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_config_text("[lmg]\ns = 1.5\n", false), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[lmg]\ns = banana\n", false), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{\"lmg\": {\"s\": 0.5", true), ConfigError);
}

TEST_CASE("sweeps expand to one sub-run per grid point") {
  const ExperimentConfig c = parse_config_text("scenario = dpt-sweep\n[sweep]\ns = 0:0.1:0.8\n", false);
  const auto subs = c.expand();
  REQUIRE(subs.size() == 9);
  CHECK(subs.front().lmg_s == 0.0);
  CHECK(subs.back().lmg_s == doctest::Approx(0.8));
  CHECK(subs[3].sweep_point.at(0).first == "lmg.s");
  const ExperimentConfig two = parse_config_text("[sweep]\nlmg.s = 0.6,0.7\nloop.latency = 0,6e-6,12e-6\n", false);
  CHECK(two.expand().size() == 6);
  CHECK(parse_grid("1:0.5:3", "x") == std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0});
}

TEST_CASE("config hash ignores layout but not values") {
  const ExperimentConfig a = parse_config_text("seed = 4\n[lmg]\ns = 0.7\n[loop]\nlatency = 6e-6\n", false);
  const ExperimentConfig b = parse_config_text("[loop]\nlatency=0.000006\n[lmg]\ns=7e-1\n\n[measurement]\nf = 4\n", false);
  const ExperimentConfig c = parse_config_text("{\"seed\": 4, \"lmg\": {\"s\": 0.7}, \"loop\": {\"latency\": 6e-6}}", true);
  ExperimentConfig b2 = b;
  apply_setting(b2, "seed", "4");
  CHECK(a.hash() == b2.hash());
  CHECK(a.hash() == c.hash());
  CHECK(a.hash() != b.hash());
  CHECK(a.hash().size() == 64);
}

TEST_CASE("sha256 matches the standard test vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("trajectory csv round trip") {
  const fs::path dir = scratch("roundtrip");
  CHECK(format_double(0.1) == "0.10000000000000001");
  write_trajectories_csv(dir / "empty.csv", {});
  CHECK(read_text(dir / "empty.csv") == "shot,t,x,y,z,j_true,meas,ctl_z,ctl_x,j_est\n");
  CHECK(read_trajectories_csv(dir / "empty.csv").empty());

  LoopConfig cfg;
  cfg.duration = 1e-4;
  const auto recs = run_batch(cfg, LmgParams::from_alpha(0.7, kTwoPi * 6.25e3), MeasurementModel{}, 3, 5);
  write_trajectories_csv(dir / "t.csv", recs);
  const auto back = read_trajectories_csv(dir / "t.csv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].t == recs[i].t);
    CHECK(back[i].z == recs[i].z);
    CHECK(back[i].meas == recs[i].meas);
    CHECK(back[i].j_est == recs[i].j_est);
    CHECK(back[i].ctl_z == recs[i].ctl_z);
  }
  CHECK_THROWS_AS(read_trajectories_csv(dir / "missing.csv"), IoError);
  write_text(dir / "plain", "not a directory");
  CHECK_THROWS_AS(write_trajectories_csv(dir / "plain" / "x.csv", recs), IoError);
}

TEST_CASE("simulate writes the documented outputs") {
  const fs::path dir = scratch("ssb");
  write_text(dir / "ssb.ini", "seed = 9\nshots = 300\n[lmg]\ns = 0.7\n");
  const Run r = qmfsim("simulate ssb-ensemble --config " + (dir / "ssb.ini").string() + " --out " +
                           (dir / "out").string(), dir);
  REQUIRE(r.status == 0);
  CHECK(fs::exists(dir / "out" / "trajectories.csv"));
  CHECK(fs::exists(dir / "out" / "trajectories.meta.json"));
  const json stats = json::parse(read_text(dir / "out" / "symmetry_stats.json"));
  CHECK(stats["shots"] == 300);
  CHECK(stats["upper_fraction"].get<double>() > 0.3);
  CHECK(stats["upper_fraction"].get<double>() < 0.7);

  const json manifest = json::parse(read_text(dir / "out" / "manifest.json"));
  CHECK(manifest["seed"] == 9);
  CHECK(manifest["schema_version"] == 1);
  for (const auto& e : manifest["outputs"])
    CHECK(e["sha256"] == sha256_file(dir / "out" / e["file"].get<std::string>()));

  const Run again = qmfsim("simulate ssb-ensemble --config " + (dir / "ssb.ini").string() + " --out " +
                               (dir / "out2").string(), dir);
  REQUIRE(again.status == 0);
  const json m2 = json::parse(read_text(dir / "out2" / "manifest.json"));
  CHECK(m2["outputs"] == manifest["outputs"]);
  CHECK(m2["config_hash"] == manifest["config_hash"]);

  const Run a = qmfsim("analyze symmetry --in " + (dir / "out" / "trajectories.csv").string(), dir);
  REQUIRE(a.status == 0);
  CHECK(json::parse(a.out)["upper_fraction"] == stats["upper_fraction"]);
}

TEST_CASE("dpt-sweep writes order parameters") {
  const fs::path dir = scratch("dpt");
  write_text(dir / "dpt.ini",
             "[loop]\ntheta0 = 0\nlatency = 0\nqpn = false\nqpn_offset = false\nshot_noise = false\n"
             "arithmetic = double\nsample_period = 1e-7\nplant_dt = 1e-7\nmax_z_rate = 1e300\n"
             "[analysis]\ndpt_refine = 0\n");
  const Run r = qmfsim("simulate dpt-sweep --config " + (dir / "dpt.ini").string() + " --out " +
                           (dir / "out").string(), dir);
  REQUIRE(r.status == 0);
  const CsvTable t = read_csv(dir / "out" / "order_parameters.csv");
  CHECK(t.header == std::vector<std::string>{"s", "z_inf", "czz_inf", "stderr"});
  CHECK(t.rows.size() == 9);
}

TEST_CASE("json emission and seed overrides") {
  const fs::path dir = scratch("json");
  write_text(dir / "run.json", "{\"shots\": 2, \"lmg\": {\"s\": 0.7}, \"loop\": {\"duration\": 1e-4}}");
  const Run r = qmfsim("simulate lmg-run --config " + (dir / "run.json").string() + " --seed 77 --shots 3 --emit json --out " +
                           (dir / "out").string(), dir);
  REQUIRE(r.status == 0);
  const json traj = json::parse(read_text(dir / "out" / "trajectories.json"));
  CHECK(traj["schema_version"] == 1);
  CHECK(traj["trajectories"].size() == 3);
  CHECK(json::parse(read_text(dir / "out" / "manifest.json"))["seed"] == 77);
}

TEST_CASE("failures produce an error document and a nonzero exit") {
  const fs::path dir = scratch("fail");
  write_text(dir / "bad.ini", "[loop]\nsample_period = 1e-8\n");
  const Run r = qmfsim("simulate lmg-run --config " + (dir / "bad.ini").string() + " --out " + (dir / "o").string(), dir);
  CHECK(r.status != 0);
  const json e = json::parse(r.err);
  CHECK(e["error"]["kind"] == "config");
  CHECK(e["error"]["message"].get<std::string>().find("plant_dt") != std::string::npos);

  const Run missing = qmfsim("simulate lmg-run --config " + (dir / "nope.ini").string(), dir);
  CHECK(missing.status != 0);
  CHECK(json::parse(missing.err).contains("error"));

  const Run usage = qmfsim("simulate not-a-scenario --config " + (dir / "bad.ini").string(), dir);
  CHECK(usage.status != 0);
  CHECK(json::parse(usage.err).contains("error"));
}
