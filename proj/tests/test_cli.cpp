#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "swipt/io.hpp"

using namespace swipt;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "swipt_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string in_dir(const std::string& name) { return (workdir() / name).string(); }

Run cli(const std::string& args) {
  const std::string out_file = in_dir("stdout.txt");
  const std::string cmd = "cd '" + workdir().string() + "' && '" SWIPT_CLI_PATH "' " + args + " > '" + out_file +
                          "' 2> '" + in_dir("stderr.txt") + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(out_file);
  return r;
}

std::string field(const std::string& out, const std::string& key) {
  std::istringstream in(out);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind(key + ": ", 0) == 0) return line.substr(key.size() + 2);
  return {};
}

void check_meta(const json& j) {
  REQUIRE(j.contains("meta"));
  CHECK(j["meta"]["version"] == std::string(kToolVersion));
  CHECK(j["meta"]["config_hash"].get<std::string>().size() == 16);
  CHECK(j["meta"].contains("seed"));
}

}  // namespace

TEST_CASE("version and usage errors", "[cli]") {
  const auto v = cli("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find(std::string(kToolVersion)) != std::string::npos);
  CHECK(cli("").code == 2);
  CHECK(cli("design --bogus 3").code == 2);
  CHECK(cli("design --m notanumber").code == 2);
  CHECK(cli("fit-eh --data missing.csv").code == 2);
  CHECK(cli("fit-eh").code == 2);
  CHECK(cli("sweep --rho-grid 0:1:0").code == 2);
  CHECK(cli("sweep --designer learned").code == 2);
  CHECK(cli("design --n 4 --m 5 --onoff-block --pon 0.25").code == 2);
  CHECK(cli("train --topology mesh").code == 2);
  CHECK(cli("simulate").code == 2);
}

TEST_CASE("fit-eh on synthetic data", "[cli]") {
  const auto r = cli("fit-eh --synthetic --points 2000 --seed 7 -o eh.json");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# tool=swipt version=", 0) == 0);
  const json j = read_json(in_dir("eh.json"));
  check_meta(j);
  CHECK(j["meta"]["seed"] == 7);
  CHECK(j["rmse"].get<double>() < 0.02 * kCanonicalLs);
  // The fitted model is usable downstream.
  CHECK(cli("design --m 32 --pa 120 --rho 1 --eh eh.json -o from_fit.json").code == 0);
}

TEST_CASE("fit-eh from a file, reproducibly", "[cli]") {
  write_text(in_dir("data.csv"), dataset_csv(synth_dataset(300, 2000.0, 0.02, 4), RunMeta{}));
  REQUIRE(cli("fit-eh --data data.csv --epochs 500 -o a.json").code == 0);
  REQUIRE(cli("fit-eh --data data.csv --epochs 500 -o b.json").code == 0);
  const auto a = read_json(in_dir("a.json")), b = read_json(in_dir("b.json"));
  CHECK(a == b);
  write_text(in_dir("bad.csv"), "p_in_uw,p_out_uw\n1,abc\n");
  CHECK(cli("fit-eh --data bad.csv").code == 2);
  CHECK(cli("fit-eh --data data.csv --epochs 200 --lr 1e308").code == 3);
}

TEST_CASE("design fingerprints", "[cli]") {
  auto r = cli("design --m 32 --pa 5 --rho 1 -o d5.json");
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "M_on") == "1");
  r = cli("design --m 32 --pa 120 --rho 1 -o d120.json");
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "M_on") == "12");
  const auto j = read_json(in_dir("d120.json"));
  check_meta(j);
  CHECK(j["meta"]["m_on"] == 12);
  const auto c = constellation_from_json(j);
  CHECK(std::abs(c.average_power() - 120.0) <= 1e-9 * 120.0);

  REQUIRE(cli("design --m 32 --pa 120 --rho 1 -o again.json").code == 0);
  CHECK(read_text(in_dir("d120.json")) == read_text(in_dir("again.json")));

  r = cli("design --m 16 --n 2 --pa 5 --rho 0.5 -o cb.json");
  REQUIRE(r.code == 0);
  CHECK(!field(r.out, "dmin_sq").empty());
  const auto cb = load_design(in_dir("cb.json"));
  CHECK(cb.m == 16);
  CHECK(cb.n == 2);

  r = cli("design --n 4 --m 4 --onoff-block --pon 0.25 --pa 5 -o block.json");
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "n_on") == "1");
  const auto sim = cli("simulate --design block.json --snr 50 --trials 20000 --onoff-decoder");
  REQUIRE(sim.code == 0);
  CHECK(sim.out.find("ser,ci,pd_uw") != std::string::npos);
}

TEST_CASE("config files with flag overrides", "[cli]") {
  write_text(in_dir("run.toml"), "[design]\nm = 32\npa = 120.0\nrho = 1.0\n");
  auto r = cli("--config run.toml design -o cfg.json");
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "M_on") == "12");
  r = cli("--config run.toml design --pa 5 -o cfg5.json");
  REQUIRE(r.code == 0);
  CHECK(field(r.out, "M_on") == "1");
  CHECK(cli("--config absent.toml design").code == 2);
}

TEST_CASE("config hash ignores output paths only", "[cli]") {
  auto hash_of = [](const std::string& out) {
    const auto pos = out.find("config_hash=");
    return out.substr(pos + 12, 16);
  };
  const auto a = cli("design --m 8 -o x.json"), b = cli("design --m 8 -o y.json"), c = cli("design --m 9 -o x.json");
  CHECK(hash_of(a.out) == hash_of(b.out));
  CHECK(hash_of(a.out) != hash_of(c.out));
}

TEST_CASE("train, sweep and simulate", "[cli]") {
  auto r = cli("train --topology bc --m 2,2 --iterations 40 --hidden 16 --eval-trials 5000 -o bc.json "
               "--trace bc.csv --extract bc_design.json");
  REQUIRE(r.code == 0);
  CHECK(!field(r.out, "ser_user2").empty());
  CHECK(!field(r.out, "pd_uw_rx2").empty());
  const auto bc = read_json(in_dir("bc.json"));
  check_meta(bc);
  CHECK(bc["topology"]["snr"] == json::array({100.0, 50.0}));
  CHECK(read_text(in_dir("bc.csv")).rfind("# tool=swipt", 0) == 0);
  CHECK(constellation_from_json(read_json(in_dir("bc_design.json"))).m == 4);

  r = cli("train --topology ic --m 4,2 --snr 20 --iterations 30 --hidden 8 --n 2 --eval-trials 4096 -o ic.json "
          "--extract ic_design.json");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(in_dir("ic_design_tx1.json")));
  CHECK(load_design(in_dir("ic_design_tx2.json")).n == 2);

  r = cli("train --topology mac --m 2,4 --iterations 20 --hidden 8 --eval-trials 0 -o mac.json");
  REQUIRE(r.code == 0);

  REQUIRE(cli("train --m 4 --snr 50 --pa 1 --iterations 200 --hidden 16 --eval-trials 0 -o p2p.json").code == 0);
  r = cli("simulate --system p2p.json --snr 50 --trials 20000");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# tool=swipt", 0) == 0);
  r = cli("sweep --designer learned --system p2p.json --trials 5000 -o learned.csv");
  REQUIRE(r.code == 0);
  CHECK(parse_csv(read_text(in_dir("learned.csv"))).size() == 2);

  r = cli("sweep --m 16 --pa 120 --rho-grid 0:1:3 --trials 5000 -o sweep.csv");
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(read_text(in_dir("sweep.csv")));
  REQUIRE(rows.size() == 4);
  CHECK(parse_double(rows[3][3]) >= parse_double(rows[1][3]));

  r = cli("simulate --qam 16 --pa 5 --snr 50 --trials 10000 -o qam.csv");
  REQUIRE(r.code == 0);
  CHECK(read_text(in_dir("qam.csv")) == r.out);

  CHECK(cli("train --m 4 --lr 1e300 --iterations 20 --hidden 4 --eval-trials 0 -o boom.json").code == 3);
  CHECK(cli("train --topology bc --m 4 -o x.json").code == 2);
}
