#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "snce/checkpoint.hpp"
#include "snce/cli.hpp"

using namespace snce;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("snce_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

const std::vector<std::string> kTiny{"--n-scenes", "6",  "--obs-len",    "4", "--pred-len", "4",
                                     "--horizon",  "4",  "--epochs",     "2", "--quiet",    "--no-wall-clock"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("missing config file fails with a message") {
  const auto r = cli({"train", "--seed", "1", "--out", scratch("missing").string(), "--config", "/no/such.json"});
  CHECK(r.code != 0);
  CHECK(r.err.find("/no/such.json") != std::string::npos);
}

TEST_CASE("unknown flags and subcommands fail") {
  CHECK(cli({"train", "--seed", "1", "--out", "x", "--bogus"}).code != 0);
  CHECK(cli({"fly"}).code != 0);
  CHECK(cli({"train", "--out", "x"}).code != 0);
}

TEST_CASE("simulate is bit-reproducible") {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  const std::vector<std::string> flags{"--seed", "3", "--n-scenes", "5", "--n-agents", "4"};
  REQUIRE(cli(with({"simulate", "--out", a.string()}, flags)).code == 0);
  REQUIRE(cli(with({"simulate", "--out", b.string()}, flags)).code == 0);
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    CHECK(slurp(entry.path()) == slurp(b / fs::relative(entry.path(), a)));
  }
  CHECK(files == 6);
  CHECK(fs::exists(a / "scenario.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("train twice gives identical checkpoints and logs; eval reads them back") {
  const auto a = scratch("train_a");
  const auto b = scratch("train_b");
  const auto ra = cli(with({"train", "--seed", "2", "--out", a.string()}, kTiny));
  REQUIRE_MESSAGE(ra.code == 0, ra.err);
  REQUIRE(cli(with({"train", "--seed", "2", "--out", b.string()}, kTiny)).code == 0);
  for (const char* name : {"checkpoint.json", "last_checkpoint.json", "train_log.jsonl", "report.json", "config.json"}) {
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
  }
  const auto c = scratch("train_c");
  REQUIRE(cli(with({"train", "--seed", "2", "--out", c.string(), "--workers", "2"}, kTiny)).code == 0);
  CHECK(slurp(a / "train_log.jsonl") == slurp(c / "train_log.jsonl"));
  CHECK(load_checkpoint(a / "checkpoint.json").model.networks()[3]->layers()[1].weight ==
        load_checkpoint(c / "checkpoint.json").model.networks()[3]->layers()[1].weight);
  fs::remove_all(c);
  CHECK(ra.out.find("Average") != std::string::npos);

  const auto ckpt = load_checkpoint(a / "checkpoint.json");
  CHECK(ckpt.run.pred_len == 4);

  const auto json = a / "eval.json";
  const auto e = cli({"eval", "--checkpoint", (a / "checkpoint.json").string(), "--json", json.string()});
  REQUIRE_MESSAGE(e.code == 0, e.err);
  CHECK(e.out.find("Average") != std::string::npos);
  const auto report = nlohmann::json::parse(slurp(json));
  const auto train_report = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(report["fde"] == train_report["validation"]["fde"]);
  CHECK(report["col"] == train_report["validation"]["col"]);

  SUBCASE("prediction length mismatch names both lengths") {
    const auto m = cli({"eval", "--checkpoint", (a / "checkpoint.json").string(), "--pred-len", "12"});
    CHECK(m.code != 0);
    CHECK(m.err.find("pred_len") != std::string::npos);
    CHECK(m.err.find('4') != std::string::npos);
    CHECK(m.err.find("12") != std::string::npos);
  }
  SUBCASE("eval on simulated trajectory files") {
    const auto data = scratch("eval_data");
    REQUIRE(cli({"simulate", "--out", data.string(), "--n-scenes", "4", "--seed", "9"}).code == 0);
    const auto f = cli({"eval", "--checkpoint", (a / "checkpoint.json").string(), "--data", (data / "val").string(),
                        (data / "train").string()});
    CHECK_MESSAGE(f.code == 0, f.err);
    CHECK(f.out.find("val") != std::string::npos);
    fs::remove_all(data);
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("train on trajectory files") {
  const auto data = scratch("file_data");
  REQUIRE(cli({"simulate", "--out", data.string(), "--n-scenes", "6", "--seed", "1"}).code == 0);
  const auto out = scratch("file_train");
  const auto r = cli(with({"train", "--seed", "0", "--out", out.string(), "--train-data", (data / "train").string(),
                           "--val-data", (data / "val").string()},
                          kTiny));
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(out / "checkpoint.json"));
  fs::remove_all(data);
  fs::remove_all(out);
}

TEST_CASE("sweep writes one log line per trial") {
  const auto out = scratch("sweep");
  fs::create_directories(out);
  const auto log = out / "sweep.jsonl";
  const auto r = cli({"sweep", "--seed", "0", "--trials", "2", "--log", log.string(), "--n-scenes", "4",
                      "--obs-len", "4", "--pred-len", "6", "--epochs", "1", "--no-wall-clock"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  std::istringstream lines(slurp(log));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) ++n;
  CHECK(n == 2);
  fs::remove_all(out);
}

TEST_CASE("gradcheck subcommand reports every suite") {
  const auto r = cli({"gradcheck", "--probes", "10"});
  CHECK(r.code == 0);
  CHECK(r.out.find("decoder") != std::string::npos);
}
