#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SOCTA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "socta_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallConfig = R"cfg({
  "version": "socta-config/1",
  "seed": 11,
  "data": {"reference_cycles": 4, "target_cycles": 2, "profile": {"duration_s": 600}},
  "wavelet": {"levels": 1, "basis": "haar"},
  "lag": 3,
  "reference_network": "L(4)N(4)",
  "shared_network": "L(4)N(4)",
  "specific_network": "L(4)N(4)",
  "train": {"max_epochs": 4},
  "transfer_train": {"max_epochs": 4}
})cfg";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  const auto dir = fresh_dir("codes");
  CHECK(run("--out " + dir.string() + " evaluate") == 2);
  CHECK(run("--out " + dir.string() + " train-transfer") == 2);
  CHECK(run("--config " + (dir / "absent.json").string() + " simulate") == 2);

  {
    std::ofstream(dir / "bad.json") << R"({"wavelet": {"levels": -2}})";
    std::ofstream(dir / "unknown.json") << R"({"sneed": 1})";
    std::ofstream(dir / "garbled.json") << "{ not json";
  }
  CHECK(run("--config " + (dir / "bad.json").string() + " simulate") == 1);
  CHECK(run("--config " + (dir / "unknown.json").string() + " simulate") == 1);
  CHECK(run("--config " + (dir / "garbled.json").string() + " simulate") == 1);
  CHECK(run("no-such-command") == 1);
  CHECK(run("--help") == 0);
}

TEST_CASE("small end-to-end run") {
  const auto dir = fresh_dir("e2e");
  const auto cfg = dir / "config.json";
  std::ofstream(cfg) << kSmallConfig;
  const std::string base = "--config " + cfg.string() + " --out " + (dir / "run").string() + " ";
  for (const char* cmd : {"simulate", "train-reference", "evaluate", "monitor", "train-transfer", "predict"}) {
    CAPTURE(cmd);
    REQUIRE(run(base + cmd) == 0);
  }
  REQUIRE(run(base + "report --svg") == 0);
  const auto metrics = slurp(dir / "run" / "metrics.json");
  REQUIRE(run(base + "report") == 0);
  CHECK(slurp(dir / "run" / "metrics.json") == metrics);
  CHECK(fs::exists(dir / "run" / "predictions_transfer_tgt1.svg"));

  const auto manifest = nlohmann::json::parse(slurp(dir / "run" / "manifest.json"));
  for (const char* cmd : {"simulate", "train-reference", "monitor", "train-transfer", "predict", "report"}) {
    CAPTURE(cmd);
    REQUIRE(manifest["runs"].contains(cmd));
    CHECK(manifest["runs"][cmd]["seed"] == 11);
    CHECK(manifest["runs"][cmd]["config_sha256"].get<std::string>().size() == 64);
  }

  // The shifted-temperature target triggers Case II.
  CHECK(slurp(dir / "run" / "verdicts_tgt1.csv").find(",II\n") != std::string::npos);

  // Artifacts from another producer are refused.
  fs::copy_file(dir / "run" / "reference_model.json", dir / "run" / "wrong.json");
  CHECK(run(base + "predict --model " + (dir / "run" / "wrong.json").string()) == 1);
}

}
