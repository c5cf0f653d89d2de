#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "listid/cli.hpp"
#include "listid/config.hpp"

using namespace listid;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("listid_cli_" + std::to_string(getpid()) + "_" + tag + "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI binary with stdout/stderr captured into files inside `dir`.
int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string(LISTID_CLI_PATH) + " --out-dir " + dir.string() + " " + args + " > " +
                          (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) { return json::parse(read_file(p.string())); }

}  // namespace

TEST(ParseConfig, MinimalSimulateConfig) {
  const auto cfg = parse_config(R"({"command":"simulate-identify","collection":"C_1","k":2,"target":2,"horizon":10})");
  EXPECT_EQ(cfg.command, "simulate-identify");
  EXPECT_EQ(cfg.k, 2U);
  EXPECT_EQ(cfg.identifier, "listidentify");
  EXPECT_EQ(cfg.seed, 0U);
}

TEST(ParseConfig, RejectsZeroK) {
  try {
    parse_config(R"({"command":"check-angluin","collection":"C_1","k":0})");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("\"k\""), std::string::npos);
  }
}

TEST(ParseConfig, RejectsUnknownFieldByName) {
  try {
    parse_config(R"({"command":"check-angluin","foo":1,"trials":0})");
    FAIL() << "expected ParseError";
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("foo"), std::string::npos);
    // All problems are reported together.
    EXPECT_NE(what.find("trials"), std::string::npos);
  }
  EXPECT_THROW(parse_config("{not json"), Error);
  EXPECT_THROW(parse_config(R"({"command":"nope"})"), Error);
  EXPECT_THROW(parse_config(R"({"command":"rates","k":"two"})"), Error);
}

TEST(ParseConfig, RoundTrip) {
  const std::string text = R"({"command":"lower-bound","collection":{"kind":"canonical","k_max":2},"k":2,
    "shared_x":-5,"languages":[1,2,4],"horizon":20,"trials":100,"monte_carlo_horizon":10,"seed":9,
    "fit_window":[2,8],"fit":true,"out":"x.csv","distribution":{"kind":"half_mass_point","x0":1,"language":[1,2]}})";
  const auto cfg = parse_config(text);
  EXPECT_EQ(config_from_json(to_json(cfg)), cfg);
  EXPECT_EQ(cfg.shared_x, -5);
  EXPECT_EQ(cfg.languages, (std::vector<Index>{1, 2, 4}));
}

TEST(CollectionFromJson, Shapes) {
  EXPECT_EQ(collection_from_json("C_3").k_max(), 3U);
  EXPECT_FALSE(collection_from_json("C_inf").k_max().has_value());
  EXPECT_EQ(collection_from_json(json::parse(R"({"kind":"canonical","k_max":"inf"})")).k_max(), std::nullopt);
  const auto ex = collection_from_json(
      json::parse(R"({"kind":"explicit","languages":[[1,2],{"cofinite":[3]}],"universe":[0,1,2,3,4],"telltale_cap":2})"));
  EXPECT_EQ(ex.size(), 2U);
  EXPECT_EQ(ex.language_at(2), Language::finite({0, 1, 2, 4}));
  EXPECT_EQ(ex.telltale_cap(), 2U);
  EXPECT_THROW(collection_from_json("C_x"), Error);
  EXPECT_THROW(collection_from_json(json::parse(R"({"kind":"canonical","k_max":0})")), Error);
  EXPECT_THROW(collection_from_json(json::parse(R"({"kind":"explicit","languages":[[1]],"bogus":1})")), Error);
}

TEST(DistributionFromJson, Shapes) {
  const auto h = distribution_from_json(json::parse(R"({"kind":"half_mass_point","x0":2,"language":{"cofinite":[0]}})"));
  EXPECT_DOUBLE_EQ(h.mass(2), 0.5);
  const auto g = distribution_from_json(json::parse(R"({"kind":"enumeration_geometric","sequence":[4,2,4,2]})"));
  EXPECT_DOUBLE_EQ(g.mass(4), 0.625);
  EXPECT_THROW(distribution_from_json(json::parse(R"({"kind":"uniform"})")), Error);
  const auto e = enumeration_from_json(json::parse(R"({"kind":"sequence","values":[1,1,2]})"), Language::finite({1, 2}));
  EXPECT_EQ(e.at(3), 2);
  EXPECT_THROW(enumeration_from_json(json::parse(R"({"kind":"sequence","values":[3]})"), Language::finite({1, 2})),
               Error);
}

TEST(IdentifierSpecs, ParseAndBuild) {
  const auto c = Collection::canonical(1);
  EXPECT_EQ(cli::parse_index_list("1,2,30", "x"), (std::vector<Index>{1, 2, 30}));
  EXPECT_THROW(cli::parse_index_list("1,,2", "x"), Error);
  EXPECT_THROW(cli::parse_index_list("0", "x"), Error);
  EXPECT_EQ(cli::make_identifier("constant:4,5", c, 2).identifier(Sample{}).indices, (std::vector<Index>{4, 5}));
  EXPECT_EQ(cli::make_identifier("listidentify", c, 2).identifier(Sample{}).indices, (std::vector<Index>{1, 2}));
  // Runs even where the level-k check fails.
  EXPECT_EQ(cli::make_identifier("listidentify", c, 1).identifier(Sample{}).indices, (std::vector<Index>{1}));
  EXPECT_THROW(cli::make_identifier("magic", c, 2), Error);
  EXPECT_THROW(cli::make_identifier("stratified", c, 1), Error);

  const Bits bits = {1, 1, 1};
  EXPECT_EQ(cli::make_prob_identifier("mixture:7/8;decoys=3,4,5", c, 2)(Sample{}, bits).size(), 2U);
  EXPECT_EQ(cli::make_prob_identifier("splitter;decoys=3,4,5", c, 2)(Sample{}, {}).indices,
            (std::vector<Index>{4, 5}));
  EXPECT_THROW(cli::make_prob_identifier("mixture:7/6;decoys=3", c, 2), Error);
  EXPECT_THROW(cli::make_prob_identifier("splitter;x=1", c, 2), Error);
}

TEST(Dispatch, InProcessWritesOutputAndManifest) {
  const auto dir = fresh_dir("inproc");
  std::ostringstream log;
  cli::Context ctx;
  ctx.out_dir = dir;
  ctx.log = &log;
  const auto cfg = parse_config(R"({"command":"simulate-identify","collection":"C_1","k":2,"target":3,"horizon":5})");
  ASSERT_EQ(cli::dispatch(cfg, ctx), 0) << log.str();
  const std::string csv = read_file((dir / "transcript.csv").string());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x_t,guess_1,guess_2,contains_target");
  const json manifest = read_json(dir / "transcript.csv.manifest.json");
  EXPECT_EQ(manifest["outputs"][0]["sha256"], cli::sha256_hex(csv));
  EXPECT_EQ(manifest["config"]["target"], 3);
  fs::remove_all(dir);
}

TEST(Dispatch, Sha256KnownVector) {
  EXPECT_EQ(cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CliBinary, CheckAngluinC3) {
  const auto dir = fresh_dir("check");
  ASSERT_EQ(run_cli("check-angluin --collection C_3 --k 3", dir), 0);
  const json v = read_json(dir / "verdict.json");
  EXPECT_FALSE(v["holds"].get<bool>());
  EXPECT_EQ(v["failing_index"], 1);
  EXPECT_EQ(read_json(dir / "stdout.txt"), v);
  fs::remove_all(dir);
}

TEST(CliBinary, AdversaryZeroBudget) {
  const auto dir = fresh_dir("adv");
  ASSERT_EQ(run_cli("adversary --collection C_1 --k 1 --budget 0", dir), 0);
  const json r = read_json(dir / "run.json");
  EXPECT_TRUE(r["witnesses"].empty());
  EXPECT_TRUE(r["emitted"].empty());
  fs::remove_all(dir);
}

TEST(CliBinary, StratifyFailingConditionExitsTwo) {
  const auto dir = fresh_dir("strat");
  EXPECT_EQ(run_cli("stratify --collection C_2 --k 2", dir), 2);
  EXPECT_NE(read_file((dir / "stderr.txt").string()).find("ConditionNotSatisfied"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "strata.json"));
  EXPECT_EQ(run_cli("stratify --collection C_2 --k 3", dir), 0);
  EXPECT_TRUE(fs::exists(dir / "strata.json"));
  fs::remove_all(dir);
}

TEST(CliBinary, ConfigFileAndOverrides) {
  const auto dir = fresh_dir("cfg");
  const auto cfg_path = dir / "c.json";
  {
    std::ofstream out(cfg_path);
    out << R"({"collection":"C_2","k":3,"target":4,"horizon":12,"out":"t.csv"})";
  }
  ASSERT_EQ(run_cli("simulate-identify --config " + cfg_path.string() + " --horizon 7", dir), 0);
  const std::string csv = read_file((dir / "t.csv").string());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 8);
  EXPECT_EQ(run_cli("simulate-identify --config " + cfg_path.string() + " --k 0", dir), 2);
  EXPECT_EQ(run_cli("check-angluin --collection '{\"kind\":\"canonical\"}' --k 1", dir), 2);
  fs::remove_all(dir);
}

TEST(CliBinary, OutDirFromEnvironment) {
  const auto dir = fresh_dir("env");
  const auto target = dir / "from_env";
  const std::string cmd = std::string(cli::kOutDirEnv) + "=" + target.string() + " " + LISTID_CLI_PATH +
                          " check-angluin --collection C_1 --k 2 > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(target / "verdict.json"));
  fs::remove_all(dir);
}

TEST(CliBinary, RatesFitFailureExitsTwo) {
  const auto dir = fresh_dir("fit");
  // Target Z never fails, so there is nothing to fit.
  const std::string args =
      "rates --collection C_1 --k 2 --target 1 --horizon 5 --trials 50 --fit "
      "--dist '{\"kind\":\"enumeration_geometric\",\"language\":{\"cofinite\":[]}}'";
  EXPECT_EQ(run_cli(args, dir), 2);
  EXPECT_TRUE(fs::exists(dir / "curve.csv"));
  EXPECT_TRUE(read_json(dir / "curve.csv.fit.json").contains("error"));
  fs::remove_all(dir);
}
