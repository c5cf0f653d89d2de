// listid: command-line front end. Every subcommand accepts --config <file>
// (a RunConfig JSON object); flags given on the command line override it.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "listid/cli.hpp"

namespace {

using listid::json;

struct Flags {
  std::string config;
  std::string collection;
  std::optional<unsigned> k;
  std::optional<listid::Index> target;
  std::string identifier;
  std::string prob_identifier;
  std::string dist;
  std::optional<std::size_t> horizon, budget, trials, n_bits, mc_horizon;
  std::optional<unsigned> depth;
  std::optional<long long> shared_x;
  std::string languages;
  std::string out;
  bool fit = false;
};

json load_json_arg(const std::string& arg, const std::string& what) {
  if (std::filesystem::is_regular_file(arg)) return listid::parse_json_text(listid::read_file(arg), what);
  // Inline JSON or a shorthand such as C_2.
  if (!arg.empty() && (arg[0] == '{' || arg[0] == '[')) return listid::parse_json_text(arg, what);
  return json(arg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-list language identification: simulation and experiments"};
  app.fallthrough();
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out_dir;
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--threads", threads, "Worker threads for Monte Carlo trials")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, std::string("Output directory (default $") + listid::cli::kOutDirEnv + " or .)");

  Flags f;
  for (const auto& name : listid::known_commands()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", f.config, "RunConfig JSON file");
    sub->add_option("--collection", f.collection, "Collection JSON file, inline JSON, or C_<m> / C_inf");
    sub->add_option("--k", f.k, "List size / predicate level");
    sub->add_option("--target", f.target, "Target index");
    sub->add_option("--identifier", f.identifier,
                    "listidentify | stratified | constant:i,j | custom-exec:<path> | boosted:<spec>");
    sub->add_option("--prob-identifier", f.prob_identifier,
                    "mixture:<num>/<2^r>;decoys=i,j,k | splitter;decoys=i,j,k | deterministic");
    sub->add_option("--dist", f.dist, "Distribution JSON file or inline JSON");
    sub->add_option("--horizon", f.horizon);
    sub->add_option("--budget", f.budget);
    sub->add_option("--trials", f.trials);
    sub->add_option("--depth", f.depth);
    sub->add_option("--n", f.n_bits, "Number of bits to extract");
    sub->add_option("--shared-x", f.shared_x);
    sub->add_option("--languages", f.languages, "Comma-separated designated indices");
    sub->add_option("--mc-horizon", f.mc_horizon, "Monte Carlo horizon for lower-bound");
    sub->add_option("--out", f.out, "Output file name inside the output directory");
    sub->add_flag("--fit", f.fit, "Fit an exponential to the error curve");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  listid::RunConfig cfg;
  try {
    json j = f.config.empty() ? json::object() : listid::parse_json_text(listid::read_file(f.config), f.config);
    if (!j.is_object()) throw listid::Error(listid::ErrorCode::ParseError, "config must be a JSON object");
    j["command"] = command;
    if (!f.collection.empty()) j["collection"] = load_json_arg(f.collection, "collection");
    if (f.k) j["k"] = *f.k;
    if (f.target) j["target"] = *f.target;
    if (!f.identifier.empty()) j["identifier"] = f.identifier;
    if (!f.prob_identifier.empty()) j["prob_identifier"] = f.prob_identifier;
    if (!f.dist.empty()) j["distribution"] = load_json_arg(f.dist, "distribution");
    if (f.horizon) j["horizon"] = *f.horizon;
    if (f.budget) j["budget"] = *f.budget;
    if (f.trials) j["trials"] = *f.trials;
    if (f.depth) j["depth"] = *f.depth;
    if (f.n_bits) j["n_bits"] = *f.n_bits;
    if (f.shared_x) j["shared_x"] = *f.shared_x;
    if (!f.languages.empty()) j["languages"] = listid::cli::parse_index_list(f.languages, "languages");
    if (f.mc_horizon) j["monte_carlo_horizon"] = *f.mc_horizon;
    if (f.fit) j["fit"] = true;
    if (!f.out.empty()) j["out"] = f.out;
    if (seed) j["seed"] = *seed;
    cfg = listid::config_from_json(j);
  } catch (const listid::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  listid::cli::Context ctx;
  ctx.threads = threads;
  if (!out_dir.empty()) {
    ctx.out_dir = out_dir;
  } else if (const char* env = std::getenv(listid::cli::kOutDirEnv)) {
    ctx.out_dir = env;
  }
  return listid::cli::dispatch(cfg, ctx);
}
