#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <openssl/evp.h>

#include "listid/listid.hpp"
#include "listid/config.hpp"

namespace listid::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutDirEnv = "LISTID_OUT_DIR";

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

/// Writes result files into one directory, each with a sibling
/// `<name>.manifest.json` holding the config, version, wall time and digest.
class OutputSink {
 public:
  OutputSink(std::filesystem::path dir, json config)
      : dir_(std::move(dir)), config_(std::move(config)), start_(std::chrono::steady_clock::now()) {}

  std::filesystem::path write(const std::string& name, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
      out << content;
    }
    json manifest;
    manifest["config"] = config_;
    manifest["version"] = kVersion;
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    manifest["outputs"] = json::array({{{"file", name}, {"sha256", sha256_hex(content)}}});
    std::ofstream m(dir_ / (name + ".manifest.json"), std::ios::binary);
    if (!m) throw Error(ErrorCode::IoError, "cannot write manifest for " + name);
    m << manifest.dump(2) << "\n";
    written_.push_back(path);
    return path;
  }

  const std::vector<std::filesystem::path>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  json config_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::filesystem::path> written_;
};

/// External identifier speaking a line protocol over pipes: each request is
/// the sample so far as space-separated integers, each reply the guessed
/// indices as space-separated integers.
class ExecIdentifier {
 public:
  explicit ExecIdentifier(const std::string& path) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) throw Error(ErrorCode::IoError, "pipe failed");
    pid_ = fork();
    if (pid_ < 0) throw Error(ErrorCode::IoError, "fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      execl(path.c_str(), path.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_ = fdopen(to_child[1], "w");
    out_ = fdopen(from_child[0], "r");
  }

  ExecIdentifier(const ExecIdentifier&) = delete;
  ExecIdentifier& operator=(const ExecIdentifier&) = delete;

  ~ExecIdentifier() {
    if (in_) std::fclose(in_);
    if (out_) std::fclose(out_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
  }

  GuessList operator()(const Sample& s) {
    std::string line;
    for (Element x : s.sequence()) line += (line.empty() ? "" : " ") + std::to_string(x);
    line += "\n";
    if (std::fputs(line.c_str(), in_) < 0 || std::fflush(in_) != 0) {
      throw Error(ErrorCode::IoError, "identifier process closed its input");
    }
    std::string reply;
    for (int ch; (ch = std::fgetc(out_)) != EOF && ch != '\n';) reply += static_cast<char>(ch);
    if (reply.empty() && std::feof(out_)) throw Error(ErrorCode::IoError, "identifier process exited");
    GuessList g;
    std::istringstream ss(reply);
    for (Index i; ss >> i;) g.indices.push_back(i);
    return g;
  }

 private:
  pid_t pid_ = -1;
  FILE* in_ = nullptr;
  FILE* out_ = nullptr;
};

/// Holds whatever an identifier built from a spec string refers to.
struct IdentifierBundle {
  Identifier identifier;
  std::shared_ptr<Stratification> stratification;
  std::shared_ptr<ExecIdentifier> process;
};

inline std::vector<Index> parse_index_list(const std::string& s, const std::string& field) {
  std::vector<Index> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "field \"" + field + "\": bad index \"" + item + "\"");
    }
  }
  return out;
}

/// listidentify | stratified | constant:i,j,... | custom-exec:<path> | boosted:<spec>
///
/// listidentify also runs on families failing the level-k check (the
/// adversary and lower-bound commands need exactly that); indices without a
/// certificate are then never chosen.
inline IdentifierBundle make_identifier(const std::string& spec, const Collection& c, unsigned k) {
  IdentifierBundle b;
  if (spec == "listidentify") {
    b.identifier = make_list_identifier(c, k, available_telltales(c, k));
  } else if (spec == "stratified") {
    b.stratification = std::make_shared<Stratification>(stratify(c, k));
    b.identifier = stratified_identifier(c, *b.stratification);
  } else if (spec.rfind("constant:", 0) == 0) {
    b.identifier = constant_identifier(parse_index_list(spec.substr(9), "identifier"));
  } else if (spec.rfind("custom-exec:", 0) == 0) {
    b.process = std::make_shared<ExecIdentifier>(spec.substr(12));
    b.identifier = [p = b.process](const Sample& s) { return (*p)(s); };
  } else if (spec.rfind("boosted:", 0) == 0) {
    IdentifierBundle inner = make_identifier(spec.substr(8), c, k);
    b = inner;
    b.identifier = boosted_identifier(inner.identifier, c, k);
  } else {
    throw Error(ErrorCode::ParseError, "field \"identifier\": unknown identifier \"" + spec + "\"");
  }
  return b;
}

/// mixture:<num>/<2^r>;decoys=i,j,... | splitter;decoys=i,j,... | deterministic
/// The good branch of a mixture is the list identifier.
inline ProbabilisticIdentifier make_prob_identifier(const std::string& spec, const Collection& c, unsigned k) {
  std::string head = spec;
  std::vector<Index> decoys;
  if (const auto semi = spec.find(';'); semi != std::string::npos) {
    head = spec.substr(0, semi);
    const std::string tail = spec.substr(semi + 1);
    if (tail.rfind("decoys=", 0) != 0) throw Error(ErrorCode::ParseError, "field \"prob_identifier\": expected decoys=");
    decoys = parse_index_list(tail.substr(7), "prob_identifier");
  }
  if (head == "deterministic") return derandomizable(make_list_identifier(c, k, available_telltales(c, k)));
  if (head == "splitter") return decoy_splitter(std::move(decoys));
  if (head.rfind("mixture:", 0) == 0) {
    const std::string frac = head.substr(8);
    const auto slash = frac.find('/');
    try {
      const std::uint64_t num = std::stoull(frac.substr(0, slash));
      const std::uint64_t den = slash == std::string::npos ? 1 : std::stoull(frac.substr(slash + 1));
      if (den == 0 || (den & (den - 1)) != 0) throw std::invalid_argument("den");
      return coin_mixture(num, static_cast<unsigned>(std::countr_zero(den)),
                          make_list_identifier(c, k, available_telltales(c, k)), std::move(decoys));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "field \"prob_identifier\": mixture needs a dyadic num/2^r");
    }
  }
  throw Error(ErrorCode::ParseError, "field \"prob_identifier\": unknown spec \"" + spec + "\"");
}

struct Context {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
  std::ostream* log = nullptr;
};

namespace detail {

template <typename T>
T need(const std::optional<T>& v, const char* field) {
  if (!v) throw Error(ErrorCode::ParseError, std::string("field \"") + field + "\": required");
  return *v;
}

inline Collection need_collection(const RunConfig& cfg) {
  if (cfg.collection.is_null()) throw Error(ErrorCode::ParseError, "field \"collection\": required");
  return collection_from_json(cfg.collection);
}

inline std::string out_name(const RunConfig& cfg, const char* fallback) { return cfg.out.empty() ? fallback : cfg.out; }

inline json guesses_json(const GuessList& g) { return g.indices; }

inline std::string check_angluin(const RunConfig& cfg) {
  const Collection c = need_collection(cfg);
  const unsigned k = need(cfg.k, "k");
  const AngluinCheck r = check_k_angluin(c, k);
  json j = {{"collection", c.describe()}, {"k", k}, {"holds", r.holds}, {"exact", r.exact}};
  j["failing_index"] = r.failing_index ? json(*r.failing_index) : json(nullptr);
  return j.dump(2) + "\n";
}

inline std::string simulate_identify(const RunConfig& cfg) {
  const Collection c = need_collection(cfg);
  const unsigned k = need(cfg.k, "k");
  const Index z = need(cfg.target, "target");
  const std::size_t horizon = need(cfg.horizon, "horizon");
  const Language target = c.language_at(z);
  const Enumeration e = cfg.enumeration ? enumeration_from_json(*cfg.enumeration, target) : Enumeration::canonical(target);
  const IdentifierBundle id = make_identifier(cfg.identifier, c, k);
  const Transcript tr = run_identifier(id.identifier, e, horizon);
  std::string csv = "t,x_t";
  for (unsigned i = 1; i <= k; ++i) csv += ",guess_" + std::to_string(i);
  csv += ",contains_target\n";
  for (const auto& row : tr) {
    csv += std::to_string(row.t) + "," + std::to_string(row.x);
    const GuessList padded = row.guesses.padded(k);
    for (unsigned i = 0; i < k; ++i) csv += "," + (i < padded.size() ? std::to_string(padded.indices[i]) : "");
    csv += std::string(",") + (identifies(c, row.guesses, z) ? "1" : "0") + "\n";
  }
  return csv;
}

inline std::string adversary(const RunConfig& cfg) {
  const Collection c = need_collection(cfg);
  const unsigned k = need(cfg.k, "k");
  const std::size_t budget = need(cfg.budget, "budget");
  const IdentifierBundle id = make_identifier(cfg.identifier, c, k);
  const AdversaryRun run = adv_enum(c, k, id.identifier, budget);
  const LimitReport lim = limit_language(run);
  json j;
  j["k"] = run.k;
  j["root_level"] = run.root_level;
  j["budget"] = run.budget;
  j["status"] = run.status == AdversaryStatus::ChainCovered ? "chain_covered" : "budget_exhausted";
  j["emitted"] = run.emitted;
  json history = json::array();
  for (std::size_t i = 0; i < run.chain_history.size(); ++i) {
    history.push_back({{"t", run.invocation_times[i]}, {"chain", run.chain_history[i]}});
  }
  j["chain_history"] = std::move(history);
  json witnesses = json::array();
  for (const auto& w : run.witnesses) {
    witnesses.push_back({{"t", w.t}, {"level", w.level}, {"kind", w.kind == Witness::Kind::Jump ? "jump" : "starve"}});
  }
  j["witnesses"] = std::move(witnesses);
  j["starved_on"] = run.starved_on ? json(*run.starved_on) : json(nullptr);
  j["invariant_checks"] = run.invariant_checks;
  j["limit"] = {{"level", lim.level},           {"index", lim.index},
                {"prefix", lim.prefix},         {"stable", lim.stable},
                {"settle_invocation", lim.settle_invocation}, {"window_start", lim.window_start},
                {"window_size", lim.window_size}};
  if (lim.index) j["limit"]["language"] = c.language_at(lim.index).describe();
  return j.dump(2) + "\n";
}

inline std::string stratify_cmd(const RunConfig& cfg) {
  const Collection c = need_collection(cfg);
  const unsigned k = need(cfg.k, "k");
  const Stratification st = stratify(c, k);
  json strata = json::array();
  for (std::size_t s = 0; s < st.strata.size(); ++s) {
    json entry;
    const unsigned level = st.level_of(s);
    entry["level"] = level;
    if (st.canonical) {
      entry["exclusion_size"] = st.exclusion_sizes[s] ? json(*st.exclusion_sizes[s]) : json(nullptr);
      entry["first_members"] = st.members_upto(c, s, 64);
    } else {
      entry["members"] = st.strata[s];
      json tt = json::object();
      for (Index i : st.strata[s]) {
        if (const ElementSet* t = st.telltales.lookup(i, level)) tt[std::to_string(i)] = *t;
      }
      entry["telltales"] = std::move(tt);
    }
    const auto members = st.canonical ? st.members_upto(c, s, 64) : st.strata[s];
    entry["empty"] = st.canonical ? !st.exclusion_sizes[s].has_value() : st.strata[s].empty();
    entry["identifiable"] = verify_stratum_identifiable(c, members, level, st.telltales);
    strata.push_back(std::move(entry));
  }
  json j = {{"collection", c.describe()}, {"k", k}, {"strata", std::move(strata)}};
  return j.dump(2) + "\n";
}

inline std::string derandomize_cmd(const RunConfig& cfg) {
  const Collection c = need_collection(cfg);
  const unsigned k = need(cfg.k, "k");
  const Index z = need(cfg.target, "target");
  const unsigned depth = need(cfg.depth, "depth");
  if (!cfg.prob_identifier) throw Error(ErrorCode::ParseError, "field \"prob_identifier\": required");
  const ProbabilisticIdentifier a = make_prob_identifier(*cfg.prob_identifier, c, k);
  const Language target = c.language_at(z);
  const Enumeration e = cfg.enumeration ? enumeration_from_json(*cfg.enumeration, target) : Enumeration::canonical(target);
  const auto prefix = e.prefix(depth);
  const ComputationTree tree = build_tree(a, prefix, depth);
  json rows = json::array();
  for (unsigned t = 1; t + 1 <= depth; ++t) {
    const GuessList g = derandomize(tree, c, k, t);
    rows.push_back({{"t", t},
                    {"output", guesses_json(g)},
                    {"contains_target", identifies(c, g, z)},
                    {"level_fraction", level_fraction_identifying(tree, c, z, t + 1).str()}});
  }
  json j = {{"collection", c.describe()}, {"k", k}, {"target", z}, {"depth", depth}, {"levels", std::move(rows)}};
  return j.dump(2) + "\n";
}

inline std::string extract_bits_cmd(const RunConfig& cfg) {
  if (!cfg.distribution) throw Error(ErrorCode::ParseError, "field \"distribution\": required");
  const ValidDistribution d = distribution_from_json(*cfg.distribution);
  const std::size_t n = need(cfg.n_bits, "n_bits");
  Rng rng(cfg.seed);
  BitExtractor ex;
  Bits bits;
  // Streams with a single-point support never anchor; stop after a generous cap.
  const std::size_t cap = 64 * n + 1'000'000;
  while (bits.size() < n && ex.consumed() < cap) {
    if (auto b = ex.feed(d.draw(rng))) bits.push_back(*b);
  }
  std::string s;
  std::size_t ones = 0;
  for (auto b : bits) {
    s += b ? '1' : '0';
    ones += b;
  }
  json j = {{"n_bits", bits.size()},
            {"complete", bits.size() == n},
            {"consumed", ex.consumed()},
            {"mean", bits.empty() ? 0.0 : static_cast<double>(ones) / static_cast<double>(bits.size())},
            {"bits", s}};
  if (!bits.empty()) {
    const auto chi = stats::chi_square_bits(bits);
    const auto runs = stats::runs_test(bits);
    j["chi_square_p"] = fmt_double(chi.p_value);
    j["runs_p"] = fmt_double(runs.p_value);
  }
  return j.dump(2) + "\n";
}

inline std::string curve_csv(const ErrorCurve& curve) {
  std::string csv = "t,failures,trials,e_hat,ci_lo,ci_hi\n";
  for (const auto& p : curve.points) {
    csv += std::to_string(p.t) + "," + std::to_string(p.failures) + "," + std::to_string(p.trials) + "," +
           fmt_double(p.e_hat) + "," + fmt_double(p.ci_lo) + "," + fmt_double(p.ci_hi) + "\n";
  }
  return csv;
}

}  // namespace detail

/// Runs one configured command. Returns the process exit status: 0 on
/// success, 1 on an invariant violation, 2 on configuration or precondition
/// errors.
inline int dispatch(const RunConfig& cfg, const Context& ctx) {
  std::ostream& log = ctx.log ? *ctx.log : std::cerr;
  try {
    OutputSink sink(ctx.out_dir, to_json(cfg));
    const std::string& cmd = cfg.command;
    if (cmd == "check-angluin") {
      const std::string out = detail::check_angluin(cfg);
      sink.write(detail::out_name(cfg, "verdict.json"), out);
      std::cout << out;
    } else if (cmd == "simulate-identify") {
      sink.write(detail::out_name(cfg, "transcript.csv"), detail::simulate_identify(cfg));
    } else if (cmd == "adversary") {
      sink.write(detail::out_name(cfg, "run.json"), detail::adversary(cfg));
    } else if (cmd == "stratify") {
      sink.write(detail::out_name(cfg, "strata.json"), detail::stratify_cmd(cfg));
    } else if (cmd == "derandomize") {
      sink.write(detail::out_name(cfg, "derandomize.json"), detail::derandomize_cmd(cfg));
    } else if (cmd == "extract-bits") {
      sink.write(detail::out_name(cfg, "bits.json"), detail::extract_bits_cmd(cfg));
    } else if (cmd == "rates") {
      const Collection c = detail::need_collection(cfg);
      RateExperiment exp;
      exp.collection = &c;
      exp.k = detail::need(cfg.k, "k");
      exp.target = detail::need(cfg.target, "target");
      if (!cfg.distribution) throw Error(ErrorCode::ParseError, "field \"distribution\": required");
      exp.sampler = sampler_of(distribution_from_json(*cfg.distribution));
      const IdentifierBundle id = make_identifier(cfg.identifier, c, static_cast<unsigned>(exp.k));
      if (id.process && ctx.threads > 1) {
        throw Error(ErrorCode::ParseError, "field \"identifier\": custom-exec runs single-threaded");
      }
      exp.identifier = id.identifier;
      exp.horizon = detail::need(cfg.horizon, "horizon");
      exp.trials = cfg.trials.value_or(1000);
      exp.seed = cfg.seed;
      exp.threads = ctx.threads;
      const ErrorCurve curve = run_rate_experiment(exp);
      const std::string name = detail::out_name(cfg, "curve.csv");
      sink.write(name, detail::curve_csv(curve));
      if (cfg.fit) {
        json fit;
        auto window = cfg.fit_window ? cfg.fit_window : positive_window(curve);
        int status = 0;
        try {
          if (!window) throw Error(ErrorCode::InsufficientPositivePoints, "no positive frequencies");
          const ExponentialFit f = fit_exponential(curve, window->first, window->second);
          fit = {{"window", {window->first, window->second}}, {"slope", fmt_double(f.slope)},
                 {"intercept", fmt_double(f.intercept)},     {"r_squared", fmt_double(f.r_squared)},
                 {"points", f.points},                       {"clamped", f.clamped}};
        } catch (const Error& e) {
          fit = {{"error", e.what()}};
          status = 2;
        }
        sink.write(name + ".fit.json", fit.dump(2) + "\n");
        if (status) {
          log << fit["error"].get<std::string>() << "\n";
          return status;
        }
      }
    } else if (cmd == "lower-bound") {
      const Collection c = detail::need_collection(cfg);
      LowerBoundExperiment exp;
      exp.collection = &c;
      exp.k = detail::need(cfg.k, "k");
      exp.shared_x = detail::need(cfg.shared_x, "shared_x");
      exp.languages = cfg.languages;
      const IdentifierBundle id = make_identifier(cfg.identifier, c, static_cast<unsigned>(exp.k));
      if (id.process && ctx.threads > 1) {
        throw Error(ErrorCode::ParseError, "field \"identifier\": custom-exec runs single-threaded");
      }
      exp.identifier = id.identifier;
      exp.horizon = detail::need(cfg.horizon, "horizon");
      exp.trials = cfg.trials.value_or(1000);
      exp.seed = cfg.seed;
      exp.threads = ctx.threads;
      exp.monte_carlo_horizon = cfg.monte_carlo_horizon;
      const LowerBoundReport rep = lower_bound_experiment(exp);
      std::string csv = "t,named_count,missed_index";
      for (Index l : rep.languages) csv += ",e_hat_" + std::to_string(l) + ",ci_hi_" + std::to_string(l);
      csv += ",floor_holds\n";
      for (std::size_t t = 1; t <= exp.horizon; ++t) {
        csv += std::to_string(t) + "," + std::to_string(rep.named_count[t - 1]) + "," +
               (rep.missed[t - 1] ? std::to_string(*rep.missed[t - 1]) : "");
        for (const auto& curve : rep.curves) {
          if (t <= curve.points.size()) {
            csv += "," + fmt_double(curve.at(t).e_hat) + "," + fmt_double(curve.at(t).ci_hi);
          } else {
            csv += ",,";
          }
        }
        csv += ",";
        if (t <= rep.floor_holds.size()) csv += rep.floor_holds[t - 1] ? "1" : "0";
        csv += "\n";
      }
      sink.write(detail::out_name(cfg, "lb.csv"), csv);
      if (!rep.pigeonhole_holds) {
        throw Error(ErrorCode::InvariantViolation, "identifier named more than k designated languages");
      }
    }
    return 0;
  } catch (const Error& e) {
    log << e.what() << "\n";
    return e.code() == ErrorCode::InvariantViolation ? 1 : 2;
  } catch (const json::exception& e) {
    log << "ParseError: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace listid::cli
