#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "listid/collection.hpp"
#include "listid/distribution.hpp"
#include "listid/error.hpp"
#include "listid/language.hpp"

namespace listid {

using json = nlohmann::json;

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> names = {"check-angluin", "simulate-identify", "adversary", "stratify",
                                                 "derandomize",   "extract-bits",      "rates",     "lower-bound"};
  return names;
}

/// Everything one CLI run depends on. Thread count and output directory are
/// deliberately excluded: they must not change results.
struct RunConfig {
  std::string command;
  json collection;
  std::optional<unsigned> k;
  std::optional<Index> target;
  std::string identifier = "listidentify";
  std::optional<std::string> prob_identifier;
  std::optional<json> distribution;
  std::optional<json> enumeration;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> trials;
  std::optional<unsigned> depth;
  std::optional<std::size_t> n_bits;
  std::optional<Element> shared_x;
  std::vector<Index> languages;
  std::optional<std::size_t> monte_carlo_horizon;
  bool fit = false;
  std::optional<std::pair<std::size_t, std::size_t>> fit_window;
  std::uint64_t seed = 0;
  std::string out;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ParseError, "field \"" + field + "\": " + what);
}

template <typename T>
T field_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    parse_fail(field, e.what());
  }
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (!c.collection.is_null()) j["collection"] = c.collection;
  if (c.k) j["k"] = *c.k;
  if (c.target) j["target"] = *c.target;
  j["identifier"] = c.identifier;
  if (c.prob_identifier) j["prob_identifier"] = *c.prob_identifier;
  if (c.distribution) j["distribution"] = *c.distribution;
  if (c.enumeration) j["enumeration"] = *c.enumeration;
  if (c.horizon) j["horizon"] = *c.horizon;
  if (c.budget) j["budget"] = *c.budget;
  if (c.trials) j["trials"] = *c.trials;
  if (c.depth) j["depth"] = *c.depth;
  if (c.n_bits) j["n_bits"] = *c.n_bits;
  if (c.shared_x) j["shared_x"] = *c.shared_x;
  if (!c.languages.empty()) j["languages"] = c.languages;
  if (c.monte_carlo_horizon) j["monte_carlo_horizon"] = *c.monte_carlo_horizon;
  if (c.fit) j["fit"] = true;
  if (c.fit_window) j["fit_window"] = {c.fit_window->first, c.fit_window->second};
  j["seed"] = c.seed;
  if (!c.out.empty()) j["out"] = c.out;
  return j;
}

/// Validates a parsed JSON object. Every problem found is reported, one per
/// line, in a single ParseError.
inline RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  static const std::set<std::string> allowed = {
      "command", "collection", "k",      "target", "identifier", "prob_identifier", "distribution",
      "enumeration", "horizon", "budget", "trials", "depth", "n_bits", "shared_x", "languages",
      "monte_carlo_horizon", "fit", "fit_window", "seed", "out"};
  std::vector<std::string> errors;
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) errors.push_back("unknown field \"" + key + "\"");
  }
  RunConfig c;
  auto take = [&](const char* key, auto& dst) {
    if (!j.contains(key)) return;
    try {
      using T = std::decay_t<decltype(dst)>;
      if constexpr (requires { typename T::value_type; } && !std::is_same_v<T, std::string> &&
                    !std::is_same_v<T, std::vector<Index>>) {
        dst = j.at(key).get<typename T::value_type>();
      } else {
        dst = j.at(key).get<T>();
      }
    } catch (const json::exception& e) {
      errors.push_back("field \"" + std::string(key) + "\": " + e.what());
    }
  };
  take("command", c.command);
  if (j.contains("collection")) c.collection = j.at("collection");
  take("k", c.k);
  take("target", c.target);
  take("identifier", c.identifier);
  take("prob_identifier", c.prob_identifier);
  if (j.contains("distribution")) c.distribution = j.at("distribution");
  if (j.contains("enumeration")) c.enumeration = j.at("enumeration");
  take("horizon", c.horizon);
  take("budget", c.budget);
  take("trials", c.trials);
  take("depth", c.depth);
  take("n_bits", c.n_bits);
  take("shared_x", c.shared_x);
  take("languages", c.languages);
  take("monte_carlo_horizon", c.monte_carlo_horizon);
  take("fit", c.fit);
  if (j.contains("fit_window")) {
    const auto& w = j.at("fit_window");
    if (w.is_array() && w.size() == 2 && w[0].is_number_unsigned() && w[1].is_number_unsigned()) {
      c.fit_window.emplace(w[0].get<std::size_t>(), w[1].get<std::size_t>());
    } else {
      errors.push_back("field \"fit_window\": expected [lo, hi]");
    }
  }
  take("seed", c.seed);
  take("out", c.out);

  bool known = false;
  for (const auto& name : known_commands()) known = known || name == c.command;
  if (!known) errors.push_back("field \"command\": unknown command \"" + c.command + "\"");
  if (c.k && *c.k == 0) errors.push_back("field \"k\": must be >= 1");
  if (c.target && *c.target == 0) errors.push_back("field \"target\": indices start at 1");
  if (c.trials && *c.trials == 0) errors.push_back("field \"trials\": must be >= 1");
  if (!errors.empty()) {
    std::string msg;
    for (const auto& e : errors) msg += (msg.empty() ? "" : "\n") + e;
    throw Error(ErrorCode::ParseError, msg);
  }
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return config_from_json(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, what + ": " + e.what());
  }
}

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) parse_fail(what + "." + key, "unknown field");
  }
}

inline Language language_from_json(const json& j, const std::string& where) {
  if (j.is_array()) return Language::finite(field_as<std::vector<Element>>(j, where));
  if (j.is_object()) {
    reject_unknown(j, {"cofinite"}, where);
    if (!j.contains("cofinite")) parse_fail(where, "expected {\"cofinite\": [...]}");
    return Language::cofinite(field_as<std::vector<Element>>(j.at("cofinite"), where + ".cofinite"));
  }
  parse_fail(where, "expected a member list or {\"cofinite\": [...]}");
}

}  // namespace detail

/// Collection spec: "C_2" / "C_inf", {"kind":"canonical","k_max":2|"inf"}, or
/// {"kind":"explicit","languages":[[...], {"cofinite":[...]}],"universe":[...],
///  "telltale_cap":n}.
inline Collection collection_from_json(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "C_inf") return Collection::canonical(std::nullopt);
    if (s.rfind("C_", 0) == 0) {
      try {
        return Collection::canonical(static_cast<unsigned>(std::stoul(s.substr(2))));
      } catch (const std::logic_error&) {
      }
    }
    detail::parse_fail("collection", "unrecognized shorthand \"" + s + "\"");
  }
  if (!j.is_object() || !j.contains("kind")) detail::parse_fail("collection", "expected an object with \"kind\"");
  const std::string kind = detail::field_as<std::string>(j.at("kind"), "collection.kind");
  if (kind == "canonical") {
    detail::reject_unknown(j, {"kind", "k_max"}, "collection");
    if (!j.contains("k_max")) detail::parse_fail("collection.k_max", "missing");
    const auto& m = j.at("k_max");
    if (m.is_string() && m.get<std::string>() == "inf") return Collection::canonical(std::nullopt);
    if (!m.is_number_unsigned() || m.get<unsigned>() == 0) detail::parse_fail("collection.k_max", "positive integer or \"inf\"");
    return Collection::canonical(m.get<unsigned>());
  }
  if (kind == "explicit") {
    detail::reject_unknown(j, {"kind", "languages", "universe", "telltale_cap"}, "collection");
    if (!j.contains("languages") || !j.at("languages").is_array()) {
      detail::parse_fail("collection.languages", "expected an array");
    }
    std::vector<Language> langs;
    for (std::size_t i = 0; i < j.at("languages").size(); ++i) {
      langs.push_back(detail::language_from_json(j.at("languages")[i], "collection.languages[" + std::to_string(i) + "]"));
    }
    std::vector<Element> universe;
    if (j.contains("universe")) universe = detail::field_as<std::vector<Element>>(j.at("universe"), "collection.universe");
    std::optional<std::size_t> cap;
    if (j.contains("telltale_cap")) cap = detail::field_as<std::size_t>(j.at("telltale_cap"), "collection.telltale_cap");
    return Collection::explicit_family(std::move(langs), std::move(universe), cap);
  }
  detail::parse_fail("collection.kind", "unknown kind \"" + kind + "\"");
}

/// {"kind":"half_mass_point","x0":5,"language":<language>} or
/// {"kind":"enumeration_geometric","language":<language>} or
/// {"kind":"enumeration_geometric","sequence":[...]}.
inline ValidDistribution distribution_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) detail::parse_fail("distribution", "expected an object with \"kind\"");
  const std::string kind = detail::field_as<std::string>(j.at("kind"), "distribution.kind");
  if (kind == "half_mass_point") {
    detail::reject_unknown(j, {"kind", "x0", "language"}, "distribution");
    if (!j.contains("x0") || !j.contains("language")) detail::parse_fail("distribution", "needs x0 and language");
    return ValidDistribution::half_mass_point(detail::field_as<Element>(j.at("x0"), "distribution.x0"),
                                              detail::language_from_json(j.at("language"), "distribution.language"));
  }
  if (kind == "enumeration_geometric") {
    detail::reject_unknown(j, {"kind", "language", "sequence"}, "distribution");
    if (j.contains("sequence")) {
      return ValidDistribution::enumeration_geometric(
          Enumeration::sequence(detail::field_as<std::vector<Element>>(j.at("sequence"), "distribution.sequence")));
    }
    if (!j.contains("language")) detail::parse_fail("distribution", "needs language or sequence");
    return ValidDistribution::enumeration_geometric(
        Enumeration::canonical(detail::language_from_json(j.at("language"), "distribution.language")));
  }
  detail::parse_fail("distribution.kind", "unknown kind \"" + kind + "\"");
}

/// {"kind":"canonical"} (of the target) or {"kind":"sequence","values":[...]}.
inline Enumeration enumeration_from_json(const json& j, const Language& target) {
  if (!j.is_object() || !j.contains("kind")) detail::parse_fail("enumeration", "expected an object with \"kind\"");
  const std::string kind = detail::field_as<std::string>(j.at("kind"), "enumeration.kind");
  if (kind == "canonical") {
    detail::reject_unknown(j, {"kind"}, "enumeration");
    return Enumeration::canonical(target);
  }
  if (kind == "sequence") {
    detail::reject_unknown(j, {"kind", "values"}, "enumeration");
    auto xs = detail::field_as<std::vector<Element>>(j.at("values"), "enumeration.values");
    for (Element x : xs) {
      if (!target.contains(x)) detail::parse_fail("enumeration.values", std::to_string(x) + " is not in the target");
    }
    return Enumeration::sequence(std::move(xs));
  }
  detail::parse_fail("enumeration.kind", "unknown kind \"" + kind + "\"");
}

}  // namespace listid
