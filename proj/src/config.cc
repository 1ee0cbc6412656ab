/*
 * Copyright 2026 The CRCHFL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "crchfl/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace crchfl {
namespace {

namespace pt = boost::property_tree;

std::string Trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

template <typename T>
T ParseNumber(const std::string& key, std::string_view raw) {
  std::string text = Trim(raw);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ConfigError(key, "must be finite");
  }
  return value;
}

template <typename T>
std::vector<T> ParseList(const std::string& key, std::string_view raw) {
  std::string text = Trim(raw);
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') throw ConfigError(key, "unterminated list");
    text = text.substr(1, text.size() - 2);
  }
  std::vector<T> out;
  if (Trim(text).empty()) return out;
  std::string_view rest = text;
  while (true) {
    auto comma = rest.find(',');
    out.push_back(ParseNumber<T>(key, rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

bool ParseBool(const std::string& key, std::string_view raw) {
  std::string text = Trim(raw);
  std::transform(text.begin(), text.end(), text.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string FormatList(const std::vector<T>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(values[i]);
  }
  return out + "]";
}

// Tracks which keys were consumed so that unknown keys can be rejected.
class SectionReader {
 public:
  explicit SectionReader(const pt::ptree& root) : root_(root) {}

  std::optional<std::string> Get(const std::string& section,
                                 const std::string& key) {
    used_.insert(section + "." + key);
    auto sec = root_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto value = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!value) return std::nullopt;
    return *value;
  }

  std::string Require(const std::string& section, const std::string& key) {
    auto v = Get(section, key);
    if (!v) throw ConfigError(section + "." + key, "required key is missing");
    return *v;
  }

  void RejectUnknown() const {
    for (const auto& [section, body] : root_) {
      if (body.empty() && !body.data().empty()) {
        throw ConfigError(section, "key outside of any section");
      }
      for (const auto& [key, value] : body) {
        std::string full = section + "." + key;
        if (!used_.count(full)) throw ConfigError(full, "unknown key");
      }
    }
  }

 private:
  const pt::ptree& root_;
  std::set<std::string> used_;
};

template <typename T, typename Fn>
void Optional(SectionReader& r, const std::string& section,
              const std::string& key, T& field, Fn parse) {
  if (auto v = r.Get(section, key)) field = parse(section + "." + key, *v);
}

void RequireInUnit(const std::string& key, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
}

void RequireIntervalSet(const std::string& key, const std::vector<int>& set) {
  if (set.empty()) throw ConfigError(key, "must be non-empty");
  for (int v : set) {
    if (v < 1) throw ConfigError(key, "entries must be positive integers");
  }
  std::vector<int> sorted = set;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ConfigError(key, "entries must be distinct");
  }
}

}  // namespace

std::string_view ModeName(Mode mode) {
  switch (mode) {
    case Mode::kCrchfl:
      return "crchfl";
    case Mode::kHfl:
      return "hfl";
    case Mode::kSfl:
      return "sfl";
  }
  return "unknown";
}

std::optional<Mode> ParseMode(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "crchfl") return Mode::kCrchfl;
  if (lower == "hfl") return Mode::kHfl;
  if (lower == "sfl") return Mode::kSfl;
  return std::nullopt;
}

ConfigError::ConfigError(std::string key, const std::string& constraint)
    : std::runtime_error(key + ": " + constraint), key_(std::move(key)) {}

int TopologySpec::total_vehicles() const {
  return std::accumulate(vehicles_per_town.begin(), vehicles_per_town.end(), 0);
}

int TopologySpec::vehicle_index(int town, int vehicle) const {
  int offset = 0;
  for (int n = 0; n < town; ++n) offset += vehicles_per_town[n];
  return offset + vehicle;
}

std::int64_t TopologySpec::town_train_total(int town) const {
  int begin = vehicle_index(town, 0);
  return std::accumulate(train_sizes.begin() + begin,
                         train_sizes.begin() + begin + vehicles_per_town[town],
                         std::int64_t{0});
}

std::int64_t TopologySpec::total_train() const {
  return std::accumulate(train_sizes.begin(), train_sizes.end(), std::int64_t{0});
}

void TopologySpec::Validate() const {
  if (num_towns < 1) throw ConfigError("topology.num_towns", "must be >= 1");
  if (static_cast<int>(vehicles_per_town.size()) != num_towns) {
    throw ConfigError("topology.vehicles_per_town",
                      "length " + std::to_string(vehicles_per_town.size()) +
                          " does not match num_towns=" + std::to_string(num_towns));
  }
  for (int k : vehicles_per_town) {
    if (k < 1) throw ConfigError("topology.vehicles_per_town", "entries must be >= 1");
  }
  if (static_cast<int>(train_sizes.size()) != total_vehicles()) {
    throw ConfigError("topology.train_sizes",
                      "length " + std::to_string(train_sizes.size()) +
                          " does not match total vehicle count " +
                          std::to_string(total_vehicles()));
  }
  for (auto n : train_sizes) {
    if (n < 1) throw ConfigError("topology.train_sizes", "entries must be >= 1");
  }
  if (static_cast<int>(test_sizes.size()) != num_towns) {
    throw ConfigError("topology.test_sizes",
                      "length " + std::to_string(test_sizes.size()) +
                          " does not match num_towns=" + std::to_string(num_towns));
  }
  for (auto n : test_sizes) {
    if (n < 1) throw ConfigError("topology.test_sizes", "entries must be >= 1");
  }
}

void TrainHyper::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) {
    throw ConfigError("train.adam_beta1", "must lie in (0, 1)");
  }
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train.adam_beta2", "must lie in (0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay", "must be >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (pretrain_epochs < 0) throw ConfigError("train.pretrain_epochs", "must be >= 0");
}

void DataHyper::Validate() const {
  if (!(feature_shift >= 0.0)) throw ConfigError("data.feature_shift", "must be >= 0");
  if (!(noise_scale > 0.0)) throw ConfigError("data.noise_scale", "must be > 0");
}

int RunConfig::baseline_edge_interval() const {
  return edge_interval.value_or(
      *std::min_element(candidate_edge_intervals.begin(), candidate_edge_intervals.end()));
}

int RunConfig::baseline_cloud_interval() const {
  return cloud_interval.value_or(*std::min_element(candidate_cloud_intervals.begin(),
                                                   candidate_cloud_intervals.end()));
}

void RunConfig::Validate() const {
  topology.Validate();
  if (!(budget_mb >= 0.0)) throw ConfigError("budget.budget_mb", "must be >= 0");
  if (!(sample_size_mb > 0.0)) throw ConfigError("budget.sample_size_mb", "must be > 0");
  if (!(model_size_mb > 0.0)) throw ConfigError("budget.model_size_mb", "must be > 0");
  // Ledger volumes are exact micro-megabyte counts.
  if (sample_size_mb < 1e-6) {
    throw ConfigError("budget.sample_size_mb", "must be at least 1e-6 MB");
  }
  if (model_size_mb < 1e-6) {
    throw ConfigError("budget.model_size_mb", "must be at least 1e-6 MB");
  }
  if (budget_mb > 9e12) throw ConfigError("budget.budget_mb", "must be <= 9e12 MB");
  RequireInUnit("alloc.alpha", alpha);
  RequireInUnit("alloc.gamma", gamma);
  if (!(d >= 0.0)) throw ConfigError("alloc.d", "must be >= 0");
  if (!(y_scale > 0.0)) throw ConfigError("alloc.y_scale", "must be > 0");
  RequireIntervalSet("alloc.candidate_edge_intervals", candidate_edge_intervals);
  RequireIntervalSet("alloc.candidate_cloud_intervals", candidate_cloud_intervals);
  train.Validate();
  data.Validate();
  if (edge_interval && *edge_interval < 1) throw ConfigError("run.edge_interval", "must be >= 1");
  if (cloud_interval && *cloud_interval < 1) {
    throw ConfigError("run.cloud_interval", "must be >= 1");
  }
}

RunConfig ParseConfigText(const std::string& text) {
  pt::ptree root;
  std::istringstream in(text);
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<file>", "line " + std::to_string(e.line()) + ": " + e.message());
  }

  SectionReader r(root);
  RunConfig c;
  auto as_int = [](const std::string& k, const std::string& v) { return ParseNumber<int>(k, v); };
  auto as_double = [](const std::string& k, const std::string& v) {
    return ParseNumber<double>(k, v);
  };
  auto as_bool = [](const std::string& k, const std::string& v) { return ParseBool(k, v); };
  auto as_int_list = [](const std::string& k, const std::string& v) {
    return ParseList<int>(k, v);
  };
  auto as_size_list = [](const std::string& k, const std::string& v) {
    return ParseList<std::int64_t>(k, v);
  };

  c.topology.num_towns = as_int("topology.num_towns", r.Require("topology", "num_towns"));
  c.topology.vehicles_per_town =
      as_int_list("topology.vehicles_per_town", r.Require("topology", "vehicles_per_town"));
  c.topology.train_sizes =
      as_size_list("topology.train_sizes", r.Require("topology", "train_sizes"));
  c.topology.test_sizes = as_size_list("topology.test_sizes", r.Require("topology", "test_sizes"));

  c.budget_mb = as_double("budget.budget_mb", r.Require("budget", "budget_mb"));
  Optional(r, "budget", "sample_size_mb", c.sample_size_mb, as_double);
  Optional(r, "budget", "model_size_mb", c.model_size_mb, as_double);
  Optional(r, "budget", "charge_pretrain_release", c.charge_pretrain_release, as_bool);

  Optional(r, "alloc", "alpha", c.alpha, as_double);
  Optional(r, "alloc", "gamma", c.gamma, as_double);
  Optional(r, "alloc", "d", c.d, as_double);
  Optional(r, "alloc", "y_scale", c.y_scale, as_double);
  Optional(r, "alloc", "candidate_edge_intervals", c.candidate_edge_intervals, as_int_list);
  Optional(r, "alloc", "candidate_cloud_intervals", c.candidate_cloud_intervals, as_int_list);

  Optional(r, "train", "learning_rate", c.train.learning_rate, as_double);
  Optional(r, "train", "adam_beta1", c.train.adam_beta1, as_double);
  Optional(r, "train", "adam_beta2", c.train.adam_beta2, as_double);
  Optional(r, "train", "weight_decay", c.train.weight_decay, as_double);
  Optional(r, "train", "batch_size", c.train.batch_size, as_int);
  Optional(r, "train", "pretrain_epochs", c.train.pretrain_epochs, as_int);

  Optional(r, "data", "feature_shift", c.data.feature_shift, as_double);
  Optional(r, "data", "noise_scale", c.data.noise_scale, as_double);

  if (auto v = r.Get("run", "mode")) {
    auto mode = ParseMode(Trim(*v));
    if (!mode) throw ConfigError("run.mode", "must be one of crchfl, hfl, sfl");
    c.mode = *mode;
  }
  if (auto v = r.Get("run", "seed")) c.seed = ParseNumber<std::uint64_t>("run.seed", *v);
  if (auto v = r.Get("run", "edge_interval")) c.edge_interval = as_int("run.edge_interval", *v);
  if (auto v = r.Get("run", "cloud_interval")) {
    c.cloud_interval = as_int("run.cloud_interval", *v);
  }

  r.RejectUnknown();
  c.Validate();
  return c;
}

RunConfig ParseConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfigText(buf.str());
}

std::string SerializeConfig(const RunConfig& c) {
  std::ostringstream out;
  out << "[topology]\n"
      << "num_towns = " << c.topology.num_towns << "\n"
      << "vehicles_per_town = " << FormatList(c.topology.vehicles_per_town) << "\n"
      << "train_sizes = " << FormatList(c.topology.train_sizes) << "\n"
      << "test_sizes = " << FormatList(c.topology.test_sizes) << "\n\n"
      << "[budget]\n"
      << "budget_mb = " << FormatDouble(c.budget_mb) << "\n"
      << "sample_size_mb = " << FormatDouble(c.sample_size_mb) << "\n"
      << "model_size_mb = " << FormatDouble(c.model_size_mb) << "\n"
      << "charge_pretrain_release = " << (c.charge_pretrain_release ? "true" : "false")
      << "\n\n"
      << "[alloc]\n"
      << "alpha = " << FormatDouble(c.alpha) << "\n"
      << "gamma = " << FormatDouble(c.gamma) << "\n"
      << "d = " << FormatDouble(c.d) << "\n"
      << "y_scale = " << FormatDouble(c.y_scale) << "\n"
      << "candidate_edge_intervals = " << FormatList(c.candidate_edge_intervals) << "\n"
      << "candidate_cloud_intervals = " << FormatList(c.candidate_cloud_intervals) << "\n\n"
      << "[train]\n"
      << "learning_rate = " << FormatDouble(c.train.learning_rate) << "\n"
      << "adam_beta1 = " << FormatDouble(c.train.adam_beta1) << "\n"
      << "adam_beta2 = " << FormatDouble(c.train.adam_beta2) << "\n"
      << "weight_decay = " << FormatDouble(c.train.weight_decay) << "\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "pretrain_epochs = " << c.train.pretrain_epochs << "\n\n"
      << "[data]\n"
      << "feature_shift = " << FormatDouble(c.data.feature_shift) << "\n"
      << "noise_scale = " << FormatDouble(c.data.noise_scale) << "\n\n"
      << "[run]\n"
      << "mode = " << ModeName(c.mode) << "\n"
      << "seed = " << c.seed << "\n";
  if (c.edge_interval) out << "edge_interval = " << *c.edge_interval << "\n";
  if (c.cloud_interval) out << "cloud_interval = " << *c.cloud_interval << "\n";
  return out.str();
}

}  // namespace crchfl
