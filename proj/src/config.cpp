#include "rdm/config.hpp"

#include <charconv>
#include <set>

#include "rdm/dynamics.hpp"
#include "rdm/filters.hpp"
#include "rdm/io.hpp"

namespace rdm {

namespace {

using nlohmann::json;

const std::set<std::string> kKinds = {"dynamics", "filters", "symsimsiam",
                                      "align", "verify"};

template <typename T>
T get_as(const json& v, const std::string& key);

template <>
std::string get_as<std::string>(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config: '" + key + "' must be a string");
  return v.get<std::string>();
}

template <>
bool get_as<bool>(const json& v, const std::string& key) {
  if (!v.is_boolean())
    throw ConfigError("config: '" + key + "' must be a boolean");
  return v.get<bool>();
}

template <>
double get_as<double>(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: '" + key + "' must be a number");
  return v.get<double>();
}

template <>
std::int64_t get_as<std::int64_t>(const json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw ConfigError("config: '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

template <>
std::uint64_t get_as<std::uint64_t>(const json& v, const std::string& key) {
  if (!v.is_number_integer() ||
      (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError("config: '" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: root must be an object");

  ExperimentConfig c;
  for (const auto& item : doc.items()) {
    const std::string& key = item.key();
    const json& v = item.value();
    if (key == "kind") c.kind = get_as<std::string>(v, key);
    else if (key == "d") c.d = get_as<std::int64_t>(v, key);
    else if (key == "k") c.k = get_as<std::int64_t>(v, key);
    else if (key == "aug_std") c.aug_std = get_as<double>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "population") c.population = get_as<std::string>(v, key);
    else if (key == "samples") c.samples = get_as<std::int64_t>(v, key);
    else if (key == "filter") c.filter = get_as<std::string>(v, key);
    else if (key == "alpha") c.alpha = get_as<double>(v, key);
    else if (key == "eta") c.eta = get_as<double>(v, key);
    else if (key == "steps") c.steps = get_as<std::int64_t>(v, key);
    else if (key == "stop_gradient") c.stop_gradient = get_as<bool>(v, key);
    else if (key == "predictor_mode") c.predictor_mode = get_as<std::string>(v, key);
    else if (key == "momentum") c.momentum = get_as<double>(v, key);
    else if (key == "out_dir") c.out_dir = get_as<std::string>(v, key);
    else if (key == "record_stride") c.record_stride = get_as<std::int64_t>(v, key);
    else if (key == "top_eigenvalues") c.top_eigenvalues = get_as<std::int64_t>(v, key);
    else if (key == "instances") c.instances = get_as<std::int64_t>(v, key);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  validate_config(c);
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(doc);
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json doc = config_to_json(config);
  if (!doc.contains(key)) throw ConfigError("config: unknown key '" + key + "'");

  json& slot = doc[key];
  if (slot.is_string()) {
    slot = value;
  } else if (slot.is_boolean()) {
    if (value == "true") slot = true;
    else if (value == "false") slot = false;
    else throw ConfigError("config: '" + key + "' expects true or false");
  } else if (slot.is_number_integer()) {
    std::int64_t parsed = 0;
    const auto [p, ec] =
        std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc{} || p != value.data() + value.size())
      throw ConfigError("config: '" + key + "' expects an integer");
    slot = parsed;
  } else {
    double parsed = 0.0;
    const auto [p, ec] =
        std::from_chars(value.data(), value.data() + value.size(), parsed);
    if (ec != std::errc{} || p != value.data() + value.size())
      throw ConfigError("config: '" + key + "' expects a number");
    slot = parsed;
  }
  config = config_from_json(doc);
}

void validate_config(const ExperimentConfig& c) {
  if (kKinds.find(c.kind) == kKinds.end())
    throw ConfigError("config: unknown kind '" + c.kind + "'");
  if (c.d < 1 || c.k < 1) throw ConfigError("config: d and k must be >= 1");
  if (c.aug_std < 0.0) throw ConfigError("config: aug_std must be >= 0");
  if (c.samples < 1) throw ConfigError("config: samples must be >= 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0))
    throw ConfigError("config: alpha must lie in (0,1)");
  if (c.eta < 0.0) throw ConfigError("config: eta must be >= 0");
  if (c.steps < 0) throw ConfigError("config: steps must be >= 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0))
    throw ConfigError("config: momentum must lie in [0,1)");
  if (c.record_stride < 1) throw ConfigError("config: record_stride must be >= 1");
  if (c.top_eigenvalues < 1)
    throw ConfigError("config: top_eigenvalues must be >= 1");
  if (c.instances < 1) throw ConfigError("config: instances must be >= 1");
  if (c.out_dir.empty()) throw ConfigError("config: out_dir must be non-empty");
  parse_filter_spec(c.filter);
  parse_predictor_mode(c.predictor_mode);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  return json{{"kind", c.kind},
              {"d", c.d},
              {"k", c.k},
              {"aug_std", c.aug_std},
              {"seed", c.seed},
              {"population", c.population},
              {"samples", c.samples},
              {"filter", c.filter},
              {"alpha", c.alpha},
              {"eta", c.eta},
              {"steps", c.steps},
              {"stop_gradient", c.stop_gradient},
              {"predictor_mode", c.predictor_mode},
              {"momentum", c.momentum},
              {"out_dir", c.out_dir},
              {"record_stride", c.record_stride},
              {"top_eigenvalues", c.top_eigenvalues},
              {"instances", c.instances}};
}

}  // namespace rdm
