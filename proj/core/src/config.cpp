#include "gvps/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "gvps/error.hpp"

namespace gvps {

namespace {

constexpr const char* kModule = "harness";

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw InputError(kModule, "config key '" + std::string(key) + "': expected " + std::string(expected) + ", got '" +
                                std::string(value) + "'");
}

long long parse_integer(std::string_view key, std::string_view value) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) bad_value(key, value, "an integer");
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "a number");
  }
  if (used != s.size() || !std::isfinite(out)) bad_value(key, value, "a finite number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

std::string real_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, std::string_view)> set;
};

template <typename T>
Field int_field(const char* key, T TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
          [key, member](TrainConfig& c, std::string_view v) { c.*member = static_cast<T>(parse_integer(key, v)); }};
}

Field real_field(const char* key, double TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return real_text(c.*member); },
          [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_real(key, v); }};
}

Field bool_field(const char* key, bool TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [key, member](TrainConfig& c, std::string_view v) { c.*member = parse_bool(key, v); }};
}

Field seed_field(const char* key, std::uint64_t TrainConfig::*member) {
  return {key, [member](const TrainConfig& c) { return std::to_string(c.*member); },
          [key, member](TrainConfig& c, std::string_view v) {
            std::uint64_t out = 0;
            const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
            if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "an unsigned integer");
            c.*member = out;
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"method", [](const TrainConfig& c) { return std::string(to_string(c.method)); },
       [](TrainConfig& c, std::string_view v) { c.method = parse_train_method(v); }},
      {"task", [](const TrainConfig& c) { return std::string(to_string(c.task)); },
       [](TrainConfig& c, std::string_view v) {
         try {
           c.task = parse_task_kind(v);
         } catch (const InputError&) {
           bad_value("task", v, "chain_add, modular_chain or compare_chain");
         }
       }},
      int_field("difficulty", &TrainConfig::difficulty),
      int_field("G", &TrainConfig::group_size),
      int_field("batch_size", &TrainConfig::batch_size),
      int_field("mini_batch_size", &TrainConfig::mini_batch_size),
      real_field("learning_rate", &TrainConfig::learning_rate),
      real_field("momentum", &TrainConfig::momentum),
      {"optimizer", [](const TrainConfig& c) { return std::string(to_string(c.optimizer)); },
       [](TrainConfig& c, std::string_view v) {
         try {
           c.optimizer = parse_optimizer(v);
         } catch (const InputError&) {
           bad_value("optimizer", v, "sgd or adam");
         }
       }},
      real_field("temperature", &TrainConfig::temperature),
      int_field("max_response_length", &TrainConfig::max_response_length),
      real_field("alpha", &TrainConfig::alpha),
      real_field("tau", &TrainConfig::percentile_p),
      int_field("n", &TrainConfig::n_per_segment),
      {"segmentation", [](const TrainConfig& c) { return std::string(to_string(c.segmentation)); },
       [](TrainConfig& c, std::string_view v) {
         try {
           c.segmentation = parse_segment_strategy(v);
         } catch (const InputError&) {
           bad_value("segmentation", v, "adaptive_entropy or fixed_token");
         }
       }},
      int_field("fixed_segments", &TrainConfig::fixed_segments),
      {"objective", [](const TrainConfig& c) { return std::string(to_string(c.objective)); },
       [](TrainConfig& c, std::string_view v) {
         try {
           c.objective = parse_objective_mode(v);
         } catch (const InputError&) {
           bad_value("objective", v, "reinforce or clipped");
         }
       }},
      real_field("eps_low", &TrainConfig::eps_low),
      real_field("eps_high", &TrainConfig::eps_high),
      int_field("clip_epochs", &TrainConfig::clip_epochs),
      bool_field("std_normalize", &TrainConfig::std_normalize),
      int_field("total_steps", &TrainConfig::total_steps),
      seed_field("seed", &TrainConfig::seed),
      bool_field("reproducible", &TrainConfig::reproducible),
      int_field("threads", &TrainConfig::threads),
      int_field("embed_dim", &TrainConfig::embed_dim),
      int_field("hidden_dim", &TrainConfig::hidden_dim),
      int_field("window", &TrainConfig::window),
      real_field("init_scale", &TrainConfig::init_scale),
      int_field("sft_steps", &TrainConfig::sft_steps),
      int_field("sft_batch", &TrainConfig::sft_batch),
      real_field("sft_lr", &TrainConfig::sft_lr),
      real_field("sft_early_exit_rate", &TrainConfig::sft_early_exit_rate),
      seed_field("sft_seed", &TrainConfig::sft_seed),
      int_field("eval_problems", &TrainConfig::eval_problems),
      real_field("accuracy_threshold", &TrainConfig::accuracy_threshold),
      int_field("threshold_window", &TrainConfig::threshold_window),
      int_field("checkpoint_interval", &TrainConfig::checkpoint_interval),
      int_field("dump_every", &TrainConfig::dump_every),
  };
  return table;
}

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw InputError(kModule, std::string("config key '") + key + "': " + what);
}

}  // namespace

void validate(const TrainConfig& c) {
  require(c.difficulty >= kMinDifficulty && c.difficulty <= kMaxDifficulty, "difficulty", "must be in [2, 8]");
  require(c.group_size >= 2, "G", "must be at least 2");
  require(c.batch_size >= 1, "batch_size", "must be positive");
  require(c.mini_batch_size >= 1 && c.batch_size % c.mini_batch_size == 0, "mini_batch_size",
          "must be positive and divide batch_size");
  require(c.learning_rate >= 0.0, "learning_rate", "must be non-negative");
  require(c.momentum >= 0.0 && c.momentum < 1.0, "momentum", "must be in [0, 1)");
  require(c.temperature > 0.0, "temperature", "must be positive");
  require(c.max_response_length >= 1, "max_response_length", "must be positive");
  require(c.alpha >= 0.0, "alpha", "must be non-negative");
  require(c.percentile_p > 0.0 && c.percentile_p < 1.0, "tau", "must be in (0, 1)");
  require(c.n_per_segment >= 1, "n", "must be positive");
  require(c.fixed_segments >= 1, "fixed_segments", "must be positive");
  require(c.eps_low >= 0.0 && c.eps_low < 1.0, "eps_low", "must be in [0, 1)");
  require(c.eps_high >= 0.0, "eps_high", "must be non-negative");
  require(c.clip_epochs >= 1, "clip_epochs", "must be positive");
  require(c.total_steps >= 0, "total_steps", "must be non-negative");
  require(c.threads >= 1, "threads", "must be positive");
  require(c.embed_dim >= 1, "embed_dim", "must be positive");
  require(c.hidden_dim >= 1, "hidden_dim", "must be positive");
  require(c.window >= 1, "window", "must be positive");
  require(c.init_scale >= 0.0, "init_scale", "must be non-negative");
  require(c.sft_steps >= 0, "sft_steps", "must be non-negative");
  require(c.sft_batch >= 1, "sft_batch", "must be positive");
  require(c.sft_lr > 0.0, "sft_lr", "must be positive");
  require(c.sft_early_exit_rate >= 0.0 && c.sft_early_exit_rate <= 1.0, "sft_early_exit_rate", "must be in [0, 1]");
  require(c.eval_problems >= 1, "eval_problems", "must be positive");
  require(c.accuracy_threshold > 0.0 && c.accuracy_threshold <= 1.0, "accuracy_threshold", "must be in (0, 1]");
  require(c.threshold_window >= 1, "threshold_window", "must be positive");
  require(c.checkpoint_interval >= 0, "checkpoint_interval", "must be non-negative");
  require(c.dump_every >= 0, "dump_every", "must be non-negative");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

void set_config_value(TrainConfig& config, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(config, trim(value));
      return;
    }
  }
  throw InputError(kModule, "unknown config key '" + std::string(key) + "'");
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig config;
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(kModule, std::string("malformed JSON config: ") + e.what());
    }
    if (!j.is_object()) throw InputError(kModule, "JSON config must be an object");
    for (const auto& [key, value] : j.items()) {
      std::string v;
      if (value.is_string()) {
        v = value.get<std::string>();
      } else if (value.is_boolean()) {
        v = value.get<bool>() ? "true" : "false";
      } else if (value.is_number_integer() || value.is_number_unsigned()) {
        v = value.dump();
      } else if (value.is_number_float()) {
        v = real_text(value.get<double>());
      } else {
        bad_value(key, value.dump(), "a scalar");
      }
      set_config_value(config, key, v);
    }
  } else {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string stripped = trim(line);
      if (stripped.empty()) continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw InputError(kModule, "config line " + std::to_string(lineno) + ": expected key=value, got '" + stripped + "'");
      }
      set_config_value(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
  }
  validate(config);
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(kModule, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const TrainConfig& config) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key;
    out += '=';
    out += f.get(config);
    out += '\n';
  }
  return out;
}

}  // namespace gvps
