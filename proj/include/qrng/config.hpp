#pragma once

// JSON scenario files. Every quantity is a plain number in SI units (seconds,
// hertz, watts, radians). Missing keys keep their defaults; unknown keys are
// rejected so a typo never silently falls back to a default.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qrng/pipeline.hpp"

namespace qrng {

using Json = nlohmann::ordered_json;

/// Malformed or invalid configuration. `field` is a dotted path when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  [[nodiscard]] const std::string& field() const { return field_; }

 private:
  std::string field_;
};

namespace detail {

inline std::string join_path(const std::string& parent, std::string_view key) {
  return parent.empty() ? std::string(key) : parent + "." + std::string(key);
}

/// Walks one JSON object, remembering which keys were read.
class Section {
 public:
  Section(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_.items())
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        throw ConfigError(join_path(path_, key), "unknown key");
  }

  [[nodiscard]] bool has(std::string_view key) const { return node_.contains(key); }

  [[nodiscard]] const Json* find(std::string_view key) {
    seen_.emplace_back(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  [[nodiscard]] std::string path(std::string_view key) const { return join_path(path_, key); }

  void number(std::string_view key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(path(key), "expected a number");
      out = v->get<double>();
    }
  }

  template <class Tag>
  void number(std::string_view key, Quantity<Tag>& out) {
    double raw = out.value();
    number(key, raw);
    out = Quantity<Tag>(raw);
  }

  void count(std::string_view key, std::size_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw ConfigError(path(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }

  void integer(std::string_view key, int& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(path(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void seed(std::string_view key, Seed& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw ConfigError(path(key), "expected a non-negative 64-bit integer");
      out = Seed{v->get<std::uint64_t>()};
    }
  }

  void flag(std::string_view key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(path(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void text(std::string_view key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

 private:
  const Json& node_;
  std::string path_;
  std::vector<std::string> seen_;
};

inline void read_model(Section& s, LinewidthModel& m) {
  s.number("group_velocity", m.group_velocity);
  s.number("photon_energy", m.photon_energy);
  s.number("gain", m.gain);
  s.number("spontaneous_emission_factor", m.spontaneous_emission_factor);
  s.number("waveguide_loss", m.waveguide_loss);
  s.number("henry_alpha", m.henry_alpha);
  s.number("classical_linewidth_floor", m.classical_linewidth_floor);
}

inline void read_laser(Section& s, LaserSection& laser) {
  if (const Json* v = s.find("model")) {
    Section m(*v, s.path("model"));
    read_model(m, laser.model);
  }
  if (const Json* v = s.find("operating_point")) {
    Section op(*v, s.path("operating_point"));
    op.number("output_power", laser.operating_point.output_power);
    op.text("label", laser.operating_point.label);
  }
  if (const Json* v = s.find("coherence_time")) {
    if (v->is_null()) {
      laser.coherence_time.reset();
    } else {
      if (!v->is_number()) throw ConfigError(s.path("coherence_time"), "expected a number or null");
      laser.coherence_time = Seconds(v->get<double>());
    }
  }
}

inline void read_mzi(Section& s, MziConfig& mzi) {
  if (s.has("delay") && s.has("path_imbalance"))
    throw ConfigError(s.path("path_imbalance"), "give either delay or path_imbalance, not both");
  s.number("delay", mzi.delay);
  if (s.has("path_imbalance")) {
    double imbalance = 0.0;
    double index = 1.468;
    s.number("path_imbalance", imbalance);
    s.number("refractive_index", index);
    try {
      mzi.delay = delay_from_path_imbalance(imbalance, index);
    } catch (const InvalidParameter& e) {
      throw ConfigError(s.path("path_imbalance"), e.what());
    }
  } else if (s.has("refractive_index")) {
    throw ConfigError(s.path("refractive_index"), "only meaningful together with path_imbalance");
  }
  s.number("optical_angular_frequency", mzi.optical_angular_frequency);
  s.number("visibility", mzi.visibility);
  s.number("dc_background", mzi.dc_background);
  s.flag("stabilization_enabled", mzi.stabilization_enabled);
  s.integer("setpoint_index", mzi.setpoint_index);
  s.number("control_error_std", mzi.control_error_std);
  s.number("drift_amplitude", mzi.drift_amplitude);
  s.number("drift_timescale", mzi.drift_timescale);
}

inline void read_detector(Section& s, FastChannelConfig& fast, MonitorConfig& monitor) {
  if (const Json* v = s.find("fast")) {
    Section f(*v, s.path("fast"));
    f.number("bandwidth", fast.detector.bandwidth);
    f.number("gain", fast.detector.gain);
    f.number("white_noise_std", fast.detector.white_noise_std);
    if (const Json* spikes = f.find("spikes")) {
      if (!spikes->is_array()) throw ConfigError(f.path("spikes"), "expected an array");
      fast.detector.spikes.clear();
      for (std::size_t i = 0; i < spikes->size(); ++i) {
        Section sp((*spikes)[i], f.path("spikes") + "[" + std::to_string(i) + "]");
        SpectralSpike spike;
        sp.number("frequency", spike.frequency);
        sp.number("amplitude", spike.amplitude);
        sp.number("phase", spike.phase);
        fast.detector.spikes.push_back(spike);
      }
    }
  }
  if (const Json* v = s.find("frontend_bandwidth")) {
    if (v->is_null()) {
      fast.frontend_bandwidth.reset();
    } else {
      if (!v->is_number()) throw ConfigError(s.path("frontend_bandwidth"), "expected a number or null");
      fast.frontend_bandwidth = Hertz(v->get<double>());
    }
  }
  s.integer("adc_bits", fast.adc_bits);
  s.number("adc_full_scale", fast.adc_full_scale);
  if (const Json* v = s.find("monitor")) {
    Section m(*v, s.path("monitor"));
    m.number("bandwidth", monitor.bandwidth);
    m.number("sampling_period", monitor.sampling_period);
  }
}

inline void read_analysis(Section& s, AnalysisSection& a) {
  s.number("alpha", a.alpha);
  s.count("max_lag", a.max_lag);
  s.count("psd_segment_length", a.psd_segment_length);
  std::string window = to_string(a.psd_window);
  s.text("psd_window", window);
  try {
    a.psd_window = window_from_string(window);
  } catch (const InvalidParameter& e) {
    throw ConfigError(s.path("psd_window"), e.what());
  }
  s.count("min_entropy_bins", a.min_entropy_bins);
  s.number("dominance_factor", a.dominance_factor);
}

/// Maps an invariant message ("mzi: delay must be > 0") onto its JSON path.
inline std::string field_of(const std::string& message) {
  if (message.starts_with("memory_budget_mb")) return "memory_budget_mb";
  if (message.starts_with("frame_length x frame_count")) return "sampling.frame_length";
  const auto colon = message.find(": ");
  if (colon == std::string::npos) return {};
  const std::string head = message.substr(0, colon);
  const auto end = message.find(' ', colon + 2);
  const std::string name = message.substr(colon + 2, end == std::string::npos ? std::string::npos : end - colon - 2);
  if (head == "simulation") return name;
  if (head == "laser") {
    if (name == "output_power") return "laser.operating_point.output_power";
    if (name == "coherence_time") return "laser.coherence_time";
    return "laser.model." + name;
  }
  if (head == "detector") {
    if (name == "frontend_bandwidth" || name == "adc_bits" || name == "adc_full_scale") return "detector." + name;
    if (name == "spike") return "detector.fast.spikes";
    return "detector.fast." + name;
  }
  if (head == "monitor") return "detector.monitor." + name;
  if (head == "extraction") return "sampling.frame_count";
  if (head == "mzi" || head == "sampling" || head == "analysis") return head + "." + name;
  return {};
}

}  // namespace detail

/// Parses a scenario document. Throws ConfigError with a field path, or with a
/// line and column for syntax errors.
inline ScenarioConfig config_from_json(const Json& doc) {
  ScenarioConfig cfg;
  detail::Section root(doc, "");
  root.number("time_step", cfg.time_step);
  root.seed("master_seed", cfg.master_seed);
  root.number("memory_budget_mb", cfg.memory_budget_mb);
  if (const Json* v = root.find("laser")) {
    detail::Section s(*v, "laser");
    detail::read_laser(s, cfg.laser);
  }
  if (const Json* v = root.find("mzi")) {
    detail::Section s(*v, "mzi");
    detail::read_mzi(s, cfg.mzi);
  }
  if (const Json* v = root.find("detector")) {
    detail::Section s(*v, "detector");
    detail::read_detector(s, cfg.fast, cfg.monitor);
  }
  if (const Json* v = root.find("sampling")) {
    detail::Section s(*v, "sampling");
    s.number("period", cfg.sampling.period);
    s.number("offset", cfg.sampling.offset);
    s.count("frame_length", cfg.sampling.frame_length);
    s.count("frame_count", cfg.sampling.frame_count);
  }
  if (const Json* v = root.find("extraction")) {
    detail::Section s(*v, "extraction");
    s.flag("xor_enabled", cfg.extraction.xor_enabled);
  }
  if (const Json* v = root.find("analysis")) {
    detail::Section s(*v, "analysis");
    detail::read_analysis(s, cfg.analysis);
  }
  return cfg;
}

/// Parses JSON text; syntax errors carry a 1-based line and column.
inline Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string what = e.what();
    if (const auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw ConfigError("", "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
  }
}

/// Full check of a parsed scenario: module invariants plus the memory budget.
/// Invariant failures are re-thrown as ConfigError with the offending field.
inline void validate_config(const ScenarioConfig& cfg, unsigned workers = 1) {
  try {
    cfg.validate(workers);
  } catch (const InvalidParameter& e) {
    const std::string message = e.what();
    const std::string field = detail::field_of(message);
    const auto colon = message.find(": ");
    throw ConfigError(field, field.empty() || colon == std::string::npos ? message : message.substr(colon + 2));
  }
}

inline Json config_to_json(const ScenarioConfig& cfg) {
  const auto& m = cfg.laser.model;
  Json spikes = Json::array();
  for (const auto& s : cfg.fast.detector.spikes)
    spikes.push_back({{"frequency", s.frequency.value()}, {"amplitude", s.amplitude}, {"phase", s.phase}});
  return {
      {"time_step", cfg.time_step.value()},
      {"master_seed", cfg.master_seed.value},
      {"memory_budget_mb", cfg.memory_budget_mb},
      {"laser",
       {{"model",
         {{"group_velocity", m.group_velocity},
          {"photon_energy", m.photon_energy},
          {"gain", m.gain},
          {"spontaneous_emission_factor", m.spontaneous_emission_factor},
          {"waveguide_loss", m.waveguide_loss},
          {"henry_alpha", m.henry_alpha},
          {"classical_linewidth_floor", m.classical_linewidth_floor.value()}}},
        {"operating_point",
         {{"output_power", cfg.laser.operating_point.output_power.value()}, {"label", cfg.laser.operating_point.label}}},
        {"coherence_time", cfg.laser.coherence_time ? Json(cfg.laser.coherence_time->value()) : Json(nullptr)}}},
      {"mzi",
       {{"delay", cfg.mzi.delay.value()},
        {"optical_angular_frequency", cfg.mzi.optical_angular_frequency},
        {"visibility", cfg.mzi.visibility},
        {"dc_background", cfg.mzi.dc_background},
        {"stabilization_enabled", cfg.mzi.stabilization_enabled},
        {"setpoint_index", cfg.mzi.setpoint_index},
        {"control_error_std", cfg.mzi.control_error_std},
        {"drift_amplitude", cfg.mzi.drift_amplitude},
        {"drift_timescale", cfg.mzi.drift_timescale.value()}}},
      {"detector",
       {{"fast",
         {{"bandwidth", cfg.fast.detector.bandwidth.value()},
          {"gain", cfg.fast.detector.gain},
          {"white_noise_std", cfg.fast.detector.white_noise_std},
          {"spikes", spikes}}},
        {"frontend_bandwidth", cfg.fast.frontend_bandwidth ? Json(cfg.fast.frontend_bandwidth->value()) : Json(nullptr)},
        {"adc_bits", cfg.fast.adc_bits},
        {"adc_full_scale", cfg.fast.adc_full_scale},
        {"monitor",
         {{"bandwidth", cfg.monitor.bandwidth.value()}, {"sampling_period", cfg.monitor.sampling_period.value()}}}}},
      {"sampling",
       {{"period", cfg.sampling.period.value()},
        {"offset", cfg.sampling.offset.value()},
        {"frame_length", cfg.sampling.frame_length},
        {"frame_count", cfg.sampling.frame_count}}},
      {"extraction", {{"xor_enabled", cfg.extraction.xor_enabled}}},
      {"analysis",
       {{"alpha", cfg.analysis.alpha},
        {"max_lag", cfg.analysis.max_lag},
        {"psd_segment_length", cfg.analysis.psd_segment_length},
        {"psd_window", to_string(cfg.analysis.psd_window)},
        {"min_entropy_bins", cfg.analysis.min_entropy_bins},
        {"dominance_factor", cfg.analysis.dominance_factor}}},
  };
}

/// Sets `dotted.key` to `value`. The value is read as JSON when it parses
/// (numbers, true/false, null) and as a string otherwise.
inline void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("", "override '" + std::string(assignment) + "' must look like key.path=value");
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  Json* node = &doc;
  std::string_view rest = key;
  for (;;) {
    const auto dot = rest.find('.');
    const std::string part(rest.substr(0, dot));
    if (part.empty()) throw ConfigError(key, "empty path component");
    if (!node->is_object()) throw ConfigError(key, "path does not lead through objects");
    if (dot == std::string_view::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = Json::object();
    rest = rest.substr(dot + 1);
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Loads a scenario file, applies `key=value` overrides and parses it.
/// Invariants are not checked here; see validate_config.
inline ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  Json doc = parse_json_text(read_text_file(path));
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

}  // namespace qrng
