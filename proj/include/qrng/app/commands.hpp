#pragma once

// Subcommands behind tools/qrng: validate, run, sweep, analyze. Each command
// throws on error; run_guarded maps exceptions onto the documented exit codes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qrng/analysis/autocorrelation.hpp"
#include "qrng/analysis/battery.hpp"
#include "qrng/analysis/min_entropy.hpp"
#include "qrng/analysis/spectrum.hpp"
#include "qrng/analysis/stats.hpp"
#include "qrng/analysis/timing.hpp"
#include "qrng/config.hpp"
#include "qrng/digest.hpp"
#include "qrng/error.hpp"
#include "qrng/extraction.hpp"
#include "qrng/pipeline.hpp"

namespace qrng::app {

namespace fs = std::filesystem;

enum ExitCode : int { exit_success = 0, exit_validation_failed = 1, exit_usage = 2, exit_io = 3 };

/// Bad command-line usage (unknown sweep parameter, malformed value, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::string_view metadata_format = "qrng-run-metadata";

// ---------------------------------------------------------------- scenario

struct ScenarioOptions {
  std::string config_path;  // empty: built-in defaults
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> frames;
  std::optional<std::size_t> frame_length;
};

/// Loads a scenario file (or a run's metadata sidecar) and applies overrides.
inline ScenarioConfig load_scenario(const ScenarioOptions& o) {
  Json doc = o.config_path.empty() ? config_to_json(ScenarioConfig{}) : parse_json_text(read_text_file(o.config_path));
  if (doc.is_object() && doc.contains("format") && doc["format"] == metadata_format) {
    if (!doc.contains("scenario")) throw ConfigError("scenario", "metadata file has no scenario section");
    Json scenario = doc["scenario"];
    doc = std::move(scenario);
  }
  for (const auto& assignment : o.overrides) apply_override(doc, assignment);
  if (!doc.is_object()) throw ConfigError("", "top level must be an object");
  if (o.seed) doc["master_seed"] = *o.seed;
  if (o.frames) doc["sampling"]["frame_count"] = *o.frames;
  if (o.frame_length) doc["sampling"]["frame_length"] = *o.frame_length;
  return config_from_json(doc);
}

/// Parses "650ps", "10ns", "3GHz", "0.05" (plain numbers are SI).
inline double parse_quantity(std::string_view text) {
  static constexpr std::pair<std::string_view, double> suffixes[] = {
      {"ps", 1e-12}, {"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"GHz", 1e9}, {"MHz", 1e6},
      {"kHz", 1e3},  {"Hz", 1.0},  {"rad", 1.0}, {"s", 1.0}};
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double scale = 1.0;
  for (const auto& [suffix, factor] : suffixes) {
    if (text.size() > suffix.size() && text.ends_with(suffix)) {
      text.remove_suffix(suffix.size());
      scale = factor;
      break;
    }
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
    throw UsageError("cannot read '" + std::string(text) + "' as a number");
  return value * scale;
}

// ---------------------------------------------------------------- formatting

inline std::string number(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline Json timing_to_json(const TimingCheck& c, const TimingVerdict& v) {
  Json j = {{"mode", to_string(c.mode)},
            {"T_d", c.delay.value()},
            {"tau_c", c.coherence_time.value()},
            {"T_S", c.sampling_period.value()},
            {"T_R", c.response_time.value()},
            {"dominance_factor", c.dominance_factor},
            {"passed", v.passed},
            {"overlapping_windows", v.overlapping_windows},
            {"spacing_margin", v.spacing_margin},
            {"diagnosis", v.diagnosis}};
  if (c.mode == TimingMode::unstabilized) j["delay_margin"] = v.delay_margin;
  return j;
}

inline Json battery_to_json(const TestReport& r) {
  Json tests = Json::array();
  for (const auto& t : r.tests) {
    Json e = {{"name", t.name}, {"statistic", t.statistic}, {"p_value", nullptr}, {"passed", t.passed}};
    if (t.p_value) e["p_value"] = *t.p_value;
    if (!t.note.empty()) e["note"] = t.note;
    tests.push_back(std::move(e));
  }
  return {{"alpha", r.alpha},
          {"input_length", r.input_length},
          {"passed", r.passed},
          {"pass_count", r.pass_count()},
          {"test_count", r.tests.size()},
          {"tests", std::move(tests)}};
}

/// Statistics of one bit stream as reported by run, sweep and analyze.
struct StreamSummary {
  std::size_t length = 0;
  double ones_fraction = 0.0;
  std::optional<std::vector<double>> autocorr;  // empty for constant streams
  double max_abs_autocorr = 0.0;
  TestReport battery;

  [[nodiscard]] double bias() const { return ones_fraction - 0.5; }
};

inline StreamSummary summarize(const BitStream& bits, const AnalysisSection& analysis) {
  StreamSummary s;
  s.length = bits.size();
  s.ones_fraction = static_cast<double>(bits.count_ones()) / static_cast<double>(bits.size());
  if (bits.size() > analysis.max_lag) {
    try {
      s.autocorr = autocorrelation(bits, analysis.max_lag);
      for (double v : *s.autocorr) s.max_abs_autocorr = std::max(s.max_abs_autocorr, std::fabs(v));
    } catch (const UndefinedNormalization&) {
      s.max_abs_autocorr = std::numeric_limits<double>::quiet_NaN();
    }
  }
  s.battery = run_battery(bits, analysis.alpha);
  return s;
}

inline Json summary_to_json(const StreamSummary& s) {
  Json j = {{"bit_length", s.length}, {"ones_fraction", s.ones_fraction}, {"bias", s.bias()}};
  if (s.autocorr) {
    j["max_abs_autocorr"] = s.max_abs_autocorr;
    j["lag1_autocorr"] = s.autocorr->front();
  } else {
    j["max_abs_autocorr"] = nullptr;
    j["autocorr_note"] = "undefined (constant stream or stream not longer than max_lag)";
  }
  j["battery"] = battery_to_json(s.battery);
  return j;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string autocorr_csv(const std::vector<double>& rho) {
  std::string s = "lag,coefficient\n";
  for (std::size_t k = 0; k < rho.size(); ++k) s += std::to_string(k + 1) + "," + number(rho[k]) + "\n";
  return s;
}

inline std::string psd_csv(const SpectrumEstimate& est) {
  std::string s = "frequency_hz,density_db\n";
  for (std::size_t i = 0; i < est.frequencies.size(); ++i)
    s += number(est.frequencies[i]) + "," + number(est.power_density[i], 8) + "\n";
  return s;
}

/// Mean density over [fs/200, fs/20], the flat part of a 1/T_d-limited
/// spectrum below the lines and above the lock-residual band.
inline double low_frequency_level_db(const SpectrumEstimate& est, Seconds sample_period) {
  const double fs = 1.0 / sample_period.value();
  const double lo = std::max(fs / 200.0, est.frequencies.front());
  const double hi = std::max(fs / 20.0, lo);
  return est.band_level_db(lo, hi);
}

/// Segment length that fits at least two segments into `n` samples, or 0.
inline std::size_t usable_segment(std::size_t requested, std::size_t n) {
  std::size_t seg = requested;
  while (seg >= 4 && n < 2 * seg) seg /= 2;
  return seg >= 4 ? seg : 0;
}

/// Noise-floor reference: median density of a blocked-input frame (no light
/// reaches the detector, only electrical noise remains). Returns 1 when the
/// configured noise is zero.
inline double blocked_input_reference(const ScenarioConfig& cfg, std::size_t segment) {
  ScenarioConfig blocked = cfg;
  blocked.mzi.visibility = 0.0;
  blocked.mzi.dc_background = 0.0;
  blocked.sampling.frame_length = std::min<std::size_t>(cfg.sampling.frame_length, std::size_t{1} << 20);
  if (blocked.sampling.frame_length < 2 * segment) return 1.0;
  const FrameResult frame = simulate_frame(blocked, derive_seed(cfg.master_seed, ~std::uint64_t{0}), 0);
  const SpectrumEstimate est = psd_estimate(frame.samples, segment, cfg.analysis.psd_window);
  std::vector<double> linear(est.frequencies.size());
  for (std::size_t i = 0; i < linear.size(); ++i) linear[i] = est.linear(i);
  std::nth_element(linear.begin(), linear.begin() + static_cast<std::ptrdiff_t>(linear.size() / 2), linear.end());
  const double median = linear[linear.size() / 2];
  return median > 0.0 ? median : 1.0;
}

/// Histogram min-entropy over mean +/- 4 sigma of the samples.
inline MinEntropyEstimate sample_min_entropy(const SampleSeries& series, std::size_t bins) {
  if (series.values.size() < 2) return min_entropy(series, bins);
  const stats::Moments m = stats::moments(series.values);
  const double spread = std::sqrt(m.variance);
  if (!(spread > 0.0)) return min_entropy(series, bins);
  return min_entropy(series, bins, std::pair{m.mean - 4.0 * spread, m.mean + 4.0 * spread});
}

// ---------------------------------------------------------------- validate

/// Prints the timing report; returns true when the sampling condition holds.
inline bool cmd_validate(const ScenarioConfig& cfg, std::ostream& out) {
  validate_config(cfg);
  const TimingCheck check = cfg.timing_check();
  const TimingVerdict verdict = validate_timing(check);
  out << timing_to_json(check, verdict).dump(2) << "\n";
  return verdict.passed;
}

// ---------------------------------------------------------------- run

/// Packs bit streams into a raw file as they arrive, hashing on the way.
class RawWriter {
 public:
  explicit RawWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path.string() + "' for writing");
  }

  void write(const BitStream& bits) {
    if (carry_bits_ == 0 && bits.size() % 8 == 0) {
      put(bits.bytes());
    } else {
      BitStream joined = BitStream::from_bytes({carry_}, carry_bits_);
      joined.append(bits);
      const auto bytes = joined.bytes();
      const std::size_t whole = joined.size() / 8;
      put(bytes.first(whole));
      carry_bits_ = joined.size() % 8;
      carry_ = carry_bits_ ? bytes[whole] : 0;
    }
    bit_count_ += bits.size();
  }

  /// Flushes the zero-padded final byte; returns the SHA-256 of the file.
  std::string finish() {
    if (carry_bits_) {
      const std::uint8_t last[] = {carry_};
      put(last);
      carry_bits_ = 0;
    }
    out_.flush();
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
    out_.close();
    return hash_.hex();
  }

  [[nodiscard]] std::size_t bit_count() const { return bit_count_; }

 private:
  void put(std::span<const std::uint8_t> bytes) {
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out_) throw IoError("write failed for '" + path_.string() + "'");
    hash_.update(bytes);
  }

  fs::path path_;
  std::ofstream out_;
  Sha256 hash_;
  std::uint8_t carry_ = 0;
  std::size_t carry_bits_ = 0;
  std::size_t bit_count_ = 0;
};

/// Files created by a command; removed again unless the command commits.
class OutputSet {
 public:
  OutputSet() = default;
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    if (created_dir_) fs::remove(*created_dir_, ec);  // only succeeds if empty
  }

  void prepare_directory(const fs::path& dir) {
    std::error_code ec;
    const bool existed = fs::exists(dir, ec);
    if (!fs::create_directories(dir, ec) && ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    if (!existed) created_dir_ = dir;
  }

  /// Registers a file about to be written. Pre-existing non-files are never cleaned up.
  fs::path add(const fs::path& file) {
    std::error_code ec;
    const auto status = fs::symlink_status(file, ec);
    if (!fs::exists(status) || fs::is_regular_file(status)) files_.push_back(file);
    return file;
  }

  void commit() { committed_ = true; }

 private:
  std::vector<fs::path> files_;
  std::optional<fs::path> created_dir_;
  bool committed_ = false;
};

struct RunCommandOptions {
  fs::path output_dir = "qrng-out";
  unsigned workers = 1;
};

/// Runs the full pipeline and writes every artifact. Returns the metadata document.
inline Json cmd_run(const ScenarioConfig& cfg, const RunCommandOptions& opt, std::ostream& log) {
  const unsigned workers = std::max(1U, opt.workers);
  validate_config(cfg, workers);
  const TimingCheck check = cfg.timing_check();
  const TimingVerdict verdict = validate_timing(check);

  OutputSet outputs;
  outputs.prepare_directory(opt.output_dir);
  const bool xor_on = cfg.extraction.xor_enabled;

  std::vector<std::pair<std::string, RawWriter>> writers;
  writers.emplace_back("bin1", RawWriter(outputs.add(opt.output_dir / "bin1.raw")));
  if (xor_on) {
    writers.emplace_back("bin2", RawWriter(outputs.add(opt.output_dir / "bin2.raw")));
    writers.emplace_back("bin3", RawWriter(outputs.add(opt.output_dir / "bin3.raw")));
  }

  RunOptions run_opts;
  run_opts.workers = workers;
  run_opts.on_unit = [&](const UnitOutput& unit) {
    writers[0].second.write(unit.bin1);
    if (xor_on) {
      writers[1].second.write(*unit.bin2);
      writers[2].second.write(*unit.bin3);
    }
  };
  log << "simulating " << cfg.sampling.frame_count << " frame(s) x " << cfg.sampling.frame_length
      << " samples with " << workers << " worker(s)\n";
  const RunResult result = run_pipeline(cfg, run_opts);

  const double raw_rate = 1.0 / cfg.sampling.period.value();
  Json streams = Json::object();
  for (auto& [name, writer] : writers) {
    const bool extracted = name == "bin3";
    streams[name] = {{"file", name + ".raw"},
                     {"bit_length", writer.bit_count()},
                     {"provenance", to_string(extracted ? Provenance::xor_extracted : Provenance::raw)},
                     {"generation_rate", extracted ? raw_rate / 2.0 : raw_rate},
                     {"sha256", writer.finish()}};
  }

  // Analysis of the extracted stream (bin3 under XOR, bin1 otherwise).
  const BitStream& output_bits = xor_on ? *result.bin3 : result.bin1;
  const StreamSummary output_summary = summarize(output_bits, cfg.analysis);
  const StreamSummary bin1_summary = xor_on ? summarize(result.bin1, cfg.analysis) : output_summary;

  const SampleSeries& first = *result.first_frame;
  const MinEntropyEstimate entropy = sample_min_entropy(first, cfg.analysis.min_entropy_bins);

  Json psd_json = nullptr;
  std::string psd_text = "frequency_hz,density_db\n";
  if (const std::size_t seg = usable_segment(cfg.analysis.psd_segment_length, first.values.size()); seg > 0) {
    const double reference = blocked_input_reference(cfg, seg);
    const SpectrumEstimate est = psd_estimate(first, seg, cfg.analysis.psd_window, reference);
    psd_text = psd_csv(est);
    psd_json = {{"segment_length", est.segment_length},
                {"window", to_string(est.window)},
                {"averages", est.averages},
                {"reference_level", reference},
                {"reference", "median density of a blocked-input frame"},
                {"low_frequency_level_db", low_frequency_level_db(est, first.sampling_period)}};
  }

  const std::string autocorr_name = "autocorr.csv";
  write_text(outputs.add(opt.output_dir / autocorr_name),
             output_summary.autocorr ? autocorr_csv(*output_summary.autocorr) : "lag,coefficient\n");
  if (xor_on)
    write_text(outputs.add(opt.output_dir / "autocorr_bin1.csv"),
               bin1_summary.autocorr ? autocorr_csv(*bin1_summary.autocorr) : "lag,coefficient\n");
  write_text(outputs.add(opt.output_dir / "psd.csv"), psd_text);

  Json report = {{"timing", timing_to_json(check, verdict)},
                 {"output_stream", xor_on ? "bin3" : "bin1"},
                 {"output", summary_to_json(output_summary)}};
  if (xor_on) report["bin1"] = summary_to_json(bin1_summary);
  report["min_entropy"] = {{"per_sample", entropy.per_sample},
                           {"per_bit", entropy.per_bit},
                           {"max_bin_probability", entropy.max_bin_probability},
                           {"bins", entropy.bin_count},
                           {"range", {entropy.range_lo, entropy.range_hi}},
                           {"frame", 0}};
  report["psd"] = psd_json;
  report["dphase_variance"] = result.dphase_variance;
  write_text(outputs.add(opt.output_dir / "report.json"), report.dump(2) + "\n");

  Json frame_seeds = Json::array();
  for (std::size_t f = 0; f < cfg.sampling.frame_count; ++f)
    frame_seeds.push_back(frame_seed(cfg.master_seed, 0, f).value);
  Json metadata = {
      {"format", metadata_format},
      {"version", 1},
      {"bit_packing", "MSB first within each byte, no header, final byte zero padded"},
      {"streams", streams},
      {"seeds",
       {{"master", cfg.master_seed.value},
        {"sweep_point", 0},
        {"scheme", "frame = mix(mix(master, sweep_point), frame_index); stream = mix(frame, tag) with tags "
                   "phase=1 drift=2 controller=3 electrical_noise=4"},
        {"frames", frame_seeds}}},
      {"delay",
       {{"requested", result.delay.requested.value()},
        {"applied", result.delay.applied.value()},
        {"steps", result.delay.steps}}},
      {"thresholds", result.thresholds},
      {"scenario", config_to_json(cfg)},
  };
  write_text(outputs.add(opt.output_dir / "metadata.json"), metadata.dump(2) + "\n");
  outputs.commit();

  log << "wrote " << opt.output_dir.string() << ": " << output_bits.size() << " output bits, bias "
      << number(output_summary.bias(), 4) << ", max |autocorr| " << number(output_summary.max_abs_autocorr, 4)
      << ", battery " << output_summary.battery.pass_count() << "/" << output_summary.battery.tests.size()
      << (output_summary.battery.passed ? " (pass)" : " (fail)") << "\n";
  return metadata;
}

// ---------------------------------------------------------------- sweep

/// Canonical sweep parameter name, or UsageError.
inline std::string sweep_parameter(std::string_view name) {
  if (name == "control_error_std") return "control_error_std";
  if (name == "tau_c" || name == "coherence_time") return "tau_c";
  if (name == "T_d" || name == "delay") return "T_d";
  if (name == "T_S" || name == "sampling_period") return "T_S";
  if (name == "white_noise_std") return "white_noise_std";
  throw UsageError("unknown sweep parameter '" + std::string(name) +
                   "' (expected control_error_std, tau_c, T_d, T_S or white_noise_std)");
}

inline void apply_sweep_value(ScenarioConfig& cfg, const std::string& parameter, double value) {
  if (parameter == "control_error_std") cfg.mzi.control_error_std = value;
  else if (parameter == "tau_c") cfg.laser.coherence_time = Seconds(value);
  else if (parameter == "T_d") cfg.mzi.delay = Seconds(value);
  else if (parameter == "T_S") cfg.sampling.period = Seconds(value);
  else if (parameter == "white_noise_std") cfg.fast.detector.white_noise_std = value;
  else throw UsageError("unknown sweep parameter '" + parameter + "'");
}

struct SweepPoint {
  double value = 0.0;
  std::size_t index = 0;
  StreamSummary output;
  double battery_pass_rate = 0.0;
  MinEntropyEstimate entropy;
  double dphase_variance = 0.0;
  std::optional<double> low_frequency_psd_db;
  bool timing_passed = false;
  std::string sha256;
};

struct SweepOptions {
  std::string parameter;
  std::vector<double> values;
  unsigned workers = 1;
};

inline constexpr std::string_view sweep_csv_header =
    "parameter,value,sweep_point,bias,ones_fraction,max_abs_autocorr,battery_pass_rate,battery_passed,"
    "min_entropy_per_sample,min_entropy_per_bit,dphase_variance,low_freq_psd_db,timing_passed,sha256";

inline std::string sweep_csv_row(const std::string& parameter, const SweepPoint& p) {
  return parameter + "," + number(p.value) + "," + std::to_string(p.index) + "," + number(p.output.bias()) + "," +
         number(p.output.ones_fraction) + "," + number(p.output.max_abs_autocorr) + "," +
         number(p.battery_pass_rate) + "," + (p.output.battery.passed ? "true" : "false") + "," +
         number(p.entropy.per_sample) + "," + number(p.entropy.per_bit) + "," + number(p.dphase_variance) + "," +
         (p.low_frequency_psd_db ? number(*p.low_frequency_psd_db) : std::string("nan")) + "," +
         (p.timing_passed ? "true" : "false") + "," + p.sha256;
}

/// One pipeline run per value; sweep point i seeds its frames from
/// mix(master, i), so point 0 reproduces a plain run bit for bit.
/// Rows are passed to `on_row` as they complete, in value order.
inline std::vector<SweepPoint> cmd_sweep(const ScenarioConfig& base, const SweepOptions& opt,
                                         const std::function<void(const SweepPoint&)>& on_row = {}) {
  const std::string parameter = sweep_parameter(opt.parameter);
  if (opt.values.empty()) throw UsageError("sweep needs at least one value");
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < opt.values.size(); ++i) {
    ScenarioConfig cfg = base;
    apply_sweep_value(cfg, parameter, opt.values[i]);
    validate_config(cfg, opt.workers);

    RunOptions run_opts;
    run_opts.workers = opt.workers;
    run_opts.sweep_point = i;
    const RunResult result = run_pipeline(cfg, run_opts);
    const BitStream& bits = cfg.extraction.xor_enabled ? *result.bin3 : result.bin1;

    SweepPoint p;
    p.value = opt.values[i];
    p.index = i;
    p.output = summarize(bits, cfg.analysis);
    p.battery_pass_rate = static_cast<double>(p.output.battery.pass_count()) /
                          static_cast<double>(p.output.battery.tests.size());
    const SampleSeries& first = *result.first_frame;
    p.entropy = sample_min_entropy(first, cfg.analysis.min_entropy_bins);
    p.dphase_variance = result.dphase_variance;
    if (const std::size_t seg = usable_segment(cfg.analysis.psd_segment_length, first.values.size()); seg > 0)
      p.low_frequency_psd_db =
          low_frequency_level_db(psd_estimate(first, seg, cfg.analysis.psd_window), first.sampling_period);
    p.timing_passed = validate_timing(cfg.timing_check()).passed;
    p.sha256 = sha256_hex(bits.bytes());
    if (on_row) on_row(p);
    points.push_back(std::move(p));
  }
  return points;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  std::optional<fs::path> metadata;      // sidecar; default: metadata.json next to the raw file
  std::optional<std::size_t> bit_length;  // overrides the sidecar
  double alpha = 0.01;
  std::size_t max_lag = 100;
  std::optional<fs::path> output_dir;  // report.json + autocorr.csv when set
};

/// Analyzes an existing raw file. Returns the report; "passed" mirrors the battery.
inline Json cmd_analyze(const fs::path& raw, const AnalyzeOptions& opt) {
  std::optional<std::size_t> length = opt.bit_length;
  Provenance provenance = Provenance::raw;
  std::string length_source = opt.bit_length ? "command line" : "file size";

  const fs::path sidecar = opt.metadata.value_or(raw.parent_path() / "metadata.json");
  if (opt.metadata && !fs::exists(*opt.metadata)) throw IoError("metadata file '" + opt.metadata->string() + "' not found");
  if (fs::exists(sidecar)) {
    const Json meta = parse_json_text(read_text_file(sidecar.string()));
    if (meta.contains("streams") && meta["streams"].is_object()) {
      for (const auto& [name, entry] : meta["streams"].items()) {
        if (!entry.is_object() || entry.value("file", "") != raw.filename().string()) continue;
        if (!length) {
          length = entry.at("bit_length").get<std::size_t>();
          length_source = "metadata";
        }
        provenance = provenance_from_string(entry.value("provenance", "raw"));
      }
    }
  }

  const BitStream bits = read_raw(raw, length, provenance);
  detail::require(!bits.empty(), "analyze: raw file holds no bits");
  AnalysisSection analysis;
  analysis.alpha = opt.alpha;
  analysis.max_lag = opt.max_lag;
  const StreamSummary summary = summarize(bits, analysis);

  Json report = {{"file", raw.string()},
                 {"provenance", to_string(provenance)},
                 {"bit_length_source", length_source},
                 {"sha256", sha256_hex(bits.bytes())}};
  report.update(summary_to_json(summary));
  report["passed"] = summary.battery.passed;

  if (opt.output_dir) {
    OutputSet outputs;
    outputs.prepare_directory(*opt.output_dir);
    write_text(outputs.add(*opt.output_dir / "autocorr.csv"),
               summary.autocorr ? autocorr_csv(*summary.autocorr) : "lag,coefficient\n");
    write_text(outputs.add(*opt.output_dir / "report.json"), report.dump(2) + "\n");
    outputs.commit();
  }
  return report;
}

// ---------------------------------------------------------------- exit codes

/// Runs `body`, printing any error to `err` and translating it to an exit code.
inline int run_guarded(const std::function<int()>& body, std::ostream& err = std::cerr) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_usage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const InvalidParameter& e) {
    err << "invalid parameter: " << e.what() << "\n";
    return exit_usage;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << "\n";
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_usage;
  }
}

}  // namespace qrng::app
