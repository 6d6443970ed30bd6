#pragma once

// Declarative run configuration: one JSON file drives every pipeline stage.
// A named optics preset expands first, explicit config fields override it,
// and command-line overrides win over both. Every run is reproducible from
// the effective configuration alone: all random streams derive from the
// seeds block, never from entropy sources.
//
// The published schema lives in docs/config.schema.json; validation here is
// strict (unknown keys are config errors).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pelm/corpus.hpp"
#include "pelm/detail/io.hpp"
#include "pelm/error.hpp"
#include "pelm/optics.hpp"
#include "pelm/rng.hpp"

namespace pelm {

struct seed_config {
  std::uint64_t master = 0;
  std::optional<std::uint64_t> embedding;
  std::optional<std::uint64_t> split;
  std::optional<std::uint64_t> channels;
  std::optional<std::uint64_t> noise;
  std::vector<std::uint64_t> sweep;  // optional explicit repeat seeds

  std::uint64_t embedding_seed() const {
    return embedding ? *embedding : derive_seed(master, 1);
  }
  std::uint64_t split_seed() const {
    return split ? *split : derive_seed(master, 2);
  }
  std::uint64_t channel_seed() const {
    return channels ? *channels : derive_seed(master, 3);
  }
  std::uint64_t noise_seed() const {
    return noise ? *noise : derive_seed(master, 4);
  }
  std::vector<std::uint64_t> sweep_seeds(int repeats) const {
    if (!sweep.empty()) return sweep;
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r)
      out.push_back(derive_seed(master, 100 + static_cast<std::uint64_t>(r)));
    return out;
  }
};

struct corpus_config {
  std::string source;
  corpus_format format = corpus_format::csv;
  std::int64_t min_frequency = 1;
  std::int64_t max_terms = 0;  // 0 = unlimited
};

struct encoding_io_config {
  bool cache_masks = true;
  bool write_tfidf_triplets = true;
};

struct optics_config {
  std::string preset;  // informational once expanded
  std::vector<plane_spec> planes;
  int block = 1;
  int slm_bits = 8;
  beam_geometry geom{};
  double noise_std = 0.0;
  std::int64_t calibration_batch = 256;
  int threads = 0;
  std::int64_t diagnostic_masks = 64;
};

struct learning_config {
  double lambda = 1e-4;
  double train_fraction = 0.67;
  std::int64_t channels = 0;  // 0 = all
  bool bias = false;
};

struct sweep_variant_config {
  std::string label;
  std::string features_path;
};

struct sweep_config {
  std::string type;  // double-descent | saturation | split
  std::vector<std::int64_t> m_values;
  std::vector<std::int64_t> n_train_values;
  std::vector<double> fractions;
  std::vector<sweep_variant_config> variants;  // saturation inputs
  int repeats = 5;
  double gain_epsilon = 0.001;
  double tolerance = 0.02;
};

struct run_config {
  int version = 1;
  seed_config seeds;
  corpus_config corpus;
  encoding_io_config encoding;
  optics_config optics;
  learning_config learning;
  std::optional<sweep_config> sweep;
  std::string output_dir = "out";
};

/// Command-line overrides; applied after the file is parsed.
struct config_overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> preset;
  std::optional<int> bits;
  std::optional<std::string> mode;
  std::optional<int> threads;
};

// ---------------------------------------------------------------------------
// Presets

/// Known optics presets. Detector grids oversample the far field so binning
/// by `block` leaves one channel per speckle-scale mode.
inline void apply_optics_preset(optics_config& optics, const std::string& name) {
  const auto planes_at = [](std::initializer_list<double> zs, int grid,
                            propagation_mode mode) {
    std::vector<plane_spec> planes;
    int id = 0;
    for (double z : zs) planes.push_back({id++, z, 0, mode, grid});
    return planes;
  };
  if (name == "desk") {
    optics.planes = planes_at({0.050, 0.100, 0.150}, 192,
                              propagation_mode::angular_spectrum);
    optics.block = 2;
    optics.slm_bits = 8;
  } else if (name == "paper-full") {
    // 3 planes x (400/2)^2 channels = 120000 output channels
    optics.planes = planes_at({0.050, 0.100, 0.150}, 400,
                              propagation_mode::angular_spectrum);
    optics.block = 2;
    optics.slm_bits = 8;
  } else if (name == "fast") {
    // structured random unitaries on the native mask grid; test double
    optics.planes = planes_at({0.001, 0.002, 0.003}, 0,
                              propagation_mode::random_unitary);
    optics.block = 1;
    optics.slm_bits = 8;
  } else {
    fail_config("unknown optics preset: " + name +
                " (expected desk|paper-full|fast)");
  }
  optics.preset = name;
}

// ---------------------------------------------------------------------------
// JSON parsing (strict)

namespace detail {

inline void check_keys(const nlohmann::json& obj, const char* where,
                       std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok)
      fail_config(std::string("unknown key \"") + key + "\" in " + where);
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail_config(std::string("bad value type for \"") + key + "\"");
  }
}

}  // namespace detail

inline run_config parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) fail_config("config root must be a JSON object");
  detail::check_keys(j, "config root",
                     {"version", "seeds", "corpus", "encoding", "optics",
                      "learning", "sweep", "output_dir"});
  run_config cfg;
  cfg.version = detail::get_or<int>(j, "version", 1);
  if (cfg.version != 1) fail_config("unsupported config version");

  if (!j.contains("seeds") || !j.at("seeds").is_object() ||
      !j.at("seeds").contains("master"))
    fail_config("config must provide seeds.master (reproducible runs only)");
  {
    const auto& js = j.at("seeds");
    detail::check_keys(js, "seeds",
                       {"master", "embedding", "split", "channels", "noise", "sweep"});
    cfg.seeds.master = js.at("master").get<std::uint64_t>();
    if (js.contains("embedding"))
      cfg.seeds.embedding = js.at("embedding").get<std::uint64_t>();
    if (js.contains("split")) cfg.seeds.split = js.at("split").get<std::uint64_t>();
    if (js.contains("channels"))
      cfg.seeds.channels = js.at("channels").get<std::uint64_t>();
    if (js.contains("noise")) cfg.seeds.noise = js.at("noise").get<std::uint64_t>();
    if (js.contains("sweep"))
      cfg.seeds.sweep = js.at("sweep").get<std::vector<std::uint64_t>>();
  }

  if (j.contains("corpus")) {
    const auto& jc = j.at("corpus");
    detail::check_keys(jc, "corpus", {"source", "format", "min_frequency", "max_terms"});
    cfg.corpus.source = detail::get_or<std::string>(jc, "source", "");
    cfg.corpus.format =
        parse_corpus_format(detail::get_or<std::string>(jc, "format", "csv"));
    cfg.corpus.min_frequency = detail::get_or<std::int64_t>(jc, "min_frequency", 1);
    cfg.corpus.max_terms = detail::get_or<std::int64_t>(jc, "max_terms", 0);
  }

  if (j.contains("encoding")) {
    const auto& je = j.at("encoding");
    detail::check_keys(je, "encoding", {"cache_masks", "write_tfidf_triplets"});
    cfg.encoding.cache_masks = detail::get_or<bool>(je, "cache_masks", true);
    cfg.encoding.write_tfidf_triplets =
        detail::get_or<bool>(je, "write_tfidf_triplets", true);
  }

  if (j.contains("optics")) {
    const auto& jo = j.at("optics");
    detail::check_keys(jo, "optics",
                       {"preset", "planes", "block", "slm_bits", "wavelength",
                        "pitch", "noise_std", "calibration_batch", "threads",
                        "diagnostic_masks"});
    if (jo.contains("preset"))
      apply_optics_preset(cfg.optics, jo.at("preset").get<std::string>());
    if (jo.contains("planes")) {
      cfg.optics.planes.clear();
      int next_id = 0;
      for (const auto& jp : jo.at("planes")) {
        detail::check_keys(jp, "optics.planes[]",
                           {"plane_id", "distance", "detector_bits", "mode",
                            "detector_grid"});
        plane_spec p;
        p.plane_id = detail::get_or<int>(jp, "plane_id", next_id);
        p.distance = detail::get_or<double>(jp, "distance", 0.0);
        p.detector_bits = detail::get_or<int>(jp, "detector_bits", 0);
        p.mode = parse_propagation_mode(
            detail::get_or<std::string>(jp, "mode", "angular-spectrum"));
        p.detector_grid = detail::get_or<int>(jp, "detector_grid", 0);
        cfg.optics.planes.push_back(p);
        ++next_id;
      }
    }
    cfg.optics.block = detail::get_or<int>(jo, "block", cfg.optics.block);
    cfg.optics.slm_bits = detail::get_or<int>(jo, "slm_bits", cfg.optics.slm_bits);
    cfg.optics.geom.wavelength =
        detail::get_or<double>(jo, "wavelength", cfg.optics.geom.wavelength);
    cfg.optics.geom.pitch = detail::get_or<double>(jo, "pitch", cfg.optics.geom.pitch);
    cfg.optics.noise_std = detail::get_or<double>(jo, "noise_std", 0.0);
    cfg.optics.calibration_batch =
        detail::get_or<std::int64_t>(jo, "calibration_batch", 256);
    cfg.optics.threads = detail::get_or<int>(jo, "threads", 0);
    cfg.optics.diagnostic_masks =
        detail::get_or<std::int64_t>(jo, "diagnostic_masks", 64);
  }

  if (j.contains("learning")) {
    const auto& jl = j.at("learning");
    detail::check_keys(jl, "learning",
                       {"lambda", "train_fraction", "channels", "bias"});
    cfg.learning.lambda = detail::get_or<double>(jl, "lambda", 1e-4);
    cfg.learning.train_fraction = detail::get_or<double>(jl, "train_fraction", 0.67);
    cfg.learning.channels = detail::get_or<std::int64_t>(jl, "channels", 0);
    cfg.learning.bias = detail::get_or<bool>(jl, "bias", false);
  }

  if (j.contains("sweep")) {
    const auto& js = j.at("sweep");
    detail::check_keys(js, "sweep",
                       {"type", "m_values", "n_train_values", "fractions",
                        "variants", "repeats", "gain_epsilon", "tolerance"});
    sweep_config sw;
    sw.type = detail::get_or<std::string>(js, "type", "");
    sw.m_values = detail::get_or<std::vector<std::int64_t>>(js, "m_values", {});
    sw.n_train_values =
        detail::get_or<std::vector<std::int64_t>>(js, "n_train_values", {});
    sw.fractions = detail::get_or<std::vector<double>>(js, "fractions", {});
    if (js.contains("variants")) {
      for (const auto& jv : js.at("variants")) {
        detail::check_keys(jv, "sweep.variants[]", {"label", "features"});
        sw.variants.push_back({jv.at("label").get<std::string>(),
                               jv.at("features").get<std::string>()});
      }
    }
    sw.repeats = detail::get_or<int>(js, "repeats", 5);
    sw.gain_epsilon = detail::get_or<double>(js, "gain_epsilon", 0.001);
    sw.tolerance = detail::get_or<double>(js, "tolerance", 0.02);
    cfg.sweep = std::move(sw);
  }

  cfg.output_dir = detail::get_or<std::string>(j, "output_dir", "out");
  return cfg;
}

inline void apply_overrides(run_config& cfg, const config_overrides& ov) {
  if (ov.preset) apply_optics_preset(cfg.optics, *ov.preset);
  if (ov.seed) {
    cfg.seeds = seed_config{};
    cfg.seeds.master = *ov.seed;
  }
  if (ov.output_dir) cfg.output_dir = *ov.output_dir;
  if (ov.bits)
    for (auto& p : cfg.optics.planes) p.detector_bits = *ov.bits;
  if (ov.mode) {
    const propagation_mode mode = parse_propagation_mode(*ov.mode);
    for (auto& p : cfg.optics.planes) p.mode = mode;
  }
  if (ov.threads) cfg.optics.threads = *ov.threads;
}

/// Structural validation beyond parse-time checks.
inline void validate(const run_config& cfg, bool needs_corpus = true) {
  if (needs_corpus && cfg.corpus.source.empty())
    fail_config("corpus.source is required");
  if (cfg.corpus.min_frequency < 1) fail_config("corpus.min_frequency must be >= 1");
  if (cfg.corpus.max_terms < 0) fail_config("corpus.max_terms must be >= 0");
  if (cfg.optics.planes.empty())
    fail_config("optics.planes is empty (set a preset or list planes)");
  for (const auto& p : cfg.optics.planes) p.validate();
  if (cfg.optics.block < 1) fail_config("optics.block must be >= 1");
  if (cfg.optics.slm_bits < 0 || cfg.optics.slm_bits > 16)
    fail_config("optics.slm_bits must lie in [0, 16]");
  if (!(cfg.optics.geom.wavelength > 0.0) || !(cfg.optics.geom.pitch > 0.0))
    fail_config("optics wavelength and pitch must be positive");
  if (cfg.optics.noise_std < 0.0) fail_config("optics.noise_std must be >= 0");
  if (cfg.optics.calibration_batch < 1)
    fail_config("optics.calibration_batch must be >= 1");
  if (cfg.optics.threads < 0) fail_config("optics.threads must be >= 0");
  if (cfg.optics.diagnostic_masks < 16)
    fail_config("optics.diagnostic_masks must be >= 16");
  if (!(cfg.learning.lambda > 0.0)) fail_config("learning.lambda must be > 0");
  if (!(cfg.learning.train_fraction > 0.0 && cfg.learning.train_fraction < 1.0))
    fail_config("learning.train_fraction must lie in (0, 1)");
  if (cfg.learning.channels < 0) fail_config("learning.channels must be >= 0");
  if (cfg.output_dir.empty()) fail_config("output_dir is required");
  if (cfg.sweep) {
    const auto& sw = *cfg.sweep;
    if (sw.type != "double-descent" && sw.type != "saturation" && sw.type != "split")
      fail_config("sweep.type must be double-descent|saturation|split");
    if (sw.repeats < 1) fail_config("sweep.repeats must be >= 1");
    if (!cfg.seeds.sweep.empty() &&
        static_cast<int>(cfg.seeds.sweep.size()) != sw.repeats)
      fail_config("seeds.sweep length must equal sweep.repeats");
    if (sw.type == "double-descent" &&
        (sw.m_values.empty() || sw.n_train_values.empty()))
      fail_config("double-descent sweep needs m_values and n_train_values");
    if (sw.type == "saturation" && (sw.variants.size() < 2 || sw.m_values.size() < 2))
      fail_config("saturation sweep needs >= 2 variants and >= 2 m_values");
    if (sw.type == "split" && (sw.fractions.empty() || sw.m_values.empty()))
      fail_config("split sweep needs fractions and m_values");
  }
}

inline run_config load_run_config(const std::filesystem::path& path,
                                  const config_overrides& ov = {},
                                  bool needs_corpus = true) {
  if (!std::filesystem::exists(path)) fail_io("config not found: " + path.string());
  nlohmann::json j = nlohmann::json::parse(detail::slurp(path), nullptr, false);
  if (j.is_discarded()) fail_config("config is not valid JSON: " + path.string());
  run_config cfg = parse_run_config(j);
  apply_overrides(cfg, ov);
  validate(cfg, needs_corpus);
  return cfg;
}

// ---------------------------------------------------------------------------
// Effective-config serialization and fingerprints

inline nlohmann::json effective_json(const run_config& cfg) {
  nlohmann::json j;
  j["version"] = cfg.version;
  j["seeds"] = {{"master", cfg.seeds.master},
                {"embedding", cfg.seeds.embedding_seed()},
                {"split", cfg.seeds.split_seed()},
                {"channels", cfg.seeds.channel_seed()},
                {"noise", cfg.seeds.noise_seed()}};
  j["corpus"] = {{"source", cfg.corpus.source},
                 {"format", cfg.corpus.format == corpus_format::csv ? "csv" : "dir"},
                 {"min_frequency", cfg.corpus.min_frequency},
                 {"max_terms", cfg.corpus.max_terms}};
  j["encoding"] = {{"cache_masks", cfg.encoding.cache_masks},
                   {"write_tfidf_triplets", cfg.encoding.write_tfidf_triplets}};
  auto planes = nlohmann::json::array();
  for (const auto& p : cfg.optics.planes)
    planes.push_back({{"plane_id", p.plane_id},
                      {"distance", p.distance},
                      {"detector_bits", p.detector_bits},
                      {"mode", to_string(p.mode)},
                      {"detector_grid", p.detector_grid}});
  j["optics"] = {{"planes", std::move(planes)},
                 {"block", cfg.optics.block},
                 {"slm_bits", cfg.optics.slm_bits},
                 {"wavelength", cfg.optics.geom.wavelength},
                 {"pitch", cfg.optics.geom.pitch},
                 {"noise_std", cfg.optics.noise_std},
                 {"calibration_batch", cfg.optics.calibration_batch}};
  j["learning"] = {{"lambda", cfg.learning.lambda},
                   {"train_fraction", cfg.learning.train_fraction},
                   {"channels", cfg.learning.channels},
                   {"bias", cfg.learning.bias}};
  if (cfg.sweep) {
    j["sweep"] = {{"type", cfg.sweep->type},
                  {"m_values", cfg.sweep->m_values},
                  {"n_train_values", cfg.sweep->n_train_values},
                  {"fractions", cfg.sweep->fractions},
                  {"repeats", cfg.sweep->repeats},
                  {"seeds", cfg.seeds.sweep_seeds(cfg.sweep->repeats)},
                  {"gain_epsilon", cfg.sweep->gain_epsilon},
                  {"tolerance", cfg.sweep->tolerance}};
    auto variants = nlohmann::json::array();
    for (const auto& v : cfg.sweep->variants)
      variants.push_back({{"label", v.label}, {"features", v.features_path}});
    j["sweep"]["variants"] = std::move(variants);
  }
  j["output_dir"] = cfg.output_dir;
  return j;
}

/// Fingerprint of the whole effective configuration.
inline std::uint64_t config_fingerprint(const run_config& cfg) {
  return detail::fnv1a(effective_json(cfg).dump());
}

/// Fingerprint of the fields that determine prepare-stage artifacts.
inline std::uint64_t prepare_fingerprint(const run_config& cfg) {
  nlohmann::json j;
  j["corpus"] = effective_json(cfg)["corpus"];
  j["train_fraction"] = cfg.learning.train_fraction;
  j["split_seed"] = cfg.seeds.split_seed();
  return detail::fnv1a(j.dump());
}

/// Fingerprint of the fields that determine the simulated feature matrix.
inline std::uint64_t simulate_fingerprint(const run_config& cfg) {
  nlohmann::json j;
  j["prepare"] = detail::hex64(prepare_fingerprint(cfg));
  j["optics"] = effective_json(cfg)["optics"];
  j["embedding_seed"] = cfg.seeds.embedding_seed();
  j["noise_seed"] = cfg.seeds.noise_seed();
  return detail::fnv1a(j.dump());
}

}  // namespace pelm
