#ifndef GELVEC_STUDY_HPP
#define GELVEC_STUDY_HPP

// Manifest-driven study pipeline: synth -> refs -> normalize -> featurize ->
// train / eval / predict. Every stage reads the previous stage's files from
// the output directory, so stages can be rerun and inspected one at a time.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "crossval.hpp"
#include "error.hpp"
#include "features.hpp"
#include "pgm.hpp"
#include "resample.hpp"
#include "spots.hpp"
#include "svm.hpp"
#include "svm_io.hpp"
#include "synth.hpp"

namespace gelvec {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// A per-sample failure; the message carries the sample id.
class SampleError : public Error {
public:
  SampleError(std::string id, const std::string& what)
      : Error("sample " + id + ": " + what), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

private:
  std::string id_;
};

enum class StudyMode { Whole, Spots, Compare };

struct DetectParams {
  Density min_peak = 64;
  double min_distance = 8.0;
};

struct StudyManifest {
  std::string study = "study";
  fs::path image_dir;
  fs::path output_dir;
  fs::path labels_path;
  std::optional<fs::path> annotations_path;
  bool dark_is_stain = true;
  std::uint64_t seed = 0;
  std::optional<CohortSpec> cohort;
  std::optional<ReferencePair> canonical_refs;
  std::optional<std::string> template_id;
  std::optional<Extent> canvas;
  RoiSpec roi;
  InterpKind interp = Bilinear{};
  StudyMode mode = StudyMode::Whole;
  std::vector<PixelCoord> seeds;  // canonical-canvas coordinates
  double fraction = 0.5;
  DetectParams detect;
  SmoParams svm;
  std::size_t k = 5;
};

struct Annotation {
  ReferencePair refs;
  std::optional<int> label;
};

using AnnotationFile = std::map<std::string, Annotation>;

namespace detail {

template <class T>
T get_as(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw SchemaError(key, e.what());
  }
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError(path, "missing required key");
  return obj.at(key);
}

inline void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
}

inline PixelCoord parse_coord(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw SchemaError(path, "expected [x, y] integer pair");
  return {j[0].get<int>(), j[1].get<int>()};
}

inline Json coord_json(PixelCoord c) { return Json::array({c.x, c.y}); }

inline ReferencePair parse_refs(const Json& j, const std::string& path) {
  require_object(j, path);
  const PixelCoord a = parse_coord(require(j, "a", path + ".a"), path + ".a");
  const PixelCoord b = parse_coord(require(j, "b", path + ".b"), path + ".b");
  try {
    return {a, b};
  } catch (const DegenerateReferences& e) {
    throw SchemaError(path, e.what());
  }
}

inline Json refs_json(const ReferencePair& r) { return {{"a", coord_json(r.a())}, {"b", coord_json(r.b())}}; }

inline Range parse_range(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw SchemaError(path, "expected [lo, hi]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Extent parse_extent(const Json& j, const std::string& path) {
  const PixelCoord c = parse_coord(j, path);
  if (c.x < 1 || c.y < 1) throw SchemaError(path, "dimensions must be >= 1");
  return {c.x, c.y};
}

template <class T>
void optional_field(const Json& obj, const std::string& key, const std::string& path, T& out) {
  if (obj.contains(key)) out = get_as<T>(obj.at(key), path + "." + key);
}

inline int parse_label(const Json& j, const std::string& path) {
  const int v = get_as<int>(j, path);
  if (v != 1 && v != -1) throw SchemaError(path, "label must be +1 or -1");
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Cohort specification <-> JSON

inline CohortSpec parse_cohort(const Json& j, const std::string& path = "cohort") {
  using namespace detail;
  require_object(j, path);
  CohortSpec c;
  optional_field(j, "disease", path, c.disease);
  optional_field(j, "n_normal", path, c.n_normal);
  optional_field(j, "n_disease", path, c.n_disease);
  if (j.contains("canvas")) c.canvas = parse_extent(j.at("canvas"), path + ".canvas");
  if (j.contains("max_density")) {
    const int m = get_as<int>(j.at("max_density"), path + ".max_density");
    if (m < 1 || m > 65535) throw SchemaError(path + ".max_density", "must be in 1..65535");
    c.max_density = static_cast<Density>(m);
  }
  if (j.contains("stain")) {
    const Json& s = j.at("stain");
    require_object(s, path + ".stain");
    optional_field(s, "threshold", path + ".stain", c.stain.threshold);
    optional_field(s, "peak_density", path + ".stain", c.stain.peak_density);
    optional_field(s, "decay_width", path + ".stain", c.stain.decay_width);
  }
  const Json& spots = require(j, "spots", path + ".spots");
  if (!spots.is_array() || spots.empty()) throw SchemaError(path + ".spots", "expected a nonempty array");
  for (std::size_t i = 0; i < spots.size(); ++i) {
    const std::string sp = path + ".spots[" + std::to_string(i) + "]";
    const Json& s = spots[i];
    require_object(s, sp);
    SpotSpec spec;
    spec.name = get_as<std::string>(require(s, "name", sp + ".name"), sp + ".name");
    spec.center = {get_as<double>(require(s, "x", sp + ".x"), sp + ".x"),
                   get_as<double>(require(s, "y", sp + ".y"), sp + ".y")};
    spec.quantity = get_as<double>(require(s, "quantity", sp + ".quantity"), sp + ".quantity");
    spec.sigma = get_as<double>(require(s, "sigma", sp + ".sigma"), sp + ".sigma");
    if (spec.quantity < 0.0) throw SchemaError(sp + ".quantity", "must be >= 0");
    if (!(spec.sigma > 0.0)) throw SchemaError(sp + ".sigma", "must be > 0");
    c.spots.push_back(std::move(spec));
  }
  const Json& refs = require(j, "references", path + ".references");
  if (!refs.is_array() || refs.size() != 2) throw SchemaError(path + ".references", "expected two spot names");
  c.reference_names = {get_as<std::string>(refs[0], path + ".references"),
                       get_as<std::string>(refs[1], path + ".references")};
  if (j.contains("disease_deltas")) {
    const Json& d = j.at("disease_deltas");
    require_object(d, path + ".disease_deltas");
    for (const auto& [name, mult] : d.items())
      c.disease_deltas[name] = get_as<double>(mult, path + ".disease_deltas." + name);
  }
  if (j.contains("jitter")) {
    const Json& jt = j.at("jitter");
    const std::string jp = path + ".jitter";
    require_object(jt, jp);
    if (jt.contains("scale_x")) c.jitter.scale_x = parse_range(jt.at("scale_x"), jp + ".scale_x");
    if (jt.contains("scale_y")) c.jitter.scale_y = parse_range(jt.at("scale_y"), jp + ".scale_y");
    if (jt.contains("shift_x")) c.jitter.shift_x = parse_range(jt.at("shift_x"), jp + ".shift_x");
    if (jt.contains("shift_y")) c.jitter.shift_y = parse_range(jt.at("shift_y"), jp + ".shift_y");
    optional_field(jt, "noise_sigma", jp, c.jitter.noise_sigma);
  }
  optional_field(j, "quantity_spread", path, c.quantity_spread);
  try {
    validate(c);
  } catch (const MissingReference& e) {
    throw SchemaError(path + ".references", e.what());
  } catch (const InvalidArgument& e) {
    throw SchemaError(path, e.what());
  }
  return c;
}

inline Json cohort_json(const CohortSpec& c) {
  Json spots = Json::array();
  for (const SpotSpec& s : c.spots)
    spots.push_back({{"name", s.name}, {"x", s.center.x}, {"y", s.center.y}, {"quantity", s.quantity},
                     {"sigma", s.sigma}});
  const auto range = [](const Range& r) { return Json::array({r.lo, r.hi}); };
  return {{"disease", c.disease},
          {"n_normal", c.n_normal},
          {"n_disease", c.n_disease},
          {"canvas", Json::array({c.canvas.width, c.canvas.height})},
          {"max_density", c.max_density},
          {"stain",
           {{"threshold", c.stain.threshold},
            {"peak_density", c.stain.peak_density},
            {"decay_width", c.stain.decay_width}}},
          {"spots", spots},
          {"references", Json::array({c.reference_names[0], c.reference_names[1]})},
          {"disease_deltas", c.disease_deltas},
          {"jitter",
           {{"scale_x", range(c.jitter.scale_x)},
            {"scale_y", range(c.jitter.scale_y)},
            {"shift_x", range(c.jitter.shift_x)},
            {"shift_y", range(c.jitter.shift_y)},
            {"noise_sigma", c.jitter.noise_sigma}}},
          {"quantity_spread", c.quantity_spread}};
}

// ---------------------------------------------------------------------------
// Manifest

// Parses and validates a study manifest. Relative paths are resolved against
// `base_dir` (normally the manifest's directory). Only "roi" is required.
inline StudyManifest parse_manifest(std::string_view text, const fs::path& base_dir = ".") {
  using namespace detail;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("<document>", e.what());
  }
  require_object(j, "<document>");

  StudyManifest m;
  optional_field(j, "study", "", m.study);
  auto path_field = [&](const char* key, const char* fallback) {
    fs::path p = fallback;
    if (j.contains(key)) p = get_as<std::string>(j.at(key), key);
    return p.is_absolute() ? p : base_dir / p;
  };
  m.image_dir = path_field("image_dir", "images");
  m.output_dir = path_field("output_dir", "out");
  m.labels_path = j.contains("labels") ? path_field("labels", "") : m.image_dir / "labels.tsv";
  if (j.contains("annotations")) m.annotations_path = path_field("annotations", "");
  optional_field(j, "dark_is_stain", "", m.dark_is_stain);
  optional_field(j, "seed", "", m.seed);
  if (j.contains("cohort")) m.cohort = parse_cohort(j.at("cohort"));

  if (j.contains("canonical")) {
    const Json& c = j.at("canonical");
    require_object(c, "canonical");
    if (c.contains("refs")) m.canonical_refs = parse_refs(c.at("refs"), "canonical.refs");
    if (c.contains("template")) m.template_id = get_as<std::string>(c.at("template"), "canonical.template");
    if (m.canonical_refs && m.template_id) throw SchemaError("canonical", "give either refs or template, not both");
  }
  if (j.contains("canvas")) m.canvas = parse_extent(j.at("canvas"), "canvas");

  const Json& roi = require(j, "roi", "roi");
  require_object(roi, "roi");
  m.roi.width = get_as<int>(require(roi, "width", "roi.width"), "roi.width");
  m.roi.height = get_as<int>(require(roi, "height", "roi.height"), "roi.height");
  if (m.roi.width < 1 || m.roi.height < 1) throw SchemaError("roi", "width and height must be >= 1");
  if (roi.contains("fill")) {
    const int f = get_as<int>(roi.at("fill"), "roi.fill");
    if (f < 0 || f > 65535) throw SchemaError("roi.fill", "must be in 0..65535");
    m.roi.fill = static_cast<Density>(f);
  }

  if (j.contains("interp")) {
    const Json& in = j.at("interp");
    require_object(in, "interp");
    const auto kind = get_as<std::string>(require(in, "kind", "interp.kind"), "interp.kind");
    if (kind == "bilinear") {
      m.interp = Bilinear{};
    } else if (kind == "gaussian") {
      Gaussian g;
      optional_field(in, "radius", "interp", g.radius);
      optional_field(in, "sigma", "interp", g.sigma);
      if (g.radius < 1) throw SchemaError("interp.radius", "must be >= 1");
      if (!(g.sigma > 0.0)) throw SchemaError("interp.sigma", "must be > 0");
      m.interp = g;
    } else {
      throw SchemaError("interp.kind", "expected \"bilinear\" or \"gaussian\"");
    }
  }

  if (j.contains("representation")) {
    const Json& r = j.at("representation");
    require_object(r, "representation");
    if (r.contains("mode")) {
      const auto mode = get_as<std::string>(r.at("mode"), "representation.mode");
      if (mode == "whole")
        m.mode = StudyMode::Whole;
      else if (mode == "spots")
        m.mode = StudyMode::Spots;
      else if (mode == "compare")
        m.mode = StudyMode::Compare;
      else
        throw SchemaError("representation.mode", "expected \"whole\", \"spots\" or \"compare\"");
    }
    if (r.contains("seeds")) {
      const Json& s = r.at("seeds");
      if (!s.is_array()) throw SchemaError("seeds", "expected an array of [x, y]");
      for (std::size_t i = 0; i < s.size(); ++i) m.seeds.push_back(parse_coord(s[i], "seeds"));
    }
    optional_field(r, "fraction", "representation", m.fraction);
    if (!(m.fraction > 0.0) || m.fraction > 1.0) throw SchemaError("representation.fraction", "must lie in (0, 1]");
  }
  if (m.mode != StudyMode::Whole && m.seeds.empty())
    throw SchemaError("seeds", "chosen-spot representation needs at least one seed");

  if (j.contains("detect")) {
    const Json& d = j.at("detect");
    require_object(d, "detect");
    int peak = m.detect.min_peak;
    optional_field(d, "min_peak", "detect", peak);
    if (peak < 1 || peak > 65535) throw SchemaError("detect.min_peak", "must be in 1..65535");
    m.detect.min_peak = static_cast<Density>(peak);
    optional_field(d, "min_distance", "detect", m.detect.min_distance);
  }

  if (j.contains("svm")) {
    const Json& s = j.at("svm");
    require_object(s, "svm");
    optional_field(s, "C", "svm", m.svm.C);
    optional_field(s, "tol", "svm", m.svm.tol);
    optional_field(s, "max_passes", "svm", m.svm.max_passes);
    if (!(m.svm.C > 0.0)) throw SchemaError("svm.C", "must be > 0");
    if (!(m.svm.tol > 0.0)) throw SchemaError("svm.tol", "must be > 0");
    if (m.svm.max_passes < 1) throw SchemaError("svm.max_passes", "must be >= 1");
    const std::string kernel = s.contains("kernel") ? get_as<std::string>(s.at("kernel"), "svm.kernel") : "linear";
    if (kernel == "linear") {
      m.svm.kernel = LinearKernel{};
    } else if (kernel == "rbf") {
      double gamma = 0.0;
      optional_field(s, "gamma", "svm", gamma);
      m.svm.kernel = RbfKernel{gamma};
    } else {
      throw SchemaError("svm.kernel", "expected \"linear\" or \"rbf\"");
    }
  }

  if (j.contains("cv")) {
    const Json& c = j.at("cv");
    require_object(c, "cv");
    int k = static_cast<int>(m.k);
    optional_field(c, "k", "cv", k);
    if (k < 2) throw SchemaError("cv.k", "must be >= 2");
    m.k = static_cast<std::size_t>(k);
  }
  return m;
}

inline StudyManifest load_manifest(const fs::path& path) {
  return parse_manifest(read_file(path), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// ---------------------------------------------------------------------------
// Annotation and labels files

// {"images": {"<id>": {"a": [x, y], "b": [x, y], "label": +1|-1}}}
inline AnnotationFile parse_annotations(std::string_view text) {
  using namespace detail;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("<document>", e.what());
  }
  const Json& images = require(j, "images", "images");
  require_object(images, "images");
  AnnotationFile out;
  for (const auto& [id, entry] : images.items()) {
    const std::string path = "images." + id;
    Annotation a{parse_refs(entry, path), std::nullopt};
    if (entry.contains("label")) a.label = parse_label(entry.at("label"), path + ".label");
    out.emplace(id, std::move(a));
  }
  return out;
}

inline Json annotations_json(const AnnotationFile& a) {
  Json images = Json::object();
  for (const auto& [id, entry] : a) {
    Json e = detail::refs_json(entry.refs);
    if (entry.label) e["label"] = *entry.label;
    images[id] = e;
  }
  return {{"images", images}};
}

// One "id<TAB>+1|-1" line per sample.
inline std::map<std::string, int> parse_labels(std::string_view text) {
  std::map<std::string, int> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("labels line " + std::to_string(lineno) + ": missing tab");
    const std::string id = line.substr(0, tab);
    const std::string v = line.substr(tab + 1);
    int label;
    if (v == "+1" || v == "1")
      label = 1;
    else if (v == "-1")
      label = -1;
    else
      throw FormatError("labels line " + std::to_string(lineno) + ": label must be +1 or -1");
    if (!out.emplace(id, label).second) throw FormatError("labels: duplicate id " + id);
  }
  return out;
}

inline std::string labels_tsv(const std::map<std::string, int>& labels) {
  std::string out;
  for (const auto& [id, y] : labels) out += id + (y > 0 ? "\t+1\n" : "\t-1\n");
  return out;
}

// ---------------------------------------------------------------------------
// Feature files

struct FeatureTable {
  Representation mode = Representation::WholeRectangle;
  std::vector<FeatureVector> vectors;
  std::vector<std::optional<int>> labels;
};

inline Json features_json(const FeatureTable& t) {
  Json samples = Json::array();
  for (std::size_t i = 0; i < t.vectors.size(); ++i) {
    Json s = {{"id", t.vectors[i].source_id}, {"values", t.vectors[i].values}};
    if (t.labels[i]) s["label"] = *t.labels[i];
    samples.push_back(std::move(s));
  }
  return {{"mode", to_string(t.mode)},
          {"dim", t.vectors.empty() ? 0 : t.vectors.front().dim()},
          {"samples", std::move(samples)}};
}

inline FeatureTable parse_features(std::string_view text) {
  using namespace detail;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("<document>", e.what());
  }
  FeatureTable t;
  const auto mode = get_as<std::string>(require(j, "mode", "mode"), "mode");
  if (mode == "whole")
    t.mode = Representation::WholeRectangle;
  else if (mode == "spots")
    t.mode = Representation::ChosenSpots;
  else
    throw SchemaError("mode", "expected \"whole\" or \"spots\"");
  const auto dim = get_as<std::size_t>(require(j, "dim", "dim"), "dim");
  const Json& samples = require(j, "samples", "samples");
  if (!samples.is_array()) throw SchemaError("samples", "expected an array");
  for (const Json& s : samples) {
    FeatureVector fv{get_as<std::vector<double>>(require(s, "values", "samples.values"), "samples.values"), t.mode,
                     get_as<std::string>(require(s, "id", "samples.id"), "samples.id")};
    if (fv.dim() != dim) throw SchemaError("samples.values", "sample " + fv.source_id + " has wrong dimension");
    t.labels.push_back(s.contains("label") ? std::optional<int>(parse_label(s.at("label"), "samples.label"))
                                           : std::nullopt);
    t.vectors.push_back(std::move(fv));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Reports

struct ModeReport {
  std::string mode;
  EvalReport report;
  std::vector<std::string> ids;  // sample ids, indexable by fold test indices
};

inline Json eval_json(const ModeReport& r) {
  const Confusion& c = r.report.confusion;
  Json folds = Json::array();
  for (const FoldResult& f : r.report.folds) {
    Json test = Json::array();
    for (std::size_t i : f.test_indices) test.push_back(i < r.ids.size() ? r.ids[i] : std::to_string(i));
    folds.push_back({{"accuracy", f.confusion.accuracy()},
                     {"confusion", {{"tp", f.confusion.tp}, {"fn", f.confusion.fn}, {"tn", f.confusion.tn},
                                    {"fp", f.confusion.fp}}},
                     {"test", test}});
  }
  return {{"accuracy", c.accuracy()},
          {"sensitivity", c.sensitivity()},
          {"specificity", c.specificity()},
          {"confusion", {{"tp", c.tp}, {"fn", c.fn}, {"tn", c.tn}, {"fp", c.fp}}},
          {"folds", folds}};
}

struct ReportText {
  std::string json;
  std::string table;
};

// JSON (sorted keys, deterministic) plus an aligned text table with one row
// per representation.
inline ReportText write_report(const std::vector<ModeReport>& reports, const std::string& study = "study",
                               std::optional<std::uint64_t> seed = std::nullopt, std::size_t k = 0) {
  Json modes = Json::object();
  for (const ModeReport& r : reports) modes[r.mode] = eval_json(r);
  Json doc = {{"study", study}, {"modes", modes}};
  if (seed) doc["seed"] = *seed;
  if (k) doc["k"] = k;
  if (!reports.empty()) doc["samples"] = reports.front().report.confusion.total();

  std::ostringstream table;
  table << "study: " << study << "\n";
  table << std::left << std::setw(8) << "mode" << std::right << std::setw(10) << "accuracy" << std::setw(13)
        << "sensitivity" << std::setw(13) << "specificity" << std::setw(6) << "TP" << std::setw(6) << "FN"
        << std::setw(6) << "TN" << std::setw(6) << "FP" << "\n";
  table << std::fixed << std::setprecision(4);
  for (const ModeReport& r : reports) {
    const Confusion& c = r.report.confusion;
    table << std::left << std::setw(8) << r.mode << std::right << std::setw(10) << c.accuracy() << std::setw(13)
          << c.sensitivity() << std::setw(13) << c.specificity() << std::setw(6) << c.tp << std::setw(6) << c.fn
          << std::setw(6) << c.tn << std::setw(6) << c.fp << "\n";
  }
  return {doc.dump(2) + "\n", table.str()};
}

// ---------------------------------------------------------------------------
// Stages

// Runs the stages of a study against its manifest. Diagnostics go to `log`.
class Study {
public:
  explicit Study(StudyManifest m, std::ostream& log = std::cerr) : m_(std::move(m)), log_(&log) {}

  const StudyManifest& manifest() const { return m_; }

  std::vector<std::string> modes() const {
    switch (m_.mode) {
      case StudyMode::Whole: return {"whole"};
      case StudyMode::Spots: return {"spots"};
      case StudyMode::Compare: return {"whole", "spots"};
    }
    return {};
  }

  // Renders the configured cohort into image_dir: <id>.pgm (dark = stain when
  // dark_is_stain), labels.tsv and annotations.json with the true references.
  void synth() {
    if (!m_.cohort) throw SchemaError("cohort", "synth needs a cohort specification in the manifest");
    CohortSpec spec = *m_.cohort;
    spec.jitter.seed = m_.seed;
    const auto cohort = make_cohort(spec);
    std::map<std::string, int> labels;
    AnnotationFile ann;
    Json truth = Json::object();
    for (const CohortSample& s : cohort) {
      const GelImage& img = m_.dark_is_stain ? inverted(s.image) : s.image;
      write_file(m_.image_dir / (s.id + ".pgm"), save_pgm(img, PgmFormat::Raw));
      labels[s.id] = s.label;
      ann.emplace(s.id, Annotation{s.refs, s.label});
      truth[s.id] = {{"sx", s.truth.sx()}, {"sy", s.truth.sy()}, {"tx", s.truth.tx()}, {"ty", s.truth.ty()}};
    }
    write_file(m_.image_dir / "labels.tsv", labels_tsv(labels));
    Json a = annotations_json(ann);
    write_file(m_.image_dir / "annotations.json", a.dump(2) + "\n");
    Json meta = {{"cohort", cohort_json(spec)},
                 {"seed", m_.seed},
                 {"template_refs", detail::refs_json(template_refs(spec))},
                 {"truth_maps", truth}};
    write_file(m_.image_dir / "cohort.json", meta.dump(2) + "\n");
    *log_ << "synth: wrote " << cohort.size() << " images to " << m_.image_dir.string() << "\n";
  }

  // Sorted ids of the *.pgm files in image_dir.
  std::vector<std::string> image_ids() const {
    if (!fs::is_directory(m_.image_dir)) throw FileError("image directory not found: " + m_.image_dir.string());
    std::vector<std::string> ids;
    for (const auto& e : fs::directory_iterator(m_.image_dir))
      if (e.is_regular_file() && e.path().extension() == ".pgm") ids.push_back(e.path().stem().string());
    std::sort(ids.begin(), ids.end());
    if (ids.empty()) throw FileError("no .pgm images in " + m_.image_dir.string());
    return ids;
  }

  GelImage load_image(const fs::path& path) const {
    if (!fs::exists(path)) throw FileError("missing image: " + path.string());
    return read_pgm(path, m_.dark_is_stain);
  }

  // Resolves two reference pixels per image (annotation first, else the two
  // strongest detected spots) and fixes the canonical frame. Writes refs.json.
  void refs() {
    const auto ids = image_ids();
    AnnotationFile ann;
    const fs::path ann_path = m_.annotations_path.value_or(m_.image_dir / "annotations.json");
    if (fs::exists(ann_path))
      ann = parse_annotations(read_file(ann_path));
    else if (m_.annotations_path)
      throw FileError("missing annotation file: " + ann_path.string());

    Json images = Json::object();
    std::map<std::string, ReferencePair> resolved;
    std::map<std::string, Extent> extents;
    for (const std::string& id : ids) {
      const GelImage img = load_image(m_.image_dir / (id + ".pgm"));
      extents.emplace(id, img.extent());
      std::string source = "annotation";
      std::optional<ReferencePair> r;
      if (auto it = ann.find(id); it != ann.end()) {
        r = it->second.refs;
      } else {
        source = "detected";
        r = with_sample(id, [&] { return detect_refs(img); });
        *log_ << "warning: no annotation for " << id << ", using detected spots (" << r->a().x << "," << r->a().y
              << ") and (" << r->b().x << "," << r->b().y << ")\n";
      }
      if (!img.contains(r->a()) || !img.contains(r->b()))
        throw SampleError(id, "reference point outside the image");
      Json e = detail::refs_json(*r);
      e["source"] = source;
      images[id] = e;
      resolved.emplace(id, *r);
    }

    ReferencePair canonical = resolved.begin()->second;
    std::string template_id = resolved.begin()->first;
    if (m_.canonical_refs) {
      canonical = *m_.canonical_refs;
      template_id.clear();
    } else if (m_.template_id) {
      auto it = resolved.find(*m_.template_id);
      if (it == resolved.end()) throw FileError("template image not found: " + *m_.template_id);
      canonical = it->second;
      template_id = *m_.template_id;
    }
    const Extent canvas =
        m_.canvas.value_or(template_id.empty() ? extents.begin()->second : extents.at(template_id));

    Json doc = {{"images", images},
                {"canonical", detail::refs_json(canonical)},
                {"canvas", Json::array({canvas.width, canvas.height})}};
    if (!template_id.empty()) doc["template"] = template_id;
    write_file(m_.output_dir / "refs.json", doc.dump(2) + "\n");
    *log_ << "refs: resolved references for " << ids.size() << " images\n";
  }

  struct ResolvedRefs {
    std::map<std::string, ReferencePair> images;
    ReferencePair canonical;
    Extent canvas;
  };

  ResolvedRefs load_refs() const {
    const fs::path path = m_.output_dir / "refs.json";
    if (!fs::exists(path)) throw FileError("missing " + path.string() + " (run the refs stage first)");
    const Json j = Json::parse(read_file(path));
    std::map<std::string, ReferencePair> images;
    for (const auto& [id, e] : j.at("images").items()) images.emplace(id, detail::parse_refs(e, "images." + id));
    return {std::move(images), detail::parse_refs(j.at("canonical"), "canonical"),
            detail::parse_extent(j.at("canvas"), "canvas")};
  }

  // Warps each image into the canonical frame and crops the ROI; writes
  // output_dir/normalized/<id>.pgm in the input polarity.
  void normalize_all() {
    const ResolvedRefs r = load_refs();
    for (const auto& [id, refs] : r.images) {
      const GelImage img = load_image(m_.image_dir / (id + ".pgm"));
      const GelImage roi =
          with_sample(id, [&] { return normalize(img, refs, r.canonical, m_.roi, m_.interp, r.canvas); });
      write_file(normalized_path(id), save_pgm(m_.dark_is_stain ? inverted(roi) : roi, PgmFormat::Raw));
    }
    *log_ << "normalize: wrote " << r.images.size() << " ROIs of " << m_.roi.width << "x" << m_.roi.height << "\n";
  }

  // Seeds are given on the canonical canvas; shift them into ROI coordinates.
  std::vector<PixelCoord> roi_seeds(const ReferencePair& canonical) const {
    const PixelCoord o = roi_origin(canonical, m_.roi);
    std::vector<PixelCoord> out;
    for (const PixelCoord& s : m_.seeds) out.push_back({s.x - o.x, s.y - o.y});
    return out;
  }

  void featurize() {
    const ResolvedRefs r = load_refs();
    const auto labels = load_labels();
    const auto seeds = roi_seeds(r.canonical);
    for (const std::string& mode : modes()) {
      FeatureTable t;
      t.mode = mode == "whole" ? Representation::WholeRectangle : Representation::ChosenSpots;
      for (const auto& [id, refs] : r.images) {
        const GelImage roi = load_image(normalized_path(id));
        t.vectors.push_back(with_sample(id, [&] {
          return t.mode == Representation::WholeRectangle ? vectorize_whole(roi, id)
                                                          : vectorize_spots(roi, seeds, m_.fraction, id);
        }));
        auto it = labels.find(id);
        t.labels.push_back(it == labels.end() ? std::nullopt : std::optional<int>(it->second));
      }
      write_file(m_.output_dir / ("features_" + mode + ".json"), features_json(t).dump() + "\n");
      *log_ << "featurize: " << mode << " vectors of dimension " << t.vectors.front().dim() << "\n";
    }
  }

  FeatureTable load_features(const std::string& mode) const {
    const fs::path path = m_.output_dir / ("features_" + mode + ".json");
    if (!fs::exists(path)) throw FileError("missing " + path.string() + " (run the featurize stage first)");
    return parse_features(read_file(path));
  }

  // Trains the final model on every labelled sample (features min-max scaled
  // over the whole set) and writes model_<mode>.txt.
  void train() {
    for (const std::string& mode : modes()) {
      const Dataset d = labelled_dataset(load_features(mode), mode);
      const MinMaxScaler scaler = MinMaxScaler::fit(d.points);
      Dataset scaled = d;
      for (auto& p : scaled.points) p = scaler.apply(p);
      const SvmModel model = train_smo(scaled, m_.svm, scaler);
      write_file(m_.output_dir / ("model_" + mode + ".txt"), serialize_model(model));
      *log_ << "train: " << mode << " model with " << model.support_vectors.size() << " support vectors\n";
    }
  }

  // Applies model_<mode>.txt to every featurized sample and writes
  // predictions_<mode>.tsv (id, decision value, predicted label).
  void predict_all() {
    for (const std::string& mode : modes()) {
      const fs::path path = m_.output_dir / ("model_" + mode + ".txt");
      if (!fs::exists(path)) throw FileError("missing " + path.string() + " (run the train stage first)");
      const SvmModel model = parse_model(read_file(path));
      const FeatureTable t = load_features(mode);
      std::string out = "id\tdecision\tpredicted\n";
      for (const FeatureVector& v : t.vectors) {
        const double f = with_sample(v.source_id, [&] { return decision_value(model, v.values); });
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", f);
        out += v.source_id + "\t" + buf + (f >= 0.0 ? "\t+1\n" : "\t-1\n");
      }
      write_file(m_.output_dir / ("predictions_" + mode + ".tsv"), out);
      *log_ << "predict: " << mode << " predictions for " << t.vectors.size() << " samples\n";
    }
  }

  // Cross-validates every configured representation and writes report.json
  // and report.txt.
  std::vector<ModeReport> eval() {
    std::vector<ModeReport> reports;
    for (const std::string& mode : modes()) {
      const FeatureTable t = load_features(mode);
      const Dataset d = labelled_dataset(t, mode);
      ModeReport r{mode, cross_validate(d, m_.k, m_.svm, m_.seed), {}};
      for (const FeatureVector& v : t.vectors) r.ids.push_back(v.source_id);
      reports.push_back(std::move(r));
    }
    const ReportText text = write_report(reports, m_.study, m_.seed, m_.k);
    write_file(m_.output_dir / "report.json", text.json);
    write_file(m_.output_dir / "report.txt", text.table);
    return reports;
  }

  std::vector<ModeReport> run_pipeline() {
    if (m_.cohort) synth();
    refs();
    normalize_all();
    featurize();
    auto reports = eval();
    train();
    predict_all();
    return reports;
  }

  fs::path normalized_path(const std::string& id) const { return m_.output_dir / "normalized" / (id + ".pgm"); }

private:
  template <class F>
  static auto with_sample(const std::string& id, F&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const SampleError&) {
      throw;
    } catch (const Error& e) {
      throw SampleError(id, e.what());
    }
  }

  // Reference pair from detected spots, ordered left to right.
  ReferencePair detect_refs(const GelImage& img) const {
    const auto spots = detect_spots(img, m_.detect.min_peak, m_.detect.min_distance, m_.fraction);
    if (spots.size() < 2) throw SpotNotFound("fewer than two spots detected for reference points");
    // The strongest spot, paired with the strongest one not sharing its row
    // or column.
    PixelCoord a = spot_center(img, spots[0].peak, m_.fraction);
    for (std::size_t k = 1; k < spots.size(); ++k) {
      PixelCoord b = spot_center(img, spots[k].peak, m_.fraction);
      if (b.x == a.x || b.y == a.y) continue;
      if (b.x < a.x) std::swap(a, b);
      return {a, b};
    }
    throw DegenerateReferences("every detected spot shares a row or column with the strongest one");
  }

  std::map<std::string, int> load_labels() const {
    std::map<std::string, int> labels;
    if (fs::exists(m_.labels_path)) labels = parse_labels(read_file(m_.labels_path));
    return labels;
  }

  Dataset labelled_dataset(const FeatureTable& t, const std::string& mode) const {
    Dataset d;
    for (std::size_t i = 0; i < t.vectors.size(); ++i) {
      if (!t.labels[i]) throw SampleError(t.vectors[i].source_id, "no label (needed for " + mode + ")");
      d.points.push_back(t.vectors[i].values);
      d.labels.push_back(*t.labels[i]);
    }
    d.validate();
    return d;
  }

  StudyManifest m_;
  std::ostream* log_;
};

}  // namespace gelvec

#endif  // GELVEC_STUDY_HPP
