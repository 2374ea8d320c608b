#include "rclevr/cli/cli.hpp"

#include <charconv>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rclevr/core/error.hpp"
#include "rclevr/dataset/dataset.hpp"
#include "rclevr/dataset/trace_io.hpp"
#include "rclevr/dsl/spec.hpp"
#include "rclevr/eval/predictors.hpp"
#include "rclevr/eval/report.hpp"
#include "rclevr/io/png.hpp"

namespace rclevr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Deletes outputs created by a failing command. Paths that already existed
/// are left alone.
class OutputGuard {
 public:
  OutputGuard() = default;
  OutputGuard(const OutputGuard&) = delete;
  OutputGuard& operator=(const OutputGuard&) = delete;
  ~OutputGuard() {
    for (auto it = paths_.rbegin(); it != paths_.rend(); ++it) {
      std::error_code ec;
      fs::remove_all(*it, ec);
    }
  }

  void track(const fs::path& p) {
    if (!fs::exists(p)) paths_.push_back(p);
  }
  void commit() { paths_.clear(); }

 private:
  std::vector<fs::path> paths_;
};

double parse_number(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError("invalid number '" + std::string(text) + "' for " + std::string(what));
  }
  return v;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

scene::SceneConfig load_scene_config(const fs::path& path) {
  scene::SceneConfig c;
  if (path.empty()) return c;
  const auto bytes = io::read_file(path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "width") c.width = value.get<int>();
      else if (key == "height") c.height = value.get<int>();
      else if (key == "min_objects") c.min_objects = value.get<int>();
      else if (key == "max_objects") c.max_objects = value.get<int>();
      else if (key == "min_size") c.min_size = value.get<double>();
      else if (key == "max_size") c.max_size = value.get<double>();
      else if (key == "allow_occlusion") c.allow_occlusion = value.get<bool>();
      else if (key == "distinct_colors") c.distinct_colors = value.get<bool>();
      else if (key == "palette") c.palette = value.get<std::vector<scene::Rgb>>();
      else if (key == "background") c.background = value.get<scene::Rgb>();
      else if (key == "shapes") {
        c.shapes.clear();
        for (const auto& s : value) c.shapes.push_back(scene::shape_from_name(s.get<std::string>()));
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("bad config value: " + std::string(e.what()));
  }
  c.validate();
  return c;
}

std::int64_t count_scene_dirs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw SceneSourceError("scene directory '" + dir.string() + "' does not exist");
  std::int64_t n = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    std::int64_t id = 0;
    const auto res = std::from_chars(name.data(), name.data() + name.size(), id);
    if (res.ec == std::errc() && res.ptr == name.data() + name.size()) ++n;
  }
  return n;
}

/// "0.01" applies to every node; "blur=0.02,noise=0.01" names nodes.
std::map<std::string, double> parse_p_corr(const std::string& text, const std::vector<std::string>& nodes) {
  std::map<std::string, double> out;
  if (text.find('=') == std::string::npos) {
    const double p = parse_number(text, "--p-corr");
    for (const auto& n : nodes) out[n] = p;
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--p-corr entries must look like node=p");
    out[item.substr(0, eq)] = parse_number(item.substr(eq + 1), "--p-corr");
  }
  return out;
}

/// "node.param=0.5" (hard) or "node.param~uniform(0, 0.1)" (soft).
scm::Intervention parse_do(const std::string& text) {
  const auto sep = text.find_first_of("=~");
  const auto dot = text.find('.');
  if (sep == std::string::npos || dot == std::string::npos || dot > sep) {
    throw UsageError("--do expects node.param=value or node.param~dist, got '" + text + "'");
  }
  scm::Intervention iv;
  iv.node = text.substr(0, dot);
  iv.param = text.substr(dot + 1, sep - dot - 1);
  const std::string rhs = text.substr(sep + 1);
  if (text[sep] == '=') {
    iv.kind = scm::HardIntervention{parse_number(rhs, "--do")};
  } else {
    iv.kind = scm::SoftIntervention{dsl::parse_distribution(rhs)};
  }
  return iv;
}

std::string estimate_text(const std::optional<eval::Estimate>& e, int digits) {
  if (!e) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << e->mean << " +- " << e->half_width;
  return os.str();
}

// Subcommand bodies -------------------------------------------------------

struct ValidateArgs {
  std::string scm;
  bool canonical = false;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const auto doc = dsl::load_spec(a.scm);
  const auto diags = dsl::validate_spec(doc);
  out << "nodes: " << doc.graph.order().size() << "\n";
  out << "edges: " << doc.graph.edges().size() << "\n";
  out << "order: " << join(doc.graph.order(), " ") << "\n";
  bool failed = false;
  for (const auto& d : diags) {
    (d.level == dsl::DiagnosticLevel::Error ? err : out) << dsl::format_diagnostic(d) << "\n";
    failed = failed || d.level == dsl::DiagnosticLevel::Error;
  }
  if (a.canonical) out << dsl::serialize_spec(doc.graph);
  return failed ? kExitDomain : kExitOk;
}

struct SampleArgs {
  std::string scm;
  std::int64_t n = 1;
  std::int64_t start = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> interventions;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  auto doc = dsl::load_spec(a.scm);
  scm::CausalGraph graph = doc.graph;
  for (const auto& text : a.interventions) graph = scm::apply_intervention(graph, parse_do(text));
  out << "seed: " << a.seed << "\n";
  OutputGuard guard;
  guard.track(a.out);
  std::string text;
  for (std::int64_t i = 0; i < a.n; ++i) {
    text += dataset::trace_to_json(scm::sample_trace(graph, a.start + i, a.seed)).dump() + "\n";
  }
  io::write_text(a.out, text);
  guard.commit();
  out << "wrote " << a.n << " traces to " << a.out << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  int workers = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const auto config = load_scene_config(a.config);
  out << "seed: " << a.seed << "\n";
  OutputGuard guard;
  guard.track(a.out);
  dataset::write_scene_directory(config, a.n, a.seed, a.out, a.workers > 0 ? a.workers : dataset::default_workers());
  guard.commit();
  out << "wrote " << a.n << " scenes to " << a.out << "\n";
  return kExitOk;
}

struct CorruptArgs {
  std::string scm;
  std::string scenes;
  std::string config;
  std::int64_t n = -1;
  std::string regime = "ood_iid";
  std::string p_corr;
  std::optional<std::uint64_t> listing_seed;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;
};

int cmd_corrupt(const CorruptArgs& a, std::ostream& out, std::ostream& err) {
  const auto doc = dsl::load_spec(a.scm);
  for (const auto& d : dsl::validate_spec(doc)) {
    if (d.level == dsl::DiagnosticLevel::Error) throw ConfigError("spec has errors: " + dsl::format_diagnostic(d));
    err << dsl::format_diagnostic(d) << "\n";
  }
  dataset::RegimeConfig regime;
  regime.regime = dataset::regime_from_name(a.regime);
  if (regime.regime == dataset::Regime::LongTail) {
    regime.p_corr = parse_p_corr(a.p_corr.empty() ? "0.01" : a.p_corr, doc.graph.order());
    regime.listing_seed = a.listing_seed.value_or(a.seed);
  } else if (!a.p_corr.empty()) {
    throw UsageError("--p-corr applies to the longtail regime only");
  }

  dataset::SceneSource source;
  std::int64_t n = a.n;
  if (a.scenes.empty()) {
    if (n < 0) throw UsageError("either --scenes or --n is required");
    source = dataset::SynthSource{load_scene_config(a.config)};
  } else {
    if (!a.config.empty()) throw UsageError("--config applies to synthesized scenes only");
    source = dataset::DirectorySource{a.scenes};
    if (n < 0) n = count_scene_dirs(a.scenes);
  }

  out << "seed: " << a.seed << "\n";
  const fs::path root(a.out);
  OutputGuard guard;
  guard.track(root);
  for (const char* child : {"scenes", "spec.scm.txt", "manifest.json", "train_listing.csv"}) guard.track(root / child);
  const auto m = dataset::generate_dataset(doc, source, n, a.seed, regime, root,
                                           a.workers > 0 ? a.workers : dataset::default_workers());
  guard.commit();
  std::size_t renders = 0;
  for (const auto& s : m.scenes) renders += s.corrupt.size();
  out << "regime: " << a.regime << "\n";
  out << "scenes: " << m.scenes.size() << ", corrupted images: " << renders << "\n";
  out << "wrote " << (root / "manifest.json").string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string dataset;
  std::vector<std::string> pred;
  std::uint64_t seed = 0;
  std::string out;
  int n_boot = 1000;
  int bins = 10;
  std::string mse_scale = "8bit";
  int workers = 0;
};

std::pair<fs::path, fs::path> report_paths(const fs::path& out) {
  if (out.extension() == ".json") return {out, fs::path(out).replace_extension(".csv")};
  return {fs::path(out.string() + ".json"), fs::path(out.string() + ".csv")};
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  eval::EvalOptions opt;
  opt.seed = a.seed;
  opt.n_boot = a.n_boot;
  opt.n_bins = a.bins;
  opt.mse_scale = a.mse_scale == "unit" ? eval::MseScale::Unit : eval::MseScale::EightBit;
  opt.workers = a.workers > 0 ? a.workers : dataset::default_workers();
  std::vector<fs::path> preds(a.pred.begin(), a.pred.end());
  out << "seed: " << a.seed << "\n";
  const auto report = eval::evaluate(a.dataset, preds, opt);

  const auto [json_path, csv_path] = report_paths(a.out);
  OutputGuard guard;
  guard.track(json_path);
  guard.track(csv_path);
  io::write_file_atomic(json_path, eval::report_to_json(report).dump(2) + "\n");
  io::write_file_atomic(csv_path, eval::records_csv(report));
  guard.commit();

  if (report.prediction_sets.size() > 1) {
    out << "selected prediction set: " << report.prediction_sets[report.selected].label << "\n";
  }
  out << std::left << std::setw(12) << "variant" << std::setw(22) << "mIoU" << std::setw(24) << "MSE" << "n\n";
  for (const auto& v : report.variants) {
    const std::size_t n = v.miou ? v.miou->n : (v.mse ? v.mse->n : 0);
    out << std::left << std::setw(12) << v.variant << std::setw(22) << estimate_text(v.miou, 4) << std::setw(24)
        << estimate_text(v.mse, 3) << n << "\n";
  }
  for (const auto& d : report.diagnostics) err << "note: " << d << "\n";
  out << "wrote " << json_path.string() << " and " << csv_path.string() << "\n";
  return kExitOk;
}

struct CurvesArgs {
  std::string report;
  int bins = 10;
  std::string out;
};

int cmd_curves(const CurvesArgs& a, std::ostream& out) {
  const auto report = eval::load_report(a.report);
  const fs::path csv(a.out + ".csv");
  const fs::path svg(a.out + ".svg");
  OutputGuard guard;
  guard.track(csv);
  guard.track(svg);
  io::write_file_atomic(csv, eval::curves_csv(report, a.bins));
  io::write_file_atomic(svg, eval::curves_svg(report, a.bins));
  guard.commit();
  out << "wrote " << csv.string() << " and " << svg.string() << "\n";
  return kExitOk;
}

struct PredictArgs {
  std::string dataset;
  std::string kind = "threshold";
  std::string out;
  double tolerance = eval::ThresholdSegmenter{}.tolerance;
  int min_component = eval::ThresholdSegmenter{}.min_component;
  int workers = 0;
};

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  eval::ThresholdSegmenter seg;
  seg.tolerance = a.tolerance;
  seg.min_component = a.min_component;
  const auto kind = a.kind == "oracle" ? eval::ReferencePredictor::Oracle : eval::ReferencePredictor::Threshold;
  OutputGuard guard;
  guard.track(a.out);
  guard.track(fs::path(a.out) / "scenes");
  eval::write_predictions(a.dataset, a.out, kind, seg, a.workers > 0 ? a.workers : dataset::default_workers());
  guard.commit();
  out << "wrote " << a.kind << " predictions to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Causal corruption datasets for multi-object scenes: sample, render, and evaluate."};
  app.name("rclevr");
  app.require_subcommand(1);
  const char* workers_help = "worker threads (default: RCLEVR_WORKERS or hardware concurrency)";

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Parse and check a causal-model spec; prints the sampling order");
  validate->add_option("--scm", va.scm, "spec file (.scm.txt)")->required();
  validate->add_flag("--canonical", va.canonical, "also print the canonical form of the spec file");

  SampleArgs sa;
  auto* sample = app.add_subcommand("sample", "Sample parameter traces as JSON lines");
  sample->add_option("--scm", sa.scm, "spec file")->required();
  sample->add_option("--n", sa.n, "number of traces")->check(CLI::NonNegativeNumber)->capture_default_str();
  sample->add_option("--start", sa.start, "first scene id")->capture_default_str();
  sample->add_option("--seed", sa.seed, "global seed")->capture_default_str();
  sample->add_option("--out", sa.out, "output .jsonl path")->required();
  sample->add_option("--do", sa.interventions, "intervention node.param=value or node.param~dist (repeatable)");

  SynthArgs ya;
  auto* synth = app.add_subcommand("synth", "Render synthetic scenes (clean.png, masks.png, meta.json per scene)");
  synth->add_option("--n", ya.n, "number of scenes")->required()->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", ya.seed, "global seed")->capture_default_str();
  synth->add_option("--config", ya.config, "scene config JSON (default: built-in config)");
  synth->add_option("--out", ya.out, "output directory")->required();
  synth->add_option("--workers", ya.workers, workers_help);

  CorruptArgs ca;
  auto* corrupt = app.add_subcommand("corrupt", "Sample corruption parameters and render a dataset");
  corrupt->add_option("--scm", ca.scm, "spec file")->required();
  corrupt->add_option("--scenes", ca.scenes, "scene directory from `synth` (omit to synthesize with --n)");
  corrupt->add_option("--config", ca.config, "scene config JSON when synthesizing");
  corrupt->add_option("--n", ca.n, "number of scenes (default: all scenes in --scenes)")
      ->check(CLI::NonNegativeNumber);
  corrupt->add_option("--regime", ca.regime, "ood_iid, ood_chain or longtail")
      ->check(CLI::IsMember({"ood_iid", "ood_chain", "longtail"}))
      ->capture_default_str();
  corrupt->add_option("--p-corr", ca.p_corr, "longtail probabilities: one value for all nodes, or node=p,... (default 0.01)");
  corrupt->add_option("--listing-seed", ca.listing_seed, "seed of the longtail listing (default: --seed)");
  corrupt->add_option("--seed", ca.seed, "global seed")->capture_default_str();
  corrupt->add_option("--out", ca.out, "output dataset directory")->required();
  corrupt->add_option("--workers", ca.workers, workers_help);

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Score prediction sets against a dataset");
  evalc->add_option("--dataset", ea.dataset, "dataset directory from `corrupt`")->required();
  evalc->add_option("--pred", ea.pred, "prediction directory (repeatable; best clean mIoU is reported)")->required();
  evalc->add_option("--seed", ea.seed, "bootstrap seed")->capture_default_str();
  evalc->add_option("--out", ea.out, "report path; writes <out>.json and <out>.csv")->required();
  evalc->add_option("--n-boot", ea.n_boot, "bootstrap resamples")->check(CLI::PositiveNumber)->capture_default_str();
  evalc->add_option("--bins", ea.bins, "severity bins")->check(CLI::PositiveNumber)->capture_default_str();
  evalc->add_option("--mse-scale", ea.mse_scale, "8bit (values x 255) or unit")
      ->check(CLI::IsMember({"8bit", "unit"}))
      ->capture_default_str();
  evalc->add_option("--workers", ea.workers, workers_help);

  CurvesArgs cu;
  auto* curves = app.add_subcommand("curves", "Severity curves from a report: <out>.csv and <out>.svg");
  curves->add_option("--report", cu.report, "report JSON from `eval`")->required();
  curves->add_option("--bins", cu.bins, "severity bins")->check(CLI::PositiveNumber)->capture_default_str();
  curves->add_option("--out", cu.out, "output prefix")->required();

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Write reference predictions (oracle or color-threshold)");
  predict->add_option("--dataset", pa.dataset, "dataset directory")->required();
  predict->add_option("--kind", pa.kind, "oracle or threshold")
      ->check(CLI::IsMember({"oracle", "threshold"}))
      ->capture_default_str();
  predict->add_option("--out", pa.out, "output prediction directory")->required();
  predict->add_option("--tolerance", pa.tolerance, "threshold: RGB distance to a palette color")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  predict->add_option("--min-component", pa.min_component, "threshold: smallest kept component, px")
      ->capture_default_str();
  predict->add_option("--workers", pa.workers, workers_help);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(va, out, err);
    if (*sample) return cmd_sample(sa, out);
    if (*synth) return cmd_synth(ya, out);
    if (*corrupt) return cmd_corrupt(ca, out, err);
    if (*evalc) return cmd_eval(ea, out, err);
    if (*curves) return cmd_curves(cu, out);
    if (*predict) return cmd_predict(pa, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace rclevr::cli
