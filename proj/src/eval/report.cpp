#include "rclevr/eval/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "rclevr/core/error.hpp"
#include "rclevr/core/parallel.hpp"
#include "rclevr/core/random.hpp"
#include "rclevr/dataset/dataset.hpp"
#include "rclevr/dataset/trace_io.hpp"
#include "rclevr/io/png.hpp"
#include "rclevr/ops/operators.hpp"
#include "rclevr/ops/severity.hpp"

namespace rclevr::eval {
namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view scale_name(MseScale s) { return s == MseScale::EightBit ? "8bit" : "unit"; }

MseScale scale_from(std::string_view s) {
  if (s == "8bit") return MseScale::EightBit;
  if (s == "unit") return MseScale::Unit;
  throw SpecError("unknown mse_scale '" + std::string(s) + "'");
}

/// Normalized severity of every (scene index, node), each node normalized
/// over the whole dataset.
std::vector<std::map<std::string, double>> dataset_severities(const fs::path& dir, const dataset::DatasetManifest& m) {
  std::vector<scm::SampledTrace> traces;
  traces.reserve(m.scenes.size());
  for (const auto& s : m.scenes) {
    const auto bytes = io::read_file(dir / s.trace.path);
    json doc;
    try {
      doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
      throw SpecError("trace " + s.trace.path + " is not valid JSON: " + e.what());
    }
    traces.push_back(dataset::trace_from_json(doc));
  }
  std::vector<std::map<std::string, double>> out(m.scenes.size());
  for (const auto& info : m.nodes) {
    const auto found = ops::operator_from_name(info.op);
    if (!found) throw SpecError("manifest names unknown operator '" + info.op + "'");
    const auto op = *found;
    std::vector<ops::OperatorParams> params;
    params.reserve(traces.size());
    for (const auto& t : traces) {
      const auto it = t.values.find(info.name);
      if (it == t.values.end()) throw SpecError("trace of scene " + std::to_string(t.scene_id) + " lacks " + info.name);
      params.push_back(ops::make_params(op, it->second));
    }
    const auto ranges = ops::observed_ranges(op, params);
    for (std::size_t i = 0; i < params.size(); ++i) {
      out[i][info.name] = ops::severity_normalize(op, params[i], ranges).normalized;
    }
  }
  return out;
}

struct SceneScores {
  std::vector<ScoreRecord> records;
  std::vector<std::string> diagnostics;
  std::size_t missing = 0;
};

struct SetScores {
  std::vector<ScoreRecord> records;
  std::vector<std::string> diagnostics;
};

SetScores score_set(const fs::path& dir, const dataset::DatasetManifest& m,
                    const std::vector<std::map<std::string, double>>& severity, const fs::path& pred,
                    const EvalOptions& opt) {
  if (!fs::is_directory(pred)) throw IoError("prediction directory '" + pred.string() + "' does not exist");
  std::vector<std::string> variants{"clean"};
  variants.insert(variants.end(), m.node_order.begin(), m.node_order.end());

  std::vector<SceneScores> per_scene(m.scenes.size());
  parallel_for(static_cast<std::int64_t>(m.scenes.size()), opt.workers, [&](std::int64_t index) {
    const auto i = static_cast<std::size_t>(index);
    const auto& s = m.scenes[i];
    auto& out = per_scene[i];
    const scene::MaskMap gt = io::read_mask_png(dir / s.mask.path);
    const ops::Image clean = io::read_png(dir / s.clean.path);
    const bool has_objects = gt.object_count() > 0;
    if (!has_objects) out.diagnostics.push_back("scene " + std::to_string(s.scene_id) + " has no ground-truth objects; mIoU skipped");
    const fs::path base = pred / "scenes" / std::to_string(s.scene_id);
    for (const auto& v : variants) {
      const fs::path masks = base / v / "pred_masks.png";
      const fs::path recon = base / v / "recon.png";
      const bool has_masks = fs::exists(masks);
      const bool has_recon = fs::exists(recon);
      if (!has_masks && !has_recon) {
        ++out.missing;
        continue;
      }
      ScoreRecord r;
      r.scene_id = s.scene_id;
      r.variant = v;
      r.severity = v == "clean" ? 0.0 : severity[i].at(v);
      try {
        if (has_masks && has_objects) r.miou = mean_iou(io::read_mask_png(masks), gt);
        if (has_recon) r.mse = mse(io::read_png(recon), clean, opt.mse_scale);
      } catch (const ShapeMismatch& e) {
        throw ShapeMismatch("scene " + std::to_string(s.scene_id) + " " + v + ": " + e.what());
      }
      out.records.push_back(std::move(r));
    }
  });

  SetScores set;
  std::size_t missing = 0;
  for (auto& s : per_scene) {
    std::move(s.records.begin(), s.records.end(), std::back_inserter(set.records));
    std::move(s.diagnostics.begin(), s.diagnostics.end(), std::back_inserter(set.diagnostics));
    missing += s.missing;
  }
  if (missing > 0) set.diagnostics.push_back(std::to_string(missing) + " (scene, variant) pairs have no prediction");
  return set;
}

std::optional<double> clean_miou(const std::vector<ScoreRecord>& records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.variant == "clean" && r.miou) {
      sum += *r.miou;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::vector<CurveBin> curve_of(const EvalReport& report, const std::string& variant, bool use_miou, int n_bins) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : report.records) {
    if (r.variant != variant) continue;
    const auto& v = use_miou ? r.miou : r.mse;
    if (v) pts.emplace_back(r.severity, *v);
  }
  return severity_curve(pts, n_bins);
}

json estimate_json(const std::optional<Estimate>& e) {
  if (!e) return nullptr;
  return {{"mean", e->mean}, {"half_width", e->half_width}, {"n", e->n}};
}

std::optional<Estimate> estimate_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Estimate{j.at("mean").get<double>(), j.at("half_width").get<double>(), j.at("n").get<std::size_t>()};
}

json curve_json(const std::vector<CurveBin>& bins) {
  json out = json::array();
  for (const auto& b : bins) {
    out.push_back({{"lo", b.lo},
                   {"hi", b.hi},
                   {"center", b.center},
                   {"count", b.count},
                   {"mean", b.mean ? json(*b.mean) : json(nullptr)}});
  }
  return out;
}

std::vector<CurveBin> curve_from(const json& j) {
  std::vector<CurveBin> out;
  for (const auto& b : j) {
    CurveBin c;
    c.lo = b.at("lo").get<double>();
    c.hi = b.at("hi").get<double>();
    c.center = b.at("center").get<double>();
    c.count = b.at("count").get<std::size_t>();
    if (!b.at("mean").is_null()) c.mean = b.at("mean").get<double>();
    out.push_back(c);
  }
  return out;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

std::vector<VariantSummary> rebin(const EvalReport& report, int n_bins) {
  std::vector<VariantSummary> out;
  for (const auto& v : report.variants) {
    if (v.variant == "clean") continue;
    VariantSummary s = v;
    s.miou_curve = curve_of(report, v.variant, true, n_bins);
    s.mse_curve = curve_of(report, v.variant, false, n_bins);
    out.push_back(std::move(s));
  }
  return out;
}

EvalReport evaluate(const fs::path& dataset_dir, std::span<const fs::path> prediction_dirs, const EvalOptions& opt) {
  if (prediction_dirs.empty()) throw ConfigError("at least one prediction set is required");
  if (opt.n_boot < 1) throw ConfigError("n_boot must be positive");
  if (opt.n_bins < 1) throw ConfigError("bin count must be positive");
  const auto m = dataset::load_manifest(dataset_dir);
  const auto severity = dataset_severities(dataset_dir, m);

  EvalReport report;
  report.spec_fingerprint = m.spec_fingerprint;
  report.scene_count = m.scene_count;
  report.node_order = m.node_order;
  report.seed = opt.seed;
  report.n_boot = opt.n_boot;
  report.n_bins = opt.n_bins;
  report.mse_scale = opt.mse_scale;

  std::vector<SetScores> sets;
  for (const auto& p : prediction_dirs) {
    sets.push_back(score_set(dataset_dir, m, severity, p, opt));
    const fs::path label = p.filename().empty() ? p.parent_path().filename() : p.filename();
    report.prediction_sets.push_back({label.string(), clean_miou(sets.back().records), sets.back().records.size()});
  }
  for (std::size_t i = 1; i < sets.size(); ++i) {
    const auto& best = report.prediction_sets[report.selected].clean_miou;
    const auto& cur = report.prediction_sets[i].clean_miou;
    if (cur && (!best || *cur > *best)) report.selected = i;
  }
  report.records = std::move(sets[report.selected].records);
  report.diagnostics = std::move(sets[report.selected].diagnostics);

  std::vector<std::pair<std::string, std::string>> variants{{"clean", "clean"}};
  for (const auto& n : m.nodes) variants.emplace_back(n.name, n.op);
  for (const auto& [name, op] : variants) {
    VariantSummary s;
    s.variant = name;
    s.op = op;
    std::vector<double> miou, err;
    for (const auto& r : report.records) {
      if (r.variant != name) continue;
      if (r.miou) miou.push_back(*r.miou);
      if (r.mse) err.push_back(*r.mse);
    }
    std::vector<std::string> warnings;
    if (!miou.empty()) s.miou = bootstrap_ci(miou, opt.n_boot, derive_seed({opt.seed, hash_name(name), hash_name("miou")}), &warnings);
    if (!err.empty()) s.mse = bootstrap_ci(err, opt.n_boot, derive_seed({opt.seed, hash_name(name), hash_name("mse")}), &warnings);
    for (const auto& w : warnings) report.diagnostics.push_back(name + ": " + w);
    report.variants.push_back(std::move(s));
  }
  const auto binned = rebin(report, opt.n_bins);
  for (auto& v : report.variants) {
    for (const auto& b : binned) {
      if (b.variant == v.variant) {
        v.miou_curve = b.miou_curve;
        v.mse_curve = b.mse_curve;
      }
    }
  }
  return report;
}

json report_to_json(const EvalReport& r) {
  json sets = json::array();
  for (const auto& s : r.prediction_sets) {
    sets.push_back({{"label", s.label}, {"clean_miou", opt_json(s.clean_miou)}, {"records", s.records}});
  }
  json variants = json::array();
  for (const auto& v : r.variants) {
    variants.push_back({{"variant", v.variant},
                        {"op", v.op},
                        {"miou", estimate_json(v.miou)},
                        {"mse", estimate_json(v.mse)},
                        {"miou_curve", curve_json(v.miou_curve)},
                        {"mse_curve", curve_json(v.mse_curve)}});
  }
  json records = json::array();
  for (const auto& rec : r.records) {
    records.push_back({{"scene_id", rec.scene_id},
                       {"variant", rec.variant},
                       {"severity", rec.severity},
                       {"miou", opt_json(rec.miou)},
                       {"mse", opt_json(rec.mse)}});
  }
  return {{"format", kReportFormat},
          {"spec_fingerprint", r.spec_fingerprint},
          {"scene_count", r.scene_count},
          {"node_order", r.node_order},
          {"seed", r.seed},
          {"n_boot", r.n_boot},
          {"n_bins", r.n_bins},
          {"mse_scale", scale_name(r.mse_scale)},
          {"prediction_sets", sets},
          {"selected", r.selected},
          {"variants", variants},
          {"records", records},
          {"diagnostics", r.diagnostics}};
}

EvalReport report_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kReportFormat) throw SpecError("unsupported report format");
    EvalReport r;
    r.spec_fingerprint = doc.at("spec_fingerprint").get<std::string>();
    r.scene_count = doc.at("scene_count").get<std::int64_t>();
    r.node_order = doc.at("node_order").get<std::vector<std::string>>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.n_boot = doc.at("n_boot").get<int>();
    r.n_bins = doc.at("n_bins").get<int>();
    r.mse_scale = scale_from(doc.at("mse_scale").get<std::string>());
    for (const auto& s : doc.at("prediction_sets")) {
      r.prediction_sets.push_back(
          {s.at("label").get<std::string>(), opt_from(s.at("clean_miou")), s.at("records").get<std::size_t>()});
    }
    r.selected = doc.at("selected").get<std::size_t>();
    for (const auto& v : doc.at("variants")) {
      VariantSummary s;
      s.variant = v.at("variant").get<std::string>();
      s.op = v.at("op").get<std::string>();
      s.miou = estimate_from(v.at("miou"));
      s.mse = estimate_from(v.at("mse"));
      s.miou_curve = curve_from(v.at("miou_curve"));
      s.mse_curve = curve_from(v.at("mse_curve"));
      r.variants.push_back(std::move(s));
    }
    for (const auto& rec : doc.at("records")) {
      r.records.push_back({rec.at("scene_id").get<std::int64_t>(), rec.at("variant").get<std::string>(),
                           rec.at("severity").get<double>(), opt_from(rec.at("miou")), opt_from(rec.at("mse"))});
    }
    r.diagnostics = doc.at("diagnostics").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed report: ") + e.what());
  }
}

EvalReport load_report(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("report '" + path.string() + "' does not exist");
  const auto bytes = io::read_file(path);
  try {
    return report_from_json(json::parse(bytes.begin(), bytes.end()));
  } catch (const json::parse_error& e) {
    throw SpecError("report is not valid JSON: " + std::string(e.what()));
  }
}

std::string records_csv(const EvalReport& r) {
  std::string out = "scene_id,variant,severity,miou,mse\n";
  for (const auto& rec : r.records) {
    out += std::to_string(rec.scene_id) + "," + rec.variant + "," + num(rec.severity) + "," +
           (rec.miou ? num(*rec.miou) : "") + "," + (rec.mse ? num(*rec.mse) : "") + "\n";
  }
  return out;
}

std::string curves_csv(const EvalReport& r, int n_bins) {
  std::string out = "corruption,op,bin,lo,hi,center,count,mean_miou,mse_count,mean_mse\n";
  for (const auto& v : rebin(r, n_bins)) {
    for (std::size_t b = 0; b < v.miou_curve.size(); ++b) {
      const auto& mi = v.miou_curve[b];
      const auto& ms = v.mse_curve[b];
      out += v.variant + "," + v.op + "," + std::to_string(b) + "," + num(mi.lo) + "," + num(mi.hi) + "," +
             num(mi.center) + "," + std::to_string(mi.count) + "," + (mi.mean ? num(*mi.mean) : "") + "," +
             std::to_string(ms.count) + "," + (ms.mean ? num(*ms.mean) : "") + "\n";
    }
  }
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

void panel(std::ostringstream& svg, const std::vector<VariantSummary>& series, bool use_miou, double x0, double y0,
           double w, double h) {
  double ymax = 1.0;
  if (!use_miou) {
    ymax = 0.0;
    for (const auto& s : series) {
      for (const auto& b : s.mse_curve) {
        if (b.mean) ymax = std::max(ymax, *b.mean);
      }
    }
    ymax = ymax > 0.0 ? ymax * 1.05 : 1.0;
  }
  const auto px = [&](double x) { return x0 + x * w; };
  const auto py = [&](double y) { return y0 + h - (y / ymax) * h; };
  svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect x=\"" << fixed(x0) << "\" y=\"" << fixed(y0) << "\" width=\"" << fixed(w) << "\" height=\"" << fixed(h)
      << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = t / 4.0;
    svg << "<text x=\"" << fixed(px(fx)) << "\" y=\"" << fixed(y0 + h + 14) << "\" text-anchor=\"middle\">"
        << fixed(fx) << "</text>\n";
    const double fy = ymax * t / 4.0;
    svg << "<text x=\"" << fixed(x0 - 4) << "\" y=\"" << fixed(py(fy) + 4) << "\" text-anchor=\"end\">"
        << fixed(fy, use_miou ? 2 : 1) << "</text>\n";
    svg << "<line x1=\"" << fixed(x0) << "\" y1=\"" << fixed(py(fy)) << "\" x2=\"" << fixed(x0 + w) << "\" y2=\""
        << fixed(py(fy)) << "\" stroke=\"#ddd\"/>\n";
  }
  svg << "<text x=\"" << fixed(x0 + w / 2) << "\" y=\"" << fixed(y0 + h + 30)
      << "\" text-anchor=\"middle\">normalized severity</text>\n";
  svg << "<text x=\"" << fixed(x0 + w / 2) << "\" y=\"" << fixed(y0 - 8) << "\" text-anchor=\"middle\">"
      << (use_miou ? "mIoU" : "MSE") << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& bins = use_miou ? series[i].miou_curve : series[i].mse_curve;
    std::string d;
    bool pen_down = false;
    for (const auto& b : bins) {
      if (!b.mean) {
        pen_down = false;
        continue;
      }
      d += (pen_down ? " L " : (d.empty() ? "M " : " M ")) + fixed(px(b.center)) + " " + fixed(py(*b.mean));
      pen_down = true;
    }
    if (d.empty()) continue;
    svg << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << kColors[i % std::size(kColors)]
        << "\" stroke-width=\"1.5\"/>\n";
  }
  svg << "</g>\n";
}

}  // namespace

std::string curves_svg(const EvalReport& r, int n_bins) {
  const auto series = rebin(r, n_bins);
  constexpr double kPanelW = 320, kPanelH = 240, kLeft = 50, kTop = 30, kGap = 70, kLegendW = 140;
  const double width = kLeft + 2 * kPanelW + kGap + kLegendW;
  const double height = kTop + kPanelH + 50;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0) << "\" height=\"" << fixed(height, 0)
      << "\" viewBox=\"0 0 " << fixed(width, 0) << " " << fixed(height, 0) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n";
  panel(svg, series, true, kLeft, kTop, kPanelW, kPanelH);
  panel(svg, series, false, kLeft + kPanelW + kGap, kTop, kPanelW, kPanelH);
  const double lx = kLeft + 2 * kPanelW + kGap + 20;
  svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = kTop + 10 + 16.0 * static_cast<double>(i);
    svg << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(lx + 18) << "\" y2=\""
        << fixed(ly) << "\" stroke=\"" << kColors[i % std::size(kColors)] << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fixed(lx + 24) << "\" y=\"" << fixed(ly + 4) << "\">" << xml_escape(series[i].variant)
        << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace rclevr::eval
