// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// if any criterion fails.

#include <chrono>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "rclevr/cli/cli.hpp"
#include "rclevr/core/error.hpp"
#include "rclevr/dataset/dataset.hpp"
#include "rclevr/eval/metrics.hpp"
#include "rclevr/eval/predictors.hpp"
#include "rclevr/eval/report.hpp"
#include "rclevr/io/png.hpp"
#include "rclevr/ops/operators.hpp"
#include "rclevr/ops/severity.hpp"

using namespace rclevr;
namespace fs = std::filesystem;

namespace {

// Collects failed checks and notes for one criterion.
struct Outcome {
  std::vector<std::string> failures;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

dsl::SpecDocument spec(const std::string& name) { return dsl::load_spec(std::string(RCLEVR_SPEC_DIR) + "/" + name); }

int workers() { return dataset::default_workers(); }

const fs::path& work_root() {
  static const fs::path root = oracle::temp_dir("acceptance");
  return root;
}

std::map<std::string, io::Bytes> all_files(const fs::path& root) {
  std::map<std::string, io::Bytes> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = io::read_file(e.path());
  }
  return out;
}

std::vector<std::int32_t> nonzero_labels(const scene::MaskMap& m) {
  std::set<std::int32_t> s(m.labels.begin(), m.labels.end());
  s.erase(0);
  return {s.begin(), s.end()};
}

// 1 -------------------------------------------------------------------------
void severity_axiom(Outcome& o) {
  double worst_rise = -1e9;
  for (const auto& op : ops::corruption_operators()) {
    const auto ladder = ops::severity_ladder(op.id, 10);
    o.require(ladder.size() == 10, std::string(op.name) + ": ladder has " + std::to_string(ladder.size()) + " steps");
    for (int s = 0; s < 20; ++s) {
      const auto img = scene::generate_scene({}, s, 1001).image;
      const auto identity = ops::apply(op.id, img, ops::OperatorParams::identity(op.id), 7);
      o.require(identity == img, std::string(op.name) + ": identity changed scene " + std::to_string(s));
      double prev = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ladder.size(); ++i) {
        const double p = ops::psnr(img, ops::apply(op.id, img, ladder[i], 7));
        if (std::isfinite(prev)) worst_rise = std::max(worst_rise, p - prev);
        o.require(p <= prev + 0.1, std::string(op.name) + " scene " + std::to_string(s) + " step " + std::to_string(i) +
                                       ": PSNR rose " + fmt(prev) + " -> " + fmt(p));
        prev = p;
      }
    }
  }
  o.note("8 operators x 20 scenes x 10 steps; largest PSNR rise between steps " + fmt(worst_rise) + " dB (slack 0.1)");
}

// 2 -------------------------------------------------------------------------
void chain_equations(Outcome& o) {
  for (const char* name : {"chain_halfnormal.scm.txt", "chain_uniform.scm.txt"}) {
    const auto doc = spec(name);
    const int n = 100000;
    int factor_zero = 0, sigma_bad = 0, gamma_bad = 0, noise_bad = 0;
    for (int id = 0; id < n; ++id) {
      const auto t = scm::sample_trace(doc.graph, id, 2024);
      const auto& v = t.values;
      const double factor = v.at("clouds").at("factor");
      const double sigma = v.at("blur").at("sigma");
      const double gamma = v.at("gamma").at("gamma");
      if (factor == 0.0) ++factor_zero;
      if (factor > 0.2 && sigma != 1.0) ++sigma_bad;
      if (sigma <= 3 && !(gamma >= 1.0 && gamma <= 1.1)) ++gamma_bad;
      if (!(v.at("noise").at("scale") <= 0.2)) ++noise_bad;
    }
    const double p0 = static_cast<double>(factor_zero) / n;
    const std::string tag = std::string(name) + ": ";
    o.require(std::abs(p0 - 0.75) <= 0.01, tag + "P(factor = 0) = " + fmt(p0));
    o.require(sigma_bad == 0, tag + std::to_string(sigma_bad) + " traces with factor > 0.2 and sigma != 1");
    o.require(gamma_bad == 0, tag + std::to_string(gamma_bad) + " traces with sigma <= 3 and gamma outside [1, 1.1]");
    o.require(noise_bad == 0, tag + std::to_string(noise_bad) + " traces with noise scale > 0.2");
    o.note(tag + "100k traces, P(factor = 0) = " + fmt(p0, 5));
  }
}

// 3 -------------------------------------------------------------------------
void distribution_table(Outcome& o) {
  const int n = 100000;
  {
    const auto doc = spec("iid_uniform.scm.txt");
    std::map<std::pair<std::string, std::string>, std::vector<double>> samples;
    for (int id = 0; id < n; ++id) {
      const auto t = scm::sample_trace(doc.graph, id, 77);
      for (const auto& [node, params] : t.values) {
        for (const auto& [param, value] : params) samples[{node, param}].push_back(value);
      }
    }
    double worst = 0;
    for (const auto& node : doc.graph.nodes()) {
      for (const auto& p : node.params) {
        const auto* draw = std::get_if<scm::Draw>(&p.mechanism.expr.node);
        const std::string row = node.name + "." + p.name;
        if (draw == nullptr) {
          o.require(false, row + " is not a plain draw");
          continue;
        }
        const auto& xs = samples.at({node.name, p.name});
        double d = 0;
        if (const auto* u = std::get_if<scm::Uniform>(&draw->dist.variant())) {
          d = oracle::ks_statistic(xs, [&](double x) { return oracle::uniform_cdf(x, u->lo, u->hi); });
        } else if (const auto* pm = std::get_if<scm::PointMass>(&draw->dist.variant())) {
          d = oracle::ks_discrete(xs, {pm->value});
        } else {
          o.require(false, row + " has an unexpected distribution");
          continue;
        }
        worst = std::max(worst, d);
        o.require(d < 0.01, row + ": KS statistic " + fmt(d));
      }
    }
    o.note("iid_uniform: 100k samples per row, largest KS statistic " + fmt(worst));
  }
  {
    const auto doc = spec("iid_halfnormal.scm.txt");
    // Every half-normal source: exogenous terms and direct draws.
    struct Source {
      std::string node, name;
      bool exogenous;
      double scale;
      double sum = 0;
    };
    std::vector<Source> sources;
    for (const auto& node : doc.graph.nodes()) {
      for (const auto& e : node.exogenous) {
        if (const auto* h = std::get_if<scm::HalfNormal>(&e.dist.variant())) sources.push_back({node.name, e.name, true, h->scale});
      }
      for (const auto& p : node.params) {
        const auto* draw = std::get_if<scm::Draw>(&p.mechanism.expr.node);
        if (draw == nullptr) continue;
        if (const auto* h = std::get_if<scm::HalfNormal>(&draw->dist.variant())) sources.push_back({node.name, p.name, false, h->scale});
      }
    }
    for (int id = 0; id < n; ++id) {
      const auto t = scm::sample_trace(doc.graph, id, 78);
      for (auto& s : sources) s.sum += (s.exogenous ? t.exogenous : t.values).at(s.node).at(s.name);
    }
    double worst = 0;
    for (const auto& s : sources) {
      const double mean = s.sum / n;
      const double expected = s.scale * std::sqrt(2.0 / std::numbers::pi);
      const double rel = std::abs(mean - expected) / expected;
      worst = std::max(worst, rel);
      o.require(rel < 0.03, s.node + "." + s.name + ": mean " + fmt(mean) + " vs " + fmt(expected));
    }
    o.require(sources.size() == 8, "expected 8 half-normal rows, found " + std::to_string(sources.size()));
    o.note("iid_halfnormal: " + std::to_string(sources.size()) + " half-normal rows, largest relative mean error " +
           fmt(100 * worst, 3) + "%");
  }
}

// 4 -------------------------------------------------------------------------
void dataset_cardinality(Outcome& o) {
  const fs::path dir = work_root() / "iid100";
  const auto m = dataset::generate_dataset(spec("iid_uniform.scm.txt"), dataset::SynthSource{}, 100, 4, {}, dir, workers());
  int corrupt = 0, clean = 0, masks = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "scenes")) {
    if (!e.is_regular_file()) continue;
    const auto name = e.path().filename().string();
    if (e.path().parent_path().filename() == "corrupt") ++corrupt;
    if (name == "clean.png") ++clean;
    if (name == "masks.png") ++masks;
  }
  std::size_t listed = 0;
  for (const auto& s : m.scenes) listed += s.corrupt.size();
  o.require(corrupt == 800, std::to_string(corrupt) + " corrupted images on disk");
  o.require(clean == 100, std::to_string(clean) + " clean images on disk");
  o.require(masks == 100, std::to_string(masks) + " masks on disk");
  o.require(listed == 800 && m.scenes.size() == 100 && m.scene_count == 100, "manifest counts disagree");
  const auto first = io::read_png(dir / m.scenes.front().clean.path);
  o.require(first.width() == 128 && first.height() == 128, "scenes are not 128x128");
  const auto problems = dataset::verify_dataset(dir);
  o.require(problems.empty(), "verify: " + (problems.empty() ? "" : problems.front()));
  o.note("800 corrupted + 100 clean + 100 masks, " + std::to_string(problems.size()) + " verify problems");
}

// 5 -------------------------------------------------------------------------
void render_modes(Outcome& o) {
  const fs::path chain = work_root() / "chain100";
  dataset::RegimeConfig regime;
  regime.regime = dataset::Regime::OodChain;
  const auto doc = spec("chain_halfnormal.scm.txt");
  const auto m = dataset::generate_dataset(doc, dataset::SynthSource{}, 100, 5, regime, chain, workers());
  for (const auto& n : m.nodes) {
    const auto& node = doc.graph.at(n.name);
    const std::string want = node.parents.empty() ? "clean" : node.parents.front();
    o.require(n.input == want, "chain node " + n.name + " reads " + n.input);
  }
  const auto rc = dataset::rerender_check(chain);
  o.require(rc.mismatches.empty(), std::to_string(rc.mismatches.size()) + " chain mismatches");
  o.require(rc.scenes_checked == 100 && rc.renders_checked == 700, "chain check covered " +
                                                                      std::to_string(rc.renders_checked) + " renders");

  const fs::path iid = work_root() / "iid100";
  const auto mi = dataset::load_manifest(iid);
  for (const auto& n : mi.nodes) o.require(n.input == "clean", "IID node " + n.name + " reads " + n.input);
  const auto ri = dataset::rerender_check(iid);
  o.require(ri.mismatches.empty(), std::to_string(ri.mismatches.size()) + " IID mismatches");
  o.require(ri.scenes_checked == 100 && ri.renders_checked == 800, "IID check covered " +
                                                                      std::to_string(ri.renders_checked) + " renders");
  o.note("chain: " + std::to_string(rc.renders_checked - static_cast<std::int64_t>(rc.mismatches.size())) + "/700 renders reproduced; IID: " +
         std::to_string(ri.renders_checked - static_cast<std::int64_t>(ri.mismatches.size())) + "/800");
}

// 6 -------------------------------------------------------------------------
void metric_oracles(Outcome& o) {
  std::mt19937_64 rng(6);
  const fs::path iid = work_root() / "iid100";
  const auto m = dataset::load_manifest(iid);
  int perfect = 0;
  for (const auto& s : m.scenes) {
    const auto gt = io::read_mask_png(iid / s.mask.path);
    auto labels = nonzero_labels(gt);
    std::vector<std::int32_t> shuffled(labels.size());
    std::iota(shuffled.begin(), shuffled.end(), 1);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::map<std::int32_t, std::int32_t> perm;
    for (std::size_t i = 0; i < labels.size(); ++i) perm[labels[i]] = shuffled[i] * 3 + 10;
    auto pred = gt;
    for (auto& l : pred.labels) {
      if (l != 0) l = perm.at(l);
    }
    if (eval::mean_iou(pred, gt) == 1.0) ++perfect;
  }
  o.require(perfect == 100, std::to_string(perfect) + "/100 permuted ground truths scored 1.0");

  const fs::path pred = work_root() / "gt_pred";
  eval::write_predictions(iid, pred, eval::ReferencePredictor::Oracle, {}, workers());
  const std::vector<fs::path> sets{pred};
  eval::EvalOptions opt;
  opt.seed = 6;
  const auto report = eval::evaluate(iid, sets, opt);
  for (const auto& v : report.variants) {
    o.require(v.miou && v.miou->mean == 1.0 && v.miou->half_width == 0.0, v.variant + ": oracle mIoU not 1.0 +- 0");
  }

  scene::SceneConfig cfg;
  cfg.width = cfg.height = 48;
  cfg.min_size = 4;
  cfg.max_size = 12;
  cfg.min_objects = 1;
  cfg.max_objects = 5;
  std::uniform_real_distribution<double> jitter(-6, 6);
  int agree = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = scene::generate_scene(cfg, trial, 606);
    auto objs = g.metadata.objects;
    for (auto& ob : objs) {
      ob.cx += jitter(rng);
      ob.cy += jitter(rng);
      ob.size = std::max(2.0, ob.size + jitter(rng) / 2);
    }
    if (!objs.empty() && rng() % 3 == 0) objs.pop_back();
    std::shuffle(objs.begin(), objs.end(), rng);
    const auto p = scene::render_objects(cfg.width, cfg.height, objs, cfg.palette, cfg.background).mask;
    const auto gl = nonzero_labels(g.mask);
    const auto pl = nonzero_labels(p);
    std::vector<std::vector<double>> score(gl.size(), std::vector<double>(pl.size()));
    for (std::size_t i = 0; i < gl.size(); ++i) {
      for (std::size_t j = 0; j < pl.size(); ++j) score[i][j] = oracle::pixel_iou(g.mask.labels, gl[i], p.labels, pl[j]);
    }
    if (std::abs(eval::match_masks(p, g.mask).total_iou - oracle::best_assignment_total(score)) <= 1e-9) ++agree;
  }
  o.require(agree == 1000, std::to_string(agree) + "/1000 matchings equal exhaustive search");

  const ops::Image black(32, 32, 0.0f), white(32, 32, 1.0f);
  const ops::Image grey(32, 32, 100.0f / 255.0f), lighter(32, 32, 110.0f / 255.0f);
  const double m0 = eval::mse(grey, grey), m1 = eval::mse(black, white), m2 = eval::mse(grey, lighter);
  o.require(std::abs(m0) <= 1e-6, "MSE identical = " + fmt(m0, 17));
  o.require(std::abs(m1 - 65025.0) <= 1e-6, "MSE black/white = " + fmt(m1, 17));
  o.require(std::abs(m2 - 100.0) <= 1e-6, "MSE offset 10 = " + fmt(m2, 17));
  o.note("permuted GT 100/100, oracle report mIoU 1.0 on all variants, matching " + std::to_string(agree) +
         "/1000, MSE " + fmt(m0) + " / " + fmt(m1, 8) + " / " + fmt(m2, 8));
}

// 7 -------------------------------------------------------------------------
void bootstrap(Outcome& o) {
  const std::vector<double> constant(200, 0.42);
  const auto c = eval::bootstrap_ci(constant, 1000, 1);
  o.require(c.half_width == 0.0, "constant half-width " + fmt(c.half_width));

  std::mt19937_64 rng(7);
  std::normal_distribution<double> d;
  std::vector<double> xs(10000);
  for (auto& x : xs) x = d(rng);
  const auto e = eval::bootstrap_ci(xs, 1000, 70);
  const double target = 1.96 / std::sqrt(10000.0);
  o.require(std::abs(e.half_width - target) <= 0.2 * target, "normal half-width " + fmt(e.half_width));

  const auto again = eval::bootstrap_ci(xs, 1000, 70);
  o.require(std::memcmp(&again.half_width, &e.half_width, sizeof(double)) == 0 &&
                std::memcmp(&again.mean, &e.mean, sizeof(double)) == 0,
            "same seed gave a different interval");
  o.note("N(0,1) n=10000: half-width " + fmt(e.half_width, 5) + " (target " + fmt(target, 5) + " +- 20%)");
}

// 8 -------------------------------------------------------------------------
void longtail(Outcome& o) {
  const std::int64_t n = 50000;
  std::vector<std::int64_t> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  const std::vector<std::string> nodes{"gamma", "blur", "defocus", "lens", "motion", "noise", "clouds", "glare"};
  std::map<std::string, double> p;
  for (const auto& name : nodes) p[name] = 0.01;

  const std::int64_t lo = 3690, hi = 4310;
  const std::int64_t exact_lo = oracle::binomial_quantile(0.005, n, 0.08);
  const std::int64_t exact_hi = oracle::binomial_quantile(0.995, n, 0.08);
  int inside = 0, inside_exact = 0;
  std::int64_t min_count = n, max_count = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::int64_t corrupted = 0;
    for (const auto& e : dataset::mix_longtail(ids, nodes, p, seed)) corrupted += e.variant != "clean";
    min_count = std::min(min_count, corrupted);
    max_count = std::max(max_count, corrupted);
    inside += corrupted >= lo && corrupted <= hi;
    inside_exact += corrupted >= exact_lo && corrupted <= exact_hi;
  }
  o.require(inside >= 99, std::to_string(inside) + "/100 seeds inside [3690, 4310]");
  o.note(std::to_string(inside) + "/100 seeds inside [3690, 4310]; counts ranged " + std::to_string(min_count) + ".." +
         std::to_string(max_count));
  o.note("binomial-quantile oracle 99% interval [" + std::to_string(exact_lo) + ", " + std::to_string(exact_hi) +
         "] holds " + std::to_string(inside_exact) + "/100 seeds");
}

// 9 -------------------------------------------------------------------------
void fragile_curves(Outcome& o) {
  const fs::path ds = work_root() / "iid500";
  dataset::generate_dataset(spec("iid_uniform.scm.txt"), dataset::SynthSource{}, 500, 9, {}, ds, workers());
  const fs::path pred = work_root() / "threshold";
  eval::write_predictions(ds, pred, eval::ReferencePredictor::Threshold, {}, workers());
  const std::vector<fs::path> sets{pred};
  eval::EvalOptions opt;
  opt.seed = 9;
  opt.workers = workers();
  const auto report = eval::evaluate(ds, sets, opt);
  for (const char* name : {"blur", "defocus", "noise"}) {
    const auto it = std::find_if(report.variants.begin(), report.variants.end(),
                                 [&](const auto& v) { return v.variant == name; });
    if (it == report.variants.end()) {
      o.require(false, std::string(name) + " missing from report");
      continue;
    }
    std::string line = std::string(name) + ":";
    std::optional<double> prev;
    int populated = 0;
    for (const auto& b : it->miou_curve) {
      if (!b.mean) {
        line += " -";
        continue;
      }
      ++populated;
      line += " " + fmt(*b.mean, 3);
      if (prev) o.require(*b.mean <= *prev, std::string(name) + ": bin mean rose " + fmt(*prev) + " -> " + fmt(*b.mean));
      prev = b.mean;
    }
    o.require(populated >= 2, std::string(name) + ": fewer than two populated bins");
    o.note(line);
  }
  const std::string csv = eval::curves_csv(report, 10);
  const std::string svg = eval::curves_svg(report, 10);
  io::write_text(work_root() / "curves.csv", csv);
  io::write_text(work_root() / "curves.svg", svg);
  o.require(std::count(csv.begin(), csv.end(), '\n') == 1 + 8 * 10, "curves CSV row count");
  o.require(svg.find("</svg>") != std::string::npos, "SVG incomplete");
}

// 10 ------------------------------------------------------------------------
void determinism(Outcome& o) {
  auto pipeline = [](const fs::path& dir, const std::string& w) {
    std::ostringstream out, err;
    auto run = [&](std::vector<std::string> args) {
      args.push_back("--workers");
      args.push_back(w);
      if (cli::run(args, out, err) != 0) throw std::runtime_error("pipeline step failed: " + err.str());
    };
    auto p = [&](const char* name) { return (dir / name).string(); };
    run({"synth", "--n", "40", "--seed", "10", "--out", p("scenes")});
    run({"corrupt", "--scm", std::string(RCLEVR_SPEC_DIR) + "/chain_halfnormal.scm.txt", "--scenes", p("scenes"),
         "--regime", "ood_chain", "--seed", "11", "--out", p("chain")});
    run({"corrupt", "--scm", std::string(RCLEVR_SPEC_DIR) + "/longtail.scm.txt", "--n", "40", "--regime", "longtail",
         "--p-corr", "0.05", "--seed", "12", "--out", p("longtail")});
    run({"predict", "--dataset", p("chain"), "--kind", "threshold", "--out", p("pred")});
    run({"eval", "--dataset", p("chain"), "--pred", p("pred"), "--seed", "13", "--out", p("report")});
    std::vector<std::string> curves{"curves", "--report", p("report.json"), "--bins", "10", "--out", p("curves")};
    if (cli::run(curves, out, err) != 0) throw std::runtime_error("curves failed: " + err.str());
  };
  const fs::path a = work_root() / "det_1";
  const fs::path b = work_root() / "det_3";
  pipeline(a, "1");
  pipeline(b, "3");
  const auto fa = all_files(a);
  const auto fb = all_files(b);
  std::size_t differing = 0;
  for (const auto& [path, bytes] : fa) {
    const auto it = fb.find(path);
    if (it == fb.end() || it->second != bytes) ++differing;
  }
  o.require(fa.size() == fb.size(), "file counts differ: " + std::to_string(fa.size()) + " vs " + std::to_string(fb.size()));
  o.require(differing == 0, std::to_string(differing) + " files differ between 1 and 3 workers");
  o.note(std::to_string(fa.size()) + " files compared (scenes, chain and long-tail datasets, predictions, report, curves)");
}

struct Criterion {
  int id;
  std::string title;
  std::function<void(Outcome&)> fn;
  double limit_s;  // 0 = no runtime limit
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "severity axiom", severity_axiom, 60},
      {2, "chain structural equations", chain_equations, 30},
      {3, "distribution table", distribution_table, 0},
      {4, "dataset cardinality", dataset_cardinality, 120},
      {5, "render-mode semantics", render_modes, 0},
      {6, "metric oracles", metric_oracles, 0},
      {7, "bootstrap", bootstrap, 0},
      {8, "long-tail mixing", longtail, 0},
      {9, "fragile predictor curves", fragile_curves, 300},
      {10, "end-to-end determinism", determinism, 0},
  };
  std::cout << "workers: " << workers() << "\n";
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.fn(o);
    } catch (const std::exception& e) {
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs >= c.limit_s) {
      o.failures.push_back("took " + fmt(secs) + " s, limit " + fmt(c.limit_s) + " s");
    }
    for (const auto& n : o.notes) std::cout << "    " << n << "\n";
    for (std::size_t i = 0; i < o.failures.size() && i < 10; ++i) std::cout << "    failed: " << o.failures[i] << "\n";
    if (o.failures.size() > 10) std::cout << "    ... " << o.failures.size() - 10 << " more\n";
    std::printf("%s [%d] %s (%.1f s)\n", o.failures.empty() ? "PASS" : "FAIL", c.id, c.title.c_str(), secs);
    std::fflush(stdout);
    if (!o.failures.empty()) ++failed;
  }
  fs::remove_all(work_root());
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
