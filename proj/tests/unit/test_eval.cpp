#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "rclevr/core/error.hpp"
#include "rclevr/dataset/dataset.hpp"
#include "rclevr/dataset/trace_io.hpp"
#include "rclevr/eval/metrics.hpp"
#include "rclevr/eval/predictors.hpp"
#include "rclevr/eval/report.hpp"
#include "rclevr/io/png.hpp"

using namespace rclevr;
using scene::MaskMap;
namespace fs = std::filesystem;

namespace {

void fill_rect(MaskMap& m, int x0, int y0, int w, int h, std::int32_t label) {
  for (int y = y0; y < y0 + h; ++y) {
    for (int x = x0; x < x0 + w; ++x) m.at(x, y) = label;
  }
}

MaskMap relabel(const MaskMap& m, const std::map<std::int32_t, std::int32_t>& to) {
  MaskMap out = m;
  for (auto& l : out.labels) {
    if (l != 0) l = to.at(l);
  }
  return out;
}

std::vector<std::int32_t> nonzero_labels(const MaskMap& m) {
  std::set<std::int32_t> s(m.labels.begin(), m.labels.end());
  s.erase(0);
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("permuted prediction labels match their twins") {
  const auto gt = scene::generate_scene({}, 6, 6).mask;
  const auto labels = nonzero_labels(gt);
  std::map<std::int32_t, std::int32_t> perm;
  for (std::size_t i = 0; i < labels.size(); ++i) perm[labels[i]] = static_cast<std::int32_t>(200 - 7 * i);
  const auto pred = relabel(gt, perm);
  const auto a = eval::match_masks(pred, gt);
  REQUIRE(a.matches.size() == labels.size());
  for (const auto& m : a.matches) {
    REQUIRE(m.pred.has_value());
    CHECK(*m.pred == perm.at(m.gt));
    CHECK(m.iou == 1.0);
  }
  CHECK(eval::mean_iou(pred, gt) == 1.0);
  CHECK(eval::mean_iou(gt, gt) == 1.0);
}

TEST_CASE("two squares, one found") {
  MaskMap gt(40, 20), pred(40, 20);
  fill_rect(gt, 0, 0, 10, 10, 1);
  fill_rect(gt, 20, 5, 10, 10, 2);
  fill_rect(pred, 0, 0, 10, 10, 7);
  const auto a = eval::match_masks(pred, gt);
  REQUIRE(a.matches.size() == 2);
  CHECK(a.matches[0].gt == 1);
  CHECK(a.matches[0].pred == std::optional<std::int32_t>(7));
  CHECK(a.matches[0].iou == 1.0);
  CHECK(a.matches[1].gt == 2);
  CHECK_FALSE(a.matches[1].pred.has_value());
  CHECK(a.matches[1].iou == 0.0);
  CHECK(a.total_iou == 1.0);
  CHECK(*eval::mean_iou(pred, gt) == doctest::Approx((1.0 + 0.0) / 2));
}

TEST_CASE("strip overlap is one third") {
  MaskMap gt(30, 10), pred(30, 10);
  fill_rect(gt, 0, 0, 10, 10, 1);
  fill_rect(pred, 5, 0, 10, 10, 1);
  CHECK(oracle::pixel_iou(gt.labels, 1, pred.labels, 1) == doctest::Approx(50.0 / 150.0));
  const auto a = eval::match_masks(pred, gt);
  REQUIRE(a.matches.size() == 1);
  CHECK(a.matches[0].iou == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("degenerate masks") {
  const auto gt = scene::generate_scene({}, 1, 1).mask;
  CHECK(eval::mean_iou(MaskMap(gt.width, gt.height), gt) == 0.0);
  CHECK_FALSE(eval::mean_iou(gt, MaskMap(gt.width, gt.height)).has_value());
  CHECK_THROWS_AS(eval::mean_iou(MaskMap(3, 3), gt), ShapeMismatch);
}

TEST_CASE("optimal matching equals exhaustive search on 1000 scenes") {
  std::mt19937_64 rng(99);
  scene::SceneConfig cfg;
  cfg.width = cfg.height = 40;
  cfg.min_size = 4;
  cfg.max_size = 10;
  cfg.min_objects = cfg.max_objects = 5;
  std::uniform_real_distribution<double> jitter(-5, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto gt_scene = scene::generate_scene(cfg, trial, 12);
    auto objs = gt_scene.metadata.objects;
    for (auto& o : objs) {
      o.cx += jitter(rng);
      o.cy += jitter(rng);
      o.size = std::max(2.0, o.size + jitter(rng) / 2);
    }
    if (rng() % 2) objs.pop_back();
    std::shuffle(objs.begin(), objs.end(), rng);
    const auto pred = scene::render_objects(40, 40, objs, cfg.palette, cfg.background).mask;
    const auto& gt = gt_scene.mask;

    const auto g = nonzero_labels(gt);
    const auto p = nonzero_labels(pred);
    std::vector<std::vector<double>> score(g.size(), std::vector<double>(p.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) score[i][j] = oracle::pixel_iou(gt.labels, g[i], pred.labels, p[j]);
    }
    const double best = oracle::best_assignment_total(score);
    const auto a = eval::match_masks(pred, gt);
    if (std::abs(a.total_iou - best) > 1e-9) FAIL("trial " << trial << ": " << a.total_iou << " vs " << best);

    std::set<std::int32_t> used;
    double sum = 0;
    for (const auto& m : a.matches) {
      if (m.pred) CHECK(used.insert(*m.pred).second);
      sum += m.iou;
    }
    CHECK(sum == doctest::Approx(a.total_iou));
    const double miou = *eval::mean_iou(pred, gt);
    CHECK(miou == doctest::Approx(best / static_cast<double>(g.size())));
    CHECK((miou >= 0.0 && miou <= 1.0));
  }
}

TEST_CASE("rectangular assignment") {
  const std::vector<std::vector<double>> cost{{4, 1, 3}, {2, 0, 5}};
  const auto cols = eval::solve_assignment(cost);
  REQUIRE(cols.size() == 2);
  CHECK(cost[0][static_cast<std::size_t>(cols[0])] + cost[1][static_cast<std::size_t>(cols[1])] == 3.0);
  const auto tall = eval::solve_assignment({{1}, {0}, {5}});
  CHECK(tall == std::vector<int>{-1, 0, -1});
  CHECK(eval::solve_assignment({}).empty());
}

TEST_CASE("mse") {
  const ops::Image black(16, 8, 0.0f), white(16, 8, 1.0f);
  CHECK(eval::mse(black, black) == 0.0);
  CHECK(eval::mse(black, white) == 65025.0);
  CHECK(eval::mse(black, white, eval::MseScale::Unit) == doctest::Approx(1.0));
  const ops::Image grey(16, 8, 100.0f / 255.0f), lighter(16, 8, 110.0f / 255.0f);
  CHECK(eval::mse(grey, lighter) == 100.0);
  CHECK(eval::mse(grey, lighter, eval::MseScale::Unit) == doctest::Approx(100.0 / 65025.0));
  CHECK_THROWS_AS(eval::mse(black, ops::Image(8, 8)), ShapeMismatch);
}

TEST_CASE("bootstrap") {
  SUBCASE("constant values") {
    const std::vector<double> v(50, 0.7);
    const auto e = eval::bootstrap_ci(v, 1000, 1);
    CHECK(e.mean == std::accumulate(v.begin(), v.end(), 0.0) / 50.0);
    CHECK(e.half_width == 0.0);
    CHECK(e.n == 50);
  }
  SUBCASE("normal sample matches the CLT width") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> d;
    std::vector<double> v(10000);
    for (auto& x : v) x = d(rng);
    const auto e = eval::bootstrap_ci(v, 1000, 77);
    const double expected = 1.96 / std::sqrt(10000.0);
    CHECK(e.half_width >= expected * 0.8);
    CHECK(e.half_width <= expected * 1.2);
    CHECK(e.mean == std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
  }
  SUBCASE("seeded") {
    const std::vector<double> v{0.1, 0.5, 0.2, 0.9, 0.3, 0.35};
    const auto a = eval::bootstrap_ci(v, 500, 3);
    CHECK(a.half_width == eval::bootstrap_ci(v, 500, 3).half_width);
    CHECK(a.half_width != eval::bootstrap_ci(v, 500, 4).half_width);
    CHECK(a.half_width > 0);
  }
  SUBCASE("single value warns") {
    std::vector<std::string> warnings;
    const std::vector<double> v{0.4};
    const auto e = eval::bootstrap_ci(v, 1000, 1, &warnings);
    CHECK(e.half_width == 0.0);
    CHECK(e.mean == 0.4);
    CHECK(warnings.size() == 1);
  }
  SUBCASE("empty sample") { CHECK_THROWS_AS(eval::bootstrap_ci({}, 1000, 1), EmptySample); }
}

TEST_CASE("severity curves") {
  SUBCASE("all at zero") {
    const std::vector<std::pair<double, double>> r{{0, 0.2}, {0, 0.4}, {0, 0.9}};
    const auto c = eval::severity_curve(r, 10);
    REQUIRE(c.size() == 10);
    CHECK(c[0].count == 3);
    CHECK(*c[0].mean == doctest::Approx(0.5));
    for (std::size_t i = 1; i < c.size(); ++i) {
      CHECK(c[i].count == 0);
      CHECK_FALSE(c[i].mean.has_value());
    }
  }
  SUBCASE("one minus severity decreases") {
    std::vector<std::pair<double, double>> r;
    for (int i = 0; i <= 1000; ++i) r.emplace_back(i / 1000.0, 1.0 - i / 1000.0);
    const auto c = eval::severity_curve(r, 10);
    std::size_t total = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      total += c[i].count;
      CHECK(c[i].lo == doctest::Approx(i / 10.0));
      CHECK(c[i].center == doctest::Approx(i / 10.0 + 0.05));
      if (i > 0) CHECK(*c[i].mean < *c[i - 1].mean);
    }
    CHECK(total == r.size());
    CHECK(c.back().count == 101);  // severity 1 lands in the last bin
  }
}

TEST_CASE("dataset evaluation") {
  const auto root = oracle::temp_dir("eval");
  const auto ds = root / "ds";
  dataset::SynthSource src;
  src.config.width = src.config.height = 64;
  src.config.min_size = 6;
  src.config.max_size = 12;
  dataset::RegimeConfig regime;
  regime.regime = dataset::Regime::OodChain;
  const auto manifest = dataset::generate_dataset(dsl::load_spec(std::string(RCLEVR_SPEC_DIR) + "/chain_uniform.scm.txt"),
                                                  src, 60, 21, regime, ds, 2);
  eval::write_predictions(ds, root / "oracle", eval::ReferencePredictor::Oracle);
  eval::write_predictions(ds, root / "threshold", eval::ReferencePredictor::Threshold, {}, 2);

  const std::vector<fs::path> sets{root / "threshold", root / "oracle"};
  eval::EvalOptions opt;
  opt.seed = 4;
  opt.n_boot = 200;
  const auto report = eval::evaluate(ds, sets, opt);
  REQUIRE(report.prediction_sets.size() == 2);
  CHECK(report.prediction_sets[0].label == "threshold");
  CHECK(report.selected == 1);
  CHECK(report.prediction_sets[1].clean_miou == 1.0);
  REQUIRE(report.variants.size() == 8);
  CHECK(report.variants[0].variant == "clean");
  CHECK(report.records.size() == 60 * 8);
  for (const auto& v : report.variants) {
    INFO(v.variant);
    CHECK(v.miou->mean == 1.0);
    CHECK(v.miou->half_width == 0.0);
    CHECK(v.mse->mean == 0.0);
    CHECK(v.miou->n == 60);
    if (v.variant == "clean") continue;
    std::size_t total = 0;
    for (const auto& b : v.miou_curve) total += b.count;
    CHECK(total == 60);
  }

  SUBCASE("chain blur bins match a histogram over the traces") {
    std::vector<double> sigma;
    for (const auto& s : manifest.scenes) {
      const auto bytes = io::read_file(ds / s.trace.path);
      sigma.push_back(dataset::trace_from_json(nlohmann::json::parse(bytes.begin(), bytes.end())).values.at("blur").at("sigma"));
    }
    const double lo = *std::min_element(sigma.begin(), sigma.end());
    const double hi = *std::max_element(sigma.begin(), sigma.end());
    REQUIRE(hi > lo);
    std::vector<std::size_t> hist(10, 0);
    for (double s : sigma) ++hist[std::min<std::size_t>(9, static_cast<std::size_t>((s - lo) / (hi - lo) * 10))];
    const auto& blur = *std::find_if(report.variants.begin(), report.variants.end(),
                                     [](const auto& v) { return v.variant == "blur"; });
    REQUIRE(blur.miou_curve.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(blur.miou_curve[i].count == hist[i]);
  }

  SUBCASE("report survives JSON") {
    const auto doc = eval::report_to_json(report);
    const auto back = eval::report_from_json(doc);
    CHECK(eval::report_to_json(back) == doc);
    CHECK(doc.at("format") == std::string(eval::kReportFormat));
    CHECK_THROWS_AS(eval::report_from_json(nlohmann::json::parse(R"({"format": "other"})")), SpecError);
  }

  SUBCASE("flat outputs") {
    const auto csv = eval::records_csv(report);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 60 * 8);
    const auto curves = eval::curves_csv(report, 5);
    CHECK(std::count(curves.begin(), curves.end(), '\n') == 1 + 7 * 5);
    const auto svg = eval::curves_svg(report, 5);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    for (const auto& v : eval::rebin(report, 4)) {
      if (v.variant != "clean") CHECK(v.miou_curve.size() == 4);
    }
  }

  SUBCASE("threshold predictions alone") {
    const std::vector<fs::path> one{root / "threshold"};
    const auto r = eval::evaluate(ds, one, opt);
    for (const auto& v : r.variants) CHECK((v.miou->mean >= 0.0 && v.miou->mean <= 1.0));
    CHECK(r.variants[0].miou->mean > 0.5);
    CHECK(eval::report_to_json(eval::evaluate(ds, one, opt)) == eval::report_to_json(r));
  }

  fs::remove_all(root);
}

TEST_CASE("threshold segmenter on a clean scene") {
  const auto s = scene::generate_scene({}, 2, 3);
  const auto pred = eval::ThresholdSegmenter{}.segment(s.image);
  CHECK(*eval::mean_iou(pred, s.mask) > 0.8);
  const auto blank = eval::ThresholdSegmenter{}.segment(ops::Image(32, 32, 0.45f));
  CHECK(blank.object_count() == 0);
}
