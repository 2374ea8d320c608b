#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "rclevr/core/error.hpp"
#include "rclevr/dataset/dataset.hpp"
#include "rclevr/dataset/trace_io.hpp"
#include "rclevr/io/png.hpp"
#include "rclevr/ops/operators.hpp"

using namespace rclevr;
namespace fs = std::filesystem;

namespace {

dsl::SpecDocument spec(const std::string& name) { return dsl::load_spec(std::string(RCLEVR_SPEC_DIR) + "/" + name); }

dataset::SynthSource small_scenes() {
  dataset::SynthSource s;
  s.config.width = s.config.height = 64;
  s.config.min_size = 5;
  s.config.max_size = 12;
  return s;
}

std::map<std::string, io::Bytes> all_files(const fs::path& root) {
  std::map<std::string, io::Bytes> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = io::read_file(e.path());
  }
  return out;
}

// Rebuilds every node render from its stored input and trace, independently
// of rerender_check, and counts the renders that match.
int rerender_independently(const fs::path& root, bool chain) {
  const auto m = dataset::load_manifest(root);
  const auto doc = spec("chain_halfnormal.scm.txt");
  int matched = 0;
  for (const auto& s : m.scenes) {
    const auto bytes = io::read_file(root / s.trace.path);
    const auto trace = dataset::trace_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
    for (const auto& info : m.nodes) {
      const auto op = *ops::operator_from_name(info.op);
      const fs::path input = info.input == "clean" ? root / s.clean.path : root / s.corrupt.at(info.input).path;
      if (chain) {
        const auto& node = doc.graph.at(info.name);
        CHECK(info.input == (node.parents.empty() ? "clean" : node.parents.front()));
      } else {
        CHECK(info.input == "clean");
      }
      const auto p = ops::make_params(op, trace.values.at(info.name));
      const auto out = ops::quantize8(
          ops::apply(op, io::read_png(input), p, dataset::render_seed(m.global_seed, s.scene_id, info.name)));
      if (out == io::read_png(root / s.corrupt.at(info.name).path)) ++matched;
    }
  }
  return matched;
}

}  // namespace

TEST_CASE("IID dataset cardinality and integrity") {
  const auto dir = oracle::temp_dir("ds_iid");
  const auto doc = spec("iid_uniform.scm.txt");
  const auto m = dataset::generate_dataset(doc, small_scenes(), 20, 5, {}, dir, 2);
  CHECK(m.scene_count == 20);
  CHECK(m.scenes.size() == 20);
  CHECK(m.node_order == doc.graph.order());
  CHECK(m.spec_fingerprint == io::sha256_hex(std::string_view(doc.source_text)));

  int corrupt = 0, clean = 0, masks = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "scenes")) {
    const auto name = e.path().filename().string();
    if (e.path().parent_path().filename() == "corrupt") ++corrupt;
    if (name == "clean.png") ++clean;
    if (name == "masks.png") ++masks;
  }
  CHECK(corrupt == 160);
  CHECK(clean == 20);
  CHECK(masks == 20);
  for (const auto& s : m.scenes) CHECK(s.corrupt.size() == 8);

  CHECK(dataset::verify_dataset(dir).empty());
  const auto rr = dataset::rerender_check(dir);
  CHECK(rr.scenes_checked == 20);
  CHECK(rr.renders_checked == 160);
  CHECK(rr.mismatches.empty());
  CHECK(rerender_independently(dir, false) == 160);

  const auto loaded = dataset::load_manifest(dir);
  CHECK(loaded.scenes == m.scenes);
  CHECK(loaded.nodes == m.nodes);
  fs::remove_all(dir);
}

TEST_CASE("chain renders follow the graph") {
  const auto dir = oracle::temp_dir("ds_chain");
  dataset::RegimeConfig regime;
  regime.regime = dataset::Regime::OodChain;
  const auto m = dataset::generate_dataset(spec("chain_halfnormal.scm.txt"), small_scenes(), 12, 9, regime, dir, 1);
  CHECK(m.nodes.size() == 7);
  CHECK(dataset::rerender_check(dir).mismatches.empty());
  CHECK(rerender_independently(dir, true) == 12 * 7);
  for (const auto& s : m.scenes) CHECK(s.regime == "ood_chain");
  fs::remove_all(dir);
}

TEST_CASE("output bytes do not depend on worker count") {
  const auto a = oracle::temp_dir("ds_w1");
  const auto b = oracle::temp_dir("ds_w3");
  const auto doc = spec("chain_uniform.scm.txt");
  dataset::generate_dataset(doc, small_scenes(), 10, 123, {}, a, 1);
  dataset::generate_dataset(doc, small_scenes(), 10, 123, {}, b, 3);
  const auto fa = all_files(a);
  const auto fb = all_files(b);
  CHECK(fa.size() == fb.size());
  CHECK(fa == fb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("verify catches tampering and missing manifests") {
  const auto dir = oracle::temp_dir("ds_tamper");
  const auto m = dataset::generate_dataset(spec("iid_uniform.scm.txt"), small_scenes(), 3, 1, {}, dir, 1);
  const fs::path victim = dir / m.scenes[1].corrupt.at("blur").path;
  auto img = io::read_png(victim);
  img.at(0, 0, 0) = img.at(0, 0, 0) > 0.5f ? 0.0f : 1.0f;
  io::write_file(victim, io::encode_png(img));
  const auto problems = dataset::verify_dataset(dir);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].find(m.scenes[1].corrupt.at("blur").path) != std::string::npos);
  CHECK(dataset::rerender_check(dir).mismatches.size() == 1);

  fs::remove(dir / m.scenes[2].clean.path);
  CHECK(dataset::verify_dataset(dir).size() >= 2);

  fs::remove(dir / "manifest.json");
  CHECK_FALSE(dataset::verify_dataset(dir).empty());
  CHECK_THROWS_AS(dataset::load_manifest(dir), IoError);
  fs::remove_all(dir);
}

TEST_CASE("traces round-trip through JSON") {
  const auto doc = spec("chain_halfnormal.scm.txt");
  for (int id = 0; id < 50; ++id) {
    const auto t = scm::sample_trace(doc.graph, id, 31);
    CHECK(dataset::trace_from_json(dataset::trace_to_json(t)) == t);
  }
  CHECK_THROWS_AS(dataset::trace_from_json(nlohmann::json::parse(R"({"scene_id": 1})")), SpecError);
}

TEST_CASE("external scene directories") {
  const auto scenes = oracle::temp_dir("ext_scenes");
  const auto out = oracle::temp_dir("ext_ds");
  dataset::write_scene_directory(small_scenes().config, 4, 8, scenes, 2);
  const auto m = dataset::generate_dataset(spec("iid_uniform.scm.txt"), dataset::DirectorySource{scenes}, 4, 2, {}, out, 1);
  for (const auto& s : m.scenes) {
    const auto id = std::to_string(s.scene_id);
    CHECK(io::read_file(out / s.clean.path) == io::read_file(scenes / id / "clean.png"));
    CHECK(io::read_mask_png(out / s.mask.path) == io::read_mask_png(scenes / id / "masks.png"));
  }
  CHECK(dataset::rerender_check(out).mismatches.empty());

  SUBCASE("more scenes requested than present") {
    const auto extra = oracle::temp_dir("ext_ds2");
    CHECK_THROWS_AS(
        dataset::generate_dataset(spec("iid_uniform.scm.txt"), dataset::DirectorySource{scenes}, 9, 2, {}, extra, 1),
        SceneSourceError);
    fs::remove_all(extra);
  }
  SUBCASE("missing masks") {
    fs::remove(scenes / "2" / "masks.png");
    const auto extra = oracle::temp_dir("ext_ds3");
    CHECK_THROWS_AS(
        dataset::generate_dataset(spec("iid_uniform.scm.txt"), dataset::DirectorySource{scenes}, 4, 2, {}, extra, 1),
        SceneSourceError);
    fs::remove_all(extra);
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(dataset::generate_dataset(spec("iid_uniform.scm.txt"), dataset::DirectorySource{scenes / "nope"}, 1,
                                              2, {}, oracle::temp_dir("ext_ds4"), 1),
                    SceneSourceError);
  }
  fs::remove_all(scenes);
  fs::remove_all(out);
}

TEST_CASE("long-tail mixing") {
  std::vector<std::int64_t> ids(50000);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
  const std::vector<std::string> nodes{"gamma", "blur", "defocus", "lens", "motion", "noise", "clouds", "glare"};

  SUBCASE("all zero selects clean") {
    for (const auto& e : dataset::mix_longtail(ids, nodes, {}, 1)) REQUIRE(e.variant == "clean");
  }
  SUBCASE("probabilities summing to one never select clean") {
    std::map<std::string, double> p;
    for (const auto& n : nodes) p[n] = 0.125;
    for (const auto& e : dataset::mix_longtail(ids, nodes, p, 2)) REQUIRE(e.variant != "clean");
    std::map<std::string, double> tenths{{"gamma", 0.1}, {"blur", 0.1}, {"defocus", 0.1}, {"lens", 0.1},
                                         {"motion", 0.1}, {"noise", 0.1}, {"clouds", 0.2}, {"glare", 0.2}};
    for (const auto& e : dataset::mix_longtail(ids, nodes, tenths, 3)) REQUIRE(e.variant != "clean");
  }
  SUBCASE("counts follow the binomial") {
    std::map<std::string, double> p;
    for (const auto& n : nodes) p[n] = 0.01;
    const auto entries = dataset::mix_longtail(ids, nodes, p, 4);
    REQUIRE(entries.size() == ids.size());
    std::map<std::string, std::int64_t> counts;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      CHECK(entries[i].scene_id == ids[i]);
      ++counts[entries[i].variant];
    }
    const std::int64_t corrupted = 50000 - counts["clean"];
    CHECK(corrupted >= oracle::binomial_quantile(0.0005, 50000, 0.08));
    CHECK(corrupted <= oracle::binomial_quantile(0.9995, 50000, 0.08));
    for (const auto& n : nodes) {
      CHECK(counts[n] >= oracle::binomial_quantile(0.0005, 50000, 0.01));
      CHECK(counts[n] <= oracle::binomial_quantile(0.9995, 50000, 0.01));
    }
    CHECK(dataset::mix_longtail(ids, nodes, p, 4) == entries);
  }
  SUBCASE("invalid probabilities") {
    CHECK_THROWS_AS(dataset::mix_longtail(ids, nodes, {{"blur", 0.6}, {"noise", 0.5}}, 1), ProbabilityError);
    CHECK_THROWS_AS(dataset::mix_longtail(ids, nodes, {{"blur", -0.1}}, 1), ProbabilityError);
    CHECK_THROWS_AS(dataset::mix_longtail(ids, nodes, {{"sepia", 0.1}}, 1), ProbabilityError);
  }
}

TEST_CASE("long-tail regime writes a listing") {
  const auto dir = oracle::temp_dir("ds_lt");
  dataset::RegimeConfig regime;
  regime.regime = dataset::Regime::LongTail;
  regime.listing_seed = 17;
  const auto doc = spec("longtail.scm.txt");
  for (const auto& n : doc.graph.order()) regime.p_corr[n] = 0.1;
  const auto m = dataset::generate_dataset(doc, small_scenes(), 30, 3, regime, dir, 1);
  REQUIRE(m.listing.has_value());
  const auto expected = dataset::listing_csv(dataset::mix_longtail(m, regime.p_corr, 17));
  const auto bytes = io::read_file(dir / m.listing->path);
  CHECK(std::string(bytes.begin(), bytes.end()) == expected);
  CHECK(expected.rfind("scene_id,variant\n", 0) == 0);
  CHECK(dataset::verify_dataset(dir).empty());
  CHECK(dataset::load_manifest(dir).regime.p_corr == regime.p_corr);
  fs::remove_all(dir);
}

TEST_CASE("regime names") {
  CHECK(dataset::regime_from_name("ood_chain") == dataset::Regime::OodChain);
  CHECK_THROWS_AS(dataset::regime_from_name("ood"), ConfigError);
}
