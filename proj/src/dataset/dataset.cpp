#include "rclevr/dataset/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "rclevr/core/parallel.hpp"
#include "rclevr/core/error.hpp"
#include "rclevr/core/random.hpp"
#include "rclevr/dataset/trace_io.hpp"
#include "rclevr/io/png.hpp"
#include "rclevr/ops/operators.hpp"

namespace rclevr::dataset {
namespace {

using nlohmann::json;

constexpr std::string_view kSpecFile = "spec.scm.txt";
constexpr std::string_view kListingFile = "train_listing.csv";

json ref_json(const FileRef& r) { return {{"path", r.path}, {"sha256", r.sha256}}; }
FileRef ref_from(const json& j) { return {j.at("path").get<std::string>(), j.at("sha256").get<std::string>()}; }

FileRef write_ref(const fs::path& root, const std::string& rel, const io::Bytes& bytes) {
  io::write_file(root / rel, bytes);
  return {rel, io::sha256_hex(bytes)};
}

std::string scene_dir(std::int64_t id) { return "scenes/" + std::to_string(id); }

struct LoadedScene {
  ops::Image clean;
  scene::MaskMap mask;
};

std::vector<std::pair<std::int64_t, fs::path>> list_scene_dirs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw SceneSourceError("scene directory '" + dir.string() + "' does not exist");
  std::vector<std::pair<std::int64_t, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    std::int64_t id = 0;
    const auto res = std::from_chars(name.data(), name.data() + name.size(), id);
    if (res.ec != std::errc() || res.ptr != name.data() + name.size()) continue;
    out.emplace_back(id, entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

LoadedScene load_external(const fs::path& dir) {
  const fs::path clean = dir / "clean.png";
  const fs::path masks = dir / "masks.png";
  if (!fs::exists(clean)) throw SceneSourceError("missing " + clean.string());
  if (!fs::exists(masks)) throw SceneSourceError("missing " + masks.string());
  LoadedScene s{io::read_png(clean), io::read_mask_png(masks)};
  if (s.clean.width() != s.mask.width || s.clean.height() != s.mask.height) {
    throw SceneSourceError("mask and image sizes differ in " + dir.string());
  }
  return s;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view regime_name(Regime r) noexcept {
  switch (r) {
    case Regime::OodIid: return "ood_iid";
    case Regime::OodChain: return "ood_chain";
    case Regime::LongTail: return "longtail";
  }
  return "ood_iid";
}

Regime regime_from_name(std::string_view name) {
  for (Regime r : {Regime::OodIid, Regime::OodChain, Regime::LongTail}) {
    if (regime_name(r) == name) return r;
  }
  throw ConfigError("unknown regime '" + std::string(name) + "' (expected ood_iid, ood_chain or longtail)");
}

std::uint64_t render_seed(std::uint64_t global_seed, std::int64_t scene_id, std::string_view node) noexcept {
  return derive_seed({scm::scene_seed(global_seed, scene_id), hash_name(node), hash_name("render")});
}

json manifest_to_json(const DatasetManifest& m) {
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    nodes.push_back({{"name", n.name}, {"op", n.op}, {"render_from", n.render_from}, {"input", n.input}});
  }
  json scenes = json::array();
  for (const auto& s : m.scenes) {
    json corrupt = json::object();
    for (const auto& [node, ref] : s.corrupt) corrupt[node] = ref_json(ref);
    scenes.push_back({{"scene_id", s.scene_id},
                      {"trace", ref_json(s.trace)},
                      {"clean", ref_json(s.clean)},
                      {"mask", ref_json(s.mask)},
                      {"corrupt", corrupt},
                      {"clamped", s.clamped},
                      {"regime", s.regime}});
  }
  json regime = {{"name", regime_name(m.regime.regime)}};
  if (m.regime.regime == Regime::LongTail) {
    regime["p_corr"] = m.regime.p_corr;
    regime["listing_seed"] = m.regime.listing_seed;
  }
  json doc = {{"format", kManifestFormat},
              {"spec_fingerprint", m.spec_fingerprint},
              {"global_seed", m.global_seed},
              {"scene_count", m.scene_count},
              {"node_order", m.node_order},
              {"nodes", nodes},
              {"regime", regime},
              {"scenes", scenes}};
  if (m.listing) doc["listing"] = ref_json(*m.listing);
  return doc;
}

DatasetManifest manifest_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kManifestFormat) throw SpecError("unsupported manifest format");
    DatasetManifest m;
    m.spec_fingerprint = doc.at("spec_fingerprint").get<std::string>();
    m.global_seed = doc.at("global_seed").get<std::uint64_t>();
    m.scene_count = doc.at("scene_count").get<std::int64_t>();
    m.node_order = doc.at("node_order").get<std::vector<std::string>>();
    for (const auto& n : doc.at("nodes")) {
      m.nodes.push_back({n.at("name").get<std::string>(), n.at("op").get<std::string>(),
                         n.at("render_from").get<std::string>(), n.at("input").get<std::string>()});
    }
    const auto& regime = doc.at("regime");
    m.regime.regime = regime_from_name(regime.at("name").get<std::string>());
    if (regime.contains("p_corr")) m.regime.p_corr = regime.at("p_corr").get<std::map<std::string, double>>();
    if (regime.contains("listing_seed")) m.regime.listing_seed = regime.at("listing_seed").get<std::uint64_t>();
    for (const auto& s : doc.at("scenes")) {
      SceneRecord r;
      r.scene_id = s.at("scene_id").get<std::int64_t>();
      r.trace = ref_from(s.at("trace"));
      r.clean = ref_from(s.at("clean"));
      r.mask = ref_from(s.at("mask"));
      for (const auto& [node, ref] : s.at("corrupt").items()) r.corrupt[node] = ref_from(ref);
      r.clamped = s.at("clamped").get<std::vector<std::string>>();
      r.regime = s.at("regime").get<std::string>();
      m.scenes.push_back(std::move(r));
    }
    if (doc.contains("listing")) m.listing = ref_from(doc.at("listing"));
    return m;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed manifest: ") + e.what());
  }
}

DatasetManifest load_manifest(const fs::path& dataset_dir) {
  const fs::path path = dataset_dir / "manifest.json";
  if (!fs::exists(path)) throw IoError("no manifest at '" + path.string() + "' (incomplete or missing dataset)");
  const auto bytes = io::read_file(path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw SpecError("manifest is not valid JSON: " + std::string(e.what()));
  }
  return manifest_from_json(doc);
}

int default_workers() {
  if (const char* env = std::getenv("RCLEVR_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

DatasetManifest generate_dataset(const dsl::SpecDocument& spec, const SceneSource& source, std::int64_t n_scenes,
                                 std::uint64_t global_seed, const RegimeConfig& regime, const fs::path& out_dir,
                                 int workers) {
  if (n_scenes < 0) throw ConfigError("scene count must be nonnegative");
  const auto& graph = spec.graph;

  std::vector<std::pair<std::int64_t, fs::path>> external;
  if (const auto* dir = std::get_if<DirectorySource>(&source)) {
    external = list_scene_dirs(dir->dir);
    if (static_cast<std::int64_t>(external.size()) < n_scenes) {
      throw SceneSourceError("scene directory holds " + std::to_string(external.size()) + " scenes, " +
                             std::to_string(n_scenes) + " requested");
    }
    external.resize(static_cast<std::size_t>(n_scenes));
  } else {
    std::get<SynthSource>(source).config.validate();
  }

  DatasetManifest manifest;
  manifest.spec_fingerprint = io::sha256_hex(std::string_view(spec.source_text));
  manifest.global_seed = global_seed;
  manifest.scene_count = n_scenes;
  manifest.node_order = graph.order();
  manifest.regime = regime;
  for (const auto& name : graph.order()) {
    const auto& node = graph.at(name);
    const bool from_parent = node.render_from == scm::RenderFrom::Parent;
    manifest.nodes.push_back({name, std::string(ops::operator_name(node.op)), from_parent ? "parent" : "clean",
                              from_parent ? node.parents.front() : "clean"});
  }

  fs::create_directories(out_dir / "scenes");
  fs::remove(out_dir / "manifest.json");
  io::write_text(out_dir / kSpecFile, spec.source_text);

  manifest.scenes.resize(static_cast<std::size_t>(n_scenes));
  parallel_for(n_scenes, workers, [&](std::int64_t index) {
    ops::Image clean;
    scene::MaskMap mask;
    std::int64_t scene_id = index;
    if (external.empty()) {
      auto s = scene::generate_scene(std::get<SynthSource>(source).config, scene_id, global_seed);
      clean = ops::quantize8(s.image);
      mask = std::move(s.mask);
    } else {
      scene_id = external[static_cast<std::size_t>(index)].first;
      auto s = load_external(external[static_cast<std::size_t>(index)].second);
      clean = std::move(s.clean);
      mask = std::move(s.mask);
    }

    const std::string rel = scene_dir(scene_id);
    fs::create_directories(out_dir / rel / "corrupt");
    SceneRecord rec;
    rec.scene_id = scene_id;
    rec.regime = std::string(regime_name(regime.regime));
    rec.clean = write_ref(out_dir, rel + "/clean.png", io::encode_png(clean));
    rec.mask = write_ref(out_dir, rel + "/masks.png", io::encode_mask_png(mask));

    const scm::SampledTrace trace = scm::sample_trace(graph, scene_id, global_seed);
    const std::string trace_text = trace_to_json(trace).dump(2) + "\n";
    rec.trace = write_ref(out_dir, rel + "/trace.json", io::Bytes(trace_text.begin(), trace_text.end()));

    std::map<std::string, ops::Image> renders;
    for (const auto& name : graph.order()) {
      const auto& node = graph.at(name);
      const ops::Image& input = node.render_from == scm::RenderFrom::Parent ? renders.at(node.parents.front()) : clean;
      std::vector<ops::ClampNote> notes;
      const auto params = ops::make_params(node.op, trace.values.at(name), &notes);
      for (const auto& n : notes) {
        rec.clamped.push_back(name + "." + n.param + " " + fmt_double(n.raw) + " -> " + fmt_double(n.clamped));
      }
      ops::Image out = ops::quantize8(ops::apply(node.op, input, params, render_seed(global_seed, scene_id, name)));
      rec.corrupt[name] = write_ref(out_dir, rel + "/corrupt/" + name + ".png", io::encode_png(out));
      renders.emplace(name, std::move(out));
    }
    manifest.scenes[static_cast<std::size_t>(index)] = std::move(rec);
  });

  if (regime.regime == Regime::LongTail) {
    const auto entries = mix_longtail(manifest, regime.p_corr, regime.listing_seed);
    const std::string csv = listing_csv(entries);
    manifest.listing = write_ref(out_dir, std::string(kListingFile), io::Bytes(csv.begin(), csv.end()));
  }
  io::write_file_atomic(out_dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  return manifest;
}

void write_scene_directory(const scene::SceneConfig& config, std::int64_t n_scenes, std::uint64_t global_seed,
                           const fs::path& out_dir, int workers) {
  config.validate();
  fs::create_directories(out_dir);
  parallel_for(n_scenes, workers, [&](std::int64_t id) {
    const auto s = scene::generate_scene(config, id, global_seed);
    const fs::path dir = out_dir / std::to_string(id);
    fs::create_directories(dir);
    io::write_file(dir / "clean.png", io::encode_png(s.image));
    io::write_file(dir / "masks.png", io::encode_mask_png(s.mask));
    json objects = json::array();
    for (const auto& o : s.metadata.objects) {
      objects.push_back({{"shape", scene::shape_name(o.shape)},
                         {"cx", o.cx},
                         {"cy", o.cy},
                         {"size", o.size},
                         {"rotation", o.rotation},
                         {"color", o.color}});
    }
    const json meta = {{"scene_id", id}, {"object_count", s.mask.object_count()}, {"objects", objects}};
    io::write_text(dir / "meta.json", meta.dump(2) + "\n");
  });
}

std::vector<std::string> verify_dataset(const fs::path& dir) {
  std::vector<std::string> problems;
  DatasetManifest m;
  try {
    m = load_manifest(dir);
  } catch (const Error& e) {
    return {e.what()};
  }
  auto check = [&](const FileRef& ref) {
    const fs::path p = dir / ref.path;
    if (!fs::exists(p)) {
      problems.push_back("missing file " + ref.path);
      return;
    }
    if (io::sha256_hex(io::read_file(p)) != ref.sha256) problems.push_back("hash mismatch for " + ref.path);
  };
  for (const auto& s : m.scenes) {
    check(s.trace);
    check(s.clean);
    check(s.mask);
    for (const auto& [node, ref] : s.corrupt) check(ref);
    if (s.corrupt.size() != m.node_order.size()) {
      problems.push_back("scene " + std::to_string(s.scene_id) + " has " + std::to_string(s.corrupt.size()) +
                         " renders for " + std::to_string(m.node_order.size()) + " nodes");
    }
  }
  if (m.listing) check(*m.listing);
  if (static_cast<std::int64_t>(m.scenes.size()) != m.scene_count) problems.push_back("scene count disagrees");

  const fs::path spec_path = dir / kSpecFile;
  if (!fs::exists(spec_path)) {
    problems.push_back("missing " + std::string(kSpecFile));
    return problems;
  }
  const auto spec_bytes = io::read_file(spec_path);
  if (io::sha256_hex(spec_bytes) != m.spec_fingerprint) problems.push_back("spec fingerprint mismatch");
  try {
    const auto doc = dsl::parse_spec(std::string(spec_bytes.begin(), spec_bytes.end()));
    if (doc.graph.order() != m.node_order) problems.push_back("node order differs from the spec file's topological order");
  } catch (const Error& e) {
    problems.push_back(std::string("stored spec does not parse: ") + e.what());
  }
  return problems;
}

RerenderReport rerender_check(const fs::path& dir) {
  RerenderReport report;
  const auto m = load_manifest(dir);
  const auto spec = dsl::load_spec((dir / kSpecFile).string());
  for (const auto& s : m.scenes) {
    const auto trace_bytes = io::read_file(dir / s.trace.path);
    const auto trace = trace_from_json(json::parse(trace_bytes.begin(), trace_bytes.end()));
    const ops::Image clean = io::read_png(dir / s.clean.path);
    for (const auto& info : m.nodes) {
      const auto& node = spec.graph.at(info.name);
      const ops::Image input = info.input == "clean" ? clean : io::read_png(dir / s.corrupt.at(info.input).path);
      const auto params = ops::make_params(node.op, trace.values.at(info.name));
      const ops::Image expected =
          ops::quantize8(ops::apply(node.op, input, params, render_seed(m.global_seed, s.scene_id, info.name)));
      const ops::Image stored = io::read_png(dir / s.corrupt.at(info.name).path);
      if (!(expected == stored)) {
        report.mismatches.push_back("scene " + std::to_string(s.scene_id) + " node " + info.name);
      }
      ++report.renders_checked;
    }
    ++report.scenes_checked;
  }
  return report;
}

std::vector<ListingEntry> mix_longtail(std::span<const std::int64_t> scene_ids, std::span<const std::string> nodes,
                                       const std::map<std::string, double>& p_corr, std::uint64_t seed) {
  std::vector<double> p;
  double total = 0.0;
  for (const auto& name : nodes) {
    const auto it = p_corr.find(name);
    const double v = it == p_corr.end() ? 0.0 : it->second;
    if (!(v >= 0.0 && v <= 1.0)) throw ProbabilityError("p_corr for '" + name + "' must lie in [0, 1]");
    p.push_back(v);
    total += v;
  }
  for (const auto& [name, _] : p_corr) {
    if (std::find(nodes.begin(), nodes.end(), name) == nodes.end()) {
      throw ProbabilityError("p_corr names unknown corruption '" + name + "'");
    }
  }
  if (total > 1.0 + 1e-9) throw ProbabilityError("corruption probabilities sum to more than 1");

  std::vector<ListingEntry> out;
  out.reserve(scene_ids.size());
  for (std::int64_t id : scene_ids) {
    Rng rng(derive_seed({seed, static_cast<std::uint64_t>(id), hash_name("longtail")}));
    const double u = rng.uniform01();
    std::string variant = "clean";
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) {
        variant = nodes[i];
        break;
      }
    }
    // Sum of 1 up to rounding: never fall through to clean.
    if (variant == "clean" && total >= 1.0 - 1e-9 && !p.empty()) {
      for (std::size_t i = p.size(); i-- > 0;) {
        if (p[i] > 0) {
          variant = nodes[i];
          break;
        }
      }
    }
    out.push_back({id, std::move(variant)});
  }
  return out;
}

std::vector<ListingEntry> mix_longtail(const DatasetManifest& manifest, const std::map<std::string, double>& p_corr,
                                       std::uint64_t seed) {
  std::vector<std::int64_t> ids;
  for (const auto& s : manifest.scenes) ids.push_back(s.scene_id);
  return mix_longtail(ids, manifest.node_order, p_corr, seed);
}

std::string listing_csv(std::span<const ListingEntry> entries) {
  std::string out = "scene_id,variant\n";
  for (const auto& e : entries) out += std::to_string(e.scene_id) + "," + e.variant + "\n";
  return out;
}

}  // namespace rclevr::dataset
