#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "rclevr/dsl/spec.hpp"
#include "rclevr/scene/scene.hpp"

namespace rclevr::dataset {

namespace fs = std::filesystem;

enum class Regime { OodIid, OodChain, LongTail };

std::string_view regime_name(Regime r) noexcept;
Regime regime_from_name(std::string_view name);  // throws ConfigError

struct RegimeConfig {
  Regime regime = Regime::OodIid;
  std::map<std::string, double> p_corr;  // node -> probability, long-tail only
  std::uint64_t listing_seed = 0;
};

struct SynthSource {
  scene::SceneConfig config;
};

/// `<dir>/<id>/clean.png` + `<dir>/<id>/masks.png` pairs; ids are decimal.
struct DirectorySource {
  fs::path dir;
};

using SceneSource = std::variant<SynthSource, DirectorySource>;

struct FileRef {
  std::string path;  // relative to the dataset root
  std::string sha256;
  bool operator==(const FileRef&) const = default;
};

struct SceneRecord {
  std::int64_t scene_id = 0;
  FileRef trace;
  FileRef clean;
  FileRef mask;
  std::map<std::string, FileRef> corrupt;  // node -> render
  std::vector<std::string> clamped;        // "node.param raw -> clamped"
  std::string regime;
  bool operator==(const SceneRecord&) const = default;
};

struct NodeInfo {
  std::string name;
  std::string op;
  std::string render_from;  // "parent" or "clean"
  std::string input;        // parent node name, or "clean"
  bool operator==(const NodeInfo&) const = default;
};

struct DatasetManifest {
  std::string spec_fingerprint;
  std::uint64_t global_seed = 0;
  std::int64_t scene_count = 0;
  std::vector<std::string> node_order;
  std::vector<NodeInfo> nodes;
  RegimeConfig regime;
  std::vector<SceneRecord> scenes;
  std::optional<FileRef> listing;  // long-tail training listing
};

inline constexpr std::string_view kManifestFormat = "rclevr-dataset/1";

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& doc);
DatasetManifest load_manifest(const fs::path& dataset_dir);

/// Seed for the stochastic operators (noise, clouds) of one node render.
std::uint64_t render_seed(std::uint64_t global_seed, std::int64_t scene_id, std::string_view node) noexcept;

/// Writes the full dataset under out_dir; the manifest is written last and
/// atomically. Output bytes do not depend on `workers`.
DatasetManifest generate_dataset(const dsl::SpecDocument& spec, const SceneSource& scenes, std::int64_t n_scenes,
                                 std::uint64_t global_seed, const RegimeConfig& regime, const fs::path& out_dir,
                                 int workers = 1);

/// Writes `<out>/<id>/clean.png` and `masks.png` for synthesized scenes, the
/// layout accepted by DirectorySource.
void write_scene_directory(const scene::SceneConfig& config, std::int64_t n_scenes, std::uint64_t global_seed,
                           const fs::path& out_dir, int workers = 1);

/// Hash and structure problems; empty when the dataset is intact.
std::vector<std::string> verify_dataset(const fs::path& dataset_dir);

struct RerenderReport {
  std::int64_t scenes_checked = 0;
  std::int64_t renders_checked = 0;
  std::vector<std::string> mismatches;
};

/// Re-derives every node render from its declared input image and the
/// stored trace, comparing pixels with the stored file.
RerenderReport rerender_check(const fs::path& dataset_dir);

struct ListingEntry {
  std::int64_t scene_id;
  std::string variant;  // "clean" or a node name
  bool operator==(const ListingEntry&) const = default;
};

/// Picks one variant per scene: node i with probability p_corr[i], clean
/// otherwise. Throws ProbabilityError when probabilities are invalid.
std::vector<ListingEntry> mix_longtail(std::span<const std::int64_t> scene_ids, std::span<const std::string> nodes,
                                       const std::map<std::string, double>& p_corr, std::uint64_t seed);
std::vector<ListingEntry> mix_longtail(const DatasetManifest& manifest, const std::map<std::string, double>& p_corr,
                                       std::uint64_t seed);

std::string listing_csv(std::span<const ListingEntry> entries);

/// Number of workers from RCLEVR_WORKERS, else hardware concurrency.
int default_workers();

}  // namespace rclevr::dataset
