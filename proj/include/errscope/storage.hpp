#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "errscope/discovery.hpp"
#include "errscope/ingest.hpp"
#include "errscope/projection.hpp"

namespace errscope {

// On-disk layout written by `ingest` and read by `discover`, `report` and
// `serve`. Cached artifacts are keyed by the corpus content hash.
struct DataDir {
  std::filesystem::path root;

  std::filesystem::path corpus() const { return root / "corpus.jsonl"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path rules() const { return root / "rules.txt"; }
  std::filesystem::path projection() const { return root / "projection.json"; }
};

std::string hash_hex(std::uint64_t hash);

// Validates `input`, copies it into the data directory and writes the
// manifest. Returns the loaded store.
DatasetStore ingest_to(const std::filesystem::path& input, const DataDir& dir);

// Canonical description of every option that influences a discovery run.
std::string config_key(const DiscoveryConfig& config);

void save_rules(const DataDir& dir, const RuleSet& rules, const DatasetStore& store,
                const DiscoveryConfig& config);
// The cached rule set when it was produced from the same corpus and config.
std::optional<RuleSet> load_cached_rules(const DataDir& dir, const DatasetStore& store,
                                         const DiscoveryConfig& config);

void save_projection(const DataDir& dir, const Projection2D& projection, const DatasetStore& store);
std::optional<Projection2D> load_cached_projection(const DataDir& dir, const DatasetStore& store);

}  // namespace errscope
