#include "errscope/storage.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace errscope {

using nlohmann::json;

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

DatasetStore ingest_to(const std::filesystem::path& input, const DataDir& dir) {
  auto store = load_dataset(input);
  std::filesystem::create_directories(dir.root);
  std::filesystem::copy_file(input, dir.corpus(), std::filesystem::copy_options::overwrite_existing);
  json manifest = {{"corpus_hash", hash_hex(store.content_hash())},
                   {"n_test", store.test().size()},
                   {"n_train", store.train().size()},
                   {"classes", store.classes()},
                   {"error_count", store.error_count()},
                   {"baseline_error_rate", store.baseline_error_rate()},
                   {"embedding_dim", store.embedding_dim()}};
  std::ofstream(dir.manifest()) << manifest.dump(2) << '\n';
  return store;
}

std::string config_key(const DiscoveryConfig& c) {
  std::ostringstream out;
  out << "max_conditions=" << c.max_conditions
      << ";min_support=" << format_double(c.min_support_fraction)
      << ";min_error_rate=" << (c.min_error_rate ? format_double(*c.min_error_rate) : "auto")
      << ";n_trees=" << c.n_trees << ";max_depth=" << c.max_depth << ";cap=" << c.candidate_cap
      << ";B=" << c.bootstrap_resamples << ";alpha=" << format_double(c.alpha)
      << ";seed=" << c.rng_seed << ";forest=" << c.use_forest_filter
      << ";prune=" << c.prune_redundant;
  return out.str();
}

void save_rules(const DataDir& dir, const RuleSet& rules, const DatasetStore& store,
                const DiscoveryConfig& config) {
  RuleReport report;
  report.meta["corpus_hash"] = hash_hex(store.content_hash());
  report.meta["config"] = config_key(config);
  report.meta["baseline_error_rate"] = format_double(rules.baseline_error_rate);
  report.meta["min_error_rate"] = format_double(rules.min_error_rate);
  report.meta["candidate_count"] = std::to_string(rules.candidate_count);
  report.rules = rules.rules;
  std::ofstream out(dir.rules());
  write_rule_report(out, report);
}

std::optional<RuleSet> load_cached_rules(const DataDir& dir, const DatasetStore& store,
                                         const DiscoveryConfig& config) {
  std::ifstream in(dir.rules());
  if (!in) return std::nullopt;
  auto report = read_rule_report(in);
  if (report.meta["corpus_hash"] != hash_hex(store.content_hash()) ||
      report.meta["config"] != config_key(config)) {
    return std::nullopt;
  }
  RuleSet rules;
  rules.rules = std::move(report.rules);
  rules.n_test = store.test().size();
  rules.baseline_error_rate = store.baseline_error_rate();
  rules.min_error_rate = config.min_error_rate.value_or(rules.baseline_error_rate);
  rules.candidate_count = std::stoul(report.meta["candidate_count"]);
  return rules;
}

void save_projection(const DataDir& dir, const Projection2D& projection, const DatasetStore& store) {
  json points = json::array();
  for (const auto& p : projection.points) points.push_back({p[0], p[1]});
  json doc = {{"corpus_hash", hash_hex(store.content_hash())},
              {"method", to_string(projection.method)},
              {"initial_kl", projection.initial_kl},
              {"final_kl", projection.final_kl},
              {"points", std::move(points)}};
  std::ofstream(dir.projection()) << doc.dump() << '\n';
}

std::optional<Projection2D> load_cached_projection(const DataDir& dir, const DatasetStore& store) {
  std::ifstream in(dir.projection());
  if (!in) return std::nullopt;
  const auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || doc.value("corpus_hash", "") != hash_hex(store.content_hash())) {
    return std::nullopt;
  }
  Projection2D out;
  const auto method = doc.value("method", "");
  out.method = method == "tsne" ? ProjectionMethod::kTsne
               : method == "pca" ? ProjectionMethod::kPca
                                 : ProjectionMethod::kIngested;
  out.initial_kl = doc.value("initial_kl", 0.0);
  out.final_kl = doc.value("final_kl", 0.0);
  for (const auto& p : doc.at("points")) out.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  if (out.points.size() != store.test().size()) return std::nullopt;
  return out;
}

}  // namespace errscope
