#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "errscope/analysis.hpp"
#include "errscope/attribution.hpp"
#include "errscope/discovery.hpp"
#include "errscope/projection.hpp"
#include "errscope/storage.hpp"
#include "json.hpp"

namespace errscope {

struct ApiRequest {
  std::string method;  // "GET" or "POST"
  std::string path;    // e.g. "/api/v1/rules"
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

enum class JobState { kIdle, kRunning, kDone, kFailed, kUnavailable };

std::string to_string(JobState state);

struct ServiceOptions {
  DiscoveryConfig discovery;
  TsneOptions tsne;
  std::optional<DataDir> cache_dir;  // rules and projection are cached here when set
  std::size_t default_page_size = 50;
};

// JSON encodings shared by the HTTP layer, the CLI report and the tests.
nlohmann::json to_json(const Condition& condition);
Condition condition_from_json(const nlohmann::json& value);
std::vector<Condition> conditions_from_json(const nlohmann::json& value);
nlohmann::json to_json(const RuleMetrics& metrics);
nlohmann::json to_json(const Rule& rule);

inline constexpr std::size_t kHistogramBins = 20;

// Bin i covers [i/20, (i+1)/20); an error rate of 1 falls into the last bin.
std::array<std::size_t, kHistogramBins> error_rate_histogram(const std::vector<Rule>& rules);

// Request handling over an immutable workspace. Reads take snapshots of the
// rule set, projection and concepts, so concurrent requests never observe a
// half-updated state.
class Service {
 public:
  Service(std::shared_ptr<const Workspace> workspace, ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Loads cached artifacts when present, otherwise starts the background
  // discovery and projection jobs.
  void start();
  // Runs both jobs on the calling thread.
  void run_jobs();
  void wait_for_jobs();

  ApiResponse handle(const ApiRequest& request);

  const Workspace& workspace() const { return *workspace_; }
  std::shared_ptr<const RuleSet> rules() const;
  std::shared_ptr<const Projection2D> projection() const;
  JobState discovery_state() const;
  JobState projection_state() const;

  // Blocks serving HTTP on host:port until stop() is called.
  void listen(const std::string& host, int port);
  // Binds to an ephemeral port, serves on a background thread and returns the port.
  int listen_in_background(const std::string& host);
  void stop();

 private:
  void run_discovery();
  void run_projection();

  ApiResponse get_summary(const ApiRequest& request);
  ApiResponse get_rules(const ApiRequest& request);
  ApiResponse post_rule_eval(const ApiRequest& request);
  ApiResponse get_documents(const ApiRequest& request);
  ApiResponse get_stats_overall(const ApiRequest& request);
  ApiResponse get_stats_subpopulation(const ApiRequest& request);
  ApiResponse get_projection(const ApiRequest& request);
  ApiResponse post_concepts(const ApiRequest& request);
  ApiResponse get_concepts(const ApiRequest& request);
  ApiResponse post_concepts_compare(const ApiRequest& request);
  ApiResponse get_discovery_status(const ApiRequest& request);

  nlohmann::json stats_json(const std::vector<Condition>& conditions, const ConceptMap& concepts) const;
  nlohmann::json attribution_json(const std::vector<std::size_t>& members) const;
  nlohmann::json projection_json(const std::vector<std::size_t>& members) const;

  std::shared_ptr<const Workspace> workspace_;
  ServiceOptions options_;
  ConceptRegistry concepts_;

  mutable std::mutex state_mutex_;
  std::condition_variable jobs_done_;
  std::shared_ptr<const RuleSet> rules_;
  std::shared_ptr<const Projection2D> projection_;
  JobState discovery_state_ = JobState::kIdle;
  JobState projection_state_ = JobState::kIdle;
  std::string discovery_error_;
  std::string projection_error_;
  std::jthread jobs_thread_;

  struct Http;
  std::unique_ptr<Http> http_;
};

}  // namespace errscope
