#include "errscope/service.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <stdexcept>

#include "httplib.h"

namespace errscope {

using nlohmann::json;

namespace {

constexpr std::string_view kPrefix = "/api/v1";

struct NotReady : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ApiResponse error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

std::optional<std::string> query_value(const ApiRequest& request, const std::string& key) {
  const auto it = request.query.find(key);
  if (it == request.query.end()) return std::nullopt;
  return it->second;
}

std::size_t parse_size(const std::string& text, const std::string& key) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ValidationError("'" + key + "' must be a non-negative integer");
  return value;
}

double parse_number(const std::string& text, const std::string& key) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ValidationError("'" + key + "' must be a number");
  return value;
}

json parse_body(const ApiRequest& request) {
  auto body = json::parse(request.body, nullptr, false);
  if (body.is_discarded()) throw ValidationError("request body is not valid JSON");
  return body;
}

std::vector<Condition> rule_param(const ApiRequest& request) {
  const auto text = query_value(request, "rule");
  if (!text || text->empty()) return {};
  auto value = json::parse(*text, nullptr, false);
  if (value.is_discarded()) throw ValidationError("'rule' must be a JSON array of conditions");
  return canonical_conditions(conditions_from_json(value));
}

std::size_t page_param(const ApiRequest& request, const std::string& key, std::size_t fallback) {
  const auto text = query_value(request, key);
  const std::size_t value = text ? parse_size(*text, key) : fallback;
  if (value == 0) throw ValidationError("'" + key + "' must be positive");
  return value;
}

json concept_json(const Concept& c) {
  json tokens = json::array();
  for (const auto& t : c.tokens) tokens.push_back(join_ngram(t));
  return {{"id", c.id}, {"name", c.name}, {"tokens", std::move(tokens)}};
}

json metrics_or_null(double value, bool defined) { return defined ? json(value) : json(nullptr); }

}  // namespace

std::string to_string(JobState state) {
  switch (state) {
    case JobState::kIdle: return "idle";
    case JobState::kRunning: return "running";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
    case JobState::kUnavailable: return "unavailable";
  }
  return "idle";
}

json to_json(const Condition& c) {
  switch (c.kind) {
    case ConditionKind::kToken:
      return {{"type", "token"}, {"tokens", join_ngram(c.tokens)}};
    case ConditionKind::kConcept:
      return {{"type", "concept"}, {"id", c.concept_id}};
    case ConditionKind::kHighLevel:
      return {{"type", "high_level"}, {"feature", c.feature}, {"bucket", to_string(c.bucket)}};
  }
  return nullptr;
}

Condition condition_from_json(const json& value) {
  if (value.is_string()) return parse_condition(value.get<std::string>());
  if (!value.is_object() || !value.contains("type") || !value["type"].is_string()) {
    throw ValidationError("a condition needs a string 'type'");
  }
  const auto type = value["type"].get<std::string>();
  try {
    if (type == "token") {
      const auto& tokens = value.at("tokens");
      if (tokens.is_string()) return Condition::token_present(parse_ngram(tokens.get<std::string>()));
      std::string joined;
      for (const auto& t : tokens) joined += (joined.empty() ? "" : " ") + t.get<std::string>();
      return Condition::token_present(parse_ngram(joined));
    }
    if (type == "concept") return Condition::concept_present(value.at("id").get<int>());
    if (type == "high_level") {
      const auto bucket_text = value.at("bucket").get<std::string>();
      const auto bucket = parse_bucket(bucket_text);
      if (!bucket) throw ValidationError("unknown bucket '" + bucket_text + "'");
      return Condition::high_level(value.at("feature").get<std::string>(), *bucket);
    }
  } catch (const json::exception&) {
    throw ValidationError("malformed '" + type + "' condition");
  }
  throw ValidationError("unknown condition type '" + type + "'");
}

std::vector<Condition> conditions_from_json(const json& value) {
  if (!value.is_array()) throw ValidationError("conditions must be a JSON array");
  std::vector<Condition> out;
  for (const auto& item : value) out.push_back(condition_from_json(item));
  return out;
}

json to_json(const RuleMetrics& m) {
  const bool defined = m.defined();
  return {{"support_count", m.support_count},
          {"error_count", m.error_count},
          {"support_fraction", m.support_fraction},
          {"error_rate", metrics_or_null(m.error_rate, defined)},
          {"p_value", metrics_or_null(m.p_value, defined)},
          {"ci_low", metrics_or_null(m.ci_low, defined)},
          {"ci_high", metrics_or_null(m.ci_high, defined)},
          {"defined", defined}};
}

json to_json(const Rule& rule) {
  json conditions = json::array();
  for (const auto& c : rule.conditions) conditions.push_back(to_json(c));
  return {{"conditions", std::move(conditions)},
          {"description", describe(rule.conditions)},
          {"metrics", to_json(rule.metrics)}};
}

std::array<std::size_t, kHistogramBins> error_rate_histogram(const std::vector<Rule>& rules) {
  std::array<std::size_t, kHistogramBins> bins{};
  for (const auto& rule : rules) {
    auto bin = static_cast<std::size_t>(rule.metrics.error_rate * static_cast<double>(kHistogramBins));
    ++bins[std::min(bin, kHistogramBins - 1)];
  }
  return bins;
}

struct Service::Http {
  httplib::Server server;
  std::thread thread;
};

Service::Service(std::shared_ptr<const Workspace> workspace, ServiceOptions options)
    : workspace_(std::move(workspace)), options_(std::move(options)) {
  options_.discovery.validate();
  const auto& store = workspace_->store();
  if (!store.has_ingested_projection() && !(store.has_embeddings() && store.test().size() >= 3)) {
    projection_state_ = JobState::kUnavailable;
  }
}

Service::~Service() {
  stop();
  if (jobs_thread_.joinable()) jobs_thread_.join();
}

void Service::start() {
  const auto& store = workspace_->store();
  if (options_.cache_dir) {
    if (auto cached = load_cached_rules(*options_.cache_dir, store, options_.discovery)) {
      std::lock_guard lock(state_mutex_);
      rules_ = std::make_shared<const RuleSet>(std::move(*cached));
      discovery_state_ = JobState::kDone;
    }
    if (projection_state_ != JobState::kUnavailable) {
      if (auto cached = load_cached_projection(*options_.cache_dir, store)) {
        std::lock_guard lock(state_mutex_);
        projection_ = std::make_shared<const Projection2D>(std::move(*cached));
        projection_state_ = JobState::kDone;
      }
    }
  }
  {
    std::lock_guard lock(state_mutex_);
    if (discovery_state_ == JobState::kIdle) discovery_state_ = JobState::kRunning;
    if (projection_state_ == JobState::kIdle) projection_state_ = JobState::kRunning;
  }
  jobs_thread_ = std::jthread([this] { run_jobs(); });
}

void Service::run_jobs() {
  run_discovery();
  run_projection();
  jobs_done_.notify_all();
}

void Service::wait_for_jobs() {
  std::unique_lock lock(state_mutex_);
  jobs_done_.wait(lock, [this] {
    const auto finished = [](JobState s) { return s != JobState::kRunning && s != JobState::kIdle; };
    return finished(discovery_state_) && finished(projection_state_);
  });
}

void Service::run_discovery() {
  {
    std::lock_guard lock(state_mutex_);
    if (discovery_state_ == JobState::kDone) return;
    discovery_state_ = JobState::kRunning;
  }
  try {
    const auto& ws = *workspace_;
    auto result = std::make_shared<const RuleSet>(
        discover(ws.store(), ws.vocab(), ws.matrix(), ws.high_level(), options_.discovery));
    if (options_.cache_dir) save_rules(*options_.cache_dir, *result, ws.store(), options_.discovery);
    std::lock_guard lock(state_mutex_);
    rules_ = std::move(result);
    discovery_state_ = JobState::kDone;
  } catch (const std::exception& e) {
    std::lock_guard lock(state_mutex_);
    discovery_state_ = JobState::kFailed;
    discovery_error_ = e.what();
  }
}

void Service::run_projection() {
  {
    std::lock_guard lock(state_mutex_);
    if (projection_state_ == JobState::kDone || projection_state_ == JobState::kUnavailable) return;
    projection_state_ = JobState::kRunning;
  }
  try {
    const auto& store = workspace_->store();
    auto result = std::make_shared<const Projection2D>(build_projection(store, options_.tsne));
    if (options_.cache_dir) save_projection(*options_.cache_dir, *result, store);
    std::lock_guard lock(state_mutex_);
    projection_ = std::move(result);
    projection_state_ = JobState::kDone;
  } catch (const std::exception& e) {
    std::lock_guard lock(state_mutex_);
    projection_state_ = JobState::kFailed;
    projection_error_ = e.what();
  }
}

std::shared_ptr<const RuleSet> Service::rules() const {
  std::lock_guard lock(state_mutex_);
  return rules_;
}

std::shared_ptr<const Projection2D> Service::projection() const {
  std::lock_guard lock(state_mutex_);
  return projection_;
}

JobState Service::discovery_state() const {
  std::lock_guard lock(state_mutex_);
  return discovery_state_;
}

JobState Service::projection_state() const {
  std::lock_guard lock(state_mutex_);
  return projection_state_;
}

ApiResponse Service::handle(const ApiRequest& request) {
  using Handler = ApiResponse (Service::*)(const ApiRequest&);
  static const std::map<std::pair<std::string, std::string>, Handler> routes = {
      {{"GET", "/summary"}, &Service::get_summary},
      {{"GET", "/rules"}, &Service::get_rules},
      {{"POST", "/rules/evaluate"}, &Service::post_rule_eval},
      {{"GET", "/documents"}, &Service::get_documents},
      {{"GET", "/stats/overall"}, &Service::get_stats_overall},
      {{"GET", "/stats/subpopulation"}, &Service::get_stats_subpopulation},
      {{"GET", "/projection"}, &Service::get_projection},
      {{"POST", "/concepts"}, &Service::post_concepts},
      {{"GET", "/concepts"}, &Service::get_concepts},
      {{"POST", "/concepts/compare"}, &Service::post_concepts_compare},
      {{"GET", "/discovery/status"}, &Service::get_discovery_status},
  };
  std::string_view path = request.path;
  if (!path.starts_with(kPrefix)) return error_response(404, "not found");
  path.remove_prefix(kPrefix.size());
  const auto it = routes.find({request.method, std::string(path)});
  if (it == routes.end()) {
    for (const auto& [key, handler] : routes) {
      if (key.second == path) return error_response(405, "method not allowed");
    }
    return error_response(404, "not found");
  }
  try {
    return (this->*(it->second))(request);
  } catch (const NotReady& e) {
    return error_response(409, e.what());
  } catch (const NotFound& e) {
    return error_response(404, e.what());
  } catch (const ValidationError& e) {
    return error_response(400, e.what());
  } catch (const std::invalid_argument& e) {
    return error_response(400, e.what());
  } catch (const json::exception& e) {
    return error_response(400, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

ApiResponse Service::get_summary(const ApiRequest&) {
  const auto& ws = *workspace_;
  const auto& store = ws.store();
  json features = json::array();
  for (const auto& f : ws.high_level()) {
    features.push_back({{"name", f.name}, {"low", f.thresholds.low}, {"high", f.thresholds.high}});
  }
  json out = {{"n_test", store.test().size()},
              {"n_train", store.train().size()},
              {"classes", store.classes()},
              {"error_count", store.error_count()},
              {"baseline_error_rate", store.baseline_error_rate()},
              {"accuracy", 1.0 - store.baseline_error_rate()},
              {"vocabulary_size", ws.vocab().size()},
              {"min_df", ws.min_df()},
              {"high_level_features", std::move(features)},
              {"corpus_hash", hash_hex(store.content_hash())},
              {"discovery_state", to_string(discovery_state())},
              {"projection_state", to_string(projection_state())},
              {"overview", nullptr}};
  if (const auto ruleset = rules()) {
    const auto report = overview(*ruleset, ws.high_level(), store);
    json tokens = json::array(), high = json::array();
    for (const auto& r : report.top_tokens) tokens.push_back(to_json(r));
    for (const auto& r : report.top_high_level) high.push_back(to_json(r));
    out["overview"] = {{"top_tokens", std::move(tokens)}, {"top_high_level", std::move(high)}};
  }
  return {200, std::move(out)};
}

ApiResponse Service::get_rules(const ApiRequest& request) {
  const auto ruleset = rules();
  if (!ruleset) throw NotReady("discovery has not finished (state: " + to_string(discovery_state()) + ")");

  std::optional<double> min_rate;
  if (const auto v = query_value(request, "min_error_rate")) min_rate = parse_number(*v, "min_error_rate");
  std::optional<std::size_t> max_conditions;
  if (const auto v = query_value(request, "max_conditions")) {
    max_conditions = parse_size(*v, "max_conditions");
  }
  const auto sort = query_value(request, "sort").value_or("error_rate");
  if (sort != "error_rate" && sort != "support") throw ValidationError("'sort' must be error_rate or support");
  const auto page = page_param(request, "page", 1);
  const auto page_size = page_param(request, "page_size", options_.default_page_size);

  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < ruleset->rules.size(); ++i) {
    const auto& rule = ruleset->rules[i];
    if (min_rate && rule.metrics.error_rate < *min_rate) continue;
    if (max_conditions && rule.conditions.size() > *max_conditions) continue;
    selected.push_back(i);
  }
  if (sort == "support") {
    std::stable_sort(selected.begin(), selected.end(), [&](std::size_t a, std::size_t b) {
      return ruleset->rules[a].metrics.support_count > ruleset->rules[b].metrics.support_count;
    });
  }

  json page_rules = json::array();
  for (std::size_t i = (page - 1) * page_size; i < selected.size() && i < page * page_size; ++i) {
    auto item = to_json(ruleset->rules[selected[i]]);
    item["rank"] = selected[i];
    page_rules.push_back(std::move(item));
  }
  const auto bins = error_rate_histogram(ruleset->rules);
  return {200, json{{"total_rules", ruleset->rules.size()},
                    {"matched", selected.size()},
                    {"page", page},
                    {"page_size", page_size},
                    {"sort", sort},
                    {"baseline_error_rate", ruleset->baseline_error_rate},
                    {"min_error_rate", ruleset->min_error_rate},
                    {"rules", std::move(page_rules)},
                    {"histogram", {{"bin_width", 1.0 / kHistogramBins}, {"counts", bins}}}}};
}

json Service::stats_json(const std::vector<Condition>& conditions, const ConceptMap& concepts) const {
  const auto stats = subpopulation_stats(conditions, *workspace_, concepts);
  json buckets = json::object();
  for (const auto& [name, counts] : stats.errors_by_bucket) {
    buckets[name] = {{"low", counts[0]}, {"medium", counts[1]}, {"high", counts[2]}};
  }
  return {{"size", stats.size},
          {"error_count", stats.error_count},
          {"size_by_label", stats.size_by_label},
          {"errors_by_label", stats.errors_by_label},
          {"errors_by_prediction", stats.errors_by_prediction},
          {"errors_by_bucket", std::move(buckets)},
          {"train_frequency", stats.train_frequency},
          {"train_size", stats.train_size}};
}

json Service::attribution_json(const std::vector<std::size_t>& members) const {
  const auto& store = workspace_->store();
  json out = json::object();
  for (const auto& cls : store.classes()) {
    const auto aggregated = aggregate_counts(members, cls, store);
    json tokens = json::array();
    for (const auto& token : chart_order(aggregated)) {
      const auto& counts = aggregated.tokens.at(token);
      tokens.push_back({{"token", token}, {"cnt_pos", counts.positive}, {"cnt_neg", counts.negative}});
    }
    out[cls] = {{"subpop_size", aggregated.subpop_size}, {"tokens", std::move(tokens)}};
  }
  return out;
}

json Service::projection_json(const std::vector<std::size_t>& members) const {
  const auto proj = projection();
  if (!proj) return nullptr;
  const auto& store = workspace_->store();
  json points = json::array();
  for (const auto& p : filter_projection(*proj, members, store.error_labels())) {
    points.push_back({{"index", p.index}, {"id", store.test()[p.index].id}, {"x", p.x}, {"y", p.y},
                      {"error", p.error}});
  }
  return {{"method", to_string(proj->method)}, {"points", std::move(points)}};
}

ApiResponse Service::post_rule_eval(const ApiRequest& request) {
  const auto body = parse_body(request);
  if (!body.is_object() || !body.contains("conditions")) throw ValidationError("body needs 'conditions'");
  const auto concepts = concepts_.snapshot();
  const auto eval = evaluate_rule(conditions_from_json(body["conditions"]), *workspace_, concepts,
                                  options_.discovery.significance());
  Rule rule{eval.conditions, eval.metrics};
  auto out = to_json(rule);
  out["stats"] = stats_json(eval.conditions, concepts);
  out["attributions"] = attribution_json(eval.members);
  out["projection"] = projection_json(eval.members);
  out["projection_state"] = to_string(projection_state());
  return {200, std::move(out)};
}

ApiResponse Service::get_documents(const ApiRequest& request) {
  const auto conditions = rule_param(request);
  const auto page = page_param(request, "page", 1);
  const auto page_size = page_param(request, "page_size", options_.default_page_size);
  const auto& store = workspace_->store();
  const auto result = document_page(conditions, page, page_size, *workspace_, concepts_.snapshot());
  json docs = json::array();
  for (const auto& view : result.documents) {
    const auto& rec = store.test()[view.index];
    json highlights = json::array();
    for (const auto& h : view.highlights) {
      highlights.push_back({{"part", h.part}, {"begin", h.begin}, {"end", h.end}, {"token", h.token}});
    }
    docs.push_back({{"index", view.index},
                    {"id", rec.id},
                    {"texts", rec.texts},
                    {"label", rec.label},
                    {"prediction", *rec.prediction},
                    {"error", view.error},
                    {"highlights", std::move(highlights)}});
  }
  return {200, json{{"total", result.total},
                    {"page", result.page},
                    {"page_size", result.page_size},
                    {"documents", std::move(docs)}}};
}

ApiResponse Service::get_stats_overall(const ApiRequest&) {
  const auto& store = workspace_->store();
  auto out = stats_json({}, {});
  out["baseline_error_rate"] = store.baseline_error_rate();
  out["accuracy"] = 1.0 - store.baseline_error_rate();
  return {200, std::move(out)};
}

ApiResponse Service::get_stats_subpopulation(const ApiRequest& request) {
  const auto conditions = rule_param(request);
  if (conditions.empty()) throw ValidationError("'rule' needs at least one condition");
  const auto concepts = concepts_.snapshot();
  const auto eval = evaluate_rule(conditions, *workspace_, concepts, options_.discovery.significance());
  auto out = stats_json(eval.conditions, concepts);
  out["metrics"] = to_json(eval.metrics);
  out["description"] = describe(eval.conditions);
  return {200, std::move(out)};
}

ApiResponse Service::get_projection(const ApiRequest& request) {
  const auto state = projection_state();
  if (state == JobState::kUnavailable) throw NotFound("no embeddings or projection were ingested");
  if (state == JobState::kFailed) {
    std::lock_guard lock(state_mutex_);
    return error_response(500, "projection failed: " + projection_error_);
  }
  const auto proj = projection();
  if (!proj) throw NotReady("projection has not finished (state: " + to_string(state) + ")");
  const auto conditions = rule_param(request);
  std::vector<std::size_t> members;
  if (conditions.empty()) {
    members.resize(workspace_->store().test().size());
    std::iota(members.begin(), members.end(), std::size_t{0});
  } else {
    members = matching_test_docs(conditions, *workspace_, concepts_.snapshot()).indices();
  }
  auto out = projection_json(members);
  out["initial_kl"] = proj->initial_kl;
  out["final_kl"] = proj->final_kl;
  return {200, std::move(out)};
}

ApiResponse Service::post_concepts(const ApiRequest& request) {
  const auto body = parse_body(request);
  if (!body.is_object()) throw ValidationError("body must be an object");
  const auto name = body.at("name").get<std::string>();
  const auto phrases = body.at("tokens").get<std::vector<std::string>>();
  const bool edit = body.contains("id") && !body["id"].is_null();
  const auto created = edit ? concepts_.update(body["id"].get<int>(), name, phrases)
                            : concepts_.create(name, phrases);
  auto out = concept_json(created);
  out["metrics"] = to_json(evaluate_concept(created, *workspace_, options_.discovery.significance()).metrics);
  return {edit ? 200 : 201, std::move(out)};
}

ApiResponse Service::get_concepts(const ApiRequest&) {
  json list = json::array();
  for (const auto& [id, c] : concepts_.snapshot()) {
    auto item = concept_json(c);
    item["metrics"] = to_json(evaluate_concept(c, *workspace_, options_.discovery.significance()).metrics);
    list.push_back(std::move(item));
  }
  return {200, json{{"concepts", std::move(list)}}};
}

ApiResponse Service::post_concepts_compare(const ApiRequest& request) {
  const auto body = parse_body(request);
  if (!body.is_object() || !body.contains("ids")) throw ValidationError("body needs 'ids'");
  const auto ids = body["ids"].get<std::vector<int>>();
  const auto snapshot = concepts_.snapshot();
  std::vector<ConceptSummary> summaries;
  for (int id : ids) {
    const auto it = snapshot.find(id);
    if (it == snapshot.end()) throw ValidationError("unknown concept id " + std::to_string(id));
    summaries.push_back(evaluate_concept(it->second, *workspace_, options_.discovery.significance()));
  }
  const auto comparison = compare_concepts(std::move(summaries));
  json concepts = json::array(), pairs = json::array();
  for (const auto& s : comparison.concepts) {
    concepts.push_back({{"id", s.concept_id}, {"name", s.name}, {"metrics", to_json(s.metrics)}});
  }
  for (const auto& p : comparison.pairs) {
    pairs.push_back({{"first", p.first}, {"second", p.second}, {"overlap", p.overlap}});
  }
  return {200, json{{"concepts", std::move(concepts)}, {"pairs", std::move(pairs)}}};
}

ApiResponse Service::get_discovery_status(const ApiRequest&) {
  const auto ruleset = rules();
  const auto& c = options_.discovery;
  json out = {{"state", to_string(discovery_state())},
              {"projection_state", to_string(projection_state())},
              {"rule_count", ruleset ? json(ruleset->rules.size()) : json(nullptr)},
              {"candidate_count", ruleset ? json(ruleset->candidate_count) : json(nullptr)},
              {"config",
               {{"max_conditions", c.max_conditions},
                {"min_support", c.min_support_fraction},
                {"min_error_rate", c.min_error_rate ? json(*c.min_error_rate) : json("auto")},
                {"seed", c.rng_seed},
                {"use_forest_filter", c.use_forest_filter}}}};
  std::lock_guard lock(state_mutex_);
  if (!discovery_error_.empty()) out["error"] = discovery_error_;
  return {200, std::move(out)};
}

namespace {

void install_routes(httplib::Server& server, Service& service) {
  const auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    ApiRequest request{req.method, req.path, {}, req.body};
    for (const auto& [key, value] : req.params) request.query.emplace(key, value);
    const auto response = service.handle(request);
    res.status = response.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(response.body.dump(), "application/json");
  };
  server.Get(".*", dispatch);
  server.Post(".*", dispatch);
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  });
}

}  // namespace

void Service::listen(const std::string& host, int port) {
  if (!http_) http_ = std::make_unique<Http>();
  install_routes(http_->server, *this);
  if (!http_->server.listen(host, port)) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
}

int Service::listen_in_background(const std::string& host) {
  if (!http_) http_ = std::make_unique<Http>();
  install_routes(http_->server, *this);
  const int port = http_->server.bind_to_any_port(host);
  if (port < 0) throw std::runtime_error("cannot bind to " + host);
  http_->thread = std::thread([this] { http_->server.listen_after_bind(); });
  http_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!http_) return;
  http_->server.stop();
  if (http_->thread.joinable()) http_->thread.join();
}

}  // namespace errscope
