#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "errscope/service.hpp"
#include "httplib.h"

using namespace errscope;
using nlohmann::json;

namespace {

const std::filesystem::path kData = ERRSCOPE_TEST_DATA;

ServiceOptions fixture_options() {
  ServiceOptions options;
  options.discovery.rng_seed = 3;
  options.tsne.seed = 3;
  return options;
}

std::shared_ptr<const Workspace> fixture_workspace() {
  static const auto ws = Workspace::build(load_dataset(kData / "fixture.jsonl"));
  return ws;
}

// A service over the fixture with both jobs finished.
Service& ready_service() {
  static Service service(fixture_workspace(), fixture_options());
  static const bool ran = [] {
    service.run_jobs();
    return true;
  }();
  (void)ran;
  return service;
}

ApiResponse get(Service& s, const std::string& path, std::map<std::string, std::string> query = {}) {
  return s.handle({"GET", "/api/v1" + path, std::move(query), ""});
}

ApiResponse post(Service& s, const std::string& path, const json& body) {
  return s.handle({"POST", "/api/v1" + path, {}, body.dump()});
}

// Served numbers must serialize to the same bytes as the engine's values.
void same_number(const json& served, double engine) {
  CHECK(served.is_number());
  CHECK(served.dump() == json(engine).dump());
  CHECK(served.get<double>() == engine);
}

void same_metrics(const json& served, const RuleMetrics& m) {
  CHECK(served.at("support_count").get<std::size_t>() == m.support_count);
  CHECK(served.at("error_count").get<std::size_t>() == m.error_count);
  same_number(served.at("support_fraction"), m.support_fraction);
  if (!m.defined()) {
    CHECK(served.at("error_rate").is_null());
    CHECK_FALSE(served.at("defined").get<bool>());
    return;
  }
  same_number(served.at("error_rate"), m.error_rate);
  same_number(served.at("p_value"), m.p_value);
  same_number(served.at("ci_low"), m.ci_low);
  same_number(served.at("ci_high"), m.ci_high);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("errscope_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("summary") {
  auto& s = ready_service();
  const auto r = get(s, "/summary");
  REQUIRE(r.status == 200);
  const auto& store = s.workspace().store();
  CHECK(r.body["n_test"] == store.test().size());
  CHECK(r.body["n_train"] == store.train().size());
  CHECK(r.body["error_count"] == store.error_count());
  same_number(r.body["baseline_error_rate"], store.baseline_error_rate());
  same_number(r.body["accuracy"], 1.0 - store.baseline_error_rate());
  CHECK(r.body["discovery_state"] == "done");
  CHECK(r.body["high_level_features"].size() == s.workspace().high_level().size());
  const auto report = overview(*s.rules(), s.workspace().high_level(), store);
  REQUIRE(r.body["overview"]["top_tokens"].size() == report.top_tokens.size());
  for (std::size_t i = 0; i < report.top_tokens.size(); ++i) {
    same_metrics(r.body["overview"]["top_tokens"][i]["metrics"], report.top_tokens[i].metrics);
  }
}

TEST_CASE("rules match the engine and the histogram partitions them") {
  auto& s = ready_service();
  const auto ws = fixture_workspace();
  const auto engine = discover(ws->store(), ws->vocab(), ws->matrix(), ws->high_level(), fixture_options().discovery);
  const auto r = get(s, "/rules", {{"page_size", "1000"}});
  REQUIRE(r.status == 200);
  REQUIRE_FALSE(engine.rules.empty());
  REQUIRE(r.body["rules"].size() == engine.rules.size());
  for (std::size_t i = 0; i < engine.rules.size(); ++i) {
    const auto& served = r.body["rules"][i];
    CHECK(served["description"] == describe(engine.rules[i].conditions));
    CHECK(conditions_from_json(served["conditions"]) == engine.rules[i].conditions);
    same_metrics(served["metrics"], engine.rules[i].metrics);
  }
  std::size_t total = 0;
  for (const auto& c : r.body["histogram"]["counts"]) total += c.get<std::size_t>();
  CHECK(r.body["histogram"]["counts"].size() == 20);
  CHECK(total == engine.rules.size());
  same_number(r.body["baseline_error_rate"], engine.baseline_error_rate);
}

TEST_CASE("rule filters and sorting") {
  auto& s = ready_service();
  const auto by_rate = get(s, "/rules", {{"sort", "error_rate"}, {"page_size", "1000"}}).body["rules"];
  for (std::size_t i = 1; i < by_rate.size(); ++i) {
    CHECK(by_rate[i - 1]["metrics"]["error_rate"].get<double>() >= by_rate[i]["metrics"]["error_rate"].get<double>());
  }
  const auto by_support = get(s, "/rules", {{"sort", "support"}, {"page_size", "1000"}}).body["rules"];
  for (std::size_t i = 1; i < by_support.size(); ++i) {
    CHECK(by_support[i - 1]["metrics"]["support_count"].get<std::size_t>() >=
          by_support[i]["metrics"]["support_count"].get<std::size_t>());
  }
  const auto singles = get(s, "/rules", {{"max_conditions", "1"}, {"page_size", "1000"}}).body;
  for (const auto& rule : singles["rules"]) CHECK(rule["conditions"].size() == 1);
  CHECK(singles["total_rules"] == by_rate.size());
  const auto high = get(s, "/rules", {{"min_error_rate", "0.5"}, {"page_size", "1000"}}).body["rules"];
  for (const auto& rule : high) CHECK(rule["metrics"]["error_rate"].get<double>() >= 0.5);
  const auto paged = get(s, "/rules", {{"page", "2"}, {"page_size", "2"}}).body["rules"];
  if (by_rate.size() > 2) CHECK(paged[0] == by_rate[2]);
  CHECK(get(s, "/rules", {{"sort", "alpha"}}).status == 400);
  CHECK(get(s, "/rules", {{"page", "0"}}).status == 400);
  CHECK(get(s, "/rules", {{"max_conditions", "x"}}).status == 400);
}

TEST_CASE("rules are not ready before discovery") {
  Service fresh(fixture_workspace(), fixture_options());
  const auto r = get(fresh, "/rules");
  CHECK(r.status == 409);
  CHECK(get(fresh, "/discovery/status").body["state"] == "idle");
  CHECK(get(fresh, "/projection").status == 409);
}

TEST_CASE("rule evaluation bundle") {
  auto& s = ready_service();
  const auto& ruleset = *s.rules();
  REQUIRE_FALSE(ruleset.rules.empty());
  const auto& rule = ruleset.rules.front();
  json conditions = json::array();
  for (const auto& c : rule.conditions) conditions.push_back(to_json(c));
  const auto r = post(s, "/rules/evaluate", {{"conditions", conditions}});
  REQUIRE(r.status == 200);
  same_metrics(r.body["metrics"], rule.metrics);

  const auto& ws = s.workspace();
  const auto members = matching_test_docs(rule.conditions, ws, {}).indices();
  CHECK(r.body["stats"]["size"] == members.size());
  for (const auto& cls : ws.store().classes()) {
    const auto agg = aggregate_counts(members, cls, ws.store());
    const auto order = chart_order(agg);
    const auto& served = r.body["attributions"][cls]["tokens"];
    REQUIRE(served.size() == order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      CHECK(served[i]["token"] == order[i]);
      CHECK(served[i]["cnt_pos"] == agg.tokens.at(order[i]).positive);
      CHECK(served[i]["cnt_neg"] == agg.tokens.at(order[i]).negative);
    }
  }
  const auto proj = s.projection();
  REQUIRE(proj);
  const auto& points = r.body["projection"]["points"];
  REQUIRE(points.size() == members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    CHECK(points[i]["index"] == members[i]);
    same_number(points[i]["x"], proj->points[members[i]][0]);
    same_number(points[i]["y"], proj->points[members[i]][1]);
  }
}

TEST_CASE("rule drafts: text form, zero support, unknown features") {
  auto& s = ready_service();
  const auto text = post(s, "/rules/evaluate", {{"conditions", {"token:not"}}});
  const auto object = post(s, "/rules/evaluate", {{"conditions", {{{"type", "token"}, {"tokens", "not"}}}}});
  REQUIRE(text.status == 200);
  CHECK(text.body == object.body);

  const auto empty = post(s, "/rules/evaluate", {{"conditions", {"token:xylophone"}}});
  REQUIRE(empty.status == 200);
  CHECK(empty.body["metrics"]["support_count"] == 0);
  CHECK(empty.body["metrics"]["defined"] == false);
  CHECK(empty.body["stats"]["size"] == 0);

  const auto bad = post(s, "/rules/evaluate",
                        {{"conditions", {{{"type", "high_level"}, {"feature", "sentiment"}, {"bucket", "low"}}}}});
  CHECK(bad.status == 400);
  CHECK(bad.body["error"].get<std::string>().find("sentiment") != std::string::npos);
  CHECK(post(s, "/rules/evaluate", {{"conditions", {"token:a", "token:b", "token:c", "token:d"}}}).status == 400);
  CHECK(s.handle({"POST", "/api/v1/rules/evaluate", {}, "{nope"}).status == 400);
}

TEST_CASE("documents: errors first, pagination, highlights") {
  auto& s = ready_service();
  const auto& store = s.workspace().store();
  const std::string rule = R"(["token:is"])";
  std::vector<std::size_t> all;
  bool seen_correct = false;
  for (std::size_t page = 1;; ++page) {
    const auto r = get(s, "/documents", {{"rule", rule}, {"page", std::to_string(page)}, {"page_size", "7"}});
    REQUIRE(r.status == 200);
    if (r.body["documents"].empty()) break;
    for (const auto& doc : r.body["documents"]) {
      const auto index = doc["index"].get<std::size_t>();
      all.push_back(index);
      const bool error = doc["error"].get<bool>();
      CHECK(error == (store.error_labels()[index] != 0));
      if (!error) seen_correct = true;
      if (error) CHECK_FALSE(seen_correct);
      for (const auto& h : doc["highlights"]) {
        const auto& text = store.test()[index].texts[h["part"].get<std::size_t>()];
        const auto b = h["begin"].get<std::size_t>(), e = h["end"].get<std::size_t>();
        CHECK(normalize_token(text.substr(b, e - b)) == "is");
      }
    }
  }
  std::sort(all.begin(), all.end());
  CHECK(all == matching_test_docs({Condition::token_present({"is"})}, s.workspace(), {}).indices());
  CHECK(get(s, "/documents", {{"rule", "[bad"}}).status == 400);
  CHECK(get(s, "/documents").body["total"] == store.test().size());
}

TEST_CASE("overall and subpopulation statistics") {
  auto& s = ready_service();
  const auto& store = s.workspace().store();
  const auto overall = get(s, "/stats/overall");
  REQUIRE(overall.status == 200);
  CHECK(overall.body["size"] == store.test().size());
  CHECK(overall.body["error_count"] == store.error_count());
  same_number(overall.body["baseline_error_rate"], store.baseline_error_rate());

  const auto sub = get(s, "/stats/subpopulation", {{"rule", R"(["token:not"])"}});
  REQUIRE(sub.status == 200);
  const auto engine = subpopulation_stats({Condition::token_present({"not"})}, s.workspace(), {});
  CHECK(sub.body["size"] == engine.size);
  CHECK(sub.body["error_count"] == engine.error_count);
  CHECK(sub.body["train_size"] == engine.train_size);
  CHECK(sub.body["train_frequency"]["token:not"] == json(engine.train_frequency.at("token:not")));
  const auto eval = evaluate_rule({Condition::token_present({"not"})}, s.workspace(), {},
                                  fixture_options().discovery.significance());
  same_metrics(sub.body["metrics"], eval.metrics);
  CHECK(get(s, "/stats/subpopulation").status == 400);
}

TEST_CASE("projection") {
  auto& s = ready_service();
  const auto r = get(s, "/projection");
  REQUIRE(r.status == 200);
  const auto proj = s.projection();
  CHECK(r.body["method"] == "tsne");
  REQUIRE(r.body["points"].size() == proj->points.size());
  for (std::size_t i = 0; i < proj->points.size(); ++i) {
    same_number(r.body["points"][i]["x"], proj->points[i][0]);
    same_number(r.body["points"][i]["y"], proj->points[i][1]);
  }
  same_number(r.body["final_kl"], proj->final_kl);
  CHECK(proj->final_kl < proj->initial_kl);
  const auto sub = get(s, "/projection", {{"rule", R"(["token:not"])"}});
  CHECK(sub.body["points"].size() ==
        matching_test_docs({Condition::token_present({"not"})}, s.workspace(), {}).count());
}

TEST_CASE("projection is unavailable without embeddings") {
  std::vector<DocumentRecord> recs;
  for (auto rec : fixture_workspace()->store().test()) {
    rec.embedding.clear();
    recs.push_back(std::move(rec));
  }
  Service s(Workspace::build(DatasetStore::build(recs)), fixture_options());
  CHECK(s.projection_state() == JobState::kUnavailable);
  CHECK(get(s, "/projection").status == 404);
}

TEST_CASE("concepts: create, list, edit, compare") {
  Service s(fixture_workspace(), fixture_options());
  const auto created = post(s, "/concepts", {{"name", "negation"}, {"tokens", {"not", "never"}}});
  REQUIRE(created.status == 201);
  const int id = created.body["id"];
  const auto concept_def = Concept{id, "negation", {{"never"}, {"not"}}};
  same_metrics(created.body["metrics"],
               evaluate_concept(concept_def, s.workspace(), fixture_options().discovery.significance()).metrics);
  CHECK(created.body["tokens"] == json({"never", "not"}));

  const auto other = post(s, "/concepts", {{"name", "outdoors"}, {"tokens", {"park", "beach", "river"}}});
  REQUIRE(other.status == 201);
  CHECK(post(s, "/concepts", {{"name", "negation"}, {"tokens", {"no"}}}).status == 400);

  const auto list = get(s, "/concepts");
  REQUIRE(list.body["concepts"].size() == 2);

  const auto cmp = post(s, "/concepts/compare", {{"ids", {id, other.body["id"]}}});
  REQUIRE(cmp.status == 200);
  REQUIRE(cmp.body["pairs"].size() == 1);
  const auto& a = cmp.body["concepts"][0]["metrics"];
  const auto& b = cmp.body["concepts"][1]["metrics"];
  CHECK(cmp.body["pairs"][0]["overlap"] ==
        intervals_overlap(a["ci_low"], a["ci_high"], b["ci_low"], b["ci_high"]));
  CHECK(post(s, "/concepts/compare", {{"ids", {id}}}).status == 400);
  CHECK(post(s, "/concepts/compare", {{"ids", {id, 99}}}).status == 400);

  // concept conditions evaluate like the concept itself
  const auto eval = post(s, "/rules/evaluate", {{"conditions", {{{"type", "concept"}, {"id", id}}}}});
  CHECK(eval.body["metrics"] == created.body["metrics"]);

  const auto edited = post(s, "/concepts", {{"id", id}, {"name", "negation"}, {"tokens", {"not"}}});
  REQUIRE(edited.status == 200);
  CHECK(edited.body["tokens"] == json({"not"}));
  CHECK(post(s, "/concepts", {{"id", 77}, {"name", "z"}, {"tokens", {"not"}}}).status == 400);
}

TEST_CASE("routing errors") {
  auto& s = ready_service();
  CHECK(get(s, "/nothing").status == 404);
  CHECK(s.handle({"GET", "/other", {}, ""}).status == 404);
  CHECK(s.handle({"POST", "/api/v1/summary", {}, "{}"}).status == 405);
  const auto status = get(s, "/discovery/status");
  CHECK(status.body["state"] == "done");
  CHECK(status.body["rule_count"] == s.rules()->rules.size());
}

TEST_CASE("reads are repeatable and consistent under concurrency") {
  auto& s = ready_service();
  const auto first = get(s, "/rules", {{"page_size", "1000"}}).body.dump();
  const auto eval_body = json{{"conditions", {"token:not"}}};
  const auto eval_first = post(s, "/rules/evaluate", eval_body).body.dump();
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 10; ++i) {
        if (get(s, "/rules", {{"page_size", "1000"}}).body.dump() != first) ++mismatches;
        if (post(s, "/rules/evaluate", eval_body).body.dump() != eval_first) ++mismatches;
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(mismatches == 0);
}

TEST_CASE("golden rule page") {
  auto& s = ready_service();
  const auto served = get(s, "/rules", {{"page_size", "1000"}}).body;
  const auto path = kData / "golden_rules.json";
  if (std::getenv("ERRSCOPE_UPDATE_GOLDEN")) std::ofstream(path) << served.dump(1) << '\n';
  std::ifstream in(path);
  REQUIRE(in);
  CHECK(json::parse(in) == served);
}

TEST_CASE("cached artifacts are reused") {
  const auto dir = temp_dir("cache");
  const DataDir data{dir};
  ingest_to(kData / "fixture.jsonl", data);
  auto options = fixture_options();
  options.cache_dir = data;
  std::string first_rules, first_projection;
  {
    Service s(Workspace::build(load_dataset(data.corpus())), options);
    s.start();
    s.wait_for_jobs();
    first_rules = get(s, "/rules", {{"page_size", "1000"}}).body.dump();
    first_projection = get(s, "/projection").body.dump();
  }
  CHECK(std::filesystem::exists(data.rules()));
  CHECK(std::filesystem::exists(data.projection()));
  Service again(Workspace::build(load_dataset(data.corpus())), options);
  again.start();
  CHECK(again.discovery_state() == JobState::kDone);
  again.wait_for_jobs();
  CHECK(get(again, "/rules", {{"page_size", "1000"}}).body.dump() == first_rules);
  CHECK(get(again, "/projection").body.dump() == first_projection);

  options.discovery.rng_seed = 99;
  CHECK_FALSE(load_cached_rules(data, again.workspace().store(), options.discovery));
  std::filesystem::remove_all(dir);
}

TEST_CASE("HTTP round trip on a real socket") {
  auto& s = ready_service();
  const int port = s.listen_in_background("127.0.0.1");
  httplib::Client client("127.0.0.1", port);
  const auto res = client.Get("/api/v1/rules?page_size=5&sort=support");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == get(s, "/rules", {{"page_size", "5"}, {"sort", "support"}}).body.dump());
  const auto eval = client.Post("/api/v1/rules/evaluate", R"({"conditions":["token:not"]})", "application/json");
  REQUIRE(eval);
  CHECK(eval->body == post(s, "/rules/evaluate", {{"conditions", {"token:not"}}}).body.dump());
  const auto missing = client.Get("/api/v1/none");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  s.stop();
}

TEST_CASE("command line: ingest, discover, report") {
  const auto dir = temp_dir("cli");
  const std::string cli = ERRSCOPE_CLI;
  const auto data = (dir / "data").string();
  const auto input = (kData / "fixture.jsonl").string();
  REQUIRE(std::system((cli + " ingest --input " + input + " --out " + data + " > /dev/null").c_str()) == 0);
  REQUIRE(std::system((cli + " discover --data " + data + " --seed 3 > " + (dir / "rules.out").string() +
                       " 2>/dev/null").c_str()) == 0);
  REQUIRE(std::system((cli + " report --data " + data + " --seed 3 --format html > " +
                       (dir / "report.html").string()).c_str()) == 0);
  std::ifstream rules_out(dir / "rules.out");
  std::stringstream lines;
  lines << rules_out.rdbuf();
  const auto ws = fixture_workspace();
  const auto engine = discover(ws->store(), ws->vocab(), ws->matrix(), ws->high_level(), fixture_options().discovery);
  std::string expected;
  for (const auto& rule : engine.rules) expected += format_rule_line(rule) + "\n";
  CHECK(lines.str() == expected);
  std::ifstream html(dir / "report.html");
  std::string page((std::istreambuf_iterator<char>(html)), std::istreambuf_iterator<char>());
  CHECK(page.find("<table>") != std::string::npos);
  CHECK(std::system((cli + " ingest --input /nonexistent --out " + data + " 2>/dev/null").c_str()) != 0);
  std::filesystem::remove_all(dir);
}

}
