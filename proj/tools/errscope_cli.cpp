#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "errscope/analysis.hpp"
#include "errscope/discovery.hpp"
#include "errscope/service.hpp"
#include "errscope/storage.hpp"

namespace {

using namespace errscope;

struct DiscoverArgs {
  std::string data;
  std::size_t max_conditions = 2;
  double min_support = 0.05;
  std::string min_error_rate = "auto";
  std::uint64_t seed = 0;
  bool no_forest = false;
  std::size_t trees = 100;
  std::optional<std::size_t> min_df;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", data, "data directory written by `ingest`")->required();
    cmd->add_option("--max-conditions", max_conditions, "conditions per rule (1-3)")->capture_default_str();
    cmd->add_option("--min-support", min_support, "minimum support fraction")->capture_default_str();
    cmd->add_option("--min-error-rate", min_error_rate, "minimum error rate, or `auto` for the baseline")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "random seed")->capture_default_str();
    cmd->add_flag("--no-forest", no_forest, "enumerate all vocabulary features");
    cmd->add_option("--trees", trees, "trees in the filter forest")->capture_default_str();
    cmd->add_option("--min-df", min_df, "vocabulary document-frequency floor");
  }

  DiscoveryConfig config() const {
    DiscoveryConfig c;
    c.max_conditions = max_conditions;
    c.min_support_fraction = min_support;
    if (min_error_rate != "auto") c.min_error_rate = std::stod(min_error_rate);
    c.rng_seed = seed;
    c.use_forest_filter = !no_forest;
    c.n_trees = trees;
    c.validate();
    return c;
  }
};

std::shared_ptr<const Workspace> load_workspace(const DataDir& dir, std::optional<std::size_t> min_df) {
  return Workspace::build(load_dataset(dir.corpus()), min_df);
}

RuleSet rules_for(const DataDir& dir, const Workspace& ws, const DiscoveryConfig& config) {
  if (auto cached = load_cached_rules(dir, ws.store(), config)) return std::move(*cached);
  auto rules = discover(ws.store(), ws.vocab(), ws.matrix(), ws.high_level(), config);
  save_rules(dir, rules, ws.store(), config);
  return rules;
}

std::string html_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void print_text_report(std::ostream& out, const Workspace& ws, const RuleSet& rules, std::size_t top) {
  const auto& store = ws.store();
  out << "test documents: " << store.test().size() << "\n"
      << "train documents: " << store.train().size() << "\n"
      << "errors: " << store.error_count() << "\n"
      << "baseline error rate: " << format_double(store.baseline_error_rate()) << "\n"
      << "min error rate: " << format_double(rules.min_error_rate) << "\n"
      << "rules: " << rules.rules.size() << "\n\n";
  for (std::size_t i = 0; i < rules.rules.size() && i < top; ++i) {
    const auto& r = rules.rules[i];
    out << i + 1 << ". " << describe(r.conditions) << "\n"
        << "   support " << r.metrics.support_count << " (" << format_double(r.metrics.support_fraction)
        << "), error rate " << format_double(r.metrics.error_rate) << ", p " << format_double(r.metrics.p_value)
        << ", 95% CI [" << format_double(r.metrics.ci_low) << ", " << format_double(r.metrics.ci_high)
        << "]\n";
  }
}

void print_html_report(std::ostream& out, const Workspace& ws, const RuleSet& rules, std::size_t top) {
  const auto& store = ws.store();
  out << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Error rules</title>\n"
      << "<style>body{font-family:sans-serif}td,th{padding:2px 8px;text-align:left}</style>"
      << "</head><body>\n<h1>Error rules</h1>\n<p>" << store.test().size() << " test documents, "
      << store.error_count() << " errors, baseline error rate "
      << format_double(store.baseline_error_rate()) << "</p>\n<table>\n"
      << "<tr><th>#</th><th>rule</th><th>support</th><th>error rate</th><th>p-value</th><th>95% CI</th></tr>\n";
  for (std::size_t i = 0; i < rules.rules.size() && i < top; ++i) {
    const auto& r = rules.rules[i];
    out << "<tr><td>" << i + 1 << "</td><td>" << html_escape(describe(r.conditions)) << "</td><td>"
        << r.metrics.support_count << "</td><td>" << format_double(r.metrics.error_rate) << "</td><td>"
        << format_double(r.metrics.p_value) << "</td><td>[" << format_double(r.metrics.ci_low) << ", "
        << format_double(r.metrics.ci_high) << "]</td></tr>\n";
  }
  out << "</table>\n</body></html>\n";
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-prone subpopulation discovery for text classifiers"};
  app.require_subcommand(1);

  std::string input, out_dir;
  auto* ingest = app.add_subcommand("ingest", "validate a JSONL corpus and write a data directory");
  ingest->add_option("--input", input, "JSONL records")->required();
  ingest->add_option("--out", out_dir, "data directory")->required();

  DiscoverArgs discover_args;
  auto* discover_cmd = app.add_subcommand("discover", "discover error rules and write rules.txt");
  discover_args.add_to(discover_cmd);

  DiscoverArgs report_args;
  std::string format = "text";
  std::size_t top = 20;
  auto* report = app.add_subcommand("report", "render discovered rules");
  report_args.add_to(report);
  report->add_option("--format", format, "text or html")->check(CLI::IsMember({"text", "html"}));
  report->add_option("--top", top, "rules to show")->capture_default_str();

  DiscoverArgs serve_args;
  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "serve the HTTP API");
  serve_args.add_to(serve);
  serve->add_option("--port", port, "port")->capture_default_str();
  serve->add_option("--host", host, "bind address")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto store = ingest_to(input, DataDir{out_dir});
      std::cout << store.summary() << "\n";
    } else if (*discover_cmd) {
      const DataDir dir{discover_args.data};
      const auto config = discover_args.config();
      const auto ws = load_workspace(dir, discover_args.min_df);
      auto rules = discover(ws->store(), ws->vocab(), ws->matrix(), ws->high_level(), config);
      save_rules(dir, rules, ws->store(), config);
      for (const auto& rule : rules.rules) std::cout << format_rule_line(rule) << "\n";
      std::cerr << rules.rules.size() << " rules written to " << dir.rules().string() << "\n";
    } else if (*report) {
      const DataDir dir{report_args.data};
      const auto ws = load_workspace(dir, report_args.min_df);
      const auto rules = rules_for(dir, *ws, report_args.config());
      if (format == "html") {
        print_html_report(std::cout, *ws, rules, top);
      } else {
        print_text_report(std::cout, *ws, rules, top);
      }
    } else if (*serve) {
      const DataDir dir{serve_args.data};
      ServiceOptions options;
      options.discovery = serve_args.config();
      options.tsne.seed = serve_args.seed;
      options.cache_dir = dir;
      Service service(load_workspace(dir, serve_args.min_df), options);
      service.start();
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on http://" << host << ":" << port << "/api/v1\n";
      service.listen(host, port);
      g_service = nullptr;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
