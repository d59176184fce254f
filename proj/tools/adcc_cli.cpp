// adcc: run crash-consistency experiments from a JSON config.
//
//   adcc run   --config spec.json [overrides] [--out report.json]
//   adcc sweep --config spec.json --axis cache_bytes --values 4096,8192 [--out table.csv]
//   adcc spec  --config spec.json      (print the normalized spec)
//
// Exit status: 0 when every result_valid is true, 1 when some run failed its
// oracle, 2 on usage or configuration errors.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "adcc/adcc.h"

namespace {

using nlohmann::json;

struct Overrides {
  std::optional<std::string> workload, mode, crash_label;
  std::optional<std::uint64_t> cache_bytes, line_size, crash_occurrence, crash_after_ops, seed,
      repetitions;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--workload", o.workload, "cg | abft | mc")
      ->check(CLI::IsMember({"cg", "abft", "mc"}));
  cmd->add_option("--mode", o.mode, "native | checkpoint | algorithm")
      ->check(CLI::IsMember({"native", "checkpoint", "algorithm"}));
  cmd->add_option("--cache-bytes", o.cache_bytes, "cache capacity in bytes");
  cmd->add_option("--line-size", o.line_size, "cache line size in bytes");
  cmd->add_option("--crash-label", o.crash_label, "crash at this statement label");
  cmd->add_option("--crash-occurrence", o.crash_occurrence, "1-based label occurrence");
  cmd->add_option("--crash-after-ops", o.crash_after_ops, "crash before memory op N+1");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--repetitions", o.repetitions, "reruns checked for identical reports");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config '" + path + "': " + e.what());
  }
}

void apply_overrides(json& spec, const Overrides& o) {
  if (o.workload) spec["workload"] = *o.workload;
  if (o.mode) spec["mode"] = *o.mode;
  if (o.cache_bytes) spec["cache"]["capacity"] = *o.cache_bytes;
  if (o.line_size) spec["cache"]["line_size"] = *o.line_size;
  if (o.seed) spec["seed"] = *o.seed;
  if (o.repetitions) spec["repetitions"] = *o.repetitions;
  if (o.crash_after_ops) {
    spec["crash"] = {{"kind", "after_op_count"}, {"op_count", *o.crash_after_ops}};
  }
  if (o.crash_label || o.crash_occurrence) {
    json& c = spec["crash"];
    c["kind"] = "at_label";
    c.erase("op_count");
    if (o.crash_label) c["label"] = *o.crash_label;
    if (o.crash_occurrence) c["occurrence"] = *o.crash_occurrence;
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

std::vector<std::uint64_t> parse_values(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const unsigned long long v = std::stoull(item, &used);
    if (used != item.size()) throw std::runtime_error("bad sweep value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

int report_error(adcc_status s) {
  std::cerr << "adcc: " << adcc_status_name(s) << ": " << adcc_last_error_message() << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crash-consistency experiments on a simulated NVM cache hierarchy"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(adcc_version()));

  std::string config, out;
  Overrides ov;

  CLI::App* run = app.add_subcommand("run", "run one experiment and print its JSON report");
  run->add_option("--config", config, "JSON experiment spec")->check(CLI::ExistingFile);
  run->add_option("--out", out, "report path (default stdout)");
  add_overrides(run, ov);

  std::string axis, values, reports_out;
  CLI::App* sweep = app.add_subcommand("sweep", "run the experiment once per axis value, emit CSV");
  sweep->add_option("--config", config, "JSON experiment spec")->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "cache_bytes | problem_size | crash_point")
      ->required()
      ->check(CLI::IsMember({"cache_bytes", "problem_size", "crash_point"}));
  sweep->add_option("--values", values, "comma separated axis values")->required();
  sweep->add_option("--out", out, "CSV path (default stdout)");
  sweep->add_option("--reports", reports_out, "also write the JSON reports here");
  add_overrides(sweep, ov);

  CLI::App* spec_cmd = app.add_subcommand("spec", "print the normalized spec");
  spec_cmd->add_option("--config", config, "JSON experiment spec")->check(CLI::ExistingFile);
  add_overrides(spec_cmd, ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    json spec = load_config(config);
    apply_overrides(spec, ov);
    const std::string text = spec.dump();

    if (*spec_cmd) {
      char* normalized = nullptr;
      const adcc_status s = adcc_spec_normalize(text.c_str(), &normalized);
      if (s != ADCC_OK) return report_error(s);
      write_output("-", normalized);
      adcc_free_string(normalized);
      return 0;
    }

    if (*run) {
      char* report = nullptr;
      int valid = 0;
      const adcc_status s = adcc_run(text.c_str(), &report, &valid);
      if (s != ADCC_OK) return report_error(s);
      write_output(out, report);
      adcc_free_string(report);
      return valid ? 0 : 1;
    }

    const std::vector<std::uint64_t> v = parse_values(values);
    char* reports = nullptr;
    char* csv = nullptr;
    int valid = 0;
    const adcc_status s =
        adcc_sweep(text.c_str(), axis.c_str(), v.data(), v.size(), &reports, &csv, &valid);
    if (s != ADCC_OK) return report_error(s);
    write_output(out, csv);
    if (!reports_out.empty()) write_output(reports_out, reports);
    adcc_free_string(reports);
    adcc_free_string(csv);
    return valid ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "adcc: " << e.what() << '\n';
    return 2;
  }
}
