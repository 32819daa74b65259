// One line per acceptance criterion; JSON report with the full data.

#include "checks.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  knotcycle::app::AcceptanceOptions opt;
  std::vector<int> only, known, may;
  std::string report = "acceptance_report.json";
  app.add_option("--only", only, "criteria to run (default all)")->check(CLI::Range(1, 9));
  app.add_option("--embed-samples", opt.embed_samples, "sampled points per chart for criterion 5");
  app.add_option("--mc-samples", opt.mc_samples, "Monte Carlo samples per chart for criterion 8");
  app.add_option("--seed", opt.seed);
  app.add_option("--report", report, "JSON report path");
  app.add_option("--known-failure", known,
                 "criteria documented as unattainable; exit 0 when exactly these fail (they still print FAIL)")
      ->check(CLI::Range(1, 9));
  app.add_option("--may-fail", may, "criteria whose pass/fail is a statistical coin toss; either outcome is tolerated")
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  nlohmann::json j = nlohmann::json::array();
  const auto results = knotcycle::app::run_acceptance(opt, only, [&](const auto& r) {
    std::cout << knotcycle::app::format_line(r) << std::endl;
    j.push_back(knotcycle::app::to_json(r));
  });
  std::ofstream(report) << nlohmann::json{{"schema", 1}, {"criteria", j}}.dump(2) << "\n";

  std::vector<int> failed;
  for (const auto& r : results)
    if (!r.pass) failed.push_back(r.id);
  std::cout << results.size() - failed.size() << "/" << results.size() << " criteria pass" << std::endl;
  std::vector<int> unexpected;
  for (const auto& r : results) {
    const bool is_known = std::find(known.begin(), known.end(), r.id) != known.end();
    const bool is_may = std::find(may.begin(), may.end(), r.id) != may.end();
    if (!r.pass && !is_known && !is_may) unexpected.push_back(r.id);
    if (r.pass && is_known) unexpected.push_back(r.id);
  }
  if (!unexpected.empty()) return 1;
  if (!failed.empty()) std::cout << "only the documented criteria failed" << std::endl;
  return 0;
}
