#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "owo/config.hpp"

namespace owo {

// One run's regret summary. Everything here except wall_clock_s is
// deterministic for a given config; wall_clock_s therefore goes to stdout,
// never into a CSV, keeping CSV outputs byte-stable across reruns.
struct RegretReport {
  int m = 0;
  double alpha = 0.0;
  std::string regime;
  std::uint64_t seed = 0;
  double raf_regret = 0.0;
  double bound = 0.0;
  double residual = 0.0;  // per-round residual, horizon average
  double r_theta_mean = 0.0;
  double r_theta_max = 0.0;
  double r_w_mean = 0.0;
  double r_w_max = 0.0;
  double outer_regret = 0.0;
  double solver_tolerance = 0.0;
  // a fired monitor voids the bound/chain guarantees for this run
  bool monitor_fired = false;
  double wall_clock_s = 0.0;
};

RegretReport summarize(const ExperimentConfig& cfg, const HorizonTrace& ht);

// One row per (t, i, k); slot-level fairness terms repeat across the slot's
// users. 17 significant digits throughout.
void write_trace_csv(std::ostream& os, const HorizonTrace& ht);
void write_report_csv(std::ostream& os, const std::vector<RegretReport>& rows);

struct RunOutcome {
  RegretReport report;
  std::string trace_path;
  std::string report_path;
  std::string manifest_path;
};

// Executes one horizon per cfg.algorithm and writes trace.csv, report.csv,
// manifest.txt under cfg.out_dir
RunOutcome run_experiment(const ExperimentConfig& cfg);

struct SweepOutcome {
  std::vector<RegretReport> rows;       // successes, cell key order
  std::vector<std::string> failures;    // one line per failed cell
  std::string sweep_path;
  std::string summary_path;
  std::string manifest_path;
};

// Cross product of sweep.regimes x sweep.alpha x sweep.m x sweep.seeds in
// config order. Cells run on a bounded worker pool and are merged by cell
// index, so outputs are independent of scheduling. A failed cell is recorded
// and skipped; the sweep continues.
SweepOutcome run_sweep(const ExperimentConfig& cfg, int jobs = 1);

struct CheckLine {
  std::string label;
  std::string detail;
  bool enforced = false;  // a failed enforced line fails the check
  bool passed = false;
  bool skipped = false;
};

struct CheckOutcome {
  std::vector<CheckLine> lines;
  bool ok = true;  // no enforced line failed
};

// Fresh run of the config followed by the per-round proof-chain inequalities
// and the runtime invariants. Lines that are not provable for the configured
// rates are reported, not enforced; dual lines degenerate at alpha = 0.
CheckOutcome run_check(const ExperimentConfig& cfg);

void print_check_table(std::ostream& os, const CheckOutcome& co);

}  // namespace owo
