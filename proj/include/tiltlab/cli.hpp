#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "tiltlab/common.hpp"
#include "tiltlab/potential.hpp"

namespace tl {

using Json = nlohmann::ordered_json;

struct ExperimentConfig {
  int d = 3;
  std::vector<int> N = {6};
  int R = 3;
  double delta = 0.75, eta = 0.9, eps = 0.5, u = 10.0;
  std::string K = "point:0,0,0";
  std::vector<int> radii;  // a1..a5 (or a1..a6); empty: defaults with auto a2
  double tstar = -1;       // < 0: N^2 log^2 N
  long n_runs = 1000;
  std::uint64_t seed = 1;
  std::string out = "tiltlab-out";
  int M = 4;        // disconnection window M N
  int centers = 3;  // x0 per N
  // subcommand specifics
  std::vector<int> box = {1, 2};
  std::string u_grid = "0:10:6";
  std::string N_grid = "4,8";
  long decay_runs = 200;
  long entropy_samples = 400;
  long n_direct = 0;
  int direct_window = 64;
  int first_index = 2;
  double tail_threshold = 0.05;
  double tv_threshold = 0.01;
  double qsd_dev_threshold = 0.1;

  void validate() const;
  TiltParams params(int N) const;
  Json to_json() const;
};

// "a:b:n" (n points from a to b) or "x,y,z"
std::vector<double> parse_grid(const std::string& s);

struct Assertion {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct SuiteResult {
  std::string name;
  std::vector<Json> rows;   // one object per line in <name>.jsonl
  std::vector<Json> table;  // flat rows for <name>.csv
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;  // human summary lines
  bool ok() const;
  void check(const std::string& name, bool pass, const std::string& detail = "");
};

const std::vector<std::string>& suite_names();
// throws Error on an unknown name
SuiteResult run_suite(const std::string& name, const ExperimentConfig& cfg);
// <out>/<name>.jsonl, <out>/<name>.csv, <out>/summary.json
void write_outputs(const SuiteResult& r, const ExperimentConfig& cfg);
std::string human_summary(const SuiteResult& r);

struct LowerBoundReport {
  int N = 0;
  Estimate p_tilde;  // tilted disconnection, window M N
  Estimate H;
  double bound = 0;       // from p_tilde - 3 se and H + 3 se
  double comparator = 0;  // exp(-(u/d) cap_proxy N^{d-2})
  double cap_proxy = 0;   // d E(h_N, h_N) / N^{d-2}
  double log_bound = -INFINITY;  // kept separately, the bound itself underflows
  double log_comparator = 0;
  double log_bound_scaled = 0;   // log_bound / N^{d-2}
  bool has_direct = false;
  Estimate direct;
  std::vector<Point> x0;
  std::vector<Estimate> connect;
  long pathwise_violations = 0;
};
LowerBoundReport run_pipeline(const ExperimentConfig& cfg, int N);

}  // namespace tl
