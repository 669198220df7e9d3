// Long-running acceptance checks, one PASS/FAIL line per criterion.
// Usage: acceptance [k ...]   (no argument runs 1..10)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "tiltlab/cli.hpp"
#include "tiltlab/interlacements.hpp"
#include "tiltlab/walk.hpp"

using namespace tl;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
  void need(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    detail += (detail.empty() ? "" : "; ") + what;
  }
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// fold the assertions of a suite run into the verdict
void absorb(Verdict& v, const SuiteResult& r, const std::function<bool(const std::string&)>& keep = nullptr) {
  std::cerr << human_summary(r);
  for (auto& a : r.assertions)
    if (!keep || keep(a.name)) v.need(a.pass, a.name + (a.detail.empty() ? "" : " (" + a.detail + ")"));
}

bool has(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

ExperimentConfig base(const std::string& out) {
  ExperimentConfig c;
  c.out = (std::filesystem::temp_directory_path() / "tiltlab-acceptance" / out).string();
  return c;
}

std::shared_ptr<const TiltProfile> profile(int N, double u = 10.0) {
  TiltParams p;
  p.N = N;
  p.u = u;
  p.delta = 0.75;
  return std::make_shared<const TiltProfile>(build_tilt_profile(p));
}

Verdict exact_identities() {
  Verdict v;
  auto c = base("c1");
  c.N = {4, 6};
  absorb(v, run_suite("profile", c));
  c.N = {6};
  absorb(v, run_suite("hitting", c), [](const std::string& n) { return has(n, "Dirichlet") || has(n, "escape"); });
  // Dirichlet form of h_N against explicit pair enumeration
  for (int N : {4, 6}) {
    auto P = profile(N);
    auto g = profile_field(*P);
    double a = dirichlet_form(g), b = oracle::pair_dirichlet(g.box, g.v);
    v.need(rel_diff(a, b) <= 1e-10, "pair enumeration of E(h_N,h_N) N=" + std::to_string(N));
  }
  return v;
}

Verdict vacancy_law() {
  Verdict v;
  auto c = base("c2");
  c.n_runs = 10000;
  c.box = {1, 2};
  c.u_grid = "1";
  c.N_grid = "4";
  c.decay_runs = 10;
  absorb(v, run_suite("interlacements", c), [](const std::string& n) { return !has(n, "decay"); });
  Box box(3, 3);
  std::vector<Point> pts;
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) pts.push_back({x, y, z});
  double ref = 0;
  for (double e : oracle::green_equilibrium(pts)) ref += e;
  double cap = equilibrium_measure(SiteSet::from_points(box, pts)).cap;
  v.need(rel_diff(cap, ref) <= 2e-4, "cap B(0,1) vs Green-function solve: " + num(cap) + " vs " + num(ref));
  return v;
}

Verdict martingale() {
  Verdict v;
  ConfinedWalkModel m(profile(4));
  for (double T : {1.0, 10.0, 50.0}) {
    double e = feynman_kac_mean(m, {0, 0, 0}, T);
    v.need(std::abs(e - 1) <= 1e-8, "Feynman-Kac mean at T=" + num(T) + " is " + num(e));
  }
  // one time, the excursion scale; several 3 SE checks on one seed would
  // inflate the false failure rate
  Rng rng(3);
  double T = m.profile().tstar;
  auto est = martingale_means(m, {0, 0, 0}, {T}, 100000, rng).front();
  v.need(within_se(est, 1.0), "E[M_T] at T=" + num(T) + ": " + num(est.value) + " +- " + num(est.se));
  Rng crng(4);
  auto cm = change_of_measure_check(m, 10.0, 2, 100000, crng);
  v.need(agree_se(cm.srw_weighted, cm.confined), "occupation time under the two laws: " + num(cm.srw_weighted.value) +
                                                     " vs " + num(cm.confined.value));
  return v;
}

Verdict spectral() {
  Verdict v;
  auto c = base("c4");
  c.N = {2, 3, 4, 6, 8};
  absorb(v, run_suite("spectral", c));
  return v;
}

Verdict hitting_bracket() {
  Verdict v;
  auto c = base("c5");
  c.N = {6, 8};
  c.centers = 3;
  absorb(v, run_suite("hitting", c), [](const std::string& n) {
    return has(n, "bracket") || has(n, "sandwich") || has(n, "centers");
  });
  return v;
}

Verdict qsd() {
  Verdict v;
  auto c = base("c6");
  c.N = {6, 8, 10};
  absorb(v, run_suite("qsd", c));
  return v;
}

Verdict excursions() {
  Verdict v;
  auto c = base("c7");
  c.N = {6, 8, 12};
  c.n_runs = 2000;
  absorb(v, run_suite("excursions", c));
  return v;
}

Verdict disconnection_trend() {
  Verdict v;
  auto c = base("c8");
  c.N = {8, 12, 16};
  c.u = 10;
  c.n_runs = 200;
  c.entropy_samples = 200;
  absorb(v, run_suite("pipeline", c), [](const std::string& n) { return !has(n, "nested"); });
  return v;
}

Verdict pipeline_soundness() {
  Verdict v;
  auto c = base("c9");
  c.N = {4};
  c.n_runs = 1000;
  c.entropy_samples = 400;
  c.n_direct = 1000000;
  c.direct_window = 64;
  auto r = run_suite("pipeline", c);
  absorb(v, r, [](const std::string& n) { return has(n, "direct"); });
  bool found = false;
  for (auto& a : r.assertions) found = found || has(a.name, "direct");
  v.need(found, "no direct estimate was produced");
  return v;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Verdict determinism() {
  Verdict v;
  for (std::string suite : {"capacity", "excursions", "interlacements"}) {
    std::vector<std::filesystem::path> dirs;
    for (int k = 0; k < 2; ++k) {
      auto c = base("c10-" + suite + "-" + std::to_string(k));
      std::filesystem::remove_all(c.out);
      c.seed = 7;
      c.n_runs = 200;
      c.decay_runs = 20;
      c.u_grid = "0.5,2";
      write_outputs(run_suite(suite, c), c);
      dirs.push_back(c.out);
    }
    for (auto& e : std::filesystem::directory_iterator(dirs[0])) {
      auto name = e.path().filename();
      v.need(std::filesystem::exists(dirs[1] / name) && slurp(e.path()) == slurp(dirs[1] / name),
             suite + "/" + name.string() + " differs");
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::pair<std::string, std::function<Verdict()>>> crit = {
      {"exact identities", exact_identities},
      {"interlacement vacancy law", vacancy_law},
      {"martingale and change of measure", martingale},
      {"spectral gap bounds", spectral},
      {"hitting bracket", hitting_bracket},
      {"quasi-stationary distribution", qsd},
      {"excursions", excursions},
      {"disconnection trend", disconnection_trend},
      {"pipeline soundness", pipeline_soundness},
      {"determinism", determinism},
  };
  std::vector<int> pick;
  for (int k = 1; k < argc; ++k) pick.push_back(std::stoi(argv[k]));
  if (pick.empty())
    for (int k = 1; k <= int(crit.size()); ++k) pick.push_back(k);
  int fails = 0;
  for (int k : pick) {
    if (k < 1 || k > int(crit.size())) {
      std::cerr << "no criterion " << k << "\n";
      return 2;
    }
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = crit[k - 1].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d %s: %s (%.0f s)%s%s\n", k, crit[k - 1].first.c_str(), v.pass ? "PASS" : "FAIL", s,
                v.detail.empty() ? "" : " ", v.detail.c_str());
    std::fflush(stdout);
    fails += !v.pass;
  }
  return fails ? 1 : 0;
}
