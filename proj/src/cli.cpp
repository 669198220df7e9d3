#include "tiltlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "tiltlab/excursions.hpp"
#include "tiltlab/hitting.hpp"
#include "tiltlab/interlacements.hpp"
#include "tiltlab/qsd.hpp"
#include "tiltlab/spectral.hpp"
#include "tiltlab/walk.hpp"

namespace tl {

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (N.empty()) throw Error("N list is empty");
  for (int n : N) params(n);
  if (!std::is_sorted(N.begin(), N.end())) throw Error("N list must be ascending");
  if (n_runs < 1) throw Error("n_runs must be positive");
  if (M < 1) throw Error("M must be positive");
  if (centers < 1) throw Error("centers must be positive");
  if (first_index < 1) throw Error("first excursion index starts at 1");
}

TiltParams ExperimentConfig::params(int n) const {
  TiltParams p;
  p.d = d;
  p.K = CompactShape::parse(K, d);
  p.delta = delta;
  p.eta = eta;
  p.eps = eps;
  p.R = R;
  p.N = n;
  p.u = u;
  p.tstar = tstar;
  tl::validate(p);
  return p;
}

Json ExperimentConfig::to_json() const {
  return Json{{"d", d},
              {"N", N},
              {"R", R},
              {"delta", delta},
              {"eta", eta},
              {"eps", eps},
              {"u", u},
              {"K", K},
              {"radii", radii},
              {"tstar", tstar},
              {"n_runs", n_runs},
              {"seed", seed},
              {"M", M},
              {"centers", centers},
              {"box", box},
              {"u_grid", u_grid},
              {"N_grid", N_grid},
              {"decay_runs", decay_runs},
              {"entropy_samples", entropy_samples},
              {"n_direct", n_direct},
              {"direct_window", direct_window},
              {"first_index", first_index},
              {"tail_threshold", tail_threshold},
              {"tv_threshold", tv_threshold},
              {"qsd_dev_threshold", qsd_dev_threshold}};
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  try {
    if (s.find(':') != std::string::npos) {
      std::vector<std::string> parts;
      std::stringstream ss(s);
      for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
      if (parts.size() != 3) throw Error("grid a:b:n needs three fields");
      double a = std::stod(parts[0]), b = std::stod(parts[1]);
      int n = std::stoi(parts[2]);
      if (n < 1) throw Error("grid needs at least one point");
      for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
    } else {
      std::stringstream ss(s);
      for (std::string p; std::getline(ss, p, ',');)
        if (!p.empty()) out.push_back(std::stod(p));
    }
  } catch (const std::logic_error&) {
    throw Error("bad grid '" + s + "'");
  }
  if (out.empty()) throw Error("empty grid '" + s + "'");
  return out;
}

// ---------------------------------------------------------------- results

bool SuiteResult::ok() const {
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.pass; });
}

void SuiteResult::check(const std::string& n, bool pass, const std::string& detail) {
  assertions.push_back({n, pass, detail});
}

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Json est(const Estimate& e) { return Json{{"value", e.value}, {"se", e.se}, {"n", e.n}}; }

std::shared_ptr<const TiltProfile> make_profile(const ExperimentConfig& cfg, int N) {
  return std::make_shared<const TiltProfile>(build_tilt_profile(cfg.params(N)));
}

MesoscopicBoxes boxes_for(const ExperimentConfig& cfg, const TiltProfile& P, const Point& x0) {
  BoxRadii r;
  if (cfg.radii.empty())
    r.auto_a2 = true;
  else
    r.a = cfg.radii;
  return make_boxes(P, x0, r);
}

std::vector<Point> centers_for(const ExperimentConfig& cfg, const TiltProfile& P) {
  auto c = spread_centers(P, cfg.centers);
  if (c.empty()) throw Error("no site of Gamma^N with a flat neighbourhood of radius 2 at N = " + std::to_string(P.N()));
  return c;
}

Rng suite_rng(const ExperimentConfig& cfg, int suite, int N) {
  return Rng(cfg.seed).split(std::uint64_t(suite) * 100003u + std::uint64_t(N));
}

std::string pt(const Point& x) {
  std::string s;
  for (std::size_t k = 0; k < x.size(); ++k) s += (k ? "," : "") + std::to_string(x[k]);
  return s;
}

// ---------------------------------------------------------------- suites

SuiteResult suite_capacity(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "capacity";
  for (int a : cfg.box) {
    if (a < 0) throw Error("box radius must be nonnegative");
    Box box(cfg.d, a + 2);
    std::vector<std::int64_t> ids;
    for (std::int64_t id = 0; id < box.size(); ++id) {
      int far = 0;
      for (int k = 0; k < cfg.d; ++k) far = std::max(far, std::abs(box.coord(id, k)));
      if (far <= a) ids.push_back(id);
    }
    auto eq = equilibrium_measure(SiteSet(box, ids));
    double rd = rel_diff(eq.cap, eq.cap_variational);
    Json row{{"d", cfg.d}, {"radius", a}, {"cap", eq.cap}, {"cap_variational", eq.cap_variational},
             {"rel_diff", rd}, {"window", eq.window}, {"tag", "exact"}};
    r.rows.push_back(row);
    r.table.push_back(row);
    r.notes.push_back("cap B(0," + std::to_string(a) + ") = " + num(eq.cap) + " variational " +
                      num(eq.cap_variational));
    r.check("capacity routes agree, radius " + std::to_string(a), rd <= 1e-6, "rel diff " + num(rd));
  }
  return r;
}

SuiteResult suite_profile(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "profile";
  for (int N : cfg.N) {
    auto prof = make_profile(cfg, N);
    const auto& P = *prof;
    ConfinedWalkModel m(prof);
    auto gg = green_gauss_identity(profile_field(P));
    auto bal = m.detailed_balance();
    auto vb = v_bounds_check(P);
    auto hb = hN_bounds(P);
    double rg = rel_diff(gg.lhs, gg.rhs);
    Json row{{"N", N},
             {"sites", P.n()},
             {"T_N", P.TN},
             {"tstar", P.tstar},
             {"norm2", P.norm2},
             {"green_gauss_lhs", gg.lhs},
             {"green_gauss_rhs", gg.rhs},
             {"green_gauss_rel", rg},
             {"max_row_sum", bal.max_row_sum},
             {"max_imbalance", bal.max_imbalance},
             {"max_weight_err", bal.max_weight_err},
             {"max_v", vb.max_v},
             {"min_v", vb.min_v},
             {"max_v_N2", vb.max_v_N2},
             {"min_hN_N2", hb.min_hN_N2},
             {"norm2_over_Nd", hb.norm2_over_Nd},
             {"tag", "exact"}};
    r.rows.push_back(row);
    r.table.push_back(row);
    std::string n = "N=" + std::to_string(N);
    r.notes.push_back(n + ": |U^N| = " + std::to_string(P.n()) + ", T_N = " + num(P.TN) + ", tstar = " + num(P.tstar));
    r.check("Green-Gauss on h_N, " + n, rg <= 1e-10, "rel diff " + num(rg));
    r.check("generator rows sum to zero, " + n, bal.max_row_sum <= 1e-10, num(bal.max_row_sum));
    r.check("detailed balance, " + n, bal.max_imbalance <= 1e-10, num(bal.max_imbalance));
    r.check("edge weights f f / 2d, " + n, bal.max_weight_err <= 1e-10, num(bal.max_weight_err));
  }
  return r;
}

SuiteResult suite_spectral(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "spectral";
  for (int N : cfg.N) {
    auto prof = make_profile(cfg, N);
    const auto& P = *prof;
    ConfinedWalkModel m(prof);
    std::string n = "N=" + std::to_string(N);
    if (P.n() > 200000) {
      r.notes.push_back(n + ": |U^N| above 2e5, skipped");
      continue;
    }
    auto gap = exact_spectral_gap(m);
    auto cong = congestion_bound(m, CanonicalPathPlan{P.d()});
    Json row{{"N", N}, {"sites", P.n()}, {"lambda2", gap.lambda2}, {"residual", gap.residual},
             {"A", cong.A}, {"inv_A", cong.bound}, {"A_over_N2", cong.A / (double(N) * N)}, {"tag", "exact"}};
    r.notes.push_back(n + ": 1/A = " + num(cong.bound) + " <= lambda2 = " + num(gap.lambda2));
    r.check("1/A <= lambda2, " + n, cong.bound <= gap.lambda2, num(cong.bound) + " vs " + num(gap.lambda2));
    if (P.n() <= 5000) {
      double ts = P.tstar;
      auto rel = relaxation_check(m, {0.0, ts / 4, ts / 2, ts, 4 * ts});
      row["relaxation_times"] = rel.times;
      row["relaxation_deviation"] = rel.deviation;
      row["relaxation_bound"] = rel.bound;
      r.check("relaxation bound at 5 times, " + n, rel.holds);
    }
    r.rows.push_back(row);
    Json flat = row;
    flat.erase("relaxation_times");
    flat.erase("relaxation_deviation");
    flat.erase("relaxation_bound");
    r.table.push_back(flat);
  }
  return r;
}

SuiteResult suite_hitting(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "hitting";
  double prev = INFINITY;
  for (int N : cfg.N) {
    auto prof = make_profile(cfg, N);
    const auto& P = *prof;
    ConfinedWalkModel m(prof);
    std::string n = "N=" + std::to_string(N);
    auto cs = centers_for(cfg, P);
    r.check("enough centers in Gamma^N, " + n, int(cs.size()) >= cfg.centers, std::to_string(cs.size()));
    double dev = 0;
    for (auto& x0 : cs) {
      auto b = boxes_for(cfg, P, x0);
      auto di = dirichlet_identity_check(m, b);
      auto ch = emest_chain(b);
      auto br = entrance_bracket(m, b);
      double rd = rel_diff(di.lhs, di.rhs);
      Json row{{"N", N},
               {"x0", pt(x0)},
               {"a1", b.a[0]},
               {"a2", b.a[1]},
               {"dirichlet_lhs", di.lhs},
               {"dirichlet_rhs", di.rhs},
               {"dirichlet_rel", rd},
               {"escape_sum", di.escape_sum},
               {"capA1", di.capA1},
               {"emest_holds", ch.holds},
               {"emest_worst", ch.worst},
               {"bracket_lhs", br.lhs},
               {"bracket_mid", br.mid},
               {"bracket_rhs", br.rhs},
               {"bracket_holds", br.holds},
               {"E_pi_H", br.Epi},
               {"ratio", br.ratio},
               {"tag", "exact"}};
      r.rows.push_back(row);
      r.table.push_back(row);
      std::string w = n + " x0=(" + pt(x0) + ")";
      r.notes.push_back(w + ": bracket " + num(br.lhs) + " <= " + num(br.mid) + " <= " + num(br.rhs) + ", ratio " +
                        num(br.ratio));
      r.check("Dirichlet identity, " + w, rd <= 1e-10, "rel diff " + num(rd));
      r.check("escape chain, " + w, ch.holds, num(ch.worst));
      r.check("entrance bracket, " + w, br.holds);
      r.check("sandwich ratio in [0.5, 2], " + w, br.ratio >= 0.5 && br.ratio <= 2, num(br.ratio));
      dev += std::abs(std::log(br.ratio)) / cs.size();
    }
    if (std::isfinite(prev))
      r.check("sandwich ratio moves toward 1, " + n, dev <= prev, num(dev) + " vs " + num(prev));
    prev = dev;
  }
  return r;
}

SuiteResult suite_qsd(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "qsd";
  double prev = INFINITY;
  for (int N : cfg.N) {
    auto prof = make_profile(cfg, N);
    const auto& P = *prof;
    ConfinedWalkModel m(prof);
    std::string n = "N=" + std::to_string(N);
    auto x0 = centers_for(cfg, P).front();
    auto b = boxes_for(cfg, P, x0);
    auto K = killed_operator(m, b);
    auto q = principal_eigenpair(K);
    double E = qsd_exit_time(K, q.sigma);
    auto h = hitting_distribution_from_qsd(m, b, K, q);
    double id = std::abs(q.lambda1 * E - 1);
    Json row{{"N", N},           {"x0", pt(x0)},       {"a2", b.a[1]},          {"D_sites", K.n()},
             {"lambda1", q.lambda1}, {"lambda2", q.lambda2}, {"E_sigma_H", E},    {"identity_err", id},
             {"residual", q.residual}, {"max_dev", h.max_dev}, {"fitted_c", h.fitted_c}, {"tag", "exact"}};
    r.check("lambda1 E_sigma[H_A2] = 1, " + n, id <= 1e-8, num(id));
    if (N == 8) r.check("QSD hitting deviation <= threshold at N=8", h.max_dev <= cfg.qsd_dev_threshold, num(h.max_dev));
    if (std::isfinite(prev)) r.check("QSD hitting deviation non-increasing, " + n, h.max_dev <= prev, num(h.max_dev));
    prev = h.max_dev;
    if (N == cfg.N.back()) {
      auto c = qsd_convergence_check(K, q, {P.tstar});
      row["tv_at_tstar"] = c.tv[0];
      row["tv_starts"] = c.starts;
      row["tv_all_starts"] = c.all_starts;
      r.notes.push_back(n + ": TV at tstar " + num(c.tv[0]) + " over " + std::to_string(c.starts) + " starts");
      r.check("TV(conditioned law at tstar, sigma) <= threshold, " + n, c.tv[0] <= cfg.tv_threshold, num(c.tv[0]));
    }
    r.notes.push_back(n + ": lambda1 " + num(q.lambda1) + " lambda2 " + num(q.lambda2) + " max dev " + num(h.max_dev));
    r.rows.push_back(row);
    r.table.push_back(row);
  }
  return r;
}

SuiteResult suite_excursions(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "excursions";
  for (int N : cfg.N) {
    auto prof = make_profile(cfg, N);
    const auto& P = *prof;
    ConfinedWalkModel m(prof);
    std::string n = "N=" + std::to_string(N);
    auto x0 = centers_for(cfg, P).front();
    auto b = boxes_for(cfg, P, x0);
    auto k = khasminskii_check(m, b.A[1], 3);
    for (int j = 2; j <= 3; ++j) {
      r.rows.push_back(Json{{"N", N}, {"check", "khasminskii"}, {"n", j}, {"sup_m", k.sup_m[j]}, {"bound", k.bound[j]},
                            {"tag", "exact"}});
      r.check("Khasminskii n=" + std::to_string(j) + ", " + n, k.sup_m[j] <= k.bound[j] * (1 + 1e-8),
              num(k.sup_m[j]) + " vs " + num(k.bound[j]));
    }
    Rng rng = suite_rng(cfg, 6, N);
    auto t = excursion_count_tail(m, b, cfg.u, cfg.eps, cfg.n_runs, rng, cfg.tstar);
    r.rows.push_back(Json{{"N", N},
                          {"check", "count_tail"},
                          {"J", t.J},
                          {"T_N", t.T},
                          {"tail", est(t.tail)},
                          {"histogram", t.histogram},
                          {"mean_count", t.count.mean},
                          {"mean_count_se", t.count.se()},
                          {"renewal_proxy", t.renewal_proxy},
                          {"tag", "mc"}});
    r.notes.push_back(n + ": J = " + std::to_string(t.J) + ", P[R_J >= T_N] = " + num(t.tail.value) + " +- " +
                      num(t.tail.se) + ", mean count " + num(t.count.mean));
    if (N == cfg.N.back())
      r.check("excursion count tail + 3 SE <= threshold, " + n, t.tail.value + 3 * t.tail.se <= cfg.tail_threshold,
              num(t.tail.value + 3 * t.tail.se));
    Rng drng = suite_rng(cfg, 7, N);
    auto d = domination_diagnostics(m, b, cfg.u, cfg.eps, cfg.n_runs, drng, cfg.first_index, cfg.tstar);
    for (std::size_t l = 0; l < d.laws.size(); ++l)
      for (std::size_t q = 0; q < d.Q.sets.size(); ++q) {
        Json row{{"x0", pt(x0)},        {"N", N},          {"u", cfg.u},
                 {"eps", cfg.eps},      {"Q_id", d.Q.names[q]}, {"law_id", d.laws[l]},
                 {"vacancy", d.vacancy[l][q].value}, {"se", d.vacancy[l][q].se}, {"n", d.vacancy[l][q].n}};
        r.rows.push_back(row);
        r.table.push_back(row);
      }
    std::string v;
    for (auto& s : d.violations) v += (v.empty() ? "" : "; ") + s;
    r.notes.push_back(n + ": domination ordering " + (d.holds ? "holds" : "violated: " + v));
    r.check("vacancy ordering along the coupling chain, " + n, d.violations.empty(), v);
    r.check("short excursions are prefixes, " + n, d.prefix_violations == 0);
  }
  return r;
}

SuiteResult suite_interlacements(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "interlacements";
  if (cfg.d != 3) throw Error("interlacements suite is implemented for d = 3");
  Rng rng = suite_rng(cfg, 8, 0);
  std::uint64_t stream = 0;
  for (int a : cfg.box) {
    Box box(3, a + 2);
    std::vector<Point> pts;
    for (int x = -a; x <= a; ++x)
      for (int y = -a; y <= a; ++y)
        for (int z = -a; z <= a; ++z) pts.push_back({x, y, z});
    auto A = SiteSet::from_points(box, pts);
    auto eq = equilibrium_measure(A);
    r.check("capacity routes agree, radius " + std::to_string(a), rel_diff(eq.cap, eq.cap_variational) <= 1e-6);
    InterlacementSampler S(A);
    for (double u : {0.5, 1.0}) {
      long empty = 0;
      Rng base = rng.split(++stream);
      for (long k = 0; k < cfg.n_runs; ++k) {
        Rng g = base.split(std::uint64_t(k));
        empty += S.sample(u, g).count == 0;
      }
      auto e = wilson(empty, cfg.n_runs);
      double target = std::exp(-u * S.cap());
      r.rows.push_back(Json{{"check", "vacancy_law"}, {"radius", a}, {"u", u}, {"empty", est(e)}, {"target", target},
                            {"tag", "mc"}});
      std::string w = "radius " + std::to_string(a) + " u=" + num(u);
      r.notes.push_back("P[I cap A empty], " + w + ": " + num(e.value) + " +- " + num(e.se) + " vs " + num(target));
      r.check("vacancy law within 3 SE, " + w, std::abs(e.value - target) <= 3 * e.se);
    }
  }
  auto us = parse_grid(cfg.u_grid);
  std::vector<int> Ns;
  for (double x : parse_grid(cfg.N_grid)) Ns.push_back(int(x));
  std::sort(us.begin(), us.end());
  Rng crng = rng.split(++stream);
  auto c = connectivity_decay_curve(us, Ns, cfg.decay_runs, crng);
  for (auto& p : c.points) {
    Json row{{"u", p.u}, {"N", p.N}, {"p_hat", p.p.value}, {"se", p.p.se}, {"n_runs", p.p.n}};
    r.table.push_back(row);
    row["check"] = "decay";
    r.rows.push_back(row);
  }
  r.rows.push_back(Json{{"check", "u_proxy"}, {"u_proxy", std::isnan(c.u_proxy) ? Json() : Json(c.u_proxy)},
                        {"exponent", c.exponent}});
  r.notes.push_back("empirical u proxy: " + (std::isnan(c.u_proxy) ? std::string("none on the grid") : num(c.u_proxy)));
  for (int N : Ns) {
    bool mono = true;
    double prev = 2;
    for (auto& p : c.points)
      if (p.N == N) {
        mono = mono && p.p.value <= prev;
        prev = p.p.value;
      }
    r.check("decay curve non-increasing in u, N=" + std::to_string(N), mono);
  }
  return r;
}

SuiteResult suite_pipeline(const ExperimentConfig& cfg) {
  SuiteResult r;
  r.name = "pipeline";
  std::vector<LowerBoundReport> reps;
  for (int N : cfg.N) {
    auto rep = run_pipeline(cfg, N);
    std::string n = "N=" + std::to_string(N);
    Json row{{"N", N},
             {"p_tilde", rep.p_tilde.value},
             {"p_tilde_se", rep.p_tilde.se},
             {"H", rep.H.value},
             {"H_se", rep.H.se},
             {"bound", rep.bound},
             {"log_bound", std::isfinite(rep.log_bound) ? Json(rep.log_bound) : Json()},
             {"log_bound_over_N_d2", std::isfinite(rep.log_bound) ? Json(rep.log_bound_scaled) : Json()},
             {"comparator", rep.comparator},
             {"log_comparator", rep.log_comparator},
             {"cap_proxy", rep.cap_proxy},
             {"n_runs", rep.p_tilde.n}};
    if (rep.has_direct) {
      row["direct"] = rep.direct.value;
      row["direct_se"] = rep.direct.se;
      r.check("bound <= direct + 3 SE, " + n, rep.bound <= rep.direct.value + 3 * rep.direct.se,
              num(rep.bound) + " vs " + num(rep.direct.value) + " +- " + num(rep.direct.se));
    }
    double worst = 0;
    for (auto& e : rep.connect) worst = std::max(worst, e.value);
    row["max_x0_connect"] = worst;
    r.table.push_back(row);
    row["tag"] = "mc";
    Json blocks = Json::array();
    for (std::size_t k = 0; k < rep.x0.size(); ++k) blocks.push_back(Json{{"x0", pt(rep.x0[k])}, {"connect", est(rep.connect[k])}});
    row["blocking"] = blocks;
    r.rows.push_back(row);
    r.check("blocking events nested pathwise, " + n, rep.pathwise_violations == 0);
    r.notes.push_back(n + ": p~ = " + num(rep.p_tilde.value) + " +- " + num(rep.p_tilde.se) + ", H = " +
                      num(rep.H.value) + " +- " + num(rep.H.se) + ", log bound = " + num(rep.log_bound) + ", log comparator = " +
                      num(rep.log_comparator) + ", max_x0 P[x0 <-> dA1] = " + num(worst) +
                      (rep.has_direct ? ", direct = " + num(rep.direct.value) + " +- " + num(rep.direct.se) : ""));
    reps.push_back(rep);
  }
  if (reps.size() > 1) {
    bool up = true, down = true;
    for (std::size_t k = 1; k < reps.size(); ++k) {
      up = up && reps[k].p_tilde.value >= reps[k - 1].p_tilde.value;
      double a = 0, b = 0;
      for (auto& e : reps[k - 1].connect) a = std::max(a, e.value);
      for (auto& e : reps[k].connect) b = std::max(b, e.value);
      down = down && b <= a;
    }
    r.check("tilted disconnection non-decreasing in N", up);
    r.check("tilted disconnection > 0.9 at the largest N", reps.back().p_tilde.value > 0.9,
            num(reps.back().p_tilde.value));
    r.check("local blocking surrogate non-increasing in N", down);
  }
  return r;
}

}  // namespace

LowerBoundReport run_pipeline(const ExperimentConfig& cfg, int N) {
  auto prof = make_profile(cfg, N);
  const auto& P = *prof;
  ConfinedWalkModel m(prof);
  LowerBoundReport rep;
  rep.N = N;
  std::vector<MesoscopicBoxes> boxes;
  // small N may have no admissible boxes; the blocking surrogate is then skipped
  if (P.d() == 3)
    for (auto& x0 : spread_centers(P, cfg.centers)) try {
        boxes.push_back(boxes_for(cfg, P, x0));
      } catch (const Error&) {
      }
  Rng rng = suite_rng(cfg, 9, N);
  auto ev = tilted_events(m, boxes, cfg.M * N, cfg.n_runs, rng, cfg.tstar);
  rep.p_tilde = ev.disconnect;
  rep.x0 = ev.x0;
  rep.connect = ev.connect;
  rep.pathwise_violations = ev.pathwise_violations;
  Rng hrng = suite_rng(cfg, 10, N);
  rep.H = relative_entropy_estimate(m, cfg.entropy_samples, hrng).H;
  double p_lo = rep.p_tilde.value - 3 * rep.p_tilde.se;
  double H_hi = std::max(0.0, rep.H.value + 3 * rep.H.se);
  if (p_lo > 0) {
    p_lo = std::min(p_lo, 1.0);
    rep.bound = entropy_lower_bound(p_lo, H_hi);
    rep.log_bound = std::log(p_lo) - (H_hi + std::exp(-1.0)) / p_lo;
  }
  double E = dirichlet_form(profile_field(P));
  double scale = std::pow(double(N), P.d() - 2);
  rep.cap_proxy = P.d() * E / scale;
  rep.log_comparator = -(cfg.u / P.d()) * rep.cap_proxy * scale;
  rep.comparator = std::exp(rep.log_comparator);
  rep.log_bound_scaled = rep.log_bound / scale;
  double rad = -1;
  bool point = P.params.K.centred_ball(&rad) && rad == 0;
  if (cfg.n_direct > 0 && N == 4 && P.d() == 3 && point) {
    Rng drng = suite_rng(cfg, 11, N);
    rep.has_direct = true;
    rep.direct = srw_disconnection_mc(P.params.K, N, cfg.direct_window, cfg.n_direct, drng);
  }
  return rep;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"capacity", "profile",        "spectral", "hitting",
                                                 "qsd",      "excursions",     "interlacements", "pipeline"};
  return names;
}

SuiteResult run_suite(const std::string& name, const ExperimentConfig& cfg) {
  cfg.validate();
  if (name == "capacity") return suite_capacity(cfg);
  if (name == "profile") return suite_profile(cfg);
  if (name == "spectral") return suite_spectral(cfg);
  if (name == "hitting") return suite_hitting(cfg);
  if (name == "qsd") return suite_qsd(cfg);
  if (name == "excursions") return suite_excursions(cfg);
  if (name == "interlacements") return suite_interlacements(cfg);
  if (name == "pipeline") return suite_pipeline(cfg);
  throw Error("unknown subcommand '" + name + "'");
}

namespace {

std::string cell(const Json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

void write_outputs(const SuiteResult& r, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out);
  fs::path dir(cfg.out);
  {
    std::ofstream os(dir / (r.name + ".jsonl"));
    for (auto& row : r.rows) os << row.dump() << "\n";
  }
  if (!r.table.empty()) {
    std::ofstream os(dir / (r.name + ".csv"));
    std::vector<std::string> cols;
    for (auto& row : r.table)
      for (auto it = row.begin(); it != row.end(); ++it)
        if (std::find(cols.begin(), cols.end(), it.key()) == cols.end()) cols.push_back(it.key());
    for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
    os << "\n";
    for (auto& row : r.table) {
      for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << (row.contains(cols[k]) ? cell(row[cols[k]]) : "");
      os << "\n";
    }
  }
  Json s{{"suite", r.name}, {"pass", r.ok()}, {"config", cfg.to_json()}};
  Json as = Json::array();
  for (auto& a : r.assertions) as.push_back(Json{{"name", a.name}, {"pass", a.pass}, {"detail", a.detail}});
  s["assertions"] = as;
  std::ofstream os(dir / "summary.json");
  os << s.dump(2) << "\n";
}

std::string human_summary(const SuiteResult& r) {
  std::ostringstream os;
  os << "== " << r.name << "\n";
  for (auto& n : r.notes) os << "  " << n << "\n";
  long fails = 0;
  for (auto& a : r.assertions) {
    os << "  [" << (a.pass ? "ok" : "FAIL") << "] " << a.name;
    if (!a.detail.empty()) os << " (" << a.detail << ")";
    os << "\n";
    fails += !a.pass;
  }
  os << "  " << r.assertions.size() - fails << "/" << r.assertions.size() << " assertions passed\n";
  return os.str();
}

}  // namespace tl
