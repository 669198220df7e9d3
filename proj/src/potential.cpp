#include "tiltlab/potential.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include <Eigen/IterativeLinearSolvers>

#include "tiltlab/common.hpp"
#include "tiltlab/linalg.hpp"

namespace tl {

double RadialPotential::operator()(double r) const {
  if (r < inner) return 1.0;
  if (r >= R) return 0.0;
  double p = 2.0 - d;
  return (std::pow(r, p) - std::pow(R, p)) / (std::pow(inner, p) - std::pow(R, p));
}

// ---------------------------------------------------------------- psi

SmoothingPsi::SmoothingPsi(double eta) : eta_(eta) {
  if (!(eta > 0 && eta < 1)) throw Error("eta must lie in (0,1)");
  len_ = (1.0 + eta) / 2.0;
  double m = 1.0 / (1.0 + eta);  // mean slope needed on [1/2, 1+eta/2]
  c_ = 2.0 * m - 1.0;
  w_ = 2.0 * (1.0 - m);
}

double SmoothingPsi::operator()(double z) const {
  if (z <= 0.5) return z;
  if (z >= 1.0 + eta_ / 2.0) return 1.0;
  double s = (z - 0.5) / len_;
  double P;
  if (s <= c_) {
    P = s;
  } else {
    double t = (s - c_) / w_;
    P = c_ + w_ * (t - t * t * t + 0.5 * t * t * t * t);
  }
  return std::min(1.0, 0.5 + len_ * P);
}

double SmoothingPsi::d1(double z) const {
  if (z <= 0.5) return 1.0;
  if (z >= 1.0 + eta_ / 2.0) return 0.0;
  double s = (z - 0.5) / len_;
  if (s <= c_) return 1.0;
  double t = (s - c_) / w_;
  return 1.0 - (3 * t * t - 2 * t * t * t);
}

double SmoothingPsi::d2(double z) const {
  if (z <= 0.5 || z >= 1.0 + eta_ / 2.0) return 0.0;
  double s = (z - 0.5) / len_;
  if (s <= c_) return 0.0;
  double t = (s - c_) / w_;
  return -6 * t * (1 - t) / (w_ * len_);
}

// ---------------------------------------------------------------- h~

struct GridPotential {
  int d = 3, m = 0;  // nodes i*step for i in [-m, m]
  double step = 0;
  std::vector<double> val;

  double at(const std::vector<int>& i) const {
    std::int64_t id = 0;
    for (int k = 0; k < d; ++k) id = id * (2 * m + 1) + (i[k] + m);
    return val[id];
  }
  double eval(const std::vector<double>& z) const {
    std::vector<int> base(d);
    std::vector<double> fr(d);
    for (int k = 0; k < d; ++k) {
      double x = z[k] / step;
      int b = int(std::floor(x));
      b = std::clamp(b, -m, m - 1);
      base[k] = b;
      fr[k] = std::clamp(x - b, 0.0, 1.0);
    }
    double out = 0;
    std::vector<int> c(d);
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1;
      for (int k = 0; k < d; ++k) {
        int bit = (corner >> k) & 1;
        c[k] = base[k] + bit;
        w *= bit ? fr[k] : 1 - fr[k];
      }
      if (w != 0) out += w * at(c);
    }
    return out;
  }
};

static std::shared_ptr<GridPotential> solve_grid(const CompactShape& K2, int R, int d, double step) {
  auto g = std::make_shared<GridPotential>();
  g->d = d;
  g->m = int(std::ceil(R / step));
  g->step = double(R) / g->m;
  int side = 2 * g->m + 1;
  std::int64_t total = 1;
  for (int k = 0; k < d; ++k) total *= side;
  g->val.assign(total, 0.0);
  std::vector<int> unk(total, -1);
  std::vector<std::uint8_t> one(total, 0);
  std::vector<double> z(d);
  auto coords = [&](std::int64_t id, std::vector<int>& i) {
    for (int k = d - 1; k >= 0; --k) {
      i[k] = int(id % side) - g->m;
      id /= side;
    }
  };
  std::vector<int> i(d);
  int n = 0;
  for (std::int64_t id = 0; id < total; ++id) {
    coords(id, i);
    double r2 = 0;
    for (int k = 0; k < d; ++k) {
      z[k] = i[k] * g->step;
      r2 += z[k] * z[k];
    }
    if (K2.contains(z)) {
      one[id] = 1;
      g->val[id] = 1.0;
    } else if (r2 < double(R) * R) {
      unk[id] = n++;
    }
  }
  std::vector<std::int64_t> stride(d, 1);
  for (int k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * side;
  // Shortley-Weller: a neighbour that is not an unknown is replaced by the
  // boundary crossing along that axis, at fraction th of the step
  auto crossing = [&](std::int64_t id, int k, int s) -> std::pair<double, double> {
    coords(id, i);
    for (int q = 0; q < d; ++q) z[q] = i[q] * g->step;
    auto y = id + s * stride[k];
    if (one[y]) {
      double lo = 0, hi = 1;
      for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        auto w = z;
        w[k] += s * mid * g->step;
        (K2.contains(w) ? hi : lo) = mid;
      }
      return {std::max(hi, 1e-3), 1.0};
    }
    double r2 = 0;
    for (int q = 0; q < d; ++q)
      if (q != k) r2 += z[q] * z[q];
    double t = std::sqrt(std::max(0.0, double(R) * R - r2)) - s * z[k];
    return {std::clamp(t / g->step, 1e-3, 1.0), 0.0};
  };
  std::vector<Eigen::Triplet<double>> trip;
  Vec b = Vec::Zero(n);
  for (std::int64_t id = 0; id < total; ++id) {
    int r = unk[id];
    if (r < 0) continue;
    double diag = 0;
    for (int k = 0; k < d; ++k) {
      double th[2], bv[2];
      std::int64_t y[2];
      for (int j = 0; j < 2; ++j) {
        int s = j ? 1 : -1;
        y[j] = id + s * stride[k];
        th[j] = 1;
        bv[j] = 0;
        if (unk[y[j]] < 0) std::tie(th[j], bv[j]) = crossing(id, k, s);
      }
      for (int j = 0; j < 2; ++j) {
        double c = 2.0 / ((th[0] + th[1]) * th[j]);
        diag += c;
        if (unk[y[j]] >= 0) trip.emplace_back(r, unk[y[j]], -c);
        else b[r] += c * bv[j];
      }
    }
    trip.emplace_back(r, r, diag);
  }
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::BiCGSTAB<SpMat> solver;
  solver.setTolerance(1e-12);
  solver.setMaxIterations(20000);
  solver.compute(A);
  Vec x = solver.solve(b);
  if (solver.info() != Eigen::Success) throw Error("continuum potential solve did not converge");
  for (std::int64_t id = 0; id < total; ++id)
    if (unk[id] >= 0) g->val[id] = std::clamp(x[unk[id]], 0.0, 1.0);
  return g;
}

HTilde::HTilde(CompactShape K, double delta, double eta, int R, int d, std::shared_ptr<const GridPotential> grid)
    : K_(std::move(K)), delta_(delta), eta_(eta), R_(R), d_(d), psi_(eta), grid_(std::move(grid)) {
  K2_ = K_.dilated(2 * delta);
  double r0;
  if (K_.centred_ball(&r0)) {
    radial_ = true;
    a_ = r0 + 2 * delta;
  }
}

double HTilde::radial_h(double r) const {
  if (r <= a_) return 1.0;
  if (r >= R_) return 0.0;
  double p = 2.0 - d_;
  return (std::pow(r, p) - std::pow(double(R_), p)) / (std::pow(a_, p) - std::pow(double(R_), p));
}

double HTilde::h(const std::vector<double>& z) const {
  double r2 = 0;
  for (double c : z) r2 += c * c;
  if (r2 >= double(R_) * R_) return 0.0;
  if (radial_) return radial_h(std::sqrt(r2));
  if (K2_.contains(z)) return 1.0;
  return grid_->eval(z);
}

HTilde build_h_tilde(const CompactShape& K, double delta, double eta, int R, int d, double grid_step) {
  if (R < 3) throw Error("R must be at least 3");
  if (!(delta > 0 && delta < 1)) throw Error("delta must lie in (0,1)");
  if (K.d() != d) throw Error("shape dimension mismatch");
  CompactShape K2 = K.dilated(2 * delta);
  if (K2.max_norm() > R / 2.0) throw Error("K too large for R");
  std::shared_ptr<const GridPotential> grid;
  if (!K.centred_ball(nullptr)) grid = solve_grid(K2, R, d, grid_step > 0 ? grid_step : R / 32.0);
  return HTilde(K, delta, eta, R, d, grid);
}

SandwichReport h_tilde_sandwich(const HTilde& ht, int samples) {
  SandwichReport rep;
  rep.c_lower = 1e300;
  int d = ht.d();
  double R = ht.R();
  auto w1 = RadialPotential::w1(ht.delta(), R, d);
  auto w2 = RadialPotential::w2(R, d);
  // fixed directions: axes and the main diagonal
  std::vector<std::vector<double>> dirs;
  for (int k = 0; k < d; ++k) {
    std::vector<double> e(d, 0.0);
    e[k] = 1;
    dirs.push_back(e);
    e[k] = -1;
    dirs.push_back(e);
  }
  dirs.push_back(std::vector<double>(d, 1.0 / std::sqrt(double(d))));
  for (auto& dir : dirs) {
    double prev = 2.0;
    for (int i = 0; i < samples; ++i) {
      double r = R * (i + 0.5) / samples;
      std::vector<double> z(d);
      for (int k = 0; k < d; ++k) z[k] = r * dir[k];
      double v = ht(z);
      if (ht.radial() && v > prev + 1e-14) rep.radially_monotone = false;
      prev = v;
      double a = w1(r), b = w2(r);
      if (a > 0) rep.c_lower = std::min(rep.c_lower, v / a);
      if (v > 0) rep.c_upper = std::max(rep.c_upper, v / b);
      ++rep.samples;
    }
  }
  return rep;
}

// ---------------------------------------------------------------- profile

void validate(const TiltParams& p) {
  if (p.d < 3) throw Error("dimension must be at least 3");
  if (!(p.delta > 0 && p.delta < 1)) throw Error("delta must lie in (0,1)");
  if (!(p.eta > 0 && p.eta < 1)) throw Error("eta must lie in (0,1)");
  if (!(p.eps > 0 && p.eps < 1)) throw Error("eps must lie in (0,1)");
  if (p.R < 3) throw Error("R must be an integer >= 3");
  if (p.N < 2) throw Error("N must be at least 2");
  if (!(p.u >= 0)) throw Error("u must be non-negative");
  if (p.K.d() != p.d) throw Error("shape dimension mismatch");
}

SiteSet TiltProfile::part(Region r) const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (region[i] == r) out.push_back(ids[i]);
  return SiteSet(box, std::move(out));
}

static void fill_derived(TiltProfile& P) {
  // f, ||h_N||^2, T_N, v from h_N (also used after loading)
  int d = P.d();
  P.norm2 = 0;
  for (double h : P.hN) P.norm2 += h * h;
  double nrm = std::sqrt(P.norm2);
  P.f.resize(P.n());
  for (std::size_t i = 0; i < P.n(); ++i) P.f[i] = P.hN[i] / nrm;
  P.TN = P.params.u * (1 + P.params.eps) * P.norm2;
  double lnN = std::log(double(P.params.N));
  P.tstar = P.params.tstar >= 0 ? P.params.tstar : double(P.params.N) * P.params.N * lnN * lnN;
  P.v.resize(P.n());
  for (std::size_t i = 0; i < P.n(); ++i) {
    double s = 0;
    for (int j = 0; j < 2 * d; ++j) s += P.hN_at(P.box.nbr(P.ids[i], j));
    P.v[i] = 1.0 - s / (2.0 * d * P.hN[i]);
  }
}

TiltProfile build_tilt_profile(const TiltParams& p) {
  validate(p);
  HTilde ht = build_h_tilde(p.K, p.delta, p.eta, p.R, p.d, p.grid_step);
  TiltProfile P;
  P.params = p;
  long NR = long(p.N) * p.R;
  P.box = Box(p.d, int(NR + 1));
  P.local.assign(P.box.size(), -1);
  std::vector<double> z(p.d);
  for (std::int64_t id = 0; id < P.box.size(); ++id) {
    long r2 = 0;
    for (int k = 0; k < p.d; ++k) {
      long c = P.box.coord(id, k);
      r2 += c * c;
    }
    if (r2 >= NR * NR) continue;
    for (int k = 0; k < p.d; ++k) z[k] = double(P.box.coord(id, k)) / p.N;
    P.local[id] = int(P.ids.size());
    P.ids.push_back(id);
    P.hN.push_back(ht(z));
  }
  // I^N / O^N / S^N
  P.region.assign(P.n(), kOuter);
  for (std::size_t i = 0; i < P.n(); ++i) {
    auto id = P.ids[i];
    long r2 = 0;
    for (int k = 0; k < p.d; ++k) {
      long c = P.box.coord(id, k);
      r2 += c * c;
    }
    if (4 * r2 <= NR * NR) {
      P.region[i] = kInner;
      continue;
    }
    bool inner_bd = false, all_on_sphere = true;
    for (int j = 0; j < 2 * p.d; ++j) {
      auto y = P.box.nbr(id, j);
      if (P.local[y] >= 0) continue;
      inner_bd = true;
      long s2 = 0;
      for (int k = 0; k < p.d; ++k) {
        long c = P.box.coord(y, k);
        s2 += c * c;
      }
      if (s2 != NR * NR) all_on_sphere = false;
    }
    P.region[i] = (inner_bd && !all_on_sphere) ? kSide : kOuter;
  }
  fill_derived(P);
  return P;
}

VBounds v_bounds_check(const TiltProfile& P) {
  VBounds b{-1e300, 1e300, -1e300, -1e300, -1e300, 0, 0, 0};
  double maxh = 0, minh = 1e300;
  for (std::size_t i = 0; i < P.n(); ++i) {
    double v = P.v[i];
    b.max_v = std::max(b.max_v, v);
    b.min_v = std::min(b.min_v, v);
    double& m = P.region[i] == kInner ? b.max_I : P.region[i] == kOuter ? b.max_O : b.max_S;
    m = std::max(m, v);
    maxh = std::max(maxh, P.hN[i]);
    minh = std::min(minh, P.hN[i]);
    bool flat = P.hN[i] == 1.0;
    for (int j = 0; j < 2 * P.d() && flat; ++j) flat = P.hN_at(P.box.nbr(P.ids[i], j)) == 1.0;
    if (flat) b.v_flat_max = std::max(b.v_flat_max, std::abs(v));
  }
  b.trivial_lower = -maxh / minh;
  b.max_v_N2 = b.max_v * double(P.N()) * P.N();
  return b;
}

HNBounds hN_bounds(const TiltProfile& P) {
  HNBounds b{1e300, 0, 0, 1e300};
  double N = P.N();
  for (std::size_t i = 0; i < P.n(); ++i) {
    b.min_hN_N2 = std::min(b.min_hN_N2, P.hN[i] * N * N);
    bool bd = false;
    for (int j = 0; j < 2 * P.d(); ++j) bd |= P.local[P.box.nbr(P.ids[i], j)] < 0;
    if (bd) b.max_inner_N = std::max(b.max_inner_N, P.hN[i] * N);
    if (P.region[i] == kOuter) b.min_O_N = std::min(b.min_O_N, P.hN[i] * N);
  }
  b.norm2_over_Nd = P.norm2 / std::pow(N, P.d());
  return b;
}

// ---------------------------------------------------------------- serialisation

static void put_u64(std::ostream& os, std::uint64_t x) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = char((x >> (8 * i)) & 0xff);
  os.write(b, 8);
}
static std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("truncated profile record");
  std::uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= std::uint64_t(b[i]) << (8 * i);
  return x;
}
static void put_f64(std::ostream& os, double x) { put_u64(os, std::bit_cast<std::uint64_t>(x)); }
static double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

void TiltProfile::save(std::ostream& os) const {
  os.write("TLPF", 4);
  os.put(char(1));
  char buf[512];
  std::snprintf(buf, sizeof buf, "d=%d N=%d R=%d delta=%.17g eta=%.17g eps=%.17g u=%.17g tstar=%.17g grid=%.17g",
                params.d, params.N, params.R, params.delta, params.eta, params.eps, params.u, params.tstar,
                params.grid_step);
  os << buf << " K=" << params.K.spec() << '\n';
  put_u64(os, ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    put_u64(os, std::uint64_t(ids[i]));
    put_f64(os, hN[i]);
    put_f64(os, f[i]);
    put_f64(os, v[i]);
    os.put(char(region[i]));
  }
  put_f64(os, norm2);
  put_f64(os, TN);
  put_f64(os, tstar);
}

TiltProfile TiltProfile::load(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "TLPF", 4) != 0) throw Error("not a profile record");
  int ver = is.get();
  if (ver != 1) throw Error("unsupported profile version");
  std::string line;
  std::getline(is, line);
  TiltProfile P;
  std::stringstream ss(line);
  std::string tok, kspec;
  while (ss >> tok) {
    auto eq = tok.find('=');
    auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "d") P.params.d = std::stoi(val);
    else if (key == "N") P.params.N = std::stoi(val);
    else if (key == "R") P.params.R = std::stoi(val);
    else if (key == "delta") P.params.delta = std::stod(val);
    else if (key == "eta") P.params.eta = std::stod(val);
    else if (key == "eps") P.params.eps = std::stod(val);
    else if (key == "u") P.params.u = std::stod(val);
    else if (key == "tstar") P.params.tstar = std::stod(val);
    else if (key == "grid") P.params.grid_step = std::stod(val);
    else if (key == "K") kspec = val;
  }
  P.params.K = CompactShape::parse(kspec, P.params.d);
  P.box = Box(P.params.d, P.params.N * P.params.R + 1);
  P.local.assign(P.box.size(), -1);
  auto n = get_u64(is);
  P.ids.resize(n);
  P.hN.resize(n);
  P.f.resize(n);
  P.v.resize(n);
  P.region.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    P.ids[i] = std::int64_t(get_u64(is));
    P.hN[i] = get_f64(is);
    P.f[i] = get_f64(is);
    P.v[i] = get_f64(is);
    int r = is.get();
    if (r < 0) throw Error("truncated profile record");
    P.region[i] = std::uint8_t(r);
    P.local[P.ids[i]] = int(i);
  }
  P.norm2 = get_f64(is);
  P.TN = get_f64(is);
  P.tstar = get_f64(is);
  return P;
}

// ---------------------------------------------------------------- fields

Field profile_field(const TiltProfile& P) {
  Field g{P.box, std::vector<double>(P.box.size(), 0.0)};
  for (std::size_t i = 0; i < P.n(); ++i) g.v[P.ids[i]] = P.hN[i];
  return g;
}

static void check_faces(const Field& g) {
  for (std::int64_t i = 0; i < g.box.size(); ++i)
    if (g.v[i] != 0.0 && !g.box.interior(i)) throw Error("field does not vanish on the faces of its box");
}

double dirichlet_form(const Field& g) {
  check_faces(g);
  int d = g.box.d();
  double s = 0;
  for (std::int64_t i = 0; i < g.box.size(); ++i)
    for (int k = 0; k < d; ++k) {
      if (g.box.coord(i, k) - g.box.center()[k] == g.box.half()) continue;
      double dv = g.v[i + g.box.stride(k)] - g.v[i];
      s += dv * dv;
    }
  return s / (2.0 * d);
}

double laplacian_at(const Field& g, std::int64_t id) {
  int d = g.box.d();
  double s = 0;
  for (int j = 0; j < 2 * d; ++j) s += g.v[g.box.nbr(id, j)];
  return s / (2.0 * d) - g.v[id];
}

GreenGauss green_gauss_identity(const Field& h) {
  GreenGauss r;
  for (std::int64_t i = 0; i < h.box.size(); ++i)
    if (h.v[i] != 0.0) r.lhs += -h.v[i] * laplacian_at(h, i);
  r.rhs = dirichlet_form(h);
  return r;
}

// ---------------------------------------------------------------- capacity

namespace {

struct WindowOut {
  std::vector<double> e;
  double cap = 0, var = 0;
};

WindowOut window_escape(const SiteSet& M, const Point& c, int L, bool variational) {
  int d = M.box().d();
  Box wb(d, L + 1, c);
  std::vector<std::uint8_t> inM(wb.size(), 0);
  std::vector<std::int64_t> mids;
  for (auto id : M.ids()) {
    Point x = M.box().point(id);
    for (int k = 0; k < d; ++k)
      if (std::abs(x[k] - c[k]) > L - 1) throw Error("window too small for M");
    mids.push_back(wb.id(x));
    inM[mids.back()] = 1;
  }
  std::vector<int> unk(wb.size(), -1);
  int n = 0;
  for (std::int64_t i = 0; i < wb.size(); ++i)
    if (wb.interior(i) && !inM[i]) unk[i] = n++;

  WindowOut out;
  const double p = 1.0 / (2 * d);
  {
    // escape route: phi = P[H_M < exit], I - P on the unknowns
    std::vector<Eigen::Triplet<double>> t;
    Vec b = Vec::Zero(n);
    for (std::int64_t i = 0; i < wb.size(); ++i) {
      int r = unk[i];
      if (r < 0) continue;
      t.emplace_back(r, r, 1.0);
      for (int j = 0; j < 2 * d; ++j) {
        auto y = wb.nbr(i, j);
        if (unk[y] >= 0) t.emplace_back(r, unk[y], -p);
        else if (inM[y]) b[r] += p;
      }
    }
    SpMat A(n, n);
    A.setFromTriplets(t.begin(), t.end());
    Vec phi = cg_solve(A, b, 1e-13, "equilibrium measure");
    auto val = [&](std::int64_t y) { return inM[y] ? 1.0 : unk[y] >= 0 ? phi[unk[y]] : 0.0; };
    for (auto m : mids) {
      double e = 0;
      for (int j = 0; j < 2 * d; ++j) e += p * (1.0 - val(wb.nbr(m, j)));
      out.e.push_back(e);
      out.cap += e;
    }
  }
  if (variational) {
    // energy route: minimise (1/2d) sum_edges (f(a)-f(b))^2 with f = 1 on M,
    // f = 0 off the window; Hessian assembled edge by edge
    std::vector<Eigen::Triplet<double>> t;
    Vec b = Vec::Zero(n);
    for (std::int64_t i = 0; i < wb.size(); ++i)
      for (int k = 0; k < d; ++k) {
        if (wb.coord(i, k) - c[k] == L + 1) continue;
        auto y = i + wb.stride(k);
        int ri = unk[i], ry = unk[y];
        // d/df of (f_i - f_y)^2 / (2d) contributes 2/(2d) = 1/d
        const double w = 1.0 / d;
        if (ri >= 0) t.emplace_back(ri, ri, w);
        if (ry >= 0) t.emplace_back(ry, ry, w);
        if (ri >= 0 && ry >= 0) {
          t.emplace_back(ri, ry, -w);
          t.emplace_back(ry, ri, -w);
        }
        if (ri >= 0 && inM[y]) b[ri] += w;
        if (ry >= 0 && inM[i]) b[ry] += w;
      }
    SpMat H(n, n);
    H.setFromTriplets(t.begin(), t.end());
    Vec f = cg_solve(H, b, 1e-13, "variational capacity");
    auto val = [&](std::int64_t y) { return inM[y] ? 1.0 : unk[y] >= 0 ? f[unk[y]] : 0.0; };
    double E = 0;
    for (std::int64_t i = 0; i < wb.size(); ++i)
      for (int k = 0; k < d; ++k) {
        if (wb.coord(i, k) - c[k] == L + 1) continue;
        double dv = val(i) - val(i + wb.stride(k));
        E += dv * dv;
      }
    out.var = E / (2.0 * d);
  }
  return out;
}

}  // namespace

EquilibriumResult equilibrium_measure(const SiteSet& M, int outer_radius, bool variational) {
  EquilibriumResult r;
  if (M.empty()) return r;
  int d = M.box().d();
  Point lo, hi;
  M.bounds(lo, hi);
  Point c(d);
  int rad = 0;
  for (int k = 0; k < d; ++k) {
    c[k] = int(std::floor((lo[k] + hi[k]) / 2.0));
    rad = std::max({rad, hi[k] - c[k], c[k] - lo[k]});
  }
  int L = outer_radius > 0 ? outer_radius : std::max(2 * rad, 8);
  if (L < 2 * rad) throw Error("outer radius must be at least twice the radius of M");
  // windows L, 2L, 3L; fit x(L) = x + a L^{2-d} + b L^{1-d} and keep x
  Eigen::Matrix3d F;
  WindowOut w[3];
  for (int i = 0; i < 3; ++i) {
    double Li = (i + 1.0) * L;
    F(i, 0) = 1.0;
    F(i, 1) = std::pow(Li, 2.0 - d);
    F(i, 2) = std::pow(Li, 1.0 - d);
    w[i] = window_escape(M, c, (i + 1) * L, variational);
  }
  Eigen::RowVector3d wt = F.inverse().row(0);
  auto ex = [&](auto get) {
    double x = 0;
    for (int i = 0; i < 3; ++i) x += wt[i] * get(w[i]);
    return x;
  };
  r.window = L;
  for (int i = 0; i < 3; ++i) {
    r.cap_L[i] = w[i].cap;
    r.var_L[i] = w[i].var;
  }
  r.e.resize(w[0].e.size());
  for (std::size_t k = 0; k < r.e.size(); ++k) {
    r.e[k] = ex([k](const WindowOut& o) { return o.e[k]; });
    r.cap += r.e[k];
  }
  r.cap_variational = variational ? ex([](const WindowOut& o) { return o.var; }) : r.cap;
  return r;
}

double capacity(const SiteSet& M, int outer_radius) { return equilibrium_measure(M, outer_radius, false).cap; }

}  // namespace tl
