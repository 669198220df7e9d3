#include "tiltlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>

#include "tiltlab/common.hpp"

namespace tl {

Box::Box(int d, int half, Point center) : d_(d), w_(half), c_(std::move(center)) {
  if (d < 1 || half < 0) throw Error("bad box");
  if (c_.empty()) c_.assign(d, 0);
  if (int(c_.size()) != d) throw Error("box centre has wrong dimension");
  stride_.assign(d, 1);
  for (int k = d - 2; k >= 0; --k) stride_[k] = stride_[k + 1] * side();
  size_ = stride_[0] * side();
}

bool Box::contains(const Point& x) const {
  for (int k = 0; k < d_; ++k)
    if (std::abs(x[k] - c_[k]) > w_) return false;
  return true;
}

std::int64_t Box::id(const Point& x) const {
  std::int64_t r = 0;
  for (int k = 0; k < d_; ++k) r += std::int64_t(x[k] - c_[k] + w_) * stride_[k];
  return r;
}

Point Box::point(std::int64_t id) const {
  Point x(d_);
  for (int k = 0; k < d_; ++k) x[k] = coord(id, k);
  return x;
}

bool Box::interior(std::int64_t id) const {
  for (int k = 0; k < d_; ++k) {
    int c = int((id / stride_[k]) % side());
    if (c == 0 || c == 2 * w_) return false;
  }
  return true;
}

LatticeModel::LatticeModel(int d, int half) {
  if (d < 3) throw Error("dimension must be at least 3");
  box_ = Box(d, half);
}

std::vector<Point> LatticeModel::neighbours(const Point& x) const {
  std::vector<Point> out;
  for (int j = 0; j < degree(); ++j) {
    Point y = x;
    y[j >> 1] += (j & 1) ? -1 : 1;
    out.push_back(y);
  }
  return out;
}

// ---------------------------------------------------------------- SiteSet

SiteSet::SiteSet(Box box, std::vector<std::int64_t> ids) : box_(std::move(box)), ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  if (!ids_.empty() && (ids_.front() < 0 || ids_.back() >= box_.size()))
    throw Error("site id outside the box");
}

SiteSet SiteSet::from_points(const Box& box, const std::vector<Point>& pts) {
  std::vector<std::int64_t> ids;
  ids.reserve(pts.size());
  for (auto& p : pts) {
    if (!box.contains(p)) throw Error("site outside the box");
    ids.push_back(box.id(p));
  }
  return SiteSet(box, std::move(ids));
}

SiteSet SiteSet::from_mask(const Box& box, const std::vector<std::uint8_t>& mask) {
  SiteSet s(box);
  for (std::int64_t i = 0; i < box.size(); ++i)
    if (mask[i]) s.ids_.push_back(i);
  return s;
}

bool SiteSet::contains(std::int64_t id) const {
  return std::binary_search(ids_.begin(), ids_.end(), id);
}

std::vector<Point> SiteSet::points() const {
  std::vector<Point> out;
  out.reserve(ids_.size());
  for (auto i : ids_) out.push_back(box_.point(i));
  return out;
}

std::vector<std::uint8_t> SiteSet::mask() const {
  std::vector<std::uint8_t> m(box_.size(), 0);
  for (auto i : ids_) m[i] = 1;
  return m;
}

int SiteSet::linf_radius(const Point& about) const {
  int r = 0;
  for (auto i : ids_)
    for (int k = 0; k < box_.d(); ++k) r = std::max(r, std::abs(box_.coord(i, k) - about[k]));
  return r;
}

void SiteSet::bounds(Point& lo, Point& hi) const {
  int d = box_.d();
  lo.assign(d, 0);
  hi.assign(d, -1);
  if (ids_.empty()) return;
  lo = hi = box_.point(ids_.front());
  for (auto i : ids_)
    for (int k = 0; k < d; ++k) {
      int c = box_.coord(i, k);
      lo[k] = std::min(lo[k], c);
      hi[k] = std::max(hi[k], c);
    }
}

void SiteSet::check_margin() const {
  for (auto i : ids_)
    if (!box_.interior(i)) throw Error("set touches the edge of its box");
}

SiteSet SiteSet::boundary() const {
  check_margin();
  std::vector<std::int64_t> out;
  for (auto i : ids_)
    for (int j = 0; j < 2 * box_.d(); ++j) {
      auto y = box_.nbr(i, j);
      if (!contains(y)) out.push_back(y);
    }
  return SiteSet(box_, std::move(out));
}

SiteSet SiteSet::inner_boundary() const {
  check_margin();
  std::vector<std::int64_t> out;
  for (auto i : ids_)
    for (int j = 0; j < 2 * box_.d(); ++j)
      if (!contains(box_.nbr(i, j))) {
        out.push_back(i);
        break;
      }
  return SiteSet(box_, std::move(out));
}

SiteSet SiteSet::closure() const { return unite(boundary()); }

SiteSet SiteSet::unite(const SiteSet& o) const {
  if (!(box_ == o.box_)) throw Error("sets over different boxes");
  std::vector<std::int64_t> r;
  std::set_union(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r));
  SiteSet s(box_);
  s.ids_ = std::move(r);
  return s;
}

SiteSet SiteSet::intersect(const SiteSet& o) const {
  if (!(box_ == o.box_)) throw Error("sets over different boxes");
  std::vector<std::int64_t> r;
  std::set_intersection(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r));
  SiteSet s(box_);
  s.ids_ = std::move(r);
  return s;
}

SiteSet SiteSet::minus(const SiteSet& o) const {
  if (!(box_ == o.box_)) throw Error("sets over different boxes");
  std::vector<std::int64_t> r;
  std::set_difference(ids_.begin(), ids_.end(), o.ids_.begin(), o.ids_.end(), std::back_inserter(r));
  SiteSet s(box_);
  s.ids_ = std::move(r);
  return s;
}

bool SiteSet::subset_of(const SiteSet& o) const {
  return box_ == o.box_ && std::includes(o.ids_.begin(), o.ids_.end(), ids_.begin(), ids_.end());
}

void SiteSet::write(std::ostream& os) const {
  os << box_.d() << ' ' << box_.half() << ' ' << ids_.size() << '\n';
  for (auto i : ids_) {
    for (int k = 0; k < box_.d(); ++k) os << (k ? " " : "") << box_.coord(i, k);
    os << '\n';
  }
}

SiteSet SiteSet::read(std::istream& is) {
  int d, w;
  std::size_t n;
  if (!(is >> d >> w >> n)) throw Error("bad site set header");
  Box box(d, w);
  std::vector<Point> pts(n, Point(d));
  for (auto& p : pts)
    for (auto& c : p)
      if (!(is >> c)) throw Error("truncated site set");
  return from_points(box, pts);
}

// ---------------------------------------------------------------- shapes

CompactShape CompactShape::point(std::vector<double> c) {
  CompactShape s;
  s.pieces_.push_back({c, c, 0.0});
  return s;
}

CompactShape CompactShape::ball(std::vector<double> c, double r) {
  if (!(r > 0)) throw Error("ball radius must be positive");
  CompactShape s;
  s.pieces_.push_back({c, c, r});
  return s;
}

CompactShape CompactShape::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size()) throw Error("box corners differ in dimension");
  for (std::size_t k = 0; k < lo.size(); ++k)
    if (!(hi[k] > lo[k])) throw Error("box widths must be positive");
  CompactShape s;
  s.pieces_.push_back({lo, hi, 0.0});
  return s;
}

CompactShape CompactShape::unite(const std::vector<CompactShape>& parts) {
  CompactShape s;
  for (auto& p : parts) s.pieces_.insert(s.pieces_.end(), p.pieces_.begin(), p.pieces_.end());
  if (s.pieces_.empty()) throw Error("empty shape");
  return s;
}

static std::vector<double> parse_vec(const std::string& t) {
  std::vector<double> v;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return v;
}

CompactShape CompactShape::parse(const std::string& spec, int d) {
  std::vector<CompactShape> parts;
  std::stringstream ss(spec);
  std::string piece;
  while (std::getline(ss, piece, '+')) {
    std::vector<std::string> f;
    std::stringstream ps(piece);
    std::string t;
    while (std::getline(ps, t, ':')) f.push_back(t);
    if (f.empty()) continue;
    auto vec = [&](std::size_t i) {
      if (i >= f.size()) throw Error("malformed shape: " + piece);
      auto v = parse_vec(f[i]);
      if (int(v.size()) != d) throw Error("shape dimension mismatch: " + piece);
      return v;
    };
    if (f[0] == "point") parts.push_back(point(f.size() > 1 ? vec(1) : std::vector<double>(d, 0.0)));
    else if (f[0] == "ball" && f.size() == 3) parts.push_back(ball(vec(1), std::stod(f[2])));
    else if (f[0] == "box" && f.size() == 3) parts.push_back(box(vec(1), vec(2)));
    else throw Error("unknown shape: " + piece);
  }
  return unite(parts);
}

std::string CompactShape::spec() const {
  auto vec = [](const std::vector<double>& v) {
    std::string s;
    char buf[40];
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v[i]);
      s += (i ? "," : "") + std::string(buf);
    }
    return s;
  };
  std::string out;
  for (auto& p : pieces_) {
    if (!out.empty()) out += "+";
    bool degenerate = p.lo == p.hi;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", p.margin);
    if (degenerate && p.margin == 0) out += "point:" + vec(p.lo);
    else if (degenerate) out += "ball:" + vec(p.lo) + ":" + buf;
    else if (p.margin == 0) out += "box:" + vec(p.lo) + ":" + vec(p.hi);
    else out += "rbox:" + vec(p.lo) + ":" + vec(p.hi) + ":" + buf;
  }
  return out;
}

int CompactShape::d() const { return pieces_.empty() ? 0 : int(pieces_.front().lo.size()); }

CompactShape CompactShape::scaled(double s) const {
  CompactShape r = *this;
  for (auto& p : r.pieces_) {
    for (auto& x : p.lo) x *= s;
    for (auto& x : p.hi) x *= s;
    p.margin *= s;
  }
  return r;
}

CompactShape CompactShape::dilated(double delta) const {
  CompactShape r = *this;
  for (auto& p : r.pieces_) p.margin += delta;
  return r;
}

bool CompactShape::contains(const std::vector<double>& z) const {
  for (auto& p : pieces_) {
    double s = 0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      double g = std::max({0.0, p.lo[k] - z[k], z[k] - p.hi[k]});
      s += g * g;
    }
    if (s <= p.margin * p.margin) return true;
  }
  return false;
}

bool CompactShape::within_linf(const Point& x, double t) const {
  for (auto& p : pieces_) {
    double s = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double g = std::max({0.0, p.lo[k] - x[k] - t, x[k] - t - p.hi[k]});
      s += g * g;
    }
    if (s <= p.margin * p.margin) return true;
  }
  return false;
}

double CompactShape::max_norm() const {
  double m = 0;
  for (auto& p : pieces_) {
    double s = 0;
    for (std::size_t k = 0; k < p.lo.size(); ++k) {
      double c = std::max(std::abs(p.lo[k]), std::abs(p.hi[k]));
      s += c * c;
    }
    m = std::max(m, std::sqrt(s) + p.margin);
  }
  return m;
}

bool CompactShape::centred_ball(double* radius) const {
  if (pieces_.size() != 1) return false;
  auto& p = pieces_.front();
  for (std::size_t k = 0; k < p.lo.size(); ++k)
    if (p.lo[k] != 0.0 || p.hi[k] != 0.0) return false;
  if (radius) *radius = p.margin;
  return true;
}

SiteSet blow_up(const CompactShape& K, int N, const Box& box) {
  if (K.empty()) throw Error("empty shape");
  if (N < 1) throw Error("N must be positive");
  int d = K.d();
  if (d != box.d()) throw Error("shape dimension mismatch");
  CompactShape NK = K.scaled(N);
  std::vector<std::int64_t> ids;
  for (auto& p : NK.pieces()) {
    Point lo(d), hi(d);
    for (int k = 0; k < d; ++k) {
      lo[k] = int(std::floor(p.lo[k] - p.margin - 1.0));
      hi[k] = int(std::ceil(p.hi[k] + p.margin + 1.0));
    }
    Point x = lo;
    while (true) {
      if (NK.within_linf(x, 1.0)) {
        if (!box.contains(x)) throw Error("blow-up exceeds the box");
        ids.push_back(box.id(x));
      }
      int k = d - 1;
      for (; k >= 0; --k) {
        if (++x[k] <= hi[k]) break;
        x[k] = lo[k];
      }
      if (k < 0) break;
    }
  }
  SiteSet s(box, std::move(ids));
  if (s.empty()) throw Error("empty blow-up");
  return s;
}

// ---------------------------------------------------------------- connectivity

bool connected_masked(const Box& box, const std::vector<std::uint8_t>& open,
                      const std::vector<std::int64_t>& from,
                      const std::vector<std::uint8_t>& target) {
  std::vector<std::uint8_t> seen(box.size(), 0);
  std::vector<std::int64_t> q;
  for (auto a : from)
    if (open[a] && !seen[a]) {
      seen[a] = 1;
      q.push_back(a);
    }
  for (std::size_t h = 0; h < q.size(); ++h) {
    auto x = q[h];
    if (target[x]) return true;
    for (int j = 0; j < 2 * box.d(); ++j) {
      // off-box neighbours do not exist for the purpose of the query
      int k = j >> 1;
      int c = box.coord(x, k) - box.center()[k];
      if ((j & 1) ? c == -box.half() : c == box.half()) continue;
      auto y = box.nbr(x, j);
      if (open[y] && !seen[y]) {
        seen[y] = 1;
        q.push_back(y);
      }
    }
  }
  return false;
}

bool connectivity(const SiteSet& U, const SiteSet& A, const SiteSet& B) {
  auto open = U.mask();
  auto target = B.mask();
  for (std::size_t i = 0; i < target.size(); ++i) target[i] &= open[i];
  return connected_masked(U.box(), open, A.ids(), target);
}

static void check_window(const Box& box, const SiteSet& KN, int W) {
  for (int k = 0; k < box.d(); ++k)
    if (box.center()[k] != 0) throw Error("window must be centred at the origin");
  if (box.half() < W) throw Error("window larger than the box");
  for (auto i : KN.ids())
    for (int k = 0; k < box.d(); ++k)
      if (std::abs(KN.box().coord(i, k)) > W - 2) throw Error("window clips K_N");
}

bool disconnected_from_infinity(const SiteSet& vacant, const SiteSet& KN, int W) {
  const Box& box = vacant.box();
  check_window(box, KN, W);
  auto open = vacant.mask();
  std::vector<std::uint8_t> target(box.size(), 0);
  for (std::int64_t i = 0; i < box.size(); ++i) {
    bool inside = true, face = false;
    for (int k = 0; k < box.d(); ++k) {
      int c = std::abs(box.coord(i, k));
      if (c > W) inside = false;
      if (c == W) face = true;
    }
    if (!inside) open[i] = 0;
    target[i] = open[i] && face;
  }
  std::vector<std::int64_t> from;
  for (auto i : KN.ids()) from.push_back(box.id(KN.box().point(i)));
  return !connected_masked(box, open, from, target);
}

Disconnection::Disconnection(const Box& world) : world_(world), seen_(world.size(), 0) {}

bool Disconnection::disconnected(const std::vector<std::uint8_t>& occ, const Point& lo, const Point& hi,
                                 const std::vector<std::int64_t>& KN, int W) {
  int d = world_.d();
  if (world_.half() < W) throw Error("window larger than the box");
  if (++stamp_ == 0) {
    std::fill(seen_.begin(), seen_.end(), 0);
    stamp_ = 1;
  }
  queue_.clear();
  for (auto a : KN)
    if (!occ[a] && seen_[a] != stamp_) {
      seen_[a] = stamp_;
      queue_.push_back(a);
    }
  // a vacant straight ray out of the occupied bounding box settles it
  auto escapes = [&](std::int64_t y) {
    for (int k = 0; k < d; ++k) {
      int c = world_.coord(y, k);
      if (c < lo[k] || c > hi[k] || std::abs(c) >= W) return true;
    }
    return false;
  };
  for (auto x : queue_)
    for (int j = 0; j < 2 * d; ++j)
      for (auto y = x; !occ[y]; y = world_.nbr(y, j))
        if (escapes(y)) return false;
  for (std::size_t h = 0; h < queue_.size(); ++h) {
    auto x = queue_[h];
    for (int k = 0; k < d; ++k) {
      int c = world_.coord(x, k);
      if (c < lo[k] || c > hi[k] || std::abs(c) >= W) return false;
    }
    for (int j = 0; j < 2 * d; ++j) {
      auto y = world_.nbr(x, j);
      if (!occ[y] && seen_[y] != stamp_) {
        seen_[y] = stamp_;
        queue_.push_back(y);
      }
    }
  }
  return true;
}

}  // namespace tl
