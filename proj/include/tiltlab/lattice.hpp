#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tl {

using Point = std::vector<int>;

// The cube B_inf(c, W) with dense row-major ids; first coordinate is slowest.
class Box {
 public:
  Box() = default;
  Box(int d, int half, Point center = {});

  int d() const { return d_; }
  int half() const { return w_; }
  const Point& center() const { return c_; }
  int side() const { return 2 * w_ + 1; }
  std::int64_t size() const { return size_; }
  std::int64_t stride(int k) const { return stride_[k]; }

  bool contains(const Point& x) const;
  std::int64_t id(const Point& x) const;
  Point point(std::int64_t id) const;
  int coord(std::int64_t id, int k) const {
    return int((id / stride_[k]) % side()) - w_ + c_[k];
  }
  // false when the site sits on the faces of the cube (some neighbour is off-box)
  bool interior(std::int64_t id) const;
  // neighbour ids in order +e1,-e1,+e2,-e2,...; requires interior(id)
  std::int64_t nbr(std::int64_t id, int j) const {
    return (j & 1) ? id - stride_[j >> 1] : id + stride_[j >> 1];
  }

  bool operator==(const Box& o) const { return d_ == o.d_ && w_ == o.w_ && c_ == o.c_; }

 private:
  int d_ = 0, w_ = 0;
  Point c_;
  std::vector<std::int64_t> stride_;
  std::int64_t size_ = 0;
};

class LatticeModel {
 public:
  LatticeModel(int d, int half);
  int d() const { return box_.d(); }
  int degree() const { return 2 * box_.d(); }
  const Box& box() const { return box_; }
  std::vector<Point> neighbours(const Point& x) const;

 private:
  Box box_;
};

class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(Box box) : box_(std::move(box)) {}
  SiteSet(Box box, std::vector<std::int64_t> ids);  // sorts and dedups
  static SiteSet from_points(const Box& box, const std::vector<Point>& pts);
  static SiteSet from_mask(const Box& box, const std::vector<std::uint8_t>& mask);

  const Box& box() const { return box_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  bool contains(std::int64_t id) const;
  bool contains(const Point& x) const { return box_.contains(x) && contains(box_.id(x)); }
  std::vector<Point> points() const;
  std::vector<std::uint8_t> mask() const;

  // l_inf radius around the origin of the box's coordinates, and bounding coords
  int linf_radius(const Point& about) const;
  void bounds(Point& lo, Point& hi) const;

  SiteSet boundary() const;        // sites outside, adjacent to the set
  SiteSet inner_boundary() const;  // sites inside, adjacent to the complement
  SiteSet closure() const;

  SiteSet unite(const SiteSet& o) const;
  SiteSet intersect(const SiteSet& o) const;
  SiteSet minus(const SiteSet& o) const;
  bool subset_of(const SiteSet& o) const;
  bool operator==(const SiteSet& o) const { return box_ == o.box_ && ids_ == o.ids_; }

  // text format: "d W count" then one site per line
  void write(std::ostream& os) const;
  static SiteSet read(std::istream& is);

 private:
  void check_margin() const;
  Box box_;
  std::vector<std::int64_t> ids_;
};

// Euclidean r-neighbourhood of an axis box [lo, hi]; a ball is a degenerate box
// with positive margin, a point has both zero.
struct ShapePiece {
  std::vector<double> lo, hi;
  double margin = 0.0;
};

class CompactShape {
 public:
  static CompactShape point(std::vector<double> c);
  static CompactShape ball(std::vector<double> c, double r);
  static CompactShape box(std::vector<double> lo, std::vector<double> hi);
  static CompactShape unite(const std::vector<CompactShape>& parts);
  // "point:0,0,0" | "ball:0,0,0:0.5" | "box:-1,-1,-1:1,1,1" | pieces joined by '+'
  static CompactShape parse(const std::string& spec, int d);
  std::string spec() const;

  int d() const;
  bool empty() const { return pieces_.empty(); }
  const std::vector<ShapePiece>& pieces() const { return pieces_; }

  CompactShape scaled(double s) const;
  CompactShape dilated(double delta) const;  // K^delta
  bool contains(const std::vector<double>& z) const;
  // is d_inf(x, shape) <= t
  bool within_linf(const Point& x, double t) const;
  // largest |z| over the shape
  double max_norm() const;
  // true when the shape is one ball/point centred at the origin
  bool centred_ball(double* radius) const;

 private:
  std::vector<ShapePiece> pieces_;
};

SiteSet blow_up(const CompactShape& K, int N, const Box& box);

// BFS inside U from A∩U; true if B∩U is reached
bool connectivity(const SiteSet& U, const SiteSet& A, const SiteSet& B);
// same, with masks over one box (hot path)
bool connected_masked(const Box& box, const std::vector<std::uint8_t>& open,
                      const std::vector<std::int64_t>& from,
                      const std::vector<std::uint8_t>& target);

bool disconnected_from_infinity(const SiteSet& vacant, const SiteSet& KN, int window_radius);

// Occupied-set form used by simulations: `occupied` is a mask over `world`,
// everything else is vacant. lo/hi bound the occupied sites; a vacant site
// outside that bounding box reaches the window boundary on a straight line.
class Disconnection {
 public:
  explicit Disconnection(const Box& world);
  bool disconnected(const std::vector<std::uint8_t>& occupied, const Point& lo, const Point& hi,
                    const std::vector<std::int64_t>& KN, int window_radius);

 private:
  Box world_;
  std::vector<std::uint32_t> seen_;
  std::uint32_t stamp_ = 0;
  std::vector<std::int64_t> queue_;
};

}  // namespace tl
