#include "epi/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "epi/model.hpp"

namespace epi {

void GridSpec::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("invalid grid: " + m); };
  if (n_S < 2) fail("n_S must be >= 2");
  if (n_I < 3) fail("n_I must be >= 3");
  if (!(S_lo < S_hi)) fail("need S_lo < S_hi");
  if (!(I_lo < I_hi)) fail("need I_lo < I_hi");
  if (!(I_lo < I_median)) fail("need I_lo < I_median");
  if (!(I_median < 0.5 * (I_lo + I_hi))) fail("need I_median < (I_lo + I_hi) / 2");
  if (n_mu == 1 || n_mu < 0) fail("n_mu must be 0 or >= 2");
}

std::string GridSpec::hash() const {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d|%.17g|%.17g|%d|%.17g|%.17g|%.17g|%d", n_S, S_lo, S_hi,
                n_I, I_lo, I_hi, I_median, n_mu);
  return hex_digest(fnv1a(buf));
}

double exponential_grid_shift(double a, double b, double c) {
  if (!(a < c)) throw ConfigError("exponential grid: median must exceed the lower bound (a < c)");
  if (!(a < b)) throw ConfigError("exponential grid: need a < b");
  if (!(c < 0.5 * (a + b)))
    throw ConfigError("exponential grid: median must lie below the midpoint (c < (a+b)/2)");
  return (c * c - a * b) / (a + b - 2.0 * c);
}

std::vector<double> exponential_grid(double a, double b, double c, int n) {
  if (n < 3) throw ConfigError("exponential grid: need at least 3 nodes");
  const double s = exponential_grid_shift(a, b, c);
  const double lo = std::log(a + s), hi = std::log(b + s);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    x[static_cast<std::size_t>(i)] = std::exp(t) - s;
  }
  x.front() = a;
  x.back() = b;
  return x;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
  if (n < 2 || !(lo < hi)) throw ConfigError("uniform grid: need lo < hi and n >= 2");
  std::vector<double> x(static_cast<std::size_t>(n));
  const double h = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = lo + h * i;
  x.back() = hi;
  return x;
}

StateGrid::StateGrid(const GridSpec& spec) : spec_(spec) {
  spec.validate();
  S_ = uniform_grid(spec.S_lo, spec.S_hi, spec.n_S);
  dS_ = (spec.S_hi - spec.S_lo) / (spec.n_S - 1);
  I_shift_ = exponential_grid_shift(spec.I_lo, spec.I_hi, spec.I_median);
  I_ = exponential_grid(spec.I_lo, spec.I_hi, spec.I_median, spec.n_I);
  I_log_.resize(I_.size());
  for (std::size_t i = 0; i < I_.size(); ++i) I_log_[i] = std::log(I_[i] + I_shift_);
  dI_minus_.assign(I_.size(), 0.0);
  dI_plus_.assign(I_.size(), 0.0);
  for (std::size_t i = 1; i < I_.size(); ++i) dI_minus_[i] = I_[i] - I_[i - 1];
  for (std::size_t i = 0; i + 1 < I_.size(); ++i) dI_plus_[i] = I_[i + 1] - I_[i];
  if (spec.n_mu >= 2) {
    mu_ = uniform_grid(0.0, 1.0, spec.n_mu);
    dmu_ = 1.0 / (spec.n_mu - 1);
  }
}

double StateGrid::I_coord(double I) const { return std::log(std::max(I + I_shift_, 1e-300)); }

namespace {

StateGrid::Bracket bracket_sorted(const std::vector<double>& x, double v) {
  const std::size_t n = x.size();
  if (v <= x.front()) return {0, 0.0, v < x.front()};
  if (v >= x.back()) return {n - 2, 1.0, v > x.back()};
  const auto it = std::upper_bound(x.begin(), x.end(), v);
  const std::size_t j = static_cast<std::size_t>(it - x.begin()) - 1;
  return {j, (v - x[j]) / (x[j + 1] - x[j]), false};
}

}  // namespace

StateGrid::Bracket StateGrid::bracket_S(double S) const { return bracket_sorted(S_, S); }

StateGrid::Bracket StateGrid::bracket_I(double I) const {
  if (I <= I_.front()) return {0, 0.0, I < I_.front()};
  if (I >= I_.back()) return {I_.size() - 2, 1.0, I > I_.back()};
  return bracket_sorted(I_log_, I_coord(I));
}

StateGrid::Bracket StateGrid::bracket_mu(double mu) const {
  if (mu_.empty()) throw ConfigError("grid has no belief dimension");
  return bracket_sorted(mu_, mu);
}

Field::Field(const StateGrid& grid, double fill, std::string lbl, bool with_mu)
    : nS(grid.nS()), nI(grid.nI()), nmu(with_mu ? grid.nmu() : 1), label(std::move(lbl)) {
  if (with_mu && grid.nmu() < 2) throw ConfigError("belief field needs n_mu >= 2");
  values.assign(nS * nI * nmu, fill);
}

Field Field::slice(std::size_t im) const {
  Field f;
  f.nS = nS;
  f.nI = nI;
  f.nmu = 1;
  f.label = label;
  const auto first = values.begin() + static_cast<std::ptrdiff_t>(im * nS * nI);
  f.values.assign(first, first + static_cast<std::ptrdiff_t>(nS * nI));
  return f;
}

bool Field::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Interpolated interpolate(const StateGrid& grid, const Field& field, double S, double I) {
  const auto bs = grid.bracket_S(S);
  const auto bi = grid.bracket_I(I);
  auto at = [&](std::size_t a, std::size_t b) { return field(a, b); };
  const double v0 = (1 - bi.w) * at(bs.lo, bi.lo) + bi.w * at(bs.lo, bi.lo + 1);
  const double v1 = (1 - bi.w) * at(bs.lo + 1, bi.lo) + bi.w * at(bs.lo + 1, bi.lo + 1);
  return {(1 - bs.w) * v0 + bs.w * v1, bs.clamped || bi.clamped};
}

Interpolated interpolate(const StateGrid& grid, const Field& field, double S, double I,
                         double mu) {
  const auto bm = grid.bracket_mu(mu);
  const auto lo = interpolate(grid, field.slice(bm.lo), S, I);
  const auto hi = interpolate(grid, field.slice(bm.lo + 1), S, I);
  return {(1 - bm.w) * lo.value + bm.w * hi.value, lo.clamped || bm.clamped};
}

void write_field_csv(std::ostream& os, const StateGrid& grid, const Field& field) {
  os << (field.has_mu() ? "S,I,mu,value\n" : "S,I,value\n");
  os << std::setprecision(17);
  for (std::size_t im = 0; im < field.nmu; ++im)
    for (std::size_t iS = 0; iS < field.nS; ++iS)
      for (std::size_t iI = 0; iI < field.nI; ++iI) {
        os << grid.S()[iS] << ',' << grid.I()[iI] << ',';
        if (field.has_mu()) os << grid.mu()[im] << ',';
        os << field(iS, iI, im) << '\n';
      }
}

void write_field_csv(const std::string& path, const StateGrid& grid, const Field& field) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_field_csv(os, grid, field);
}

Field read_field_csv(std::istream& is, const StateGrid& grid) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("field csv: empty input");
  bool with_mu;
  if (line == "S,I,value")
    with_mu = false;
  else if (line == "S,I,mu,value")
    with_mu = true;
  else
    throw ConfigError("field csv: unexpected header '" + line + "'");
  Field f(grid, 0.0, {}, with_mu);
  std::size_t row = 0;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= f.size()) throw ConfigError("field csv: more rows than grid nodes");
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> cols;
    while (std::getline(ss, tok, ',')) cols.push_back(std::stod(tok));
    if (cols.size() != (with_mu ? 4u : 3u))
      throw ConfigError("field csv: wrong column count at row " + std::to_string(row + 2));
    const std::size_t iI = row % f.nI, iS = (row / f.nI) % f.nS, im = row / (f.nI * f.nS);
    if (!close(cols[0], grid.S()[iS]) || !close(cols[1], grid.I()[iI]) ||
        (with_mu && !close(cols[2], grid.mu()[im])))
      throw ConfigError("field csv: coordinates at row " + std::to_string(row + 2) +
                        " do not match the grid");
    f.values[row] = cols.back();
    ++row;
  }
  if (row != f.size()) throw ConfigError("field csv: fewer rows than grid nodes");
  return f;
}

Field read_field_csv(const std::string& path, const StateGrid& grid) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  return read_field_csv(is, grid);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace epi
