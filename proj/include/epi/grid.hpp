// Discretised (S, I[, mu]) state space, node-valued fields and interpolation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace epi {

struct GridSpec {
  int n_S = 100;
  double S_lo = 1e-8;
  double S_hi = 1.0;
  int n_I = 400;
  double I_lo = 1e-8;
  double I_hi = 1.0;
  double I_median = 1e-4;
  int n_mu = 0;  // 0: no belief dimension

  void validate() const;
  /// Stable 64-bit digest of the spec, printed in hex.
  std::string hash() const;
};

/// Shift s such that the exponential grid on [a, b] has median point c.
double exponential_grid_shift(double a, double b, double c);
std::vector<double> exponential_grid(double a, double b, double c, int n);
std::vector<double> uniform_grid(double lo, double hi, int n);

class StateGrid {
 public:
  explicit StateGrid(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  std::size_t nS() const { return S_.size(); }
  std::size_t nI() const { return I_.size(); }
  std::size_t nmu() const { return mu_.size(); }
  std::size_t nodes() const { return S_.size() * I_.size(); }
  /// Flat index of (iS, iI); S columns are contiguous in I.
  std::size_t index(std::size_t iS, std::size_t iI) const { return iS * I_.size() + iI; }

  const std::vector<double>& S() const { return S_; }
  const std::vector<double>& I() const { return I_; }
  const std::vector<double>& mu() const { return mu_; }
  double dS() const { return dS_; }
  double dmu() const { return dmu_; }
  double I_shift() const { return I_shift_; }
  /// Distance to the neighbouring I node; zero at the respective boundary.
  double dI_minus(std::size_t i) const { return dI_minus_[i]; }
  double dI_plus(std::size_t i) const { return dI_plus_[i]; }

  /// Interpolation coordinate along I: log(I + s).
  double I_coord(double I) const;

  struct Bracket {
    std::size_t lo;  // left node; the right node is lo + 1 unless w == 0
    double w;        // weight of the right node
    bool clamped;
  };
  Bracket bracket_S(double S) const;
  Bracket bracket_I(double I) const;
  Bracket bracket_mu(double mu) const;

 private:
  GridSpec spec_;
  std::vector<double> S_, I_, mu_;
  std::vector<double> I_log_;
  std::vector<double> dI_minus_, dI_plus_;
  double dS_ = 0, dmu_ = 0, I_shift_ = 0;
};

/// One scalar per grid node: (S, I) nodes, or (S, I, mu) nodes in belief mode.
struct Field {
  std::size_t nS = 0, nI = 0, nmu = 1;
  std::vector<double> values;
  std::string label;

  Field() = default;
  Field(const StateGrid& grid, double fill, std::string label = {}, bool with_mu = false);

  bool has_mu() const { return nmu > 1; }
  std::size_t size() const { return values.size(); }
  double& operator()(std::size_t iS, std::size_t iI, std::size_t im = 0) {
    return values[(im * nS + iS) * nI + iI];
  }
  double operator()(std::size_t iS, std::size_t iI, std::size_t im = 0) const {
    return values[(im * nS + iS) * nI + iI];
  }
  /// Copy of the (S, I) slice at belief index im.
  Field slice(std::size_t im) const;
  bool all_finite() const;
};

struct Interpolated {
  double value;
  bool clamped;
};

/// Bilinear in (S, log(I + s)); exact at nodes. Out-of-range states are
/// clamped to the boundary face and flagged.
Interpolated interpolate(const StateGrid& grid, const Field& field, double S, double I);
/// Trilinear variant for belief fields (linear in mu).
Interpolated interpolate(const StateGrid& grid, const Field& field, double S, double I,
                         double mu);

/// CSV with header "S,I[,mu],value", one row per node, 17 significant digits.
void write_field_csv(std::ostream& os, const StateGrid& grid, const Field& field);
void write_field_csv(const std::string& path, const StateGrid& grid, const Field& field);
Field read_field_csv(std::istream& is, const StateGrid& grid);
Field read_field_csv(const std::string& path, const StateGrid& grid);

/// 64-bit FNV-1a, used for manifest digests.
std::uint64_t fnv1a(const std::string& text);
std::string hex_digest(std::uint64_t h);

}  // namespace epi
