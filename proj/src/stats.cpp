#include "cloze/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "cloze/error.hpp"

namespace cloze::stats {

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error("incomplete beta needs 0 <= x <= 1");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double f_sf(double F, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error("F distribution needs positive degrees of freedom");
  if (std::isnan(F)) return std::numeric_limits<double>::quiet_NaN();
  if (F <= 0.0) return 1.0;
  if (std::isinf(F)) return 0.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * F));
}

double f_cdf(double F, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error("F distribution needs positive degrees of freedom");
  if (std::isnan(F)) return std::numeric_limits<double>::quiet_NaN();
  if (F <= 0.0) return 0.0;
  if (std::isinf(F)) return 1.0;
  return incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * F / (d1 * F + d2));
}

namespace {

struct Design {
  std::vector<std::string> factors;              // sorted names
  std::vector<std::vector<std::string>> levels;  // sorted per factor
  std::vector<std::vector<int>> codes;           // [obs][factor]
  std::vector<std::size_t> strides;              // mixed radix over levels
  std::size_t cells = 1;
  std::vector<unsigned> effects;                 // non-empty factor subsets
};

std::string effect_name(const Design& d, unsigned mask) {
  std::string out;
  for (std::size_t f = 0; f < d.factors.size(); ++f) {
    if (!(mask & (1u << f))) continue;
    if (!out.empty()) out.push_back(':');
    out += d.factors[f];
  }
  return out;
}

Design build_design(const std::vector<Observation>& obs) {
  if (obs.empty()) throw Error("ANOVA needs observations");
  Design d;
  for (const auto& [name, _] : obs.front().factors) d.factors.push_back(name);
  if (d.factors.empty()) throw Error("ANOVA needs at least one factor");
  if (d.factors.size() > 16) throw Error("ANOVA supports at most 16 factors");

  std::vector<std::set<std::string>> level_sets(d.factors.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (obs[i].factors.size() != d.factors.size()) {
      throw Error("observation " + std::to_string(i + 1) + " has a different factor set");
    }
    std::size_t f = 0;
    for (const auto& [name, level] : obs[i].factors) {
      if (name != d.factors[f]) {
        throw Error("observation " + std::to_string(i + 1) + " has a different factor set");
      }
      level_sets[f++].insert(level);
    }
    if (!std::isfinite(obs[i].value)) {
      throw Error("observation " + std::to_string(i + 1) + " is not finite");
    }
  }
  for (std::size_t f = 0; f < d.factors.size(); ++f) {
    if (level_sets[f].size() < 2) {
      throw Error("degenerate design: factor '" + d.factors[f] + "' has a single level");
    }
    d.levels.emplace_back(level_sets[f].begin(), level_sets[f].end());
  }

  d.strides.resize(d.factors.size());
  for (std::size_t f = 0; f < d.factors.size(); ++f) {
    d.strides[f] = d.cells;
    d.cells *= d.levels[f].size();
  }

  std::vector<std::size_t> cell_counts(d.cells, 0);
  d.codes.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::size_t f = 0;
    std::size_t key = 0;
    for (const auto& [_, level] : obs[i].factors) {
      const auto& lv = d.levels[f];
      const int code = static_cast<int>(std::lower_bound(lv.begin(), lv.end(), level) - lv.begin());
      d.codes[i].push_back(code);
      key += static_cast<std::size_t>(code) * d.strides[f];
      ++f;
    }
    ++cell_counts[key];
  }
  for (std::size_t c = 0; c < d.cells; ++c) {
    if (cell_counts[c] == 0) throw Error("degenerate design: empty cell in the factorial layout");
  }
  if (obs.size() <= d.cells) {
    throw Error("degenerate design: no residual degrees of freedom (need more observations than cells)");
  }

  const unsigned full = (1u << d.factors.size()) - 1;
  for (unsigned m = 1; m <= full; ++m) d.effects.push_back(m);
  std::stable_sort(d.effects.begin(), d.effects.end(), [](unsigned a, unsigned b) {
    return std::popcount(a) < std::popcount(b);
  });
  return d;
}

std::size_t cell_key(const Design& d, std::size_t i, unsigned mask) {
  std::size_t key = 0;
  for (std::size_t f = 0; f < d.factors.size(); ++f) {
    if (mask & (1u << f)) key += static_cast<std::size_t>(d.codes[i][f]) * d.strides[f];
  }
  return key;
}

// Observation-weighted means of `y` over every level combination of `mask`.
std::vector<double> marginal_means(const Design& d, const std::vector<double>& y, unsigned mask) {
  std::vector<double> sum(d.cells, 0.0);
  std::vector<std::size_t> cnt(d.cells, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto k = cell_key(d, i, mask);
    sum[k] += y[i];
    ++cnt[k];
  }
  for (std::size_t k = 0; k < d.cells; ++k) {
    if (cnt[k]) sum[k] /= static_cast<double>(cnt[k]);
  }
  return sum;
}

unsigned find_effect(const Design& d, const std::string& name) {
  for (unsigned m : d.effects) {
    if (effect_name(d, m) == name) return m;
  }
  throw Error("unknown ANOVA effect '" + name + "'");
}

// Effect-coded (sum-to-zero) design columns for one effect.
Eigen::MatrixXd effect_columns(const Design& d, unsigned mask) {
  const std::size_t n = d.codes.size();
  std::vector<std::size_t> fs;
  std::size_t ncols = 1;
  for (std::size_t f = 0; f < d.factors.size(); ++f) {
    if (mask & (1u << f)) {
      fs.push_back(f);
      ncols *= d.levels[f].size() - 1;
    }
  }
  Eigen::MatrixXd cols(n, ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = 1.0;
      std::size_t rem = c;
      for (std::size_t f : fs) {
        const std::size_t nl = d.levels[f].size() - 1;
        const std::size_t k = rem % nl;
        rem /= nl;
        const auto code = static_cast<std::size_t>(d.codes[i][f]);
        v *= code == k ? 1.0 : (code == nl ? -1.0 : 0.0);
      }
      cols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return cols;
}

int effect_df(const Design& d, unsigned mask) {
  int df = 1;
  for (std::size_t f = 0; f < d.factors.size(); ++f) {
    if (mask & (1u << f)) df *= static_cast<int>(d.levels[f].size() - 1);
  }
  return df;
}

// Residual from the cell means plus the effect's least-squares estimate in the
// saturated effect-coded model, centred. With unequal cell sizes the marginal
// means are not orthogonal to the other effects; the fitted block is.
std::vector<double> align(const Design& d, const std::vector<double>& y, unsigned effect) {
  const std::size_t n = y.size();
  const unsigned full = (1u << d.factors.size()) - 1;
  const auto cm = marginal_means(d, y, full);

  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index ncols = 1;
  for (unsigned m : d.effects) {
    blocks.push_back(effect_columns(d, m));
    ncols += blocks.back().cols();
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), ncols);
  x.col(0).setOnes();
  Eigen::Index at = 1, effect_at = 0, effect_cols = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (d.effects[b] == effect) {
      effect_at = at;
      effect_cols = blocks[b].cols();
    }
    x.middleCols(at, blocks[b].cols()) = blocks[b];
    at += blocks[b].cols();
  }
  const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(yv);
  Eigen::VectorXd est = x.middleCols(effect_at, effect_cols) * beta.segment(effect_at, effect_cols);
  est.array() -= est.mean();

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (y[i] - cm[cell_key(d, i, full)]) + est(static_cast<Eigen::Index>(i));
  }
  return out;
}

class Anova {
 public:
  Anova(const Design& d, const std::vector<double>& y) : d_(d) {
    const std::size_t n = y.size();
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    yc_ = Eigen::VectorXd(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      yc_(i) = y[i] - mean;
      scale = std::max(scale, std::abs(yc_(i)));
    }
    noise_floor_ = static_cast<double>(n) * (1e-12 * scale) * (1e-12 * scale);

    const unsigned full = (1u << d.factors.size()) - 1;
    std::vector<double> ycv(yc_.data(), yc_.data() + n);
    const auto cm = marginal_means(d, ycv, full);
    fitted_full_ = Eigen::VectorXd(n);
    rss_ = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fitted_full_(i) = cm[cell_key(d, i, full)];
      const double r = yc_(i) - fitted_full_(i);
      rss_ += r * r;
    }
    if (rss_ <= noise_floor_) rss_ = 0.0;
    df_den_ = static_cast<int>(n - d.cells);

    for (unsigned m : d.effects) blocks_.push_back(effect_columns(d, m));
  }

  AnovaTable test(unsigned effect) const {
    const std::size_t n = static_cast<std::size_t>(yc_.size());
    Eigen::Index ncols = 1;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (d_.effects[b] != effect) ncols += blocks_[b].cols();
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), ncols);
    x.col(0).setOnes();
    Eigen::Index at = 1;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      if (d_.effects[b] == effect) continue;
      x.middleCols(at, blocks_[b].cols()) = blocks_[b];
      at += blocks_[b].cols();
    }
    const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(yc_);
    const Eigen::VectorXd fitted_reduced = x * beta;
    double ss = (fitted_full_ - fitted_reduced).squaredNorm();
    if (ss <= noise_floor_) ss = 0.0;

    AnovaTable t;
    t.effect = effect_name(d_, effect);
    t.df_num = effect_df(d_, effect);
    t.df_den = df_den_;
    if (ss == 0.0) {
      t.F = 0.0;
      t.p = 1.0;
    } else if (rss_ == 0.0) {
      t.F = std::numeric_limits<double>::infinity();
      t.p = 0.0;
    } else {
      t.F = (ss / t.df_num) / (rss_ / t.df_den);
      t.p = f_sf(t.F, t.df_num, t.df_den);
    }
    return t;
  }

 private:
  const Design& d_;
  Eigen::VectorXd yc_;
  Eigen::VectorXd fitted_full_;
  std::vector<Eigen::MatrixXd> blocks_;
  double rss_ = 0.0;
  double noise_floor_ = 0.0;
  int df_den_ = 0;
};

std::vector<double> values_of(const std::vector<Observation>& obs) {
  std::vector<double> y;
  y.reserve(obs.size());
  for (const auto& o : obs) y.push_back(o.value);
  return y;
}

// Ascending midranks; values within a relative 1e-10 of a tie group's first
// member join it, so rounding noise from alignment does not split ties.
std::vector<double> tolerant_midranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double tol = 1e-10 * std::max(1.0, scale);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && v[idx[j]] - v[idx[i]] <= tol) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = mid;
    i = j;
  }
  return ranks;
}

}  // namespace

std::vector<std::string> effect_names(const std::vector<Observation>& obs) {
  const Design d = build_design(obs);
  std::vector<std::string> out;
  for (unsigned m : d.effects) out.push_back(effect_name(d, m));
  return out;
}

std::vector<AnovaTable> factorial_anova(const std::vector<Observation>& obs) {
  const Design d = build_design(obs);
  const Anova anova(d, values_of(obs));
  std::vector<AnovaTable> out;
  for (unsigned m : d.effects) out.push_back(anova.test(m));
  return out;
}

std::vector<double> align_for_effect(const std::vector<Observation>& obs, const std::string& effect) {
  const Design d = build_design(obs);
  return align(d, values_of(obs), find_effect(d, effect));
}

std::vector<AnovaTable> art_anova(const std::vector<Observation>& obs) {
  const Design d = build_design(obs);
  const auto y = values_of(obs);
  std::vector<AnovaTable> out;
  for (unsigned m : d.effects) {
    const auto ranks = tolerant_midranks(align(d, y, m));
    out.push_back(Anova(d, ranks).test(m));
  }
  return out;
}

nlohmann::json anova_to_json(const std::vector<AnovaTable>& tables) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tables) {
    nlohmann::json f = std::isfinite(t.F) ? nlohmann::json(t.F) : nlohmann::json("inf");
    out.push_back({{"effect", t.effect}, {"F", f}, {"df_num", t.df_num}, {"df_den", t.df_den}, {"p", t.p}});
  }
  return out;
}

}  // namespace cloze::stats
