#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace cloze::stats {

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// P(X > F) for X ~ F(d1, d2).
double f_sf(double F, double d1, double d2);
/// P(X <= F) for X ~ F(d1, d2), evaluated independently of f_sf.
double f_cdf(double F, double d1, double d2);

struct AnovaTable {
  std::string effect;
  double F = 0.0;
  int df_num = 0;
  int df_den = 0;
  double p = 1.0;
};

struct Observation {
  double value = 0.0;
  std::map<std::string, std::string> factors;  // factor name -> level
};

/// Fixed-effects full-factorial ANOVA with Type III sums of squares. Effects
/// are named "A", "B", "A:B", ... and listed main effects first.
std::vector<AnovaTable> factorial_anova(const std::vector<Observation>& obs);

/// Aligned values for one effect: cell residual plus the estimated effect.
std::vector<double> align_for_effect(const std::vector<Observation>& obs, const std::string& effect);

/// Aligned Rank Transform ANOVA: for each effect, align, assign midranks and
/// report that effect's F from a factorial ANOVA on the ranks.
std::vector<AnovaTable> art_anova(const std::vector<Observation>& obs);

/// Effect names in reporting order for the factors present in `obs`.
std::vector<std::string> effect_names(const std::vector<Observation>& obs);

nlohmann::json anova_to_json(const std::vector<AnovaTable>& tables);

}  // namespace cloze::stats
