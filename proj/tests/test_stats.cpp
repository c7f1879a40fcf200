#include <gtest/gtest.h>

#include <cmath>

#include "cloze/error.hpp"
#include "cloze/ranking.hpp"
#include "cloze/stats.hpp"
#include "oracles.hpp"

using namespace cloze;
using namespace cloze::stats;

namespace {

std::vector<Observation> oneway(const std::vector<std::vector<double>>& groups) {
  std::vector<Observation> obs;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (double v : groups[g]) obs.push_back({v, {{"G", "g" + std::to_string(g)}}});
  return obs;
}

const AnovaTable& effect(const std::vector<AnovaTable>& t, const std::string& name) {
  for (const auto& e : t)
    if (e.effect == name) return e;
  throw std::runtime_error("no effect " + name);
}

std::vector<Observation> twoway(oracle::Rng& rng, int a, int b, int r, double ea, double eb, double eab) {
  std::vector<Observation> obs;
  for (int i = 0; i < a; ++i)
    for (int j = 0; j < b; ++j)
      for (int k = 0; k < r; ++k) {
        const double v = ea * i + eb * j * j + eab * (i * j % 3) + rng.normal();
        obs.push_back({v, {{"A", "a" + std::to_string(i)}, {"B", "b" + std::to_string(j)}}});
      }
  return obs;
}

}  // namespace

TEST(FSurvival, ReferenceValues) {
  EXPECT_EQ(f_sf(0, 3, 10), 1.0);
  EXPECT_NEAR(f_sf(1, 1, 1), 0.5, 1e-12);
  // Closed form for d1 = 4, d2 = 10 at F = 2.5: z = 0.5, I_z(5, 2) = 6 z^5 - 5 z^6.
  EXPECT_NEAR(f_sf(2.5, 4, 10), 6 * std::pow(0.5, 5) - 5 * std::pow(0.5, 6), 1e-12);
  EXPECT_NEAR(f_sf(0.3486, 3, 717), 0.7901797426196482, 1e-10);
  EXPECT_THROW(f_sf(1, 0, 3), Error);
  EXPECT_THROW(f_sf(1, 3, -1), Error);
  EXPECT_EQ(f_sf(std::numeric_limits<double>::infinity(), 2, 5), 0.0);
}

TEST(FSurvival, MatchesQuadrature) {
  oracle::Rng rng(51);
  for (int i = 0; i < 60; ++i) {
    const double d1 = rng.uniform_int(1, 12), d2 = rng.uniform_int(1, 400);
    const double F = rng.uniform(0.01, 6.0);
    EXPECT_NEAR(f_sf(F, d1, d2), oracle::f_sf_quadrature(F, d1, d2, 20000), 1e-8) << F << " " << d1 << " " << d2;
  }
  EXPECT_NEAR(oracle::f_sf_quadrature(0.3486, 3, 717), f_sf(0.3486, 3, 717), 1e-10);
}

TEST(FSurvival, ComplementAndMonotone) {
  oracle::Rng rng(52);
  for (int i = 0; i < 300; ++i) {
    const double d1 = rng.uniform_int(1, 30), d2 = rng.uniform_int(1, 1000);
    const double F = rng.uniform(0, 20);
    EXPECT_NEAR(f_sf(F, d1, d2) + f_cdf(F, d1, d2), 1.0, 1e-10);
    EXPECT_GE(f_sf(F, d1, d2), f_sf(F + rng.uniform(0.001, 3), d1, d2));
    EXPECT_GE(f_sf(F, d1, d2), 0.0);
    EXPECT_LE(f_sf(F, d1, d2), 1.0);
  }
}

TEST(IncompleteBeta, EdgesAndSymmetry) {
  EXPECT_EQ(incomplete_beta(2, 3, 0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1), 1.0);
  EXPECT_NEAR(incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(incomplete_beta(2.5, 4.5, 0.2) + incomplete_beta(4.5, 2.5, 0.8), 1.0, 1e-13);
  EXPECT_THROW(incomplete_beta(0, 1, 0.5), Error);
  EXPECT_THROW(incomplete_beta(1, 1, 1.5), Error);
}

TEST(FactorialAnova, OneWayMatchesTextbook) {
  oracle::Rng rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = rng.uniform_int(2, 5);
    std::vector<std::vector<double>> groups(k);
    std::vector<double> vals;
    std::vector<int> gid;
    for (int g = 0; g < k; ++g) {
      const int n = rng.uniform_int(2, 9);
      for (int i = 0; i < n; ++i) {
        groups[g].push_back(rng.normal() + 0.5 * g);
        vals.push_back(groups[g].back());
        gid.push_back(g);
      }
    }
    const auto t = factorial_anova(oneway(groups));
    ASSERT_EQ(t.size(), 1u);
    const auto o = oracle::oneway_anova(vals, gid);
    EXPECT_NEAR(t[0].F, o.F, 1e-9 * std::max(1.0, o.F));
    EXPECT_EQ(t[0].df_num, o.df_num);
    EXPECT_EQ(t[0].df_den, o.df_den);
    EXPECT_NEAR(t[0].p, f_sf(o.F, o.df_num, o.df_den), 1e-9);
  }
}

TEST(FactorialAnova, BalancedTwoWayMatchesTextbook) {
  oracle::Rng rng(54);
  for (int trial = 0; trial < 30; ++trial) {
    const int a = rng.uniform_int(2, 4), b = rng.uniform_int(2, 4), r = rng.uniform_int(2, 5);
    const auto obs = twoway(rng, a, b, r, rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));
    std::vector<std::vector<std::vector<double>>> cells(a, std::vector<std::vector<double>>(b));
    for (const auto& o : obs) cells[o.factors.at("A")[1] - '0'][o.factors.at("B")[1] - '0'].push_back(o.value);
    const auto ref = oracle::twoway_balanced(cells);
    const auto t = factorial_anova(obs);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(t[0].effect, "A");
    EXPECT_EQ(t[1].effect, "B");
    EXPECT_EQ(t[2].effect, "A:B");
    EXPECT_NEAR(t[0].F, ref.F_a, 1e-9 * std::max(1.0, ref.F_a));
    EXPECT_NEAR(t[1].F, ref.F_b, 1e-9 * std::max(1.0, ref.F_b));
    EXPECT_NEAR(t[2].F, ref.F_ab, 1e-9 * std::max(1.0, ref.F_ab));
    EXPECT_EQ(t[2].df_num, ref.df_ab);
    EXPECT_EQ(t[2].df_den, ref.df_e);
  }
}

TEST(FactorialAnova, DegenerateDesigns) {
  EXPECT_THROW(factorial_anova(oneway({{1, 2, 3}})), Error);
  EXPECT_THROW(factorial_anova(oneway({{1}, {2}})), Error);
  std::vector<Observation> missing_cell = {{1, {{"A", "x"}, {"B", "p"}}}, {2, {{"A", "x"}, {"B", "q"}}},
                                           {3, {{"A", "y"}, {"B", "p"}}}, {4, {{"A", "y"}, {"B", "p"}}}};
  EXPECT_THROW(factorial_anova(missing_cell), Error);
  std::vector<Observation> ragged = {{1, {{"A", "x"}}}, {2, {{"B", "y"}}}};
  EXPECT_THROW(factorial_anova(ragged), Error);
  EXPECT_THROW(factorial_anova({}), Error);
}

TEST(ArtAnova, AllEqualGivesZero) {
  const auto t = art_anova(oneway({{5, 5, 5}, {5, 5, 5}, {5, 5}}));
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].F, 0.0);
  EXPECT_EQ(t[0].p, 1.0);
}

TEST(ArtAnova, SeparatedGroupsMatchRankAnova) {
  const auto t = art_anova(oneway({{1, 2, 3}, {101, 102, 103}}));
  const auto ranks = midranks(std::vector<double>{1, 2, 3, 101, 102, 103}, false);
  const auto o = oracle::oneway_anova(ranks, {0, 0, 0, 1, 1, 1});
  EXPECT_NEAR(t[0].F, o.F, 1e-9);
  EXPECT_NEAR(t[0].F, 13.5, 1e-9);
}

TEST(ArtAnova, AlignmentStripsOtherEffects) {
  oracle::Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    const auto obs = twoway(rng, rng.uniform_int(2, 4), rng.uniform_int(2, 3), rng.uniform_int(2, 4), 2, 1.5, 1);
    for (const auto& e : effect_names(obs)) {
      const auto aligned = align_for_effect(obs, e);
      double sum = 0;
      for (double v : aligned) sum += v;
      EXPECT_LT(std::abs(sum), 1e-8 * aligned.size());
      auto shifted = obs;
      for (std::size_t i = 0; i < obs.size(); ++i) shifted[i].value = aligned[i];
      for (const auto& t : factorial_anova(shifted)) {
        if (t.effect != e) EXPECT_LT(t.F, 1e-8) << e << " leaks into " << t.effect;
      }
    }
  }
}

TEST(ArtAnova, UnbalancedTwoWayRuns) {
  oracle::Rng rng(56);
  auto obs = twoway(rng, 3, 2, 4, 3, 0, 0);
  obs.erase(obs.begin() + 1);
  obs.erase(obs.begin() + 9);
  const auto t = art_anova(obs);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_GT(effect(t, "A").F, effect(t, "B").F);
  for (const auto& e : t) {
    EXPECT_GE(e.F, 0.0);
    EXPECT_NEAR(e.p, f_sf(e.F, e.df_num, e.df_den), 1e-12);
  }
}

TEST(AnovaJson, InfinityAsString) {
  const std::vector<AnovaTable> t = {{"A", std::numeric_limits<double>::infinity(), 1, 4, 0.0}, {"B", 1.5, 1, 4, 0.3}};
  const auto j = anova_to_json(t);
  EXPECT_EQ(j[0]["F"], "inf");
  EXPECT_EQ(j[1]["F"], 1.5);
}
