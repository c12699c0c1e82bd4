#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "uplift/estimators.hpp"
#include "uplift/rng.hpp"
#include "uplift/transforms.hpp"

using namespace uplift;

namespace {

// Saturating configuration: converges to group means on discrete contexts
// and never rolls back on validation noise.
GbmConfig saturating_config() {
  GbmConfig c;
  c.max_iterations = 400;
  c.learning_rate = 0.5;
  c.patience = 400;
  c.tol = 0.0;
  c.seed = 17;
  return c;
}

Matrix single_row(double value) {
  Matrix m(1, 1);
  m.at(0, 0) = value;
  return m;
}

// Two-context discrete campaign: per (context, arm), conversion probability
// and a two-point profit distribution for conversions.
struct TwoContextSpec {
  double p_conv[2][2];        // [context][arm]
  double profit_lo[2][2];     // taken with prob 0.5
  double profit_hi[2][2];

  double expected_profit_given_conv(int ctx, int arm) const {
    return 0.5 * (profit_lo[ctx][arm] + profit_hi[ctx][arm]);
  }
  // Direct evaluation from the generating tables.
  double true_ipc(int ctx) const {
    const double e1 = p_conv[ctx][1] * expected_profit_given_conv(ctx, 1);
    const double e0 = p_conv[ctx][0] * expected_profit_given_conv(ctx, 0);
    const double p_c = 0.5 * p_conv[ctx][1] + 0.5 * p_conv[ctx][0];
    return (e1 - e0) / p_c;
  }
};

UpliftDataset sample_two_context(const TwoContextSpec& spec, std::size_t n,
                                 std::uint64_t seed) {
  std::vector<UpliftRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    UpliftRow& r = rows[i];
    const int ctx = rng::uniform01(seed, i, 0) < 0.5 ? 0 : 1;
    r.features = {static_cast<double>(ctx)};
    r.treatment = rng::uniform01(seed, i, 1) < 0.5 ? 1 : 0;
    r.propensity = 0.5;
    const double pc = spec.p_conv[ctx][r.treatment];
    r.conversion = rng::uniform01(seed, i, 2) < pc ? 1 : 0;
    r.profit = 0.0;
    if (r.conversion == 1) {
      r.profit = rng::uniform01(seed, i, 3) < 0.5
                     ? spec.profit_lo[ctx][r.treatment]
                     : spec.profit_hi[ctx][r.treatment];
    }
  }
  return UpliftDataset(std::move(rows), 1);
}

}  // namespace

TEST_CASE("fit_ipc recovers the worked example's 4 euro per conversion") {
  const UpliftDataset d = testutil::replicate(testutil::table1(), 1000);
  const auto scorer = fit_ipc(d, saturating_config());
  const std::vector<double> s = scorer->score(single_row(1.0));
  CHECK(s[0] == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(scorer->method() == "ipc");
}

TEST_CASE("fit_retrospective full mode reproduces -1/6") {
  const UpliftDataset d = testutil::replicate(testutil::table1(), 1000);
  const auto scorer =
      fit_retrospective(d, saturating_config(), RetroMode::full);
  const std::vector<double> s = scorer->score(single_row(1.0));
  CHECK(s[0] == doctest::Approx(-1.0 / 6.0).epsilon(1e-3));
}

TEST_CASE("fit_retrospective simplified mode scores S(x)") {
  const UpliftDataset d = testutil::replicate(testutil::table1(), 1000);
  const auto scorer = fit_retrospective(d, saturating_config());
  const std::vector<double> s = scorer->score(single_row(1.0));
  CHECK(s[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
  CHECK(scorer->method() == "retro");
}

TEST_CASE("fit_retrospective symmetric conversions score 0.5") {
  // Three contexts, each with exactly balanced treated/control conversions.
  std::vector<UpliftRow> rows;
  for (std::size_t i = 0; i < 600; ++i) {
    const double ctx = static_cast<double>(i % 3);
    rows.push_back({{ctx}, static_cast<int>(i % 2), 1, 5.0 + ctx, 0.5});
  }
  const UpliftDataset d(std::move(rows), 1);
  GbmConfig cfg;
  cfg.seed = 5;
  const auto scorer = fit_retrospective(d, cfg);
  for (double s : scorer->score(feature_matrix(d))) {
    CHECK(s == doctest::Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("fit_crvtw estimates profit per instance") {
  const UpliftDataset d = testutil::replicate(testutil::table1(), 1000);
  const auto scorer = fit_crvtw(d, saturating_config());
  const std::vector<double> s = scorer->score(single_row(1.0));
  CHECK(s[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("fit_crvtw scales linearly with profit at tol 0") {
  std::vector<UpliftRow> rows;
  for (std::size_t i = 0; i < 400; ++i) {
    UpliftRow r;
    r.features = {rng::normal(6, i, 0)};
    r.treatment = rng::uniform01(6, i, 1) < 0.5 ? 1 : 0;
    r.conversion = rng::uniform01(6, i, 2) < 0.5 ? 1 : 0;
    r.profit = r.conversion ? std::exp(rng::normal(6, i, 3)) : 0.0;
    r.propensity = 0.5;
    rows.push_back(r);
  }
  const UpliftDataset d(rows, 1);
  std::vector<UpliftRow> scaled_rows = rows;
  for (UpliftRow& r : scaled_rows) r.profit *= 2.0;
  const UpliftDataset scaled(std::move(scaled_rows), 1);

  GbmConfig cfg = saturating_config();
  cfg.tol = 0.0;
  const auto a = fit_crvtw(d, cfg);
  const auto b = fit_crvtw(scaled, cfg);
  const Matrix f = feature_matrix(d);
  const std::vector<double> sa = a->score(f);
  const std::vector<double> sb = b->score(f);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    CHECK(sb[i] == 2.0 * sa[i]);  // exact at lambda = 2
  }
}

TEST_CASE("fit_rdt reproduces the class-transformed mean") {
  const UpliftDataset d = testutil::replicate(testutil::table1(), 1000);
  const auto scorer = fit_rdt(d, saturating_config());
  const std::vector<double> s = scorer->score(single_row(1.0));
  // mean z = 4/6, score = 2*(4/6) - 1 = 1/3.
  CHECK(s[0] == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("fit_rdt clips constant-one targets") {
  std::vector<UpliftRow> rows(200, UpliftRow{{1.0}, 1, 1, 5.0, 0.5});
  const UpliftDataset d(std::move(rows), 1);
  const auto scorer = fit_rdt(d, saturating_config());
  const std::vector<double> s = scorer->score(single_row(1.0));
  CHECK(s[0] == doctest::Approx(2.0 * 0.999 - 1.0));
}

TEST_CASE("fit_meta T-learner recovers the worked example's 2 euros") {
  const UpliftDataset d = testutil::replicate(testutil::table1(), 1000);
  const auto scorer = fit_meta(d, saturating_config(), MetaKind::T);
  const std::vector<double> s = scorer->score(single_row(1.0));
  CHECK(s[0] == doctest::Approx(2.0).epsilon(0.025));
  CHECK(scorer->method() == "tlearner");
}

TEST_CASE("meta-learners score near zero on identical arms") {
  // Two contexts; the outcome depends on x only, never on the arm.
  std::vector<UpliftRow> rows;
  for (std::size_t i = 0; i < 4000; ++i) {
    UpliftRow r;
    const double ctx = i % 2 == 0 ? -1.0 : 1.0;
    r.features = {ctx};
    r.treatment = rng::uniform01(7, i, 1) < 0.5 ? 1 : 0;
    r.conversion = rng::uniform01(7, i, 2) < 0.5 ? 1 : 0;
    r.profit = r.conversion ? 1.0 + 0.1 * ctx : 0.0;
    r.propensity = 0.5;
    rows.push_back(r);
  }
  const UpliftDataset d(std::move(rows), 1);
  GbmConfig cfg;
  cfg.seed = 7;
  for (MetaKind kind : {MetaKind::S, MetaKind::T, MetaKind::X}) {
    const auto scorer = fit_meta(d, cfg, kind);
    const std::vector<double> s = scorer->score(single_row(1.0));
    CHECK(std::abs(s[0]) < 0.1);
  }
}

TEST_CASE("X-learner matches T-learner on a single context") {
  std::vector<UpliftRow> rows;
  for (std::size_t i = 0; i < 100000; ++i) {
    UpliftRow r;
    r.features = {1.0};
    r.treatment = rng::uniform01(8, i, 0) < 0.5 ? 1 : 0;
    r.conversion = rng::uniform01(8, i, 1) < 0.3 ? 1 : 0;
    r.profit = r.conversion ? (r.treatment ? 6.0 : 5.0) : 0.0;
    r.propensity = 0.5;
    rows.push_back(r);
  }
  const UpliftDataset d(std::move(rows), 1);
  const auto t = fit_meta(d, saturating_config(), MetaKind::T);
  const auto x = fit_meta(d, saturating_config(), MetaKind::X);
  const double st = t->score(single_row(1.0))[0];
  const double sx = x->score(single_row(1.0))[0];
  CHECK(std::abs(sx - st) <= 0.05 * std::abs(st));
}

TEST_CASE("fit_ipc matches exhaustive enumeration on two contexts") {
  // Constant per-cell profits keep the Monte-Carlo error of the sampled
  // population well inside the 2% band at this n.
  TwoContextSpec spec{};
  spec.p_conv[0][0] = 0.30;
  spec.p_conv[0][1] = 0.60;
  spec.profit_lo[0][0] = spec.profit_hi[0][0] = 2.0;
  spec.profit_lo[0][1] = spec.profit_hi[0][1] = 10.0;
  spec.p_conv[1][0] = 0.20;
  spec.p_conv[1][1] = 0.50;
  spec.profit_lo[1][0] = spec.profit_hi[1][0] = 4.0;
  spec.profit_lo[1][1] = spec.profit_hi[1][1] = 8.0;

  const UpliftDataset d = sample_two_context(spec, 100000, 99);
  const auto scorer = fit_ipc(d, saturating_config());
  for (int ctx : {0, 1}) {
    const double estimated =
        scorer->score(single_row(static_cast<double>(ctx)))[0];
    const double truth = spec.true_ipc(ctx);
    CHECK(std::abs(estimated - truth) <= 0.02 * std::abs(truth));
  }
}

TEST_CASE("ipc and retrospective read only converted rows") {
  TwoContextSpec spec{};
  spec.p_conv[0][0] = 0.3;
  spec.p_conv[0][1] = 0.4;
  spec.p_conv[1][0] = 0.25;
  spec.p_conv[1][1] = 0.5;
  for (int c : {0, 1}) {
    for (int a : {0, 1}) {
      spec.profit_lo[c][a] = 2.0 + c + a;
      spec.profit_hi[c][a] = 8.0 + 2 * c;
    }
  }
  const UpliftDataset d = sample_two_context(spec, 4000, 123);

  // Perturb the features and profits of every non-converted row.
  std::vector<UpliftRow> perturbed = d.rows();
  for (std::size_t i = 0; i < perturbed.size(); ++i) {
    if (perturbed[i].conversion == 0) {
      perturbed[i].features[0] += 100.0 + static_cast<double>(i);
      perturbed[i].profit = -999.0;
    }
  }
  const UpliftDataset mutated(std::move(perturbed), 1);

  GbmConfig cfg;
  cfg.max_iterations = 60;
  cfg.seed = 5;
  const Matrix probe = feature_matrix(d);
  CHECK(fit_ipc(d, cfg)->score(probe) == fit_ipc(mutated, cfg)->score(probe));
  CHECK(fit_retrospective(d, cfg)->score(probe) ==
        fit_retrospective(mutated, cfg)->score(probe));
}

TEST_CASE("ipc scores scale exactly with profit at tol 0") {
  TwoContextSpec spec{};
  spec.p_conv[0][0] = 0.3;
  spec.p_conv[0][1] = 0.4;
  spec.p_conv[1][0] = 0.2;
  spec.p_conv[1][1] = 0.5;
  for (int c : {0, 1}) {
    for (int a : {0, 1}) {
      spec.profit_lo[c][a] = 1.0 + c;
      spec.profit_hi[c][a] = 9.0 + a;
    }
  }
  const UpliftDataset d = sample_two_context(spec, 3000, 7);
  std::vector<UpliftRow> scaled_rows = d.rows();
  for (UpliftRow& r : scaled_rows) r.profit *= 2.0;
  const UpliftDataset scaled(std::move(scaled_rows), 1);

  GbmConfig cfg;
  cfg.max_iterations = 50;
  cfg.tol = 0.0;
  cfg.seed = 9;
  const Matrix probe = feature_matrix(d);
  const std::vector<double> base = fit_ipc(d, cfg)->score(probe);
  const std::vector<double> twice = fit_ipc(scaled, cfg)->score(probe);
  REQUIRE(base.size() == twice.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(twice[i] == 2.0 * base[i]);
  }
}

TEST_CASE("simplified retrospective ranking ignores profit magnitudes") {
  TwoContextSpec spec{};
  spec.p_conv[0][0] = 0.3;
  spec.p_conv[0][1] = 0.5;
  spec.p_conv[1][0] = 0.5;
  spec.p_conv[1][1] = 0.3;
  for (int c : {0, 1}) {
    for (int a : {0, 1}) {
      spec.profit_lo[c][a] = 2.0;
      spec.profit_hi[c][a] = 6.0;
    }
  }
  const UpliftDataset d = sample_two_context(spec, 3000, 31);
  std::vector<UpliftRow> flat_rows = d.rows();
  for (UpliftRow& r : flat_rows) {
    if (r.conversion == 1) r.profit = 7.0;  // positive constant
  }
  const UpliftDataset flat(std::move(flat_rows), 1);

  GbmConfig cfg;
  cfg.max_iterations = 60;
  cfg.seed = 3;
  const Matrix probe = feature_matrix(d);
  // The fitted S-model never reads profit, so scores are identical.
  CHECK(fit_retrospective(d, cfg)->score(probe) ==
        fit_retrospective(flat, cfg)->score(probe));
}

TEST_CASE("zero-effect datasets score near zero") {
  GbmConfig cfg;
  cfg.seed = 2;

  // Per context, converted profits identical across arms with balanced
  // conversion counts: the transformed targets cancel exactly.
  std::vector<UpliftRow> rows;
  for (double ctx : {0.0, 1.0}) {
    for (int rep = 0; rep < 100; ++rep) {
      for (int arm : {0, 1}) {
        rows.push_back({{ctx}, arm, 1, 3.0 + ctx, 0.5});
        rows.push_back({{ctx}, arm, 0, 0.0, 0.5});
      }
    }
  }
  const UpliftDataset d(std::move(rows), 1);
  const auto ipc = fit_ipc(d, cfg);
  for (double s : ipc->score(feature_matrix(d))) {
    CHECK(std::abs(s) < 0.05);
  }

  // All-zero profits: crvtw targets are identically zero.
  std::vector<UpliftRow> zero_rows;
  for (std::size_t i = 0; i < 400; ++i) {
    zero_rows.push_back({{static_cast<double>(i % 3)},
                         static_cast<int>(i % 2), static_cast<int>(i % 4 < 2),
                         0.0, 0.5});
  }
  const UpliftDataset zeros(std::move(zero_rows), 1);
  const auto crvtw = fit_crvtw(zeros, cfg);
  for (double s : crvtw->score(feature_matrix(zeros))) {
    CHECK(std::abs(s) < 1e-12);
  }

  // Balanced null for rdt: the class target is 1 on exactly half of each
  // arm, independent of treatment.
  std::vector<UpliftRow> null_rows;
  for (std::size_t i = 0; i < 800; ++i) {
    const int arm = static_cast<int>(i % 2);
    const bool positive = (i / 2) % 2 == 0;
    // Treated rows need profit > 0 for z=1; control rows profit <= 0.
    const double profit = positive == (arm == 1) ? 2.0 : 0.0;
    null_rows.push_back({{static_cast<double>(i % 5)}, arm,
                         profit > 0.0 ? 1 : 0, profit, 0.5});
  }
  const UpliftDataset null_data(std::move(null_rows), 1);
  const auto rdt = fit_rdt(null_data, cfg);
  for (double s : rdt->score(feature_matrix(null_data))) {
    CHECK(std::abs(s) < 0.05);
  }
}

TEST_CASE("single-context datasets produce constant scores") {
  const UpliftDataset d = testutil::replicate(testutil::table1(), 50);
  GbmConfig cfg;
  cfg.max_iterations = 30;
  const Matrix probe = feature_matrix(d);
  for (const std::string& name : method_names()) {
    const auto scorer = fit_method(name, d, cfg);
    const std::vector<double> s = scorer->score(probe);
    REQUIRE(s.size() == d.size());
    for (double v : s) {
      CHECK(v == s[0]);
      CHECK(std::isfinite(v));
    }
  }
}

TEST_CASE("estimator preconditions") {
  GbmConfig cfg;
  // Too few conversions.
  std::vector<UpliftRow> few = {{{0.0}, 1, 1, 1.0, 0.5},
                                {{0.0}, 0, 1, 1.0, 0.5}};
  for (std::size_t i = 0; i < 20; ++i) {
    few.push_back({{0.0}, static_cast<int>(i % 2), 0, 0.0, 0.5});
  }
  const UpliftDataset d(std::move(few), 1);
  CHECK_THROWS_AS(fit_ipc(d, cfg), std::invalid_argument);
  CHECK_THROWS_AS(fit_retrospective(d, cfg), std::invalid_argument);

  // A conversion-empty treatment arm.
  std::vector<UpliftRow> one_arm;
  for (std::size_t i = 0; i < 40; ++i) {
    one_arm.push_back({{0.0}, 1, i % 2 == 0 ? 1 : 0,
                       i % 2 == 0 ? 2.0 : 0.0, 0.5});
    one_arm.push_back({{0.0}, 0, 0, 0.0, 0.5});
  }
  const UpliftDataset single(std::move(one_arm), 1);
  CHECK_THROWS_AS(fit_retrospective(single, cfg), std::invalid_argument);

  // An arm missing entirely for the meta-learners.
  std::vector<UpliftRow> control_only(
      40, UpliftRow{{0.0}, 0, 1, 1.0, 0.5});
  const UpliftDataset no_treated(std::move(control_only), 1);
  CHECK_THROWS_AS(fit_meta(no_treated, cfg, MetaKind::T),
                  std::invalid_argument);

  // Width mismatch at scoring time.
  const auto scorer =
      fit_ipc(testutil::replicate(testutil::table1(), 100), cfg);
  CHECK_THROWS_AS(scorer->score(Matrix(3, 2, 0.0)), std::invalid_argument);

  CHECK_THROWS_AS(
      fit_method("nope", testutil::table1(), cfg), std::invalid_argument);
  CHECK(is_known_method("xlearner"));
  CHECK_FALSE(is_known_method("oracle"));
}
