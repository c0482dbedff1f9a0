// Acceptance checks: one PASS/FAIL line per criterion. Tolerances are fixed
// here and never read from the environment. Optional arguments select
// criteria by number, e.g. `acceptance 3 7`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sqhardnet/sqhardnet.hpp"

using namespace sqhardnet;

namespace {

constexpr double kSigmas = 4.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

FamilySpec spec_of(std::size_t n, std::size_t k, const char* inner, const char* outer) {
  return {n, k, parse_activation(inner), parse_activation(outer)};
}

// 1. Orthogonality on three sign-symmetric distributions.
Outcome orthogonality() {
  constexpr std::size_t n = 10, k = 3, pairs = 20, samples = 1000000, sym_samples = 1000;
  const auto chosen = random_distinct_pairs(n, k, pairs, 1);
  std::size_t failures = 0, checked = 0;
  double worst_sym = 0.0, worst_z = 0.0;
  for (const auto& dist : {DistributionSpec::gaussian(n), DistributionSpec::rademacher(n),
                           DistributionSpec::scale_mixture(n)})
    for (const char* inner : {"relu", "tanh"})
      for (const char* outer : {"identity", "tanh"}) {
        const auto spec = spec_of(n, k, inner, outer);
        const auto mc = mc_inner_products(spec, chosen, dist, samples, derive_seed(2, "mc"));
        for (std::size_t p = 0; p < pairs; ++p) {
          const auto sym = symmetrized_inner_product(spec, chosen[p].first, chosen[p].second,
                                                     dist, sym_samples, derive_seed(2, "sym", p));
          worst_sym = std::max(worst_sym, std::abs(sym.value));
          // Degenerate configurations (g ≡ 0) only carry roundoff; skip them here.
          if (mc[p].std_error > kRoundoffFloor)
            worst_z = std::max(worst_z, std::abs(mc[p].value) / mc[p].std_error);
          ++checked;
          if (!(std::abs(sym.value) <= 1e-10 && mc[p].within(0.0, kSigmas, kRoundoffFloor)))
            ++failures;
        }
      }
  return {failures == 0, std::to_string(checked - failures) + "/" + std::to_string(checked) +
                             " pairs; max |symmetrized| " + fmt("%.2e", worst_sym) +
                             ", max |mc|/stderr " + fmt("%.2f", worst_z)};
}

// 2. Second moment of g from the Hermite series against Monte Carlo.
Outcome series_second_moment() {
  bool ok = second_moment_g(spec_of(1, 1, "relu", "identity"), relu_series(50), 50).value == 1.0;
  std::string detail = ok ? "k=1 relu = 1 exactly" : "k=1 relu != 1";
  for (std::size_t k : {2u, 3u})
    for (const char* inner : {"relu", "tanh"}) {
      const auto spec = spec_of(k, k, inner, "identity");
      const double series = second_moment_g(spec, expansion_series(spec.inner, 200), 200).value;
      const auto mc = mc_second_moment_g(spec, leading_concept(k), DistributionSpec::gaussian(k),
                                         1000000, derive_seed(3, inner, k));
      const double slack =
          std::max(kSigmas * mc.std_error, 0.01 * std::abs(mc.value)) + kRoundoffFloor;
      const bool good = std::abs(series - mc.value) <= slack;
      ok = ok && good;
      detail += "; " + std::string(inner) + " k=" + std::to_string(k) + " " +
                fmt("%.6g", series) + " vs " + fmt("%.6g", mc.value) + (good ? "" : " (off)");
    }
  return {ok, detail};
}

// 3. ReLU coefficients: quadrature vs closed form, and the i^{-5/2} decay of c_{2i}^2.
Outcome relu_coefficients() {
  const auto q = hermite_coeffs_quadrature(ActivationSpec::relu(), 60, 400);
  double worst = 0.0;
  for (int i = 0; i <= 30; ++i) worst = std::max(worst, std::abs(q.at(i) - relu_hermite_coeff(i)));
  double lo = INFINITY, hi = 0.0;
  for (int i = 5; i <= 30; ++i) {
    const double c = relu_hermite_coeff(2 * i);
    const double scaled = c * c * std::pow(i, 2.5);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
  }
  return {worst <= 1e-8 && hi <= 4.0 * lo,
          "max |quad - closed| " + fmt("%.2e", worst) + "; c_2i^2 i^2.5 in [" + fmt("%.4g", lo) +
              ", " + fmt("%.4g", hi) + "]"};
}

// 4. Sigmoid coefficients: c0, vanishing even terms, stretched-exponential odd decay.
Outcome sigmoid_coefficients() {
  const auto s = hermite_coeffs_quadrature(ActivationSpec::sigmoid(), 25);
  double worst_even = 0.0;
  for (int i = 2; i <= 25; i += 2) worst_even = std::max(worst_even, std::abs(s.at(i)));
  std::vector<double> xs, ys;
  for (int i = 1; i <= 25; i += 2) {
    xs.push_back(std::sqrt(static_cast<double>(i)));
    ys.push_back(std::log(std::abs(s.at(i))));
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    sx += xs[j];
    sy += ys[j];
    sxx += xs[j] * xs[j];
    sxy += xs[j] * ys[j];
    syy += ys[j] * ys[j];
  }
  const double cov = sxy - sx * sy / m, vx = sxx - sx * sx / m, vy = syy - sy * sy / m;
  const double r2 = cov * cov / (vx * vy);
  const bool ok = std::abs(s.at(0) - 0.5) <= 1e-10 && worst_even <= 1e-10 && r2 >= 0.9;
  return {ok, "c0 - 0.5 = " + fmt("%.2e", s.at(0) - 0.5) + ", max |c_even| " +
                  fmt("%.2e", worst_even) + ", R^2 " + fmt("%.4f", r2) + ", slope " +
                  fmt("%.3f", cov / vx)};
}

std::uint64_t brute_force_odd_sum(unsigned i, unsigned k) {
  std::vector<unsigned> parts;
  std::uint64_t total = 0;
  std::function<void(unsigned, unsigned)> rec = [&](unsigned left, unsigned slots) {
    if (slots == 0) {
      if (left != 0) return;
      double multinomial = std::tgamma(i + 1.0);
      for (unsigned p : parts) multinomial /= std::tgamma(p + 1.0);
      total += static_cast<std::uint64_t>(std::llround(multinomial));
      return;
    }
    for (unsigned p = 1; p <= left; p += 2) {
      parts.push_back(p);
      rec(left - p, slots - 1);
      parts.pop_back();
    }
  };
  rec(i, k);
  return total;
}

// 5. Odd-composition sums.
Outcome odd_compositions() {
  std::size_t bad = 0, cases = 0;
  for (unsigned k = 1; k <= 6; ++k)
    for (unsigned i = 0; i <= 12; ++i) {
      const BigInt v = odd_composition_multinomial_sum(i, k);
      const bool positive = i >= k && (i - k) % 2 == 0;
      ++cases;
      if (v != BigInt(brute_force_odd_sum(i, k)) || (v > 0) != positive) ++bad;
    }
  return {bad == 0, std::to_string(cases - bad) + "/" + std::to_string(cases) + " (i, k) cases"};
}

// 6. Truncation bounds against Monte Carlo.
Outcome truncation() {
  bool ok = true;
  std::string detail;
  for (auto [k, cap] : std::vector<std::pair<int, double>>{{3, 2.0}, {3, 3.0}, {5, 4.0}, {7, 6.0}}) {
    const auto norm = mc_truncation_norm(k, cap, 1000000, derive_seed(6, "norm", k));
    const auto prob = mc_truncation_disagreement(k, cap, 1000000, derive_seed(6, "prob", k));
    const bool good = norm.value <= truncation_norm_bound(k, cap) + kSigmas * norm.std_error &&
                      prob.value <= truncation_prob_bound(k, cap) + kSigmas * prob.std_error;
    ok = ok && good;
    detail += (detail.empty() ? "" : "; ") + std::string("(") + std::to_string(k) + "," +
              fmt("%g", cap) + ") norm " + fmt("%.3g", norm.value) + " <= " +
              fmt("%.3g", truncation_norm_bound(k, cap)) + ", prob " + fmt("%.3g", prob.value) +
              " <= " + fmt("%.3g", truncation_prob_bound(k, cap));
  }
  return {ok, detail};
}

template <class Fn>
bool throws_invalid(Fn fn) {
  try {
    fn();
  } catch (const std::invalid_argument&) {
    return true;
  }
  return false;
}

// 7. SDA fixtures and rejected parameter combinations.
Outcome sda() {
  struct Fixture {
    double size, beta, gamma, gamma_prime, d;
  };
  std::size_t good = 0;
  for (const Fixture& f : {Fixture{1140, 1, 0, 0.01, 11.4}, Fixture{28, 0.5, 0, 0.0025, 0.14},
                           Fixture{100, 2, 1, 0.5, 50}, Fixture{3432, 1, 0.25, 0.03, 137.28},
                           Fixture{1, 1, 0, 1, 1}}) {
    SDAParams p;
    p.class_size = f.size;
    p.beta = f.beta;
    p.gamma = f.gamma;
    p.gamma_prime = f.gamma_prime;
    if (std::abs(sda_lower_bound(p) - f.d) <= 1e-12 * f.d) ++good;
  }
  SDAParams p;
  p.class_size = 1140;
  p.gamma_prime = 0.01;
  p.tau = 0.1;
  p.epsilon = 0.15;
  const bool weak = throws_invalid([&] { query_count_bound(p, QueryMode::weak); });
  p.epsilon = 0.3;
  const bool l2 = throws_invalid([&] { query_count_bound(p, QueryMode::l2); });
  p.gamma = 1.0;
  const bool equal = throws_invalid([&] { sda_lower_bound(p); });
  p.gamma = 2.0;
  const bool below = throws_invalid([&] { sda_lower_bound(p); });
  const bool ok = good == 5 && weak && l2 && equal && below;
  return {ok, std::to_string(good) + "/5 fixtures; rejects tau > eps/2: " + (weak ? "yes" : "no") +
                  ", tau > eps^2: " + (l2 ? "yes" : "no") +
                  ", beta <= gamma: " + (equal && below ? "yes" : "no")};
}

// 8. Adversary-d0 distinguishing game.
Outcome game() {
  const auto spec = spec_of(8, 2, "relu", "identity");
  const ExpectationEngine engine(spec, DistributionSpec::gaussian(8), {20000, 8, 4});
  const auto concepts = enumerate_family(8, 2);
  auto queries = matched_filter_suite(engine, concepts);
  const std::size_t matched = queries.size();
  for (std::size_t i = 0; i < 8; ++i) {
    queries.push_back(SQQuery::inner_product(
        "coordinate", [i](std::span<const double> x) { return x[i]; }, {i}));
    queries.push_back(SQQuery::general(
        "indicator",
        [i](std::span<const double> x, double y) { return x[i] > 0.5 ? y : 0.0; }, {i}));
  }
  queries.push_back(SQQuery::inner_product(
      "product", [](std::span<const double> x) { return std::tanh(x[0] * x[1]); }, {0, 1}));
  const auto t = run_distinguishing_game(concepts, engine, queries, 0.05);
  std::size_t one_each = 0, max_count = 0;
  for (std::size_t q = 0; q < t.steps.size(); ++q) {
    max_count = std::max(max_count, t.steps[q].ruled_out_count);
    if (q < matched && t.steps[q].ruled_out_count == 1 && t.steps[q].ruled_out[q]) ++one_each;
  }
  const bool ok = concepts.size() == 28 && t.budget_claim_holds && t.sum_claim_holds &&
                  one_each == matched;
  return {ok, "|C| = 28, d = " + fmt("%.4g", t.d) + ", max |S_k| = " + std::to_string(max_count) +
                  " <= |C|/d = " + fmt("%.4g", 28.0 / t.d) + "; matched filters ruling out "
                  "exactly their own concept: " + std::to_string(one_each) + "/" +
                  std::to_string(matched)};
}

// 9. 0/1 loss of a Boolean classifier: direct frequency vs 1/2 − <c, f>/2.
Outcome zero_one_identity() {
  const auto spec = spec_of(8, 2, "relu", "tanh");
  const auto dist = DistributionSpec::gaussian(8);
  const auto family = enumerate_family(8, 2);
  std::size_t agree = 0;
  double worst = 0.0;
  for (std::size_t j = 0; j < 10; ++j) {
    const ConceptId& c = family[(j * 5) % family.size()];
    RealFn h;
    switch (j % 4) {
      case 0:
        h = [&spec, c](std::span<const double> x) { return eval_f(spec, c, x) >= 0 ? 1.0 : -1.0; };
        break;
      case 1: {
        const ConceptId other = family[(j * 5 + 3) % family.size()];
        h = [&spec, other](std::span<const double> x) {
          return eval_f(spec, other, x) >= 0 ? 1.0 : -1.0;
        };
        break;
      }
      case 2:
        h = [j](std::span<const double> x) { return x[j % 8] >= 0 ? 1.0 : -1.0; };
        break;
      default:
        h = [c](std::span<const double> x) {
          return std::abs(x[c.indices[0]]) >= std::abs(x[c.indices[1]]) ? 1.0 : -1.0;
        };
    }
    const auto loss = zero_one_loss(spec, c, h, dist, 200000, derive_seed(9, j));
    const double combined = std::hypot(loss.direct.std_error, loss.identity.std_error);
    worst = std::max(worst, std::abs(loss.direct.value - loss.identity.value) / combined);
    if (loss.agree) ++agree;
  }
  return {agree == 10, std::to_string(agree) + "/10 pairs within 4 combined stderr (max " +
                           fmt("%.2f", worst) + ")"};
}

// 10. Gradient descent through the oracle.
Outcome gd_via_sq_checks() {
  const auto spec = spec_of(4, 1, "relu", "identity");
  const auto target = OracleTarget::concept_labels(spec, ConceptId{{0}}, LabelMode::regression);
  OracleConfig oracle;
  oracle.tau = 0.02;
  oracle.policy = OraclePolicy::truthful_mc;
  oracle.sample_budget = 100000;
  oracle.seed = derive_seed(10, "oracle");
  oracle.target = target;
  oracle.dist = DistributionSpec::gaussian(4);
  GdSqConfig cfg;
  cfg.steps = 100;
  cfg.learning_rate = 0.05;
  // Same effective sample and seed as the plain GD run below.
  cfg.marginal_samples = oracle.sample_budget;
  cfg.marginal_seed = oracle.seed;
  cfg.eval_samples = 20000;
  cfg.eval_seed = derive_seed(10, "eval");
  const auto init = init_mlp<double>(16, 4, ActivationSpec::tanh(), 1.0, derive_seed(10, "init"));
  const auto via_sq = gd_via_sq(init, oracle, cfg);

  const auto x = sample(oracle.dist, oracle.sample_budget, oracle.seed);
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) y[r] = target.conditional_mean(row_of(x, r));
  const auto eval = sample(oracle.dist, cfg.eval_samples, cfg.eval_seed);
  auto p = init;
  double worst_loss = 0.0;
  for (std::size_t s = 1; s <= cfg.steps; ++s) {
    const auto g = grad_sq_loss(p, x, y).flatten();
    auto flat = p.flatten();
    for (std::size_t j = 0; j < flat.size(); ++j) flat[j] -= cfg.learning_rate * g[j];
    p.assign(flat);
    const double loss = population_sq_distance(p, target, eval);
    worst_loss = std::max(worst_loss, std::abs(via_sq.trace[s].loss - loss) / loss);
  }
  const auto a = via_sq.params.flatten();
  const auto b = p.flatten();
  double diff = 0.0, norm = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    diff += (a[j] - b[j]) * (a[j] - b[j]);
    norm += b[j] * b[j];
  }
  const double rel = std::sqrt(diff / norm);
  const bool truthful_ok = rel <= 1e-3 && worst_loss <= 1e-3;

  // Zero answers make training independent of the target; the correlation is
  // measured across independent runs (initialization and samples).
  constexpr std::size_t runs = 16;
  MeanAccumulator corr;
  double single_z = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    OracleConfig zero = oracle;
    zero.policy = OraclePolicy::adversary_zero;
    GdSqConfig zcfg = cfg;
    zcfg.marginal_samples = 10000;
    zcfg.marginal_seed = derive_seed(10, "zero-marginal", r);
    zcfg.eval_samples = 2000;
    const auto start =
        init_mlp<double>(16, 4, ActivationSpec::tanh(), 1.0, derive_seed(10, "zero-init", r));
    const auto trained = gd_via_sq(start, zero, zcfg).params;
    const auto c = mlp_target_correlation(trained, target, oracle.dist, 100000,
                                          derive_seed(10, "zero-corr", r));
    if (r == 0) single_z = c.value / c.std_error;
    corr.add(c.value);
  }
  const auto across = corr.estimate();
  const bool zero_ok = across.within(0.0, kSigmas);
  return {truthful_ok && zero_ok,
          "truthful vs sample GD: params rel " + fmt("%.2e", rel) + ", loss trace rel " +
              fmt("%.2e", worst_loss) + "; adversary-zero correlation " +
              fmt("%.2e", across.value) + " +- " + fmt("%.2e", across.std_error) + " over " +
              std::to_string(runs) + " runs (first run alone: " + fmt("%.1f", single_z) +
              " MC stderr)"};
}

// 11. Figure reproductions (10 trials each).
Outcome figures(std::string& notes) {
  bool ok = true;
  std::string detail;
  for (Figure f : {Figure::fig1a, Figure::fig1b, Figure::fig2a, Figure::fig2b}) {
    const auto start = std::chrono::steady_clock::now();
    const auto r = reproduce_figure(figure_config(f), 10, 11);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto& first = r.aggregate.front();
    const auto& last = r.aggregate.back();
    const bool good = r.train_ok && r.test_ok && r.bayes_ok;
    ok = ok && good;
    std::string line = std::string(figure_name(f)) + (good ? " ok" : " FAILED");
    if (r.config.task == TaskMode::classification)
      line += " (train01 " + fmt("%.3f", last.train_01.median) + ", test01 " +
              fmt("%.3f", last.test_01.median) + ", bayes01 " + fmt("%.3f", last.bayes_01.median);
    else
      line += " (trainsq " + fmt("%.4f", last.train_sq.median) + ", testsq " +
              fmt("%.3f", last.test_sq.median) + " vs initial " + fmt("%.3f", first.test_sq.median);
    line += ", " + fmt("%.0f", secs) + " s)";
    detail += (detail.empty() ? "" : "; ") + line;
    notes += std::string("       ") + figure_name(f) + ": train square loss non-increasing after "
             "epoch 10 in " + std::to_string(r.monotone_trials) + "/10 trials\n";
  }
  return {ok, detail};
}

// 12. Backpropagated gradient vs central finite differences.
Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const ActivationSpec act = t % 3 == 0 ? ActivationSpec::tanh()
                               : t % 3 == 1 ? ActivationSpec::sigmoid()
                                            : ActivationSpec::relu();
    const auto units = static_cast<Eigen::Index>(3 + t % 5);
    const auto inputs = static_cast<Eigen::Index>(2 + t % 4);
    auto p = init_mlp<double>(units, inputs, act, 1.0, derive_seed(12, "init", t));
    const auto shift = sample(DistributionSpec::gaussian(static_cast<std::size_t>(units)), 1,
                              derive_seed(12, "bias", t));
    for (Eigen::Index i = 0; i < units; ++i) p.b[i] = 0.3 * shift(0, i);
    const Eigen::MatrixXd x =
        sample(DistributionSpec::gaussian(static_cast<std::size_t>(inputs)), 12,
               derive_seed(12, "x", t));
    const Eigen::VectorXd y =
        sample(DistributionSpec::gaussian(1), 12, derive_seed(12, "y", t)).col(0);
    const auto g = grad_sq_loss(p, x, y).flatten();
    const auto flat = p.flatten();
    double diff = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < flat.size(); ++j) {
      const double h = 1e-6;
      auto q = p;
      auto plus = flat, minus = flat;
      plus[j] += h;
      minus[j] -= h;
      q.assign(plus);
      const double up = mean_sq_loss(q, x, y);
      q.assign(minus);
      const double down = mean_sq_loss(q, x, y);
      const double fd = (up - down) / (2.0 * h);
      diff += (fd - g[j]) * (fd - g[j]);
      norm += g[j] * g[j];
    }
    worst = std::max(worst, std::sqrt(diff / norm));
  }
  return {worst <= 1e-6, "max relative error " + fmt("%.2e", worst) + " over 20 instances"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  std::string notes;
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: no runtime requirement
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "orthogonality", 120, orthogonality},
      {2, "series second moment", 60, series_second_moment},
      {3, "relu Hermite coefficients", 0, relu_coefficients},
      {4, "sigmoid Hermite coefficients", 0, sigmoid_coefficients},
      {5, "odd compositions", 0, odd_compositions},
      {6, "truncation bounds", 120, truncation},
      {7, "SDA bound", 0, sda},
      {8, "distinguishing game", 300, game},
      {9, "0/1 loss identity", 60, zero_one_identity},
      {10, "GD via SQ", 120, gd_via_sq_checks},
      {11, "figure reproduction", 1800, [&notes] { return figures(notes); }},
      {12, "gradient check", 0, gradient_check},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.1f s", secs);
    if (c.limit_seconds > 0) {
      timing += " of " + fmt("%.0f", c.limit_seconds);
      if (secs > c.limit_seconds) {
        o.pass = false;
        timing += ", over the limit";
      }
    }
    std::printf("%s criterion %2d %s: %s (%s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), timing.c_str());
    if (c.id == 11 && !notes.empty()) std::printf("%s", notes.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
