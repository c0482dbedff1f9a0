#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sqhardnet/analysis.hpp"
#include "sqhardnet/distributions.hpp"
#include "sqhardnet/family.hpp"
#include "sqhardnet/mlp.hpp"
#include "sqhardnet/montecarlo.hpp"
#include "sqhardnet/quadrature.hpp"

namespace sqhardnet {

using RealFn = std::function<double(std::span<const double>)>;
using LabeledFn = std::function<double(std::span<const double>, double)>;

enum class QueryKind { general, inner_product };

/**
 * A statistical query. Inner-product queries store g and stand for
 * h(x, y) = g(x)·y. `support` lists the coordinates the evaluator reads
 * (empty means it may read all of them).
 */
struct SQQuery {
  QueryKind kind = QueryKind::inner_product;
  std::string descriptor;
  LabeledFn h;
  RealFn g;
  std::vector<std::size_t> support;
  double declared_norm_bound = 1.0;

  double operator()(std::span<const double> x, double y) const {
    return kind == QueryKind::general ? h(x, y) : g(x) * y;
  }

  static SQQuery general(std::string descriptor, LabeledFn h,
                         std::vector<std::size_t> support = {}) {
    SQQuery q;
    q.kind = QueryKind::general;
    q.descriptor = std::move(descriptor);
    q.h = std::move(h);
    q.support = std::move(support);
    return q;
  }

  static SQQuery inner_product(std::string descriptor, RealFn g,
                               std::vector<std::size_t> support = {}) {
    SQQuery q;
    q.kind = QueryKind::inner_product;
    q.descriptor = std::move(descriptor);
    q.g = std::move(g);
    q.support = std::move(support);
    return q;
  }
};

/// ĥ(x) = (h(x, 1) − h(x, −1))/2. For an inner-product query this is g.
inline RealFn h_hat(const SQQuery& q) {
  if (q.kind == QueryKind::inner_product) return q.g;
  return [h = q.h](std::span<const double> x) {
    return 0.5 * (h(x, 1.0) - h(x, -1.0));
  };
}

/// x ↦ (h(x, 1) + h(x, −1))/2, so that E_{D_0}[h] = E_D[h_sym].
inline RealFn h_symmetric(const SQQuery& q) {
  if (q.kind == QueryKind::inner_product)
    return [](std::span<const double>) { return 0.0; };
  return [h = q.h](std::span<const double> x) {
    return 0.5 * (h(x, 1.0) + h(x, -1.0));
  };
}

/// Who the labels come from.
struct OracleTarget {
  enum class Kind { concept_labels, reference_d0, zero_function };
  Kind kind = Kind::reference_d0;
  FamilySpec spec;
  ConceptId id;
  LabelMode mode = LabelMode::pconcept;

  static OracleTarget concept_labels(FamilySpec spec, ConceptId id, LabelMode mode) {
    spec.validate();
    id.validate(spec);
    if (mode == LabelMode::pconcept) require_pconcept(spec);
    return {Kind::concept_labels, std::move(spec), std::move(id), mode};
  }
  static OracleTarget reference() { return {Kind::reference_d0, {}, {}, LabelMode::pconcept}; }
  static OracleTarget zero() { return {Kind::zero_function, {}, {}, LabelMode::regression}; }

  /// E[y | x].
  double conditional_mean(std::span<const double> x) const {
    return kind == Kind::concept_labels ? eval_f(spec, id, x) : 0.0;
  }

  /// True when y is a coin flip with mean conditional_mean(x).
  bool binary_labels() const {
    return kind == Kind::reference_d0 ||
           (kind == Kind::concept_labels && mode == LabelMode::pconcept);
  }

  std::string name() const {
    switch (kind) {
      case Kind::concept_labels: return "concept:" + id.to_string();
      case Kind::reference_d0: return "d0";
      case Kind::zero_function: return "zero";
    }
    return "?";
  }
};

enum class OraclePolicy { truthful_mc, adversary_d0, adversary_zero };

inline OraclePolicy parse_oracle_policy(const std::string& text) {
  if (text == "truthful" || text == "truthful-mc") return OraclePolicy::truthful_mc;
  if (text == "d0" || text == "adversary-d0") return OraclePolicy::adversary_d0;
  if (text == "zero" || text == "adversary-zero") return OraclePolicy::adversary_zero;
  throw std::invalid_argument("unknown oracle policy: " + text);
}

struct OracleConfig {
  double tau = 0.01;
  OraclePolicy policy = OraclePolicy::truthful_mc;
  /// Rows of the oracle's sample (truthful-mc and adversary-d0).
  std::size_t sample_budget = 100000;
  std::uint64_t seed = 0;
  OracleTarget target = OracleTarget::reference();
  DistributionSpec dist = DistributionSpec::gaussian(1);
  /// Rows used to certify ‖h(·, y)‖ ≤ bound before a query is answered.
  std::size_t certify_samples = 20000;

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("oracle tolerance must be > 0");
    dist.validate();
    if (target.kind == OracleTarget::Kind::concept_labels && target.spec.n != dist.dim)
      throw std::invalid_argument("target dimension does not match the distribution");
    if (policy != OraclePolicy::adversary_zero && sample_budget < 2)
      throw std::invalid_argument("oracle sample budget must be >= 2");
  }
};

struct QueryRejected : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OracleBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// MC norms of x ↦ h(x, 1) and x ↦ h(x, −1) (both equal ‖g‖ for inner products).
struct NormCertificate {
  EstimateWithError norm_positive;
  EstimateWithError norm_negative;
  bool passed = false;
};

inline NormCertificate certify_norm(const SQQuery& q, const DistributionSpec& dist,
                                    std::size_t n_samples, std::uint64_t seed) {
  NormCertificate cert;
  auto norm_of = [&](double y) {
    return norm_from_square(mc_mean(dist, n_samples, seed, [&](std::span<const double> x) {
      const double v = q.kind == QueryKind::general ? q.h(x, y) : q.g(x);
      return v * v;
    }));
  };
  cert.norm_positive = norm_of(1.0);
  cert.norm_negative =
      q.kind == QueryKind::general ? norm_of(-1.0) : cert.norm_positive;
  auto ok = [&](const EstimateWithError& e) {
    return e.value <= q.declared_norm_bound + 3.0 * e.std_error;
  };
  cert.passed = ok(cert.norm_positive) && ok(cert.norm_negative);
  return cert;
}

struct OracleResponse {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Answers from per-coordinate query features evaluated on the oracle sample.
struct BatchResponse {
  std::vector<double> values;
  std::vector<double> std_errors;
};

struct FeatureSums {
  Eigen::VectorXd weighted;  // Σ_r g_j(x_r)·u_r
  Eigen::VectorXd squared;   // Σ_r g_j(x_r)²·v_r
};

using FeatureSumsFn = std::function<FeatureSums(const SampleMatrix&, const Eigen::VectorXd&,
                                                const Eigen::VectorXd&)>;

/**
 * Stateful front end for one OracleConfig. The truthful and d0 policies read
 * a fixed sample drawn from (dist, sample_budget, seed), so a repeated query
 * gets the same answer. Label randomness is integrated out: a truthful
 * answer averages E[h(x, y) | x] over the sample.
 */
class StatOracle {
 public:
  explicit StatOracle(OracleConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const OracleConfig& config() const { return cfg_; }
  std::size_t queries_answered() const { return answered_; }

  OracleResponse answer(const SQQuery& q) {
    const auto cert = certify_norm(q, cfg_.dist, cfg_.certify_samples,
                                   derive_seed(cfg_.seed, "certify", answered_));
    if (!cert.passed)
      throw QueryRejected("query '" + q.descriptor + "' fails norm certification (" +
                          std::to_string(cert.norm_positive.value) + ", " +
                          std::to_string(cert.norm_negative.value) + ")");
    ++answered_;
    switch (cfg_.policy) {
      case OraclePolicy::adversary_zero:
        return {0.0, 0.0, 0};
      case OraclePolicy::adversary_d0: {
        if (q.kind == QueryKind::inner_product) return {0.0, 0.0, 0};
        const RealFn sym = h_symmetric(q);
        const auto est = mc_mean(cfg_.dist, cfg_.sample_budget, cfg_.seed, sym);
        return {est.value, est.std_error, est.n_samples};
      }
      case OraclePolicy::truthful_mc: {
        const auto est = mc_mean(cfg_.dist, cfg_.sample_budget, cfg_.seed,
                                 [&](std::span<const double> x) {
                                   return conditional_value(q, x);
                                 });
        require_budget(est.std_error, q.descriptor);
        return {est.value, est.std_error, est.n_samples};
      }
    }
    return {};
  }

  /**
   * Answers the inner-product queries g_1..g_count in one pass. `sums(X, u, v)`
   * must return Σ_r g_j(x_r)·u_r and Σ_r g_j(x_r)²·v_r for every j (rows of X
   * = oracle sample), so the feature matrix never has to be materialized.
   * Equivalent to answering each query separately; norm bounds are the
   * caller's responsibility.
   */
  BatchResponse answer_inner_products(const FeatureSumsFn& sums, Eigen::Index count) {
    BatchResponse out;
    out.values.assign(static_cast<std::size_t>(count), 0.0);
    out.std_errors.assign(static_cast<std::size_t>(count), 0.0);
    answered_ += static_cast<std::size_t>(count);
    if (cfg_.policy != OraclePolicy::truthful_mc) return out;
    ensure_sample();
    const FeatureSums s = sums(*sample_, labels_, labels_.array().square().matrix());
    if (s.weighted.size() != count || s.squared.size() != count)
      throw std::invalid_argument("feature sums have the wrong length");
    const double n = static_cast<double>(sample_->rows());
    for (Eigen::Index j = 0; j < count; ++j) {
      const double mean = s.weighted[j] / n;
      const double var = std::max(0.0, s.squared[j] / n - mean * mean) * n / (n - 1.0);
      const double se = std::sqrt(var / n);
      require_budget(se, "batched inner-product query " + std::to_string(j));
      out.values[static_cast<std::size_t>(j)] = mean;
      out.std_errors[static_cast<std::size_t>(j)] = se;
    }
    return out;
  }

 private:
  double conditional_value(const SQQuery& q, std::span<const double> x) const {
    const double c = cfg_.target.conditional_mean(x);
    if (q.kind == QueryKind::inner_product) return q.g(x) * c;
    if (cfg_.target.binary_labels())
      return 0.5 * (1.0 + c) * q.h(x, 1.0) + 0.5 * (1.0 - c) * q.h(x, -1.0);
    return q.h(x, c);
  }

  void require_budget(double std_error, const std::string& what) const {
    if (3.0 * std_error > cfg_.tau)
      throw OracleBudgetError("sample budget " + std::to_string(cfg_.sample_budget) +
                              " gives 3*stderr = " + std::to_string(3.0 * std_error) +
                              " > tau = " + std::to_string(cfg_.tau) + " for " + what);
  }

  void ensure_sample() {
    if (sample_) return;
    sample_ = sample(cfg_.dist, cfg_.sample_budget, cfg_.seed);
    labels_.resize(sample_->rows());
    for (Eigen::Index r = 0; r < sample_->rows(); ++r)
      labels_[r] = cfg_.target.conditional_mean(row_of(*sample_, r));
  }

  OracleConfig cfg_;
  std::size_t answered_ = 0;
  std::optional<SampleMatrix> sample_;
  Eigen::VectorXd labels_;
};

inline double oracle_answer(const SQQuery& q, const OracleConfig& cfg) {
  StatOracle oracle(cfg);
  return oracle.answer(q).value;
}

// ---------------------------------------------------------------------------
// Expectation engine for game bookkeeping.

struct EngineValue {
  double value = 0.0;
  double error = 0.0;  // quadrature refinement difference, or 4·stderr for MC
};

struct ExpectationEngineConfig {
  std::size_t mc_samples = 20000;
  std::uint64_t seed = 0;
  std::size_t max_quadrature_dims = 4;
};

/**
 * Expectations under D of functions that read few coordinates. Under the
 * Gaussian, integrals over ≤ max_quadrature_dims coordinates use
 * tensor-product Gauss–Hermite at two resolutions (the difference is the
 * reported error); everything else falls back to Monte Carlo.
 */
class ExpectationEngine {
 public:
  ExpectationEngine(FamilySpec spec, DistributionSpec dist,
                    ExpectationEngineConfig cfg = {})
      : spec_(std::move(spec)), dist_(std::move(dist)), cfg_(cfg) {
    spec_.validate();
    dist_.validate();
    if (dist_.dim != spec_.n)
      throw std::invalid_argument("distribution dim must equal n");
  }

  const FamilySpec& spec() const { return spec_; }

  /// E_D[u(x)] where u reads only `coords` (empty: all coordinates).
  EngineValue expect(const RealFn& u, std::vector<std::size_t> coords) const {
    if (coords.empty()) coords = all_coords();
    if (use_quadrature(coords.size())) return quadrature(u, coords);
    const auto est = mc_mean(dist_, cfg_.mc_samples, derive_seed(cfg_.seed, "expect"), u);
    return {est.value, 4.0 * est.std_error};
  }

  /// ⟨u, f_S⟩_D where u reads only `coords` (empty: all coordinates).
  EngineValue correlate(const RealFn& u, std::vector<std::size_t> coords,
                        const ConceptId& s) const {
    s.validate(spec_);
    if (coords.empty()) coords = all_coords();
    auto f = [this, &s](std::span<const double> x) { return eval_f(spec_, s, x); };
    const auto merged = merge(coords, s.indices);
    if (product_measure() && merged.size() == coords.size() + s.indices.size()) {
      // Disjoint supports: independent coordinates factorize.
      const EngineValue a = expect(u, coords);
      const EngineValue b = expect(f, s.indices);
      return {a.value * b.value,
              std::abs(a.value) * b.error + std::abs(b.value) * a.error + a.error * b.error};
    }
    auto product = [&](std::span<const double> x) { return u(x) * f(x); };
    if (use_quadrature(merged.size())) return quadrature(product, merged);
    return symmetrized_mc(u, s);
  }

  EngineValue squared_norm(const ConceptId& s) const {
    auto f2 = [this, &s](std::span<const double> x) {
      const double v = eval_f(spec_, s, x);
      return v * v;
    };
    return expect(f2, s.indices);
  }

 private:
  std::vector<std::size_t> all_coords() const {
    std::vector<std::size_t> out(spec_.n);
    for (std::size_t i = 0; i < spec_.n; ++i) out[i] = i;
    return out;
  }

  static std::vector<std::size_t> merge(std::vector<std::size_t> a,
                                        const std::vector<std::size_t>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
  }

  bool product_measure() const {
    return dist_.kind != DistributionKind::scale_mixture;
  }

  bool use_quadrature(std::size_t dims) const {
    return dist_.kind == DistributionKind::standard_gaussian && dims >= 1 &&
           dims <= cfg_.max_quadrature_dims;
  }

  static std::pair<int, int> node_counts(std::size_t dims) {
    switch (dims) {
      case 1: return {96, 64};
      case 2: return {64, 48};
      case 3: return {32, 24};
      default: return {16, 12};
    }
  }

  template <class Fn>
  double tensor_rule(const Fn& fn, const std::vector<std::size_t>& coords,
                     const GaussianRule& rule) const {
    const std::size_t d = coords.size();
    const std::size_t m = rule.nodes.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(spec_.n, 0.0);
    double total = 0.0;
    for (;;) {
      double w = 1.0;
      for (std::size_t t = 0; t < d; ++t) {
        x[coords[t]] = rule.nodes[idx[t]];
        w *= rule.weights[idx[t]];
      }
      total += w * fn(std::span<const double>(x));
      std::size_t t = 0;
      while (t < d && ++idx[t] == m) idx[t++] = 0;
      if (t == d) break;
    }
    return total;
  }

  template <class Fn>
  EngineValue quadrature(const Fn& fn, const std::vector<std::size_t>& coords) const {
    const auto [fine, coarse] = node_counts(coords.size());
    const double v_fine = tensor_rule(fn, coords, gauss_hermite_rule(fine));
    const double v_coarse = tensor_rule(fn, coords, gauss_hermite_rule(coarse));
    return {v_fine, std::abs(v_fine - v_coarse)};
  }

  // Averages u(x∘z)·f_S(x∘z) over z ∈ {±1}^S; unbiased for sign-symmetric D.
  EngineValue symmetrized_mc(const RealFn& u, const ConceptId& s) const {
    const std::uint64_t patterns = std::uint64_t{1} << s.indices.size();
    const auto est = mc_mean(
        dist_, cfg_.mc_samples, derive_seed(cfg_.seed, "symmetrized", s.to_string()),
        [&](std::span<const double> x) {
          std::vector<double> flipped(x.begin(), x.end());
          double sum = 0.0;
          for (std::uint64_t z = 0; z < patterns; ++z) {
            for (std::size_t t = 0; t < s.indices.size(); ++t) {
              const std::size_t i = s.indices[t];
              flipped[i] = ((z >> t) & 1u) ? -x[i] : x[i];
            }
            sum += u(flipped) * eval_f(spec_, s, flipped);
          }
          return sum / static_cast<double>(patterns);
        });
    return {est.value, 4.0 * est.std_error};
  }

  FamilySpec spec_;
  DistributionSpec dist_;
  ExpectationEngineConfig cfg_;
};

/// Inner-product query with g = f_S/‖f_S‖_D (norm from the engine).
inline SQQuery matched_filter_query(const ExpectationEngine& engine, const ConceptId& s) {
  const double norm = std::sqrt(engine.squared_norm(s).value);
  if (!(norm > 0.0)) throw std::invalid_argument("concept has zero norm");
  const FamilySpec spec = engine.spec();
  return SQQuery::inner_product(
      "matched:" + s.to_string(),
      [spec, s, norm](std::span<const double> x) { return eval_f(spec, s, x) / norm; },
      s.indices);
}

/// One matched-filter query per concept, in class order.
inline std::vector<SQQuery> matched_filter_suite(const ExpectationEngine& engine,
                                                 const std::vector<ConceptId>& concepts) {
  std::vector<SQQuery> out;
  out.reserve(concepts.size());
  for (const auto& s : concepts) out.push_back(matched_filter_query(engine, s));
  return out;
}

struct EnginePrecisionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GameStep {
  std::string descriptor;
  double response = 0.0;
  std::vector<double> correlations;  // ⟨ĥ, f_c⟩ per concept
  std::vector<bool> ruled_out;       // c ∈ S_k
  std::size_t ruled_out_count = 0;
  std::size_t cumulative_ruled_out = 0;
  double min_margin = 0.0;  // min over concepts of ||⟨ĥ, c⟩| − τ|
  double max_engine_error = 0.0;
};

struct GameTranscript {
  std::vector<ConceptId> concepts;
  double tau = 0.0;
  double beta = 0.0;  // max ‖f_c‖² over the class
  double d = 0.0;     // sda_lower_bound at γ = 0, γ′ = τ²
  std::vector<GameStep> steps;
  std::vector<std::size_t> ruled_out_counts;
  std::vector<bool> ever_ruled_out;
  bool all_ruled_out = false;
  /// max_k |S_k|·d ≤ |C|.
  bool budget_claim_holds = true;
  /// All ruled out ⇒ Σ_k |S_k| ≥ |C|.
  bool sum_claim_holds = true;
  /// "d0" once every concept is inconsistent with the answers, else
  /// "undetermined" (some D_c is indistinguishable from D_0).
  std::string final_guess = "undetermined";
};

/**
 * Adversary-d0 distinguishing game: every query is answered with E_{D_0}[h]
 * and concept c is ruled out by query k when |⟨ĥ_k, f_c⟩_D| > τ.
 */
inline GameTranscript run_distinguishing_game(const std::vector<ConceptId>& concepts,
                                              const ExpectationEngine& engine,
                                              const std::vector<SQQuery>& queries,
                                              double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (concepts.empty()) throw std::invalid_argument("concept class is empty");
  GameTranscript t;
  t.concepts = concepts;
  t.tau = tau;
  for (const auto& c : concepts) t.beta = std::max(t.beta, engine.squared_norm(c).value);
  SDAParams sda;
  sda.class_size = static_cast<double>(concepts.size());
  sda.beta = t.beta;
  sda.gamma = 0.0;
  sda.gamma_prime = tau * tau;
  sda.tau = tau;
  t.d = sda_lower_bound(sda);
  t.ever_ruled_out.assign(concepts.size(), false);

  std::size_t cumulative = 0;
  std::size_t total_ruled = 0;
  for (const auto& q : queries) {
    GameStep step;
    step.descriptor = q.descriptor;
    step.response = engine.expect(h_symmetric(q), q.support).value;
    const RealFn hat = h_hat(q);
    step.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < concepts.size(); ++c) {
      const EngineValue v = engine.correlate(hat, q.support, concepts[c]);
      const double margin = std::abs(std::abs(v.value) - tau);
      if (margin <= v.error)
        throw EnginePrecisionError("query '" + q.descriptor + "', concept " +
                                   concepts[c].to_string() + ": margin " +
                                   std::to_string(margin) + " within engine error " +
                                   std::to_string(v.error));
      const bool out = std::abs(v.value) > tau;
      step.correlations.push_back(v.value);
      step.ruled_out.push_back(out);
      step.min_margin = std::min(step.min_margin, margin);
      step.max_engine_error = std::max(step.max_engine_error, v.error);
      if (out) {
        ++step.ruled_out_count;
        if (!t.ever_ruled_out[c]) {
          t.ever_ruled_out[c] = true;
          ++cumulative;
        }
      }
    }
    step.cumulative_ruled_out = cumulative;
    total_ruled += step.ruled_out_count;
    t.ruled_out_counts.push_back(step.ruled_out_count);
    if (static_cast<double>(step.ruled_out_count) * t.d >
        static_cast<double>(concepts.size()) * (1.0 + 1e-12))
      t.budget_claim_holds = false;
    t.steps.push_back(std::move(step));
  }
  t.all_ruled_out = cumulative == concepts.size();
  t.sum_claim_holds = !t.all_ruled_out || total_ruled >= concepts.size();
  if (t.all_ruled_out) t.final_guess = "d0";
  return t;
}

// ---------------------------------------------------------------------------
// Learning-to-distinguishing reductions.

enum class Verdict { labeled, random };

inline const char* verdict_name(Verdict v) {
  return v == Verdict::labeled ? "labeled" : "random";
}

/// One query h = c̃(x)·y of tolerance τ ≤ ε/2; labeled iff the answer > ε/2.
inline Verdict distinguisher_from_weak_learner(const RealFn& c_tilde,
                                               const OracleConfig& oracle,
                                               double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (oracle.tau > epsilon / 2.0 * (1.0 + 1e-12))
    throw std::invalid_argument("weak-learner reduction needs tau <= epsilon/2");
  const double r = oracle_answer(SQQuery::inner_product("weak-check", c_tilde), oracle);
  return r > epsilon / 2.0 ? Verdict::labeled : Verdict::random;
}

/// One query h = c̃(x)² of tolerance τ ≤ ε²; labeled iff the answer > 2.5ε².
inline Verdict distinguisher_from_l2_learner(const RealFn& c_tilde,
                                             const OracleConfig& oracle, double epsilon,
                                             std::optional<double> class_min_norm = {}) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (oracle.tau > epsilon * epsilon * (1.0 + 1e-12))
    throw std::invalid_argument("l2-learner reduction needs tau <= epsilon^2");
  if (class_min_norm && *class_min_norm < 3.0 * epsilon)
    throw std::invalid_argument("l2-learner reduction needs ||c|| >= 3*epsilon");
  const double r = oracle_answer(
      SQQuery::general("l2-check",
                       [c_tilde](std::span<const double> x, double) {
                         const double v = c_tilde(x);
                         return v * v;
                       }),
      oracle);
  return r > 2.5 * epsilon * epsilon ? Verdict::labeled : Verdict::random;
}

// ---------------------------------------------------------------------------
// Classification error of p-concepts.

struct ZeroOneLoss {
  EstimateWithError direct;    // frequency of f(x) ≠ y
  EstimateWithError identity;  // 1/2 − ⟨c, f⟩/2
  bool agree = false;          // within 4·combined stderr
};

inline ZeroOneLoss zero_one_loss(const FamilySpec& spec, const ConceptId& id,
                                 const RealFn& classifier,
                                 const DistributionSpec& dist, std::size_t n_samples,
                                 std::uint64_t seed) {
  spec.validate();
  id.validate(spec);
  require_pconcept(spec);
  auto boolean = [&](std::span<const double> x) {
    const double v = classifier(x);
    if (v != 1.0 && v != -1.0)
      throw std::invalid_argument("classifier output must be +1 or -1");
    return v;
  };
  ZeroOneLoss out;
  out.direct = mc_mean(dist, n_samples, derive_seed(seed, "direct"),
                       [&](std::span<const double> x, Engine& rng) {
                         const double y = draw_pconcept_label(eval_f(spec, id, x), rng);
                         return boolean(x) != y ? 1.0 : 0.0;
                       });
  const auto corr = mc_mean(dist, n_samples, derive_seed(seed, "identity"),
                            [&](std::span<const double> x) {
                              return eval_f(spec, id, x) * boolean(x);
                            });
  out.identity = {0.5 - 0.5 * corr.value, 0.5 * corr.std_error, corr.n_samples};
  const double combined = std::hypot(out.direct.std_error, out.identity.std_error);
  out.agree = std::abs(out.direct.value - out.identity.value) <= 4.0 * combined;
  return out;
}

/// 1/2 − E|c(x)|/2 for a conditional-mean function c with values in [−1, 1].
inline EstimateWithError bayes_error_of(const RealFn& c, const DistributionSpec& dist,
                                        std::size_t n_samples, std::uint64_t seed) {
  const auto abs_mean = mc_mean(dist, n_samples, seed, [&](std::span<const double> x) {
    const double v = c(x);
    if (v < -1.0 || v > 1.0)
      throw std::invalid_argument("conditional mean outside [-1, 1]");
    return std::abs(v);
  });
  return {0.5 - 0.5 * abs_mean.value, 0.5 * abs_mean.std_error, abs_mean.n_samples};
}

inline EstimateWithError bayes_optimal_error(const FamilySpec& spec, const ConceptId& id,
                                             const DistributionSpec& dist,
                                             std::size_t n_samples, std::uint64_t seed) {
  spec.validate();
  id.validate(spec);
  require_pconcept(spec);
  return bayes_error_of([&](std::span<const double> x) { return eval_f(spec, id, x); },
                        dist, n_samples, seed);
}

// ---------------------------------------------------------------------------
// Gradient descent on square loss through inner-product queries.

struct GdSqConfig {
  std::size_t steps = 100;
  double learning_rate = 0.05;
  /// Sample used for the label-free term E_x[h∇h].
  std::size_t marginal_samples = 100000;
  std::uint64_t marginal_seed = 0;
  /// Sample used only for the reported loss trace.
  std::size_t eval_samples = 20000;
  std::uint64_t eval_seed = 1;
};

struct GdSqStep {
  std::size_t step = 0;
  double loss = 0.0;  // E_x[(h(x) − E[y|x])²] on the evaluation sample
  std::size_t queries = 0;
  std::size_t rescaled_queries = 0;
  double max_query_norm = 0.0;  // before rescaling
};

struct GdSqResult {
  MLPParams<double> params;
  std::vector<GdSqStep> trace;
  std::size_t queries_issued = 0;
  std::size_t rescaled_total = 0;
};

/// Per-sample gradient ∇_θ h(x) as rows (same parameter order as flatten()).
inline Eigen::MatrixXd mlp_output_jacobian(const MLPParams<double>& p, const SampleMatrix& x) {
  const auto pass = forward_pass(p, x);
  const auto slope = detail::activate_derivative(p.activation, pass.pre, pass.hidden);
  const Eigen::Index rows = x.rows();
  const Eigen::Index m = p.units();
  const Eigen::Index n = p.inputs();
  Eigen::MatrixXd jac(rows, p.parameter_count());
  const Eigen::ArrayXXd back = slope.rowwise() * p.a.transpose().array();
  // W is column-major: entry (i, j) sits at j*m + i.
  for (Eigen::Index j = 0; j < n; ++j)
    jac.middleCols(j * m, m) = (back.colwise() * x.col(j).array()).matrix();
  jac.middleCols(n * m, m) = pass.hidden.matrix();
  jac.middleCols(n * m + m, m) = back.matrix();
  return jac;
}

/// J^T u and (J∘J)^T v for the per-sample Jacobian J, without forming J;
/// `pass` must be forward_pass(p, x).
inline FeatureSums mlp_jacobian_sums(const MLPParams<double>& p, const ForwardPass<double>& pass,
                                     const SampleMatrix& x, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& v) {
  const auto slope = detail::activate_derivative(p.activation, pass.pre, pass.hidden);
  const Eigen::Index m = p.units();
  const Eigen::Index n = p.inputs();
  const Eigen::ArrayXXd back = slope.rowwise() * p.a.transpose().array();
  const Eigen::ArrayXXd back2 = back.square();
  const Eigen::MatrixXd x2 = x.array().square().matrix();
  FeatureSums out{Eigen::VectorXd(p.parameter_count()), Eigen::VectorXd(p.parameter_count())};
  // (m × n) column-major blocks line up with the W entries at j*m + i.
  Eigen::Map<Eigen::MatrixXd>(out.weighted.data(), m, n) =
      (back.colwise() * u.array()).matrix().transpose() * x;
  Eigen::Map<Eigen::MatrixXd>(out.squared.data(), m, n) =
      (back2.colwise() * v.array()).matrix().transpose() * x2;
  out.weighted.segment(n * m, m) = pass.hidden.matrix().transpose() * u;
  out.squared.segment(n * m, m) = pass.hidden.square().matrix().transpose() * v;
  out.weighted.segment(n * m + m, m) = back.matrix().transpose() * u;
  out.squared.segment(n * m + m, m) = back2.matrix().transpose() * v;
  return out;
}

/// J^T u and (J∘J)^T v for the per-sample Jacobian J, without forming J.
inline FeatureSums mlp_jacobian_sums(const MLPParams<double>& p, const SampleMatrix& x,
                                     const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return mlp_jacobian_sums(p, forward_pass(p, x), x, u, v);
}

inline double population_sq_distance(const MLPParams<double>& p, const OracleTarget& target,
                                     const SampleMatrix& x) {
  const Eigen::VectorXd h = forward_batch(p, x);
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double d = h[r] - target.conditional_mean(row_of(x, r));
    total += d * d;
  }
  return total / static_cast<double>(x.rows());
}

/**
 * Gradient descent on E[(h_θ(x) − y)²] = E[h²] − 2E[y·h] + const.
 * The label term E[y·∂h/∂θ_j] is one inner-product query per coordinate;
 * coordinates whose MC norm exceeds 1 are queried as g_j/s_j and the answer
 * multiplied back by s_j. The label-free term E[h·∇h] is computed directly
 * on a sample from the known marginal.
 */
inline GdSqResult gd_via_sq(MLPParams<double> model, const OracleConfig& oracle_cfg,
                            const GdSqConfig& cfg) {
  model.validate();
  if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (static_cast<std::size_t>(model.inputs()) != oracle_cfg.dist.dim)
    throw std::invalid_argument("model input width does not match the oracle distribution");
  StatOracle oracle(oracle_cfg);
  const SampleMatrix marginal = sample(oracle_cfg.dist, cfg.marginal_samples, cfg.marginal_seed);
  const SampleMatrix eval = sample(oracle_cfg.dist, cfg.eval_samples, cfg.eval_seed);
  const double nm = static_cast<double>(marginal.rows());
  const Eigen::Index count = model.parameter_count();

  GdSqResult result;
  auto record = [&](std::size_t step, std::size_t queries, std::size_t rescaled, double max_norm) {
    const double loss = population_sq_distance(model, oracle_cfg.target, eval);
    if (!std::isfinite(loss) || loss > kDivergenceLoss)
      throw DivergenceError("gd_via_sq diverged at step " + std::to_string(step) +
                            " (loss " + std::to_string(loss) + ")");
    result.trace.push_back({step, loss, queries, rescaled, max_norm});
  };
  record(0, 0, 0, 0.0);

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const auto pass = forward_pass(model, marginal);
    const Eigen::VectorXd& h = pass.output;
    const auto local = mlp_jacobian_sums(model, pass, marginal, h, Eigen::VectorXd::Ones(h.size()));
    const Eigen::VectorXd label_free = local.weighted / nm;
    const Eigen::VectorXd norms = (local.squared / nm).cwiseSqrt();
    const Eigen::VectorXd scale = norms.cwiseMax(1.0);
    const std::size_t rescaled = static_cast<std::size_t>((norms.array() > 1.0).count());

    // Queries g_j / s_j: their sums are the unscaled sums divided by s_j and s_j².
    const auto answers = oracle.answer_inner_products(
        [&](const SampleMatrix& x, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
          // The oracle sample may coincide with the marginal one; skip the second pass then.
          auto s = x.rows() == marginal.rows() && x == marginal
                       ? mlp_jacobian_sums(model, pass, x, u, v)
                       : mlp_jacobian_sums(model, x, u, v);
          s.weighted.array() /= scale.array();
          s.squared.array() /= scale.array().square();
          return s;
        },
        count);
    Eigen::VectorXd grad(count);
    for (Eigen::Index j = 0; j < count; ++j)
      grad[j] = 2.0 * (label_free[j] - answers.values[static_cast<std::size_t>(j)] * scale[j]);

    std::vector<double> flat = model.flatten();
    for (Eigen::Index j = 0; j < count; ++j)
      flat[static_cast<std::size_t>(j)] -= cfg.learning_rate * grad[j];
    model.assign(flat);

    result.queries_issued += static_cast<std::size_t>(count);
    result.rescaled_total += rescaled;
    record(step, static_cast<std::size_t>(count), rescaled, norms.maxCoeff());
  }
  result.params = std::move(model);
  return result;
}

/// MC ⟨h, E[y|x]⟩_D for a trained network.
inline EstimateWithError mlp_target_correlation(const MLPParams<double>& p,
                                                const OracleTarget& target,
                                                const DistributionSpec& dist,
                                                std::size_t n_samples, std::uint64_t seed) {
  return mc_mean(dist, n_samples, seed, [&](std::span<const double> x) {
    return forward(p, x) * target.conditional_mean(x);
  });
}

}  // namespace sqhardnet
