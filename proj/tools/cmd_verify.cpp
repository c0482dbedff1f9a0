#include <cmath>
#include <cstdio>
#include <limits>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "sqhardnet/analysis.hpp"
#include "sqhardnet/csv.hpp"

namespace sqcli {

namespace {

using sqhardnet::format_real;

void emit_csv(const std::string& out, const std::string& csv) {
  if (out.empty())
    std::cout << csv;
  else
    write_text(out, csv);
}

// Summary goes to stdout unless stdout already carries the CSV.
std::ostream& summary(const std::string& out) { return out.empty() ? std::cerr : std::cout; }

struct OrthogonalityOptions {
  std::size_t n = 10;
  std::size_t k = 3;
  std::string inner = "tanh";  // relu with odd k gives g = 0 identically
  std::string outer = "identity";
  std::string dist = "gaussian";
  std::size_t pairs = 20;
  std::size_t samples = 1000000;
  std::size_t sym_samples = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_orthogonality(const OrthogonalityOptions& o) {
  using namespace sqhardnet;
  const FamilySpec spec{o.n, o.k, parse_activation(o.inner), parse_activation(o.outer)};
  spec.validate();
  const auto dist = parse_distribution(o.dist, o.n);
  const auto pairs = random_distinct_pairs(o.n, o.k, o.pairs, o.seed);
  std::ostringstream csv;
  csv << "pair,S,T,mc_value,mc_stderr,sym_value,sym_stderr,pass\n";
  const auto plain = mc_inner_products(spec, pairs, dist, o.samples, derive_seed(o.seed, "mc"));
  std::size_t failed = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& [s, t] = pairs[p];
    const auto& mc = plain[p];
    const auto sym = symmetrized_inner_product(spec, s, t, dist, o.sym_samples,
                                               derive_seed(o.seed, "sym", p));
    const bool pass = std::abs(sym.value) <= 1e-10 && mc.within(0.0, 4.0, kRoundoffFloor);
    if (!pass) ++failed;
    csv << p << ",\"" << s.to_string() << "\",\"" << t.to_string() << "\","
        << format_real(mc.value) << ',' << format_real(mc.std_error) << ','
        << format_real(sym.value) << ',' << format_real(sym.std_error) << ','
        << (pass ? 1 : 0) << '\n';
  }
  emit_csv(o.out, csv.str());
  summary(o.out) << "orthogonality: " << pairs.size() - failed << "/" << pairs.size()
            << " pairs pass (|sym| <= 1e-10, |mc| <= 4 stderr + 1e-12)\n";
  return failed == 0 ? kExitOk : kExitCheckFailed;
}

struct SecondMomentOptions {
  std::size_t k = 2;
  std::string inner = "relu";
  int d_max = 150;
  std::size_t samples = 1000000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_second_moment(const SecondMomentOptions& o) {
  using namespace sqhardnet;
  const FamilySpec spec{o.k, o.k, parse_activation(o.inner), ActivationSpec::identity()};
  spec.validate();
  const auto series = expansion_series(spec.inner, o.d_max);
  const auto moment = second_moment_g(spec, series, o.d_max);
  const auto mc = mc_second_moment_g(spec, leading_concept(o.k), DistributionSpec::gaussian(o.k),
                                     o.samples, o.seed);
  const double slack = std::max(4.0 * mc.std_error, 0.01 * std::abs(mc.value));
  const bool pass = std::abs(moment.value - mc.value) <= slack;
  std::ostringstream csv;
  csv << "k,inner,d_max,series,mc_value,mc_stderr,pass\n"
      << o.k << ',' << spec.inner.name() << ',' << o.d_max << ',' << format_real(moment.value)
      << ',' << format_real(mc.value) << ',' << format_real(mc.std_error) << ','
      << (pass ? 1 : 0) << '\n';
  emit_csv(o.out, csv.str());
  summary(o.out) << "second moment: series " << moment.value << " vs MC " << mc.value << " +- "
                 << mc.std_error << (pass ? " (pass)" : " (FAIL)") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

struct TruncationOptions {
  int k = 3;
  double cap = 2.0;
  std::size_t samples = 1000000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_truncation(const TruncationOptions& o) {
  using namespace sqhardnet;
  const double norm_bound = truncation_norm_bound(o.k, o.cap);
  const double prob_bound = truncation_prob_bound(o.k, o.cap);
  const auto norm = mc_truncation_norm(o.k, o.cap, o.samples, derive_seed(o.seed, "norm"));
  const auto prob = mc_truncation_disagreement(o.k, o.cap, o.samples, derive_seed(o.seed, "prob"));
  const bool norm_ok = norm.value <= norm_bound + 4.0 * norm.std_error;
  const bool prob_ok = prob.value <= prob_bound + 4.0 * prob.std_error;
  std::ostringstream csv;
  csv << "k,T,norm_bound,norm_mc,norm_stderr,prob_bound,prob_mc,prob_stderr,pass\n"
      << o.k << ',' << format_real(o.cap) << ',' << format_real(norm_bound) << ','
      << format_real(norm.value) << ',' << format_real(norm.std_error) << ','
      << format_real(prob_bound) << ',' << format_real(prob.value) << ','
      << format_real(prob.std_error) << ',' << (norm_ok && prob_ok ? 1 : 0) << '\n';
  emit_csv(o.out, csv.str());
  summary(o.out) << "truncation: norm " << norm.value << " <= " << norm_bound
                 << (norm_ok ? " (pass)" : " (FAIL)") << ", probability " << prob.value
                 << " <= " << prob_bound << (prob_ok ? " (pass)" : " (FAIL)") << '\n';
  return norm_ok && prob_ok ? kExitOk : kExitCheckFailed;
}

struct AnticoncentrationOptions {
  std::size_t n = 0;  // 0: n = k
  std::size_t k = 2;
  std::string inner = "relu";
  std::size_t samples = 1000000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_anticoncentration(const AnticoncentrationOptions& o) {
  using namespace sqhardnet;
  const std::size_t n = o.n == 0 ? o.k : o.n;
  const FamilySpec spec{n, o.k, parse_activation(o.inner), ActivationSpec::identity()};
  const auto est = anticoncentration_estimate(spec, leading_concept(o.k),
                                              DistributionSpec::gaussian(n), o.samples, o.seed);
  const bool pass = est.value > 0.0;
  std::ostringstream csv;
  csv << "n,k,inner,probability,stderr,pass\n"
      << n << ',' << o.k << ',' << spec.inner.name() << ',' << format_real(est.value) << ','
      << format_real(est.std_error) << ',' << (pass ? 1 : 0) << '\n';
  emit_csv(o.out, csv.str());
  summary(o.out) << "anticoncentration: P[|g| >= 1] = " << est.value << " +- " << est.std_error
                 << (pass ? " (pass)" : " (FAIL)") << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

struct SdaOptions {
  std::size_t n = 20;
  std::size_t k = 3;
  double class_size = 0.0;  // 0: binom(n, k)
  double gamma_prime = 0.01;
  double beta = 1.0;
  double gamma = 0.0;
  double tau = 0.0;      // 0: sqrt(gamma + gamma')
  double epsilon = 0.0;  // 0: not given
  std::string mode;      // empty: d only
  double class_min_norm = 0.0;
};

int run_sda(const SdaOptions& o) {
  using namespace sqhardnet;
  SDAParams p;
  p.class_size = o.class_size > 0.0 ? o.class_size
                                    : static_cast<double>(enumerate_family(o.n, o.k).size());
  p.beta = o.beta;
  p.gamma = o.gamma;
  p.gamma_prime = o.gamma_prime;
  p.tau = o.tau > 0.0 ? o.tau : std::sqrt(o.gamma + o.gamma_prime);
  p.epsilon = o.epsilon > 0.0 ? o.epsilon : std::numeric_limits<double>::infinity();
  if (o.class_min_norm > 0.0) p.class_min_norm = o.class_min_norm;
  const double d = sda_lower_bound(p);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", d);
  std::cout << "|C| = " << p.class_size << "\nd = " << buf << '\n';
  if (!o.mode.empty()) {
    if (o.mode != "real-valued" && o.epsilon <= 0.0)
      throw UsageError("--epsilon is required for mode " + o.mode);
    const auto queries = query_count_bound(p, parse_query_mode(o.mode));
    std::cout << "queries >= " << queries << " (" << o.mode
              << ", tau = " << p.tau << ")\n";
  }
  return kExitOk;
}

}  // namespace

void register_verify(CLI::App& root, Registry& reg) {
  auto* verify = root.add_subcommand("verify", "Numerical checks of the family's properties");
  verify->require_subcommand(1);

  {
    auto o = std::make_shared<OrthogonalityOptions>();
    auto* sub = verify->add_subcommand("orthogonality", "<f_S, f_T> = 0 for random pairs S != T");
    sub->add_option("--n", o->n, "Input dimension");
    sub->add_option("--k", o->k, "Mask size");
    sub->add_option("--inner", o->inner, "Inner activation");
    sub->add_option("--outer", o->outer, "Outer activation (odd)");
    sub->add_option("--dist", o->dist, "gaussian, rademacher or mixture");
    sub->add_option("--pairs", o->pairs, "Number of random pairs");
    sub->add_option("--samples", o->samples, "Plain Monte-Carlo samples per pair");
    sub->add_option("--sym-samples", o->sym_samples, "Samples for the symmetrized estimator");
    sub->add_option("--seed", o->seed, "Master seed");
    sub->add_option("--out", o->out, "Output CSV (default stdout)");
    reg.add(sub, OutputKind::file, &o->out).run = [o] { return run_orthogonality(*o); };
  }
  {
    auto o = std::make_shared<SecondMomentOptions>();
    auto* sub = verify->add_subcommand("second-moment", "Hermite series for E[g^2] vs Monte Carlo");
    sub->add_option("--k", o->k, "Mask size (n = k)");
    sub->add_option("--inner", o->inner, "Inner activation");
    sub->add_option("--d-max", o->d_max, "Series truncation degree")->check(CLI::Range(0, 300));
    sub->add_option("--samples", o->samples, "Monte-Carlo samples");
    sub->add_option("--seed", o->seed, "Master seed");
    sub->add_option("--out", o->out, "Output CSV (default stdout)");
    reg.add(sub, OutputKind::file, &o->out).run = [o] { return run_second_moment(*o); };
  }
  {
    auto o = std::make_shared<TruncationOptions>();
    auto* sub = verify->add_subcommand("truncation", "ReLU truncation bounds vs Monte Carlo");
    sub->add_option("--k", o->k, "Mask size");
    sub->add_option("--T", o->cap, "Truncation level");
    sub->add_option("--samples", o->samples, "Monte-Carlo samples");
    sub->add_option("--seed", o->seed, "Master seed");
    sub->add_option("--out", o->out, "Output CSV (default stdout)");
    reg.add(sub, OutputKind::file, &o->out).run = [o] { return run_truncation(*o); };
  }
  {
    auto o = std::make_shared<AnticoncentrationOptions>();
    auto* sub = verify->add_subcommand("anticoncentration", "Monte-Carlo P[|g(x)| >= 1]");
    sub->add_option("--n", o->n, "Input dimension (default k)");
    sub->add_option("--k", o->k, "Mask size");
    sub->add_option("--inner", o->inner, "Inner activation");
    sub->add_option("--samples", o->samples, "Monte-Carlo samples");
    sub->add_option("--seed", o->seed, "Master seed");
    sub->add_option("--out", o->out, "Output CSV (default stdout)");
    reg.add(sub, OutputKind::file, &o->out).run = [o] { return run_anticoncentration(*o); };
  }
}

void register_bounds(CLI::App& root, Registry& reg) {
  auto* bounds = root.add_subcommand("bounds", "Statistical-dimension arithmetic");
  bounds->require_subcommand(1);
  auto o = std::make_shared<SdaOptions>();
  auto* sub = bounds->add_subcommand("sda", "d = |C| gamma' / (beta - gamma) and query counts");
  sub->add_option("--n", o->n, "Input dimension (|C| = binom(n, k))");
  sub->add_option("--k", o->k, "Mask size");
  sub->add_option("--class-size", o->class_size, "Override |C|");
  sub->add_option("--gamma-prime", o->gamma_prime, "Correlation slack gamma'");
  sub->add_option("--beta", o->beta, "Squared-norm bound");
  sub->add_option("--gamma", o->gamma, "Pairwise correlation bound");
  sub->add_option("--tau", o->tau, "Query tolerance (default sqrt(gamma + gamma'))");
  sub->add_option("--epsilon", o->epsilon, "Target accuracy");
  sub->add_option("--mode", o->mode, "l2, weak or real-valued (prints a query count)");
  sub->add_option("--class-min-norm", o->class_min_norm, "Smallest ||c|| in the class (l2 mode)");
  reg.add(sub, OutputKind::none, nullptr).run = [o] { return run_sda(*o); };
}

}  // namespace sqcli
