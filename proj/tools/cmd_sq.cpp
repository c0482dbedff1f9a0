#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "common.hpp"
#include "sqhardnet/csv.hpp"
#include "sqhardnet/sqgame.hpp"

namespace sqcli {

namespace {

using namespace sqhardnet;

struct GameOptions {
  std::size_t n = 8;
  std::size_t k = 2;
  std::string inner = "relu";
  std::string outer = "identity";
  std::string dist = "gaussian";
  double tau = 0.05;
  std::string queries;
  std::size_t engine_samples = 20000;
  std::uint64_t seed = 0;
  std::string out;
};

std::vector<std::size_t> zero_based(const nlohmann::json& q, const char* key, std::size_t n) {
  std::vector<std::size_t> out;
  const auto& v = q.at(key);
  auto push = [&](long i) {
    if (i < 1 || static_cast<std::size_t>(i) > n)
      throw UsageError(std::string("query field '") + key + "' out of range 1.." +
                       std::to_string(n));
    out.push_back(static_cast<std::size_t>(i - 1));
  };
  if (v.is_number_integer())
    push(v.get<long>());
  else if (v.is_array())
    for (const auto& e : v) push(e.get<long>());
  else if (v.is_string())
    for (auto i : parse_concept(v.get<std::string>()).indices) push(static_cast<long>(i) + 1);
  else
    throw UsageError(std::string("query field '") + key + "' must be an index or list");
  return out;
}

void check_keys(const nlohmann::json& q, std::initializer_list<const char*> allowed) {
  for (const auto& item : q.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw UsageError("unknown query key '" + item.key() + "'");
  }
}

/**
 * Query list from JSON: {"queries": [ {...}, ... ]}. Entry types:
 *   matched-suite                      one matched filter per concept
 *   matched      concept "i,j,.."      g = f_S/‖f_S‖
 *   coordinate   index i               g = x_i (inner product, norm 1)
 *   indicator    index i, threshold t  g = 1[x_i > t]
 *   label-free   index i               h(x, y) = tanh(x_i), independent of y
 */
std::vector<SQQuery> build_queries(const GameOptions& o, const ExpectationEngine& engine,
                                   const std::vector<ConceptId>& concepts) {
  if (o.queries.empty()) return matched_filter_suite(engine, concepts);
  const auto doc = read_json_object(o.queries, {"queries"});
  if (!doc.contains("queries") || !doc["queries"].is_array())
    throw UsageError(o.queries + ": expected {\"queries\": [...]}");
  std::vector<SQQuery> out;
  for (const auto& q : doc["queries"]) {
    if (!q.is_object() || !q.contains("type") || !q["type"].is_string())
      throw UsageError(o.queries + ": every query needs a string 'type'");
    const std::string type = q["type"].get<std::string>();
    if (type == "matched-suite") {
      check_keys(q, {"type"});
      const auto suite = matched_filter_suite(engine, concepts);
      out.insert(out.end(), suite.begin(), suite.end());
    } else if (type == "matched") {
      check_keys(q, {"type", "concept"});
      ConceptId s{zero_based(q, "concept", o.n)};
      std::sort(s.indices.begin(), s.indices.end());
      out.push_back(matched_filter_query(engine, s));
    } else if (type == "coordinate") {
      check_keys(q, {"type", "index"});
      const std::size_t i = zero_based(q, "index", o.n).at(0);
      out.push_back(SQQuery::inner_product(
          "coordinate:" + std::to_string(i + 1),
          [i](std::span<const double> x) { return x[i]; }, {i}));
    } else if (type == "indicator") {
      check_keys(q, {"type", "index", "threshold"});
      const std::size_t i = zero_based(q, "index", o.n).at(0);
      const double t = q.value("threshold", 0.0);
      out.push_back(SQQuery::inner_product(
          "indicator:" + std::to_string(i + 1),
          [i, t](std::span<const double> x) { return x[i] > t ? 1.0 : 0.0; }, {i}));
    } else if (type == "label-free") {
      check_keys(q, {"type", "index"});
      const std::size_t i = zero_based(q, "index", o.n).at(0);
      out.push_back(SQQuery::general(
          "label-free:" + std::to_string(i + 1),
          [i](std::span<const double> x, double) { return std::tanh(x[i]); }, {i}));
    } else {
      throw UsageError("unknown query type '" + type + "'");
    }
  }
  return out;
}

int run_game(const GameOptions& o) {
  const FamilySpec spec{o.n, o.k, parse_activation(o.inner), parse_activation(o.outer)};
  spec.validate();
  const ExpectationEngine engine(spec, parse_distribution(o.dist, o.n),
                                 {o.engine_samples, o.seed, 4});
  const auto concepts = enumerate_family(o.n, o.k);
  const auto queries = build_queries(o, engine, concepts);
  const auto t = run_distinguishing_game(concepts, engine, queries, o.tau);

  std::ostringstream csv;
  csv << "query_index,response,ruled_out_count,cumulative_ruled_out\n";
  for (std::size_t i = 0; i < t.steps.size(); ++i)
    csv << i << ',' << format_real(t.steps[i].response) << ',' << t.steps[i].ruled_out_count
        << ',' << t.steps[i].cumulative_ruled_out << '\n';
  write_text(require(o.out, "--out"), csv.str());

  std::size_t max_ruled = 0;
  for (auto c : t.ruled_out_counts) max_ruled = std::max(max_ruled, c);
  std::cout << "|C| = " << concepts.size() << ", beta = " << t.beta << ", d = " << t.d
            << "\nqueries = " << t.steps.size() << ", max |S_k| = " << max_ruled
            << ", ruled out = " << (t.steps.empty() ? 0 : t.steps.back().cumulative_ruled_out)
            << "\nbudget claim (|S_k| <= |C|/d): " << (t.budget_claim_holds ? "holds" : "FAILS")
            << "\nsum claim: " << (t.sum_claim_holds ? "holds" : "FAILS")
            << "\nguess: " << t.final_guess << '\n';
  return t.budget_claim_holds && t.sum_claim_holds ? kExitOk : kExitCheckFailed;
}

struct GdOptions {
  std::size_t n = 4;
  std::size_t k = 1;
  std::string inner = "relu";
  std::string outer = "identity";
  std::string mode = "regression";
  std::string concept_text;
  std::string dist = "gaussian";
  std::size_t units = 16;
  std::string activation = "tanh";
  double init_scale = 1.0;
  std::size_t steps = 100;
  double lr = 0.05;
  std::string oracle = "truthful";
  double tau = 0.02;
  std::size_t budget = 100000;
  std::size_t marginal_samples = 100000;
  std::size_t eval_samples = 20000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gd(const GdOptions& o) {
  const FamilySpec spec{o.n, o.k, parse_activation(o.inner), parse_activation(o.outer)};
  spec.validate();
  const ConceptId id =
      o.concept_text.empty() ? leading_concept(o.k) : parse_concept(o.concept_text);
  const DistributionSpec dist = parse_distribution(o.dist, o.n);

  OracleConfig oc;
  oc.tau = o.tau;
  oc.policy = parse_oracle_policy(o.oracle);
  oc.sample_budget = o.budget;
  oc.seed = derive_seed(o.seed, "oracle");
  oc.target = OracleTarget::concept_labels(spec, id, parse_label_mode(o.mode));
  oc.dist = dist;

  GdSqConfig gc;
  gc.steps = o.steps;
  gc.learning_rate = o.lr;
  gc.marginal_samples = o.marginal_samples;
  gc.marginal_seed = derive_seed(o.seed, "marginal");
  gc.eval_samples = o.eval_samples;
  gc.eval_seed = derive_seed(o.seed, "eval");

  auto model = init_mlp<double>(static_cast<Eigen::Index>(o.units),
                                static_cast<Eigen::Index>(o.n), parse_activation(o.activation),
                                o.init_scale, derive_seed(o.seed, "init"));
  const auto result = gd_via_sq(std::move(model), oc, gc);

  std::ostringstream csv;
  csv << "step,loss,queries,rescaled_queries,max_query_norm\n";
  for (const auto& s : result.trace)
    csv << s.step << ',' << format_real(s.loss) << ',' << s.queries << ','
        << s.rescaled_queries << ',' << format_real(s.max_query_norm) << '\n';
  write_text(require(o.out, "--out"), csv.str());

  const auto corr = mlp_target_correlation(result.params, oc.target, dist, o.eval_samples,
                                           derive_seed(o.seed, "correlation"));
  std::cout << "oracle " << o.oracle << ": loss " << result.trace.front().loss << " -> "
            << result.trace.back().loss << " after " << o.steps << " steps, "
            << result.queries_issued << " queries (" << result.rescaled_total
            << " rescaled)\ncorrelation <h, E[y|x]> = " << corr.value << " +- "
            << corr.std_error << '\n';
  return kExitOk;
}

}  // namespace

void register_sq(CLI::App& root, Registry& reg) {
  {
    auto o = std::make_shared<GameOptions>();
    auto* sub = root.add_subcommand("sq-game", "Adversarial distinguishing game against D_0");
    sub->add_option("--n", o->n, "Input dimension");
    sub->add_option("--k", o->k, "Mask size; the class is all k-subsets");
    sub->add_option("--inner", o->inner, "Inner activation");
    sub->add_option("--outer", o->outer, "Outer activation (odd)");
    sub->add_option("--dist", o->dist, "gaussian, rademacher or mixture");
    sub->add_option("--tau", o->tau, "Query tolerance");
    sub->add_option("--queries", o->queries, "Query list JSON (default: matched-filter suite)");
    sub->add_option("--engine-samples", o->engine_samples,
                    "Monte-Carlo rows when quadrature does not apply");
    sub->add_option("--seed", o->seed, "Master seed");
    sub->add_option("--out", o->out, "Transcript CSV");
    reg.add(sub, OutputKind::file, &o->out).run = [o] { return run_game(*o); };
  }
  {
    auto o = std::make_shared<GdOptions>();
    auto* sub = root.add_subcommand("gd-sq", "Gradient descent on square loss via SQ answers");
    sub->add_option("--n", o->n, "Input dimension");
    sub->add_option("--k", o->k, "Target mask size");
    sub->add_option("--inner", o->inner, "Target inner activation");
    sub->add_option("--outer", o->outer, "Target outer activation");
    sub->add_option("--mode", o->mode, "regression or pconcept labels");
    sub->add_option("--concept", o->concept_text, "One-based target indices (default 1..k)");
    sub->add_option("--dist", o->dist, "gaussian, rademacher or mixture");
    sub->add_option("--units", o->units, "Student hidden units");
    sub->add_option("--activation", o->activation, "Student activation");
    sub->add_option("--init-scale", o->init_scale, "Student weight scale");
    sub->add_option("--steps", o->steps, "Gradient steps");
    sub->add_option("--lr", o->lr, "Learning rate");
    sub->add_option("--oracle", o->oracle, "truthful, zero or d0");
    sub->add_option("--tau", o->tau, "Oracle tolerance");
    sub->add_option("--budget", o->budget, "Oracle sample size");
    sub->add_option("--marginal-samples", o->marginal_samples,
                    "Unlabeled rows for the label-free gradient term");
    sub->add_option("--eval-samples", o->eval_samples, "Rows for the reported loss");
    sub->add_option("--seed", o->seed, "Master seed");
    sub->add_option("--out", o->out, "Trace CSV");
    reg.add(sub, OutputKind::file, &o->out).run = [o] { return run_gd(*o); };
  }
}

}  // namespace sqcli
