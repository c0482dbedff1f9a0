#include <gtest/gtest.h>

#include <random>
#include <set>

#include "sqhardnet/analysis.hpp"
#include "sqhardnet/family.hpp"

using namespace sqhardnet;

namespace {

// Direct transcription of the definition: explicit sign vectors and dot products.
double g_literal(const FamilySpec& spec, const ConceptId& id, const std::vector<double>& x) {
  const std::size_t k = id.indices.size();
  double total = 0.0;
  std::vector<int> w(k, 1);
  for (std::uint64_t p = 0; p < (1ULL << k); ++p) {
    int chi = 1;
    double dot = 0.0;
    for (std::size_t b = 0; b < k; ++b) {
      w[b] = ((p >> b) & 1) ? -1 : 1;
      chi *= w[b];
      dot += w[b] * x[id.indices[b]];
    }
    total += chi * spec.inner(dot / std::sqrt(static_cast<double>(k)));
  }
  return total;
}

std::vector<double> random_point(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (auto& v : x) v = normal(rng);
  return x;
}

FamilySpec make_spec(std::size_t n, std::size_t k, const char* inner, const char* outer) {
  return {n, k, parse_activation(inner), parse_activation(outer)};
}

}  // namespace

TEST(Family, EvalMatchesLiteralDefinition) {
  for (const char* inner : {"relu", "tanh", "sigmoid", "sign", "truncated-relu:1.5"})
    for (std::size_t k = 1; k <= 6; ++k) {
      const auto spec = make_spec(9, k, inner, "identity");
      const auto family = enumerate_family(9, k);
      for (std::uint64_t s = 0; s < 5; ++s) {
        const auto x = random_point(9, s);
        const auto& id = family[(s * 7) % family.size()];
        const double lit = g_literal(spec, id, x);
        EXPECT_NEAR(eval_g(spec, id, x), lit, 1e-12 * (1.0 + std::abs(lit)))
            << inner << " k=" << k;
      }
    }
}

TEST(Family, ReluWithOneIndexIsTheCoordinate) {
  const auto spec = make_spec(4, 1, "relu", "identity");
  const auto x = random_point(4, 11);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(eval_g(spec, ConceptId{{i}}, x), x[i]);
}

TEST(Family, DegenerateParityCombinations) {
  // Odd φ with even k, and ReLU (= x/2 + |x|/2) with odd k ≥ 3, give g ≡ 0.
  const auto x = random_point(8, 5);
  EXPECT_EQ(eval_g(make_spec(8, 4, "tanh", "identity"), leading_concept(4), x), 0.0);
  EXPECT_NEAR(eval_g(make_spec(8, 3, "relu", "identity"), leading_concept(3), x), 0.0, 1e-13);
  // ReLU g vanishes on whole cones, so look at several points.
  double relu_even = 0.0, tanh_odd = 0.0;
  for (std::uint64_t s = 0; s < 8; ++s) {
    const auto p = random_point(8, 40 + s);
    relu_even = std::max(relu_even,
                         std::abs(eval_g(make_spec(8, 4, "relu", "identity"), leading_concept(4), p)));
    tanh_odd = std::max(tanh_odd,
                        std::abs(eval_g(make_spec(8, 3, "tanh", "identity"), leading_concept(3), p)));
  }
  EXPECT_GT(relu_even, 1e-3);
  EXPECT_GT(tanh_odd, 1e-3);
}

TEST(Family, SignFlipsOnTheMaskMultiplyByParity) {
  // g_S(x∘z) = χ(z_S)·g_S(x): the identity behind orthogonality.
  const auto spec = make_spec(7, 4, "relu", "identity");
  const ConceptId s{{0, 2, 3, 6}};
  const auto x = random_point(7, 3);
  for (std::uint64_t z = 0; z < 128; ++z) {
    std::vector<int> signs(7);
    int chi = 1;
    for (std::size_t i = 0; i < 7; ++i) {
      signs[i] = ((z >> i) & 1) ? -1 : 1;
      if (std::find(s.indices.begin(), s.indices.end(), i) != s.indices.end()) chi *= signs[i];
    }
    EXPECT_NEAR(eval_g(spec, s, sign_flip(x, signs)), chi * eval_g(spec, s, x), 1e-12);
  }
}

TEST(Family, SymmetrizedProductAtOnePoint) {
  for (const char* inner : {"relu", "tanh"})
    for (const char* outer : {"identity", "tanh"}) {
      const std::size_t k = std::string(inner) == "relu" ? 4 : 3;
      const auto spec = make_spec(10, k, inner, outer);
      const auto family = enumerate_family(10, k);
      const auto dist = DistributionSpec::gaussian(10);
      for (std::size_t t = 1; t < 6; ++t) {
        const auto& a = family[0];
        const auto& b = family[t * 17 % family.size()];
        const auto v = symmetrized_inner_product(spec, a, b, dist, 1, 100 + t);
        EXPECT_EQ(v.std_error, 0.0);
        EXPECT_LE(std::abs(v.value), 1e-10);
      }
      // S = T: every flipped point gives f_S(x)².
      const auto same = symmetrized_inner_product(spec, family[3], family[3], dist, 1, 7);
      const auto x = sample(dist, 1, 7);
      const double f = eval_f(spec, family[3], row_of(x, 0));
      EXPECT_NEAR(same.value, f * f, 1e-12 * (1.0 + f * f));
    }
}

TEST(Family, SharedSampleEstimatesMatchSinglePairEstimates) {
  const auto spec = make_spec(6, 2, "relu", "tanh");
  const auto dist = DistributionSpec::gaussian(6);
  const auto pairs = random_distinct_pairs(6, 2, 5, 4);
  const auto shared = mc_inner_products(spec, pairs, dist, 40000, 99);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto single = mc_inner_product(spec, pairs[p].first, pairs[p].second, dist, 40000, 99);
    // Same sample and rows; only the order of floating-point operations differs.
    EXPECT_NEAR(shared[p].value, single.value, 1e-14);
    EXPECT_NEAR(shared[p].std_error, single.std_error, 1e-14);
  }
}

TEST(Family, RandomPairsAreDistinctAndDeterministic) {
  const auto a = random_distinct_pairs(10, 3, 20, 1);
  const auto b = random_distinct_pairs(10, 3, 20, 1);
  ASSERT_EQ(a.size(), 20u);
  EXPECT_EQ(a, b);
  for (const auto& [s, t] : a) EXPECT_NE(s, t);
  EXPECT_THROW(random_distinct_pairs(3, 3, 1, 0), std::invalid_argument);
}

TEST(Family, EnumerationIsLexicographicAndComplete) {
  const auto fam = enumerate_family(8, 3);
  EXPECT_EQ(fam.size(), 56u);
  EXPECT_TRUE(std::is_sorted(fam.begin(), fam.end()));
  EXPECT_EQ(std::set<ConceptId>(fam.begin(), fam.end()).size(), 56u);
  EXPECT_EQ(enumerate_family(20, 3).size(), 1140u);
  EXPECT_EQ(fam.front().to_string(), "1,2,3");
  EXPECT_EQ(fam.back().to_string(), "6,7,8");
}

TEST(Family, ConceptParsingIsOneBased) {
  EXPECT_EQ(parse_concept("1,3,5").indices, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(parse_concept("2,7").to_string(), "2,7");
  EXPECT_THROW(parse_concept("0,1"), std::invalid_argument);
  EXPECT_THROW(parse_concept("1,x"), std::invalid_argument);
  const auto spec = make_spec(5, 2, "relu", "identity");
  EXPECT_THROW(parse_concept("2,1").validate(spec), std::invalid_argument);
  EXPECT_THROW(parse_concept("1,6").validate(spec), std::invalid_argument);
  EXPECT_THROW(parse_concept("1,2,3").validate(spec), std::invalid_argument);
}

TEST(Family, SpecValidation) {
  EXPECT_THROW(make_spec(3, 4, "relu", "identity").validate(), std::invalid_argument);
  EXPECT_THROW(make_spec(3, 2, "relu", "sigmoid").validate(), std::invalid_argument);
  EXPECT_THROW(make_spec(3, 0, "relu", "identity").validate(), std::invalid_argument);
  EXPECT_EQ(make_spec(14, 7, "tanh", "tanh").hidden_units(), 128u);
  EXPECT_THROW(eval_g(make_spec(3, 2, "relu", "identity"), leading_concept(2),
                      std::vector<double>{1.0, 2.0}),
               std::invalid_argument);
}

TEST(Family, RegressionLabelsAreTheTarget) {
  const auto spec = make_spec(5, 2, "relu", "tanh");
  const auto x = sample(DistributionSpec::gaussian(5), 100, 3);
  const auto y = sample_labels(spec, leading_concept(2), x, LabelMode::regression, 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    EXPECT_EQ(y[r], eval_f(spec, leading_concept(2), row_of(x, r)));
}

TEST(Family, PConceptLabelsHaveTheRightConditionalMean) {
  const auto spec = make_spec(3, 2, "relu", "tanh");
  const auto x = sample(DistributionSpec::gaussian(3), 200000, 3);
  const auto y = sample_labels(spec, leading_concept(2), x, LabelMode::pconcept, 5);
  const auto y2 = sample_labels(spec, leading_concept(2), x, LabelMode::pconcept, 5);
  EXPECT_EQ(y, y2);
  // E[y·f] = E[f²] and E[y] = E[f] (= 0 by symmetry).
  double yf = 0.0, ff = 0.0, ym = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    ASSERT_TRUE(y[r] == 1.0 || y[r] == -1.0);
    const double f = eval_f(spec, leading_concept(2), row_of(x, r));
    yf += y[r] * f;
    ff += f * f;
    ym += y[r];
  }
  EXPECT_NEAR(yf / 200000.0, ff / 200000.0, 0.01);
  EXPECT_NEAR(ym / 200000.0, 0.0, 0.01);
  EXPECT_THROW(sample_labels(make_spec(3, 2, "relu", "identity"), leading_concept(2), x,
                             LabelMode::pconcept, 1),
               std::invalid_argument);
}
