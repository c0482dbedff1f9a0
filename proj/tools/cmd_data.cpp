#include <iostream>

#include "common.hpp"
#include "sqhardnet/csv.hpp"
#include "sqhardnet/family.hpp"

namespace sqcli {

namespace {

struct DataOptions {
  std::size_t n = 14;
  std::size_t k = 7;
  std::string inner = "tanh";
  std::string outer = "tanh";
  std::string mode = "pconcept";
  std::string concept_text;
  std::string dist = "gaussian";
  std::size_t train = 6000;
  std::size_t test = 1000;
  std::uint64_t seed = 0;
  std::string out;
};

int run_data(const DataOptions& o) {
  using namespace sqhardnet;
  FamilySpec spec{o.n, o.k, parse_activation(o.inner), parse_activation(o.outer)};
  spec.validate();
  const ConceptId id = o.concept_text.empty() ? leading_concept(o.k) : parse_concept(o.concept_text);
  id.validate(spec);
  const LabelMode mode = parse_label_mode(o.mode);
  const DistributionSpec dist = parse_distribution(o.dist, o.n);
  const std::string dir = require(o.out, "--out");

  // Same seed streams as the training harness.
  auto write_split = [&](const char* label, std::size_t rows) {
    const std::uint64_t s = derive_seed(o.seed, label);
    const SampleMatrix x = sample(dist, rows, s);
    const auto y = sample_labels(spec, id, x, mode, s);
    write_samples_csv(output_in(dir, std::string(label) + ".csv"), x, &y);
  };
  write_split("train", o.train);
  write_split("test", o.test);

  nlohmann::json meta;
  meta["n"] = o.n;
  meta["k"] = o.k;
  meta["inner"] = spec.inner.name();
  meta["outer"] = spec.outer.name();
  meta["mode"] = o.mode;
  meta["distribution"] = dist.name();
  meta["hidden_units"] = spec.hidden_units();
  std::vector<std::size_t> one_based;
  for (auto i : id.indices) one_based.push_back(i + 1);
  meta["concept"] = one_based;
  meta["seed"] = o.seed;
  write_text(output_in(dir, "concept.json"), meta.dump(2) + "\n");
  std::cout << "wrote " << o.train << " train and " << o.test << " test rows for S = {"
            << id.to_string() << "} to " << dir << '\n';
  return kExitOk;
}

}  // namespace

void register_data(CLI::App& root, Registry& reg) {
  auto o = std::make_shared<DataOptions>();
  auto* sub = root.add_subcommand("gen-data", "Sample a labeled data set from one family member");
  sub->add_option("--n", o->n, "Input dimension");
  sub->add_option("--k", o->k, "Mask size |S|");
  sub->add_option("--inner", o->inner, "Inner activation phi");
  sub->add_option("--outer", o->outer, "Outer activation psi (odd)");
  sub->add_option("--mode", o->mode, "regression or pconcept");
  sub->add_option("--concept", o->concept_text, "One-based indices i1,i2,... (default 1..k)");
  sub->add_option("--dist", o->dist, "gaussian, rademacher or mixture");
  sub->add_option("--train", o->train, "Training rows");
  sub->add_option("--test", o->test, "Test rows");
  sub->add_option("--seed", o->seed, "Master seed");
  sub->add_option("--out", o->out, "Output directory");
  reg.add(sub, OutputKind::directory, &o->out).run = [o] { return run_data(*o); };
}

}  // namespace sqcli
