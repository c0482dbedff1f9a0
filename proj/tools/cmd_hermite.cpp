#include <fstream>
#include <iostream>

#include "common.hpp"
#include "sqhardnet/csv.hpp"
#include "sqhardnet/hermite.hpp"

namespace sqcli {

namespace {

struct HermiteOptions {
  std::string activation = "relu";
  int degree = 30;
  int nodes = 400;
  std::string out;
};

int run_hermite(const HermiteOptions& o) {
  const auto act = sqhardnet::parse_activation(o.activation);
  const auto series = sqhardnet::hermite_coeffs_quadrature(act, o.degree, o.nodes);
  std::ostringstream csv;
  csv << "degree,coefficient\n";
  for (int i = 0; i <= series.max_degree; ++i)
    csv << i << ',' << sqhardnet::format_real(series.at(i)) << '\n';
  write_text(require(o.out, "--out"), csv.str());
  std::cout << "wrote " << series.max_degree + 1 << " coefficients of "
            << series.activation_tag << " to " << o.out << '\n';
  return kExitOk;
}

}  // namespace

void register_hermite(CLI::App& root, Registry& reg) {
  auto o = std::make_shared<HermiteOptions>();
  auto* sub = root.add_subcommand("hermite", "Hermite coefficients of an activation");
  sub->add_option("--activation", o->activation,
                  "relu, truncated-relu:T, sigmoid, tanh, sign, identity, constant:c");
  sub->add_option("--degree", o->degree, "Largest degree")->check(CLI::Range(0, 300));
  sub->add_option("--nodes", o->nodes, "Quadrature nodes (>= 2*degree + 20)");
  sub->add_option("--out", o->out, "Output CSV (degree,coefficient)");
  reg.add(sub, OutputKind::file, &o->out).run = [o] { return run_hermite(*o); };
}

}  // namespace sqcli
