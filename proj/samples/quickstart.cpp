// Diameter of a 3-point metric, checked against the extended-metric axioms,
// then converted to a G-metric and back.

#include <iostream>

#include "balk/balk.hpp"

int main() {
  const auto d = balk::FiniteMetric(balk::Universe({"a", "b", "c"}), {{0, 1, 2}, {1, 0, 1.5}, {2, 1.5, 0}});
  const auto tau = balk::diameter_balk(d);
  std::cout << balk::io::dump(balk::io::to_json(tau));

  const auto report = balk::check_balk(tau);
  std::cout << "check_balk: " << balk::to_string(report.verdict) << "\n";

  const auto g = balk::balk_to_g(tau).table;
  std::cout << "round trip exact: " << std::boolalpha << (balk::g_to_balk(g) == tau) << "\n";

  const auto eq = balk::verify_pair_determined(tau);
  std::cout << "pair-determined clauses agree: " << eq.agree << "\n";
}
