// Writes the synthetic sample datasets under samples/data.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "ccr/io.hpp"
#include "ccr/simulation.hpp"

using namespace ccr;

static void emit(const SyntheticDesign& g, std::uint64_t seed, const std::filesystem::path& dir, const std::string& stem) {
  const Dataset d = generate_synthetic_dataset(g, seed);
  std::ofstream p(dir / (stem + "_policies.csv"), std::ios::binary), c(dir / (stem + "_claims.csv"), std::ios::binary);
  write_dataset(d, p, c);
  std::cout << stem << ": " << d.records.size() << " policies, " << d.total_claims() << " claims\n";
}

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "samples/data";
  std::filesystem::create_directories(dir);
  emit(design_regression(0.5), 11, dir, "regression");
  emit(design_incomplete(0.5, Scheme::PerLossCensored, 500), 12, dir, "censored");
  emit(design_incomplete(0.5, Scheme::PerPaymentTruncated, 500), 13, dir, "truncated");
  emit(design_portfolio(-0.3), 14, dir, "portfolio");
}
