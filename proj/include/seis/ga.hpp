#pragma once

#include <cstdint>
#include <vector>

#include "seis/dispatch.hpp"

namespace seis {

struct GaConfig {
  std::size_t population = 200;
  std::size_t generations = 500;
  double crossover_rate = 0.9;
  double mutation_rate = 0.2;
  std::size_t elitism = 2;
  std::size_t tournament = 3;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Per depot: a permutation of the cluster plus crew-1 sorted cut points.
struct GaChromosome {
  std::vector<std::vector<std::size_t>> order;
  std::vector<std::vector<std::size_t>> cuts;
};

struct GaResult {
  DispatchPlan plan;
  ObjectiveBreakdown breakdown;
  std::vector<double> trace;  // best-ever objective after each generation
};

std::vector<Route> decode_chromosome(const GaChromosome& chromosome, const std::vector<std::vector<std::size_t>>& clusters);

GaResult ga_dispatch(const DispatchInstance& instance, const GaConfig& config = {});

}  // namespace seis
