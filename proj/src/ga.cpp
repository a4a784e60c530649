#include "seis/ga.hpp"

#include <algorithm>
#include <numeric>

#include "seis/error.hpp"
#include "seis/rng.hpp"

namespace seis {

void GaConfig::validate() const {
  if (population < 2) throw ConfigError("ga: population must be at least 2");
  if (elitism >= population) throw ConfigError("ga: elitism must be smaller than the population");
  if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 || mutation_rate > 1.0)
    throw ConfigError("ga: rates must lie in [0, 1]");
  if (tournament < 1) throw ConfigError("ga: tournament size must be at least 1");
}

std::vector<Route> decode_chromosome(const GaChromosome& chrom, const std::vector<std::vector<std::size_t>>& clusters) {
  std::vector<Route> routes;
  for (std::size_t s = 0; s < chrom.order.size(); ++s) {
    std::size_t begin = 0;
    const auto& cuts = chrom.cuts[s];
    for (std::size_t c = 0; c <= cuts.size(); ++c) {
      const std::size_t end = c < cuts.size() ? cuts[c] : chrom.order[s].size();
      Route r{s, static_cast<int>(c), {}};
      for (std::size_t i = begin; i < end; ++i) r.jobs.push_back(clusters[s][chrom.order[s][i]]);
      if (!r.jobs.empty()) routes.push_back(std::move(r));
      begin = end;
    }
  }
  return routes;
}

namespace {

std::size_t below(Rng& rng, std::size_t n) { return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)); }

class Evaluator {
 public:
  Evaluator(const DispatchInstance& inst, const std::vector<std::vector<std::size_t>>& clusters)
      : inst_(inst), clusters_(clusters) {
    for (std::size_t s = 0; s < clusters.size(); ++s) {
      const auto& cl = clusters[s];
      std::vector<double> home(cl.size());
      std::vector<std::vector<double>> tt(cl.size(), std::vector<double>(cl.size()));
      for (std::size_t i = 0; i < cl.size(); ++i) {
        home[i] = travel_time(inst.depots[s].coords, inst.failed[cl[i]].coords, inst.speed_kmh);
        for (std::size_t j = 0; j < cl.size(); ++j)
          tt[i][j] = travel_time(inst.failed[cl[i]].coords, inst.failed[cl[j]].coords, inst.speed_kmh);
      }
      home_.push_back(std::move(home));
      between_.push_back(std::move(tt));
    }
  }

  double operator()(const GaChromosome& chrom) const {
    double T = 0.0, ens = 0.0;
    for (std::size_t s = 0; s < chrom.order.size(); ++s) {
      std::size_t begin = 0;
      const auto& order = chrom.order[s];
      for (std::size_t c = 0; c <= chrom.cuts[s].size(); ++c) {
        const std::size_t end = c < chrom.cuts[s].size() ? chrom.cuts[s][c] : order.size();
        double clock = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
          const std::size_t j = order[i];
          clock += i == begin ? home_[s][j] : between_[s][order[i - 1]][j];
          const auto& fc = inst_.failed[clusters_[s][j]];
          clock += fc.repair_hours;
          ens += fc.curtailed_mw * clock;
        }
        T = std::max(T, clock);
        begin = end;
      }
    }
    return inst_.gamma * T + (1.0 - inst_.gamma) * ens;
  }

 private:
  const DispatchInstance& inst_;
  const std::vector<std::vector<std::size_t>>& clusters_;
  std::vector<std::vector<double>> home_;
  std::vector<std::vector<std::vector<double>>> between_;
};

// OX1: copy a slice from a, fill the rest in b's order.
std::vector<std::size_t> order_crossover(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b, Rng& rng) {
  const std::size_t n = a.size();
  if (n < 2) return a;
  std::size_t i = below(rng, n), j = below(rng, n);
  if (i > j) std::swap(i, j);
  std::vector<std::size_t> child(n);
  std::vector<bool> taken(n, false);
  for (std::size_t k = i; k <= j; ++k) {
    child[k] = a[k];
    taken[a[k]] = true;
  }
  std::size_t pos = (j + 1) % n;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t gene = b[(j + 1 + k) % n];
    if (taken[gene]) continue;
    child[pos] = gene;
    taken[gene] = true;
    pos = (pos + 1) % n;
  }
  return child;
}

void mutate(GaChromosome& chrom, double rate, Rng& rng) {
  for (std::size_t s = 0; s < chrom.order.size(); ++s) {
    auto& order = chrom.order[s];
    const std::size_t n = order.size();
    if (n >= 2 && uniform01(rng) < rate) {
      const std::size_t i = below(rng, n), j = below(rng, n);
      if (uniform01(rng) < 0.5) {
        std::swap(order[i], order[j]);
      } else {
        const std::size_t gene = order[i];
        order.erase(order.begin() + static_cast<long>(i));
        order.insert(order.begin() + static_cast<long>(j), gene);
      }
    }
    auto& cuts = chrom.cuts[s];
    if (!cuts.empty() && uniform01(rng) < rate) {
      cuts[below(rng, cuts.size())] = below(rng, n + 1);
      std::sort(cuts.begin(), cuts.end());
    }
  }
}

}  // namespace

GaResult ga_dispatch(const DispatchInstance& instance, const GaConfig& config) {
  instance.validate();
  config.validate();
  Rng rng(derive_seed(config.seed, 0));
  const Assignment assignment = cluster_to_depots(instance.failed, instance.depots);
  std::vector<std::vector<std::size_t>> clusters(instance.depots.size());
  for (std::size_t d = 0; d < assignment.size(); ++d) clusters[assignment[d]].push_back(d);
  const Evaluator evaluate(instance, clusters);

  auto random_chromosome = [&]() {
    GaChromosome c;
    for (std::size_t s = 0; s < clusters.size(); ++s) {
      std::vector<std::size_t> order(clusters[s].size());
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[below(rng, i)]);
      std::vector<std::size_t> cuts(static_cast<std::size_t>(instance.depots[s].crew_count - 1));
      for (auto& cut : cuts) cut = below(rng, order.size() + 1);
      std::sort(cuts.begin(), cuts.end());
      c.order.push_back(std::move(order));
      c.cuts.push_back(std::move(cuts));
    }
    return c;
  };

  struct Individual {
    GaChromosome chrom;
    double value;
  };
  std::vector<Individual> pop;
  pop.reserve(config.population);
  for (std::size_t i = 0; i < config.population; ++i) {
    GaChromosome c = random_chromosome();
    const double v = evaluate(c);
    pop.push_back({std::move(c), v});
  }
  auto by_value = [](const Individual& a, const Individual& b) { return a.value < b.value; };
  std::stable_sort(pop.begin(), pop.end(), by_value);
  Individual best = pop.front();

  auto select = [&]() -> const Individual& {
    std::size_t winner = below(rng, pop.size());
    for (std::size_t k = 1; k < config.tournament; ++k) {
      const std::size_t other = below(rng, pop.size());
      if (pop[other].value < pop[winner].value) winner = other;
    }
    return pop[winner];
  };

  GaResult result;
  result.trace.reserve(config.generations);
  for (std::size_t gen = 0; gen < config.generations; ++gen) {
    std::vector<Individual> next(pop.begin(), pop.begin() + static_cast<long>(config.elitism));
    while (next.size() < config.population) {
      const Individual& a = select();
      const Individual& b = select();
      GaChromosome child = a.chrom;
      if (uniform01(rng) < config.crossover_rate) {
        for (std::size_t s = 0; s < clusters.size(); ++s) {
          child.order[s] = order_crossover(a.chrom.order[s], b.chrom.order[s], rng);
          if (uniform01(rng) < 0.5) child.cuts[s] = b.chrom.cuts[s];
        }
      }
      mutate(child, config.mutation_rate, rng);
      const double v = evaluate(child);
      next.push_back({std::move(child), v});
    }
    pop = std::move(next);
    std::stable_sort(pop.begin(), pop.end(), by_value);
    if (pop.front().value < best.value) best = pop.front();
    result.trace.push_back(best.value);
  }

  result.plan = schedule_plan(instance, decode_chromosome(best.chrom, clusters));
  result.breakdown = objective(result.plan, instance);
  return result;
}

}  // namespace seis
