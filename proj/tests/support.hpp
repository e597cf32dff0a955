// Shared fixtures for the test binaries: cached benchmark solves and a seeded
// random source for the property tests.
#pragma once

#include <doctest.h>

#include <map>
#include <random>

#include "epi/solvers.hpp"

namespace epi::test {

inline const StateGrid& benchmark_grid() {
  static const StateGrid g{GridSpec{}};
  return g;
}

/// A coarse grid for tests that repeat whole solves.
inline const StateGrid& small_grid(int n_mu = 0) {
  static std::map<int, StateGrid> cache;
  auto it = cache.find(n_mu);
  if (it == cache.end()) {
    GridSpec s;
    s.n_S = 30;
    s.n_I = 90;
    s.n_mu = n_mu;
    it = cache.emplace(n_mu, StateGrid(s)).first;
  }
  return it->second;
}

inline const AllocationResult& benchmark_pbe() {
  static const AllocationResult r = solve_pbe(ModelParams{}, benchmark_grid());
  return r;
}

inline const AllocationResult& benchmark_spp() {
  static const AllocationResult r = solve_spp(ModelParams{}, benchmark_grid());
  return r;
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20210611);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

/// Random admissible parameter set around the benchmark.
inline ModelParams random_params() {
  ModelParams p;
  p.sigma = uniform(0.05, 1.0);
  p.alpha = uniform(0.3, 4.0);
  p.a_min = uniform(0.0, 0.2);
  p.a_Ik = uniform(p.a_min + 1e-3, 1.0);
  p.beta = uniform(0.05, 0.5);
  p.gamma = uniform(0.03, 0.3);
  p.u_D = uniform(-40.0, -1.0);
  return p;
}

}  // namespace epi::test
