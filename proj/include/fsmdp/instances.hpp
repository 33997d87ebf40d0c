#pragma once

#include <memory>

#include "fsmdp/environment.hpp"
#include "fsmdp/model.hpp"
#include "fsmdp/optimism.hpp"
#include "fsmdp/random.hpp"

// Seeded random instances shared by the tests, the acceptance suite and the
// `oracle-suite` subcommand.

namespace fsmdp {

struct RandomStructureSpec {
  int m = 6;
  int actions = 2;
  int tau = 2;
  /// Largest reward and parent scope.
  int max_scope = 3;
  int rewards = 2;
  /// Basis functions besides h_0.
  int bases = 3;
};

/// Binary variables, random reward scopes, random basis value scopes of size
/// <= 2 with parent scopes of size <= max_scope, tables in [-1, 1].
std::shared_ptr<const ModelStructure> random_structure(const RandomStructureSpec& spec, Rng& rng);

/// Tables built from a confidence state fed `steps` random transitions, so
/// both sign variants and unvisited cells occur.
OptimisticTables random_tables(std::shared_ptr<const ModelStructure> structure, Rng& rng, int steps = 40);

/// Weights uniform in [-scale, scale].
WeightMatrix random_weights(int tau, std::size_t phi, double scale, Rng& rng);

/// The structure a generated environment is learned with.
std::shared_ptr<const ModelStructure> structure_for(const GeneratedEnvironment& gen);

/// Product environment on m binary variables with clusters of size 1 or 2,
/// random parents containing each cluster, one reward per cluster with means
/// in [0, 1], and one basis function per cluster.
GeneratedEnvironment random_environment(int m, int actions, int tau, Rng& rng);

/// A single full-scope cluster over `bits` binary variables with a dense random
/// transition table, full-scope rewards in [0, 1], and the tabular basis: h_0
/// plus indicators of every state but the first.
GeneratedEnvironment tabular_environment(int bits, int actions, int tau, Rng& rng);

}  // namespace fsmdp
