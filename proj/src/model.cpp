#include "fsmdp/model.hpp"

namespace fsmdp {

ModelStructure::ModelStructure(FactoredSpace space_, int tau_, std::vector<Scope> reward_scopes_, Basis basis_)
    : space(std::move(space_)), tau(tau_), reward_scopes(std::move(reward_scopes_)), basis(std::move(basis_)) {
  if (tau < 1) throw ConfigError("horizon tau must be >= 1");
  for (const auto& z : reward_scopes) reward_idx_.emplace_back(z, space);
  for (const auto& f : basis) {
    f.value_scope.validate(space);
    f.parent_scope.validate(space);
  }
}

std::size_t ModelStructure::marginal_count() const {
  std::size_t n = 0;
  for (std::size_t j = 1; j < basis.size(); ++j) n += parent_count(j);
  return n * static_cast<std::size_t>(space.action_count());
}

}  // namespace fsmdp
