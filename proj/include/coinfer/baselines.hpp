#pragma once

#include "coinfer/jdob.hpp"
#include "coinfer/model.hpp"
#include "coinfer/schedule.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace coinfer {

enum class Method { Jdob, LocalOnly, JdobNoEdgeDvfs, JdobBinary, Oracle };

std::string_view to_string(Method method) noexcept;
std::optional<Method> parse_method(std::string_view name) noexcept;

struct LocalSolution {
    double energy = 0.0;
    std::vector<double> f_star;  ///< one per device
};

/// Local-computing baseline: each device at clamp(zeta v_N / T_d).
/// Throws InfeasibleUser when a device cannot finish locally at f_max.
LocalSolution solve_local_only(const ModelProfile& model, std::span<const DeviceParams> devices);

struct OracleCaps {
    std::size_t max_users = 4;
    std::size_t max_blocks = 3;
};

struct OracleResult {
    double energy = 0.0;
    BatchPlan witness;
    std::size_t search_size = 0;
};

/// Number of configurations the exhaustive search would evaluate.
std::size_t oracle_search_size(const ModelProfile& model, const EdgeParams& edge, std::size_t users);

/// Exhaustive search over partition point, offloading subset (including the
/// empty one) and the sweep grid. Refuses instances above `caps` with a
/// CapExceeded error carrying the search size. Feasible configurations are
/// also offered to `frontier` when one is given.
OracleResult brute_force_oracle(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                                double t_free, const OracleCaps& caps = {}, PlanFrontier* frontier = nullptr);

/// Inner solver used by the grouping DP for a given method.
InnerSolver make_inner_solver(Method method, std::shared_ptr<const ModelProfile> model, EdgeParams edge,
                              OracleCaps caps = {});

}  // namespace coinfer
