#include "coinfer/baselines.hpp"
#include "coinfer/error.hpp"

#include "support/approx.hpp"
#include "support/random_instance.hpp"
#include "support/reference_oracle.hpp"
#include "support/toy.hpp"

#include <doctest.h>

#include <string>

using namespace coinfer;
using namespace coinfer::testing;

TEST_CASE("method names") {
    for (Method m : {Method::Jdob, Method::LocalOnly, Method::JdobNoEdgeDvfs, Method::JdobBinary, Method::Oracle})
        CHECK(parse_method(to_string(m)) == m);
    CHECK(parse_method("lc") == Method::LocalOnly);
    CHECK(parse_method("jdob-binary") == Method::JdobBinary);
    CHECK_FALSE(parse_method("greedy").has_value());
}

TEST_CASE("local computing") {
    const auto m = toy_model();
    const auto devs = toy_devices({0.2, 0.25});
    const LocalSolution lc = solve_local_only(*m, devs);
    CHECK(lc.energy == rel(1.35, 1e-12));
    CHECK(lc.f_star == std::vector<double>{1.5e9, 1.5e9});

    const auto boundary = toy_devices({3e8 / 2.6e9});
    CHECK(solve_local_only(*m, boundary).f_star[0] == rel(2.6e9, 1e-12));
    const auto relaxed = toy_devices({1e9});
    CHECK(solve_local_only(*m, relaxed).f_star[0] == 1.5e9);

    const auto tight = toy_devices({0.1});
    try {
        solve_local_only(*m, tight);
        FAIL("expected an infeasible user");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InfeasibleUser);
    }
}

TEST_CASE("oracle examples") {
    const EdgeParams edge = toy_edge();
    const auto devs = toy_devices({0.2, 0.25});
    const auto ids = all_ids(2);
    const Group g{devs, ids};

    const OracleResult toy2 = brute_force_oracle(*toy_model(0.01), edge, g, 0.0);
    CHECK(toy2.energy == rel(0.0642368, 1e-9));
    CHECK(toy2.witness.n_tilde == 0);
    CHECK(toy2.witness.offload_set == std::vector<UserId>{0, 1});
    CHECK(toy2.witness.fe == rel(1.92e9, 1e-12));
    CHECK(toy2.search_size == oracle_search_size(*toy_model(0.01), edge, 2));

    const OracleResult toy1 = brute_force_oracle(*toy_model(), edge, g, 0.0);
    CHECK(toy1.energy == rel(1.309, 1e-9));

    const auto one = all_ids(1);
    const Group single{devs, one};
    const OracleResult m1 = brute_force_oracle(*toy_model(0.01), edge, single, 0.0);
    CHECK(m1.energy == rel(0.02248075, 1e-7));
    CHECK(m1.witness.fe == rel(1.29e9, 1e-12));
    CHECK(m1.energy == rel(jdob_solve(*toy_model(0.01), edge, single, 0.0).energy, 1e-9));
}

TEST_CASE("oracle caps") {
    const auto devs = toy_devices({0.2, 0.2, 0.2, 0.2, 0.2});
    const auto ids = all_ids(5);
    BlockProfile b;
    b.workload = {1e8, 2e8};
    b.output_bits = {1e6, 4e5, 1e3};
    const std::vector<double> row(5, 1.0);
    const auto model = std::make_shared<const ModelProfile>(b, CoefficientTable::from_rows({row, row}),
                                                            CoefficientTable::from_rows({row, row}));
    try {
        brute_force_oracle(*model, toy_edge(), Group{devs, ids}, 0.0);
        FAIL("expected the cap to trip");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CapExceeded);
        const std::string size = std::to_string(oracle_search_size(*model, toy_edge(), 5));
        CHECK(std::string(e.what()).find(size) != std::string::npos);
    }
    CHECK_NOTHROW(brute_force_oracle(*model, toy_edge(), Group{devs, ids}, 0.0, OracleCaps{5, 3}));
}

TEST_CASE("oracle bounds J-DOB and matches an independent enumeration") {
    Sampler s(51);
    for (int i = 0; i < 150; ++i) {
        const Instance inst = random_instance(s, RandomSpec{4, 3});
        const auto ids = all_ids(inst.devices.size());
        const Group g{inst.devices, ids};
        const double t_free = inst.edge.t_free0;

        const OracleResult opt = brute_force_oracle(*inst.model, inst.edge, g, t_free);
        const BatchPlan heur = jdob_solve(*inst.model, inst.edge, g, t_free);
        CHECK(opt.energy <= heur.energy * (1.0 + 1e-12));
        if (ids.size() == 1) CHECK(opt.energy == rel(heur.energy, 1e-9));

        const ConfigEval w = evaluate_config(*inst.model, inst.edge, g, opt.witness.n_tilde,
                                             std::span<const UserId>(opt.witness.offload_set), opt.witness.fe, t_free);
        CHECK(w.feasible());
        CHECK(w.energy == rel(opt.energy, 1e-12));

        const ReferenceOptimum ref = reference_optimum(*inst.model, inst.edge, inst.devices, t_free);
        CHECK(opt.energy == rel(ref.energy, 1e-9));
        CHECK(opt.energy <= solve_local_only(*inst.model, inst.devices).energy * (1.0 + 1e-12));
    }
}

TEST_CASE("inner solvers") {
    const Instance inst = toy_instance(0.01, {0.2, 0.25});
    const auto ids = all_ids(2);
    const Group g{inst.devices, ids};

    const auto lc = make_inner_solver(Method::LocalOnly, inst.model, inst.edge)(g, 0.0);
    REQUIRE(lc.size() == 1);
    CHECK(lc[0].energy == rel(1.35, 1e-12));

    for (Method m : {Method::Jdob, Method::JdobNoEdgeDvfs, Method::JdobBinary, Method::Oracle}) {
        const auto front = make_inner_solver(m, inst.model, inst.edge)(g, 0.0);
        REQUIRE_FALSE(front.empty());
        for (std::size_t k = 1; k < front.size(); ++k) {
            CHECK(front[k].energy > front[k - 1].energy);
            CHECK(front[k].t_free_next < front[k - 1].t_free_next);
        }
    }
    CHECK(make_inner_solver(Method::Jdob, inst.model, inst.edge)(g, 0.0).front().energy == rel(0.0642368, 1e-9));
    CHECK(make_inner_solver(Method::Oracle, inst.model, inst.edge)(g, 0.0).front().energy == rel(0.0642368, 1e-9));
}

TEST_CASE("dominance over restricted searches") {
    Sampler s(52);
    for (int i = 0; i < 200; ++i) {
        const Instance inst = random_instance(s, RandomSpec{8, 5});
        const auto energy = [&](Method m) {
            return group_users_dp(inst, make_inner_solver(m, inst.model, inst.edge)).total_energy;
        };
        const double full = energy(Method::Jdob);
        CHECK(full <= energy(Method::JdobNoEdgeDvfs) * (1.0 + 1e-12));
        CHECK(full <= energy(Method::JdobBinary) * (1.0 + 1e-12));
        CHECK(full <= energy(Method::LocalOnly) * (1.0 + 1e-12));
    }
}
