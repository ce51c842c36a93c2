// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "geopli/checkpoint.hpp"
#include "geopli/errors.hpp"
#include "geopli/mlp.hpp"
#include "geopli/params.hpp"
#include "geopli/rng.hpp"
#include "geopli/tape.hpp"
#include "geopli/tensor.hpp"
#include "geopli/tensor_ops.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace geopli;

TEST_CASE("tensor shape and data must agree") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), DimensionError);
    CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);
    Tensor t({2, 2}, {1, 2, 3, 4});
    CHECK(t.at(1, 0) == 3.0);
    CHECK(t.size() == 4);
}

TEST_CASE("mlp with zero weights returns final bias") {
    ParamStore params(1);
    MlpSpec spec{{3, 4, 2}, Activation::SiLU};
    Rng rng(1);
    init_mlp_params(params, "f", spec, rng);
    params.set("f.w0", Tensor({3, 4}));
    params.set("f.w1", Tensor({4, 2}));
    params.set("f.b0", Tensor({1, 4}, {0.5, -0.5, 1.0, 0.0}));
    params.set("f.b1", Tensor({1, 2}, {2.0, -3.0}));
    // Zero weights kill every matmul, so the output is exactly the last bias
    // regardless of the hidden activations.
    Tensor out = mlp_eval(params, "f", Tensor({1, 3}, {9.0, 9.0, 9.0}), spec);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == -3.0);
}

TEST_CASE("mlp identity weights with identity activation pass input through") {
    ParamStore params(1);
    MlpSpec spec{{3, 3}, Activation::Identity};
    Rng rng(1);
    init_mlp_params(params, "f", spec, rng);
    Tensor eye({3, 3});
    for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    params.set("f.w0", eye);
    params.set("f.b0", Tensor({1, 3}));
    Tensor out = mlp_eval(params, "f", Tensor({1, 3}, {1.0, 2.0, 3.0}), spec);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
    CHECK(out[2] == 3.0);
}

TEST_CASE("mlp matches scalar-loop oracle on random params") {
    ParamStore params(7);
    MlpSpec spec{{5, 8, 8, 3}, Activation::SiLU};
    Rng rng(7);
    init_mlp_params(params, "f", spec, rng);
    Rng data_rng(70);
    Tensor input = testutil::random_tensor({4, 5}, data_rng);
    Tensor got = mlp_eval(params, "f", input, spec);
    auto want = oracle::mlp_rows(params, "f", input.data(), 4, spec.sizes, "silu");
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) < 1e-12);

    SUBCASE("leaky_relu activation agrees too") {
        ParamStore p2(9);
        MlpSpec s2{{5, 6, 2}, Activation::LeakyReLU};
        Rng r2(9);
        init_mlp_params(p2, "g", s2, r2);
        Tensor got2 = mlp_eval(p2, "g", input, s2);
        auto want2 = oracle::mlp_rows(p2, "g", input.data(), 4, s2.sizes, "leaky_relu");
        for (std::size_t i = 0; i < got2.size(); ++i) CHECK(std::abs(got2[i] - want2[i]) < 1e-12);
    }
}

TEST_CASE("mlp shape mismatch names the offending layer") {
    ParamStore params(1);
    MlpSpec spec{{3, 4, 2}, Activation::SiLU};
    Rng rng(1);
    init_mlp_params(params, "f", spec, rng);
    try {
        mlp_eval(params, "f", Tensor({1, 5}), spec);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
    }
}

TEST_CASE("segment_reduce small arithmetic cases") {
    Tensor values = Tensor::matrix({{1, 2}, {3, 4}});
    std::vector<std::size_t> ids{0, 0};
    Tensor s = segment_reduce(values, ids, 1, ReduceMode::Sum);
    CHECK(s.at(0, 0) == 4.0);
    CHECK(s.at(0, 1) == 6.0);
    Tensor m = segment_reduce(values, ids, 1, ReduceMode::Mean);
    CHECK(m.at(0, 0) == 2.0);
    CHECK(m.at(0, 1) == 3.0);
    Tensor mx = segment_reduce(values, ids, 1, ReduceMode::Max);
    CHECK(mx.at(0, 0) == 3.0);
    CHECK(mx.at(0, 1) == 4.0);
}

TEST_CASE("segment_reduce empty segments give zero vectors in all modes") {
    Tensor values = Tensor::matrix({{5, -2}});
    std::vector<std::size_t> ids{2};
    for (auto mode : {ReduceMode::Sum, ReduceMode::Mean, ReduceMode::Max}) {
        Tensor out = segment_reduce(values, ids, 4, mode);
        for (std::size_t s : {0u, 1u, 3u}) {
            CHECK(out.at(s, 0) == 0.0);
            CHECK(out.at(s, 1) == 0.0);
        }
    }
}

TEST_CASE("segment_reduce matches brute-force loop on 100 random edges over 10 nodes") {
    Rng rng(21);
    Tensor values = testutil::random_tensor({100, 7}, rng);
    std::vector<std::size_t> ids(100);
    for (auto& id : ids) id = static_cast<std::size_t>(rng.below(10));
    CHECK(testutil::max_abs_diff(segment_reduce(values, ids, 10, ReduceMode::Sum),
                                 oracle::segment_reduce(values, ids, 10, oracle::Reduce::Sum)) == 0.0);
    CHECK(testutil::max_abs_diff(segment_reduce(values, ids, 10, ReduceMode::Mean),
                                 oracle::segment_reduce(values, ids, 10, oracle::Reduce::Mean)) == 0.0);
    CHECK(testutil::max_abs_diff(segment_reduce(values, ids, 10, ReduceMode::Max),
                                 oracle::segment_reduce(values, ids, 10, oracle::Reduce::Max)) == 0.0);
}

TEST_CASE("segment_reduce rejects out-of-range ids") {
    Tensor values = Tensor::matrix({{1.0}});
    std::vector<std::size_t> ids{3};
    CHECK_THROWS_AS(segment_reduce(values, ids, 3, ReduceMode::Sum), IndexError);
}

TEST_CASE("segment sum is invariant to edge permutation") {
    Rng rng(33);
    Tensor values = testutil::random_tensor({40, 3}, rng);
    std::vector<std::size_t> ids(40);
    for (auto& id : ids) id = static_cast<std::size_t>(rng.below(6));
    Tensor base = segment_reduce(values, ids, 6, ReduceMode::Sum);

    std::vector<std::size_t> perm(40);
    for (std::size_t i = 0; i < 40; ++i) perm[i] = i;
    rng.shuffle(perm);
    Tensor pv({40, 3});
    std::vector<std::size_t> pids(40);
    for (std::size_t i = 0; i < 40; ++i) {
        pids[i] = ids[perm[i]];
        for (std::size_t c = 0; c < 3; ++c) pv.at(i, c) = values.at(perm[i], c);
    }
    Tensor permuted = segment_reduce(pv, pids, 6, ReduceMode::Sum);
    // Permutation invariance is exact only up to float addition order; the
    // spec requires identical output, so compare with zero tolerance after
    // sorting contributions is not possible -- instead check the tight bound.
    CHECK(testutil::max_abs_diff(base, permuted) < 1e-12);
}

TEST_CASE("segment_softmax singleton and symmetric cases") {
    Tensor one = Tensor::vector({42.0});
    std::vector<std::size_t> ids{0};
    Tensor p = segment_softmax(one, ids, 1);
    CHECK(p[0] == 1.0);

    Tensor two = Tensor::vector({1.5, 1.5});
    std::vector<std::size_t> both{0, 0};
    Tensor q = segment_softmax(two, both, 1);
    CHECK(q[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("segment_softmax survives huge logits via max subtraction") {
    Tensor logits = Tensor::vector({1000.0, 1001.0});
    std::vector<std::size_t> ids{0, 0};
    Tensor p = segment_softmax(logits, ids, 1);
    // Hand computation with the shift: exp(-1)/(1+exp(-1)) and 1/(1+exp(-1)).
    const double e1 = std::exp(-1.0);
    CHECK(std::isfinite(p[0]));
    CHECK(p[0] == doctest::Approx(e1 / (1.0 + e1)).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(1.0 / (1.0 + e1)).epsilon(1e-14));
}

TEST_CASE("segment_softmax sums to one for logits up to 1e4") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t e = 1 + rng.below(30);
        const std::size_t n_seg = 1 + rng.below(5);
        Tensor logits({e});
        std::vector<std::size_t> ids(e);
        for (std::size_t i = 0; i < e; ++i) {
            logits[i] = rng.uniform(-1e4, 1e4);
            ids[i] = static_cast<std::size_t>(rng.below(n_seg));
        }
        Tensor p = segment_softmax(logits, ids, n_seg);
        std::vector<double> sums(n_seg, 0.0);
        std::vector<bool> seen(n_seg, false);
        for (std::size_t i = 0; i < e; ++i) {
            CHECK(p[i] > 0.0);
            sums[ids[i]] += p[i];
            seen[ids[i]] = true;
        }
        for (std::size_t s = 0; s < n_seg; ++s) {
            if (seen[s]) CHECK(std::abs(sums[s] - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("backward of p^2 at p=3 is 6") {
    Tape tape;
    NodeId p = tape.param("p", Tensor::scalar(3.0));
    NodeId loss = tape.mul(p, p);
    GradMap grads = tape.backward(loss);
    CHECK(grads.at("p")[0] == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("parameters not touched by the loss get zero gradients") {
    ParamStore params(1);
    params.add("p", Tensor::scalar(3.0));
    params.add("q", Tensor({2, 2}, {1, 2, 3, 4}));
    Tape tape;
    NodeId p = tape.param("p", params.get("p"));
    NodeId loss = tape.mul(p, p);
    GradMap grads = full_gradients(tape, loss, params);
    CHECK(grads.at("q").same_shape(params.get("q")));
    for (double v : grads.at("q").data()) CHECK(v == 0.0);
}

TEST_CASE("backward is idempotent") {
    Rng rng(11);
    Tape tape;
    NodeId w = tape.param("w", testutil::random_tensor({3, 3}, rng));
    NodeId x = tape.constant(testutil::random_tensor({2, 3}, rng));
    NodeId loss = tape.mean_all(tape.silu(tape.matmul(x, w)));
    GradMap first = tape.backward(loss);
    GradMap second = tape.backward(loss);
    CHECK(first.at("w").data() == second.at("w").data());
}

TEST_CASE("backward rejects non-scalar loss") {
    Tape tape;
    NodeId w = tape.param("w", Tensor({2, 2}, {1, 2, 3, 4}));
    CHECK_THROWS_AS(tape.backward(w), ContractError);
}

// Finite-difference agreement for every tape operation type. Each case
// builds a scalar loss from the op output through fixed random weights and
// compares the analytic gradient with central differences.
TEST_CASE("per-op gradients match finite differences") {
    Rng rng(99);
    const double step = 1e-5;
    const double tol = 1e-4;

    // Every evaluation reseeds its own Rng so the random constants inside
    // the built expression are identical across the analytic pass and each
    // finite-difference probe.
    std::uint64_t op_seed = 1000;
    auto check_op = [&](const std::string& label,
                        const std::function<NodeId(Tape&, NodeId, Rng&)>& build,
                        std::vector<std::size_t> in_shape) {
        CAPTURE(label);
        const std::uint64_t seed = ++op_seed;
        ParamStore params(3);
        params.add("x", testutil::random_tensor(in_shape, rng));

        auto loss_value = [&](const ParamStore& p) {
            Tape t;
            Rng op_rng(seed);
            NodeId x = t.param("x", p.get("x"));
            NodeId y = build(t, x, op_rng);
            Rng mix_rng(seed + 7);
            NodeId m = t.constant(testutil::random_tensor(t.value(y).shape(), mix_rng));
            return t.value(t.sum_all(t.mul(y, m)))[0];
        };

        Tape tape;
        Rng op_rng(seed);
        NodeId x = tape.param("x", params.get("x"));
        NodeId y = build(tape, x, op_rng);
        Rng mix_rng(seed + 7);
        NodeId loss = tape.sum_all(
            tape.mul(y, tape.constant(testutil::random_tensor(tape.value(y).shape(), mix_rng))));
        GradMap grads = tape.backward(loss);
        const Tensor& gx = grads.at("x");
        for (std::size_t i = 0; i < gx.size(); ++i) {
            const double fd = oracle::finite_difference(params, "x", i, step, loss_value);
            CHECK(testutil::close_rel(gx[i], fd, tol));
        }
    };

    check_op("matmul", [](Tape& t, NodeId x, Rng& r) {
        return t.matmul(x, t.constant(testutil::random_tensor({4, 3}, r)));
    }, {2, 4});
    check_op("add", [](Tape& t, NodeId x, Rng& r) {
        return t.add(x, t.constant(testutil::random_tensor({3, 2}, r)));
    }, {3, 2});
    check_op("add bias broadcast", [](Tape& t, NodeId x, Rng& r) {
        return t.add(x, t.constant(testutil::random_tensor({1, 2}, r)));
    }, {3, 2});
    check_op("bias itself", [](Tape& t, NodeId x, Rng& r) {
        return t.add(t.constant(testutil::random_tensor({3, 4}, r)), x);
    }, {1, 4});
    check_op("sub", [](Tape& t, NodeId x, Rng& r) {
        return t.sub(x, t.constant(testutil::random_tensor({3, 2}, r)));
    }, {3, 2});
    check_op("mul", [](Tape& t, NodeId x, Rng& r) {
        return t.mul(x, t.constant(testutil::random_tensor({3, 2}, r)));
    }, {3, 2});
    check_op("mul column broadcast", [](Tape& t, NodeId x, Rng& r) {
        return t.mul(x, t.constant(testutil::random_tensor({3, 4}, r)));
    }, {3, 1});
    check_op("scale", [](Tape& t, NodeId x, Rng&) { return t.scale(x, -2.5); }, {2, 3});
    check_op("silu", [](Tape& t, NodeId x, Rng&) { return t.silu(x); }, {3, 3});
    check_op("leaky_relu", [](Tape& t, NodeId x, Rng&) { return t.leaky_relu(x, 0.2); }, {3, 3});
    check_op("concat_cols", [](Tape& t, NodeId x, Rng& r) {
        return t.concat_cols({x, t.constant(testutil::random_tensor({3, 2}, r)), x});
    }, {3, 2});
    check_op("gather_rows", [](Tape& t, NodeId x, Rng&) {
        return t.gather_rows(x, {2, 0, 2, 1, 2});
    }, {3, 2});
    check_op("segment_sum", [](Tape& t, NodeId x, Rng&) {
        return t.segment_sum(x, {0, 1, 0, 2, 1}, 4);
    }, {5, 2});
    check_op("segment_mean", [](Tape& t, NodeId x, Rng&) {
        return t.segment_mean(x, {0, 1, 0, 2, 1}, 4);
    }, {5, 2});
    check_op("segment_max", [](Tape& t, NodeId x, Rng&) {
        return t.segment_max(x, {0, 1, 0, 2, 1}, 4);
    }, {5, 2});
    check_op("segment_softmax", [](Tape& t, NodeId x, Rng&) {
        return t.segment_softmax(x, {0, 1, 0, 2, 1}, 3);
    }, {5, 1});
    check_op("row_sum", [](Tape& t, NodeId x, Rng&) { return t.row_sum(x); }, {4, 3});
    check_op("col_sum", [](Tape& t, NodeId x, Rng&) { return t.col_sum(x); }, {4, 3});
    check_op("mean_all", [](Tape& t, NodeId x, Rng&) { return t.mean_all(x); }, {4, 3});
    check_op("composite chain", [](Tape& t, NodeId x, Rng& r) {
        NodeId h = t.silu(t.matmul(x, t.constant(testutil::random_tensor({3, 5}, r))));
        NodeId s = t.segment_mean(h, {0, 1, 0, 1}, 2);
        return t.concat_cols({s, t.segment_max(h, {0, 1, 0, 1}, 2)});
    }, {4, 3});
}

TEST_CASE("adam with zero learning rate leaves parameters untouched") {
    ParamStore params(1);
    params.add("w", Tensor({2}, {1.5, -2.5}));
    GradMap grads;
    grads["w"] = Tensor({2}, {10.0, -10.0});
    adam_step(params, grads, AdamConfig{0.0, 0.9, 0.999, 1e-8}, 1);
    CHECK(params.get("w")[0] == 1.5);
    CHECK(params.get("w")[1] == -2.5);
}

TEST_CASE("adam first step matches the hand-computed bias-corrected update") {
    // Hand computation, g = 1, t = 1:
    //   m = (1-b1)*1, m_hat = m/(1-b1) = 1
    //   v = (1-b2)*1, v_hat = v/(1-b2) = 1
    //   delta = -lr * 1 / (sqrt(1) + eps)
    ParamStore params(1);
    params.add("w", Tensor::scalar(3.0));
    GradMap grads;
    grads["w"] = Tensor::scalar(1.0);
    const double lr = 0.001, eps = 1e-8;
    adam_step(params, grads, AdamConfig{lr, 0.9, 0.999, eps}, 1);
    const double expected = 3.0 - lr / (1.0 + eps);
    CHECK(params.get("w")[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("adam zero gradient only decays moments") {
    ParamStore params(1);
    params.add("w", Tensor::scalar(1.0));
    GradMap g1;
    g1["w"] = Tensor::scalar(2.0);
    adam_step(params, g1, AdamConfig{0.0, 0.9, 0.999, 1e-8}, 1);
    const double m_before = params.adam_m().at("w")[0];
    GradMap g0;
    g0["w"] = Tensor::scalar(0.0);
    adam_step(params, g0, AdamConfig{0.0, 0.9, 0.999, 1e-8}, 2);
    CHECK(params.get("w")[0] == 1.0);
    CHECK(params.adam_m().at("w")[0] == doctest::Approx(0.9 * m_before).epsilon(1e-15));
}

TEST_CASE("adam rejects mismatched gradient shapes") {
    ParamStore params(1);
    params.add("w", Tensor({2}, {1.0, 2.0}));
    GradMap grads;
    grads["w"] = Tensor::scalar(1.0);
    CHECK_THROWS_AS(adam_step(params, grads, AdamConfig{}, 1), ContractError);
}

TEST_CASE("same seed reproduces identical parameter values bit-for-bit") {
    auto build = [] {
        ParamStore params(77);
        Rng rng(params.seed());
        init_mlp_params(params, "f", MlpSpec{{6, 8, 4}, Activation::SiLU}, rng);
        init_mlp_params(params, "g", MlpSpec{{4, 4, 1}, Activation::SiLU}, rng, 0.01);
        return params;
    };
    ParamStore a = build();
    ParamStore b = build();
    CHECK(a == b);
}

TEST_CASE("parameter shapes are immutable after initialization") {
    ParamStore params(1);
    params.add("w", Tensor({2, 2}));
    CHECK_THROWS_AS(params.set("w", Tensor({2, 3})), ContractError);
    CHECK_THROWS_AS(params.add("w", Tensor({2, 2})), ContractError);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    testutil::TempDir dir("ckpt");
    ParamStore params(123456789ULL);
    Rng rng(4);
    init_mlp_params(params, "layer0.phi_e", MlpSpec{{9, 8, 4}, Activation::SiLU}, rng);
    init_mlp_params(params, "head", MlpSpec{{8, 4, 1}, Activation::SiLU}, rng);
    // Populate optimizer state too.
    GradMap grads;
    for (const auto& [name, t] : params.entries()) grads[name] = testutil::random_tensor(t.shape(), rng);
    adam_step(params, grads, AdamConfig{1e-3, 0.9, 0.999, 1e-8}, 1);
    params.set_adam_step_count(1);

    const std::string path = dir.str("model.ckpt");
    save_checkpoint(params, path);
    ParamStore loaded = load_checkpoint(path);
    CHECK(loaded == params);

    SUBCASE("saving the loaded store is byte-identical") {
        const std::string path2 = dir.str("model2.ckpt");
        save_checkpoint(loaded, path2);
        std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
        std::string c1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
        std::string c2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
        CHECK(c1 == c2);
        CHECK(!c1.empty());
    }
}

TEST_CASE("loading a non-checkpoint file fails cleanly") {
    testutil::TempDir dir("ckpt_bad");
    const std::string path = dir.str("junk.ckpt");
    {
        std::ofstream os(path);
        os << "not a checkpoint";
    }
    CHECK_THROWS_AS(load_checkpoint(path), TransferError);
    CHECK_THROWS_AS(load_checkpoint(dir.str("missing.ckpt")), IoError);
}

TEST_CASE("tape rejects non-finite values at the op that produced them") {
    Tape tape;
    NodeId big = tape.constant(Tensor::scalar(1e308));
    CHECK_THROWS_AS(tape.mul(big, big), NumericError);
}
