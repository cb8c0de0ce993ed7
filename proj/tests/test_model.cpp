#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "curv/model.hpp"
#include "curv/rng.hpp"
#include "oracles.hpp"

using namespace curv;

TEST_CASE("param_count single dense layer 64x32") {
    ModelSpec spec;
    spec.layer_widths = {64, 32};
    CHECK(param_count(spec) == 2080);
}

TEST_CASE("param_count always includes the bias") {
    ModelSpec spec = oracle::linear_diag_spec();
    CHECK(param_count(spec) == 5);
}

TEST_CASE("param_count two hidden shapes") {
    ModelSpec spec;
    spec.layer_widths = {3, 5, 2};
    CHECK(param_count(spec) == 32);
}

TEST_CASE("flatten canonical order") {
    const DenseMatrix w(2, 2, {1, 2, 3, 4});
    const DenseVector b({5, 6});
    const ParamVector flat = flatten_params({w}, {b});
    REQUIRE(flat.p() == 6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(flat.data[i] == static_cast<double>(i + 1));
}

TEST_CASE("flatten 1x1") {
    const ParamVector flat = flatten_params({DenseMatrix(1, 1, {7.0})}, {DenseVector({8.0})});
    CHECK(flat.data[0] == 7.0);
    CHECK(flat.data[1] == 8.0);
}

TEST_CASE("flatten two-layer block offsets") {
    Rng rng(11);
    const DenseMatrix w1 = oracle::random_matrix(rng, 5, 3);
    const DenseVector b1 = oracle::random_vector(rng, 5);
    const DenseMatrix w2 = oracle::random_matrix(rng, 2, 5);
    const DenseVector b2 = oracle::random_vector(rng, 2);
    const ParamVector flat = flatten_params({w1, w2}, {b1, b2});
    REQUIRE(flat.p() == 32);
    ModelSpec spec;
    spec.layer_widths = {3, 5, 2};
    CHECK(weight_block_offset(spec, 1) == 20);
    CHECK(bias_block_offset(spec, 1) == 30);
    for (std::size_t i = 0; i < 10; ++i) CHECK(flat.data[20 + i] == w2.data()[i]);
}

TEST_CASE("flatten rejects inconsistent shapes") {
    CHECK_THROWS_AS(flatten_params({DenseMatrix(2, 2)}, {DenseVector(3)}), ShapeError);
    CHECK_THROWS_AS(flatten_params({DenseMatrix(2, 2), DenseMatrix(2, 3)},
                                   {DenseVector(2), DenseVector(2)}),
                    ShapeError);
}

TEST_CASE("unflatten inverts flatten bit-exactly") {
    Rng rng(12);
    ModelSpec spec;
    spec.layer_widths = {4, 6, 3};
    const ParamVector params = oracle::random_params(spec, rng);
    const LayerParams lp = unflatten_params(spec, params);
    const ParamVector round = flatten_params(lp.weights, lp.biases);
    REQUIRE(round.p() == params.p());
    for (std::size_t i = 0; i < params.p(); ++i) CHECK(round.data[i] == params.data[i]);
}

TEST_CASE("unflatten hand-checked 2x2") {
    ModelSpec spec;
    spec.layer_widths = {2, 2};
    const LayerParams lp = unflatten_params(spec, ParamVector{DenseVector({1, 2, 3, 4, 5, 6})});
    CHECK(lp.weights[0](0, 0) == 1.0);
    CHECK(lp.weights[0](0, 1) == 2.0);
    CHECK(lp.weights[0](1, 0) == 3.0);
    CHECK(lp.weights[0](1, 1) == 4.0);
    CHECK(lp.biases[0][0] == 5.0);
    CHECK(lp.biases[0][1] == 6.0);
}

TEST_CASE("unflatten zero vector") {
    ModelSpec spec;
    spec.layer_widths = {3, 2};
    const LayerParams lp = unflatten_params(spec, ParamVector{DenseVector(8, 0.0)});
    for (std::size_t i = 0; i < 6; ++i) CHECK(lp.weights[0].data()[i] == 0.0);
    CHECK(lp.biases[0][0] == 0.0);
}

TEST_CASE("unflatten length mismatch") {
    ModelSpec spec;
    spec.layer_widths = {3, 2};
    CHECK_THROWS_AS(unflatten_params(spec, ParamVector{DenseVector(7)}), ShapeError);
}

TEST_CASE("flatten/unflatten inverse over random shapes") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        ModelSpec spec;
        const std::size_t layers = 2 + rng.next_u64() % 3;
        for (std::size_t l = 0; l < layers; ++l)
            spec.layer_widths.push_back(1 + rng.next_u64() % 6);
        const ParamVector params = oracle::random_params(spec, rng);
        const LayerParams lp = unflatten_params(spec, params);
        const ParamVector round = flatten_params(lp.weights, lp.biases);
        bool same = round.p() == params.p();
        for (std::size_t i = 0; same && i < params.p(); ++i)
            same = round.data[i] == params.data[i];
        CHECK(same);
    }
}

TEST_CASE("softmax of zeros is uniform") {
    const DenseVector p = softmax(DenseVector(3, 0.0));
    for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("softmax shift invariance and ratio") {
    const double c = 123.456;
    const DenseVector p = softmax(DenseVector({c, c + std::log(2.0)}));
    CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax survives huge logits") {
    const DenseVector p = softmax(DenseVector({1000.0, 0.0}));
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(0.0));
    CHECK(std::isfinite(p[0]));
}

TEST_CASE("softmax sums to one and ignores constant shifts") {
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        DenseVector z = oracle::random_vector(rng, 5);
        const DenseVector p = softmax(z);
        double sum = 0.0;
        for (std::size_t i = 0; i < 5; ++i) sum += p[i];
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        const double shift = rng.next_normal() * 10.0;
        DenseVector zs = z;
        for (std::size_t i = 0; i < 5; ++i) zs[i] += shift;
        const DenseVector ps = softmax(zs);
        for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(p[i] - ps[i]) <= 1e-12);
    }
}

TEST_CASE("forward reproduces the linear diagnostic outputs") {
    const ModelSpec spec = oracle::linear_diag_spec();
    const ParamVector params = oracle::linear_diag_params();
    CHECK(forward(spec, params, DenseVector({1, 2, 3, 4}))[0] == 34.0);
    CHECK(forward(spec, params, DenseVector({2, 3, 4, 5}))[0] == 48.0);
}

TEST_CASE("forward softmax of all-zero parameters is uniform") {
    ModelSpec spec;
    spec.layer_widths = {3, 4};
    const ParamVector params{DenseVector(param_count(spec), 0.0)};
    const DenseVector out = forward(spec, params, DenseVector({1.0, -2.0, 0.5}));
    for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(0.25));
}

TEST_CASE("forward shape mismatch") {
    const ModelSpec spec = oracle::linear_diag_spec();
    CHECK_THROWS_AS(forward(spec, oracle::linear_diag_params(), DenseVector(3)), ShapeError);
}

TEST_CASE("cost of uniform prediction is ln(num classes)") {
    ModelSpec spec;
    spec.layer_widths = {4, 10};
    const ParamVector params{DenseVector(param_count(spec), 0.0)};
    Rng rng(15);
    const Batch batch = oracle::random_batch(spec, rng, 6);
    CHECK(cost(spec, params, batch) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("cost of the linear diagnostic model averages the outputs") {
    CHECK(cost(oracle::linear_diag_spec(), oracle::linear_diag_params(),
               oracle::linear_diag_batch()) == 41.0);
}

TEST_CASE("fused cost matches the unfused reference") {
    Rng rng(16);
    ModelSpec spec;
    spec.layer_widths = {3, 5, 2};
    const ParamVector params = oracle::random_params(spec, rng);
    const Batch batch = oracle::random_batch(spec, rng, 4);
    CHECK(std::abs(cost(spec, params, batch) - oracle::cost_unfused(spec, params, batch)) <=
          1e-10);
}

TEST_CASE("cost is nonnegative in softmax mode") {
    Rng rng(17);
    ModelSpec spec;
    spec.layer_widths = {4, 3};
    for (int trial = 0; trial < 10; ++trial) {
        const ParamVector params = oracle::random_params(spec, rng, 2.0);
        const Batch batch = oracle::random_batch(spec, rng, 3);
        CHECK(cost(spec, params, batch) >= 0.0);
    }
}

TEST_CASE("cost rejects non-one-hot targets") {
    ModelSpec spec;
    spec.layer_widths = {2, 2};
    const ParamVector params{DenseVector(param_count(spec), 0.0)};
    Batch batch{DenseMatrix(1, 2, {1.0, 2.0}), DenseMatrix(1, 2, {0.5, 0.5})};
    CHECK_THROWS_AS(cost(spec, params, batch), ContractError);
}

TEST_CASE("raw_mean_output requires scalar output") {
    ModelSpec spec;
    spec.layer_widths = {3, 2};
    spec.output_mode = OutputMode::raw_mean_output;
    CHECK_THROWS_AS(spec.validate(), ContractError);
}
