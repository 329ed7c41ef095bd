// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "gtpdm/errors.hpp"
#include "gtpdm/tensor/grad_check.hpp"
#include "gtpdm/tensor/ops.hpp"
#include "test_util.hpp"

using namespace gtpdm;
using gtpdm::test::random_tensor;

TEST_SUITE("tensor") {

TEST_CASE("tensor rejects a data/shape mismatch") {
    CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
    Tensor t(Shape{2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(shape_numel(t.shape()) == t.size());
}

TEST_CASE("matmul by hand") {
    Tape tape(false);
    Var a = tape.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
    Var b = tape.constant(Tensor::from_rows({{5}, {6}}));
    const Tensor c = ops::matmul(a, b).value();
    REQUIRE(c.shape() == Shape{2, 1});
    CHECK(c[0] == 17.0);
    CHECK(c[1] == 39.0);
}

TEST_CASE("matmul identity and mismatch") {
    Tape tape(false);
    Var i2 = tape.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
    Var m = tape.constant(Tensor::from_rows({{0.25, -3}, {7, 1e-3}}));
    CHECK(ops::matmul(i2, m).value() == m.value());
    Var bad = tape.constant(Tensor(Shape{2, 3}));
    try {
        ops::matmul(bad, bad);
        FAIL("expected a dimension error");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
    }
}

TEST_CASE("affine by hand") {
    Tape tape(false);
    Var x = tape.constant(Tensor::from_rows({{1, 1}}));
    Var w = tape.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
    Var b = tape.constant(Tensor(Shape{2}, std::vector<double>{2, 3}));
    const Tensor y = ops::affine(x, w, b).value();
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 4.0);

    Var zx = tape.constant(Tensor(Shape{3, 4}));
    Var zw = tape.constant(random_tensor({4, 5}, 3));
    Var zb = tape.constant(Tensor(Shape{5}));
    const Tensor z = ops::affine(zx, zw, zb).value();
    CHECK(z.shape() == Shape{3, 5});
    for (double v : z.values()) CHECK(v == 0.0);

    CHECK_THROWS_AS(ops::affine(tape.constant(Tensor(Shape{3, 3})), zw, zb), DimensionError);
}

TEST_CASE("affine bias gradient sums upstream over leading dims") {
    Tape tape(true);
    Var x = tape.constant(random_tensor({2, 3, 4}, 11));
    Var w = tape.variable(random_tensor({4, 2}, 12));
    Var b = tape.variable(Tensor(Shape{2}));
    Var y = ops::affine(x, w, b);
    Tensor g = random_tensor({2, 3, 2}, 13);
    Var loss = ops::sum(ops::mul(y, tape.constant(g)));
    tape.backward(loss);
    const Tensor* gb = tape.grad(b);
    REQUIRE(gb != nullptr);
    for (std::size_t c = 0; c < 2; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < 6; ++r) s += g[r * 2 + c];
        CHECK((*gb)[c] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("relu and softmax") {
    Tape tape(false);
    const Tensor r = ops::relu(tape.constant(Tensor(Shape{2}, std::vector<double>{-1, 2}))).value();
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 2.0);

    const Tensor s0 = ops::softmax(tape.constant(Tensor(Shape{2}, 0.0))).value();
    CHECK(s0[0] == 0.5);
    CHECK(s0[1] == 0.5);

    const Tensor s = ops::softmax(tape.constant(Tensor(Shape{3}, std::vector<double>{1, 2, 3}))).value();
    CHECK(std::abs(s[0] + s[1] + s[2] - 1.0) < 1e-12);

    // max-subtraction keeps huge logits finite
    const Tensor big = ops::softmax(tape.constant(Tensor(Shape{2}, std::vector<double>{1000, 1000}))).value();
    CHECK(big[0] == 0.5);
}

TEST_CASE("softmax rows lie in (0,1) and sum to one along any axis") {
    Tape tape(false);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Tensor x = random_tensor({3, 4, 5}, seed, -8.0, 8.0);
        for (std::size_t axis = 0; axis < 3; ++axis) {
            const Tensor s = ops::softmax(tape.constant(x), axis).value();
            const std::array<std::size_t, 3> dims{3, 4, 5};
            const std::array<std::size_t, 3> strides{20, 5, 1};
            for (std::size_t base = 0; base < s.size(); ++base) {
                if ((base / strides[axis]) % dims[axis] != 0) continue;
                double total = 0.0;
                for (std::size_t k = 0; k < dims[axis]; ++k) {
                    const double v = s[base + k * strides[axis]];
                    CHECK(v > 0.0);
                    CHECK(v < 1.0);
                    total += v;
                }
                CHECK(std::abs(total - 1.0) < 1e-12);
            }
        }
    }
}

TEST_CASE("batch norm normalizes by hand") {
    Tape tape(false);
    BatchNormState st(1);
    Var g = tape.constant(Tensor(Shape{1}, 1.0));
    Var b = tape.constant(Tensor(Shape{1}, 0.0));
    const Tensor y = ops::batch_norm(tape.constant(Tensor(Shape{2, 1}, std::vector<double>{1, 3})), 1, g, b, st, true)
                         .value();
    // mean 2, biased var 1
    const double scale = 1.0 / std::sqrt(1.0 + ops::kNormEps);
    CHECK(y[0] == doctest::Approx(-scale).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(scale).epsilon(1e-15));
    CHECK(std::abs(y[0] + 1.0) < 1e-5);
    CHECK(st.running_mean[0] == doctest::Approx(0.2));
    CHECK(st.running_var[0] == doctest::Approx(0.9 + 0.1 * 1.0));

    BatchNormState st2(1);
    const Tensor c = ops::batch_norm(tape.constant(Tensor(Shape{4, 1}, 7.0)), 1, g, b, st2, true).value();
    for (double v : c.values()) CHECK(v == 0.0);
}

TEST_CASE("batch norm eval with stored statistics reproduces training") {
    Tape tape(false);
    const Tensor x = random_tensor({6, 4, 3}, 5, -2.0, 3.0);
    Var g = tape.constant(random_tensor({3}, 6, 0.5, 1.5));
    Var b = tape.constant(random_tensor({3}, 7));
    BatchNormState st(3);
    const Tensor train = ops::batch_norm(tape.constant(x), 3, g, b, st, true).value();
    // momentum 1 stores exactly the batch statistics
    BatchNormState exact(3);
    ops::batch_norm(tape.constant(x), 3, g, b, exact, true, 1.0);
    const Tensor eval = ops::batch_norm(tape.constant(x), 3, g, b, exact, false).value();
    CHECK(gtpdm::test::max_abs_diff(train, eval) < 1e-12);
}

TEST_CASE("dropout p=0 and eval mode are the identity") {
    Tape tape(false);
    CounterRng rng(1);
    const Tensor x = random_tensor({7, 9}, 2);
    CHECK(ops::dropout(tape.constant(x), 0.0, rng, true).value() == x);
    CHECK(ops::dropout(tape.constant(x), 0.5, rng, false).value() == x);
    CHECK(ops::dropout(tape.constant(x), 0.9, rng, false).value() == x);
    CHECK_THROWS_AS(ops::dropout(tape.constant(x), 1.0, rng, true), ConfigError);
    CHECK_THROWS_AS(ops::dropout(tape.constant(x), -0.1, rng, true), ConfigError);
}

TEST_CASE("dropout preserves the expectation") {
    Tape tape(false);
    CounterRng rng(42);
    const std::size_t n = 100000;
    const Tensor y = ops::dropout(tape.constant(Tensor(Shape{n}, 1.0)), 0.1, rng, true).value();
    double mean = 0.0;
    std::size_t zeros = 0;
    for (double v : y.values()) {
        mean += v;
        zeros += v == 0.0;
        if (v != 0.0) CHECK(v == doctest::Approx(1.0 / 0.9));
    }
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean - 1.0) < 0.01);
    CHECK(std::abs(static_cast<double>(zeros) / n - 0.1) < 0.005);
}

TEST_CASE("cross entropy") {
    Tape tape(false);
    const std::array<int, 2> labels{0, 1};
    const double eq = ops::cross_entropy(tape.constant(Tensor(Shape{2, 2}, 0.3)), labels).value()[0];
    CHECK(eq == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const double strong =
        ops::cross_entropy(tape.constant(Tensor::from_rows({{50, -50}, {-50, 50}})), labels).value()[0];
    CHECK(strong < 1e-30);
    const std::array<int, 2> bad{0, 2};
    CHECK_THROWS_AS(ops::cross_entropy(tape.constant(Tensor(Shape{2, 2})), bad), ValidationError);
}

TEST_CASE("cross entropy gradient is (softmax - onehot) / B") {
    Parameter logits("logits", random_tensor({4, 2}, 31, -2.0, 2.0));
    const std::array<int, 4> labels{0, 1, 1, 0};
    Tape tape(true);
    tape.backward(ops::cross_entropy(tape.parameter(logits), labels));
    for (std::size_t i = 0; i < 4; ++i) {
        const double a = logits.value.at(i, 0), b = logits.value.at(i, 1);
        const double m = std::max(a, b);
        const double p0 = std::exp(a - m) / (std::exp(a - m) + std::exp(b - m));
        const double expect0 = (p0 - (labels[i] == 0 ? 1.0 : 0.0)) / 4.0;
        CHECK(logits.grad.at(i, 0) == doctest::Approx(expect0).epsilon(1e-12));
        CHECK(logits.grad.at(i, 0) + logits.grad.at(i, 1) == doctest::Approx(0.0).epsilon(1e-15));
    }
    const auto report = grad_check([&](Tape& t) { return ops::cross_entropy(t.parameter(logits), labels); },
                                   {&logits});
    CHECK(report.max_relative_error < 1e-6);
}

TEST_CASE("backward basics") {
    Parameter w("w", Tensor::scalar(3.0));
    {
        Tape tape(true);
        Var wv = tape.parameter(w);
        Var loss = ops::mul(wv, wv);
        tape.backward(loss);
        CHECK(w.grad[0] == 6.0);
        CHECK(tape.consumed());
        CHECK_THROWS_AS(tape.backward(loss), TapeError);
    }
    {
        Tape tape(true);
        Var x = tape.variable(Tensor(Shape{2}, 1.0));
        CHECK_THROWS_AS(tape.backward(x), TapeError);
    }
    {
        Tape tape(false);
        Var x = tape.parameter(w);
        CHECK_THROWS_AS(tape.backward(ops::sum(x)), TapeError);
        CHECK(tape.num_ops() == 0);
    }
}

TEST_CASE("forward ops reject non-finite results") {
    Tape tape(false);
    Var big = tape.constant(Tensor(Shape{1, 1}, 1e200));
    CHECK_THROWS_AS(ops::matmul(big, big), NumericError);
    CHECK_THROWS_AS(tape.constant(Tensor(Shape{2}, std::numeric_limits<double>::quiet_NaN())), NumericError);
    Parameter inf("inf", Tensor(Shape{1}, std::numeric_limits<double>::infinity()));
    CHECK_THROWS_AS(tape.parameter(inf), NumericError);
}

TEST_CASE("deterministic primitives are bitwise repeatable") {
    const Tensor a = random_tensor({5, 7}, 91), b = random_tensor({7, 3}, 92), c = random_tensor({3}, 93);
    auto run = [&] {
        Tape tape(false);
        Var y = ops::relu(ops::affine(ops::matmul(tape.constant(a), tape.constant(b)), tape.constant(random_tensor({3, 3}, 94)),
                                      tape.constant(c)));
        return y.value();
    };
    CHECK(run() == run());
}

TEST_CASE("layer norm output has zero mean and unit variance per position") {
    Tape tape(false);
    const Tensor x = random_tensor({6, 16}, 3, -5.0, 9.0);
    const Tensor y =
        ops::layer_norm(tape.constant(x), tape.constant(Tensor(Shape{16}, 1.0)), tape.constant(Tensor(Shape{16})))
            .value();
    for (std::size_t r = 0; r < 6; ++r) {
        double m = 0.0, v = 0.0;
        for (std::size_t c = 0; c < 16; ++c) m += y.at(r, c);
        m /= 16.0;
        for (std::size_t c = 0; c < 16; ++c) v += (y.at(r, c) - m) * (y.at(r, c) - m);
        v /= 16.0;
        CHECK(std::abs(m) < 1e-12);
        CHECK(std::abs(v - 1.0) < 1e-6);
    }
}

TEST_CASE("reshape, permute and concat move values") {
    Tape tape(false);
    const Tensor x = random_tensor({2, 3, 4}, 8);
    const std::array<std::size_t, 3> perm{2, 0, 1};
    const Tensor p = ops::permute(tape.constant(x), perm).value();
    REQUIRE(p.shape() == Shape{4, 2, 3});
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 4; ++k) CHECK(p[k * 6 + i * 3 + j] == x[i * 12 + j * 4 + k]);

    const std::array<Var, 2> parts{tape.constant(Tensor(Shape{2, 1}, 1.0)), tape.constant(Tensor(Shape{2, 2}, 2.0))};
    const Tensor c = ops::concat(parts).value();
    CHECK(c.shape() == Shape{2, 3});
    CHECK(c.values() == std::vector<double>{1, 2, 2, 1, 2, 2});
    CHECK_THROWS_AS(ops::reshape(tape.constant(x), Shape{5, 5}), DimensionError);
}

} // TEST_SUITE
