#include <doctest.h>

#include "carbideseg/adam.hpp"

using namespace carbideseg::net;

TEST_CASE("first step with unit gradient moves by almost exactly -lr") {
    ParameterStore<double> ps;
    ps.add("x", 1, 1, 1, 1);
    ps.grad("x").data[0] = 1.0;
    Adam<double> opt;
    opt.step(ps, 0.1);
    // bias correction gives m_hat = v_hat = 1, so the update is lr/(1+eps)
    CHECK(ps.value("x").data[0] == doctest::Approx(-0.1).epsilon(1e-6));
    CHECK(opt.step_count() == 1);
}

TEST_CASE("hand-evaluated two-step trajectory") {
    ParameterStore<double> ps;
    ps.add("x", 1, 1, 1, 1);
    Adam<double> opt(0.9, 0.999, 1e-8);
    const double lr = 0.1;

    double m = 0.0, v = 0.0, x = 0.0;
    for (int t = 1; t <= 2; ++t) {
        const double g = t == 1 ? 1.0 : -2.0;
        ps.grad("x").data[0] = g;
        opt.step(ps, lr);

        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double m_hat = m / (1.0 - std::pow(0.9, t));
        const double v_hat = v / (1.0 - std::pow(0.999, t));
        x -= lr * m_hat / (std::sqrt(v_hat) + 1e-8);
        CHECK(ps.value("x").data[0] == doctest::Approx(x).epsilon(1e-12));
    }
}

TEST_CASE("zero gradient is a fixed point") {
    ParameterStore<float> ps;
    ps.add("w", 2, 1, 3, 3);
    for (std::size_t i = 0; i < ps.value("w").size(); ++i)
        ps.value("w").data[i] = static_cast<float>(i) * 0.1f;
    std::vector<float> before = ps.value("w").data;
    Adam<float> opt;
    ps.zero_grad();
    for (int t = 0; t < 5; ++t) opt.step(ps, 0.01f);
    CHECK(ps.value("w").data == before);
}

TEST_CASE("identical gradient sequences give bit-identical parameters") {
    auto run = [] {
        ParameterStore<float> ps;
        ps.add("w", 1, 1, 2, 2);
        Adam<float> opt;
        for (int t = 0; t < 10; ++t) {
            for (int i = 0; i < 4; ++i)
                ps.grad("w").data[i] = static_cast<float>((t + 1) * (i - 2)) * 0.3f;
            opt.step(ps, 0.05f);
        }
        return ps.value("w").data;
    };
    CHECK(run() == run());
}

TEST_CASE("non-trainable entries are never touched") {
    ParameterStore<float> ps;
    ps.add("w", 1, 1, 1, 1);
    ps.add("running", 1, 1, 1, 1, false);
    ps.value("running").data[0] = 7.0f;
    ps.grad("w").data[0] = 1.0f;
    Adam<float> opt;
    opt.step(ps, 0.1f);
    CHECK(ps.value("running").data[0] == 7.0f);
}

TEST_CASE("non-finite gradients are reported with tensor name and step") {
    ParameterStore<float> ps;
    ps.add("layer.weight", 1, 1, 1, 1);
    ps.grad("layer.weight").data[0] = std::numeric_limits<float>::quiet_NaN();
    Adam<float> opt;
    CHECK_THROWS_WITH_AS(opt.step(ps, 0.1f),
                         doctest::Contains("layer.weight"), std::runtime_error);
}
