#include "doctest.h"

#include <cstring>
#include <vector>

#include "trajattr/kernels.hpp"
#include "trajattr/rng.hpp"

using namespace trajattr;

namespace {

std::vector<double> rand_vec(rng::Engine& eng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng::uniform01(eng);
    return v;
}

bool bits_equal(double a, double b) {
    std::uint64_t ua, ub;
    std::memcpy(&ua, &a, 8);
    std::memcpy(&ub, &b, 8);
    return ua == ub;
}

}  // namespace

TEST_CASE("scalar kernel reference values") {
    const double a[] = {1.0, 2.0, 3.0, 4.0, 5.0};
    const double b[] = {2.0, -1.0, 0.5, 3.0, -2.0};
    kern::force_backend(kern::Backend::scalar);
    CHECK(kern::dot(a, b, 5) == doctest::Approx(1.0 * 2 - 2 + 1.5 + 12 - 10));
    CHECK(kern::sum(a, 5) == doctest::Approx(15.0));
    // sq_dist: 1 + 9 + 6.25 + 1 + 49
    CHECK(kern::sq_dist(a, b, 5) == doctest::Approx(66.25));
    double y[] = {1.0, 1.0, 1.0, 1.0, 1.0};
    kern::axpy(2.0, a, y, 5);
    CHECK(y[4] == doctest::Approx(11.0));
    kern::scale(y, 5, 0.5);
    CHECK(y[0] == doctest::Approx(1.5));
}

TEST_CASE("matvec against hand-rolled loop") {
    kern::force_backend(kern::Backend::scalar);
    rng::Engine eng = rng::make_engine(7, "kernel-test", 0);
    const std::size_t rows = 5, cols = 13;
    auto w = rand_vec(eng, rows * cols, -1, 1);
    auto x = rand_vec(eng, cols, -1, 1);
    std::vector<double> y(rows);
    kern::matvec(w.data(), rows, cols, x.data(), y.data());
    for (std::size_t r = 0; r < rows; ++r) {
        double want = 0.0;
        for (std::size_t c = 0; c < cols; ++c) want += w[r * cols + c] * x[c];
        CHECK(y[r] == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("matvec_t_acc and outer_acc agree with naive loops") {
    kern::force_backend(kern::Backend::scalar);
    rng::Engine eng = rng::make_engine(11, "kernel-test", 1);
    const std::size_t rows = 6, cols = 9;
    auto w = rand_vec(eng, rows * cols, -1, 1);
    auto z = rand_vec(eng, rows, -1, 1);
    std::vector<double> y(cols, 0.25), want_y(cols, 0.25);
    kern::matvec_t_acc(w.data(), rows, cols, z.data(), y.data());
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows; ++r) want_y[c] += w[r * cols + c] * z[r];
    for (std::size_t c = 0; c < cols; ++c) CHECK(y[c] == doctest::Approx(want_y[c]).epsilon(1e-12));

    auto u = rand_vec(eng, rows, -1, 1);
    auto v = rand_vec(eng, cols, -1, 1);
    std::vector<double> acc(rows * cols, 0.0), want_acc(rows * cols, 0.0);
    kern::outer_acc(acc.data(), rows, cols, 0.3, u.data(), v.data());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) want_acc[r * cols + c] += 0.3 * u[r] * v[c];
    for (std::size_t i = 0; i < acc.size(); ++i)
        CHECK(acc[i] == doctest::Approx(want_acc[i]).epsilon(1e-12));
}

TEST_CASE("scalar and avx2 backends are bitwise identical") {
    if (!kern::avx2_supported()) {
        MESSAGE("avx2 not available on this host, dispatch test skipped");
        return;
    }
    rng::Engine eng = rng::make_engine(42, "kernel-equiv", 0);
    for (std::size_t n = 0; n <= 67; ++n) {
        auto a = rand_vec(eng, n, -3, 3);
        auto b = rand_vec(eng, n, -3, 3);

        REQUIRE(kern::force_backend(kern::Backend::scalar));
        const double d_s = kern::dot(a.data(), b.data(), n);
        const double s_s = kern::sum(a.data(), n);
        const double q_s = kern::sq_dist(a.data(), b.data(), n);
        auto y_s = b;
        kern::axpy(1.7, a.data(), y_s.data(), n);
        auto x_s = a;
        kern::scale(x_s.data(), n, -0.37);

        REQUIRE(kern::force_backend(kern::Backend::avx2));
        const double d_v = kern::dot(a.data(), b.data(), n);
        const double s_v = kern::sum(a.data(), n);
        const double q_v = kern::sq_dist(a.data(), b.data(), n);
        auto y_v = b;
        kern::axpy(1.7, a.data(), y_v.data(), n);
        auto x_v = a;
        kern::scale(x_v.data(), n, -0.37);

        CHECK(bits_equal(d_s, d_v));
        CHECK(bits_equal(s_s, s_v));
        CHECK(bits_equal(q_s, q_v));
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(bits_equal(y_s[i], y_v[i]));
            CHECK(bits_equal(x_s[i], x_v[i]));
        }
    }
    kern::force_backend(kern::Backend::scalar);
}

TEST_CASE("backend forcing reports availability") {
    CHECK(kern::force_backend(kern::Backend::scalar));
    if (!kern::avx2_supported()) CHECK_FALSE(kern::force_backend(kern::Backend::avx2));
    kern::force_backend(kern::Backend::scalar);
}
