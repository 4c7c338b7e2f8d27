#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kooptx/errors.hpp"
#include "kooptx/rng.hpp"
#include "kooptx/signal.hpp"
#include "kooptx/synth.hpp"
#include "kooptx/wavelet.hpp"

using namespace kooptx;

namespace {

std::vector<double> random_window(Rng& rng, size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

double linf(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double energy(const std::vector<double>& v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return e;
}

}  // namespace

TEST_CASE("haar one level on a constant block matches the hand computation") {
    const auto d = dwt({1.0, 1.0, 1.0, 1.0}, {WaveletFamily::Haar, 1});
    REQUIRE(d.approx.size() == 2);
    REQUIRE(d.details.size() == 1);
    REQUIRE(d.details[0].size() == 2);
    const double r2 = std::sqrt(2.0);
    CHECK(d.approx[0] == doctest::Approx(r2).epsilon(1e-15));
    CHECK(d.approx[1] == doctest::Approx(r2).epsilon(1e-15));
    CHECK(std::fabs(d.details[0][0]) < 1e-15);
    CHECK(std::fabs(d.details[0][1]) < 1e-15);
}

TEST_CASE("one level halves the length for both families") {
    Rng rng(3);
    const auto w = random_window(rng, 64);
    for (auto fam : {WaveletFamily::Haar, WaveletFamily::DB4}) {
        const auto d = dwt(w, {fam, 1});
        CHECK(d.approx.size() == 32);
        CHECK(d.details[0].size() == 32);
    }
}

TEST_CASE("db4 annihilates cubics away from the periodic wrap") {
    // Interior detail coefficients (filter support not crossing the boundary)
    // must vanish for polynomials of degree <= 3; wrapped taps see the jump
    // between x[N-1] and x[0] and are legitimately large.
    const size_t N = 128;
    std::vector<double> x(N);
    for (size_t t = 0; t < N; ++t) {
        const double u = static_cast<double>(t) / static_cast<double>(N);
        x[t] = 0.3 - 1.7 * u + 0.9 * u * u + 2.1 * u * u * u;
    }
    const auto d = dwt(x, {WaveletFamily::DB4, 1});
    const auto& fine = d.details[0];
    size_t checked = 0;
    for (size_t i = 0; i < fine.size(); ++i) {
        if (2 * i + 7 >= N) continue;  // wraps
        CHECK(std::fabs(fine[i]) < 1e-10);
        ++checked;
    }
    CHECK(checked >= 55);
}

TEST_CASE("perfect reconstruction over random windows, families, and depths") {
    Rng rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        const size_t n = 32ull << rng.below(3);  // 32, 64, 128
        const auto w = random_window(rng, n);
        for (auto fam : {WaveletFamily::Haar, WaveletFamily::DB4}) {
            const int max_levels = static_cast<int>(std::floor(
                std::log2(static_cast<double>(n) / (wavelet_filter_length(fam) - 1))));
            const int levels = 1 + static_cast<int>(rng.below(max_levels));
            const WaveletSpec spec{fam, levels};
            const auto dec = dwt(w, spec);
            CHECK(linf(idwt(dec, spec), w) < 1e-10);
        }
    }
}

TEST_CASE("coefficient energy equals signal energy (orthogonality)") {
    Rng rng(13);
    for (int rep = 0; rep < 100; ++rep) {
        const auto w = random_window(rng, 64);
        for (auto fam : {WaveletFamily::Haar, WaveletFamily::DB4}) {
            const auto dec = dwt(w, {fam, 3});
            double ce = energy(dec.approx);
            for (const auto& d : dec.details) ce += energy(d);
            const double se = energy(w);
            CHECK(std::fabs(ce - se) <= 1e-9 * se);
        }
    }
}

TEST_CASE("zero decomposition reconstructs to the zero signal") {
    WaveletDecomposition dec;
    dec.approx.assign(8, 0.0);
    dec.details = {std::vector<double>(8, 0.0), std::vector<double>(16, 0.0),
                   std::vector<double>(32, 0.0)};
    const auto x = idwt(dec, {WaveletFamily::DB4, 3});
    REQUIRE(x.size() == 64);
    for (double v : x) CHECK(v == 0.0);
}

TEST_CASE("a generated normal-rhythm window round-trips exactly") {
    const auto sig = zscore(synth_ecg(SynthClass::Normal, 10.0, 125.0, 42));
    const auto win = segment(sig, 2.0, 1.0).windows[0];
    const std::vector<double> w240(win.begin(), win.begin() + 240);
    const WaveletSpec spec{WaveletFamily::DB4, 4};
    CHECK(linf(idwt(dwt(w240, spec), spec), w240) < 1e-10);
}

TEST_CASE("feature vector layout and the zero/scaling examples") {
    Rng rng(17);
    const auto w = random_window(rng, 64);
    const auto f1 = wavelet_features(dwt(w, {WaveletFamily::DB4, 3}));
    CHECK(f1.size() == 16);  // 4 * (levels + 1)

    // All-zero window: log-energy hits the 1e-12 floor, the rest is 0.
    const auto fz = wavelet_features(dwt(std::vector<double>(64, 0.0),
                                         {WaveletFamily::DB4, 3}));
    for (size_t b = 0; b < 4; ++b) {
        CHECK(fz[4 * b + 0] == doctest::Approx(std::log(1e-12)).epsilon(1e-12));
        CHECK(fz[4 * b + 1] == 0.0);
        CHECK(fz[4 * b + 2] == 0.0);
        CHECK(fz[4 * b + 3] == 0.0);
    }

    // Doubling the window doubles mean/std/max and shifts log-energy by log 4.
    auto w2 = w;
    for (auto& x : w2) x *= 2.0;
    const auto f2 = wavelet_features(dwt(w2, {WaveletFamily::DB4, 3}));
    for (size_t b = 0; b < 4; ++b) {
        CHECK(f2[4 * b + 0] == doctest::Approx(f1[4 * b + 0] + std::log(4.0)).epsilon(1e-10));
        for (size_t s = 1; s < 4; ++s)
            CHECK(f2[4 * b + s] == doctest::Approx(2.0 * f1[4 * b + s]).epsilon(1e-10));
    }
}

TEST_CASE("window feature helper truncates 250 samples to 240") {
    const auto sig = zscore(synth_ecg(SynthClass::AFib, 10.0, 125.0, 7));
    const auto win = segment(sig, 2.0, 1.0).windows[3];
    REQUIRE(win.size() == 250);
    const WaveletSpec spec{WaveletFamily::DB4, 4};
    const auto got = wavelet_window_features(win, spec);
    const std::vector<double> w240(win.begin(), win.begin() + 240);
    CHECK(got == wavelet_features(dwt(w240, spec)));
    CHECK(got.size() == 20);
}

TEST_CASE("invalid requests are rejected") {
    std::vector<double> w(64, 1.0);
    CHECK_THROWS_AS(dwt(w, {WaveletFamily::DB4, 0}), ConfigError);
    CHECK_THROWS_AS(dwt(w, {WaveletFamily::DB4, 4}), ConfigError);  // 64/7 -> 3 max
    CHECK_THROWS_AS(dwt(std::vector<double>(4, 1.0), {WaveletFamily::DB4, 1}), DataError);
    CHECK_THROWS_AS(dwt(std::vector<double>(66, 1.0), {WaveletFamily::Haar, 2}),
                    DataError);  // 66 not a multiple of 4

    auto dec = dwt(w, {WaveletFamily::DB4, 2});
    CHECK_THROWS_AS(idwt(dec, WaveletSpec{WaveletFamily::DB4, 3}), DataError);
    dec.details[1].pop_back();
    CHECK_THROWS_AS(idwt(dec, WaveletSpec{WaveletFamily::DB4, 2}), DataError);
}
