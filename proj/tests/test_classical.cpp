#include <doctest.h>

#include <cmath>

#include "carbideseg/classical.hpp"
#include "carbideseg/evaluation.hpp"
#include "carbideseg/rng.hpp"
#include "carbideseg/synthdata.hpp"
#include "test_helpers.hpp"

using namespace carbideseg;

TEST_CASE("gaussian blur") {
    SUBCASE("constant image is unchanged") {
        Image2D img(16, 12, 0.37f);
        Image2D out = gaussian_blur(img, 1.0);
        for (float v : out.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-6));
    }
    SUBCASE("unit impulse center weight matches the normalized 2-D kernel") {
        Image2D img(15, 15);
        img.at(7, 7) = 1.0f;
        Image2D out = gaussian_blur(img, 1.0);

        // direct kernel evaluation: radius ceil(3*sigma)=3, 7x7 support
        double sum = 0.0;
        for (int i = -3; i <= 3; ++i) sum += std::exp(-0.5 * i * i);
        const double center1d = 1.0 / sum;
        CHECK(out.at(7, 7) == doctest::Approx(center1d * center1d).epsilon(1e-5));
        CHECK(out.at(7, 7) == doctest::Approx(0.1592).epsilon(1e-3));
    }
    SUBCASE("interior-supported impulse preserves total intensity") {
        Image2D img(32, 32);
        img.at(16, 16) = 1.0f;
        Image2D out = gaussian_blur(img, 1.0);
        double total = 0.0;
        for (float v : out.data) total += v;
        CHECK(std::abs(total - 1.0) < 1e-4);
    }
    SUBCASE("non-positive sigma throws") { CHECK_THROWS(gaussian_blur(Image2D(4, 4), 0.0)); }
}

TEST_CASE("morphology matches the brute-force oracle on random images") {
    Rng rng(101);
    for (int trial = 0; trial < 3; ++trial) {
        Image2D img(64, 48);
        for (auto& v : img.data) v = static_cast<float>(rng.uniform());
        for (int radius : {1, 3, 7}) {
            for (bool square : {false, true}) {
                CAPTURE(trial);
                CAPTURE(radius);
                CAPTURE(square);
                Image2D er = erode(img, radius, square);
                Image2D er_ref = testutil::brute_extremum(img, radius, square, true);
                CHECK(er.data == er_ref.data);

                Image2D di = dilate(img, radius, square);
                Image2D di_ref = testutil::brute_extremum(img, radius, square, false);
                CHECK(di.data == di_ref.data);

                Image2D op = opening(img, radius, square);
                Image2D op_ref = testutil::brute_opening(img, radius, square);
                CHECK(op.data == op_ref.data);
            }
        }
    }
}

TEST_CASE("opening properties") {
    Rng rng(77);
    Image2D img(40, 40);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());

    SUBCASE("anti-extensive: opening never exceeds the input") {
        Image2D op = opening(img, 5);
        for (std::size_t i = 0; i < img.size(); ++i) CHECK(op.data[i] <= img.data[i]);
    }
    SUBCASE("idempotent") {
        Image2D once = opening(img, 5);
        Image2D twice = opening(once, 5);
        for (std::size_t i = 0; i < img.size(); ++i)
            CHECK(twice.data[i] == doctest::Approx(once.data[i]).epsilon(1e-7));
    }
}

TEST_CASE("white top-hat") {
    SUBCASE("constant image maps to zero") {
        Image2D img(20, 20, 0.6f);
        Image2D th = white_tophat(img, 30);
        for (float v : th.data) CHECK(v == 0.0f);
    }
    SUBCASE("small bright square survives a large structuring element intact") {
        Image2D img(64, 64);
        for (int r = 30; r < 33; ++r)
            for (int c = 30; c < 33; ++c) img.at(r, c) = 1.0f;
        Image2D th = white_tophat(img, 30);
        // the opening removes the 3x3 square entirely, so the top-hat is the input
        CHECK(th.data == img.data);
        Image2D op_ref = testutil::brute_opening(img, 30, false);
        for (float v : op_ref.data) CHECK(v == 0.0f);
    }
    SUBCASE("smooth ramp suppressed, bumps retained") {
        Image2D img(64, 64);
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64; ++c) img.at(r, c) = 0.3f * c / 63.0f;
        Image2D ramp_th = white_tophat(img, 10);
        // replicate padding flattens the ramp at the right edge, so the
        // opening legitimately undershoots in the last `radius` columns
        for (int r = 0; r < 64; ++r)
            for (int c = 0; c < 64 - 10; ++c) CHECK(ramp_th.at(r, c) < 1e-6f);

        Image2D bumps = img;
        bumps.at(20, 20) += 0.3f;
        bumps.at(40, 45) += 0.3f;
        Image2D th = white_tophat(bumps, 10);
        CHECK(th.at(20, 20) > 0.25f);
        CHECK(th.at(40, 45) > 0.25f);
        Image2D th_ref(64, 64);
        Image2D op = testutil::brute_opening(bumps, 10, false);
        for (std::size_t i = 0; i < th_ref.size(); ++i)
            CHECK(th.data[i] == doctest::Approx(
                                    std::max(0.0f, bumps.data[i] - op.data[i]))
                                    .epsilon(1e-6));
    }
}

namespace {

// Literal search over the 255 possible bin boundaries.
double otsu_exhaustive(const Image2D& img) {
    constexpr int kBins = 256;
    std::vector<long long> hist(kBins, 0);
    for (float v : img.data) {
        int b = static_cast<int>(v * kBins);
        hist[std::clamp(b, 0, kBins - 1)]++;
    }
    const double total = static_cast<double>(img.size());
    double best_var = -1.0;
    int best_k = 0;
    for (int k = 0; k < kBins - 1; ++k) {
        double w0 = 0.0, s0 = 0.0, w1 = 0.0, s1 = 0.0;
        for (int b = 0; b <= k; ++b) {
            w0 += hist[b];
            s0 += static_cast<double>(b) * hist[b];
        }
        for (int b = k + 1; b < kBins; ++b) {
            w1 += hist[b];
            s1 += static_cast<double>(b) * hist[b];
        }
        if (w0 == 0.0 || w1 == 0.0) continue;
        double var = (w0 / total) * (w1 / total) * std::pow(s0 / w0 - s1 / w1, 2.0);
        if (var > best_var) {
            best_var = var;
            best_k = k;
        }
    }
    return static_cast<double>(best_k + 1) / kBins;
}

} // namespace

TEST_CASE("otsu threshold") {
    SUBCASE("two-valued image splits between the modes") {
        Image2D img(16, 16, 0.2f);
        for (int i = 0; i < 100; ++i) img.data[i] = 0.8f;
        double t = otsu_threshold(img);
        CHECK(t > 0.2);
        CHECK(t <= 0.8);
        CHECK(t == otsu_exhaustive(img));
    }
    SUBCASE("equal mass in bins 50 and 200 splits in between") {
        Image2D img(20, 20);
        for (std::size_t i = 0; i < img.size(); ++i)
            img.data[i] = (i % 2 == 0) ? 50.5f / 256.0f : 200.5f / 256.0f;
        double t = otsu_threshold(img);
        // every split between the two spikes ties; ties break low, so the
        // threshold is the upper edge of bin 50
        CHECK(t == doctest::Approx(51.0 / 256.0).epsilon(1e-12));
        CHECK(t <= 200.0 / 256.0);
        CHECK(t == otsu_exhaustive(img));
    }
    SUBCASE("constant image throws") { CHECK_THROWS(otsu_threshold(Image2D(8, 8, 0.5f))); }
    SUBCASE("matches exhaustive search on random histograms") {
        Rng rng(55);
        for (int trial = 0; trial < 50; ++trial) {
            Image2D img(32, 32);
            // mixture of two gaussians in intensity, plus uniform outliers
            double m0 = rng.uniform(0.1, 0.4), m1 = rng.uniform(0.5, 0.9);
            for (auto& v : img.data) {
                double x = rng.bernoulli(0.2) ? rng.uniform()
                           : rng.bernoulli(0.5) ? rng.normal(m0, 0.05)
                                                : rng.normal(m1, 0.08);
                v = static_cast<float>(std::clamp(x, 0.0, 0.999));
            }
            CAPTURE(trial);
            CHECK(otsu_threshold(img) == otsu_exhaustive(img));
        }
    }
}

TEST_CASE("threshold_above uses the inclusive rule") {
    Image2D img(2, 2);
    img.data = {0.1f, 0.5f, 0.5001f, 0.9f};
    BinaryMask m = threshold_above(img, 0.5);
    CHECK(m.data == std::vector<std::uint8_t>{0, 1, 1, 1});
}

TEST_CASE("fill_holes") {
    SUBCASE("solid ring becomes a solid disk") {
        BinaryMask ring(11, 11);
        for (int r = 0; r < 11; ++r)
            for (int c = 0; c < 11; ++c) {
                double d = std::hypot(r - 5.0, c - 5.0);
                ring.at(r, c) = (d >= 2.0 && d <= 4.5) ? 1 : 0;
            }
        BinaryMask filled = fill_holes(ring);
        BinaryMask disk(11, 11);
        for (int r = 0; r < 11; ++r)
            for (int c = 0; c < 11; ++c)
                disk.at(r, c) = std::hypot(r - 5.0, c - 5.0) <= 4.5 ? 1 : 0;
        CHECK(filled.data == disk.data);
    }
    SUBCASE("empty mask is unchanged") {
        BinaryMask m(9, 9);
        CHECK(fill_holes(m).data == m.data);
    }
    SUBCASE("U-shape open to the border stays open") {
        BinaryMask u(7, 7);
        for (int r = 1; r < 6; ++r) {
            u.at(r, 1) = 1;
            u.at(r, 5) = 1;
        }
        for (int c = 1; c < 6; ++c) u.at(5, c) = 1;
        // interior of the U reaches row 0, so it is not a hole
        CHECK(fill_holes(u).data == u.data);
    }
    SUBCASE("matches a flood-fill oracle on random masks") {
        Rng rng(31);
        for (int trial = 0; trial < 10; ++trial) {
            BinaryMask m(24, 24);
            for (auto& v : m.data) v = rng.bernoulli(0.45);
            BinaryMask got = fill_holes(m);

            // oracle: a background pixel is a hole iff its 4-connected
            // background component contains no border pixel
            LabelMap inv;
            BinaryMask bg(24, 24);
            for (std::size_t i = 0; i < m.size(); ++i) bg.data[i] = !m.data[i];
            inv = label_components(bg, 4);
            std::vector<char> touches_border(inv.num_components + 1, 0);
            for (int r = 0; r < 24; ++r)
                for (int c = 0; c < 24; ++c)
                    if ((r == 0 || r == 23 || c == 0 || c == 23) && inv.at(r, c))
                        touches_border[inv.at(r, c)] = 1;
            for (int r = 0; r < 24; ++r)
                for (int c = 0; c < 24; ++c) {
                    bool want = m.at(r, c) || !touches_border[inv.at(r, c)];
                    CHECK(got.at(r, c) == static_cast<std::uint8_t>(want));
                }
        }
    }
}

TEST_CASE("connected components and small-component removal") {
    SUBCASE("diagonal pixels: one component at 8-connectivity, two at 4") {
        BinaryMask m(4, 4);
        m.at(1, 1) = 1;
        m.at(2, 2) = 1;
        CHECK(label_components(m, 8).num_components == 1);
        CHECK(label_components(m, 4).num_components == 2);
    }
    SUBCASE("2-pixel component removed at min_size 3") {
        BinaryMask m(6, 6);
        m.at(2, 2) = 1;
        m.at(2, 3) = 1;
        CHECK(remove_small(m, 3).foreground_count() == 0);
    }
    SUBCASE("3-pixel component survives at min_size 3") {
        BinaryMask m(6, 6);
        m.at(2, 2) = m.at(2, 3) = m.at(2, 4) = 1;
        CHECK(remove_small(m, 3).data == m.data);
    }
    SUBCASE("mixed sizes keep only the large component") {
        BinaryMask m(20, 20);
        m.at(1, 1) = m.at(1, 2) = 1;  // 2 px
        int big = 0;
        for (int r = 8; r < 18 && big < 50; ++r)
            for (int c = 8; c < 13 && big < 50; ++c, ++big) m.at(r, c) = 1;
        BinaryMask out = remove_small(m, 3);
        CHECK(out.foreground_count() == 50);
        CHECK(out.at(1, 1) == 0);
        CHECK(out.at(8, 8) == 1);
    }
    SUBCASE("labels are dense and areas sum to the foreground") {
        Rng rng(13);
        BinaryMask m(30, 30);
        for (auto& v : m.data) v = rng.bernoulli(0.3);
        LabelMap lm = label_components(m, 8);
        std::vector<long long> area(lm.num_components + 1, 0);
        for (auto l : lm.data) {
            REQUIRE(l >= 0);
            REQUIRE(l <= lm.num_components);
            area[l]++;
        }
        long long fg = 0;
        for (int l = 1; l <= lm.num_components; ++l) {
            CHECK(area[l] > 0);
            fg += area[l];
        }
        CHECK(fg == static_cast<long long>(m.foreground_count()));
    }
}

TEST_CASE("baseline pipeline") {
    SUBCASE("bright ellipse scene segments with high dice") {
        SceneConfig cfg;
        cfg.width = 512;
        cfg.height = 512;
        cfg.seed = 2024;
        Scene scene = generate_scene(cfg);
        BinaryMask pred = baseline_segment(scene.channels);
        double d = dice_coefficient(confusion(pred, scene.mask));
        CHECK(d >= 0.90);
    }
    SUBCASE("carbide-free pure-noise scene stays almost empty") {
        // Featureless matrix: no particles, no texture, a faint gradient and
        // faint noise. The top-hat response stays below the first histogram
        // bin almost everywhere, so Otsu keeps only stray outlier pixels and
        // the min-size rule erases those. With visible background texture the
        // thresholding stage segments the texture instead, by design.
        SceneConfig cfg;
        cfg.width = 256;
        cfg.height = 256;
        cfg.count_lo = cfg.count_hi = 0;
        cfg.texture_amplitude = 0.0;
        cfg.gradient_amplitude = 0.02;
        cfg.noise_sigma = 0.002;
        cfg.blur_sigma = 1.2;
        cfg.seed = 5;
        Scene scene = generate_scene(cfg);
        BinaryMask pred = baseline_segment(scene.channels);
        double frac = static_cast<double>(pred.foreground_count()) / pred.size();
        CHECK(frac < 0.01);
    }
    SUBCASE("a 2-pixel speck never reaches the output") {
        ChannelPair pair;
        pair.se = Image2D(64, 64, 0.0f);
        pair.inlens = Image2D(64, 64, 0.0f);
        pair.se.at(30, 30) = pair.se.at(30, 31) = 1.0f;
        pair.inlens.at(30, 30) = pair.inlens.at(30, 31) = 1.0f;
        BaselineConfig cfg;
        cfg.denoise_sigma = 0.3;  // keep the speck compact through the blur
        BinaryMask out = baseline_segment(pair, cfg);
        CHECK(out.foreground_count() == 0);
    }
    SUBCASE("invalid config is rejected") {
        ChannelPair pair;
        pair.se = Image2D(64, 64, 0.1f);
        pair.inlens = Image2D(64, 64, 0.9f);
        BaselineConfig cfg;
        cfg.connectivity = 5;
        CHECK_THROWS(baseline_segment(pair, cfg));
    }
}
