#include <doctest.h>

#include "carbideseg/image.hpp"
#include "test_helpers.hpp"

using namespace carbideseg;

TEST_CASE("8-bit png values map to the unit interval endpoints") {
    testutil::TempDir td("img8");
    BinaryMask m(4, 3);
    m.at(1, 2) = 1;  // stored as 255 in the 8-bit file
    save_mask_png(m, td.file("m.png"));

    Image2D img = load_image(td.file("m.png"));
    REQUIRE(img.width == 4);
    REQUIRE(img.height == 3);
    CHECK(img.at(1, 2) == 1.0f);   // pixel value 255
    CHECK(img.at(0, 0) == 0.0f);   // pixel value 0
}

TEST_CASE("16-bit png round-trips mid-scale values by direct division") {
    testutil::TempDir td("img16");
    Image2D img(5, 4);
    img.at(2, 3) = static_cast<float>(32768.0 / 65535.0);
    img.at(0, 1) = 0.25f;
    save_image_png(img, td.file("i.png"));

    Image2D back = load_image(td.file("i.png"));
    CHECK(back.at(2, 3) == doctest::Approx(32768.0 / 65535.0).epsilon(1e-6));
    CHECK(back.at(2, 3) == doctest::Approx(0.50001).epsilon(1e-4));
    CHECK(back.at(0, 1) == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("mask round-trip is exact") {
    testutil::TempDir td("mask");
    BinaryMask m(7, 5);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 7; ++c) m.at(r, c) = (r * 7 + c) % 3 == 0;
    save_mask_png(m, td.file("m.png"));
    BinaryMask back = load_mask(td.file("m.png"));
    CHECK(back.data == m.data);
}

TEST_CASE("loading a missing file throws") {
    CHECK_THROWS(load_image("/nonexistent/nope.png"));
}

TEST_CASE("crop_rows") {
    Image2D img(2048, 1404);
    SUBCASE("zero crop is the identity") {
        Image2D out = crop_rows(img, 0, 0);
        CHECK(out.width == 2048);
        CHECK(out.height == 1404);
        CHECK(out.data == img.data);
    }
    SUBCASE("bottom crop removes the info bar rows") {
        Image2D out = crop_rows(img, 0, 40);
        CHECK(out.width == 2048);
        CHECK(out.height == 1364);
    }
    SUBCASE("content is preserved row by row") {
        Image2D small(4, 6);
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 4; ++c) small.at(r, c) = static_cast<float>(r * 10 + c);
        Image2D out = crop_rows(small, 2, 1);
        REQUIRE(out.height == 3);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) CHECK(out.at(r, c) == small.at(r + 2, c));
    }
    SUBCASE("over-crop throws") {
        Image2D tiny(10, 10);
        CHECK_THROWS(crop_rows(tiny, 6, 6));
    }
}

TEST_CASE("merge_channels") {
    SUBCASE("ratio endpoints select a single channel") {
        ChannelPair pair;
        pair.se = Image2D(3, 3, 0.7f);
        pair.inlens = Image2D(3, 3, 0.2f);
        Image2D only_se = merge_channels(pair, 1.0);
        Image2D only_inlens = merge_channels(pair, 0.0);
        for (float v : only_se.data) CHECK(v == 0.7f);
        for (float v : only_inlens.data) CHECK(v == 0.2f);
    }
    SUBCASE("equal blend of constants") {
        ChannelPair pair;
        pair.se = Image2D(4, 4, 0.2f);
        pair.inlens = Image2D(4, 4, 0.6f);
        Image2D out = merge_channels(pair, 0.5);
        for (float v : out.data) CHECK(v == doctest::Approx(0.4).epsilon(1e-6));
    }
    SUBCASE("mismatched dimensions throw") {
        ChannelPair pair;
        pair.se = Image2D(3, 3);
        pair.inlens = Image2D(4, 3);
        CHECK_THROWS(merge_channels(pair, 0.5));
    }
    SUBCASE("invalid ratio throws") {
        ChannelPair pair;
        pair.se = Image2D(3, 3);
        pair.inlens = Image2D(3, 3);
        CHECK_THROWS(merge_channels(pair, 1.5));
    }
}
