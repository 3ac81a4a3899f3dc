#include <gtest/gtest.h>

#include <random>

#include "gelvec/image.hpp"
#include "gelvec/pgm.hpp"
#include "oracles.hpp"

using namespace gelvec;

TEST(Pgm, LoadsPlainGraymap) {
  const GelImage img = load_pgm("P2 2 2 255 0 100 100 200", false);
  EXPECT_EQ(img.width(), 2);
  EXPECT_EQ(img.height(), 2);
  EXPECT_EQ(img.max_density(), 255);
  EXPECT_EQ(std::vector<Density>(img.data().begin(), img.data().end()), (std::vector<Density>{0, 100, 100, 200}));
}

TEST(Pgm, RawAndPlainEncodingsAgree) {
  const GelImage plain = load_pgm("P2 2 2 255 0 100 100 200", false);
  const GelImage raw = load_pgm(oracle::pgm_p5(2, 2, 255, {0, 100, 100, 200}), false);
  EXPECT_EQ(plain, raw);
  const GelImage wide = load_pgm(oracle::pgm_p5(3, 1, 65535, {0, 300, 65535}), false);
  EXPECT_EQ(wide(1, 0), 300);
  EXPECT_EQ(wide(2, 0), 65535);
}

TEST(Pgm, DarkIsStainInverts) {
  const GelImage img = load_pgm("P2 2 2 255 0 100 100 200", true);
  EXPECT_EQ(img(0, 0), 255);
  EXPECT_EQ(img(1, 1), 55);
}

TEST(Pgm, CommentsInHeaderAreSkipped) {
  const GelImage img = load_pgm("P2\n# scanner A\n2 1 # size\n15\n3 4\n", false);
  EXPECT_EQ(img.max_density(), 15);
  EXPECT_EQ(img(1, 0), 4);
}

TEST(Pgm, RejectsMalformedInput) {
  EXPECT_THROW(load_pgm("P9 1 1 255 0", false), FormatError);
  EXPECT_THROW(load_pgm("P2 2 2 255 0 1 2", false), FormatError);      // truncated
  EXPECT_THROW(load_pgm("P2 1 1 255 0 1", false), FormatError);        // excess samples
  EXPECT_THROW(load_pgm("P2 0 1 255", false), FormatError);            // zero width
  EXPECT_THROW(load_pgm("P2 1 1 70000 0", false), FormatError);        // maxval too big
  EXPECT_THROW(load_pgm("P2 1 1 255 256", false), RangeError);
  EXPECT_THROW(load_pgm(oracle::pgm_p5(2, 2, 255, {1, 2, 3}), false), FormatError);
  EXPECT_THROW(load_pgm(oracle::pgm_p5(1, 1, 100, {101}), false), RangeError);
}

TEST(Pgm, SaveMatchesFormatDefinition) {
  const GelImage one(1, 1, 255, std::vector<Density>{7});
  EXPECT_EQ(save_pgm(one, PgmFormat::Plain), "P2\n1 1\n255\n7\n");

  const GelImage wide(2, 1, 65535, std::vector<Density>{0x1234, 0xff01});
  const std::string raw = save_pgm(wide, PgmFormat::Raw);
  const std::string header = "P5\n2 1\n65535\n";
  ASSERT_EQ(raw.size(), header.size() + 4);
  EXPECT_EQ(raw.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(raw[header.size()]), 0x12);
  EXPECT_EQ(static_cast<unsigned char>(raw[header.size() + 1]), 0x34);
  EXPECT_EQ(static_cast<unsigned char>(raw[header.size() + 2]), 0xff);
  EXPECT_EQ(static_cast<unsigned char>(raw[header.size() + 3]), 0x01);
}

TEST(Pgm, RoundTripProperty) {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(rng() % 17);
    const int h = 1 + static_cast<int>(rng() % 13);
    const Density maxval = trial % 2 ? 65535 : static_cast<Density>(1 + rng() % 255);
    std::vector<Density> px(static_cast<std::size_t>(w * h));
    for (auto& v : px) v = static_cast<Density>(rng() % (maxval + 1u));
    const GelImage img(w, h, maxval, px);
    for (PgmFormat f : {PgmFormat::Plain, PgmFormat::Raw}) {
      EXPECT_EQ(load_pgm(save_pgm(img, f), false), img);
      // Loading dark_is_stain from an inverted file recovers the original.
      EXPECT_EQ(load_pgm(save_pgm(inverted(img), f), true), img);
    }
  }
}

TEST(Image, DensityAt) {
  const GelImage img(2, 2, 255, std::vector<Density>{0, 100, 100, 200});
  EXPECT_EQ(density_at(img, {1, 1}), 200);
  EXPECT_EQ(density_at(img, {0, 0}), 0);
  EXPECT_THROW(density_at(img, {5, 0}), OutOfBounds);
  EXPECT_THROW(density_at(img, {0, -1}), OutOfBounds);
}

TEST(Image, ConstructionInvariants) {
  EXPECT_THROW(GelImage(0, 3), DimensionError);
  EXPECT_THROW(GelImage(2, 2, 255, std::vector<Density>{1, 2, 3}), DimensionError);
  EXPECT_THROW(GelImage(1, 1, 100, std::vector<Density>{101}), RangeError);
}
