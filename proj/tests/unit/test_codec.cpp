#include <gtest/gtest.h>

#include <random>

#include "talkfashion/codec.hpp"
#include "talkfashion/error.hpp"
#include "test_support.hpp"

using namespace talkfashion;

TEST(Codec, PngRoundTripRgbAndGray) {
    std::mt19937_64 rng(7);
    for (int ch : {1, 3}) {
        const auto img = tfx::random_image(rng, 17, 9, ch);
        EXPECT_EQ(codec::decode_png(codec::encode_png(img)), img);
    }
}

TEST(Codec, PngEncodingIsDeterministic) {
    std::mt19937_64 rng(8);
    const auto img = tfx::random_image(rng, 20, 20, 3);
    EXPECT_EQ(codec::encode_png(img), codec::encode_png(img));
}

TEST(Codec, GarbageIsDecodeError) {
    const std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5};
    try {
        codec::decode_png(junk);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ImageDecodeError);
    }
    // Valid signature, truncated body.
    auto png = codec::encode_png(RasterImage(8, 8, 3, 50));
    png.resize(png.size() / 2);
    EXPECT_THROW(codec::decode_png(png), Error);
}

TEST(Codec, ParseMapRoundTrip) {
    const auto p = tfx::fixture_parse();
    EXPECT_EQ(codec::decode_parse_map(codec::encode_parse_map(p)), p);
    // A gray PNG with label 200 is outside the schema.
    const auto bad = codec::encode_png(RasterImage(2, 2, 1, 200));
    try {
        codec::decode_parse_map(bad);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
}

TEST(Codec, Base64Rfc4648Vectors) {
    const std::pair<std::string, std::string> cases[] = {
        {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},         {"foo", "Zm9v"},
        {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"},
    };
    for (const auto& [plain, enc] : cases) {
        EXPECT_EQ(codec::base64_encode(codec::as_bytes(plain)), enc);
        const auto dec = codec::base64_decode(enc);
        EXPECT_EQ(std::string(dec.begin(), dec.end()), plain);
    }
    EXPECT_THROW(codec::base64_decode("Zm9v!"), Error);
    EXPECT_THROW(codec::base64_decode("Zm9"), Error);
}

TEST(Codec, Sha256AndCrc32KnownVectors) {
    EXPECT_EQ(codec::sha256_hex(codec::as_bytes("abc")),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(codec::crc32(codec::as_bytes("123456789")), 0xCBF43926u);
}

TEST(Codec, FileErrorsAreIoErrors) {
    try {
        codec::read_file("/nonexistent/definitely/missing.png");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }
}
