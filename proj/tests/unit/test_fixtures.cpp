#include <gtest/gtest.h>

#include <set>

#include "fixture_gen.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

// The checked-in fixtures must be exactly what the generator produces.
TEST(Fixtures, RegenerateByteForByte) {
    tfx::TempDir tmp;
    talkfashion::fixtures::write_all(tmp.path());
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(tmp.path())) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), tmp.path());
        SCOPED_TRACE(rel.string());
        ASSERT_TRUE(fs::exists(tfx::fixtures_dir() / rel));
        EXPECT_EQ(talkfashion::codec::read_file(e.path()),
                  talkfashion::codec::read_file(tfx::fixtures_dir() / rel));
        ++files;
    }
    EXPECT_GE(files, 13u);
}

TEST(Fixtures, GarmentsCoverEveryCategory) {
    std::set<talkfashion::GarmentCategory> seen;
    for (const auto& g : talkfashion::fixtures::garment_specs()) seen.insert(g.category);
    EXPECT_EQ(seen.size(), 3u);
}
