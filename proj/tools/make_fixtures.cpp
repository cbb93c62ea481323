// Regenerates data/fixtures. Usage: make_fixtures <out-dir>
#include <iostream>

#include "fixture_gen.hpp"
#include "talkfashion/error.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <out-dir>\n";
        return 2;
    }
    try {
        talkfashion::fixtures::write_all(argv[1]);
    } catch (const talkfashion::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
