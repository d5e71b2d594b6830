#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "lexrag/errors.hpp"
#include "lexrag/noise.hpp"
#include "lexrag/reference.hpp"

#include "generators.hpp"

using namespace lexrag;

namespace {

NoiseSpec spec_of(double lambda, std::uint64_t seed, std::uint32_t ops = kNoiseAll) {
    NoiseSpec spec;
    spec.lambda = lambda;
    spec.seed = seed;
    spec.ops = ops;
    return spec;
}

} // namespace

TEST_CASE("utf8_units splits code points and isolates invalid bytes") {
    const auto units = utf8_units("h\xc3\xa9llo");
    REQUIRE(units.size() == 5);
    CHECK(units[0] == "h");
    CHECK(units[1] == "\xc3\xa9");
    CHECK(units[2] == "l");

    const auto bad = utf8_units("a\xff\xc3裸"); // stray byte, truncated lead, CJK
    REQUIRE(bad.size() == 4);
    CHECK(bad[1] == "\xff");
    CHECK(bad[2] == "\xc3");
    CHECK(bad[3].size() == 3);

    CHECK(utf8_units("").empty());
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(inject_noise("abc", spec_of(0.0, 1)), ConfigError);
    CHECK_THROWS_AS(inject_noise("abc", spec_of(-0.5, 1)), ConfigError);
    CHECK_THROWS_AS(inject_noise("abc", spec_of(1.5, 1)), ConfigError);
    CHECK_THROWS_AS(inject_noise("abc", spec_of(0.5, 1, 0)), ConfigError);
    CHECK_THROWS_AS(inject_noise("abc", spec_of(0.5, 1, ~kNoiseAll)), ConfigError);
    CHECK_NOTHROW(inject_noise("abc", spec_of(1.0, 1)));
    CHECK(inject_noise("", spec_of(0.5, 1)).empty());
}

TEST_CASE("lambda 1 substitute-only corrupts every character") {
    const std::string text = "The quick brown fox jumps over the lazy dog 12345";
    const std::string out = inject_noise(text, spec_of(1.0, 9, kNoiseSubstitute));
    REQUIRE(out.size() == text.size()); // ASCII in, one replacement per char
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] != text[i]); // never the identity substitution
        const bool in_alphabet = (out[i] >= 'a' && out[i] <= 'z') ||
                                 (out[i] >= 'A' && out[i] <= 'Z') ||
                                 (out[i] >= '0' && out[i] <= '9');
        CHECK(in_alphabet);
    }

    // multi-byte units are replaced whole
    const std::string accents = "\xc3\xa9\xc3\xa8\xc3\xaa"; // éèê
    const std::string replaced = inject_noise(accents, spec_of(1.0, 4, kNoiseSubstitute));
    CHECK(replaced.size() == 3);
}

TEST_CASE("lambda 1: delete empties, insert doubles, swap transposes pairs") {
    CHECK(inject_noise("anything at all", spec_of(1.0, 5, kNoiseDelete)).empty());

    const std::string text = "abcdef";
    const std::string inserted = inject_noise(text, spec_of(1.0, 5, kNoiseInsert));
    REQUIRE(inserted.size() == 2 * text.size());
    for (std::size_t i = 0; i < text.size(); ++i)
        CHECK(inserted[2 * i + 1] == text[i]); // original char follows each insertion

    CHECK(inject_noise("abcd", spec_of(1.0, 5, kNoiseSwapAdjacent)) == "badc");
    // odd length: the final unit has no partner and stays put
    CHECK(inject_noise("abcde", spec_of(1.0, 5, kNoiseSwapAdjacent)) == "badce");
    CHECK(inject_noise("x", spec_of(1.0, 5, kNoiseSwapAdjacent)) == "x");
    // units move whole: bytes of é stay paired
    CHECK(inject_noise("a\xc3\xa9", spec_of(1.0, 5, kNoiseSwapAdjacent)) == "\xc3\xa9"
                                                                            "a");
}

TEST_CASE("noise is deterministic in the NoiseSpec and independent of thread count") {
    lexrag::SplitMix rng(0xd473);
    for (int iter = 0; iter < 100; ++iter) {
        const std::string text = testgen::random_bytes(rng, 300);
        const NoiseSpec spec = spec_of(u01_closed(rng.next()), rng.next(),
                                       1 + rng.next_below(kNoiseAll));
        CAPTURE(iter);
        CHECK(inject_noise(text, spec) == inject_noise(text, spec));
    }

#ifdef _OPENMP
    // a string over the parallel cutoff, emitted with 1 and 3 threads
    std::string big;
    for (int i = 0; i < 20000; ++i)
        big += "word \xc3\xa9 more!";
    const NoiseSpec spec = spec_of(0.4, 123, kNoiseAll);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const std::string serial = inject_noise(big, spec);
    omp_set_num_threads(3);
    const std::string parallel = inject_noise(big, spec);
    omp_set_num_threads(saved);
    CHECK(serial == parallel);
#endif
}

TEST_CASE("different seeds or lambdas give different corruption") {
    const std::string text(2000, 'q');
    CHECK(inject_noise(text, spec_of(0.5, 1)) != inject_noise(text, spec_of(0.5, 2)));
    const std::string low = inject_noise(text, spec_of(0.05, 7, kNoiseSubstitute));
    const std::string high = inject_noise(text, spec_of(0.95, 7, kNoiseSubstitute));
    std::size_t low_hits = 0, high_hits = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        low_hits += low[i] != 'q';
        high_hits += high[i] != 'q';
    }
    CHECK(low_hits < high_hits);
}

TEST_CASE("calibration: corrupted fraction tracks lambda") {
    std::string text(100000, 'a');
    const std::string out = inject_noise(text, spec_of(0.3, 42, kNoiseSubstitute));
    REQUIRE(out.size() == text.size());
    std::size_t corrupted = 0;
    for (std::size_t i = 0; i < out.size(); ++i)
        corrupted += out[i] != 'a';
    const double fraction = static_cast<double>(corrupted) / static_cast<double>(out.size());
    CHECK(fraction > 0.29);
    CHECK(fraction < 0.31);
}

TEST_CASE("a lambda too small to sample any corruption returns the input") {
    const std::string text(1000, 'z');
    CHECK(inject_noise(text, spec_of(1e-15, 3)) == text);
}

TEST_CASE("property: production output equals the serial reference") {
    lexrag::SplitMix rng(0x0e15e);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::string text = testgen::random_bytes(rng, 200);
        const NoiseSpec spec = spec_of(u01_closed(rng.next()), rng.next(),
                                       1 + rng.next_below(kNoiseAll));
        CAPTURE(iter);
        CAPTURE(text);
        CAPTURE(spec.lambda);
        CAPTURE(spec.seed);
        CAPTURE(spec.ops);
        REQUIRE(inject_noise(text, spec) == ref::inject_noise(text, spec));
    }
}

TEST_CASE("property: per-op length bounds hold in units") {
    lexrag::SplitMix rng(0x1e57);
    for (int iter = 0; iter < 300; ++iter) {
        const std::string text = testgen::random_bytes(rng, 150);
        const double lambda = u01_closed(rng.next());
        const std::size_t before = utf8_units(text).size();
        CAPTURE(iter);
        CHECK(utf8_units(inject_noise(text, spec_of(lambda, iter, kNoiseSubstitute))).size() ==
              before);
        CHECK(utf8_units(inject_noise(text, spec_of(lambda, iter, kNoiseDelete))).size() <=
              before);
        CHECK(utf8_units(inject_noise(text, spec_of(lambda, iter, kNoiseInsert))).size() >=
              before);
    }
}
