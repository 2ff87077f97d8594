#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"

#include "semiseg/core/rng.hpp"
#include "semiseg/core/types.hpp"

using namespace semiseg;

TEST_CASE("vocabulary basics and unassigned fill") {
    const ClassVocabulary with_bg({"background", "cat", "dog"},
                                  BackgroundPolicy::explicit_background);
    CHECK(with_bg.num_classes() == 3);
    CHECK(with_bg.name(1) == "cat");
    CHECK(with_bg.ignore_id() == 255);
    CHECK(with_bg.unassigned_fill() == 0);

    const ClassVocabulary no_bg({"cat", "dog"}, BackgroundPolicy::unassigned_is_ignore);
    CHECK(no_bg.unassigned_fill() == no_bg.ignore_id());
}

TEST_CASE("vocabulary rejects bad shapes") {
    CHECK_THROWS_AS(ClassVocabulary({}, BackgroundPolicy::explicit_background), ConfigError);
    CHECK_THROWS_AS(ClassVocabulary({"a"}, BackgroundPolicy::explicit_background), ConfigError);
    // ignore id inside [0, C) would collide with a real class
    CHECK_THROWS_AS(ClassVocabulary({"a", "b", "c"}, BackgroundPolicy::explicit_background, 1),
                    ConfigError);
}

TEST_CASE("label map validation names the offender") {
    const ClassVocabulary vocab({"background", "cat"}, BackgroundPolicy::explicit_background);
    LabelMap map(2, 2, 0, LabelProvenance::ground_truth);
    map.at(1, 1) = 7;
    CHECK_THROWS_AS(validate_label_map(map, vocab), DataError);
    map.at(1, 1) = vocab.ignore_id();
    CHECK_NOTHROW(validate_label_map(map, vocab));
}

TEST_CASE("confidence map validation enforces the simplex") {
    ConfidenceMap probs(1, 2, 3);
    float* a = probs.at(0, 0);
    a[0] = 0.2f; a[1] = 0.3f; a[2] = 0.5f;
    float* b = probs.at(0, 1);
    b[0] = 0.9f; b[1] = 0.3f; b[2] = -0.2f;
    CHECK_THROWS_AS(validate_confidence_map(probs), NumericError);
    b[0] = 1.0f; b[1] = 0.0f; b[2] = 0.0f;
    CHECK_NOTHROW(validate_confidence_map(probs));
}

TEST_CASE("rng repeats exactly and differs across seeds") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) any_diff |= a2.uniform() != c.uniform();
    CHECK(any_diff);
}

TEST_CASE("substreams are independent of the parent draw position") {
    Rng parent1(7);
    Rng parent2(7);
    (void)parent2.uniform(); // advancing the parent must not shift children
    Rng child1 = parent1.substream(3);
    Rng child2 = parent2.substream(3);
    for (int i = 0; i < 20; ++i) CHECK(child1.uniform() == child2.uniform());

    Rng other = Rng(7).substream(4);
    bool differs = false;
    Rng again = Rng(7).substream(3);
    for (int i = 0; i < 20; ++i) differs |= again.uniform() != other.uniform();
    CHECK(differs);
}

TEST_CASE("uniform_int stays in range and hits every bucket") {
    Rng rng(11);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const std::uint64_t v = rng.uniform_int(5);
        CHECK(v < 5);
        seen.insert(v);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("uniform respects explicit bounds") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.uniform(0.5, 2.0);
        CHECK(v >= 0.5);
        CHECK(v < 2.0);
    }
}

TEST_CASE("bernoulli extremes") {
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        CHECK_FALSE(rng.bernoulli(0.0));
        CHECK(rng.bernoulli(1.0));
    }
}

TEST_CASE("normal has roughly standard moments") {
    Rng rng(9);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = rng.normal();
        sum += v;
        sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation and is seed-stable") {
    std::vector<int> v(20);
    for (int i = 0; i < 20; ++i) v[static_cast<std::size_t>(i)] = i;
    std::vector<int> w = v;
    Rng r1(13), r2(13);
    r1.shuffle(v);
    r2.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 20; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("error kinds carry their exit codes") {
    CHECK(ConfigError("x").exit_code() == 2);
    CHECK(DataError("x").exit_code() == 3);
    CHECK(ProviderError("x").exit_code() == 4);
    CHECK(NumericError("x").exit_code() == 1);
}
