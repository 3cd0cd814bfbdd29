#include <doctest.h>

#include <cmath>
#include <vector>

#include "gnormal/rng.hpp"

using namespace gnormal;

TEST_CASE("philox4x32-10 known answers") {
    // Random123 kat_vectors.
    const auto zero = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
    CHECK(zero == Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

    const auto ones = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                           {0xffffffffu, 0xffffffffu});
    CHECK(ones == Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

    const auto pi = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                         {0xa4093822u, 0x299f31d0u});
    CHECK(pi == Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("draws are a pure function of seed, replication and step") {
    NormalStream a(42, 7);
    NormalStream b(42, 7);
    std::vector<double> seq;
    for (int i = 0; i < 11; ++i) seq.push_back(a.next());
    // Random access in reverse order reproduces the sequential stream.
    for (int i = 10; i >= 0; --i) CHECK(b.draw(static_cast<std::uint64_t>(i)) == seq[static_cast<std::size_t>(i)]);

    NormalStream other_rep(42, 8);
    NormalStream other_seed(43, 7);
    CHECK(other_rep.draw(0) != seq[0]);
    CHECK(other_seed.draw(0) != seq[0]);
}

TEST_CASE("high seed and replication bits matter") {
    NormalStream base(1, 1);
    NormalStream high_seed(1 + (std::uint64_t{1} << 32), 1);
    NormalStream high_rep(1, 1 + (std::uint64_t{1} << 32));
    CHECK(base.draw(0) != high_seed.draw(0));
    CHECK(base.draw(0) != high_rep.draw(0));
}

TEST_CASE("normal draws have the right low moments") {
    NormalStream s(2024, 0);
    const int n = 400000;
    double m1 = 0.0;
    double m2 = 0.0;
    double m4 = 0.0;
    int above = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.next();
        CHECK_FALSE(std::isnan(z));
        m1 += z;
        m2 += z * z;
        m4 += z * z * z * z;
        if (z > 1.959963984540054) ++above;
    }
    m1 /= n;
    m2 /= n;
    m4 /= n;
    // Five standard errors.
    CHECK(std::abs(m1) < 5.0 / std::sqrt(n));
    CHECK(std::abs(m2 - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(m4 - 3.0) < 5.0 * std::sqrt(96.0 / n));
    CHECK(std::abs(above / static_cast<double>(n) - 0.025) < 5.0 * std::sqrt(0.025 * 0.975 / n));
}
