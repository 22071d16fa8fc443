#include <catch2/catch_amalgamated.hpp>

#include "csns/field.hpp"
#include "csns/io.hpp"
#include "csns/rng.hpp"
#include "oracles.hpp"

using namespace csns;

TEST_CASE("make_grid validates its inputs") {
    const PeriodicGrid g = make_grid(32, 2.0 * kPi);
    CHECK(g.freq_of(0) == 0);
    CHECK(g.freq_of(16) == 16);
    CHECK(g.freq_of(17) == -15);
    CHECK(g.xi0() == Catch::Approx(1.0));

    const PeriodicGrid g2 = make_grid(16, 1.0);
    CHECK(g2.xi0() == Catch::Approx(2.0 * kPi));

    CHECK_THROWS_AS(make_grid(33, 2.0 * kPi), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(8, 2.0 * kPi), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(32, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(32, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(32, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("physical/spectral round trip at machine precision") {
    const PeriodicGrid g = make_grid(32, 2.0 * kPi);
    Rng rng(11);
    for (int rep = 0; rep < 5; ++rep) {
        const SpectralField u = random_divfree_field(g, rng, 1, 8, -0.5, 1.0);
        const SpectralField back = from_physical(g, to_physical(u));
        double err = 0.0, scale = u.max_abs_coeff();
        for (int c = 0; c < 3; ++c)
            for (std::size_t i = 0; i < g.npoints(); ++i)
                err = std::max(err, std::abs(back.at(c, i) - u.at(c, i)));
        CHECK(err / scale <= 1e-12);
    }
}

TEST_CASE("FFT engine agrees with a brute-force DFT") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(3);
    const SpectralField u = random_divfree_field(g, rng, 1, 4, 0.0, 1.0);
    const auto fast = to_physical(u);
    const auto slow = oracles::slow_inverse_dft(u, 1);
    double err = 0.0;
    for (std::size_t i = 0; i < g.npoints(); ++i)
        err = std::max(err, std::abs(fast[1][i] - slow[i]));
    CHECK(err <= 1e-10 * u.max_abs_coeff() * g.npoints());
    CHECK(err <= 1e-9);
}

TEST_CASE("random fields carry the invariants") {
    const PeriodicGrid g = make_grid(32, 2.0 * kPi);
    Rng rng(17);
    const SpectralField u = random_divfree_field(g, rng, 1, 8, 0.0, 1.0);
    CHECK(u.hermitian_defect() == 0.0);
    CHECK(u.mean_mode_abs() == 0.0);
    CHECK(u.divergence_defect() <= 1e-12);
    CHECK(u.divergence_free);
}

TEST_CASE("snapshot file round trip is bit exact") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(5);
    const SpectralField u = random_divfree_field(g, rng, 1, 4, 0.0, 0.7);
    const auto tmp = fs::temp_directory_path() / "csns_test_snap.csns";
    write_field_snapshot(tmp, u);
    const SpectralField v = read_field_snapshot(tmp);
    REQUIRE(v.grid().n == g.n);
    REQUIRE(v.grid().period == g.period);
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < g.npoints(); ++i)
            CHECK(v.at(c, i) == u.at(c, i));
    // identical bytes => identical hash, and rewriting changes nothing
    const std::string h1 = hash_file(tmp);
    write_field_snapshot(tmp, u);
    CHECK(hash_file(tmp) == h1);
    fs::remove(tmp);
}

TEST_CASE("snapshot reader rejects foreign files") {
    const auto tmp = fs::temp_directory_path() / "csns_test_bad.csns";
    write_text_file(tmp, "not a snapshot");
    CHECK_THROWS_AS(read_field_snapshot(tmp), std::runtime_error);
    fs::remove(tmp);
}

TEST_CASE("shortest round-trip decimal formatting") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(kPi)) == kPi);
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
