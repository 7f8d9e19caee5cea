#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sdd/world.hpp"

using namespace sdd;

TEST_CASE("two-mode construction places symmetric means") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    CHECK(w.semantic_dims() == 1);
    CHECK(w.nuisance_dims() == 1);
    const DenseArray m0 = w.mode_center(ConditionId(0));
    const DenseArray m1 = w.mode_center(ConditionId(1));
    CHECK(m0[0] == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(m0[1] == 0.0);
    CHECK(m1[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("ring construction spaces means equally on the circle") {
    const MixtureWorld w = make_world(WorldLayout::ring, 4, 2.0, 0.25, 4);
    const double expected[4][2] = {{2, 0}, {0, 2}, {-2, 0}, {0, -2}};
    for (int k = 0; k < 4; ++k) {
        const DenseArray c = w.mode_center(ConditionId(k));
        CHECK(c[0] == doctest::Approx(expected[k][0]).epsilon(1e-12));
        CHECK(c[1] == doctest::Approx(expected[k][1]).epsilon(1e-12));
    }
    const MixtureWorld w8 = make_world(WorldLayout::ring, 8, 2.0, 0.25, 8);
    CHECK(w8.semantic_dims() == 2);
    CHECK(w8.nuisance_dims() == 6);
}

TEST_CASE("make_world rejects invalid combinations") {
    CHECK_THROWS_AS(make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 3), ConfigError);
    CHECK_THROWS_AS(make_world(WorldLayout::ring, 2, 2.0, 0.25, 1), ConfigError);
    CHECK_THROWS_AS(make_world(WorldLayout::two_mode, 1, 4.0, 0.3, 2), ConfigError);
    CHECK_THROWS_AS(make_world(WorldLayout::two_mode, 2, 4.0, 0.0, 2), ConfigError);
}

TEST_CASE("sample_world pins semantics at vanishing std") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 1e-9, 2);
    RngStream rng(1);
    const LabeledBatch batch = sample_world(w, ConditionId(1), 100, rng);
    for (std::size_t r = 0; r < batch.count(); ++r) {
        CHECK(std::abs(batch.samples.at(r, 0) - 2.0) < 1e-6);
    }
}

TEST_CASE("sample_world Monte Carlo moments") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    RngStream rng(2);
    const std::size_t n = 10000;
    const LabeledBatch batch = sample_world(w, ConditionId(0), n, rng);

    double sem_mean = 0.0, nui_mean = 0.0, nui_sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        sem_mean += batch.samples.at(r, 0);
        nui_mean += batch.samples.at(r, 1);
        nui_sq += batch.samples.at(r, 1) * batch.samples.at(r, 1);
    }
    sem_mean /= n;
    nui_mean /= n;
    const double nui_var = nui_sq / n - nui_mean * nui_mean;

    CHECK(std::abs(sem_mean - (-2.0)) < 3.0 * 0.3 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(nui_var - 1.0) < 0.03);
}

TEST_CASE("sample_world rejects unknown conditions") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    RngStream rng(3);
    CHECK_THROWS_AS(sample_world(w, ConditionId(2), 4, rng), ConditionError);
    CHECK_THROWS_AS(sample_world(w, ConditionId(-1), 4, rng), ConditionError);
}

TEST_CASE("mode_posterior is a probability vector matching direct densities") {
    const MixtureWorld w = make_world(WorldLayout::ring, 4, 2.0, 0.25, 4);
    RngStream rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const DenseArray x = rng.gaussian_vector(4);
        const std::vector<double> post = mode_posterior(w, x);

        double total = 0.0;
        for (double p : post) {
            CHECK(p >= 0.0);
            total += p;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);

        // Direct density-ratio oracle over the semantic block.
        std::vector<double> density(4);
        double norm = 0.0;
        for (int k = 0; k < 4; ++k) {
            const DenseArray c = w.mode_center(ConditionId(k));
            double q = 0.0;
            for (std::size_t j = 0; j < 2; ++j) {
                const double z = (x[j] - c[j]) / 0.25;
                q += z * z;
            }
            density[static_cast<std::size_t>(k)] = std::exp(-0.5 * q);
            norm += density[static_cast<std::size_t>(k)];
        }
        for (int k = 0; k < 4; ++k) {
            CHECK(post[static_cast<std::size_t>(k)] ==
                  doctest::Approx(density[static_cast<std::size_t>(k)] / norm).epsilon(1e-9));
        }
    }
}

TEST_CASE("mode_posterior extremes: mode center and midpoint") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    const std::vector<double> at_mode = mode_posterior(w, w.mode_center(ConditionId(1)));
    CHECK(at_mode[1] > 0.99);

    const std::vector<double> mid = mode_posterior(w, DenseArray::vec({0.0, 0.7}));
    CHECK(std::abs(mid[0] - 0.5) < 1e-12);
    CHECK(std::abs(mid[1] - 0.5) < 1e-12);
}

TEST_CASE("alignment_score behaviors") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    RngStream rng(5);

    const LabeledBatch target_batch = sample_world(w, ConditionId(1), 2000, rng);
    CHECK(alignment_score(w, target_batch.samples, ConditionId(1)) >= 0.95);

    const LabeledBatch source_batch = sample_world(w, ConditionId(0), 2000, rng);
    CHECK(alignment_score(w, source_batch.samples, ConditionId(1)) <= 0.05);

    DenseArray mid = DenseArray::matrix(3, 2);
    for (std::size_t r = 0; r < 3; ++r) {
        mid.at(r, 0) = 0.0;
        mid.at(r, 1) = static_cast<double>(r);
    }
    CHECK(alignment_score(w, mid, ConditionId(0)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("alignment_score is permutation invariant") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    RngStream rng(6);
    const LabeledBatch batch = sample_world(w, ConditionId(0), 64, rng);

    DenseArray reversed = DenseArray::matrix(64, 2);
    for (std::size_t r = 0; r < 64; ++r) {
        for (std::size_t j = 0; j < 2; ++j) reversed.at(r, j) = batch.samples.at(63 - r, j);
    }
    const double a = alignment_score(w, batch.samples, ConditionId(1));
    const double b = alignment_score(w, reversed, ConditionId(1));
    CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("fidelity_rmse arithmetic and semantic blindness") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 3, 4.0, 0.3, 2);  // S=1, 2 nuisance
    RngStream rng(7);
    const LabeledBatch batch = sample_world(w, ConditionId(0), 10, rng);

    CHECK(fidelity_rmse(batch.samples, batch.samples, w) == 0.0);

    DenseArray shifted = batch.samples;
    for (std::size_t r = 0; r < shifted.rows(); ++r) shifted.at(r, 1) += 1.0;
    CHECK(fidelity_rmse(batch.samples, shifted, w) ==
          doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    DenseArray semantic_only = batch.samples;
    for (std::size_t r = 0; r < semantic_only.rows(); ++r) semantic_only.at(r, 0) += 5.0;
    CHECK(fidelity_rmse(batch.samples, semantic_only, w) == 0.0);
}

TEST_CASE("fidelity_rmse estimates perturbation scale") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    RngStream rng(8);
    const std::size_t n = 10000;
    const LabeledBatch batch = sample_world(w, ConditionId(0), n, rng);

    const double sigma = 0.7;
    DenseArray noisy = batch.samples;
    for (std::size_t r = 0; r < n; ++r) noisy.at(r, 1) += sigma * rng.gaussian();
    const double rmse = fidelity_rmse(batch.samples, noisy, w);
    CHECK(std::abs(rmse - sigma) / sigma < 0.05);
}

TEST_CASE("sampling is condition-faithful when separation dominates std") {
    const MixtureWorld w = make_world(WorldLayout::two_mode, 2, 6.0 * 0.3 * 2, 0.3, 2);
    RngStream rng(9);
    const std::size_t n = 5000;
    std::size_t correct = 0;
    for (int cond = 0; cond < 2; ++cond) {
        const LabeledBatch batch = sample_world(w, ConditionId(cond), n, rng);
        for (std::size_t r = 0; r < n; ++r) {
            const int nearest = batch.samples.at(r, 0) < 0.0 ? 0 : 1;
            if (nearest == cond) ++correct;
        }
    }
    CHECK(static_cast<double>(correct) / (2.0 * n) >= 0.99);
}
