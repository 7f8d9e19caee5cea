#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sdd/eval.hpp"

using namespace sdd;

namespace {

struct Lab {
    NoiseSchedule schedule = make_schedule(100, 1e-4, 0.02);
    MixtureWorld world = make_world(WorldLayout::two_mode, 2, 4.0, 0.3, 2);
    Denoiser teacher;

    Lab() {
        DenoiserTrainConfig cfg;
        cfg.hidden = {32, 32};
        cfg.iterations = 1200;
        cfg.batch = 64;
        cfg.lr = 2e-3;
        teacher = train_denoiser(world, schedule, cfg, RngStream(7)).denoiser;
    }
};

const Lab& lab() {
    static Lab instance;
    return instance;
}

DenseArray gaussian_cloud(std::size_t n, std::size_t dim, const std::vector<double>& mean,
                          double std_dev, RngStream& rng) {
    DenseArray cloud = DenseArray::matrix(n, dim);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < dim; ++j) {
            cloud.at(r, j) = mean[j] + std_dev * rng.gaussian();
        }
    }
    return cloud;
}

}  // namespace

TEST_CASE("frechet_gaussian of a set against itself is zero") {
    RngStream rng(1);
    const DenseArray a = gaussian_cloud(500, 3, {0.5, -1.0, 2.0}, 0.8, rng);
    CHECK(frechet_gaussian(a, a) < 1e-9);
}

TEST_CASE("frechet_gaussian between near point masses is the squared mean gap") {
    RngStream rng(2);
    const DenseArray a = gaussian_cloud(200, 2, {0.0, 0.0}, 1e-6, rng);
    const DenseArray b = gaussian_cloud(200, 2, {2.0, 0.0}, 1e-6, rng);
    CHECK(frechet_gaussian(a, b) == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("frechet_gaussian with equal covariance reduces to the mean term") {
    RngStream rng(3);
    const std::size_t n = 10000;
    const DenseArray a = gaussian_cloud(n, 2, {0.0, 0.0}, 1.0, rng);
    const DenseArray b = gaussian_cloud(n, 2, {2.0, 0.0}, 1.0, rng);
    const double d = frechet_gaussian(a, b);
    CHECK(std::abs(d - 4.0) < 0.1);
}

TEST_CASE("frechet_gaussian is symmetric and nonnegative") {
    RngStream rng(4);
    const DenseArray a = gaussian_cloud(300, 3, {0.0, 1.0, -1.0}, 0.5, rng);
    const DenseArray b = gaussian_cloud(300, 3, {1.0, 0.0, 0.5}, 1.5, rng);
    const double ab = frechet_gaussian(a, b);
    const double ba = frechet_gaussian(b, a);
    CHECK(ab >= 0.0);
    CHECK(std::abs(ab - ba) < 1e-9);
    CHECK_THROWS_AS(frechet_gaussian(gaussian_cloud(3, 3, {0, 0, 0}, 1.0, rng), b), ShapeError);
}

TEST_CASE("noise_denoise_edit at alpha 0 is the exact identity") {
    const Lab& l = lab();
    RngStream rng(5);
    const DenseArray y = rng.gaussian_vector(2);
    RngStream edit_rng(6);
    const DenseArray out = noise_denoise_edit(l.teacher, l.schedule, y, ConditionId(1), 0.0,
                                              edit_rng);
    for (std::size_t i = 0; i < 2; ++i) CHECK(out[i] == y[i]);
    CHECK_THROWS_AS(
        noise_denoise_edit(l.teacher, l.schedule, y, ConditionId(1), 1.5, edit_rng),
        ConfigError);
}

TEST_CASE("noise_denoise_edit at alpha 1 forgets the input") {
    const Lab& l = lab();
    RngStream rng(7);
    const std::size_t n = 1000;

    std::vector<double> in0(n), out0(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream row = rng.fork(i);
        const LabeledBatch y = sample_world(l.world, ConditionId(0), 1, row);
        const DenseArray src = y.row(0);
        const DenseArray edited =
            noise_denoise_edit(l.teacher, l.schedule, src, ConditionId(1), 1.0, row);
        in0[i] = src[0];
        out0[i] = edited[0];
    }

    double mi = 0.0, mo = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mi += in0[i];
        mo += out0[i];
    }
    mi /= n;
    mo /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (in0[i] - mi) * (out0[i] - mo);
        sxx += (in0[i] - mi) * (in0[i] - mi);
        syy += (out0[i] - mo) * (out0[i] - mo);
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    CHECK(std::abs(corr) < 0.1);
}

TEST_CASE("tradeoff sweep: more noise buys alignment and costs fidelity") {
    const Lab& l = lab();
    const std::vector<TradeoffPoint> points =
        tradeoff_curve(l.teacher, l.schedule, l.world, ConditionId(0), ConditionId(1),
                       {0.0, 0.1, 0.9}, 150, RngStream(8));
    REQUIRE(points.size() == 3);

    CHECK(points[0].fidelity_rmse == 0.0);
    CHECK(points[0].alignment < 0.1);  // untouched source batch
    CHECK(points[2].alignment > points[1].alignment);
    CHECK(points[2].fidelity_rmse > points[1].fidelity_rmse);
}

TEST_CASE("cost formulas") {
    CostParams p{100, 10, 2.215, 0.0, 0.0};
    CHECK(cost_diffusion(p) == doctest::Approx(2215.0).epsilon(1e-12));

    p.images_per_prompt = 0;
    CHECK(cost_diffusion(p) == 0.0);

    CostParams unit{1, 1, 3.5, 0.0, 0.0};
    CHECK(cost_diffusion(unit) == doctest::Approx(3.5).epsilon(1e-15));

    CostParams sdd_only{0, 4, 0.0, 7.0, 0.5};
    CHECK(cost_sdd(sdd_only) == doctest::Approx(4.0 * 7.0).epsilon(1e-12));

    // Linear in m with slope n * tau_sdd_infer.
    CostParams base{10, 3, 0.0, 5.0, 0.25};
    CostParams more = base;
    more.images_per_prompt = 11;
    CHECK(cost_sdd(more) - cost_sdd(base) == doctest::Approx(3.0 * 0.25).epsilon(1e-12));
}

TEST_CASE("break_even_m reproduces the reference setting") {
    CostParams p{0, 1, 1000.0, 2400.0, 0.25};
    CHECK(break_even_m(p) == doctest::Approx(2.4006001500375094).epsilon(1e-12));
    CHECK(std::abs(break_even_m(p) - 2.4006) < 0.001);

    p.tau_sdd_train = 0.0;
    CHECK(break_even_m(p) == 0.0);

    p.tau_sdd_train = 4800.0;
    CHECK(break_even_m(p) == doctest::Approx(2.0 * 2.4006001500375094).epsilon(1e-12));

    p.tau_sdd_infer = 1000.0;
    CHECK_THROWS_AS(break_even_m(p), DomainError);
}

TEST_CASE("cost gap changes sign exactly at the break-even point") {
    const CostParams p{0, 7, 12.0, 40.0, 1.5};
    const double star = break_even_m(p);
    auto gap_at = [&](double m) {
        CostParams q = p;
        q.images_per_prompt = static_cast<std::int64_t>(m);
        return cost_sdd(q) - cost_diffusion(q);
    };
    CHECK(gap_at(std::floor(star)) > 0.0);   // SDD still more expensive
    CHECK(gap_at(std::ceil(star) + 1) < 0.0);
}

TEST_CASE("run_ablation emits one deterministic row per cell") {
    const Lab& l = lab();
    DistillConfig cfg;
    cfg.iterations = 30;
    cfg.batch = 16;
    cfg.hidden = {16, 16, 16};

    const std::vector<NamedStrategy> strategies = {{"fixed", Strategy::fixed(20)}};
    const AblationReport a =
        run_ablation(l.world, l.teacher, l.schedule, ConditionId(0), ConditionId(1), strategies,
                     {11}, cfg, 64);
    REQUIRE(a.rows.size() == 1);
    CHECK(a.rows[0].strategy == "fixed");
    CHECK(a.rows[0].seed == 11);
    CHECK(a.rows[0].iterations == 30);

    const AblationReport b =
        run_ablation(l.world, l.teacher, l.schedule, ConditionId(0), ConditionId(1), strategies,
                     {11}, cfg, 64);
    CHECK(a.rows[0].alignment == b.rows[0].alignment);
    CHECK(a.rows[0].fidelity_rmse == b.rows[0].fidelity_rmse);
    CHECK(a.rows[0].frechet == b.rows[0].frechet);
}

TEST_CASE("run_ablation sorts rows by strategy then seed") {
    const Lab& l = lab();
    DistillConfig cfg;
    cfg.iterations = 5;
    cfg.batch = 8;
    cfg.hidden = {8, 8, 8};

    const std::vector<NamedStrategy> strategies = {{"zz", Strategy::fixed(10)},
                                                   {"aa", Strategy::fixed(20)}};
    const AblationReport report =
        run_ablation(l.world, l.teacher, l.schedule, ConditionId(0), ConditionId(1), strategies,
                     {5, 2}, cfg, 32);
    REQUIRE(report.rows.size() == 4);
    CHECK(report.rows[0].strategy == "aa");
    CHECK(report.rows[0].seed == 2);
    CHECK(report.rows[1].strategy == "aa");
    CHECK(report.rows[1].seed == 5);
    CHECK(report.rows[2].strategy == "zz");
    CHECK(report.rows[3].seed == 5);
}

TEST_CASE("spearman correlation basics") {
    CHECK(spearman_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(spearman_correlation({1, 2, 3, 4}, {5, 4, 3, 2}) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(spearman_correlation({1, 1, 2}, {1, 2, 3}) > 0.0);
    CHECK_THROWS_AS(spearman_correlation({1.0}, {2.0}), ConfigError);
}
