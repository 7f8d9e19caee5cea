#include "sdd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdd/errors.hpp"

namespace sdd {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Small D only.
struct EigenSym {
    std::vector<double> values;
    DenseArray vectors;  // columns are eigenvectors
};

EigenSym jacobi_eigen(DenseArray a) {
    const std::size_t n = a.rows();
    DenseArray v = DenseArray::matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        }
        if (off < 1e-24) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double sign = theta >= 0.0 ? 1.0 : -1.0;
                const double t = sign / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a.at(i, p);
                    const double aiq = a.at(i, q);
                    a.at(i, p) = c * aip - s * aiq;
                    a.at(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a.at(p, i);
                    const double aqi = a.at(q, i);
                    a.at(p, i) = c * api - s * aqi;
                    a.at(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v.at(i, p);
                    const double viq = v.at(i, q);
                    v.at(i, p) = c * vip - s * viq;
                    v.at(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    EigenSym out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a.at(i, i);
    out.vectors = std::move(v);
    return out;
}

DenseArray matmul(const DenseArray& a, const DenseArray& b) {
    DenseArray c = DenseArray::matrix(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a.at(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c.at(i, j) += aik * b.at(k, j);
        }
    }
    return c;
}

// V diag(sqrt(max(lambda, 0))) V^T
DenseArray sym_sqrt(const DenseArray& m) {
    const EigenSym eig = jacobi_eigen(m);
    const std::size_t n = m.rows();
    DenseArray out = DenseArray::matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double root = std::sqrt(std::max(eig.values[k], 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                out.at(i, j) += root * eig.vectors.at(i, k) * eig.vectors.at(j, k);
            }
        }
    }
    return out;
}

struct GaussianFit {
    DenseArray mean;
    DenseArray cov;
};

GaussianFit fit_gaussian(const DenseArray& samples) {
    const std::size_t n = samples.rows();
    const std::size_t dim = samples.cols();

    GaussianFit fit;
    fit.mean = DenseArray::zeros(dim);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < dim; ++j) fit.mean[j] += samples.at(r, j);
    }
    for (std::size_t j = 0; j < dim; ++j) fit.mean[j] /= static_cast<double>(n);

    fit.cov = DenseArray::matrix(dim, dim);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double di = samples.at(r, i) - fit.mean[i];
            for (std::size_t j = i; j < dim; ++j) {
                fit.cov.at(i, j) += di * (samples.at(r, j) - fit.mean[j]);
            }
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i; j < dim; ++j) {
            fit.cov.at(i, j) /= denom;
            fit.cov.at(j, i) = fit.cov.at(i, j);
        }
    }
    for (std::size_t i = 0; i < dim; ++i) fit.cov.at(i, i) += 1e-8;
    return fit;
}

}  // namespace

double frechet_gaussian(const DenseArray& a, const DenseArray& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
        throw ShapeError("frechet_gaussian: need n x D sample sets of equal D");
    }
    const std::size_t dim = a.cols();
    if (a.rows() < dim + 1 || b.rows() < dim + 1) {
        throw ShapeError("frechet_gaussian: need at least D+1 rows per set");
    }

    const GaussianFit fa = fit_gaussian(a);
    const GaussianFit fb = fit_gaussian(b);

    double mean_term = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = fa.mean[j] - fb.mean[j];
        mean_term += d * d;
    }

    // tr((Sa Sb)^{1/2}) through the symmetric form sqrt(Sa)^T Sb sqrt(Sa).
    const DenseArray root_a = sym_sqrt(fa.cov);
    const DenseArray inner = matmul(matmul(root_a, fb.cov), root_a);
    const EigenSym eig = jacobi_eigen(inner);

    double trace_term = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        trace_term += fa.cov.at(i, i) + fb.cov.at(i, i);
        trace_term -= 2.0 * std::sqrt(std::max(eig.values[i], 0.0));
    }
    return std::max(0.0, mean_term + trace_term);
}

DenseArray noise_denoise_edit(const Denoiser& d, const NoiseSchedule& s, const DenseArray& y,
                              ConditionId target, double alpha, RngStream& rng) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("noise_denoise_edit: alpha must be in [0, 1]");
    }
    const int T = s.horizon();
    const int t_star = std::clamp(static_cast<int>(std::lround(alpha * T)), 0, T);
    if (t_star == 0) return y;

    const DenseArray eps = rng.gaussian_vector(y.size());
    DenseArray x = forward_sample(s, y, t_star, eps);
    for (int t = t_star; t >= 1; --t) {
        const DenseArray eps_hat = predict_eps(d, x, t, target);
        const PosteriorStats stats = posterior_stats(s, x, eps_hat, t);
        x = stats.mean;
        if (stats.variance > 0.0) {
            const double sd = std::sqrt(stats.variance);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] += sd * rng.gaussian();
        }
    }
    return x;
}

std::vector<TradeoffPoint> tradeoff_curve(const Denoiser& d, const NoiseSchedule& s,
                                          const MixtureWorld& w, ConditionId source,
                                          ConditionId target,
                                          const std::vector<double>& alpha_list, std::size_t n,
                                          const RngStream& rng) {
    if (alpha_list.empty()) throw ConfigError("tradeoff_curve: empty alpha list");
    if (n == 0) throw ConfigError("tradeoff_curve: n must be >= 1");

    RngStream source_rng = rng.fork(0);
    RngStream reference_rng = rng.fork(1);
    const RngStream edit_root = rng.fork(2);

    const LabeledBatch sources = sample_world(w, source, n, source_rng);
    const LabeledBatch reference = sample_world(w, target, n, reference_rng);

    std::vector<TradeoffPoint> points;
    points.reserve(alpha_list.size());

    for (std::size_t ai = 0; ai < alpha_list.size(); ++ai) {
        const double alpha = alpha_list[ai];
        const RngStream alpha_rng = edit_root.fork(ai);

        DenseArray outputs = DenseArray::matrix(n, w.dim());
        for (std::size_t r = 0; r < n; ++r) {
            RngStream row_rng = alpha_rng.fork(r);
            const DenseArray y = sources.row(r);
            const DenseArray edited = noise_denoise_edit(d, s, y, target, alpha, row_rng);
            for (std::size_t j = 0; j < w.dim(); ++j) outputs.at(r, j) = edited[j];
        }

        TradeoffPoint point;
        point.alpha = alpha;
        point.alignment = alignment_score(w, outputs, target);
        point.fidelity_rmse = fidelity_rmse(sources.samples, outputs, w);
        point.frechet = frechet_gaussian(outputs, reference.samples);
        points.push_back(point);
    }
    return points;
}

void CostParams::validate() const {
    if (images_per_prompt < 0 || prompts < 0) {
        throw ConfigError("cost: m and n must be >= 0");
    }
    if (tau_diff_infer < 0.0 || tau_sdd_train < 0.0 || tau_sdd_infer < 0.0) {
        throw ConfigError("cost: tau values must be >= 0");
    }
}

double cost_diffusion(const CostParams& p) {
    p.validate();
    return static_cast<double>(p.images_per_prompt) * static_cast<double>(p.prompts) *
           p.tau_diff_infer;
}

double cost_sdd(const CostParams& p) {
    p.validate();
    const double n = static_cast<double>(p.prompts);
    const double m = static_cast<double>(p.images_per_prompt);
    return n * p.tau_sdd_train + n * m * p.tau_sdd_infer;
}

double break_even_m(const CostParams& p) {
    p.validate();
    if (!(p.tau_diff_infer > p.tau_sdd_infer)) {
        throw DomainError(
            "break_even_m: tau_diff_infer must exceed tau_sdd_infer "
            "(SDD never cheaper per image)");
    }
    return p.tau_sdd_train / (p.tau_diff_infer - p.tau_sdd_infer);
}

AblationReport run_ablation(const MixtureWorld& w, const Denoiser& d, const NoiseSchedule& s,
                            ConditionId source, ConditionId target,
                            const std::vector<NamedStrategy>& strategies,
                            const std::vector<std::uint64_t>& seeds, const DistillConfig& cfg,
                            std::size_t eval_samples) {
    if (strategies.empty() || seeds.empty()) {
        throw ConfigError("run_ablation: need at least one strategy and one seed");
    }

    constexpr std::uint64_t kHeldOutLabel = 1000;
    constexpr std::uint64_t kReferenceLabel = 1001;

    AblationReport report;
    for (const NamedStrategy& named : strategies) {
        for (std::uint64_t seed : seeds) {
            RngStream cell_rng{seed};
            DistillResult trained =
                train_manipulator(w, d, s, source, target, named.strategy, cfg, cell_rng);

            RngStream held_rng = RngStream{seed}.fork(kHeldOutLabel);
            RngStream ref_rng = RngStream{seed}.fork(kReferenceLabel);
            const LabeledBatch held = sample_world(w, source, eval_samples, held_rng);
            const LabeledBatch reference = sample_world(w, target, eval_samples, ref_rng);

            const DenseArray outputs = manipulate_batch(trained.manipulator, held.samples);

            AblationRow row;
            row.strategy = named.tag;
            row.seed = seed;
            row.alignment = alignment_score(w, outputs, target);
            row.fidelity_rmse = fidelity_rmse(held.samples, outputs, w);
            row.frechet = frechet_gaussian(outputs, reference.samples);
            row.iterations = cfg.iterations;
            report.rows.push_back(std::move(row));
        }
    }

    std::sort(report.rows.begin(), report.rows.end(), [](const AblationRow& a,
                                                         const AblationRow& b) {
        if (a.strategy != b.strategy) return a.strategy < b.strategy;
        return a.seed < b.seed;
    });
    return report;
}

double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw ConfigError("spearman: need two equal-length series of >= 2 points");
    }
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return v[a] < v[b];
        });
        std::vector<double> r(n, 0.0);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
            i = j + 1;
        }
        return r;
    };

    const std::vector<double> rx = ranks(x);
    const std::vector<double> ry = ranks(y);
    const double n = static_cast<double>(x.size());

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mx;
        const double dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace sdd
