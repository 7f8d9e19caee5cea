#include "sdd/hqs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "sdd/errors.hpp"

namespace sdd {

GradientMap input_gradient(const Denoiser& d, const NoiseSchedule& s, const DenseArray& y,
                           int t, ConditionId cond, const DenseArray& eps) {
    const DenseArray x_t = forward_sample(s, y, t, eps);
    const DenseArray input = d.assemble_input(x_t, t, cond);
    const DenseArray predicted = mlp_forward(d.trunk(), input);

    DenseArray output_grad = DenseArray::zeros(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        output_grad[i] = 2.0 * (predicted[i] - eps[i]);
    }
    const MlpGrads back = mlp_backward(d.trunk(), input, output_grad);

    const double chain = std::sqrt(s.alpha_bar(t));
    GradientMap map;
    map.t = t;
    map.cond = cond;
    map.d = DenseArray::zeros(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) map.d[i] = chain * back.input[i];
    return map;
}

DenseArray confidence_map(const GradientMap& g) {
    DenseArray p = DenseArray::zeros(g.d.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.d.size(); ++i) top = std::max(top, g.d[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < g.d.size(); ++i) {
        p[i] = std::exp(g.d[i] - top);
        total += p[i];
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] /= total;
    return p;
}

double step_entropy(const DenseArray& p) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0) throw DomainError("entropy: negative probability");
        total += p[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw DomainError("entropy: probabilities sum to " + std::to_string(total));
    }
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
    }
    return h;
}

double step_l1(const GradientMap& g) {
    double n = 0.0;
    for (std::size_t i = 0; i < g.d.size(); ++i) n += std::abs(g.d[i]);
    return n;
}

std::vector<double> minmax_normalize(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("minmax_normalize: empty input");
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    std::vector<double> out(v.size(), 0.0);
    if (hi == lo) return out;
    const double span = hi - lo;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / span;
    return out;
}

namespace {

// Mean entropy and L1 of the gradient map over the eps draws for one
// (sample, timestep) cell. Noise comes from rng_fork(noise, [t, sample, eps]),
// so the result does not depend on which thread runs the cell.
void score_cell(const Denoiser& d, const NoiseSchedule& s, const DenseArray& y, int t,
                ConditionId target, const HqsParams& params, const RngStream& noise_rng,
                std::size_t sample_idx, double& h_out, double& n_out) {
    const RngStream cell_rng =
        noise_rng.fork(static_cast<std::uint64_t>(t)).fork(sample_idx);
    double h_acc = 0.0;
    double n_acc = 0.0;
    for (int e = 0; e < params.n_eps; ++e) {
        RngStream eps_rng = cell_rng.fork(static_cast<std::uint64_t>(e));
        const DenseArray eps = eps_rng.gaussian_vector(y.size());
        GradientMap map = input_gradient(d, s, y, t, target, eps);
        if (params.grad_scale != 1.0) {
            for (std::size_t i = 0; i < map.d.size(); ++i) map.d[i] *= params.grad_scale;
        }
        h_acc += step_entropy(confidence_map(map));
        n_acc += step_l1(map);
    }
    h_out = h_acc / static_cast<double>(params.n_eps);
    n_out = n_acc / static_cast<double>(params.n_eps);
}

}  // namespace

HQSProfile hqs_profile(const Denoiser& d, const NoiseSchedule& s, const MixtureWorld& w,
                       ConditionId source, ConditionId target, const HqsParams& params,
                       const RngStream& rng) {
    if (params.n_samples < 1 || params.n_eps < 1) {
        throw ConfigError("hqs: n_samples and n_eps must be >= 1");
    }
    d.check_condition(target);
    const int T = s.horizon();
    const std::size_t n = static_cast<std::size_t>(params.n_samples);

    RngStream sample_rng = rng.fork(0);
    const LabeledBatch batch = sample_world(w, source, n, sample_rng);
    const RngStream noise_rng = rng.fork(1);

    std::vector<DenseArray> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) samples.push_back(batch.row(i));

    // Per-sample, per-timestep means; filled cell by cell, combined after.
    std::vector<std::vector<double>> h_st(n, std::vector<double>(static_cast<std::size_t>(T)));
    std::vector<std::vector<double>> n_st(n, std::vector<double>(static_cast<std::size_t>(T)));

    const int threads = std::max(1, params.threads);
    auto run_rows = [&](int t_begin, int t_end) {
        for (int t = t_begin; t < t_end; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                score_cell(d, s, samples[i], t + 1, target, params, noise_rng, i,
                           h_st[i][static_cast<std::size_t>(t)],
                           n_st[i][static_cast<std::size_t>(t)]);
            }
        }
    };

    if (threads == 1 || T < 2) {
        run_rows(0, T);
    } else {
        const int workers = std::min(threads, T);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        const int chunk = (T + workers - 1) / workers;
        for (int wi = 0; wi < workers; ++wi) {
            const int begin = wi * chunk;
            const int end = std::min(T, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run_rows, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    HQSProfile profile;
    profile.cond = target;
    profile.sample_count = params.n_samples;
    profile.eps_count = params.n_eps;
    profile.H.assign(static_cast<std::size_t>(T), 0.0);
    profile.N.assign(static_cast<std::size_t>(T), 0.0);

    const double inv_n = 1.0 / static_cast<double>(n);
    for (int t = 0; t < T; ++t) {
        double h_acc = 0.0;
        double n_acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            h_acc += h_st[i][static_cast<std::size_t>(t)];
            n_acc += n_st[i][static_cast<std::size_t>(t)];
        }
        profile.H[static_cast<std::size_t>(t)] = h_acc * inv_n;
        profile.N[static_cast<std::size_t>(t)] = n_acc * inv_n;
    }

    if (!params.normalize_per_sample) {
        profile.H_norm = minmax_normalize(profile.H);
        profile.N_norm = minmax_normalize(profile.N);
    } else {
        profile.H_norm.assign(static_cast<std::size_t>(T), 0.0);
        profile.N_norm.assign(static_cast<std::size_t>(T), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double> hn = minmax_normalize(h_st[i]);
            const std::vector<double> nn = minmax_normalize(n_st[i]);
            for (int t = 0; t < T; ++t) {
                profile.H_norm[static_cast<std::size_t>(t)] += hn[static_cast<std::size_t>(t)];
                profile.N_norm[static_cast<std::size_t>(t)] += nn[static_cast<std::size_t>(t)];
            }
        }
        for (int t = 0; t < T; ++t) {
            profile.H_norm[static_cast<std::size_t>(t)] *= inv_n;
            profile.N_norm[static_cast<std::size_t>(t)] *= inv_n;
        }
    }

    profile.hqs.assign(static_cast<std::size_t>(T), 0.0);
    for (int t = 0; t < T; ++t) {
        profile.hqs[static_cast<std::size_t>(t)] = profile.N_norm[static_cast<std::size_t>(t)] -
                                                   profile.H_norm[static_cast<std::size_t>(t)];
    }
    return profile;
}

bool TimestepSet::contains(int t) const {
    return std::binary_search(steps.begin(), steps.end(), t);
}

TimestepSet select_timesteps(const HQSProfile& p, double xi) {
    TimestepSet set;
    set.origin = SelectionOrigin::threshold;
    set.xi = xi;
    for (int t = 1; t <= p.horizon(); ++t) {
        if (p.hqs[static_cast<std::size_t>(t - 1)] > xi) set.steps.push_back(t);
    }
    if (set.steps.empty()) {
        throw SelectionError("no timestep has hqs > " + std::to_string(xi) +
                             "; lower xi or use top_k");
    }
    return set;
}

TimestepSet top_k(const HQSProfile& p, int k) {
    const int T = p.horizon();
    if (k < 1 || k > T) {
        throw ConfigError("top_k: k must be in 1.." + std::to_string(T));
    }
    std::vector<int> order(static_cast<std::size_t>(T));
    std::iota(order.begin(), order.end(), 1);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return p.hqs[static_cast<std::size_t>(a - 1)] > p.hqs[static_cast<std::size_t>(b - 1)];
    });
    TimestepSet set;
    set.origin = SelectionOrigin::top_k;
    set.k = k;
    set.steps.assign(order.begin(), order.begin() + k);
    std::sort(set.steps.begin(), set.steps.end());
    return set;
}

}  // namespace sdd
