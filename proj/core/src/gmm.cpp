#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "cvq/baselines.hpp"
#include "cvq/error.hpp"

namespace cvq {

GaussianMixture::GaussianMixture(VectorSet means, VectorSet variances, std::vector<double> weights)
    : means_(std::move(means)), variances_(std::move(variances)), weights_(std::move(weights)) {
    means_.validate();
    if (variances_.dim() != means_.dim() || variances_.size() != means_.size() ||
        weights_.size() != means_.size())
        throw ShapeError("gmm: means, variances and weights disagree in shape");
    log_norm_.resize(size());
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (std::size_t j = 0; j < size(); ++j) {
        double s = 0.0;
        for (double v : variances_.row(j)) {
            if (!(v > 0.0)) throw ConfigError("gmm: variances must be > 0");
            s += log2pi + std::log(v);
        }
        log_norm_[j] = std::log(weights_[j]) - 0.5 * s;
    }
}

double GaussianMixture::component_log(std::size_t j, std::span<const double> x) const {
    const auto mu = means_.row(j);
    const auto var = variances_.row(j);
    double q = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double diff = x[d] - mu[d];
        q += diff * diff / var[d];
    }
    return log_norm_[j] - 0.5 * q;
}

std::size_t GaussianMixture::encode(std::span<const double> v) const {
    if (v.size() != dim()) throw ShapeError("gmm encode: wrong vector length");
    std::size_t best = 0;
    double best_l = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < size(); ++j) {
        const double l = component_log(j, v);
        if (l > best_l) {
            best_l = l;
            best = j;
        }
    }
    return best;
}

std::span<const double> GaussianMixture::decode(std::size_t index) const {
    if (index >= size()) throw LookupError("gmm: component " + std::to_string(index) + " out of range");
    return means_.row(index);
}

double GaussianMixture::log_density(std::span<const double> x) const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < size(); ++j) m = std::max(m, component_log(j, x));
    double s = 0.0;
    for (std::size_t j = 0; j < size(); ++j) s += std::exp(component_log(j, x) - m);
    return m + std::log(s);
}

double GaussianMixture::mean_log_likelihood(const VectorSet& data) const {
    double s = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) s += log_density(data.row(i));
    return s / double(data.size());
}

GmmResult gmm_em(const VectorSet& data, std::size_t k, std::uint64_t seed, const GmmOptions& opts) {
    data.validate();
    const std::size_t n = data.size(), dim = data.dim();
    if (k < 1 || k > n) throw ConfigError("gmm: need 1 <= k <= n");
    if (!(opts.tol > 0.0)) throw ConfigError("gmm: tol must be > 0");
    if (opts.max_iter < 1) throw ConfigError("gmm: max_iter must be >= 1");

    // Per-dimension data variance sets the floor.
    std::vector<double> mean(dim, 0.0), dvar(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) mean[d] += data.row(i)[d];
    for (double& m : mean) m /= double(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = data.row(i)[d] - mean[d];
            dvar[d] += diff * diff;
        }
    std::vector<double> floor(dim);
    for (std::size_t d = 0; d < dim; ++d) {
        dvar[d] /= double(n);
        floor[d] = std::max(opts.variance_floor_ratio * dvar[d], 1e-300);
    }

    // k-means initialisation: hard responsibilities.
    const KMeansResult init = kmeans(data, k, seed);
    std::vector<double> mu(init.codebook.centroids().data());
    std::vector<double> var(k * dim, 0.0);
    std::vector<double> w(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = init.assignments[i];
        w[j] += 1.0;
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = data.row(i)[d] - mu[j * dim + d];
            var[j * dim + d] += diff * diff;
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t d = 0; d < dim; ++d)
            var[j * dim + d] = std::max(w[j] > 0 ? var[j * dim + d] / w[j] : dvar[d], floor[d]);
        w[j] = std::max(w[j], 1.0) / double(n);
    }
    {
        double ws = 0.0;
        for (double x : w) ws += x;
        for (double& x : w) x /= ws;
    }

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<double> resp(n * k);
    std::vector<double> log_norm(k);
    const double log2pi = std::log(2.0 * std::numbers::pi);

    GmmResult res{GaussianMixture(VectorSet(dim, mu), VectorSet(dim, var), w), {}, 0, false, 0};
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        // E step.
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += log2pi + std::log(var[j * dim + d]);
            log_norm[j] = std::log(w[j]) - 0.5 * s;
        }
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.row(i);
            double* r = resp.data() + i * k;
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                double q = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = x[d] - mu[j * dim + d];
                    q += diff * diff / var[j * dim + d];
                }
                r[j] = log_norm[j] - 0.5 * q;
                m = std::max(m, r[j]);
            }
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                r[j] = std::exp(r[j] - m);
                s += r[j];
            }
            for (std::size_t j = 0; j < k; ++j) r[j] /= s;
            ll += m + std::log(s);
        }
        ll /= double(n);
        res.log_likelihood.push_back(ll);
        res.iterations = it + 1;
        const std::size_t h = res.log_likelihood.size();
        if (h >= 2 && res.log_likelihood[h - 1] - res.log_likelihood[h - 2] < opts.tol) {
            res.converged = true;
            break;
        }

        // M step.
        std::vector<double> nk(k, 0.0);
        std::fill(mu.begin(), mu.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.row(i);
            const double* r = resp.data() + i * k;
            for (std::size_t j = 0; j < k; ++j) {
                if (r[j] == 0.0) continue;
                nk[j] += r[j];
                for (std::size_t d = 0; d < dim; ++d) mu[j * dim + d] += r[j] * x[d];
            }
        }
        for (std::size_t j = 0; j < k; ++j)
            if (nk[j] > 0.0)
                for (std::size_t d = 0; d < dim; ++d) mu[j * dim + d] /= nk[j];
        std::fill(var.begin(), var.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = data.row(i);
            const double* r = resp.data() + i * k;
            for (std::size_t j = 0; j < k; ++j) {
                if (r[j] == 0.0) continue;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = x[d] - mu[j * dim + d];
                    var[j * dim + d] += r[j] * diff * diff;
                }
            }
        }
        for (std::size_t j = 0; j < k; ++j) {
            // A component with no support is dead; restart it on a random row.
            if (nk[j] < 1e-10 * double(n)) {
                const auto x = data.row(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
                for (std::size_t d = 0; d < dim; ++d) {
                    mu[j * dim + d] = x[d];
                    var[j * dim + d] = dvar[d] > floor[d] ? dvar[d] : floor[d];
                }
                nk[j] = 1.0;
                ++res.reinitializations;
                continue;
            }
            for (std::size_t d = 0; d < dim; ++d)
                var[j * dim + d] = std::max(var[j * dim + d] / nk[j], floor[d]);
        }
        double total = 0.0;
        for (double x : nk) total += x;
        for (std::size_t j = 0; j < k; ++j) w[j] = nk[j] / total;
        res.model = GaussianMixture(VectorSet(dim, mu), VectorSet(dim, var), w);
    }
    return res;
}

}  // namespace cvq
