#include "blendimg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "blendimg/imaging.hpp"
#include "parallel.hpp"

namespace blendimg {

void RunningStats::push(const std::vector<double> &x) {
    if (x.size() != mean_.size()) throw std::invalid_argument("RunningStats::push: dimension mismatch");
    ++n_;
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double delta = x[i] - mean_[i];
        mean_[i] += delta * inv;
        m2_[i] += delta * (x[i] - mean_[i]);
    }
}

void RunningStats::merge(const RunningStats &o) {
    if (o.dim() != dim()) throw std::invalid_argument("RunningStats::merge: dimension mismatch");
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    const double n = na + nb;
    for (std::size_t i = 0; i < dim(); ++i) {
        const double delta = o.mean_[i] - mean_[i];
        mean_[i] += delta * nb / n;
        m2_[i] += o.m2_[i] + delta * delta * na * nb / n;
    }
    n_ += o.n_;
}

std::vector<double> RunningStats::variance() const {
    std::vector<double> v(dim(), 0.0);
    if (n_ < 2) return v;
    for (std::size_t i = 0; i < dim(); ++i) v[i] = std::max(0.0, m2_[i]) / static_cast<double>(n_ - 1);
    return v;
}

std::size_t EnsembleStats::index_of(const Point3 &p) const {
    const double scale = std::max(1.0, p.norm());
    for (std::size_t i = 0; i < points.size(); ++i)
        if (distance(points[i], p) <= 1e-9 * scale) return i;
    throw std::invalid_argument("ensemble grid does not contain the requested point");
}

SourceSpectra realization_sources(const EnsembleConfig &cfg, std::uint64_t seed, std::size_t index) {
    const std::uint64_t s = cfg.repeat_root_seed ? seed : derive_seed(seed, index);
    if (cfg.source == SourceKind::Blended) {
        const auto delays = sample_delays(cfg.delays, cfg.array.n_sources(), s);
        return blended_sources(cfg.pulse, delays, cfg.grid);
    }
    return stationary_sources(cfg.noise, cfg.array.n_sources(), cfg.grid, s);
}

std::vector<double> realization_image(const EnsembleConfig &cfg, std::uint64_t seed, std::size_t index) {
    const SourceSpectra src = realization_sources(cfg, seed, index);
    const DataMatrix d = born_forward(cfg.pert, cfg.quad, cfg.array, src, cfg.grid, cfg.c0);
    return apply_adjoint(d, cfg.array, src, cfg.points, cfg.grid, cfg.c0).values;
}

EnsembleStats run_ensemble(const EnsembleConfig &cfg, std::size_t n, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("run_ensemble: need at least two realizations");
    if (cfg.points.empty()) throw std::invalid_argument("run_ensemble: empty evaluation grid");
    validate_grid(cfg.points, cfg.array);
    constexpr std::size_t kBlock = 8;
    const std::size_t n_blocks = (n + kBlock - 1) / kBlock;
    std::vector<RunningStats> blocks(n_blocks, RunningStats(cfg.points.size()));
    detail::parallel_for(n_blocks, cfg.workers, [&](std::size_t b) {
        const std::size_t hi = std::min(n, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < hi; ++i) blocks[b].push(realization_image(cfg, seed, i));
    });
    for (std::size_t width = 1; width < n_blocks; width *= 2)
        for (std::size_t i = 0; i + width < n_blocks; i += 2 * width) blocks[i].merge(blocks[i + width]);

    const RunningStats &all = blocks.front();
    EnsembleStats out;
    out.n_realizations = all.count();
    out.points = cfg.points;
    out.mean = all.mean();
    const auto var = all.variance();
    out.std.resize(var.size());
    out.mc_error.resize(var.size());
    for (std::size_t i = 0; i < var.size(); ++i) {
        out.std[i] = std::sqrt(var[i]);
        out.mc_error[i] = out.std[i] / std::sqrt(static_cast<double>(out.n_realizations));
    }
    return out;
}

ScalingFit fit_scaling(const std::vector<std::pair<double, double>> &samples, const std::string &variable) {
    if (samples.size() < 4) throw std::invalid_argument("fit_scaling: need at least four samples");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    std::vector<double> x, y;
    for (const auto &[v, o] : samples) {
        if (!(v > 0.0)) throw std::invalid_argument("fit_scaling: sweep values must be positive");
        if (!(o > 0.0)) throw std::invalid_argument("fit_scaling: observables must be positive");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        x.push_back(std::log(v));
        y.push_back(std::log(o));
    }
    if (hi / lo < 8.0 * (1.0 - 1e-12)) throw std::invalid_argument("fit_scaling: samples must span at least a factor 8");
    const LinearFit lf = fit_linear(x, y);
    return {variable, samples, lf.slope, lf.intercept, lf.r2};
}

LinearFit fit_linear(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_linear: need matching samples, at least two");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("fit_linear: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return f;
}

namespace {

double evaluate(const Monomial &m, double eps, double eta, double time) {
    return std::pow(eps, m.eps) * std::pow(eta, m.eta) * std::pow(std::abs(std::log(eps)), m.log_eps) *
           std::pow(time, m.time);
}

}  // namespace

bool StabilityReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const StabilityCheck &c) { return c.pass; });
}

StabilityReport stability_report(const EnsembleStats &stats, const AsymptoticPrediction &pred, const StabilityInputs &in) {
    if (in.far.empty()) throw std::invalid_argument("stability_report: empty far set");
    StabilityReport r;
    r.prediction = pred;
    r.n_realizations = stats.n_realizations;
    const std::size_t c = stats.index_of(in.center);
    r.center_mean = stats.mean[c];
    r.center_std = stats.std[c];
    for (const auto &p : in.far) {
        const std::size_t i = stats.index_of(p);
        r.far_mean = std::max(r.far_mean, std::abs(stats.mean[i]));
        r.far_std = std::max(r.far_std, stats.std[i]);
    }
    r.mean_contrast = r.far_mean > 0.0 ? std::abs(r.center_mean) / r.far_mean : std::numeric_limits<double>::infinity();
    const double far_typical = std::max(r.far_mean, r.far_std);
    r.typical_contrast = far_typical > 0.0 ? std::abs(r.center_mean) / far_typical : std::numeric_limits<double>::infinity();

    const double ratio = r.center_std > 0.0 ? std::abs(r.center_mean) / r.center_std : std::numeric_limits<double>::infinity();
    r.checks.push_back({"center mean/std", ratio, 0.5 * std::sqrt(in.time_scale), ratio >= 0.5 * std::sqrt(in.time_scale),
                        ">= 0.5*sqrt(time scale)"});

    if (in.eps > 0.0 && in.eta > 0.0) {
        const AsymptoticPrediction far = predicted_orders(pred.kind, Location::Far, pred.source);
        const AsymptoticPrediction ctr = predicted_orders(pred.kind, Location::Center, pred.source);
        const double centre_order = evaluate(ctr.mean, in.eps, in.eta, in.time_scale);
        const double far_order = std::max(evaluate(far.mean, in.eps, in.eta, in.time_scale),
                                          evaluate(far.std, in.eps, in.eta, in.time_scale));
        const double predicted = centre_order / far_order;
        r.checks.push_back({"typical contrast", r.typical_contrast, 0.1 * predicted, r.typical_contrast >= 0.1 * predicted,
                            ">= 0.1*predicted order (order of magnitude)"});
    }
    return r;
}

std::string StabilityReport::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(prediction.kind);
    j["source"] = to_string(prediction.source);
    j["n_realizations"] = n_realizations;
    j["center"] = {{"mean", center_mean}, {"std", center_std}};
    j["far"] = {{"mean_max", far_mean}, {"std_max", far_std}};
    j["mean_contrast"] = mean_contrast;
    j["typical_contrast"] = typical_contrast;
    j["predicted"] = {{"center_mean", prediction.mean.str(prediction.source)},
                      {"center_std", prediction.std.str(prediction.source)}};
    auto &arr = j["checks"] = nlohmann::json::array();
    for (const auto &c : checks)
        arr.push_back({{"name", c.name}, {"measured", c.measured}, {"threshold", c.threshold}, {"pass", c.pass}, {"rule", c.rule}});
    j["pass"] = all_pass();
    return j.dump(2);
}

std::string StabilityReport::to_text() const {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-22s %s (%s sources), %zu realizations\n", "configuration",
                  to_string(prediction.kind).c_str(), to_string(prediction.source).c_str(), n_realizations);
    out += line;
    std::snprintf(line, sizeof line, "%-22s %14.6e   std %14.6e\n", "center mean", center_mean, center_std);
    out += line;
    std::snprintf(line, sizeof line, "%-22s %14.6e   std %14.6e\n", "far max |mean|", far_mean, far_std);
    out += line;
    std::snprintf(line, sizeof line, "%-22s %14.6e\n", "mean contrast", mean_contrast);
    out += line;
    std::snprintf(line, sizeof line, "%-22s %14.6e\n", "typical contrast", typical_contrast);
    out += line;
    for (const auto &c : checks) {
        std::snprintf(line, sizeof line, "%-22s %14.6e   %-4s %s (threshold %.6e)\n", c.name.c_str(), c.measured,
                      c.pass ? "PASS" : "FAIL", c.rule.c_str(), c.threshold);
        out += line;
    }
    return out;
}

}  // namespace blendimg
