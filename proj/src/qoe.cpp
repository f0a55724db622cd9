#include "tcm/qoe.hpp"

#include <algorithm>
#include <cmath>

#include "tcm/rng.hpp"

namespace tcm {

MosEstimate make_estimate(double raw_mos) noexcept
{
    const double mos = std::clamp(raw_mos, kMosMin, kMosMax);
    return {mos, mos >= kAcceptableMos};
}

namespace {
void check_profile(const DelayProfile& p)
{
    if (p.network_delay_mean_ms < 0 || p.network_delay_stdev_ms < 0)
        throw std::invalid_argument("network delay and jitter must be non-negative");
    for (const double s : p.mux_delay_samples_ms)
        if (s < 0) throw std::invalid_argument("negative multiplexing delay sample");
}
} // namespace

DelayMoments combine_delay(const DelayProfile& profile)
{
    check_profile(profile);
    double mux_mean = 0.0;
    double mux_var = 0.0;
    if (!profile.mux_delay_samples_ms.empty()) {
        const auto n = static_cast<double>(profile.mux_delay_samples_ms.size());
        for (const double s : profile.mux_delay_samples_ms) mux_mean += s;
        mux_mean /= n;
        for (const double s : profile.mux_delay_samples_ms) mux_var += (s - mux_mean) * (s - mux_mean);
        mux_var /= n;
    }
    const double sd = profile.network_delay_stdev_ms;
    return {profile.network_delay_mean_ms + mux_mean, std::sqrt(sd * sd + mux_var)};
}

DelayMoments sample_combined_delay(const DelayProfile& profile, std::size_t n_samples, std::uint64_t seed)
{
    check_profile(profile);
    if (n_samples == 0) throw std::invalid_argument("sample_combined_delay needs at least one sample");
    Rng rng(seed);
    const auto& mux = profile.mux_delay_samples_ms;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        double d = rng.normal(profile.network_delay_mean_ms, profile.network_delay_stdev_ms);
        if (!mux.empty()) d += mux[rng.uniform_int(0, mux.size() - 1)];
        sum += d;
        sum_sq += d * d;
    }
    const auto n = static_cast<double>(n_samples);
    const double mean = sum / n;
    return {mean, std::sqrt(std::max(0.0, sum_sq / n - mean * mean))};
}

LogisticQoeModel::LogisticQoeModel(Params params) : params_(params)
{
    if (!(params_.mos_max > kMosMin && params_.mos_max <= kMosMax))
        throw QoeConfigError("logistic model: mos_max must lie in (1, 5]");
    if (!(params_.scale_ms > 0)) throw QoeConfigError("logistic model: scale_ms must be positive");
    if (params_.jitter_weight < 0) throw QoeConfigError("logistic model: jitter_weight must be non-negative");
}

double LogisticQoeModel::mos(double mean_delay_ms, double jitter_ms) const
{
    const auto& p = params_;
    const double effective = std::max(0.0, mean_delay_ms) + p.jitter_weight * std::max(0.0, jitter_ms);
    const double at_zero = 1.0 + std::exp(-p.midpoint_ms / p.scale_ms);
    const double here = 1.0 + std::exp((effective - p.midpoint_ms) / p.scale_ms);
    return kMosMin + (p.mos_max - kMosMin) * at_zero / here;
}

void QoeRegistry::add(std::string name, Factory factory)
{
    factories_[std::move(name)] = std::move(factory);
}

std::unique_ptr<QoeModel> QoeRegistry::create(std::string_view name, const QoeParams& params) const
{
    const auto it = factories_.find(name);
    if (it == factories_.end()) throw QoeConfigError("unknown QoE model '" + std::string(name) + "'");
    return it->second(params);
}

std::vector<std::string> QoeRegistry::names() const
{
    std::vector<std::string> out;
    for (const auto& [name, f] : factories_) out.push_back(name);
    return out;
}

QoeRegistry QoeRegistry::with_builtins()
{
    QoeRegistry r;
    r.add("logistic", [](const QoeParams& params) {
        LogisticQoeModel::Params p;
        for (const auto& [key, value] : params) {
            if (key == "mos_max")
                p.mos_max = value;
            else if (key == "midpoint_ms")
                p.midpoint_ms = value;
            else if (key == "scale_ms")
                p.scale_ms = value;
            else if (key == "jitter_weight")
                p.jitter_weight = value;
            else
                throw QoeConfigError("logistic model: unknown parameter '" + key + "'");
        }
        return std::make_unique<LogisticQoeModel>(p);
    });
    return r;
}

MosEstimate estimate(const QoeModel& model, const DelayProfile& profile)
{
    const DelayMoments total = combine_delay(profile);
    return make_estimate(model.mos(total.mean_ms, total.stdev_ms));
}

} // namespace tcm
