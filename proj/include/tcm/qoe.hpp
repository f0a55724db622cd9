#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tcm {

inline constexpr double kMosMin = 1.0;
inline constexpr double kMosMax = 5.0;
inline constexpr double kAcceptableMos = 3.5;

struct DelayProfile
{
    double network_delay_mean_ms = 0.0;
    double network_delay_stdev_ms = 0.0;
    /// Added multiplexing delay of individual packets.
    std::vector<double> mux_delay_samples_ms;
};

struct DelayMoments
{
    double mean_ms = 0.0;
    double stdev_ms = 0.0;
};

struct MosEstimate
{
    double mos = kMosMin;
    bool acceptable = false;
};

/// Clamps to [1, 5] and applies the 3.5 acceptability threshold.
MosEstimate make_estimate(double raw_mos) noexcept;

/// Network and multiplexing delays are independent, so means and variances
/// add. Jitter is the standard deviation of the total one-way delay.
DelayMoments combine_delay(const DelayProfile& profile);

/// Monte Carlo counterpart of combine_delay: normal network delay plus a
/// uniformly chosen mux sample.
DelayMoments sample_combined_delay(const DelayProfile& profile, std::size_t n_samples, std::uint64_t seed);

class QoeConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Maps total mean delay and jitter to a MOS value.
class QoeModel
{
  public:
    virtual ~QoeModel() = default;
    virtual std::string_view name() const noexcept = 0;
    /// Unclamped score; estimate() clamps it.
    virtual double mos(double mean_delay_ms, double jitter_ms) const = 0;
};

/// MOS falls along a logistic curve in the effective delay
/// mean + jitter_weight * jitter, normalized so zero delay scores mos_max.
class LogisticQoeModel final : public QoeModel
{
  public:
    struct Params
    {
        double mos_max = 4.5;
        double midpoint_ms = 160.0;
        double scale_ms = 15.0;
        double jitter_weight = 1.0;
    };

    LogisticQoeModel() : LogisticQoeModel(Params{}) {}
    explicit LogisticQoeModel(Params params);

    std::string_view name() const noexcept override { return "logistic"; }
    double mos(double mean_delay_ms, double jitter_ms) const override;
    const Params& params() const noexcept { return params_; }

  private:
    Params params_;
};

using QoeParams = std::map<std::string, double>;

class QoeRegistry
{
  public:
    using Factory = std::function<std::unique_ptr<QoeModel>(const QoeParams&)>;

    void add(std::string name, Factory factory);
    /// Throws QoeConfigError for an unknown name or parameter.
    std::unique_ptr<QoeModel> create(std::string_view name, const QoeParams& params = {}) const;
    std::vector<std::string> names() const;

    /// Registry holding the built-in "logistic" model.
    static QoeRegistry with_builtins();

  private:
    std::map<std::string, Factory, std::less<>> factories_;
};

MosEstimate estimate(const QoeModel& model, const DelayProfile& profile);

} // namespace tcm
