#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xsalpha/analytics.hpp"
#include "xsalpha/panel.hpp"

namespace xsa {

/// Seed for a named sub-stream of `root`; independent streams stay
/// unchanged when another stage is added.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stream);

struct SignalSpec {
    std::string name;
    /// Expected next-day log return per unit of the signal.
    double beta = 0.0;
    /// AR(1) persistence; the signal has unit stationary variance.
    double phi = 0.0;
};

struct SyntheticSpec {
    std::size_t n_securities = 50;
    std::size_t n_days = 500;
    Date start = Date::from_ymd(2015, 1, 2);
    std::vector<SignalSpec> signals{{"sig1", 0.002, 0.9}};
    /// Daily idiosyncratic volatility (the median; names vary around it).
    double noise_vol = 0.02;
    double market_mean = 0.0003;
    double market_vol = 0.01;
    std::size_t n_sectors = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    /// Columns: close, ret, the signals, cap, dollar_volume, bid, ask, sector.
    Panel panel;
    std::vector<SignalSpec> truth;
    /// Mkt (cross-sectional mean return) and five seeded noise factors.
    FactorPanel factors;
};

/// Weekday calendar; ret at row t is realized from t-1 to t and loads on
/// the signals observed at t-1.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

} // namespace xsa
