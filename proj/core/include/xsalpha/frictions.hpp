#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "xsalpha/panel.hpp"
#include "xsalpha/portfolio.hpp"
#include "xsalpha/types.hpp"

namespace xsa {

enum class CostMode {
    /// Flat static_cost_bps per unit of weight traded.
    static_bps,
    /// Half-spread plus square-root impact per name.
    spread_impact,
};

struct CostParams {
    CostMode mode = CostMode::spread_impact;
    double impact_k = 0.3;
    /// Used in static mode, and per name when spread/impact inputs are missing.
    double static_cost_bps = 3.0;
    double aum = 100e6;
    int vol_window = 20;
    int adv_window = 21;
    /// Doubles every charge, reproducing the convention of quoting round-trip
    /// cost on each trade. Off by default: entry and exit are charged
    /// separately as they occur.
    bool round_trip = false;

    /// k = 0.3, the coefficient stated with the cost model.
    static CostParams impact_k_03();
    /// k = 0.2, the coefficient listed in the cost-table notes.
    static CostParams impact_k_02();

    void validate() const;
};

/// (ask - bid) / (2 mid). Missing when bid <= 0, ask < bid, or either is missing.
double spread_cost(double bid, double ask);

/// k sigma sqrt(Q / ADV). Missing when adv <= 0 or an input is missing.
double impact_cost(const CostParams& params, double sigma, double q_dollars, double adv_dollars);

struct CostColumns {
    std::string bid = "bid";
    std::string ask = "ask";
    std::string ret = "ret";
    std::string dollar_volume = "dollar_volume";
};

/// Adds `half_spread`, `sigma` (trailing sample std of log returns, at least
/// two observations) and `adv` (trailing median dollar volume) per row.
Panel compute_cost_inputs(const Panel& panel, const CostParams& params, const CostColumns& columns = {});

struct LiquidityRule {
    double min_adv_dollars = 1e6;
    double max_spread_bps = 50.0;
};

/// 1 = tradable. Requires the columns from compute_cost_inputs. A row is
/// excluded when its ADV is below the floor or its full quoted spread
/// (ask - bid) / mid exceeds the cap; rows with missing inputs are excluded.
std::vector<std::uint8_t> liquidity_filter(const Panel& cost_inputs, const LiquidityRule& rule = {});

/// Re-keys a row mask of `panel` onto the rows of `scores` (absent keys -> 0).
std::vector<std::uint8_t> align_mask(const std::vector<std::uint8_t>& mask, const Panel& panel,
                                     const ScorePanel& scores);

/// T_t = sum_i |w_{i,t} - w_{i,t-1}|, absent names at weight 0; the first
/// day counts the full establishment of the book.
ReturnSeries turnover(const WeightBook& book);

struct TradeRecord {
    Date date;
    std::string id;
    double delta_weight = 0.0;
    double spread_bps = 0.0;
    double impact_bps = 0.0;
    /// Static fallback used because spread or impact inputs were missing.
    bool fallback = false;
};

struct NetResult {
    ReturnSeries net;
    ReturnSeries cost;
    ReturnSeries turnover;
    std::vector<TradeRecord> ledger;
    /// Traded-notional weighted mean charge per unit traded, in bps.
    double average_cost_bps = 0.0;
    std::size_t fallback_trades = 0;
};

/// net_t = gross_t - sum_i |dw_{i,t}| c_{i,t}. Cost inputs are looked up on
/// (id, date) in `cost_inputs` (see compute_cost_inputs); unused in static
/// mode. `gross` must share the book's dates.
NetResult net_returns(const ReturnSeries& gross, const WeightBook& book, const Panel& cost_inputs,
                      const CostParams& params);

/// c* = mean(gross) / mean(turnover) in bps. Throws std::domain_error when
/// mean turnover is zero.
double break_even_cost_bps(const ReturnSeries& gross, const ReturnSeries& turnover);

void write_trade_ledger(std::ostream& out, const std::vector<TradeRecord>& ledger, char delimiter = ',');

} // namespace xsa
