#include "xsalpha/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace xsa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::vector<Date> weekdays(Date start, std::size_t n) {
    std::vector<Date> out;
    for (Date d = start; out.size() < n; d = Date(d.ordinal() + 1)) {
        // Day 0 (1970-01-01) was a Thursday.
        const int dow = ((d.ordinal() % 7) + 7 + 3) % 7; // 0 = Monday
        if (dow < 5) out.push_back(d);
    }
    return out;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t root, std::string_view stream) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(root ^ splitmix64(h));
}

void SyntheticSpec::validate() const {
    if (n_securities < 1) throw std::invalid_argument("synthetic: n_securities must be >= 1");
    if (n_days < 2) throw std::invalid_argument("synthetic: n_days must be >= 2");
    if (!(noise_vol >= 0.0) || !(market_vol >= 0.0)) throw std::invalid_argument("synthetic: volatilities must be >= 0");
    if (n_sectors < 1) throw std::invalid_argument("synthetic: n_sectors must be >= 1");
    for (const auto& s : signals) {
        if (s.name.empty()) throw std::invalid_argument("synthetic: signal without a name");
        if (!(s.phi > -1.0 && s.phi < 1.0)) throw std::invalid_argument("synthetic: phi must be in (-1, 1)");
    }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    const std::size_t n = spec.n_securities;
    const std::size_t T = spec.n_days;
    const std::size_t k = spec.signals.size();
    const auto dates = weekdays(spec.start, T);

    std::mt19937_64 rng(derive_seed(spec.seed, "synthetic"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // Static characteristics.
    std::vector<double> vol(n), shares(n), spread_bps(n), turnover_rate(n), price0(n);
    for (std::size_t i = 0; i < n; ++i) {
        vol[i] = spec.noise_vol * std::exp(0.3 * gauss(rng));
        shares[i] = std::exp(17.0 + 1.5 * gauss(rng));
        price0[i] = 20.0 + 80.0 * unif(rng);
        turnover_rate[i] = 0.004 * std::exp(0.5 * gauss(rng));
        spread_bps[i] = 2.0 + 20.0 * unif(rng) * unif(rng) * 3.0;
    }

    std::vector<double> market(T);
    for (auto& m : market) m = spec.market_mean + spec.market_vol * gauss(rng);

    std::vector<std::string> columns{"close", "ret"};
    for (const auto& s : spec.signals) columns.push_back(s.name);
    for (const char* c : {"cap", "dollar_volume", "bid", "ask", "sector"}) columns.emplace_back(c);
    PanelBuilder builder(columns);

    std::vector<std::vector<double>> ret_by_date(T, std::vector<double>(n));
    std::vector<double> row(columns.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = fmt::format("SEC{:04}", i + 1);
        std::vector<double> x(k);
        for (std::size_t j = 0; j < k; ++j) x[j] = gauss(rng);
        double log_p = std::log(price0[i]);
        double expected = 0.0; // E[ret_t | signals at t-1]
        for (std::size_t t = 0; t < T; ++t) {
            double r = kMissing;
            if (t > 0) {
                r = expected + market[t] + vol[i] * gauss(rng);
                log_p += r;
                ret_by_date[t][i] = r;
            }
            for (std::size_t j = 0; j < k; ++j) {
                if (t > 0) x[j] = spec.signals[j].phi * x[j] + std::sqrt(1.0 - spec.signals[j].phi * spec.signals[j].phi) * gauss(rng);
            }
            expected = 0.0;
            for (std::size_t j = 0; j < k; ++j) expected += spec.signals[j].beta * x[j];

            const double p = std::exp(log_p);
            const double cap = p * shares[i];
            const double dv = cap * turnover_rate[i] * std::exp(0.3 * gauss(rng));
            const double half = 0.5 * spread_bps[i] * 1e-4 * std::exp(0.2 * gauss(rng));
            std::size_t c = 0;
            row[c++] = p;
            row[c++] = r;
            for (std::size_t j = 0; j < k; ++j) row[c++] = x[j];
            row[c++] = cap;
            row[c++] = dv;
            row[c++] = p * (1.0 - half);
            row[c++] = p * (1.0 + half);
            row[c++] = static_cast<double>(i % spec.n_sectors);
            builder.add_row(id, dates[t], row);
        }
    }

    SyntheticData out;
    out.panel = std::move(builder).build();
    out.truth = spec.signals;

    std::mt19937_64 frng(derive_seed(spec.seed, "factors"));
    auto& f = out.factors;
    f.names = {"Mkt", "SMB", "HML", "RMW", "CMA", "Mom"};
    f.columns.assign(f.names.size(), {});
    for (std::size_t t = 1; t < T; ++t) {
        f.dates.push_back(dates[t]);
        double m = 0.0;
        for (double r : ret_by_date[t]) m += r;
        f.columns[0].push_back(m / static_cast<double>(n));
        for (std::size_t c = 1; c < f.names.size(); ++c) f.columns[c].push_back(0.005 * gauss(frng));
        f.rf.push_back(0.0);
    }
    return out;
}

} // namespace xsa
