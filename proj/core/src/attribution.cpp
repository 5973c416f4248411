#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "xsalpha/analytics.hpp"
#include "xsalpha/errors.hpp"

namespace xsa {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_value(const std::string& s, std::size_t row) {
    if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return kMissing;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw DataError(fmt::format("factor file row {}: cannot parse number '{}'", row, s));
    return v;
}

} // namespace

FactorPanel read_factor_panel(std::istream& in, char delimiter) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("factor file: missing header");
    const auto header = split(line, delimiter);
    if (header.size() < 2 || header[0] != "date") throw DataError("factor file: header must start with 'date'");
    FactorPanel fp;
    std::vector<std::size_t> factor_cols;
    std::optional<std::size_t> rf_col;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c] == "RF") {
            rf_col = c;
        } else {
            fp.names.push_back(header[c]);
            factor_cols.push_back(c);
        }
    }
    if (fp.names.empty()) throw DataError("factor file: no factor columns");
    fp.columns.resize(fp.names.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        const auto fields = split(line, delimiter);
        if (fields.size() != header.size())
            throw DataError(fmt::format("factor file row {}: expected {} fields, got {}", row, header.size(), fields.size()));
        const auto d = parse_date(fields[0]);
        if (!d) throw DataError(fmt::format("factor file row {}: cannot parse date '{}'", row, fields[0]));
        fp.dates.push_back(*d);
        for (std::size_t k = 0; k < factor_cols.size(); ++k) fp.columns[k].push_back(parse_value(fields[factor_cols[k]], row));
        if (rf_col) fp.rf.push_back(parse_value(fields[*rf_col], row));
    }
    // Sort by date and reject duplicates.
    std::vector<std::size_t> order(fp.dates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fp.dates[a] < fp.dates[b]; });
    FactorPanel sorted;
    sorted.names = fp.names;
    sorted.columns.resize(fp.names.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t r = order[i];
        if (i > 0 && fp.dates[r] == sorted.dates.back())
            throw DataError(fmt::format("factor file: duplicate date {}", format_date(fp.dates[r])));
        sorted.dates.push_back(fp.dates[r]);
        for (std::size_t k = 0; k < fp.columns.size(); ++k) sorted.columns[k].push_back(fp.columns[k][r]);
        if (!fp.rf.empty()) sorted.rf.push_back(fp.rf[r]);
    }
    return sorted;
}

FactorPanel load_factor_panel(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open factor file {}", path.string()));
    return read_factor_panel(in, path.extension() == ".tsv" ? '\t' : ',');
}

FactorRegression factor_attribution(const ReturnSeries& strategy, const FactorPanel& factors,
                                    const AttributionOptions& options) {
    if (options.lags < 0) throw std::invalid_argument("factor_attribution: lags must be >= 0");
    const std::size_t k = factors.names.size();

    std::vector<double> y;
    std::vector<std::size_t> frow;
    for (std::size_t i = 0; i < strategy.size(); ++i) {
        const auto it = std::lower_bound(factors.dates.begin(), factors.dates.end(), strategy.dates[i]);
        if (it == factors.dates.end() || *it != strategy.dates[i]) continue;
        const auto pos = static_cast<std::ptrdiff_t>(it - factors.dates.begin()) + options.shift;
        if (pos < 0 || static_cast<std::size_t>(pos) >= factors.dates.size()) continue;
        const auto r = static_cast<std::size_t>(pos);
        bool ok = !is_missing(strategy.values[i]);
        for (std::size_t c = 0; c < k && ok; ++c) ok = !is_missing(factors.columns[c][r]);
        if (!ok) continue;
        y.push_back(strategy.values[i]);
        frow.push_back(r);
    }
    const std::size_t n = y.size();
    if (n < options.min_observations || n <= k + 1)
        throw DataError(fmt::format("factor_attribution: {} overlapping observations, need {}", n,
                                    std::max(options.min_observations, k + 2)));

    Eigen::MatrixXd X(n, k + 1);
    Eigen::VectorXd Y(n);
    for (std::size_t t = 0; t < n; ++t) {
        X(t, 0) = 1.0;
        for (std::size_t c = 0; c < k; ++c) X(t, c + 1) = factors.columns[c][frow[t]];
        Y(t) = y[t];
    }

    // Add columns one at a time so a rank drop names the offending factor.
    for (std::size_t c = 1; c <= k; ++c) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X.leftCols(c + 1));
        qr.setThreshold(1e-10);
        if (qr.rank() < static_cast<Eigen::Index>(c + 1)) {
            const std::string name = factors.names[c - 1];
            throw NumericError(fmt::format("factor_attribution: singular design, column '{}' is collinear with {}", name,
                                           c == 1 ? std::string("the intercept")
                                                  : fmt::format("earlier columns ({})",
                                                                fmt::join(factors.names.begin(),
                                                                          factors.names.begin() +
                                                                              static_cast<std::ptrdiff_t>(c - 1),
                                                                          ", "))));
        }
    }

    const Eigen::MatrixXd XtX = X.transpose() * X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
    const Eigen::VectorXd beta = ldlt.solve(X.transpose() * Y);
    const Eigen::VectorXd e = Y - X * beta;

    // Bartlett-weighted HAC meat.
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd U(n, p);
    for (std::size_t t = 0; t < n; ++t) U.row(static_cast<Eigen::Index>(t)) = X.row(static_cast<Eigen::Index>(t)) * e(static_cast<Eigen::Index>(t));
    S = U.transpose() * U;
    for (int l = 1; l <= options.lags && static_cast<std::size_t>(l) < n; ++l) {
        const double w = 1.0 - static_cast<double>(l) / static_cast<double>(options.lags + 1);
        const auto m = static_cast<Eigen::Index>(n) - l;
        const Eigen::MatrixXd G = U.bottomRows(m).transpose() * U.topRows(m);
        S += w * (G + G.transpose());
    }
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd V = inv * S * inv;

    FactorRegression out;
    out.n = n;
    out.names = factors.names;
    auto t_of = [&](Eigen::Index j) {
        const double se = std::sqrt(std::max(V(j, j), 0.0));
        return se > 0.0 ? beta(j) / se : (beta(j) == 0.0 ? 0.0 : kMissing);
    };
    out.alpha_daily = beta(0);
    out.alpha_annual = beta(0) * kTradingDays;
    out.alpha_t = t_of(0);
    for (std::size_t c = 0; c < k; ++c) {
        out.betas.push_back(beta(static_cast<Eigen::Index>(c + 1)));
        out.t_stats.push_back(t_of(static_cast<Eigen::Index>(c + 1)));
    }
    const double ybar = Y.mean();
    const double sst = (Y.array() - ybar).square().sum();
    const double sse = e.squaredNorm();
    out.r_squared = sst > 0.0 ? std::clamp(1.0 - sse / sst, 0.0, 1.0) : 0.0;
    return out;
}

} // namespace xsa
