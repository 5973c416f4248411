#include "xsalpha/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "xsalpha/errors.hpp"
#include "xsalpha/parallel.hpp"
#include "xsalpha/types.hpp"

namespace xsa {

void BoostParams::validate() const {
    if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw std::invalid_argument("learning_rate must be in (0, 1]");
    if (min_leaf_count < 1) throw std::invalid_argument("min_leaf_count must be >= 1");
    if (!(l2_leaf_penalty >= 0.0)) throw std::invalid_argument("l2_leaf_penalty must be >= 0");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0))
        throw std::invalid_argument("subsample_fraction must be in (0, 1]");
}

namespace {

struct Stats {
    double g = 0.0; // sum of residuals
    double n = 0.0; // row count
};

struct Candidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    Stats left;
    Stats right;
};

double leaf_score(const Stats& s, double lambda) { return s.n + lambda > 0.0 ? s.g * s.g / (s.n + lambda) : 0.0; }

/// Threshold strictly between a < b that sends a left and b right.
double midpoint(double a, double b) {
    const double m = a + 0.5 * (b - a);
    return m < b ? m : a;
}

class TreeGrower {
  public:
    TreeGrower(const FeatureMatrix& x, const std::vector<std::vector<std::uint32_t>>& sorted, const BoostParams& p)
        : x_(x), sorted_(sorted), p_(p) {}

    /// `node_of[r]` is 0 for rows in this tree's sample and -1 otherwise.
    BoostedTrees::Tree grow(std::span<const double> residual, std::vector<int>& node_of) {
        BoostedTrees::Tree tree(1);
        std::vector<Stats> totals(1);
        for (std::size_t r = 0; r < x_.rows; ++r)
            if (node_of[r] == 0) {
                totals[0].g += residual[r];
                totals[0].n += 1.0;
            }
        std::vector<int> frontier{0};
        for (int depth = 0; depth < p_.max_depth && !frontier.empty(); ++depth) {
            const auto best = find_splits(residual, node_of, frontier, totals);
            std::vector<int> next_frontier;
            for (std::size_t k = 0; k < frontier.size(); ++k) {
                const Candidate& c = best[k];
                if (c.feature < 0) continue;
                const int id = frontier[k];
                const int left = static_cast<int>(tree.size());
                tree.push_back({});
                tree.push_back({});
                totals.push_back(c.left);
                totals.push_back(c.right);
                auto& node = tree[static_cast<std::size_t>(id)];
                node.feature = c.feature;
                node.threshold = c.threshold;
                node.default_left = c.default_left;
                node.left = left;
                node.right = left + 1;
                next_frontier.push_back(left);
                next_frontier.push_back(left + 1);
            }
            if (next_frontier.empty()) break;
            for (std::size_t r = 0; r < x_.rows; ++r) {
                const int id = node_of[r];
                if (id < 0) continue;
                const auto& node = tree[static_cast<std::size_t>(id)];
                if (node.is_leaf()) continue;
                const double v = x_.at(r, static_cast<std::size_t>(node.feature));
                const bool go_left = is_missing(v) ? node.default_left : v <= node.threshold;
                node_of[r] = go_left ? node.left : node.right;
            }
            frontier = std::move(next_frontier);
        }
        for (std::size_t id = 0; id < tree.size(); ++id) {
            if (!tree[id].is_leaf()) continue;
            const Stats& s = totals[id];
            tree[id].value = s.n + p_.l2_leaf_penalty > 0.0 ? p_.learning_rate * s.g / (s.n + p_.l2_leaf_penalty) : 0.0;
        }
        return tree;
    }

  private:
    std::vector<Candidate> find_splits(std::span<const double> residual, const std::vector<int>& node_of,
                                       const std::vector<int>& frontier, const std::vector<Stats>& totals) const {
        const int max_id = *std::max_element(frontier.begin(), frontier.end());
        std::vector<int> slot(static_cast<std::size_t>(max_id) + 1, -1);
        for (std::size_t k = 0; k < frontier.size(); ++k) slot[static_cast<std::size_t>(frontier[k])] = static_cast<int>(k);

        std::vector<std::vector<Candidate>> per_feature(x_.cols, std::vector<Candidate>(frontier.size()));
        parallel_for(x_.cols, [&](std::size_t f) {
            scan_feature(f, residual, node_of, frontier, slot, totals, per_feature[f]);
        });

        // Deterministic reduction: first feature with the strictly largest gain wins.
        std::vector<Candidate> best(frontier.size());
        for (std::size_t f = 0; f < x_.cols; ++f)
            for (std::size_t k = 0; k < frontier.size(); ++k)
                if (per_feature[f][k].feature >= 0 && per_feature[f][k].gain > best[k].gain) best[k] = per_feature[f][k];
        return best;
    }

    void scan_feature(std::size_t f, std::span<const double> residual, const std::vector<int>& node_of,
                      const std::vector<int>& frontier, const std::vector<int>& slot, const std::vector<Stats>& totals,
                      std::vector<Candidate>& out) const {
        const auto& order = sorted_[f];
        const std::size_t m = frontier.size();
        const double lambda = p_.l2_leaf_penalty;
        const double min_leaf = static_cast<double>(p_.min_leaf_count);

        auto slot_of = [&](std::uint32_t r) -> int {
            const int id = node_of[r];
            if (id < 0 || static_cast<std::size_t>(id) >= slot.size()) return -1;
            return slot[static_cast<std::size_t>(id)];
        };

        std::vector<Stats> present(m);
        for (auto r : order) {
            const int k = slot_of(r);
            if (k < 0) continue;
            present[static_cast<std::size_t>(k)].g += residual[r];
            present[static_cast<std::size_t>(k)].n += 1.0;
        }
        std::vector<Stats> missing(m);
        std::vector<double> parent_score(m);
        for (std::size_t k = 0; k < m; ++k) {
            const Stats& t = totals[static_cast<std::size_t>(frontier[k])];
            missing[k] = {t.g - present[k].g, t.n - present[k].n};
            parent_score[k] = leaf_score(t, lambda);
        }

        std::vector<Stats> acc(m);
        std::vector<double> last(m, 0.0);
        auto consider = [&](std::size_t k, double threshold) {
            const Stats l = acc[k];
            const Stats r{present[k].g - l.g, present[k].n - l.n};
            const Stats miss = missing[k];
            auto evaluate = [&](const Stats& left, const Stats& right, bool default_left) {
                if (left.n < min_leaf || right.n < min_leaf) return;
                const double gain = leaf_score(left, lambda) + leaf_score(right, lambda) - parent_score[k];
                if (gain > out[k].gain + 1e-12 * (1.0 + std::abs(parent_score[k]))) {
                    out[k] = {gain, static_cast<int>(f), threshold, default_left, left, right};
                }
            };
            if (miss.n > 0.0) {
                evaluate({l.g + miss.g, l.n + miss.n}, r, true);
                evaluate(l, {r.g + miss.g, r.n + miss.n}, false);
            } else {
                evaluate(l, r, l.n >= r.n);
            }
        };
        for (auto r : order) {
            const int ks = slot_of(r);
            if (ks < 0) continue;
            const auto k = static_cast<std::size_t>(ks);
            const double v = x_.at(r, f);
            if (acc[k].n > 0.0 && v > last[k]) consider(k, midpoint(last[k], v));
            acc[k].g += residual[r];
            acc[k].n += 1.0;
            last[k] = v;
        }
    }

    const FeatureMatrix& x_;
    const std::vector<std::vector<std::uint32_t>>& sorted_;
    const BoostParams& p_;
};

double tree_output(const BoostedTrees::Tree& tree, std::span<const double> row) {
    std::size_t id = 0;
    while (!tree[id].is_leaf()) {
        const auto& n = tree[id];
        const double v = row[static_cast<std::size_t>(n.feature)];
        const bool go_left = is_missing(v) ? n.default_left : v <= n.threshold;
        id = static_cast<std::size_t>(go_left ? n.left : n.right);
    }
    return tree[id].value;
}

} // namespace

BoostedTrees BoostedTrees::fit(const FeatureMatrix& x, std::span<const double> y, const BoostParams& params) {
    params.validate();
    if (y.size() != x.rows) throw std::invalid_argument("fit: target length differs from matrix rows");
    if (x.rows == 0) throw DataError("fit: empty training set");
    if (x.rows < static_cast<std::size_t>(params.min_leaf_count))
        throw DataError(fmt::format("fit: {} training rows, fewer than min_leaf_count {}", x.rows, params.min_leaf_count));
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("fit: training target contains missing or non-finite values");

    std::vector<std::vector<std::uint32_t>> sorted(x.cols);
    for (std::size_t f = 0; f < x.cols; ++f) {
        auto& order = sorted[f];
        for (std::size_t r = 0; r < x.rows; ++r)
            if (!is_missing(x.at(r, f))) order.push_back(static_cast<std::uint32_t>(r));
        std::stable_sort(order.begin(), order.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return x.at(a, f) < x.at(b, f); });
    }

    BoostedTrees model;
    model.feature_names_ = x.names;
    if (model.feature_names_.size() != x.cols) {
        model.feature_names_.clear();
        for (std::size_t f = 0; f < x.cols; ++f) model.feature_names_.push_back(fmt::format("f{}", f));
    }

    std::vector<double> pred(x.rows, 0.0);
    std::vector<double> residual(x.rows);
    std::vector<int> node_of(x.rows);
    std::vector<std::uint32_t> perm(x.rows);
    std::mt19937_64 rng(params.seed);
    const auto sample_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(params.subsample_fraction * static_cast<double>(x.rows))));
    TreeGrower grower(x, sorted, params);

    for (int t = 0; t < params.n_trees; ++t) {
        for (std::size_t r = 0; r < x.rows; ++r) residual[r] = y[r] - pred[r];
        if (sample_size >= x.rows) {
            std::fill(node_of.begin(), node_of.end(), 0);
        } else {
            std::iota(perm.begin(), perm.end(), 0u);
            std::fill(node_of.begin(), node_of.end(), -1);
            for (std::size_t i = 0; i < sample_size; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng() % (x.rows - i));
                std::swap(perm[i], perm[j]);
                node_of[perm[i]] = 0;
            }
        }
        model.trees_.push_back(grower.grow(residual, node_of));
        double sse = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) {
            pred[r] += tree_output(model.trees_.back(), x.row(r));
            sse += (y[r] - pred[r]) * (y[r] - pred[r]);
        }
        model.training_mse_.push_back(sse / static_cast<double>(x.rows));
    }
    return model;
}

double BoostedTrees::predict_row(std::span<const double> features) const {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree_output(tree, features);
    return sum;
}

std::vector<double> BoostedTrees::predict(const FeatureMatrix& x) const {
    if (x.cols != feature_names_.size() && !trees_.empty())
        throw std::invalid_argument(
            fmt::format("predict: matrix has {} columns, model expects {}", x.cols, feature_names_.size()));
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = predict_row(x.row(r));
    return out;
}

void BoostedTrees::write_text(std::ostream& out) const {
    out << "xsalpha-boosted-trees 1\n";
    out << "features " << feature_names_.size() << '\n';
    for (std::size_t f = 0; f < feature_names_.size(); ++f) out << "feature " << f << ' ' << feature_names_[f] << '\n';
    out << "trees " << trees_.size() << '\n';
    for (std::size_t t = 0; t < trees_.size(); ++t) {
        const auto& tree = trees_[t];
        out << "tree " << t << " nodes " << tree.size() << '\n';
        for (std::size_t id = 0; id < tree.size(); ++id) {
            const auto& n = tree[id];
            if (n.is_leaf()) {
                out << "node " << id << " leaf value=" << format_double(n.value) << '\n';
            } else {
                out << "node " << id << " split feature=" << n.feature << " threshold=" << format_double(n.threshold)
                    << " default=" << (n.default_left ? "left" : "right") << " left=" << n.left
                    << " right=" << n.right << '\n';
            }
        }
    }
}

namespace {

std::string field_value(const std::string& token, std::string_view key) {
    if (token.rfind(key, 0) != 0 || token.size() <= key.size() || token[key.size()] != '=')
        throw DataError(fmt::format("model text: expected '{}=...', found '{}'", key, token));
    return token.substr(key.size() + 1);
}

double parse_number(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw DataError(fmt::format("model text: bad number '{}'", s));
    return v;
}

} // namespace

BoostedTrees BoostedTrees::read_text(std::istream& in) {
    BoostedTrees model;
    std::string line;
    auto next_line = [&]() -> std::istringstream {
        if (!std::getline(in, line)) throw DataError("model text: unexpected end of input");
        return std::istringstream(line);
    };
    {
        auto ls = next_line();
        std::string magic;
        int version = 0;
        ls >> magic >> version;
        if (magic != "xsalpha-boosted-trees" || version != 1) throw DataError("model text: unrecognised header");
    }
    std::size_t n_features = 0;
    {
        auto ls = next_line();
        std::string kw;
        ls >> kw >> n_features;
        if (kw != "features") throw DataError("model text: expected 'features'");
    }
    for (std::size_t f = 0; f < n_features; ++f) {
        auto ls = next_line();
        std::string kw, name;
        std::size_t idx = 0;
        ls >> kw >> idx >> name;
        if (kw != "feature" || idx != f) throw DataError("model text: bad feature line");
        model.feature_names_.push_back(name);
    }
    std::size_t n_trees = 0;
    {
        auto ls = next_line();
        std::string kw;
        ls >> kw >> n_trees;
        if (kw != "trees") throw DataError("model text: expected 'trees'");
    }
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::size_t n_nodes = 0;
        {
            auto ls = next_line();
            std::string kw, kw2;
            std::size_t idx = 0;
            ls >> kw >> idx >> kw2 >> n_nodes;
            if (kw != "tree" || idx != t || kw2 != "nodes") throw DataError("model text: bad tree line");
        }
        Tree tree(n_nodes);
        for (std::size_t id = 0; id < n_nodes; ++id) {
            auto ls = next_line();
            std::string kw, kind;
            std::size_t idx = 0;
            ls >> kw >> idx >> kind;
            if (kw != "node" || idx != id) throw DataError("model text: bad node line");
            std::string a, b, c, d, e;
            Node& n = tree[id];
            if (kind == "leaf") {
                ls >> a;
                n.value = parse_number(field_value(a, "value"));
            } else if (kind == "split") {
                ls >> a >> b >> c >> d >> e;
                n.feature = std::stoi(field_value(a, "feature"));
                n.threshold = parse_number(field_value(b, "threshold"));
                n.default_left = field_value(c, "default") == "left";
                n.left = std::stoi(field_value(d, "left"));
                n.right = std::stoi(field_value(e, "right"));
                if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= n_features || n.left <= static_cast<int>(id) ||
                    n.right <= static_cast<int>(id) || static_cast<std::size_t>(n.left) >= n_nodes ||
                    static_cast<std::size_t>(n.right) >= n_nodes)
                    throw DataError("model text: split references an invalid node or feature");
            } else {
                throw DataError(fmt::format("model text: unknown node kind '{}'", kind));
            }
        }
        model.trees_.push_back(std::move(tree));
    }
    return model;
}

} // namespace xsa
