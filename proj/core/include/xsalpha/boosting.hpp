#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace xsa {

struct BoostParams {
    int n_trees = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_leaf_count = 20;
    /// Leaf value is sum(residual) / (count + l2_leaf_penalty), then shrunk
    /// by learning_rate.
    double l2_leaf_penalty = 1.0;
    /// Fraction of rows drawn without replacement for each tree.
    double subsample_fraction = 1.0;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Dense row-major design matrix; missing entries are NaN.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::string> names;

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

/// Additive ensemble of depth-limited regression trees fit to squared error.
/// There is no intercept: the prediction is the plain sum of tree outputs.
class BoostedTrees {
  public:
    struct Node {
        int feature = -1; ///< -1 marks a leaf
        double threshold = 0.0;
        bool default_left = true;
        int left = -1;
        int right = -1;
        double value = 0.0;

        bool is_leaf() const { return feature < 0; }
    };
    using Tree = std::vector<Node>;

    BoostedTrees() = default;

    /// Exact greedy split search over midpoints of sorted unique values;
    /// missing values follow the branch that lowers training loss more.
    static BoostedTrees fit(const FeatureMatrix& x, std::span<const double> y, const BoostParams& params);

    /// Goes left when value <= threshold; missing takes the default branch.
    double predict_row(std::span<const double> features) const;
    std::vector<double> predict(const FeatureMatrix& x) const;

    const std::vector<Tree>& trees() const { return trees_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }
    /// Training mean squared error after each tree (size == trees().size()).
    const std::vector<double>& training_mse() const { return training_mse_; }

    /// One line per node; see docs/model_format.md.
    void write_text(std::ostream& out) const;
    static BoostedTrees read_text(std::istream& in);

  private:
    std::vector<Tree> trees_;
    std::vector<std::string> feature_names_;
    std::vector<double> training_mse_;
};

} // namespace xsa
