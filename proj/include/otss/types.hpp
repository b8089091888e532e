#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace otss {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Context split into a signal block (drives the latent mixture) and a
// nuisance block (distractor axes). full() is what estimators see.
struct ContextVector {
    Vec signal;
    Vec nuisance;

    ContextVector() = default;
    ContextVector(Vec sig, Vec nui);

    int d_sig() const { return static_cast<int>(signal.size()); }
    int d_nuis() const { return static_cast<int>(nuisance.size()); }
    int dim() const { return d_sig() + d_nuis(); }

    Vec full() const {
        Vec out(dim());
        out.head(d_sig()) = signal;
        out.tail(d_nuis()) = nuisance;
        return out;
    }
};

// Finite evaluation library: row m holds the factor vector of decision m.
// Scores for a weight w are factors * w, so oracle/chosen decisions and
// regret come from exact enumeration.
class DecisionLibrary {
public:
    DecisionLibrary() = default;
    explicit DecisionLibrary(Mat factors);

    int size() const { return static_cast<int>(factors_.rows()); }
    int factor_dim() const { return static_cast<int>(factors_.cols()); }
    const Mat& factors() const { return factors_; }
    Vec factor(int m) const { return factors_.row(m).transpose(); }

private:
    Mat factors_;
};

struct LoggedRecord {
    ContextVector context;
    int decision_index = 0;
    int outcome = 0; // binary
};

// Column-major views of a logged dataset; contexts row i corresponds to
// logged_factors row i (the library row of the logged decision).
struct LoggedDataset {
    Mat contexts;        // n x D_x (full context)
    Mat logged_factors;  // n x J
    std::vector<int> decisions;
    Vec outcomes;        // entries in {0,1}
    int d_sig = 0;
    DecisionLibrary library;

    int n() const { return static_cast<int>(contexts.rows()); }
    int context_dim() const { return static_cast<int>(contexts.cols()); }
    int factor_dim() const { return static_cast<int>(logged_factors.cols()); }
    int d_nuis() const { return context_dim() - d_sig; }

    LoggedRecord record(int i) const;
    void validate() const; // index range, finiteness, shape consistency
};

// One evaluation row: exact regret plus the margin/perturbation pair that
// the stability bound is stated in.
struct RegretRecord {
    int oracle_index = 0;
    int chosen_index = 0;
    double regret = 0.0;
    double margin_gamma = 0.0;
    double perturb_delta = 0.0;
};

} // namespace otss
