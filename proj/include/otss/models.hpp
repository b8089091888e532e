#pragma once

#include "otss/bench.hpp"
#include "otss/rng.hpp"
#include "otss/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace otss::models {

struct FitConfig {
    int restarts = 5;
    int max_epochs = 3000;
    int patience = 100;
    double step_size = 0.05;
    std::vector<double> reg_grid = {1e-4, 1e-3, 1e-2};
    std::vector<int> k_grid = {2, 3, 4, 5, 6};
    std::vector<int> rank_grid = {1, 2, 3};
    std::uint64_t seed = 0; // stream seed for init/restart randomness

    void validate() const;
};

// A fitted map from context to decision weights. Prediction is pure and
// deterministic; fit_seconds is attached after the fact by the timing
// wrapper, so it never participates in serialized state.
class WeightModel {
public:
    virtual ~WeightModel() = default;

    virtual const std::string& name() const = 0;
    virtual Vec predict_w(const ContextVector& x) const = 0;
    virtual int param_count() const = 0;
    // simplex gate over experts; only gated soft models expose one
    virtual std::optional<Vec> gate(const ContextVector& x) const { return std::nullopt; }
    virtual void save(std::ostream& os) const = 0;

    double fit_seconds = 0.0;
    std::map<std::string, double> selected_hypers;
};

using ModelPtr = std::unique_ptr<WeightModel>;

// load-then-predict reproduces the saved model's predictions bit-exactly
ModelPtr load_model(std::istream& is);
void save_model_file(const std::string& path, const WeightModel& model);
ModelPtr load_model_file(const std::string& path);

// ---- concrete parameter blocks ----------------------------------------

// shared feature helpers: c(x) = (1, x_full), u(x, z) = (1, x_full, z)
Vec context_features(const ContextVector& x);
Mat context_feature_matrix(const Mat& contexts);
Mat record_feature_matrix(const LoggedDataset& ds);

struct OTSSParams {
    Mat gate;     // K x (D_x + 1)
    Vec baseline; // D_x + 1
    Mat experts;  // K x J
    double reg_lambda = 0.0;

    int k() const { return static_cast<int>(experts.rows()); }
    Vec gate_alpha(const ContextVector& x) const; // softmax over gate scores
    Vec predict_w(const ContextVector& x) const;
};

class OTSSModel final : public WeightModel {
public:
    explicit OTSSModel(OTSSParams params);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override;
    int param_count() const override;
    std::optional<Vec> gate(const ContextVector& x) const override;
    void save(std::ostream& os) const override;
    const OTSSParams& params() const { return params_; }

private:
    OTSSParams params_;
};

class PooledModel final : public WeightModel {
public:
    // coef over (1, x_full, z); w is the constant z block
    PooledModel(Vec coef, int context_dim, int factor_dim);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override;
    int param_count() const override;
    void save(std::ostream& os) const override;
    const Vec& coef() const { return coef_; }

private:
    Vec coef_;
    int context_dim_;
    int factor_dim_;
};

class LinearContextualModel final : public WeightModel {
public:
    LinearContextualModel(Mat w_map, Vec baseline);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override; // w_map * (1, x_full)
    int param_count() const override;
    void save(std::ostream& os) const override;
    const Mat& w_map() const { return w_map_; }

private:
    Mat w_map_; // J x (D_x + 1)
    Vec baseline_;
};

class LowRankContextualModel final : public WeightModel {
public:
    LowRankContextualModel(Mat u, Mat v, Vec baseline);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override; // U (V' c(x))
    int param_count() const override;
    void save(std::ostream& os) const override;
    int rank() const { return static_cast<int>(u_.cols()); }

private:
    Mat u_; // J x r
    Mat v_; // (D_x + 1) x r
    Vec baseline_;
};

struct MlpParams {
    Mat hidden;   // H x (D_x + 1)
    Mat output;   // J x (H + 1), column 0 is the output bias
    Vec baseline; // D_x + 1

    Vec predict_w(const ContextVector& x) const;
};

class MlpModel final : public WeightModel {
public:
    explicit MlpModel(MlpParams params);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override;
    int param_count() const override;
    void save(std::ostream& os) const override;

private:
    MlpParams params_;
};

class ClusterModel final : public WeightModel {
public:
    ClusterModel(Mat centroids, Mat betas);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override; // nearest centroid's beta
    int param_count() const override;
    void save(std::ostream& os) const override;
    int k() const { return static_cast<int>(centroids_.rows()); }

private:
    Mat centroids_; // k x D_x
    Mat betas_;     // k x J
};

class EMModel final : public WeightModel {
public:
    EMModel(Mat gate_coef, Mat experts);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override; // gate-weighted experts
    int param_count() const override;
    void save(std::ostream& os) const override;
    Vec gate_probs(const ContextVector& x) const;
    int k() const { return static_cast<int>(experts_.rows()); }

private:
    Mat gate_coef_; // K x (D_x + 1), multinomial over components
    Mat experts_;   // K x J (z-part coefficients)
};

class HardRoutedModel final : public WeightModel {
public:
    HardRoutedModel(Mat router_coef, Mat experts);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override; // argmax route's expert
    int param_count() const override;
    void save(std::ostream& os) const override;
    int route(const ContextVector& x) const;

private:
    Mat router_coef_; // K x (D_x + 1)
    Mat experts_;     // K x J
};

// Theory-harness model: the true gate is part of the model, so it carries
// the truth it was fit against.
class OracleGateModel final : public WeightModel {
public:
    OracleGateModel(bench::Truth truth, Mat experts, Vec baseline, bool ridge_floor_applied);
    const std::string& name() const override;
    Vec predict_w(const ContextVector& x) const override; // sum_k alpha*_k(x) beta_k
    int param_count() const override;
    std::optional<Vec> gate(const ContextVector& x) const override;
    void save(std::ostream& os) const override;
    bool ridge_floor_applied() const { return ridge_floor_applied_; }
    const Mat& experts() const { return experts_; }

private:
    bench::Truth truth_;
    Mat experts_; // K x J
    Vec baseline_;
    bool ridge_floor_applied_;
};

// ---- fits ---------------------------------------------------------------

ModelPtr fit_pooled(const LoggedDataset& train, const LoggedDataset& val, const FitConfig& cfg);
ModelPtr fit_linear_contextual(const LoggedDataset& train, const LoggedDataset& val,
                               const FitConfig& cfg);
ModelPtr fit_lowrank_contextual(const LoggedDataset& train, const LoggedDataset& val,
                                const FitConfig& cfg);
ModelPtr fit_mlp_contextual(const LoggedDataset& train, const LoggedDataset& val,
                            const FitConfig& cfg);
ModelPtr fit_cluster_then_fit(const LoggedDataset& train, const LoggedDataset& val,
                              const FitConfig& cfg);
ModelPtr fit_em_mixture(const LoggedDataset& train, const LoggedDataset& val,
                        const FitConfig& cfg);
ModelPtr fit_hard_routed(const LoggedDataset& train, const LoggedDataset& val, int k,
                         const FitConfig& cfg);
ModelPtr fit_otss(const LoggedDataset& train, const LoggedDataset& val, int k,
                  const FitConfig& cfg);
ModelPtr fit_oracle_gate_soft(const LoggedDataset& train, const bench::Truth& truth,
                              const FitConfig& cfg);

// dispatch by method name: pooled, linear, lowrank, mlp, cluster, em,
// hard, otss (k chosen via cfg/k override where the method needs one)
ModelPtr fit_method(const std::string& method, const LoggedDataset& train,
                    const LoggedDataset& val, int k, const FitConfig& cfg);

// ---- loss/gradient probes (finite-difference checks) --------------------

// Flattened-parameter view of the OTSS objective: order is gate row-major,
// then baseline, then experts row-major.
struct OTSSProblem {
    Mat ctx_features; // n x (D_x + 1)
    Mat factors;      // n x J
    Vec outcomes;
    int k = 1;
    double reg_lambda = 0.0;

    int dim() const;
    Vec pack(const OTSSParams& p) const;
    OTSSParams unpack(const Vec& theta) const;
    double loss(const Vec& theta) const;
    Vec grad(const Vec& theta) const;
};

struct MlpProblem {
    Mat ctx_features;
    Mat factors;
    Vec outcomes;
    int hidden = 32;
    double reg_lambda = 0.0;

    int dim() const;
    Vec pack(const MlpParams& p) const;
    MlpParams unpack(const Vec& theta) const;
    double loss(const Vec& theta) const;
    Vec grad(const Vec& theta) const;
};

OTSSProblem make_otss_problem(const LoggedDataset& ds, int k, double reg_lambda);
MlpProblem make_mlp_problem(const LoggedDataset& ds, int hidden, double reg_lambda);

// ---- expert alignment ----------------------------------------------------

struct Alignment {
    std::vector<int> permutation;   // estimated index -> truth index
    std::vector<double> per_expert; // squared distance per truth slot
    double total_sq = 0.0;
};

// exhaustive best permutation, K <= 8
Alignment align_experts(const Mat& estimated, const Mat& truth);

// ---- k-means (shared by cluster-then-fit) --------------------------------

struct KMeansResult {
    Mat centroids; // k x d
    std::vector<int> labels;
    double inertia = 0.0;
};

KMeansResult kmeans(const Mat& points, int k, int restarts, Rng& rng, int max_iter = 100);

} // namespace otss::models
