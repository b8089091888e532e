#include "otss/models.hpp"
#include "otss/serialize.hpp"

#include <fstream>
#include <ostream>
#include <stdexcept>

namespace otss::models {

void PooledModel::save(std::ostream& os) const {
    os << "otss-model pooled\n";
    os << "context_dim " << context_dim_ << '\n';
    os << "factor_dim " << factor_dim_ << '\n';
    io::write_vec(os, "coef", coef_);
}

void LinearContextualModel::save(std::ostream& os) const {
    os << "otss-model linear\n";
    io::write_mat(os, "w_map", w_map_);
    io::write_vec(os, "baseline", baseline_);
}

void LowRankContextualModel::save(std::ostream& os) const {
    os << "otss-model lowrank\n";
    io::write_mat(os, "u", u_);
    io::write_mat(os, "v", v_);
    io::write_vec(os, "baseline", baseline_);
}

void MlpModel::save(std::ostream& os) const {
    os << "otss-model mlp\n";
    io::write_mat(os, "hidden", params_.hidden);
    io::write_mat(os, "output", params_.output);
    io::write_vec(os, "baseline", params_.baseline);
}

void ClusterModel::save(std::ostream& os) const {
    os << "otss-model cluster\n";
    io::write_mat(os, "centroids", centroids_);
    io::write_mat(os, "betas", betas_);
}

void EMModel::save(std::ostream& os) const {
    os << "otss-model em\n";
    io::write_mat(os, "gate_coef", gate_coef_);
    io::write_mat(os, "experts", experts_);
}

void HardRoutedModel::save(std::ostream& os) const {
    os << "otss-model hard\n";
    io::write_mat(os, "router_coef", router_coef_);
    io::write_mat(os, "experts", experts_);
}

void OTSSModel::save(std::ostream& os) const {
    os << "otss-model otss\n";
    io::write_mat(os, "gate", params_.gate);
    io::write_vec(os, "baseline", params_.baseline);
    io::write_mat(os, "experts", params_.experts);
    os << "reg_lambda " << io::format_hex(params_.reg_lambda) << '\n';
}

void OracleGateModel::save(std::ostream& os) const {
    os << "otss-model oracle_gate\n";
    io::write_truth(os, truth_);
    io::write_mat(os, "experts", experts_);
    io::write_vec(os, "baseline", baseline_);
    os << "ridge_floor " << (ridge_floor_applied_ ? 1 : 0) << '\n';
}

ModelPtr load_model(std::istream& is) {
    io::LineReader r(is);
    const std::string name = r.expect("otss-model");

    if (name == "pooled") {
        const int context_dim = static_cast<int>(r.expect_int("context_dim"));
        const int factor_dim = static_cast<int>(r.expect_int("factor_dim"));
        return std::make_unique<PooledModel>(r.expect_vec("coef"), context_dim, factor_dim);
    }
    if (name == "linear") {
        Mat w_map = r.expect_mat("w_map");
        return std::make_unique<LinearContextualModel>(std::move(w_map),
                                                       r.expect_vec("baseline"));
    }
    if (name == "lowrank") {
        Mat u = r.expect_mat("u");
        Mat v = r.expect_mat("v");
        return std::make_unique<LowRankContextualModel>(std::move(u), std::move(v),
                                                        r.expect_vec("baseline"));
    }
    if (name == "mlp") {
        MlpParams params;
        params.hidden = r.expect_mat("hidden");
        params.output = r.expect_mat("output");
        params.baseline = r.expect_vec("baseline");
        return std::make_unique<MlpModel>(std::move(params));
    }
    if (name == "cluster") {
        Mat centroids = r.expect_mat("centroids");
        return std::make_unique<ClusterModel>(std::move(centroids), r.expect_mat("betas"));
    }
    if (name == "em") {
        Mat gate_coef = r.expect_mat("gate_coef");
        return std::make_unique<EMModel>(std::move(gate_coef), r.expect_mat("experts"));
    }
    if (name == "hard") {
        Mat router = r.expect_mat("router_coef");
        return std::make_unique<HardRoutedModel>(std::move(router), r.expect_mat("experts"));
    }
    if (name == "otss") {
        OTSSParams params;
        params.gate = r.expect_mat("gate");
        params.baseline = r.expect_vec("baseline");
        params.experts = r.expect_mat("experts");
        params.reg_lambda = r.expect_real("reg_lambda");
        return std::make_unique<OTSSModel>(std::move(params));
    }
    if (name == "oracle_gate") {
        bench::Truth truth = io::read_truth(r);
        Mat experts = r.expect_mat("experts");
        Vec baseline = r.expect_vec("baseline");
        const bool floor = r.expect_int("ridge_floor") != 0;
        return std::make_unique<OracleGateModel>(std::move(truth), std::move(experts),
                                                 std::move(baseline), floor);
    }
    throw std::runtime_error("load_model: unknown model kind '" + name + "'");
}

void save_model_file(const std::string& path, const WeightModel& model) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_model_file: cannot open " + path);
    model.save(os);
    if (!os) throw std::runtime_error("save_model_file: write failed for " + path);
}

ModelPtr load_model_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_model_file: cannot open " + path);
    return load_model(is);
}

} // namespace otss::models
