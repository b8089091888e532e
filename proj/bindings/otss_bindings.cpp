#include "otss/bench.hpp"
#include "otss/decision.hpp"
#include "otss/eval.hpp"
#include "otss/models.hpp"
#include "otss/rng.hpp"
#include "otss/theory.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <stdexcept>

namespace py = pybind11;
using namespace otss;

namespace {

bench::Family parse_family(const std::string& s) {
    if (s == "two_expert") return bench::Family::two_expert;
    if (s == "matched_k") return bench::Family::matched_k;
    throw std::invalid_argument("family must be 'two_expert' or 'matched_k'");
}

bench::TruthMode parse_mode(const std::string& s) {
    if (s == "hard") return bench::TruthMode::hard;
    if (s == "soft") return bench::TruthMode::soft;
    throw std::invalid_argument("mode must be 'hard' or 'soft'");
}

ContextVector split_context(const Vec& full, int d_sig) {
    if (d_sig < 0 || d_sig > full.size())
        throw std::invalid_argument("context shorter than the signal block");
    return ContextVector(full.head(d_sig), full.tail(full.size() - d_sig));
}

struct BenchmarkHandle {
    bench::BenchmarkInstance inst;

    int d_sig() const { return inst.config.d_sig; }
    Mat eval_contexts() const {
        Mat out(static_cast<int>(inst.eval.size()), inst.config.context_dim());
        for (std::size_t i = 0; i < inst.eval.size(); ++i)
            out.row(static_cast<int>(i)) = inst.eval[i].context.full().transpose();
        return out;
    }
    Mat eval_weights() const {
        Mat out(static_cast<int>(inst.eval.size()), inst.config.J);
        for (std::size_t i = 0; i < inst.eval.size(); ++i)
            out.row(static_cast<int>(i)) = inst.eval[i].w_star.transpose();
        return out;
    }
};

struct ModelHandle {
    std::shared_ptr<models::WeightModel> model;
    int d_sig = 0;

    Vec predict(const Vec& full) const { return model->predict_w(split_context(full, d_sig)); }
    std::optional<Vec> gate(const Vec& full) const {
        return model->gate(split_context(full, d_sig));
    }
};

} // namespace

PYBIND11_MODULE(_otss, m) {
    m.doc() = "benchmark harness and estimators for contextual decision weights";

    py::class_<bench::BenchConfig>(m, "BenchConfig")
        .def(py::init<>())
        .def_readwrite("n_total", &bench::BenchConfig::n_total)
        .def_readwrite("n_train", &bench::BenchConfig::n_train)
        .def_readwrite("d_sig", &bench::BenchConfig::d_sig)
        .def_readwrite("d_nuis", &bench::BenchConfig::d_nuis)
        .def_readwrite("J", &bench::BenchConfig::J)
        .def_readwrite("M", &bench::BenchConfig::M)
        .def_readwrite("K", &bench::BenchConfig::K)
        .def_readwrite("tau", &bench::BenchConfig::tau)
        .def_readwrite("target_top_prob", &bench::BenchConfig::target_top_prob)
        .def_readwrite("nuisance_scale", &bench::BenchConfig::nuisance_scale)
        .def_readwrite("rand_level", &bench::BenchConfig::rand_level)
        .def_readwrite("seed", &bench::BenchConfig::seed);

    py::class_<models::FitConfig>(m, "FitConfig")
        .def(py::init<>())
        .def_readwrite("restarts", &models::FitConfig::restarts)
        .def_readwrite("max_epochs", &models::FitConfig::max_epochs)
        .def_readwrite("patience", &models::FitConfig::patience)
        .def_readwrite("step_size", &models::FitConfig::step_size)
        .def_readwrite("reg_grid", &models::FitConfig::reg_grid)
        .def_readwrite("k_grid", &models::FitConfig::k_grid)
        .def_readwrite("rank_grid", &models::FitConfig::rank_grid)
        .def_readwrite("seed", &models::FitConfig::seed);

    py::class_<BenchmarkHandle>(m, "Benchmark")
        .def_property_readonly("d_sig", &BenchmarkHandle::d_sig)
        .def_property_readonly("n_train", [](const BenchmarkHandle& h) { return h.inst.train.n(); })
        .def_property_readonly("n_val", [](const BenchmarkHandle& h) { return h.inst.val.n(); })
        .def_property_readonly("n_eval",
                               [](const BenchmarkHandle& h) { return static_cast<int>(h.inst.eval.size()); })
        .def_property_readonly("library",
                               [](const BenchmarkHandle& h) { return h.inst.library.factors(); })
        .def("eval_contexts", &BenchmarkHandle::eval_contexts)
        .def("eval_weights", &BenchmarkHandle::eval_weights)
        .def("true_weight", [](const BenchmarkHandle& h, const Vec& full) {
            return bench::true_weight(h.inst.truth, split_context(full, h.d_sig()));
        });

    py::class_<ModelHandle>(m, "Model")
        .def_property_readonly("name",
                               [](const ModelHandle& h) { return h.model->name(); })
        .def_property_readonly("param_count",
                               [](const ModelHandle& h) { return h.model->param_count(); })
        .def_property_readonly("selected_hypers",
                               [](const ModelHandle& h) { return h.model->selected_hypers; })
        .def("predict", &ModelHandle::predict, py::arg("context"))
        .def("gate", &ModelHandle::gate, py::arg("context"));

    m.def(
        "generate_benchmark",
        [](const bench::BenchConfig& cfg, const std::string& family, const std::string& mode) {
            BenchmarkHandle h;
            h.inst = bench::generate_benchmark(cfg, parse_family(family), parse_mode(mode));
            return h;
        },
        py::arg("config"), py::arg("family") = "two_expert", py::arg("mode") = "soft");

    m.def(
        "fit",
        [](const BenchmarkHandle& h, const std::string& method, int k,
           const models::FitConfig& cfg) {
            ModelHandle out;
            const int kk = k > 0 ? k : h.inst.config.K;
            out.model = models::fit_method(method, h.inst.train, h.inst.val, kk, cfg);
            out.d_sig = h.d_sig();
            return out;
        },
        py::arg("benchmark"), py::arg("method"), py::arg("k") = 0,
        py::arg("fit_config") = models::FitConfig{});

    m.def(
        "evaluate",
        [](const ModelHandle& model, const BenchmarkHandle& h) {
            const eval::EvalResult res = eval::evaluate(*model.model, h.inst.eval, h.inst.library);
            py::dict out;
            out["weight_mse"] = res.weight_mse;
            out["mean_regret"] = res.mean_regret;
            out["match_rate"] = res.match_rate;
            return out;
        },
        py::arg("model"), py::arg("benchmark"));

    m.def(
        "regret",
        [](const Vec& w_star, const Vec& w_hat, const Mat& library) {
            const RegretRecord rec = regret(w_star, w_hat, DecisionLibrary(library));
            py::dict out;
            out["regret"] = rec.regret;
            out["oracle_index"] = rec.oracle_index;
            out["chosen_index"] = rec.chosen_index;
            out["margin_gamma"] = rec.margin_gamma;
            out["perturb_delta"] = rec.perturb_delta;
            return out;
        },
        py::arg("w_star"), py::arg("w_hat"), py::arg("library"));

    m.def(
        "paired_bootstrap",
        [](const std::vector<double>& a, const std::vector<double>& b, int resamples,
           std::uint64_t seed) {
            Rng rng = Rng::stream(seed, "bootstrap/python");
            const eval::BootstrapResult res = eval::paired_bootstrap(a, b, resamples, rng);
            return py::make_tuple(res.mean_diff, res.ci_lo, res.ci_hi);
        },
        py::arg("a"), py::arg("b"), py::arg("resamples") = 5000, py::arg("seed") = 0);
}
