#include "otss/runner.hpp"

#include "otss/csv.hpp"
#include "otss/decision.hpp"
#include "otss/eval.hpp"
#include "otss/glm.hpp"
#include "otss/serialize.hpp"
#include "otss/theory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace otss::cli {

namespace {

namespace fs = std::filesystem;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (2 * b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void parallel_for(int jobs, int n, const std::function<void(int)>& body) {
    jobs = std::min(std::max(1, jobs), n);
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                body(i);
            }
        });
    }
    for (std::thread& th : pool) th.join();
}

struct TaskResult {
    eval::SeedSummary summary;
    bool ok = false;
    bool hard_fail = false;
    std::string error;
};

struct PanelRun {
    std::vector<int> seeds;
    std::vector<TaskResult> results; // seed-major, methods inner
    bool hard_fail = false;
    bool any_ok = false;
};

int method_k(const ExperimentConfig& cfg, const MethodConfig& m) {
    return m.k > 0 ? m.k : cfg.bench.K;
}

TaskResult run_task(const ExperimentConfig& cfg, const bench::BenchmarkInstance& inst, int seed,
                    int method_idx) {
    const MethodConfig& m = cfg.methods[method_idx];
    TaskResult res;
    res.summary.seed = seed;
    res.summary.method = m.label;
    try {
        models::FitConfig fc = m.fit;
        fc.seed = mix(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(method_idx));
        models::ModelPtr model = eval::timed_fit([&] {
            return models::fit_method(m.name, inst.train, inst.val, method_k(cfg, m), fc);
        });
        const eval::EvalResult er = eval::evaluate(*model, inst.eval, inst.library);
        // hard invariants: the gate stays on the simplex and every regret
        // row satisfies the margin transfer bound
        for (const bench::EvalPoint& pt : inst.eval) {
            const std::optional<Vec> g = model->gate(pt.context);
            if (!g) break;
            if (std::abs(g->sum() - 1.0) > 1e-12 || g->minCoeff() < 0.0) {
                res.hard_fail = true;
                res.error = "gate left the simplex";
                return res;
            }
        }
        const theory::RegretTransferReport audit = theory::regret_transfer_audit(er.records);
        if (!audit.pass) {
            res.hard_fail = true;
            res.error = "regret transfer violated on " + std::to_string(audit.violations) + " rows";
            return res;
        }
        res.summary.weight_mse = er.weight_mse;
        res.summary.mean_regret = er.mean_regret;
        res.summary.match_rate = er.match_rate;
        res.summary.gate_effective = eval::gate_effective_experts(*model, inst.eval);
        res.summary.fit_seconds = model->fit_seconds;
        res.summary.selected_hypers = model->selected_hypers;
        res.ok = true;
    } catch (const std::exception& e) {
        res.error = e.what();
        if (res.error.find("monotonicity") != std::string::npos) res.hard_fail = true;
    }
    return res;
}

PanelRun execute_panel(const ExperimentConfig& cfg, int jobs, int seed_offset) {
    PanelRun run;
    for (int s : cfg.seeds) run.seeds.push_back(s + seed_offset);
    const int ns = static_cast<int>(run.seeds.size());
    const int nm = static_cast<int>(cfg.methods.size());

    std::vector<bench::BenchmarkInstance> instances(ns);
    std::vector<std::string> gen_errors(ns);
    parallel_for(jobs, ns, [&](int i) {
        try {
            bench::BenchConfig bc = cfg.bench;
            bc.seed = static_cast<std::uint64_t>(run.seeds[i]);
            instances[i] = bench::generate_benchmark(bc, cfg.family, cfg.mode);
        } catch (const std::exception& e) {
            gen_errors[i] = e.what();
        }
    });

    run.results.resize(static_cast<std::size_t>(ns) * nm);
    parallel_for(jobs, ns * nm, [&](int t) {
        const int si = t / nm;
        const int mi = t % nm;
        if (!gen_errors[si].empty()) {
            TaskResult r;
            r.summary.seed = run.seeds[si];
            r.summary.method = cfg.methods[mi].label;
            r.error = "benchmark generation failed: " + gen_errors[si];
            run.results[t] = std::move(r);
            return;
        }
        run.results[t] = run_task(cfg, instances[si], run.seeds[si], mi);
    });

    for (const TaskResult& r : run.results) {
        run.hard_fail = run.hard_fail || r.hard_fail;
        run.any_ok = run.any_ok || r.ok;
    }
    return run;
}

std::string hypers_string(const std::map<std::string, double>& h) {
    std::string out;
    for (const auto& [key, value] : h) {
        if (!out.empty()) out += ';';
        out += key + "=" + io::format_shortest(value);
    }
    return out;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::pair<double, double> mean_sd(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double d : v) m += d;
    m /= n;
    double s2 = 0.0;
    for (double d : v) s2 += (d - m) * (d - m);
    const double sd = v.size() > 1 ? std::sqrt(s2 / (n - 1.0)) : 0.0;
    return {m, sd};
}

// fixed prefix columns (sweeps prepend axis/value), then one row per
// successful (seed, method) task in deterministic order
std::string seed_rows_csv(const ExperimentConfig& cfg, const PanelRun& run,
                          const std::vector<std::string>& prefix_header,
                          const std::vector<std::string>& prefix_cells) {
    std::string out;
    std::vector<std::string> header = prefix_header;
    for (const char* c : {"seed", "method", "weight_mse", "mean_regret", "match_rate",
                          "gate_effective_experts", "selected_hypers"})
        header.push_back(c);
    out += csv::join(header);
    for (const TaskResult& r : run.results) {
        if (!r.ok) continue;
        std::vector<std::string> cells = prefix_cells;
        cells.push_back(csv::field(r.summary.seed));
        cells.push_back(r.summary.method);
        cells.push_back(csv::field(r.summary.weight_mse));
        cells.push_back(csv::field(r.summary.mean_regret));
        cells.push_back(csv::field(r.summary.match_rate));
        cells.push_back(csv::field(r.summary.gate_effective));
        cells.push_back(hypers_string(r.summary.selected_hypers));
        out += csv::join(cells);
    }
    return out;
}

std::string timing_csv_header() {
    return csv::join({"seed", "method", "fit_seconds"});
}

std::string timing_rows(const PanelRun& run) {
    std::string out;
    for (const TaskResult& r : run.results) {
        if (!r.ok) continue;
        out += csv::join({csv::field(r.summary.seed), r.summary.method,
                          csv::field(r.summary.fit_seconds)});
    }
    return out;
}

std::string failures_text(const PanelRun& run, const std::string& prefix) {
    std::string out;
    for (const TaskResult& r : run.results) {
        if (r.ok) continue;
        out += prefix + "seed=" + std::to_string(r.summary.seed) + " method=" + r.summary.method +
               " error: " + r.error + "\n";
    }
    return out;
}

// per-method metric vectors across seeds, in config order; only methods
// that succeeded on every seed are eligible for aggregation pairing
struct MethodColumn {
    std::string label;
    bool complete = true;
    std::vector<double> weight_mse;
    std::vector<double> mean_regret;
    std::vector<double> match_rate;
    std::vector<double> gate_effective;
    bool has_gate = true;
};

std::vector<MethodColumn> collect_columns(const ExperimentConfig& cfg, const PanelRun& run) {
    const int ns = static_cast<int>(run.seeds.size());
    const int nm = static_cast<int>(cfg.methods.size());
    std::vector<MethodColumn> cols(nm);
    for (int mi = 0; mi < nm; ++mi) {
        cols[mi].label = cfg.methods[mi].label;
        for (int si = 0; si < ns; ++si) {
            const TaskResult& r = run.results[static_cast<std::size_t>(si) * nm + mi];
            if (!r.ok) {
                cols[mi].complete = false;
                continue;
            }
            cols[mi].weight_mse.push_back(r.summary.weight_mse);
            cols[mi].mean_regret.push_back(r.summary.mean_regret);
            cols[mi].match_rate.push_back(r.summary.match_rate);
            if (r.summary.gate_effective) {
                cols[mi].gate_effective.push_back(*r.summary.gate_effective);
            } else {
                cols[mi].has_gate = false;
            }
        }
    }
    return cols;
}

std::string aggregate_csv(const ExperimentConfig& cfg, const PanelRun& run,
                          const std::vector<std::string>& prefix_header,
                          const std::vector<std::string>& prefix_cells, bool with_header) {
    const std::vector<MethodColumn> cols = collect_columns(cfg, run);
    std::string out;
    if (with_header) {
        std::vector<std::string> header = prefix_header;
        for (const char* c : {"method", "metric", "mean", "sd", "n_seeds"}) header.push_back(c);
        out += csv::join(header);
    }
    for (const MethodColumn& col : cols) {
        if (col.weight_mse.empty()) continue;
        const auto emit = [&](const char* metric, const std::vector<double>& v) {
            const auto [m, sd] = mean_sd(v);
            std::vector<std::string> cells = prefix_cells;
            cells.push_back(col.label);
            cells.push_back(metric);
            cells.push_back(csv::field(m));
            cells.push_back(csv::field(sd));
            cells.push_back(csv::field(static_cast<int>(v.size())));
            out += csv::join(cells);
        };
        emit("weight_mse", col.weight_mse);
        emit("mean_regret", col.mean_regret);
        emit("match_rate", col.match_rate);
        if (col.has_gate && !col.gate_effective.empty())
            emit("gate_effective_experts", col.gate_effective);
    }
    return out;
}

std::string bootstrap_csv(const ExperimentConfig& cfg, const PanelRun& run,
                          std::uint64_t boot_seed) {
    const std::vector<MethodColumn> cols = collect_columns(cfg, run);
    std::string out = csv::join(
        {"metric", "method_a", "method_b", "mean_diff", "ci_lo", "ci_hi", "resamples"});
    const auto pair_rows = [&](const char* metric,
                               const std::vector<double> MethodColumn::*field) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            for (std::size_t j = i + 1; j < cols.size(); ++j) {
                if (!cols[i].complete || !cols[j].complete) continue;
                const std::vector<double>& a = cols[i].*field;
                const std::vector<double>& b = cols[j].*field;
                if (a.size() != b.size() || a.empty()) continue;
                Rng rng = Rng::stream(boot_seed, std::string("bootstrap/") + metric + "/" +
                                                     cols[i].label + "|" + cols[j].label);
                const eval::BootstrapResult br =
                    eval::paired_bootstrap(a, b, cfg.bootstrap_resamples, rng);
                out += csv::join({metric, cols[i].label, cols[j].label,
                                  csv::field(br.mean_diff), csv::field(br.ci_lo),
                                  csv::field(br.ci_hi), csv::field(br.resamples)});
            }
        }
    };
    pair_rows("mean_regret", &MethodColumn::mean_regret);
    pair_rows("weight_mse", &MethodColumn::weight_mse);
    return out;
}

fs::path prepare_out_dir(const RunOptions& opt, const std::string& name,
                         const std::string& hash) {
    const fs::path dir = fs::path(opt.out_root) / name / hash;
    fs::create_directories(dir);
    return dir;
}

} // namespace

int run_panel(const RunOptions& opt) {
    const std::string text = read_text_file(opt.config_path);
    ExperimentConfig cfg = parse_experiment_config(text);
    cfg.validate();
    const std::string hash = config_hash(text);
    const fs::path dir = prepare_out_dir(opt, cfg.name, hash);

    const PanelRun run = execute_panel(cfg, opt.jobs, opt.seed_offset);

    write_file(dir / "seed_rows.csv", seed_rows_csv(cfg, run, {}, {}));
    write_file(dir / "timing.csv", timing_csv_header() + timing_rows(run));
    write_file(dir / "aggregate.csv", aggregate_csv(cfg, run, {}, {}, true));
    write_file(dir / "bootstrap.csv", bootstrap_csv(cfg, run, Rng::hash_tag(hash)));
    const std::string failures = failures_text(run, "");
    if (!failures.empty()) write_file(dir / "failures.txt", failures);

    if (run.hard_fail || !run.any_ok) return 1;
    return 0;
}

int run_sweep(const RunOptions& opt) {
    const std::string text = read_text_file(opt.config_path);
    ExperimentConfig cfg = parse_experiment_config(text);
    cfg.validate();
    if (cfg.axis.empty()) throw std::runtime_error("sweep requires an 'axis' in the config");
    const std::string hash = config_hash(text);
    const fs::path dir = prepare_out_dir(opt, cfg.name, hash);

    int n_eval_fixed = 0;
    if (cfg.axis == "n_train") {
        double max_v = 0.0;
        for (double v : cfg.axis_values) max_v = std::max(max_v, v);
        n_eval_fixed = cfg.bench.n_total - static_cast<int>(std::llround(max_v));
        if (n_eval_fixed < 100)
            throw std::runtime_error(
                "sweep: n_total leaves fewer than 100 eval rows at the largest n_train");
    }

    std::string rows, agg, timing = csv::join({"value", "seed", "method", "fit_seconds"});
    std::string failures;
    bool hard_fail = false, any_ok = false, agg_header = true;
    for (double v : cfg.axis_values) {
        ExperimentConfig point = cfg;
        if (cfg.axis == "n_train") {
            point.bench.n_train = static_cast<int>(std::llround(v));
            point.bench.n_total = point.bench.n_train + n_eval_fixed;
        } else if (cfg.axis == "tau") {
            point.bench.tau = v;
        } else if (cfg.axis == "nuisance_scale") {
            point.bench.nuisance_scale = v;
        } else {
            point.bench.rand_level = v;
        }
        point.bench.validate();

        const PanelRun run = execute_panel(point, opt.jobs, opt.seed_offset);
        const std::vector<std::string> prefix_header = {"axis", "value"};
        const std::vector<std::string> prefix_cells = {cfg.axis, csv::field(v)};
        std::string block = seed_rows_csv(point, run, prefix_header, prefix_cells);
        if (!rows.empty()) block.erase(0, block.find('\n') + 1); // keep a single header
        rows += block;
        agg += aggregate_csv(point, run, prefix_header, prefix_cells, agg_header);
        agg_header = false;
        for (const TaskResult& r : run.results) {
            if (!r.ok) continue;
            timing += csv::join({csv::field(v), csv::field(r.summary.seed), r.summary.method,
                                 csv::field(r.summary.fit_seconds)});
        }
        failures += failures_text(run, "value=" + io::format_shortest(v) + " ");
        hard_fail = hard_fail || run.hard_fail;
        any_ok = any_ok || run.any_ok;
    }

    write_file(dir / "seed_rows.csv", rows);
    write_file(dir / "aggregate.csv", agg);
    write_file(dir / "timing.csv", timing);
    if (!failures.empty()) write_file(dir / "failures.txt", failures);

    if (hard_fail || !any_ok) return 1;
    return 0;
}

namespace {

struct CheckRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<ContextVector> mc_contexts(const bench::BenchConfig& bc, std::string_view tag,
                                       long long n) {
    Rng rng = Rng::stream(bc.seed, tag);
    std::vector<ContextVector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) out.push_back(bench::sample_context(bc, rng));
    return out;
}

void floor_rows(std::vector<CheckRow>& rows, const std::string& prefix,
                const theory::FloorReport& rep) {
    for (const theory::FloorCheckRow& r : rep.rows) {
        CheckRow c;
        c.name = prefix + "/m=" + std::to_string(r.m);
        c.pass = r.pass;
        c.detail = "lower=" + io::format_shortest(r.lower) + " dp=" + io::format_shortest(r.dp) +
                   " upper=" + io::format_shortest(r.upper);
        rows.push_back(std::move(c));
    }
}

} // namespace

int run_theory(const RunOptions& opt) {
    const std::string text = read_text_file(opt.config_path);
    TheoryConfig cfg = parse_theory_config(text);
    if (opt.kappa_scale > 0.0) cfg.kappa_scale = opt.kappa_scale;
    cfg.validate();
    const std::string hash = config_hash(text);
    const fs::path dir = prepare_out_dir(opt, cfg.name, hash);

    std::vector<CheckRow> rows;

    // exact step-fit floor: linear gate, where the bound is tight
    const theory::FloorReport linear = theory::verify_floor(
        "linear_gate", [](double t) { return t; }, 1.0, 1.0, 1.0, 0.0, 1.0, cfg.floor_m_list,
        cfg.floor_grid);
    floor_rows(rows, "floor/linear", linear);
    for (const theory::FloorCheckRow& r : linear.rows) {
        const double exact = 1.0 / (12.0 * r.m * r.m);
        CheckRow c;
        c.name = "floor/linear_exact/m=" + std::to_string(r.m);
        c.pass = std::abs(r.dp - exact) <= 0.01 * exact;
        c.detail = "dp=" + io::format_shortest(r.dp) + " exact=" + io::format_shortest(exact);
        rows.push_back(std::move(c));
    }

    // sigmoid gate floor on the benchmark truth
    bench::BenchConfig bc;
    bc.tau = cfg.floor_tau;
    bc.seed = cfg.seed;
    const bench::TwoExpertTruth truth = bench::make_two_expert_truth(bc);
    double kappa_override = 0.0;
    if (cfg.kappa_scale != 1.0) {
        const double s = glm::sigmoid(bc.tau);
        kappa_override = cfg.kappa_scale * bc.tau * s * (1.0 - s);
    }
    const theory::FloorReport sigm =
        theory::verify_floor(truth, cfg.floor_m_list, 0.0, 1.0, cfg.floor_grid, kappa_override);
    floor_rows(rows, "floor/sigmoid", sigm);

    // pooled-error identity on independent Monte-Carlo samples
    {
        const auto c1 = mc_contexts(bc, "theory/pooled_a", cfg.mc_samples);
        const auto c2 = mc_contexts(bc, "theory/pooled_b", cfg.mc_samples);
        const double formula = theory::pooled_oracle_error(truth, c1);
        const double empirical = theory::empirical_best_constant_error(truth, c2);
        const double rel = std::abs(formula - empirical) / std::max(formula, empirical);
        CheckRow c;
        c.name = "pooled_formula";
        c.pass = rel <= 0.02;
        c.detail = "formula=" + io::format_shortest(formula) +
                   " empirical=" + io::format_shortest(empirical) +
                   " rel=" + io::format_shortest(rel);
        rows.push_back(std::move(c));
    }

    // aligned-hard upper bound: deterministic on one sample, 2% across two
    {
        const auto c3 = mc_contexts(bc, "theory/aligned_a", cfg.mc_samples);
        const auto c4 = mc_contexts(bc, "theory/aligned_b", cfg.mc_samples);
        const theory::AlignedHardReport rep =
            theory::aligned_hard_upper(truth, c3, {0.05, 0.1, 0.2, 0.3});
        CheckRow c;
        c.name = "aligned_hard_bound";
        c.pass = rep.pass;
        c.detail = "bound=" + io::format_shortest(rep.bound) +
                   " threshold=" + io::format_shortest(rep.threshold_error);
        rows.push_back(std::move(c));
        const double other = theory::aligned_hard_upper(truth, c4, {}).threshold_error;
        const double rel = std::abs(rep.bound - other) / std::max(rep.bound, other);
        CheckRow c2;
        c2.name = "aligned_hard_mc";
        c2.pass = rel <= 0.02;
        c2.detail = "bound=" + io::format_shortest(rep.bound) +
                    " independent=" + io::format_shortest(other) +
                    " rel=" + io::format_shortest(rel);
        rows.push_back(std::move(c2));
    }

    // hard-partition decomposition on the matched benchmark truth
    {
        bench::BenchConfig bk = bc;
        bk.K = 4;
        const bench::MatchedKTruth mk = bench::make_matched_k_truth(bk, bench::TruthMode::hard);
        const auto ctx = mc_contexts(bk, "theory/decomp_ctx", 2000);
        const int n = static_cast<int>(ctx.size());
        Mat w(n, bk.J);
        std::vector<int> labels(n);
        for (int i = 0; i < n; ++i) {
            w.row(i) = bench::true_weight_matched_k(mk, ctx[i]).transpose();
            const Vec g = bench::true_gate_matched_k(mk, ctx[i]);
            int arg = 0;
            for (int k = 1; k < g.size(); ++k) {
                if (g[k] > g[arg]) arg = k;
            }
            labels[i] = arg;
        }
        Rng rng = Rng::stream(cfg.seed, "theory/decomp_hard");
        const theory::DecompositionReport gate_rep =
            theory::hard_partition_decomposition_check(w, labels, 10, rng);
        std::vector<int> rnd(n);
        for (int i = 0; i < n; ++i) rnd[i] = static_cast<int>(rng.uniform_int(7));
        const theory::DecompositionReport rnd_rep =
            theory::hard_partition_decomposition_check(w, rnd, 10, rng);
        CheckRow c;
        c.name = "decomposition_hard";
        c.pass = gate_rep.pass && rnd_rep.pass;
        c.detail = "max_rel=" +
                   io::format_shortest(std::max(gate_rep.max_rel_error, rnd_rep.max_rel_error));
        rows.push_back(std::move(c));
    }

    // expert/gate decomposition identity and quadratic bound
    {
        Rng rng = Rng::stream(cfg.seed, "theory/decomp_soft");
        const theory::SoftDecompReport rep =
            theory::soft_decomposition_check(cfg.decomposition_instantiations, rng);
        CheckRow c;
        c.name = "decomposition_soft";
        c.pass = rep.pass;
        c.detail = "identity_rel=" + io::format_shortest(rep.max_identity_rel) +
                   " lhs=" + io::format_shortest(rep.lhs) + " rhs=" + io::format_shortest(rep.rhs);
        rows.push_back(std::move(c));
    }

    // estimation-rate sweeps
    {
        const theory::RateSweepResult hard = theory::hard_rate_sweep(cfg.rates);
        const theory::RateSweepResult soft = theory::soft_rate_sweep(cfg.rates);
        CheckRow ch;
        ch.name = "rate_hard_slope";
        ch.pass = hard.slope >= -0.80 && hard.slope <= -0.55;
        ch.detail = "slope=" + io::format_shortest(hard.slope) + " band=[-0.80,-0.55]";
        rows.push_back(std::move(ch));
        CheckRow cs;
        cs.name = "rate_soft_slope";
        cs.pass = soft.slope >= -1.20 && soft.slope <= -0.85;
        cs.detail = "slope=" + io::format_shortest(soft.slope) + " band=[-1.20,-0.85]";
        rows.push_back(std::move(cs));
        CheckRow sep;
        sep.name = "rate_separation";
        sep.pass = soft.mean_mse.back() < hard.mean_mse.back();
        sep.detail = "soft=" + io::format_shortest(soft.mean_mse.back()) +
                     " hard=" + io::format_shortest(hard.mean_mse.back()) +
                     " at n=" + std::to_string(cfg.rates.n_grid.back());
        rows.push_back(std::move(sep));
        CheckRow aud;
        aud.name = "rate_sweep_regret_transfer";
        aud.pass = hard.regret_violations == 0 && soft.regret_violations == 0;
        aud.detail = "rows=" + std::to_string(hard.eval_rows + soft.eval_rows) +
                     " violations=" + std::to_string(hard.regret_violations + soft.regret_violations);
        rows.push_back(std::move(aud));
    }

    // regret transfer on random weight/estimate/library triples
    {
        Rng rng = Rng::stream(cfg.seed, "theory/regret");
        const theory::RegretTransferReport rep =
            theory::random_triple_audit(cfg.regret_triples, 6, 40, rng);
        CheckRow c;
        c.name = "regret_transfer";
        c.pass = rep.pass;
        c.detail = "rows=" + std::to_string(rep.rows) +
                   " violations=" + std::to_string(rep.violations) +
                   " localized_bound=" + io::format_shortest(rep.localized_bound) +
                   " mean_regret=" + io::format_shortest(rep.mean_regret);
        rows.push_back(std::move(c));
    }

    bool all_pass = true;
    std::string report;
    for (const CheckRow& r : rows) {
        all_pass = all_pass && r.pass;
        report += std::string(r.pass ? "[PASS] " : "[FAIL] ") + r.name + " | " + r.detail + "\n";
    }
    report += std::string("overall: ") + (all_pass ? "PASS" : "FAIL") + "\n";
    write_file(dir / "theory_report.txt", report);

    return all_pass ? 0 : 1;
}

int run_runtime(const RunOptions& opt) {
    const std::string text = read_text_file(opt.config_path);
    RuntimeConfig cfg = parse_runtime_config(text);
    for (ExperimentConfig& panel : cfg.panels) {
        if (panel.methods.empty()) {
            MethodConfig em;
            em.name = em.label = "em";
            em.fit = panel.fit;
            MethodConfig otss;
            otss.name = otss.label = "otss";
            otss.fit = panel.fit;
            panel.methods = {em, otss};
        }
    }
    cfg.validate();
    const std::string hash = config_hash(text);
    const fs::path dir = prepare_out_dir(opt, cfg.name, hash);

    std::string raw = csv::join({"panel", "seed", "method", "fit_seconds"});
    std::string summary;
    bool hard_fail = false, any_ok = false;
    for (const ExperimentConfig& panel : cfg.panels) {
        const PanelRun run = execute_panel(panel, opt.jobs, opt.seed_offset);
        hard_fail = hard_fail || run.hard_fail;
        any_ok = any_ok || run.any_ok;
        std::map<std::string, std::vector<double>> seconds;
        for (const TaskResult& r : run.results) {
            if (!r.ok) continue;
            raw += csv::join({panel.name, csv::field(r.summary.seed), r.summary.method,
                              csv::field(r.summary.fit_seconds)});
            seconds[r.summary.method].push_back(r.summary.fit_seconds);
        }
        summary += panel.name + ":";
        for (const MethodConfig& m : panel.methods) {
            const auto it = seconds.find(m.label);
            if (it == seconds.end()) continue;
            const auto [mean, sd] = mean_sd(it->second);
            summary += " " + m.label + "=" + io::format_shortest(mean) + "+-" +
                       io::format_shortest(sd) + "s";
        }
        const auto em_it = seconds.find("em");
        const auto ot_it = seconds.find("otss");
        if (em_it != seconds.end() && ot_it != seconds.end()) {
            const double em_mean = mean_sd(em_it->second).first;
            const double ot_mean = mean_sd(ot_it->second).first;
            if (ot_mean > 0.0)
                summary += " ratio_em_over_otss=" + io::format_shortest(em_mean / ot_mean);
        }
        summary += "\n";
    }

    write_file(dir / "runtime.csv", raw);
    write_file(dir / "runtime_summary.txt", summary);

    if (hard_fail || !any_ok) return 1;
    return 0;
}

} // namespace otss::cli
