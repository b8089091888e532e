"""End-to-end smoke test for the otss python module."""

import math

import numpy as np

import otss


def small_benchmark(seed=0):
    cfg = otss.BenchConfig()
    cfg.n_total = 600
    cfg.n_train = 400
    cfg.d_sig = 2
    cfg.d_nuis = 2
    cfg.J = 3
    cfg.M = 10
    cfg.seed = seed
    return cfg, otss.generate_benchmark(cfg, family="two_expert", mode="soft")


def quick_fit_config():
    fc = otss.FitConfig()
    fc.restarts = 1
    fc.max_epochs = 200
    fc.patience = 40
    fc.reg_grid = [1e-3]
    fc.seed = 0
    return fc


def check_benchmark_shapes():
    cfg, bench = small_benchmark()
    assert bench.d_sig == cfg.d_sig
    assert bench.n_train + bench.n_val == cfg.n_train
    assert bench.n_eval == cfg.n_total - cfg.n_train

    lib = np.asarray(bench.library)
    assert lib.shape == (cfg.M, cfg.J)

    ctx = np.asarray(bench.eval_contexts())
    w = np.asarray(bench.eval_weights())
    assert ctx.shape == (bench.n_eval, cfg.d_sig + cfg.d_nuis)
    assert w.shape == (bench.n_eval, cfg.J)
    assert np.isfinite(ctx).all() and np.isfinite(w).all()

    w0 = np.asarray(bench.true_weight(ctx[0]))
    assert np.allclose(w0, w[0], atol=1e-12)


def check_fit_and_evaluate():
    _, bench = small_benchmark()
    fc = quick_fit_config()

    pooled = otss.fit(bench, "pooled", fit_config=fc)
    assert pooled.name == "pooled"
    assert pooled.param_count > 0
    assert pooled.gate(np.asarray(bench.eval_contexts())[0]) is None

    gated = otss.fit(bench, "otss", k=2, fit_config=fc)
    assert gated.name == "otss"
    assert isinstance(gated.selected_hypers, dict) and gated.selected_hypers

    ctx0 = np.asarray(bench.eval_contexts())[0]
    pred = np.asarray(gated.predict(ctx0))
    assert pred.shape == (3,) and np.isfinite(pred).all()

    alpha = np.asarray(gated.gate(ctx0))
    assert alpha.shape == (2,)
    assert (alpha >= -1e-12).all()
    assert abs(alpha.sum() - 1.0) < 1e-9

    for model in (pooled, gated):
        res = otss.evaluate(model, bench)
        assert set(res) == {"weight_mse", "mean_regret", "match_rate"}
        assert all(math.isfinite(v) for v in res.values())
        assert res["weight_mse"] >= 0.0
        assert res["mean_regret"] >= 0.0
        assert 0.0 <= res["match_rate"] <= 1.0


def check_regret_record():
    _, bench = small_benchmark()
    lib = np.asarray(bench.library)
    w_star = np.asarray(bench.eval_weights())[0]

    exact = otss.regret(w_star, w_star, lib)
    assert exact["regret"] <= 1e-12
    assert exact["chosen_index"] == exact["oracle_index"]
    assert exact["margin_gamma"] >= 0.0
    assert exact["perturb_delta"] <= 1e-12

    w_hat = w_star + 0.3 * np.ones_like(w_star)
    noisy = otss.regret(w_star, w_hat, lib)
    assert noisy["regret"] >= 0.0
    assert noisy["perturb_delta"] > 0.0
    if noisy["margin_gamma"] > 2.0 * noisy["perturb_delta"]:
        assert noisy["regret"] == 0.0
    else:
        assert noisy["regret"] <= 2.0 * noisy["perturb_delta"] + 1e-12


def check_bootstrap():
    a = [1.0, 2.0, 3.0, 4.0, 5.0]
    b = [0.0, 1.0, 2.0, 3.0, 4.0]
    mean_diff, ci_lo, ci_hi = otss.paired_bootstrap(a, b, resamples=200, seed=0)
    assert abs(mean_diff - 1.0) < 1e-12
    assert abs(ci_lo - 1.0) < 1e-12 and abs(ci_hi - 1.0) < 1e-12

    rng = np.random.default_rng(7)
    x = rng.normal(size=30).tolist()
    y = rng.normal(size=30).tolist()
    first = otss.paired_bootstrap(x, y, resamples=500, seed=3)
    second = otss.paired_bootstrap(x, y, resamples=500, seed=3)
    assert first == second
    assert first[1] <= first[0] <= first[2]


def check_determinism():
    _, bench_a = small_benchmark(seed=11)
    _, bench_b = small_benchmark(seed=11)
    assert np.array_equal(np.asarray(bench_a.eval_weights()),
                          np.asarray(bench_b.eval_weights()))

    fc = quick_fit_config()
    ra = otss.evaluate(otss.fit(bench_a, "otss", k=2, fit_config=fc), bench_a)
    rb = otss.evaluate(otss.fit(bench_b, "otss", k=2, fit_config=fc), bench_b)
    assert ra == rb


def main():
    check_benchmark_shapes()
    check_fit_and_evaluate()
    check_regret_record()
    check_bootstrap()
    check_determinism()
    print("python smoke: ok")


if __name__ == "__main__":
    main()
