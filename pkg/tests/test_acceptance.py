"""End-to-end acceptance checks.

Each test exercises one headline guarantee of the package at its stated
tolerance and runtime budget, and prints a single PASS/FAIL line (visible
under ``pytest -s``; the ``-v`` test status gives the same verdict).
"""

import signal
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy import stats

from hawkesrep.core import (
    EventStream,
    KernelSpec,
    MarkSpace,
    MvParams,
    TargetSpec,
    affine_fn,
    build_uniform_partition,
    categorical_density,
    constant_fn,
    uniform_density,
)
from hawkesrep.infer import (
    check_assumptions,
    fit_poisson_closed_form,
    log_likelihood,
    log_likelihood_gradient,
)
from hawkesrep.represent import (
    build_ansatz,
    histogram_density,
    induced_ground_intensity,
    induced_mark_density,
    l1_discrepancy,
)
from hawkesrep.simulate import SimConfig, simulate_target, target_residuals
from hawkesrep.stability import branching_matrix, j_statistic
from hawkesrep.study import (
    StudyConfig,
    log_spaced_counts,
    mae_slope,
    run_study,
    study_target,
)

from oracles import finite_difference_gradient, naive_log_likelihood
from test_infer import random_instance

UNIT = MarkSpace.interval(0.0, 1.0)


def _verdict(num, name, ok, detail, elapsed, budget):
    ok = bool(ok) and elapsed < budget
    status = "PASS" if ok else "FAIL"
    line = (
        f"[{num}/9] {status} {name}: {detail} "
        f"({elapsed:.2f}s, budget {budget:.0f}s)"
    )
    print(line)
    assert ok, line


def nonseparable_spec():
    """Uniform marks with mark-dependent productivity 0.3 + 0.4 M."""
    return TargetSpec(
        space=UNIT,
        immigrant_rate=1.0,
        mark_density=uniform_density(UNIT),
        productivity=affine_fn(0.3, 0.4),
        beta=2.0,
        kernel=KernelSpec(convention="unnormalized"),
    )


def test_01_poisson_closed_form_equivalence():
    # With no excitation the per-cell MLE has a closed form, the induced
    # ground rate is the plain event rate, and the induced mark density is
    # the histogram estimator.  Horizon and cell measures are dyadic so the
    # identities are exact in floating point, not just close.
    start = time.perf_counter()
    horizon = 512.0
    worst_hist = 0.0
    disc_space = MarkSpace.with_labels([1, 2, 3, 4])
    for s in range(50):
        if s % 5 == 4:
            space, k = disc_space, 4
            density = categorical_density(disc_space, [0.1, 0.2, 0.3, 0.4])
        else:
            space, k = UNIT, (1, 2, 4, 8)[s % 4]
            density = uniform_density(UNIT) if s % 2 else affine_fn(0.5, 1.0)
        spec = TargetSpec(
            space=space,
            immigrant_rate=0.5 + (s % 3) * 0.4,
            mark_density=density,
            productivity=constant_fn(0.0),
            beta=1.0,
            kernel=KernelSpec(),
        )
        stream = simulate_target(spec, SimConfig(horizon=horizon, seed=1000 + s))
        part = build_uniform_partition(space, k)
        fitted = fit_poisson_closed_form(part, stream)
        counts = np.bincount(part.cell_indices(stream.marks), minlength=k)
        assert np.array_equal(fitted.lambda0, counts / (horizon * part.measures))
        assert np.all(fitted.alpha == 0.0)
        rate = induced_ground_intensity(fitted, part, stream, horizon * 0.625)
        assert rate == stream.n / horizon
        hist = histogram_density(stream, part)
        worst_hist = max(worst_hist, abs(float(hist @ part.measures) - 1.0))
    assert worst_hist <= 1e-12
    _verdict(
        1,
        "closed-form rates on excitation-free streams",
        True,
        f"50 streams exact; worst histogram mass deviation {worst_hist:.2e}",
        time.perf_counter() - start,
        5.0,
    )


def test_02_likelihood_matches_naive_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(100):
        convention = "density" if i % 2 == 0 else "unnormalized"
        params, partition, stream = random_instance(
            rng, convention, max_n=200, max_k=4
        )
        fast = log_likelihood(params, partition, stream)
        slow = naive_log_likelihood(params, partition, stream)
        worst = max(worst, abs(fast - slow) / abs(slow))
    _verdict(
        2,
        "recursive log-likelihood vs direct-sum oracle",
        worst <= 1e-9,
        f"100 instances, both kernel conventions, worst rel err {worst:.2e}",
        time.perf_counter() - start,
        30.0,
    )


def test_03_gradient_matches_finite_differences():
    start = time.perf_counter()
    rng = np.random.default_rng(31)
    worst = 0.0
    for i in range(20):
        convention = "density" if i % 2 == 0 else "unnormalized"
        params, partition, stream = random_instance(
            rng, convention, max_n=150, max_k=4
        )
        # keep parameters off the boundary for clean central differences
        params = MvParams.from_flat(
            np.maximum(params.flatten(), 0.05), params.k, params.kernel
        )
        analytic = log_likelihood_gradient(params, partition, stream).flatten()

        def loglik_at(theta, params=params, partition=partition, stream=stream):
            return log_likelihood(
                MvParams.from_flat(theta, params.k, params.kernel),
                partition,
                stream,
            )

        numeric = finite_difference_gradient(loglik_at, params.flatten())
        scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
        worst = max(worst, float((np.abs(analytic - numeric) / scale).max()))
    _verdict(
        3,
        "analytic gradient vs central differences",
        worst <= 1e-5,
        f"20 instances, worst componentwise rel err {worst:.2e}",
        time.perf_counter() - start,
        30.0,
    )


def test_04_ansatz_spectral_radius_is_branching_integral():
    start = time.perf_counter()
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(20):
        spec = TargetSpec(
            UNIT,
            float(rng.uniform(0.2, 3.0)),
            affine_fn(0.5, 1.0),
            affine_fn(float(rng.uniform(0.05, 0.4)), float(rng.uniform(0.0, 0.4))),
            float(rng.uniform(0.5, 3.0)),
            KernelSpec(),
        )
        part = build_uniform_partition(UNIT, int(rng.integers(1, 7)))
        ansatz = build_ansatz(spec, part)
        rho = branching_matrix(ansatz.params, part).spectral_radius
        worst = max(worst, abs(rho - j_statistic(spec, part)))
    # the uniform-mark unit-excitation family integrates to exactly one half
    family = study_target()
    half_dev = 0.0
    for k in (1, 2, 4):
        part = build_uniform_partition(family.space, k)
        ansatz = build_ansatz(family, part)
        rho = branching_matrix(ansatz.params, part).spectral_radius
        half_dev = max(half_dev, abs(rho - 0.5))
    _verdict(
        4,
        "rank-one branching radius equals the scalar excitation integral",
        worst <= 1e-10 and half_dev <= 1e-10,
        f"20 random targets dev {worst:.2e}; reference family |rho-0.5| "
        f"{half_dev:.2e}",
        time.perf_counter() - start,
        5.0,
    )


def test_05_discrepancy_shrinks_with_refinement():
    # One fixed mid-size realization of a non-separable target: the intensity
    # gap must fall strictly as the mark partition refines, and the finest
    # representation must beat the coarsest by a factor of four.
    start = time.perf_counter()
    spec = nonseparable_spec()
    stream = simulate_target(spec, SimConfig(horizon=375.0, seed=0))
    assert 400 <= stream.n <= 700  # N around 500
    l1 = {}
    for k in (1, 2, 4, 8):
        part = build_uniform_partition(UNIT, k)
        ansatz = build_ansatz(spec, part)
        l1[k] = l1_discrepancy(spec, ansatz.params, part, stream).l1
    decreasing = l1[1] > l1[2] > l1[4] > l1[8]
    ratio = l1[8] / l1[1]
    _verdict(
        5,
        "intensity gap decreases under partition refinement",
        decreasing and ratio < 0.25,
        f"N={stream.n}; L1 " + " > ".join(f"{l1[k]:.3f}" for k in (1, 2, 4, 8))
        + f"; finest/coarsest {ratio:.3f}",
        time.perf_counter() - start,
        120.0,
    )


def test_06_study_error_decay(tmp_path):
    start = time.perf_counter()
    cfg = StudyConfig(
        realizations=16,
        horizon=2200.0,
        target_counts=log_spaced_counts(2.0, 3.5, 8),
        k_values=(1, 2, 4),
        spec=study_target(),
        seed=13,
        workers=8,
        output_dir=tmp_path / "study",
    )
    result = run_study(cfg)
    assert result.complete
    maes = {
        k: [c.mae for c in result.summary if c.k == k] for k in cfg.k_values
    }
    monotone = all(
        all(a > b for a, b in zip(maes[k], maes[k][1:])) for k in cfg.k_values
    )
    slopes = {k: mae_slope(result.summary, k) for k in cfg.k_values}
    slopes_ok = all(-0.7 <= s <= -0.3 for s in slopes.values())
    ordering = maes[4][-1] > maes[1][-1]
    _verdict(
        6,
        "estimation error decays with window size per component count",
        monotone and slopes_ok and ordering,
        f"strictly decreasing={monotone}; slopes "
        + ", ".join(f"K={k}: {s:.2f}" for k, s in slopes.items())
        + f"; largest-window MAE K=4 {maes[4][-1]:.3f} > K=1 {maes[1][-1]:.3f}",
        time.perf_counter() - start,
        1800.0,
    )


def test_07_simulator_calibration():
    start = time.perf_counter()
    spec = study_target()
    horizon = 500.0
    counts, pooled = [], []
    for seed in range(200):
        stream = simulate_target(spec, SimConfig(horizon=horizon, seed=seed))
        counts.append(stream.n)
        pooled.append(target_residuals(spec, stream))
    counts = np.asarray(counts, dtype=float)
    pooled = np.concatenate(pooled)
    expected = 1.0 * horizon / (1.0 - 0.5)  # lambda0 T / (1 - alpha/beta)
    se = counts.std(ddof=1) / np.sqrt(counts.size)
    z = abs(counts.mean() - expected) / se
    ks = stats.kstest(pooled, "expon")
    _verdict(
        7,
        "simulated counts and compensator residuals are calibrated",
        z < 3.0 and ks.pvalue >= 0.01,
        f"mean count {counts.mean():.1f} vs {expected:.0f} (|z|={z:.2f}); "
        f"KS on {pooled.size} pooled residuals p={ks.pvalue:.3f}",
        time.perf_counter() - start,
        120.0,
    )


def _study_config_text(out_dir):
    return (
        "realizations = 4\n"
        "horizon = 300\n"
        "target_counts = 150,300\n"
        "k_values = 1,2\n"
        "seed = 3\n"
        "workers = 1\n"
        f"output_dir = {out_dir}\n"
    )


def _run_cli_study(cfg_path, *extra):
    return subprocess.run(
        [sys.executable, "-m", "hawkesrep", "study", "--config", str(cfg_path)]
        + list(extra),
        capture_output=True,
        text=True,
    )


def test_08_determinism_and_resume(tmp_path):
    start = time.perf_counter()
    compared = ("rows.csv", "summary.csv", "manifest.json",
                "mae_vs_n.svg", "mae_vs_n_ci.svg")

    # reference: two independent clean runs must agree byte for byte
    ref1, ref2, killed = (tmp_path / n for n in ("ref1", "ref2", "killed"))
    for out_dir in (ref1, ref2):
        cfg_path = tmp_path / f"{out_dir.name}.cfg"
        cfg_path.write_text(_study_config_text(out_dir))
        proc = _run_cli_study(cfg_path)
        assert proc.returncode == 0, proc.stderr
    two_runs_equal = all(
        (ref1 / name).read_bytes() == (ref2 / name).read_bytes()
        for name in compared
    )

    # kill a run mid-flight (no chance to flush or clean up), then resume
    cfg_path = tmp_path / "killed.cfg"
    cfg_path.write_text(_study_config_text(killed))
    proc = subprocess.Popen(
        [sys.executable, "-m", "hawkesrep", "study", "--config", str(cfg_path)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    rows = killed / "rows.csv"
    deadline = time.time() + 180
    while time.time() < deadline and proc.poll() is None:
        if rows.exists() and len(rows.read_text().splitlines()) >= 3:
            break
        time.sleep(0.02)
    mid_flight = proc.poll() is None
    proc.send_signal(signal.SIGKILL)
    proc.wait()
    resumed = _run_cli_study(cfg_path, "--resume")
    assert resumed.returncode == 0, resumed.stderr
    resume_equal = all(
        (killed / name).read_bytes() == (ref1 / name).read_bytes()
        for name in compared
    )
    _verdict(
        8,
        "experiment outputs are byte-identical across reruns and kill-resume",
        two_runs_equal and resume_equal,
        f"clean reruns equal={two_runs_equal}; killed mid-flight={mid_flight}; "
        f"resumed equal={resume_equal} on {len(compared)} files",
        time.perf_counter() - start,
        300.0,
    )


def test_09_assumption_flags_and_density_invariance():
    start = time.perf_counter()
    part = build_uniform_partition(UNIT, 2)
    params = MvParams(
        [0.5, 0.5],
        np.full((2, 2), 0.25),
        np.full((2, 2), 2.0),
        KernelSpec(convention="unnormalized"),
    )

    # a stream that never visits the upper cell must trip the coverage check
    one_sided = EventStream([1.0, 2.5, 4.0], [0.1, 0.3, 0.2], 10.0, UNIT)
    report = check_assumptions(params, part, one_sided)
    a4_flagged = not report.a4.passed and "2" in report.a4.detail

    # scaling the excitation past criticality must trip the stability check
    covered = EventStream([1.0, 2.5, 4.0], [0.1, 0.7, 0.2], 10.0, UNIT)
    hot = MvParams(
        params.lambda0, params.alpha * 8.8, params.beta, params.kernel
    )
    assert branching_matrix(hot, part).spectral_radius >= 1.0
    hot_report = check_assumptions(hot, part, covered)
    a1_flagged = not hot_report.a1.passed and hot_report.a4.passed

    # on separable targets the induced mark density never moves in time
    worst = 0.0
    grid = np.linspace(0.025, 0.975, 20)
    for productivity in (constant_fn(0.4), affine_fn(0.3, 0.4)):
        spec = TargetSpec(
            UNIT, 1.0, uniform_density(UNIT), productivity, 2.0,
            KernelSpec(convention="unnormalized"),
        )
        stream = simulate_target(spec, SimConfig(horizon=60.0, seed=2))
        for k in (1, 3, 5):
            p = build_uniform_partition(UNIT, k)
            ansatz = build_ansatz(spec, p)
            expected = ansatz.f_bar[p.cell_indices(grid)]
            for t in (0.5, 7.25, 31.0, 59.9):
                dens = induced_mark_density(ansatz.params, p, stream, t, grid)
                worst = max(worst, float(np.max(np.abs(dens - expected))))
    _verdict(
        9,
        "diagnostics flag bad configurations; induced density is static",
        a4_flagged and a1_flagged and worst <= 1e-12,
        f"missing-type flagged={a4_flagged}; supercritical flagged="
        f"{a1_flagged}; max density drift {worst:.2e}",
        time.perf_counter() - start,
        10.0,
    )
