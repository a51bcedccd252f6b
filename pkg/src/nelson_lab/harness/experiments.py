"""Named experiments: each wires the physics modules into metrics with verdicts."""

from __future__ import annotations

import csv
import math
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .. import circle, estimators, hidden, nelson
from ..fields import Grid, l1_distance, resample
from ..madelung import PacketFactory, averaged_energy, decompose, hbar_consistency
from ..params import PhysParams, harmonic_potential
from ..schrodinger import WaveField, eigenstate, gaussian_packet, iter_states
from .config import ExperimentConfig
from .report import Artifacts, Metric

Result = tuple[list[Metric], dict]


@dataclass(frozen=True)
class Experiment:
    name: str
    summary: str
    func: Callable[[ExperimentConfig, Artifacts], Result]
    options: dict[str, Any] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)
    ensemble: dict[str, Any] = field(default_factory=dict)
    grid: dict[str, Any] = field(default_factory=dict)
    check_options: Callable[[dict], list[str]] | None = None


REGISTRY: dict[str, Experiment] = {}


def experiment(name: str, summary: str, **kw) -> Callable:
    def wrap(func):
        REGISTRY[name] = Experiment(name, summary, func, **kw)
        return func
    return wrap


def runtime_metric(name: str, seconds: float, limit: float) -> Metric:
    return Metric.at_most(f"{name}.runtime_s", seconds, limit)


# ---------------------------------------------------------------- benchmarks

@dataclass(frozen=True)
class Benchmark:
    name: str
    params: PhysParams
    wave: WaveField
    t_char: float
    coarse: Grid


OMEGA = 1.0


def benchmark(kind: str, params: PhysParams, n_nodes: int) -> Benchmark:
    """Free spreading Gaussian, harmonic coherent state or harmonic ground state."""
    m, hbar = params.m, params.hbar
    if kind == "free":
        grid = Grid.line(-20.0, 20.0, n_nodes)
        wave = gaussian_packet(grid, params, 0.0, 1.0, 0.0)
        return Benchmark(kind, params, wave, 2 * m / hbar, Grid.line(-20.0, 20.0, 161))
    grid = Grid.line(-10.0, 10.0, n_nodes)
    p = params.with_potential(harmonic_potential(grid, m, OMEGA))
    if kind == "coherent":
        wave = gaussian_packet(grid, p, 2.0, math.sqrt(hbar / (2 * m * OMEGA)), 0.0)
    elif kind == "ground":
        wave = eigenstate(grid, p, 0)[0]
    else:
        raise ValueError(f"unknown benchmark {kind!r}")
    return Benchmark(kind, p, wave, 2 * np.pi / OMEGA, Grid.line(-10.0, 10.0, 81))


def _check_states(allowed: set[str]) -> Callable[[dict], list[str]]:
    def check(opts: dict) -> list[str]:
        bad = [s for s in opts["states"] if s not in allowed]
        return [f"options.states: unknown state(s) {bad}; choose from {sorted(allowed)}"] if bad else []
    return check


def _write_rows(art: Artifacts, name: str, rows: list[dict]) -> None:
    with open(art.path(name), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for k, v in r.items()})


def _plot(art: Artifacts, name: str, x, series: dict, xlabel: str, ylabel: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in series.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(art.path(name), dpi=100, metadata={"Software": None})
    plt.close(fig)


# ---------------------------------------------------------------- triangle

def triangle_run(bench: Benchmark, dt: float, N: int, seed: int, n_checkpoints: int = 5,
                 T: float | None = None) -> dict:
    """SDE histogram, Fokker-Planck density and |Psi|^2 at equally spaced checkpoints."""
    p, grid = bench.params, bench.wave.grid
    T = bench.t_char if T is None else T
    stride = max(1, round(T / (dt * n_checkpoints)))
    steps = stride * n_checkpoints
    drifts, oracle = [], []
    for k, w in enumerate(iter_states(bench.wave, steps, dt, p)):
        if k < steps:
            drifts.append(decompose(w, p).b_fwd)
        if k % stride == 0:
            oracle.append(w.density)
    e0 = nelson.sample_ensemble(bench.wave.density, grid, N, seed)
    history = nelson.run_drifts(e0, drifts, nelson.NoiseSpec(p.nu, dt), record_stride=stride)
    fp = nelson.propagate_density(bench.wave.density, drifts, p.nu, dt, grid,
                                  record_stride=stride)
    rows = []
    coarse = bench.coarse
    for k in range(1, n_checkpoints + 1):
        sde = nelson.histogram(history[k], coarse)
        rf, ro = resample(fp.densities[k], grid, coarse), resample(oracle[k], grid, coarse)
        rows.append({"t": k * stride * dt,
                     "sde_fp": l1_distance(sde, rf, coarse),
                     "sde_oracle": l1_distance(sde, ro, coarse),
                     "fp_oracle": l1_distance(rf, ro, coarse),
                     "mc_scale": nelson.histogram_stderr(ro, coarse, N)})
    final = {"x": coarse.x, "oracle": ro, "fokker_planck": rf, "sde": sde}
    return {"rows": rows, "final": final, "fp_max_clipped": fp.max_clipped, "fp_valid": fp.valid}


@experiment("triangle", "SDE ensemble vs Fokker-Planck vs |Psi|^2 on two benchmark states",
            options={"states": ["free", "coherent"], "n_checkpoints": 5},
            tolerances={"l1": 0.05, "runtime_s": 120.0},
            check_options=_check_states({"free", "coherent", "ground"}))
def run_triangle(cfg: ExperimentConfig, art: Artifacts) -> Result:
    params, ens = cfg.params.build(), cfg.ensemble
    metrics, details = [], {}
    for kind in cfg.options["states"]:
        t0 = time.perf_counter()
        bench = benchmark(kind, params, cfg.grid.n_nodes)
        res = triangle_run(bench, ens.dt, ens.N, ens.seed, cfg.options["n_checkpoints"], ens.T)
        elapsed = time.perf_counter() - t0
        for pair in ("sde_fp", "sde_oracle", "fp_oracle"):
            worst = max(r[pair] for r in res["rows"])
            metrics.append(Metric.at_most(f"{kind}.{pair}_l1_max", worst, cfg.tolerances["l1"]))
        metrics.append(Metric.flag(f"{kind}.fokker_planck_valid", res["fp_valid"]))
        metrics.append(runtime_metric(kind, elapsed, cfg.tolerances["runtime_s"]))
        details[kind] = {"checkpoints": res["rows"], "fp_max_clipped": res["fp_max_clipped"]}
        _write_rows(art, f"triangle_{kind}.csv", res["rows"])
        fin = res["final"]
        _write_rows(art, f"densities_{kind}.csv",
                    [dict(zip(fin, vals)) for vals in zip(*fin.values())])
        _plot(art, f"densities_{kind}.png", fin["x"],
              {k: v for k, v in fin.items() if k != "x"}, "x", "density")
    return metrics, details


# ---------------------------------------------------------------- energy

def energy_series(bench: Benchmark, dt: float, T: float | None = None, stride: int = 10):
    p = bench.params
    steps = round((bench.t_char if T is None else T) / dt)
    ts, es = [], []
    for k, w in enumerate(iter_states(bench.wave, steps, dt, p)):
        if k % stride == 0 or k == steps:
            ts.append(w.t)
            es.append(averaged_energy(decompose(w, p), p))
    return np.array(ts), np.array(es)


def relative_drift(energies: np.ndarray) -> float:
    return float(np.max(np.abs(energies - energies[0])) / abs(energies[0]))


@experiment("energy-conservation", "Drift of the averaged energy functional on oracle states",
            options={"states": ["free", "coherent"], "refined_nodes": 1024},
            tolerances={"drift": 0.005, "refinement_gain": 2.0},
            check_options=_check_states({"free", "coherent", "ground"}))
def run_energy(cfg: ExperimentConfig, art: Artifacts) -> Result:
    params, dt = cfg.params.build(), cfg.ensemble.dt
    metrics, details = [], {}
    for kind in cfg.options["states"]:
        drifts = {}
        for n in (cfg.grid.n_nodes, cfg.options["refined_nodes"]):
            ts, es = energy_series(benchmark(kind, params, n), dt, cfg.ensemble.T)
            drifts[n] = relative_drift(es)
            _write_rows(art, f"energy_{kind}_n{n}.csv",
                        [{"t": t, "energy": e} for t, e in zip(ts, es)])
        coarse, fine = drifts.values()
        metrics.append(Metric.at_most(f"{kind}.relative_drift", coarse, cfg.tolerances["drift"]))
        gain = coarse / fine if fine > 0 else math.inf
        metrics.append(Metric.at_least(f"{kind}.refinement_gain", gain,
                                       cfg.tolerances["refinement_gain"]))
        details[kind] = {"drift_by_nodes": drifts}
    return metrics, details


# ---------------------------------------------------------------- hbar

@experiment("hbar-consistency", "Which hbar relation makes the Hamilton-Jacobi residual converge",
            options={"states": ["free", "coherent"], "n_values": [512, 1024], "t_eval": 1.0},
            tolerances={"order_deviation": 0.3, "plateau_order": 0.5, "min_ratio": 100.0},
            check_options=_check_states({"free", "coherent"}))
def run_hbar(cfg: ExperimentConfig, art: Artifacts) -> Result:
    params = cfg.params.build()
    m, hbar = params.m, params.hbar
    packets = {
        "free": (PacketFactory(-20.0, 20.0, 0.0, 1.0, 0.0), None),
        "coherent": (PacketFactory(-10.0, 10.0, 2.0, math.sqrt(hbar / (2 * m * OMEGA)), 0.0),
                     lambda g: harmonic_potential(g, m, OMEGA)),
    }
    metrics, details = [], {}
    tol = cfg.tolerances
    for kind in cfg.options["states"]:
        packet, pot = packets[kind]
        rep = hbar_consistency(params, packet, tuple(cfg.options["n_values"]),
                               cfg.options["t_eval"], cfg.ensemble.dt, pot)
        metrics += [
            Metric.flag(f"{kind}.winner_is_implemented", rep["winner"] == "implemented"),
            Metric.near(f"{kind}.implemented_order", rep["order"]["implemented"], 2.0,
                        tol["order_deviation"]),
            Metric.at_most(f"{kind}.half_order_abs", abs(rep["order"]["half"]),
                           tol["plateau_order"]),
            Metric.at_least(f"{kind}.half_to_implemented_ratio", rep["ratio_loser_to_winner"],
                            tol["min_ratio"]),
        ]
        details[kind] = rep
        _write_rows(art, f"hbar_{kind}.csv", rep["rows"])
    return metrics, details


# ---------------------------------------------------------------- estimators

def _check_alphas(opts: dict) -> list[str]:
    return [f"options.alphas: alpha={a} gives beta={1 - a}; need alpha + beta = 1 with "
            f"alpha, beta >= 0" for a in opts["alphas"] if not 0 <= a <= 1]


@experiment("estimator-bias", "Alpha dependence of the kinetic estimator on the spreading Gaussian",
            options={"alphas": list(estimators.ALPHAS), "t_center": 2.0, "half_window": 100},
            tolerances={"slope_ratio": 0.1, "symmetric_z": 3.0, "runtime_s": 180.0},
            check_options=_check_alphas)
def run_bias(cfg: ExperimentConfig, art: Artifacts) -> Result:
    ens, o = cfg.ensemble, cfg.options
    bc = estimators.BiasConfig(N=ens.N, dt=ens.dt, t_center=o["t_center"],
                               half_window=o["half_window"], alphas=tuple(o["alphas"]),
                               seed=ens.seed, n_nodes=cfg.grid.n_nodes)
    t0 = time.perf_counter()
    rep = estimators.bias_experiment(bc, cfg.params.build())
    elapsed = time.perf_counter() - t0
    tol = cfg.tolerances
    metrics = [
        Metric.near("slope_ratio", rep["slope_ratio"], 1.0, tol["slope_ratio"]),
        Metric.at_most("symmetric_abs_z", abs(rep["symmetric_z"]), tol["symmetric_z"]),
        runtime_metric("bias", elapsed, tol["runtime_s"]),
    ]
    art.json("bias.json", rep)
    _write_rows(art, "bias.csv", rep["rows"])
    _plot(art, "bias.png", [r["alpha"] for r in rep["rows"]],
          {"measured": [r["estimate"] for r in rep["rows"]],
           "predicted": [r["predicted"] for r in rep["rows"]]}, "alpha", "kinetic estimate")
    return metrics, rep


@experiment("noise-constant-scaling", "Divergent constant m nu / dt of the symmetric estimator",
            options={"dts": [4e-3, 2e-3, 1e-3], "n_samples": 101},
            tolerances={"exponent": 0.1, "amplitude": 0.05},
            ensemble={"seed": 2},
            check_options=lambda o: ([] if o["dts"] and all(d > 0 for d in o["dts"])
                                     else ["options.dts must be positive"])
            + ([] if o["n_samples"] >= 3 else ["options.n_samples must be >= 3"]))
def run_scaling(cfg: ExperimentConfig, art: Artifacts) -> Result:
    ens = cfg.ensemble
    sc = estimators.ScalingConfig(dts=tuple(cfg.options["dts"]), N=ens.N,
                                  T=cfg.options["n_samples"], seed=ens.seed,
                                  n_nodes=cfg.grid.n_nodes)
    rep = estimators.noise_constant_scaling(sc, cfg.params.build())
    metrics = [
        Metric.near("exponent", rep["exponent"], -1.0, cfg.tolerances["exponent"]),
        Metric.at_most("amplitude_rel_error", rep["amplitude_rel_error"],
                       cfg.tolerances["amplitude"]),
    ]
    art.json("scaling.json", rep)
    _write_rows(art, "scaling.csv", rep["rows"])
    return metrics, rep


# ---------------------------------------------------------------- hidden variables

def hidden_cases(params: PhysParams, n_x: int, n_y: int, dt: float) -> dict:
    """Test joint densities with their velocity maps."""
    m = params.m
    xg, yg = Grid.line(-8.0, 8.0, n_x), Grid.line(-6.0, 6.0, n_y)
    X, Y = np.meshgrid(xg.x, yg.x, indexing="ij")
    cases = {}
    cases["bivariate"] = (hidden.bivariate_gaussian(xg, yg, 1.5, 1.0, 0.6),
                          hidden.VelocityMap(Y.copy(), m))
    sigma = np.exp(-0.5 * yg.x**2)
    g = hidden.standardized_y(yg, sigma)
    prod = hidden.product_density(np.exp(-0.5 * xg.x**2), sigma, xg, yg)
    cases["additive"] = (prod, hidden.VelocityMap(np.sin(X) + 0.7 * g[None, :], m))
    cases["uniform"] = (hidden.JointDensity.normalized(np.ones((n_x, n_y)), xg, yg),
                        hidden.VelocityMap(X * Y, m))
    ground = benchmark("ground", params, n_x)
    state = decompose(ground.wave, ground.params)
    cases["nelson"] = hidden.nelson_realizing(state, params.nu, dt, yg, m)
    return cases, state, ground


@experiment("hidden-decomposition", "Drift plus fluctuation split of the averaged subsystem energy",
            options={"y_nodes": 101, "resolution_dt": 1e-3, "mismatch_factor": 1.1},
            tolerances={"identity": 1e-10, "mass": 1e-10, "analytic_drift": 1e-6},
            grid={"n_nodes": 256})
def run_hidden(cfg: ExperimentConfig, art: Artifacts) -> Result:
    params, o, tol = cfg.params.build(), cfg.options, cfg.tolerances
    dt = o["resolution_dt"]
    cases, state, ground = hidden_cases(params, cfg.grid.n_nodes, o["y_nodes"], dt)
    metrics, details = [], {}
    for name, (joint, vel) in cases.items():
        U = ground.params.U(joint.xgrid) if name == "nelson" else None
        dec = hidden.energy_decomposition(joint, vel, U)
        mass = float(np.dot(joint.xgrid.weights, hidden.marginal(joint)))
        metrics.append(Metric.at_most(f"{name}.identity_gap", abs(dec["gap"]), tol["identity"]))
        metrics.append(Metric.at_most(f"{name}.marginal_mass_error", abs(mass - 1), tol["mass"]))
        details[name] = dec
    joint, vel = cases["bivariate"]
    b = hidden.conditional_drift(joint, vel)
    core = np.abs(joint.xgrid.x) <= 3.0
    err = float(np.max(np.abs(b - 0.6 * joint.xgrid.x / 1.5)[core]))
    metrics.append(Metric.at_most("bivariate.conditional_drift_error", err, tol["analytic_drift"]))
    joint, vel = cases["nelson"]
    rep = hidden.drift_decomposition_report(joint, vel, state, params.nu, dt)
    metrics.append(Metric.flag("nelson.realizes_process", rep["realizes_nelson"]))
    wrong = hidden.VelocityMap(state.b_fwd[:, None] + (vel.xdot - state.b_fwd[:, None])
                               * o["mismatch_factor"], vel.m)
    bad = hidden.drift_decomposition_report(joint, wrong, state, params.nu, dt)
    metrics.append(Metric.flag("mismatch.flagged", not bad["realizes_nelson"]))
    details["nelson_report"] = {k: v for k, v in rep.items() if not k.endswith("_residual")}
    with open(art.path("nelson_residuals.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "drift_residual", "variance_residual"])
        for row in zip(joint.xgrid.x, rep["drift_residual"], rep["variance_residual"]):
            w.writerow([repr(float(c)) for c in row])
    art.json("decomposition.json", details)
    return metrics, details


# ---------------------------------------------------------------- circle

@experiment("circle-wallstrom", "Uniform circle states with quantized and unquantized w",
            options={"ws": [0.0, 0.3, 1.0, 2.0], "ensemble_ws": [0.0, 0.3, 1.0],
                     "n_bins": 32, "ripple": 0.01},
            tolerances={"residual": 1e-10, "norm": 1e-10, "density_l1": 0.03, "winding_z": 3.0},
            ensemble={"dt": 1e-2, "T": 10.0, "seed": 7},
            grid={"n_nodes": 256})
def run_circle(cfg: ExperimentConfig, art: Artifacts) -> Result:
    params, o, tol, ens = cfg.params.build(), cfg.options, cfg.tolerances, cfg.ensemble
    m, hbar = params.m, params.hbar
    grid = Grid.circle(cfg.grid.n_nodes)
    metrics, rows = [], {}
    for w in o["ws"]:
        state, psi = circle.wallstrom_state(w, m, hbar, grid)
        dyn = circle.check_circle_dynamics(state, params)
        eig = circle.momentum_eigen_check(psi, w, m, hbar)
        metrics += [
            Metric.at_most(f"w={w}.omega_error", abs(state.omega - 0.5 * m * w * w), 0.0),
            Metric.at_most(f"w={w}.hj_residual", max(dyn["hj_residual_max"],
                                                     dyn["hj_residual_seam"]), tol["residual"]),
            Metric.at_most(f"w={w}.continuity_residual",
                           max(dyn["continuity_residual_max"], dyn["continuity_residual_seam"]),
                           tol["residual"]),
            Metric.flag(f"w={w}.seam_localized_iff_unquantized", eig["localized_iff_unquantized"]),
            Metric.at_most(f"w={w}.norm_error", abs(eig["norm"] - 1), tol["norm"]),
        ]
        rows[w] = {"w": w, "omega": state.omega, "seam_residual": eig["seam_residual"],
                   "interior_residual_max": eig["interior_residual_max"],
                   "winding_rate": None, "winding_rate_se": None}
        if o["ripple"] and state.quantized:
            rip = circle.check_circle_dynamics(state, params, ripple=o["ripple"])
            metrics.append(Metric.flag(f"w={w}.ripple_oracle_below_ansatz",
                                       rip["oracle_hj_residual_max"] < rip["hj_residual_max"]))
    rates = {}
    for w in o["ensemble_ws"]:
        state, _ = circle.wallstrom_state(w, m, hbar, grid)
        rep = circle.circle_ensemble_check(state, params, ens.N, ens.T, ens.dt, ens.seed,
                                           o["n_bins"])
        z = (rep["winding_rate"] - rep["winding_rate_expected"]) / rep["winding_rate_se"]
        metrics += [
            Metric.at_most(f"w={w}.density_l1", rep["density_l1_max"], tol["density_l1"]),
            Metric.at_most(f"w={w}.winding_abs_z", abs(z), tol["winding_z"]),
        ]
        rates[w] = (rep["winding_rate"], rep["winding_rate_se"])
        row = rows.setdefault(w, {"w": w, "omega": state.omega, "seam_residual": None,
                                  "interior_residual_max": None})
        row.update(winding_rate=rep["winding_rate"], winding_rate_se=rep["winding_rate_se"],
                   density_l1=rep["density_l1_max"])
    ws = sorted(rates)
    for a, b in zip(ws, ws[1:]):
        gap = abs(rates[a][0] - rates[b][0])
        se = math.hypot(rates[a][1], rates[b][1])
        metrics.append(Metric.flag(f"w={a}_vs_{b}.distinct_winding", gap > tol["winding_z"] * se))
    report = list(rows.values())
    art.json("circle.json", report)
    return metrics, {"states": report}


# ---------------------------------------------------------------- time reversal

def reversal_run(bench: Benchmark, dt: float, N: int, seed: int, T: float,
                 n_checkpoints: int = 5) -> list[dict]:
    """Forward ensemble from rho(0) and reversed-clock ensemble from rho(T), compared in time."""
    p, grid = bench.params, bench.wave.grid
    stride = max(1, round(T / (dt * n_checkpoints)))
    steps = stride * n_checkpoints
    waves = list(iter_states(bench.wave, steps, dt, p))
    fwd = nelson.evolve_ensemble(nelson.sample_ensemble(waves[0].density, grid, N, seed),
                                 waves, p, dt, record_stride=stride)
    start = nelson.sample_ensemble(waves[-1].density, grid, N, seed + 1, t=waves[-1].t)
    bwd = nelson.evolve_reversed_clock(start, waves[::-1], p, dt, record_stride=stride)[::-1]
    coarse = bench.coarse
    rows = []
    for k in range(n_checkpoints + 1):
        hf, hb = nelson.histogram(fwd[k], coarse), nelson.histogram(bwd[k], coarse)
        ro = resample(waves[k * stride].density, grid, coarse)
        rows.append({"t": fwd[k].t, "t_backward": bwd[k].t,
                     "forward_backward": l1_distance(hf, hb, coarse),
                     "forward_oracle": l1_distance(hf, ro, coarse),
                     "backward_oracle": l1_distance(hb, ro, coarse),
                     "mc_scale": nelson.histogram_stderr(ro, coarse, N)})
    return rows


def _bundle_for_reversal(params: PhysParams, N: int, T: int, dt: float, seed: int):
    sc = estimators.ScalingConfig(N=N, T=T)
    return estimators.ground_state_bundle(dt, sc, params, seed)[0]


def _same_state(a, b) -> bool:
    arrays = ("rho", "S", "v", "u", "b_fwd", "b_bwd", "floored")
    return all(np.array_equal(getattr(a, k), getattr(b, k)) for k in arrays) and \
        (a.winding, a.t, a.hbar) == (b.winding, b.t, b.hbar)


@experiment("time-reversal", "Time-reversal structure of states, estimators and ensembles",
            options={"states": ["ground", "free"], "duration": 1.0, "bundle_N": 10_000,
                     "bundle_T": 101},
            tolerances={"mc_factor": 2.0},
            check_options=_check_states({"ground", "free", "coherent"}))
def run_reversal(cfg: ExperimentConfig, art: Artifacts) -> Result:
    params, o, ens = cfg.params.build(), cfg.options, cfg.ensemble
    metrics, details = [], {}
    moving = decompose(gaussian_packet(Grid.line(-20, 20, cfg.grid.n_nodes), params, 1.0, 1.0,
                                       0.7), params)
    metrics.append(Metric.flag("time_reverse_involution",
                               _same_state(nelson.time_reverse(nelson.time_reverse(moving)), moving)))
    rev = nelson.time_reverse(moving)
    metrics.append(Metric.flag("time_reverse_swaps_drifts",
                               np.array_equal(rev.b_fwd, -moving.b_bwd)
                               and np.array_equal(rev.b_bwd, -moving.b_fwd)))
    paths = _bundle_for_reversal(params, o["bundle_N"], o["bundle_T"], ens.dt, ens.seed)
    back = paths.reversed()
    half = estimators.EstimatorSpec(0.5, 0.5, params.m)
    a, b = estimators.EstimatorSpec(0.3, 0.7, params.m), estimators.EstimatorSpec(0.7, 0.3, params.m)
    metrics.append(Metric.flag("symmetric_estimator_bit_invariant",
                               estimators.kinetic_estimate(paths, half)
                               == estimators.kinetic_estimate(back, half)))
    metrics.append(Metric.flag("alpha_beta_swap_under_reversal",
                               estimators.kinetic_estimate(paths, a)
                               == estimators.kinetic_estimate(back, b)))
    T = ens.T if ens.T is not None else o["duration"]
    for kind in o["states"]:
        bench = benchmark(kind, params, cfg.grid.n_nodes)
        rows = reversal_run(bench, ens.dt, ens.N, ens.seed, T)
        worst = max(r["forward_backward"] / r["mc_scale"] for r in rows)
        metrics.append(Metric.at_most(f"{kind}.forward_backward_l1_over_mc", worst,
                                      cfg.tolerances["mc_factor"] * math.sqrt(2)))
        details[kind] = rows
        _write_rows(art, f"reversal_{kind}.csv", rows)
    return metrics, details
