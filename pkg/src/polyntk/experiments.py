"""Desk-scale experiment drivers.

Every ``run_*`` function is a pure function of its config: all randomness is
derived from ``config.seed`` through :func:`derive_seed`, and CSV floats are
written with ``repr`` (shortest round-trip), so re-running a config
reproduces its CSV files byte for byte.
"""

from __future__ import annotations

import csv
import json
import math
import os
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from polyntk import __version__
from polyntk.dynamics import TrainConfig, gd_train, max_safe_lr, stability_report, write_trace
from polyntk.kernels import Family, KernelModel, pnn_ntk, theory_init_bound
from polyntk.nets import ArchSpec, _factor_grads, empirical_ntk, forward, init_params
from polyntk.regression import Dataset, assemble_gram, fit, predict, spectrum_bounds
from polyntk.spectral import (
    HarmonicMixture,
    decay_slope,
    eigenvalues_from_coeffs,
    harmonic_target_eval,
    kernel_profile_coeffs,
    residual_projections,
    sample_sphere,
)

__all__ = [
    "RunConfig",
    "RayExtrapolationSpec",
    "QuadraticTarget",
    "derive_seed",
    "ray_poly_degree_fit",
    "run_extrapolation",
    "run_exact_extrapolation",
    "run_converge_init",
    "run_stability",
    "run_spectrum",
    "run_spectral_bias",
    "TARGETS",
]

THREADS_ENV = "POLYNTK_THREADS"


# --- plumbing -------------------------------------------------------------------


@dataclass
class RunConfig:
    """Settings shared by all experiments plus a free-form ``params`` dict."""

    experiment: str
    seed: int = 0
    out: str | None = None
    threads: int = 1
    params: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.params.get(key, default)

    def to_dict(self):
        return asdict(self)


def derive_seed(master, *keys):
    """64-bit seed for the substream ``(master, *keys)``."""
    seq = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, np.uint64)[0])


def _rng(master, *keys):
    return np.random.default_rng(derive_seed(master, *keys))


def resolve_threads(requested=None):
    if requested:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def _map(fn, items, threads):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def version_string():
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_sidecar(path, config, started, extra=None):
    payload = {
        "config": config.to_dict(),
        "version": version_string(),
        "duration_s": round(time.perf_counter() - started, 3),
    }
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _out_dir(config):
    if config.out is None:
        return None
    path = Path(config.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# --- extrapolation ----------------------------------------------------------------

TARGETS = {
    "poly3": (1, lambda X: X[:, 0] ** 3 + X[:, 0] ** 2 - 10 * X[:, 0] + 5),
    "cos2x": (1, lambda X: np.cos(2 * X[:, 0])),
    "quad2d": (2, lambda X: X[:, 0] ** 2 + X[:, 1] ** 2),
}


@dataclass(frozen=True)
class RayExtrapolationSpec:
    """Points ``(t + h) v`` for ``h`` in ``offsets``; ``t > 1``."""

    direction: np.ndarray
    base_scale: float
    offsets: np.ndarray

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=float)
        if self.base_scale <= 1:
            raise ValueError("base scale t must exceed 1")
        if offsets.size == 0 or not np.all(np.isfinite(offsets)) or np.any(offsets < 0):
            raise ValueError("offsets must be finite and nonnegative")
        if np.any(np.diff(offsets) <= 0):
            raise ValueError("offsets must be strictly increasing")
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=float))
        object.__setattr__(self, "offsets", offsets)

    def points(self):
        return (self.base_scale + self.offsets)[:, None] * self.direction[None, :]


def ray_poly_degree_fit(h, f, max_degree=6, tol=1e-3):
    """Smallest polynomial degree whose least-squares fit has relative residual <= tol.

    Returns ``(best_degree, residuals)`` where ``residuals[k]`` is
    ``||fit_k - f|| / ||f||``; ``best_degree`` is ``None`` if no degree qualifies.
    """
    h = np.asarray(h, dtype=float)
    f = np.asarray(f, dtype=float)
    scale = np.linalg.norm(f)
    if scale == 0:
        return 0, [0.0] * (max_degree + 1)
    residuals = []
    for deg in range(max_degree + 1):
        coef = np.polynomial.polynomial.polyfit(h, f, deg)
        fitted = np.polynomial.polynomial.polyval(h, coef)
        residuals.append(float(np.linalg.norm(fitted - f) / scale))
    best = next((k for k, r in enumerate(residuals) if r <= tol), None)
    return best, residuals


def poly_r2(h, f, degree):
    coef = np.polynomial.polynomial.polyfit(h, f, degree)
    fitted = np.polynomial.polynomial.polyval(h, coef)
    ss_res = float(np.sum((f - fitted) ** 2))
    ss_tot = float(np.sum((f - f.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def run_extrapolation(config):
    """Kernel regression with the PNN and MLP NTKs, evaluated along a ray.

    Training inputs are drawn uniformly from ``[-1, 1]^d`` with ``d >= 2``
    (the one-variable targets read ``x1`` only): without a bias term a
    one-dimensional input only has two directions, so its Gram matrix would
    have rank two. The ray starts at
    ``t v`` with ``v`` a training input of maximal norm (rescaled so that
    ``||v|| = max ||x_i||``) and runs to ``(t + h_max) v``.
    """
    started = time.perf_counter()
    target = config.get("target", "poly3")
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {sorted(TARGETS)}")
    dim, fn = TARGETS[target]
    dim = int(config.get("dim", max(dim, 2)))
    degree = int(config.get("degree", 3))
    depth = int(config.get("mlp_depth", degree + 1))
    n_train = int(config.get("n_train", 64))
    base_scale = float(config.get("base_scale", 1.05))
    h_max = float(config.get("h_max", 2.0))
    n_h = int(config.get("n_h", 41))

    rng = _rng(config.seed, 0)
    X = rng.uniform(-1.0, 1.0, size=(n_train, dim))
    data = Dataset(X, fn(X))
    norms = np.linalg.norm(X, axis=1)
    v = config.get("direction")
    v = X[np.argmax(norms)] if v is None else np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v) * float(config.get("ray_norm", norms.max()))
    ray = RayExtrapolationSpec(v, base_scale, np.linspace(0.0, h_max, n_h))
    pts = ray.points()

    pnn = fit(KernelModel(Family.PNN, degree, dim), data)
    mlp = fit(KernelModel(Family.MLP, depth, dim), data)
    f_pnn = predict(pnn, pts)
    f_mlp = predict(mlp, pts)
    truth = fn(pts)
    rows = list(zip(ray.offsets, f_pnn, f_mlp, truth))

    mlp_scale = float(np.max(np.abs(f_mlp)))
    second_diff = np.abs(np.diff(f_mlp, 2))
    mlp_degree, mlp_res = ray_poly_degree_fit(ray.offsets, f_mlp)
    pnn_degree, pnn_res = ray_poly_degree_fit(ray.offsets, f_pnn)
    summary = {
        "target": target,
        "pnn_degree": degree,
        "mlp_depth": depth,
        "jitter_pnn": pnn.jitter,
        "jitter_mlp": mlp.jitter,
        "mlp_max_second_diff": float(second_diff.max()),
        "mlp_output_scale": mlp_scale,
        "mlp_best_degree": mlp_degree,
        "pnn_best_degree": pnn_degree,
        "mlp_residuals": mlp_res,
        "pnn_residuals": pnn_res,
        "pnn_poly_r2": poly_r2(ray.offsets, f_pnn, degree),
        "train_mse_pnn": float(np.mean((predict(pnn, X) - data.y) ** 2)),
        "train_mse_mlp": float(np.mean((predict(mlp, X) - data.y) ** 2)),
    }
    out = _out_dir(config)
    if out is not None:
        write_csv(out / f"extrapolation_{target}.csv", ["h", "f_pnn", "f_mlp", "target"], rows)
        write_sidecar(out / f"extrapolation_{target}.json", config, started, {"summary": summary})
    return rows, summary


@dataclass(frozen=True)
class QuadraticTarget:
    beta: np.ndarray

    def __post_init__(self):
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        if beta.shape[0] != beta.shape[1]:
            raise ValueError("beta must be square")
        object.__setattr__(self, "beta", 0.5 * (beta + beta.T))

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.einsum("ni,ij,nj->n", X, self.beta, X)


def _exact_grid(dim, radii, n_dirs, rng):
    if dim == 2:
        ang = 2 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    else:
        dirs = sample_sphere(rng, n_dirs, dim)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def run_exact_extrapolation(config):
    """Degree-2 PNN kernel regression on a quadratic target, full vs positive-orthant support.

    Full training set: ``{+-e_i}`` plus ``n_random`` random unit vectors.
    Ablation: ``{e_i}`` plus random unit vectors folded into the positive
    orthant. Test points have norms in ``[1.5, 3]``.
    """
    started = time.perf_counter()
    dim = int(config.get("dim", 2))
    beta = np.asarray(config.get("beta", np.eye(dim).tolist()), dtype=float)
    target = QuadraticTarget(beta)
    n_random = int(config.get("n_random", 16))
    radii = np.linspace(1.5, 3.0, int(config.get("n_radii", 7)))
    n_dirs = int(config.get("n_dirs", 64))

    rng = _rng(config.seed, 0)
    eye = np.eye(dim)
    extra = sample_sphere(rng, n_random, dim)
    X_full = np.concatenate([eye, -eye, extra])
    X_pos = np.concatenate([eye, np.abs(extra)])
    X_test = _exact_grid(dim, radii, n_dirs, _rng(config.seed, 1))
    kernel = KernelModel(Family.PNN, 2, dim)

    rows, summary = [], {}
    for label, X in (("full", X_full), ("positive", X_pos)):
        model = fit(kernel, Dataset(X, target(X)))
        pred = predict(model, X_test)
        truth = target(X_test)
        denom = np.where(np.abs(truth) > 0, np.abs(truth), 1.0)
        rel = np.abs(pred - truth) / denom
        summary[label] = {
            "median_rel_err": float(np.median(rel)),
            "max_rel_err": float(rel.max()),
            "jitter": model.jitter,
            "n_train": int(X.shape[0]),
        }
        for x, p, t, r in zip(X_test, pred, truth, rel):
            rows.append((label, *x, p, t, r))
    header = ["train_set"] + [f"x{i + 1}" for i in range(dim)] + ["f_pred", "f_true", "rel_err"]
    out = _out_dir(config)
    if out is not None:
        write_csv(out / "exact_extrapolation.csv", header, rows)
        write_sidecar(out / "exact_extrapolation.json", config, started, {"summary": summary})
    return rows, summary


# --- NTK at initialization and during training ------------------------------------


def _unit_pairs(rng, n_pairs, dim):
    a = sample_sphere(rng, n_pairs, dim)
    b = sample_sphere(rng, n_pairs, dim)
    return a, b


def run_converge_init(config):
    """``|<grad f(x), grad f(xp)> - K(x, xp)|`` over widths, seeds and fixed unit-sphere pairs."""
    started = time.perf_counter()
    degree = int(config.get("degree", 2))
    dim = int(config.get("dim", 5))
    widths = [int(w) for w in config.get("widths", [256, 1024, 4096])]
    n_seeds = int(config.get("n_seeds", 20))
    n_pairs = int(config.get("n_pairs", 4))
    delta = float(config.get("delta", 0.1))

    a, b = _unit_pairs(_rng(config.seed, 0), n_pairs, dim)
    analytic = pnn_ntk(degree, a, b)
    threads = resolve_threads(config.threads)

    def deviations(job):
        wi, s = job
        spec = ArchSpec(Family.PNN, degree, widths[wi], dim, derive_seed(config.seed, 1, wi, s))
        params = init_params(spec)
        K = empirical_ntk(params, np.concatenate([a, b]))
        return np.abs(K[np.arange(n_pairs), n_pairs + np.arange(n_pairs)] - analytic)

    jobs = [(wi, s) for wi in range(len(widths)) for s in range(n_seeds)]
    devs = np.array(_map(deviations, jobs, threads)).reshape(len(widths), n_seeds, n_pairs)
    rows, samples = [], []
    for wi, m in enumerate(widths):
        bound = theory_init_bound(degree, m, delta)[1]
        rows.append((m, float(devs[wi].mean()), float(devs[wi].max()), bound))
        for s in range(n_seeds):
            for p in range(n_pairs):
                samples.append((m, s, p, float(devs[wi, s, p]), bound))
    means = [r[1] for r in rows]
    summary = {
        "mean_abs_dev": means,
        "reduction_factors": [means[i + 1] / means[i] for i in range(len(means) - 1)],
        "all_below_bound": bool(all(r[2] <= r[3] for r in rows)),
        "width_ratios": [widths[i + 1] / widths[i] for i in range(len(widths) - 1)],
    }
    out = _out_dir(config)
    if out is not None:
        write_csv(out / "converge_init.csv", ["width", "mean_abs_dev", "max_abs_dev", "theory_bound"], rows)
        write_csv(out / "converge_init_samples.csv", ["width", "seed", "pair", "abs_dev", "theory_bound"], samples)
        write_sidecar(out / "converge_init.json", config, started, {"summary": summary})
    return rows, summary, devs


def stability_dataset(seed, n=16, dim=4):
    """Distinct unit-sphere inputs with a smooth nonlinear target."""
    rng = _rng(seed, 0)
    X = sample_sphere(rng, n, dim)
    y = np.sin(2 * X[:, 0]) + X[:, 1] * X[:, 2]
    return Dataset(X, y)


def run_stability(config):
    """Gradient-descent traces over a width sweep, each width with several seeds.

    ``eta0 = lr_fraction * max_safe_lr`` from the analytic NTK Gram matrix.
    """
    started = time.perf_counter()
    degree = int(config.get("degree", 2))
    n = int(config.get("n", 16))
    dim = int(config.get("dim", 4))
    widths = [int(w) for w in config.get("widths", [256, 2048, 4096])]
    n_seeds = int(config.get("n_seeds", 5))
    steps = int(config.get("steps", 500))
    every = int(config.get("record_ntk_every", 10))
    frac = float(config.get("lr_fraction", 0.5))

    data = stability_dataset(config.seed, n, dim)
    gram = assemble_gram(KernelModel(Family.PNN, degree, dim), data.X)
    eta0 = frac * max_safe_lr(gram)
    train_cfg = TrainConfig(eta0, steps, every)
    out = _out_dir(config)
    threads = resolve_threads(config.threads)

    def one(job):
        wi, s = job
        spec = ArchSpec(Family.PNN, degree, widths[wi], dim, derive_seed(config.seed, 1, wi, s))
        trace = gd_train(init_params(spec), data, train_cfg)
        return trace, stability_report(trace, gram, eta0)

    jobs = [(wi, s) for wi in range(len(widths)) for s in range(n_seeds)]
    results = _map(one, jobs, threads)
    lam_min, lam_max = spectrum_bounds(gram)
    rows, per_width = [], {}
    for (wi, s), (trace, rep) in zip(jobs, results):
        m = widths[wi]
        cum = rep["cum_step_norm"]
        tail = float(cum[-1] - cum[len(cum) // 2]) if cum.size > 1 else 0.0
        rows.append((
            m, s, rep["r0"], float(trace.loss[-1]), float(np.min(rep["margin"])), rep["envelope_holds"],
            rep["total_param_drift"], tail, rep["sup_ntk_drift"], rep["relative_sup_ntk_drift"],
        ))
        per_width.setdefault(m, []).append(rep)
        if out is not None:
            meta = {
                "config": config.to_dict(), "width": m, "seed_index": s, "r0": rep["r0"],
                "lambda_min": lam_min, "lambda_max": lam_max, "eta0": eta0,
            }
            write_trace(trace, out / f"trace_m{m}_s{s}.csv", out / f"trace_m{m}_s{s}.json", _jsonable(meta))
    summary = {
        "eta0": eta0,
        "lambda_min": lam_min,
        "lambda_max": lam_max,
        "median_sup_drift": {m: float(np.median([r["sup_ntk_drift"] for r in reps])) for m, reps in per_width.items()},
        "median_relative_sup_drift": {
            m: float(np.median([r["relative_sup_ntk_drift"] for r in reps])) for m, reps in per_width.items()
        },
        "envelope_holds": {m: all(r["envelope_holds"] for r in reps) for m, reps in per_width.items()},
    }
    if out is not None:
        header = ["width", "seed", "r0", "final_loss", "min_envelope_margin", "envelope_holds",
                  "total_param_drift", "late_param_drift", "sup_ntk_drift", "relative_sup_ntk_drift"]
        write_csv(out / "stability_summary.csv", header, rows)
        write_sidecar(out / "stability_summary.json", config, started, {"summary": summary})
    return rows, summary, results


# --- spectra ------------------------------------------------------------------------


def run_spectrum(config):
    """Mercer coefficients, eigenvalues and fitted decay slopes for PNN and MLP profiles."""
    started = time.perf_counter()
    dims = [int(d) for d in config.get("dims", [4])]
    pnn_degrees = [int(n) for n in config.get("pnn_degrees", [2])]
    mlp_depths = [int(n) for n in config.get("mlp_depths", [3])]
    kmax = int(config.get("kmax", 40))
    nodes = config.get("nodes")
    k_lo, k_hi = config.get("fit_range", [10, 40])
    parity = bool(config.get("parity_filter", True))
    out = _out_dir(config)

    table, slopes = [], {}
    jobs = [(D, Family.PNN, n) for D in dims for n in pnn_degrees] + [
        (D, Family.MLP, n) for D in dims for n in mlp_depths
    ]
    for D, family, n in jobs:
        series = kernel_profile_coeffs(KernelModel(family, n, D).profile(), kmax, nodes)
        est = eigenvalues_from_coeffs(series, D)
        slope = decay_slope(est, k_lo, k_hi, parity)
        slopes[(family.value, n, D)] = slope
        for k, (c, mu) in enumerate(zip(series.coeffs, est.mu)):
            table.append((family.value, n, D, k, c, mu))
        if out is not None:
            stem = f"spectrum_{family.value}{n}_D{D}"
            write_csv(out / f"{stem}.csv", ["k", "c_k", "mu_k"],
                      [(k, c, mu) for k, (c, mu) in enumerate(zip(series.coeffs, est.mu))])
            write_sidecar(out / f"{stem}.json", config, started, {
                "family": family.value, "N": n, "D": D, "kmax": kmax,
                "nodes": nodes or max(8 * kmax, 16), "parity_filter": parity,
                "fitted_slope": slope, "fit_range": [k_lo, k_hi],
            })
    verdicts = {}
    for D in dims:
        for n in pnn_degrees:
            for depth in mlp_depths:
                diff = slopes[("pnn", n, D)] - slopes[("mlp", depth, D)]
                verdicts[f"pnn{n}_vs_mlp{depth}_D{D}"] = {"slope_difference": diff, "pnn_slower": diff > 0}
    summary = {"slopes": {f"{f}{n}_D{D}": s for (f, n, D), s in slopes.items()}, "verdicts": verdicts}
    if out is not None:
        write_sidecar(out / "spectrum_summary.json", config, started, {"summary": summary})
    return table, summary


# --- spectral bias -----------------------------------------------------------------


def run_spectral_bias(config):
    """Minibatch SGD of finite PNNs on a mixture of Gegenbauer harmonics.

    The loss on a minibatch is ``0.5 * sum_batch (g(x) - y)^2`` where
    ``g = f(.; theta_t) - f(.; theta_0)`` is the network centered at its
    initial function, so the residual at step 0 is exactly ``-y``. Hidden
    weights are trained; the readout is fixed. Projection lengths of the
    full-sample residual onto each harmonic are recorded every
    ``record_every`` iterations.
    """
    started = time.perf_counter()
    D = int(config.get("dim", 3))
    n = int(config.get("n_samples", 1000))
    degrees = tuple(int(k) for k in config.get("harmonics", [1, 3, 4, 5, 8, 12]))
    orders = [int(N) for N in config.get("orders", [3, 6, 9])]
    width = int(config.get("width", 2048))
    iterations = int(config.get("iterations", 5000))
    lr = float(config.get("learning_rate", 0.0016))
    batch = int(config.get("batch_size", 128))
    every = int(config.get("record_every", 50))

    rng = _rng(config.seed, 0)
    X = sample_sphere(rng, n, D)
    mixture = HarmonicMixture.random(degrees, D, rng)
    y = harmonic_target_eval(mixture, X)
    comps = mixture.components(X)
    threads = resolve_threads(config.threads)

    def train(oi):
        order = orders[oi]
        params = init_params(ArchSpec(Family.PNN, order, width, D, derive_seed(config.seed, 1, oi)))
        f0 = forward(params, X)
        batches = _rng(config.seed, 2, oi)
        layers = params.layers.copy()
        records = []
        for it in range(iterations + 1):
            if it % every == 0 or it == iterations:
                residual = forward(params, X) - f0 - y
                if not np.all(np.isfinite(residual)):
                    raise FloatingPointError(f"order {order}: residual diverged at iteration {it}")
                records.append((it, residual_projections(residual, comps)))
            if it == iterations:
                break
            idx = batches.choice(n, batch, replace=False)
            xb = X[idx]
            G, out = _factor_grads(params, xb)
            r = out @ params.w_out - f0[idx] - y[idx]
            layers -= lr * (xb.T @ (G * r[:, None])).transpose(0, 2, 1)
            params = replace(params, layers=layers)
        return records

    all_records = _map(train, range(len(orders)), threads)
    rows = []
    curves = {}
    for order, records in zip(orders, all_records):
        curves[order] = np.array([p for _, p in records])
        for it, proj in records:
            for k, v in zip(degrees, proj):
                rows.append((it, order, k, v))
    iters = [it for it, _ in all_records[0]]
    summary = _spectral_bias_summary(curves, degrees, orders)
    summary["record_iterations"] = len(iters)
    out = _out_dir(config)
    if out is not None:
        write_csv(out / "spectral_bias.csv", ["iteration", "order", "harmonic", "projection_length"], rows)
        write_sidecar(out / "spectral_bias.json", config, started, {"summary": summary})
    return rows, summary


def _spectral_bias_summary(curves, degrees, orders):
    """Final projections and a decay-speed score per (order, harmonic).

    The score is the mean over recorded iterations of ``proj_t / proj_0``:
    smaller means the component was learned earlier.
    """
    final, speed = {}, {}
    for order in orders:
        c = curves[order]
        rel = c / np.where(c[0] > 0, c[0], 1.0)
        final[order] = dict(zip(degrees, c[-1].tolist()))
        speed[order] = dict(zip(degrees, rel.mean(axis=0).tolist()))
    fastest = {order: min(speed[order], key=speed[order].get) for order in orders}
    return {"final_projection": final, "decay_score": speed, "fastest_harmonic": fastest}
