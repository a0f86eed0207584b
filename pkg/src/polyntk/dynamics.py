"""Full-batch gradient descent on the squared loss and NTK-stability traces."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from polyntk.kernels import Family
from polyntk.nets import empirical_ntk, flatten, forward, loss_gradient, unflatten
from polyntk.regression import GramMatrix, spectrum_bounds

__all__ = [
    "TrainConfig",
    "TrainTrace",
    "DivergenceError",
    "max_safe_lr",
    "gd_train",
    "stability_report",
    "write_trace",
]


class DivergenceError(ArithmeticError):
    def __init__(self, step, loss):
        super().__init__(f"loss became non-finite ({loss}) at step {step}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    steps: int
    record_ntk_every: int = 1

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")
        if self.record_ntk_every < 1:
            raise ValueError("record_ntk_every must be >= 1")


@dataclass
class TrainTrace:
    """Per-step training record.

    ``loss[t]`` is ``||f(X; theta_t) - y||_2`` (not squared). ``step_norm[t]``
    is ``||theta_t - theta_{t-1}||_2`` with ``step_norm[0] = 0``.
    ``ntk_drift`` holds ``||K_t - K_0||_F`` at the steps listed in
    ``ntk_steps``.
    """

    loss: np.ndarray
    step_norm: np.ndarray
    ntk_steps: np.ndarray
    ntk_drift: np.ndarray
    final_params: object = field(repr=False)
    ntk_init: np.ndarray = field(repr=False, default=None)

    @property
    def cum_step_norm(self):
        return np.cumsum(self.step_norm)

    @property
    def steps(self):
        return self.loss.size - 1


def max_safe_lr(gram):
    """``2 / (lambda_min + lambda_max)`` of the analytic NTK Gram matrix."""
    lam_min, lam_max = spectrum_bounds(gram)
    if lam_min + lam_max <= 0:
        raise ValueError("Gram matrix has no positive spectrum")
    return 2.0 / (lam_min + lam_max)


def gd_train(params0, dataset, config):
    """Plain gradient descent on ``0.5 * sum_i (f(x_i) - y_i)^2``.

    The readout ``w_out`` stays at its initial value; every hidden weight
    matrix is updated with step ``learning_rate * J^T e``. The empirical NTK
    (over all parameters, readout included) is recorded every
    ``record_ntk_every`` steps and at the final step.
    """
    if params0.family not in (Family.PNN, Family.MFN):
        raise ValueError("gradient-descent traces are defined for pnn and mfn networks")
    X, y = dataset.X, dataset.y
    _, counts = np.unique(X, axis=0, return_counts=True)
    if np.any(counts > 1):
        raise ValueError("training inputs must be distinct")
    theta = flatten(params0)
    trainable = np.ones_like(theta)
    trainable[params0.layers.size :] = 0.0
    params = params0
    eta = config.learning_rate

    ntk0 = empirical_ntk(params, X)
    losses = np.empty(config.steps + 1)
    steps = np.zeros(config.steps + 1)
    ntk_steps, drift = [0], [0.0]
    for t in range(config.steps + 1):
        residual = forward(params, X) - y
        loss = float(np.linalg.norm(residual))
        if not math.isfinite(loss):
            raise DivergenceError(t, loss)
        losses[t] = loss
        if t > 0 and (t % config.record_ntk_every == 0 or t == config.steps):
            ntk_steps.append(t)
            drift.append(float(np.linalg.norm(empirical_ntk(params, X) - ntk0)))
        if t == config.steps:
            break
        update = eta * trainable * loss_gradient(params, X, residual)
        steps[t + 1] = float(np.linalg.norm(update))
        theta = theta - update
        params = unflatten(params, theta)
    return TrainTrace(losses, steps, np.array(ntk_steps), np.array(drift), params, ntk0)


def stability_report(trace, analytic_gram, eta0):
    """Compare a trace with the loss envelope ``(1 - eta0 lambda_min / 3)^t R_0``.

    ``R_0`` is the measured initial loss. Returns a dict of per-step arrays and
    scalar summaries; ``margin`` is ``envelope - loss`` (nonnegative when the
    envelope holds).
    """
    entries = analytic_gram.entries if isinstance(analytic_gram, GramMatrix) else np.asarray(analytic_gram)
    if trace.ntk_init is not None and trace.ntk_init.shape != entries.shape:
        raise ValueError(f"trace covers {trace.ntk_init.shape[0]} samples, Gram has {entries.shape[0]}")
    lam_min, lam_max = spectrum_bounds(entries)
    t = np.arange(trace.loss.size)
    r0 = float(trace.loss[0])
    envelope = (1.0 - eta0 * lam_min / 3.0) ** t * r0
    cum = trace.cum_step_norm
    total = float(cum[-1]) if cum.size else 0.0
    ntk0_norm = float(np.linalg.norm(trace.ntk_init)) if trace.ntk_init is not None else float("nan")
    sup_drift = float(np.max(trace.ntk_drift)) if trace.ntk_drift.size else 0.0
    return {
        "envelope": envelope,
        "margin": envelope - trace.loss,
        "envelope_holds": bool(np.all(trace.loss <= envelope * (1 + 1e-12))),
        "cum_step_norm": cum,
        "total_param_drift": total,
        "sup_ntk_drift": sup_drift,
        "relative_sup_ntk_drift": sup_drift / ntk0_norm if ntk0_norm > 0 else 0.0,
        "r0": r0,
        "lambda_min": lam_min,
        "lambda_max": lam_max,
        "eta0": float(eta0),
    }


def write_trace(trace, csv_path, json_path=None, meta=None):
    """CSV ``step,loss,step_norm,cum_step_norm,ntk_drift_fro`` plus optional JSON sidecar.

    ``ntk_drift_fro`` is empty on steps where the NTK was not recorded.
    """
    drift = dict(zip(trace.ntk_steps.tolist(), trace.ntk_drift.tolist()))
    cum = trace.cum_step_norm
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "loss", "step_norm", "cum_step_norm", "ntk_drift_fro"])
        for t in range(trace.loss.size):
            writer.writerow(
                [t, repr(float(trace.loss[t])), repr(float(trace.step_norm[t])), repr(float(cum[t])),
                 repr(drift[t]) if t in drift else ""]
            )
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(meta or {}, fh, indent=2, sort_keys=True)
            fh.write("\n")
