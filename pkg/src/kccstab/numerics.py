"""Time-domain verification: trajectories, deviation flows, focusing profiles.

Fixed-step RK4 supplies reproducible traces of the nonlinear system and of
the linearized deviation dynamics; a scaling-and-squaring matrix exponential
gives the exact solution of the latter for cross-checking.  The focusing
profile compares the adapted squared norm of a deviation vector against t²
over a short probe window, which is the trajectory-level stability
diagnostic: bunching (below t²) at Jacobi-stable points, dispersing (above)
at unstable ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .expr import compile_callable, mul
from .kcc import Model, ModelError, kcc_deviation
from .stability import Classifier

DEFAULT_PROBE_WINDOW = 0.5
DEFAULT_PROBE_SAMPLES = 100
DENOMINATOR_FLOOR = 1e-10

BUNCHING = "Bunching"
DISPERSING = "Dispersing"
MIXED = "Mixed"


class IntegrationError(RuntimeError):
    """Integration aborted (vanishing denominator along the trajectory)."""

    def __init__(self, time: float, detail: str = ""):
        self.time = time
        msg = f"integration aborted at t = {time:.6g}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass(frozen=True)
class Trace:
    """Uniform-step time series of state vectors."""

    times: np.ndarray                 # shape (T,)
    states: np.ndarray                # shape (T, k)
    names: tuple[str, ...]            # k column labels
    dt: float | None                  # None for non-uniform sampling
    method: str

    def column(self, name: str) -> np.ndarray:
        return self.states[:, self.names.index(name)]

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True)
class FocusingProfile:
    """Adapted squared norm of a deviation vector against t² near 0+.

    norm_sq(t) = <xi(t), xi(t)> / <W, W>, so the initial deviation velocity
    has unit adapted norm by construction and norm_sq(0) = 0.
    """

    times: np.ndarray
    norm_sq: np.ndarray
    t_sq: np.ndarray
    verdict: str
    w_used: tuple[float, ...] = field(default=())


# ---------------------------------------------------------------------------
# nonlinear integration


def _vector_field(model: Model, params) -> tuple:
    """Compiled acceleration field and denominator guards over (x, y)."""
    from .expr import canonicalize, p_to_expr

    args = model.xs + model.ys
    gs = model.g_bound(params)
    accel = compile_callable([mul(-2, g) for g in gs], args)
    dens = [canonicalize(g, args).den for g in gs]
    den_fn = compile_callable([p_to_expr(d, args) for d in dens], args)
    return accel, den_fn


def integrate(
    model: Model,
    params: Mapping[str, Fraction | float] | None,
    initial: tuple[Sequence[float], Sequence[float]],
    t_end: float,
    dt: float,
) -> Trace:
    """Classical RK4 on (x' = y, y' = -2G) from initial (x0, y0).

    Aborts with IntegrationError when any canonical G denominator falls
    below 1e-10 in magnitude at an evaluation point.
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("t_end and dt must be positive")
    n = model.n
    x0, y0 = initial
    if len(x0) != n or len(y0) != n:
        raise ModelError(f"initial condition must have {n} positions and velocities")
    accel, den_fn = _vector_field(model, params)

    def rhs(t, z):
        if min(abs(d) for d in den_fn(*z)) < DENOMINATOR_FLOOR:
            raise IntegrationError(t, "denominator below 1e-10")
        try:
            a = accel(*z)
        except ZeroDivisionError:
            raise IntegrationError(t, "denominator reached zero") from None
        return np.concatenate([z[n:], a])

    nsteps = int(round(t_end / dt))
    times = np.arange(nsteps + 1) * dt
    states = np.empty((nsteps + 1, 2 * n))
    z = np.array(list(x0) + list(y0), dtype=float)
    states[0] = z
    for k in range(1, nsteps + 1):
        t0 = float(times[k - 1])
        k1 = rhs(t0, z)
        k2 = rhs(t0 + 0.5 * dt, z + 0.5 * dt * k1)
        k3 = rhs(t0 + 0.5 * dt, z + 0.5 * dt * k2)
        k4 = rhs(float(times[k]), z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise IntegrationError(float(times[k]), "state became non-finite")
        states[k] = z
    return Trace(
        times=times,
        states=states,
        names=model.xs + model.ys,
        dt=dt,
        method="rk4",
    )


# ---------------------------------------------------------------------------
# linearized deviation dynamics


def _deviation_names(n: int) -> tuple[str, ...]:
    return tuple(f"xi{i}" for i in range(1, n + 1)) + tuple(
        f"xidot{i}" for i in range(1, n + 1)
    )


def _check_w(W, n: int) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != (n,):
        raise ValueError(f"W must have length {n}")
    if not np.any(W):
        raise ValueError("W must be nonzero (deviation starts with xi(0) = 0)")
    return W


def integrate_deviation(
    model: Model,
    params: Mapping[str, Fraction | float] | None,
    point: Sequence[float],
    W: Sequence[float],
    t_end: float,
    dt: float,
) -> Trace:
    """RK4 on the deviation equations xi'' = A21 xi + A22 xi' frozen at a point.

    Initial conditions are xi(0) = 0, xi'(0) = W (nonzero).
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("t_end and dt must be positive")
    n = model.n
    W = _check_w(W, n)
    a21, a22 = kcc_deviation(model).at_point(params, point)
    A = _block_matrix(np.array(a21), np.array(a22))
    nsteps = int(round(t_end / dt))
    times = np.arange(nsteps + 1) * dt
    states = np.empty((nsteps + 1, 2 * n))
    z = np.concatenate([np.zeros(n), W])
    states[0] = z
    for k in range(1, nsteps + 1):
        k1 = A @ z
        k2 = A @ (z + 0.5 * dt * k1)
        k3 = A @ (z + 0.5 * dt * k2)
        k4 = A @ (z + dt * k3)
        z = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[k] = z
    return Trace(
        times=times,
        states=states,
        names=_deviation_names(n),
        dt=dt,
        method="rk4",
    )


def _block_matrix(A21: np.ndarray, A22: np.ndarray) -> np.ndarray:
    n = A21.shape[0]
    A = np.zeros((2 * n, 2 * n))
    A[:n, n:] = np.eye(n)
    A[n:, :n] = A21
    A[n:, n:] = A22
    return A


def matrix_exp(A: np.ndarray) -> np.ndarray:
    """exp(A) by scaling-and-squaring with a truncated Taylor series."""
    A = np.asarray(A, dtype=float)
    norm = np.linalg.norm(A, 1)
    s = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    B = A / (2 ** s)
    E = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, 60):
        term = term @ B / k
        E = E + term
        if np.linalg.norm(term, 1) <= 1e-16 * np.linalg.norm(E, 1):
            break
    for _ in range(s):
        E = E @ E
    return E


def matrix_exp_solution(
    A21: np.ndarray | Sequence[Sequence[float]],
    A22: np.ndarray | Sequence[Sequence[float]],
    W: Sequence[float],
    times: Sequence[float],
) -> Trace:
    """Exact deviation solution (xi, xi')(t) = exp(At)·(0, W) at given times.

    A is the first-order block matrix of the frozen deviation system.  For
    uniformly spaced times one exponential is reused multiplicatively.
    """
    A21 = np.asarray(A21, dtype=float)
    A22 = np.asarray(A22, dtype=float)
    n = A21.shape[0]
    W = _check_w(W, n)
    times = np.asarray(times, dtype=float)
    if len(times) == 0:
        raise ValueError("times must be nonempty")
    A = _block_matrix(A21, A22)
    v0 = np.concatenate([np.zeros(n), W])
    states = np.empty((len(times), 2 * n))
    diffs = np.diff(times)
    uniform = len(times) >= 2 and np.allclose(diffs, diffs[0], rtol=1e-12, atol=1e-15)
    if uniform and times[0] == 0.0:
        E = matrix_exp(A * diffs[0])
        v = v0
        states[0] = v
        for k in range(1, len(times)):
            v = E @ v
            states[k] = v
    else:
        for k, t in enumerate(times):
            states[k] = matrix_exp(A * t) @ v0
    dt = float(diffs[0]) if uniform else None
    return Trace(
        times=times,
        states=states,
        names=_deviation_names(n),
        dt=dt,
        method="expm",
    )


# ---------------------------------------------------------------------------
# focusing diagnostic


def focusing_profile(
    dev_trace: Trace,
    W: Sequence[float],
    t_probe: float = DEFAULT_PROBE_WINDOW,
) -> FocusingProfile:
    """Compare the adapted squared deviation norm against t² on (0, t_probe].

    Bunching when norm_sq < t² at every sampled time in the window,
    Dispersing when > at every one, Mixed otherwise (ties included).
    """
    n = len(W)
    W = np.asarray(W, dtype=float)
    wsq = float(W @ W)
    if wsq == 0.0:
        raise ValueError("W must be nonzero")
    mask = (dev_trace.times > 0) & (dev_trace.times <= t_probe * (1 + 1e-12))
    if np.count_nonzero(mask) < 3:
        raise ValueError(
            f"degenerate trace: {np.count_nonzero(mask)} samples in (0, {t_probe}]"
        )
    times = dev_trace.times[mask]
    xi = dev_trace.states[mask, :n]
    norm_sq = np.einsum("ij,ij->i", xi, xi) / wsq
    t_sq = times ** 2
    if np.all(norm_sq < t_sq):
        verdict = BUNCHING
    elif np.all(norm_sq > t_sq):
        verdict = DISPERSING
    else:
        verdict = MIXED
    return FocusingProfile(
        times=times,
        norm_sq=norm_sq,
        t_sq=t_sq,
        verdict=verdict,
        w_used=tuple(float(w) for w in W),
    )


def dominant_deviation_direction(P: np.ndarray) -> np.ndarray:
    """Unit vector along the eigendirection of the largest-real-part eigenvalue."""
    P = np.asarray(P, dtype=float)
    vals, vecs = np.linalg.eig(P)
    v = vecs[:, int(np.argmax(vals.real))]
    w = v.real
    if np.linalg.norm(w) <= 1e-12 * np.linalg.norm(v):
        w = v.imag
    w = w / np.linalg.norm(w)
    for c in w:
        if abs(c) > 1e-12:
            if c < 0:
                w = -w
            break
    return w


def jacobi_focusing(
    model: Model,
    params: Mapping[str, Fraction | float] | None,
    point: Sequence[float],
    W: Sequence[float] | None = None,
    t_probe: float = DEFAULT_PROBE_WINDOW,
    samples: int = DEFAULT_PROBE_SAMPLES,
) -> FocusingProfile:
    """Focusing/dispersing verdict at a fixed point from the covariant flow.

    In the covariant frame the deviation dynamics at a fixed point freeze to
    u'' = P(x̄)·u, whose solutions are trigonometric exactly when every
    eigenvalue of P has negative real part; integrating that system from
    u(0) = 0, u'(0) = W and profiling against t² therefore reproduces the
    stable/unstable dichotomy as Bunching/Dispersing.  W defaults to the
    dominant eigendirection of P, which maximizes the margin of the verdict.
    """
    P = Classifier(model, params).curvature_at(point)
    n = P.shape[0]
    if W is None:
        W = dominant_deviation_direction(P)
    W = _check_w(W, n)
    h = t_probe / samples
    times = np.arange(samples + 1) * h
    trace = matrix_exp_solution(P, np.zeros((n, n)), W, times)
    return focusing_profile(trace, W, t_probe)


# ---------------------------------------------------------------------------
# finite-difference cross-check and CSV export


def perturbation_oracle(
    model: Model,
    params: Mapping[str, Fraction | float] | None,
    base: Trace | Sequence[float],
    W: Sequence[float],
    eta: float = 1e-6,
    t_end: float | None = None,
    dt: float | None = None,
) -> Trace:
    """Deviation estimate (x̃(t) - x(t)) / eta from two nonlinear runs.

    The base trajectory starts at rest; the perturbed one from velocity
    eta·W.  Accepts either a precomputed base Trace (its grid is reused) or
    a point, in which case t_end and dt are required.
    """
    if eta == 0:
        raise ValueError("eta must be nonzero")
    n = model.n
    W = _check_w(W, n)
    if isinstance(base, Trace):
        base_trace = base
        if base_trace.dt is None:
            raise ValueError("base trace must have a uniform step")
        dt = base_trace.dt
        t_end = float(base_trace.times[-1])
        point = base_trace.states[0, :n]
    else:
        if t_end is None or dt is None:
            raise ValueError("t_end and dt are required when base is a point")
        point = np.asarray(base, dtype=float)
        base_trace = integrate(model, params, (point, np.zeros(n)), t_end, dt)
    pert = integrate(model, params, (point, eta * W), t_end, dt)
    states = (pert.states - base_trace.states) / eta
    return Trace(
        times=base_trace.times,
        states=states,
        names=_deviation_names(n),
        dt=dt,
        method="fd-oracle",
    )


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(trace: Trace, path) -> None:
    """Write a trace as CSV: header t,<state names>, 17 significant digits."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *trace.names])
        for t, row in zip(trace.times, trace.states):
            writer.writerow([_fmt(t), *(_fmt(v) for v in row)])


def write_profile_csv(profile: FocusingProfile, path) -> None:
    """Write a focusing profile as CSV with header t,norm_sq,t_sq."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "norm_sq", "t_sq"])
        for t, ns, ts in zip(profile.times, profile.norm_sq, profile.t_sq):
            writer.writerow([_fmt(t), _fmt(ns), _fmt(ts)])
