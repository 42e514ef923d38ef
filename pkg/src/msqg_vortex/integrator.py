"""Time stepping for the deterministic and stochastic vortex systems.

Positions are advanced unwrapped (``raw``) so winding on the torus is kept;
stored states are wrapped. The drift only sees minimal-image displacements,
so wrapping never changes the dynamics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45

from .geometry import DomainSpec, FloatArray, VortexState, displacement, min_distance, pair_indices, wrap
from .kernel import KernelSingularityError, KernelSpec, drift_jacobian, velocity
from .noise import NoiseSpec, mode_table, noise_increment

DET_SCHEMES = ("rk45", "rk4", "heun", "euler")
STO_SCHEMES = ("euler_maruyama", "strat_heun")

REACHED_T = "reached_t"
HIT_DELTA_STOP = "hit_delta_stop"
SINGULARITY = "singularity"


class StepSizeUnderflow(RuntimeError):
    """Adaptive step fell below dt_min."""


@dataclass(frozen=True)
class IntegratorSpec:
    scheme_det: str = "rk45"
    scheme_sto: str = "euler_maruyama"
    dt: float = 1e-3
    adaptive_tol: float = 1e-10
    t_end: float = 1.0
    dt_min: float = 1e-12
    # stochastic steps shrink to cfl * d_min^(3-eps) / (c_eps sum|xi|) when set
    cfl: float | None = None
    cadence: int = 1

    def __post_init__(self) -> None:
        if self.scheme_det not in DET_SCHEMES:
            raise ValueError(f"scheme_det must be one of {DET_SCHEMES}")
        if self.scheme_sto not in STO_SCHEMES:
            raise ValueError(f"scheme_sto must be one of {STO_SCHEMES}")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.adaptive_tol > 0.0:
            raise ValueError("adaptive_tol must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")
        if self.cfl is not None and not self.cfl > 0.0:
            raise ValueError("cfl must be positive")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")


@dataclass(frozen=True)
class StoppingRule:
    delta_stop: float = 1e-3
    enabled: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.delta_stop < 1.0):
            raise ValueError("delta_stop must lie in (0, 1)")


NO_STOP = StoppingRule(enabled=False)


@dataclass
class Trajectory:
    times: FloatArray
    positions: FloatArray  # (S, N, 2), wrapped
    raw_positions: FloatArray  # (S, N, 2), unwrapped
    intensities: FloatArray
    domain: DomainSpec
    stop_reason: str
    stop_time: float
    n_steps: int = 0
    message: str = ""

    @property
    def states(self) -> list[VortexState]:
        return [VortexState(p, self.intensities, self.domain) for p in self.positions]

    @property
    def final_state(self) -> VortexState:
        return VortexState(self.positions[-1], self.intensities, self.domain)

    def __len__(self) -> int:
        return len(self.times)


class _Recorder:
    def __init__(self, x0: FloatArray, cadence: int):
        self.t = [0.0]
        self.x = [np.array(x0, dtype=np.float64)]
        self.cadence = cadence

    def step(self, n: int, t: float, x: FloatArray) -> None:
        if n % self.cadence == 0:
            self.t.append(float(t))
            self.x.append(np.array(x))

    def close(self, t: float, x: FloatArray) -> None:
        if self.t[-1] != t:
            self.t.append(float(t))
            self.x.append(np.array(x))

    def build(self, s0: VortexState, reason: str, n_steps: int, message: str = "") -> Trajectory:
        raw = np.array(self.x)
        return Trajectory(
            np.array(self.t), wrap(raw, s0.domain), raw, s0.intensities, s0.domain, reason, self.t[-1], n_steps, message
        )


def _md(x: FloatArray, domain: DomainSpec) -> FloatArray | float:
    return min_distance(x, domain)


def _next_h(t, t_end, h):
    """Step length that lands exactly on t_end instead of leaving a sliver."""
    rem = t_end - t
    return np.where(rem <= h * (1.0 + 1e-9), rem, h)


def _fixed_step(f: Callable, x: FloatArray, h, scheme: str) -> FloatArray:
    if scheme == "euler":
        return x + h * f(x)
    if scheme == "heun":
        k1 = f(x)
        k2 = f(x + h * k1)
        return x + 0.5 * h * (k1 + k2)
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _bisect_crossing(state_at: Callable[[float], FloatArray], lo: float, hi: float, x_hi, inside: Callable) -> tuple:
    """Shrink [lo, hi] where inside(state_at(hi)) holds and inside(state_at(lo)) does not."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        xm = state_at(mid)
        if inside(xm):
            hi, x_hi = mid, xm
        else:
            lo = mid
    return hi, x_hi


def integrate_deterministic(
    s0: VortexState, kspec: KernelSpec, ispec: IntegratorSpec, stop: StoppingRule = NO_STOP
) -> Trajectory:
    """Integrate dx_i/dt = sum_j xi_j K(x_i - x_j) with RK45 (adaptive) or a fixed-step scheme."""
    xi, dom = s0.intensities, s0.domain
    x0 = np.array(s0.positions)
    rec = _Recorder(x0, ispec.cadence)
    use_stop = stop.enabled and s0.n >= 2

    def f(x):
        return velocity(x, xi, kspec, dom)

    def inside(x):
        return _md(x, dom) <= stop.delta_stop

    if use_stop and inside(x0):
        return rec.build(s0, HIT_DELTA_STOP, 0)
    try:
        if ispec.scheme_det == "rk45":
            reason, n = _run_adaptive(f, x0, ispec, rec, inside if use_stop else None)
        else:
            reason, n = _run_fixed(f, x0, ispec, rec, inside if use_stop else None)
    except KernelSingularityError as exc:
        return rec.build(s0, SINGULARITY, -1, str(exc))
    return rec.build(s0, reason, n)


def _run_fixed(f, x0, ispec, rec, inside):
    t, x, n = 0.0, x0, 0
    while t < ispec.t_end:
        h = float(_next_h(t, ispec.t_end, ispec.dt))
        x_new = _fixed_step(f, x, h, ispec.scheme_det)
        if not np.all(np.isfinite(x_new)):
            raise KernelSingularityError("non-finite state (kernel singularity)")
        n += 1
        if inside is not None and inside(x_new):
            th, x_hit = _bisect_crossing(lambda th: _fixed_step(f, x, th * h, ispec.scheme_det), 0.0, 1.0, x_new, inside)
            rec.close(t + th * h, x_hit)
            return HIT_DELTA_STOP, n
        t = ispec.t_end if h == ispec.t_end - t else t + h
        x = x_new
        rec.step(n, t, x)
    rec.close(t, x)
    return REACHED_T, n


def _run_adaptive(f, x0, ispec, rec, inside):
    shape = x0.shape
    tol = ispec.adaptive_tol

    def fun(_t, y):
        return f(y.reshape(shape)).ravel()

    solver = RK45(fun, 0.0, x0.ravel(), ispec.t_end, rtol=tol, atol=tol, first_step=min(ispec.dt, ispec.t_end))
    n = 0
    while solver.status == "running":
        t_prev = solver.t
        msg = solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflow(f"adaptive step failed at t={t_prev!r}: {msg}")
        n += 1
        x = solver.y.reshape(shape)
        if not np.all(np.isfinite(x)):
            raise KernelSingularityError("non-finite state (kernel singularity)")
        if inside is not None and inside(x):
            dense = solver.dense_output()
            th, x_hit = _bisect_crossing(lambda s: dense(s).reshape(shape), t_prev, solver.t, x.copy(), inside)
            rec.close(th, x_hit)
            return HIT_DELTA_STOP, n
        if solver.status == "running" and solver.step_size < ispec.dt_min:
            raise StepSizeUnderflow(f"step size {solver.step_size:.3e} below dt_min at t={solver.t!r}")
        rec.step(n, solver.t, x)
    rec.close(solver.t, solver.y.reshape(shape))
    return REACHED_T, n


# ---------------------------------------------------------------------------
# stochastic integration


def trajectory_rng(master_seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for trajectory ``index`` (stream 0 noise, 1 initial state)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


class NormalStream:
    """Standard normals consumed in fixed order, refilled in chunks."""

    def __init__(self, rng: np.random.Generator, width: int, chunk: int = 256):
        self.rng, self.width, self.chunk = rng, width, chunk
        self._buf = np.empty((0, width))
        self._pos = 0

    def next(self) -> FloatArray:
        if self._pos == len(self._buf):
            self._buf = self.rng.standard_normal((self.chunk, self.width))
            self._pos = 0
        row = self._buf[self._pos]
        self._pos += 1
        return row


@dataclass
class BatchResult:
    x: FloatArray  # final raw positions (B, N, 2)
    t: FloatArray  # time reached (B,)
    stopped: np.ndarray  # (B,) bool, min distance reached the stop threshold
    running_min: FloatArray  # (B,) min distance along the piecewise-linear path
    hit_times: FloatArray  # (B, G) first time below each threshold, NaN if never
    n_steps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))


def _segment_min(r0: FloatArray, d: FloatArray) -> FloatArray:
    """min over theta in [0, 1] of |r0 + theta d|, elementwise over leading axes."""
    a = (d * d).sum(axis=-1)
    b = (r0 * d).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        th = np.where(a > 0.0, np.clip(-b / a, 0.0, 1.0), 0.0)
    p = r0 + th[..., None] * d
    return np.sqrt((p * p).sum(axis=-1))


def _pair_segments(x0: FloatArray, x1: FloatArray, domain: DomainSpec):
    i, j = pair_indices(x0.shape[-2])
    r0 = displacement(x0[..., i, :], x0[..., j, :], domain)
    dx = x1 - x0
    return r0, dx[..., i, :] - dx[..., j, :]


def _first_crossing(x0: FloatArray, x1: FloatArray, domain: DomainSpec, delta: float) -> tuple[float, FloatArray]:
    """Earliest theta where the linear path x0 -> x1 reaches min distance delta, and the state there."""
    r0, d = _pair_segments(x0, x1, domain)
    a = (d * d).sum(-1)
    b = 2.0 * (r0 * d).sum(-1)
    c = (r0 * r0).sum(-1) - delta * delta
    disc = b * b - 4.0 * a * c
    with np.errstate(divide="ignore", invalid="ignore"):
        th = np.where((a > 0.0) & (disc >= 0.0), (-b - np.sqrt(np.maximum(disc, 0.0))) / (2.0 * a), np.inf)
        th_close = np.where(a > 0.0, np.clip(-b / (2.0 * a), 0.0, 1.0), 0.0)
    th = np.where(c <= 0.0, 0.0, th)
    th = np.where((th >= 0.0) & (th <= 1.0), th, np.inf)
    p = int(np.argmin(th))

    def state_at(s):
        return x0 + s * (x1 - x0)

    def inside(x):
        return _md(x, domain) <= delta

    # the quadratic root is exact up to rounding; bracket it and bisect the rest
    root = float(min(th[p], 1.0))
    hi = root if inside(state_at(root)) else float(th_close[p])
    lo = root * (1.0 - 1e-9)
    if inside(state_at(lo)):
        lo = 0.0
    return _bisect_crossing(state_at, lo, hi, state_at(hi), inside)


def _sto_step(f, x, h, z, kspec, nspec, scheme, noisy: bool):
    b = f(x)
    if not noisy:
        if scheme == "strat_heun":
            bp = f(x + h[..., None, None] * b)
            return x + (0.5 * h)[..., None, None] * (b + bp)
        return x + h[..., None, None] * b
    dW = np.sqrt(h)[..., None] * z
    gdw = noise_increment(x, dW, nspec)
    if scheme == "strat_heun":
        xp = x + h[..., None, None] * b + gdw
        bp = f(xp)
        gdw_p = noise_increment(xp, dW, nspec)
        return x + (0.5 * h)[..., None, None] * (b + bp) + 0.5 * (gdw + gdw_p)
    return x + h[..., None, None] * b + gdw


def run_stochastic_batch(
    x0: FloatArray,
    xi: FloatArray,
    domain: DomainSpec,
    kspec: KernelSpec,
    nspec: NoiseSpec,
    ispec: IntegratorSpec,
    thresholds: Sequence[float],
    streams: Sequence[NormalStream],
    on_step: Callable[[int, float, FloatArray], None] | None = None,
) -> BatchResult:
    """Advance B independent trajectories until t_end or min distance <= min(thresholds).

    Every operation is rowwise (elementwise arithmetic and fixed-length
    reductions), so a trajectory's result does not depend on which other rows
    share its batch. Rows that finish are dropped from the active set.
    """
    if kspec.delta is None:
        raise ValueError("stochastic integration requires a regularized kernel (delta)")
    x = np.array(x0, dtype=np.float64)
    B, N = x.shape[0], x.shape[1]
    thr = np.asarray(sorted(thresholds, reverse=True), dtype=np.float64)
    d_stop = float(thr[-1])
    noisy = nspec.active
    t = np.zeros(B)
    steps = np.zeros(B, dtype=np.int64)
    hit_t = np.full((B, len(thr)), np.nan)
    stopped = np.zeros(B, dtype=bool)
    md0 = np.atleast_1d(_md(x, domain)) if N >= 2 else np.full(B, np.inf)
    run_min = md0.copy()
    hit_t[md0[:, None] <= thr[None, :]] = 0.0
    stopped |= md0 <= d_stop
    active = np.flatnonzero(~stopped)
    speed = kspec.c_eps * float(np.abs(xi).sum())

    def f(y):
        return velocity(y, xi, kspec, domain)

    while active.size:
        xa = x[active]
        ta = t[active]
        h = np.full(active.size, ispec.dt)
        if ispec.cfl is not None and N >= 2:
            dm = np.maximum(np.atleast_1d(_md(xa, domain)), kspec.delta)
            h = np.minimum(h, ispec.cfl * dm ** (3.0 - kspec.epsilon) / speed)
        h = _next_h(ta, ispec.t_end, h)
        z = np.stack([streams[r].next() for r in active]) if noisy else None
        xn = _sto_step(f, xa, h, z, kspec, nspec, ispec.scheme_sto, noisy)
        steps[active] += 1
        last = h == ispec.t_end - ta
        tn = np.where(last, ispec.t_end, ta + h)
        if N >= 2:
            r0, d = _pair_segments(xa, xn, domain)
            seg = _segment_min(r0, d).min(axis=-1)
            newly = (seg[:, None] <= thr[None, :]) & np.isnan(hit_t[active])
            for row, g in zip(*np.nonzero(newly)):
                th, _ = _first_crossing(xa[row], xn[row], domain, float(thr[g]))
                hit_t[active[row], g] = ta[row] + th * h[row]
            run_min[active] = np.minimum(run_min[active], seg)
            stop_rows = seg <= d_stop
            for row in np.flatnonzero(stop_rows):
                th, xs = _first_crossing(xa[row], xn[row], domain, d_stop)
                xn[row] = xs
                tn[row] = ta[row] + th * h[row]
        else:
            stop_rows = np.zeros(active.size, dtype=bool)
        x[active] = xn
        t[active] = tn
        if on_step is not None:
            on_step(int(steps[0]), float(t[0]), x[0])
        stopped[active] |= stop_rows
        done = stop_rows | (tn >= ispec.t_end)
        active = active[~done]
    return BatchResult(x, t, stopped, run_min, hit_t, steps)


def integrate_stochastic(
    s0: VortexState,
    kspec: KernelSpec,
    nspec: NoiseSpec,
    ispec: IntegratorSpec,
    stop: StoppingRule,
    seed: int,
    index: int = 0,
) -> Trajectory:
    """Euler-Maruyama (or Stratonovich Heun) path of the regularized system.

    Uses the same noise stream as trajectory ``index`` of an ensemble with
    master seed ``seed``.
    """
    if kspec.delta is None:
        raise ValueError("stochastic integration requires a regularized kernel (delta)")
    rec = _Recorder(s0.positions, ispec.cadence)
    stream = NormalStream(trajectory_rng(seed, index), mode_table(nspec).k.shape[0])
    thr = [stop.delta_stop] if stop.enabled else [0.0]
    res = run_stochastic_batch(
        s0.positions[None], s0.intensities, s0.domain, kspec, nspec, ispec, thr, [stream], on_step=rec.step
    )
    rec.close(float(res.t[0]), res.x[0])
    reason = HIT_DELTA_STOP if (stop.enabled and res.stopped[0]) else REACHED_T
    return rec.build(s0, reason, int(res.n_steps[0]))


# ---------------------------------------------------------------------------
# flow-map Jacobian


def _variational_rhs(x0: FloatArray, xi, kspec, dom):
    n2 = x0.size

    def fun(_t, y):
        x = y[:n2].reshape(x0.shape)
        J = y[n2:].reshape(n2, n2)
        dx = velocity(x, xi, kspec, dom).ravel()
        dJ = drift_jacobian(x, xi, kspec, dom) @ J
        return np.concatenate([dx, dJ.ravel()])

    return fun


def flow_jacobian(s0: VortexState, kspec: KernelSpec, t: float, ispec: IntegratorSpec) -> tuple[FloatArray, FloatArray]:
    """Raw positions at time t and the flow Jacobian, from the variational equation dJ/dt = Db(x) J.

    ``rk45`` integrates the augmented system adaptively; a fixed scheme uses
    steps of ``ispec.dt``, which makes J the exact derivative of that discrete map.
    """
    x0 = np.array(s0.positions)
    n2 = x0.size
    J0 = np.eye(n2)
    if t == 0.0:
        return x0, J0
    fun = _variational_rhs(x0, s0.intensities, kspec, s0.domain)
    y0 = np.concatenate([x0.ravel(), J0.ravel()])
    if ispec.scheme_det == "rk45":
        tol = ispec.adaptive_tol
        solver = RK45(fun, 0.0, y0, t, rtol=tol, atol=tol, first_step=min(ispec.dt, t))
        while solver.status == "running":
            solver.step()
            if solver.status == "failed":
                raise StepSizeUnderflow(f"variational integration failed at t={solver.t!r}")
        y = solver.y
    else:
        n = max(1, int(math.ceil(t / ispec.dt - 1e-9)))
        h = t / n
        y = y0
        for _ in range(n):
            y = _fixed_step(lambda v: fun(0.0, v), y, h, ispec.scheme_det)
    return y[:n2].reshape(x0.shape), y[n2:].reshape(n2, n2)


def flow_jacobian_logdet(s0: VortexState, kspec: KernelSpec, t: float, ispec: IntegratorSpec) -> float:
    """log|det D X_t| of the regularized deterministic flow; 0 exactly at t = 0."""
    if kspec.delta is None:
        raise ValueError("the Jacobian probe uses the regularized kernel (delta)")
    if t == 0.0:
        return 0.0
    _, J = flow_jacobian(s0, kspec, t, ispec)
    return float(np.linalg.slogdet(J)[1])


def flow_map_fixed(x0: FloatArray, xi: FloatArray, domain: DomainSpec, kspec: KernelSpec, t: float, dt: float) -> FloatArray:
    """Raw positions after fixed-step RK4 integration to time t; x0 may be a stack (..., N, 2)."""
    x = np.array(x0, dtype=np.float64)
    n = max(1, int(math.ceil(t / dt - 1e-9)))
    h = t / n

    def f(y):
        return velocity(y, xi, kspec, domain)

    for _ in range(n):
        x = _fixed_step(f, x, h, "rk4")
    return x


def finite_difference_jacobian(s0: VortexState, kspec: KernelSpec, t: float, dt: float = 1e-3, step: float = 1e-6) -> FloatArray:
    """Central differences of the RK4 flow map over all 2N coordinate directions.

    The 4N perturbed runs share one step sequence and are advanced as one stack.
    """
    x0 = np.array(s0.positions)
    n2 = x0.size
    E = (step * np.eye(n2)).reshape(n2, *x0.shape)
    out = flow_map_fixed(np.concatenate([x0 + E, x0 - E]), s0.intensities, s0.domain, kspec, t, dt)
    diff = (out[:n2] - out[n2:]) / (2.0 * step)
    return diff.reshape(n2, n2).T
