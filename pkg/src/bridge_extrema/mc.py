"""Monte Carlo oracles: Brownian bridges, killed Brownian motion, last zeros, Vervaat.

Random streams
--------------
Every path owns its own Philox-4x64 stream. The key is the 64-bit master
seed and the counter starts at ``[0, 0, purpose, path_index]``; Philox only
advances the low counter words, so streams for distinct
``(purpose, path_index)`` never overlap. A path's values therefore depend
only on ``(seed, purpose, index)``, never on how paths are split across
workers.

Grid extrema sit below the continuum extrema by roughly
``0.5826 * sqrt(dt)``. With ``refine=True`` each grid interval's maximum and
minimum are replaced by draws from their exact conditional law given the
endpoints (Brownian bridge over one step), which removes that bias.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, special

from ._series import DomainError
from .laplace import ThetaParam

__all__ = [
    "BridgePath",
    "McEstimate",
    "PathExtrema",
    "FUNCTIONALS",
    "path_rng",
    "sample_bridge",
    "path_extrema",
    "refined_extrema",
    "vervaat_excursion",
    "simulate_extrema",
    "functional_values",
    "estimate",
    "summarize",
    "last_zero_time",
    "last_zero_unit_bm",
    "sample_killed_bm",
    "last_zero_samples",
    "killed_last_zero_samples",
    "killed_pair_samples",
    "vervaat_max_samples",
    "default_workers",
]

# stream purposes (third counter word)
BRIDGE, LAST_ZERO, KILLED, VERVAAT_REFINE, KILLED_REFINE = 0, 1, 2, 3, 4

BLOCK = 256
THREADS_ENV = "BRIDGE_EXTREMA_THREADS"
_SEED_MASK = (1 << 64) - 1


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def path_rng(seed: int, index: int, purpose: int = BRIDGE) -> np.random.Generator:
    if not 0 <= seed <= _SEED_MASK:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, purpose, index]))


@dataclass(frozen=True)
class BridgePath:
    values: np.ndarray
    times: np.ndarray
    kind: str = "bridge"  # or "bm_killed"

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_paths: int


@dataclass(frozen=True)
class PathExtrema:
    m_plus: float
    m_minus: float
    range: float
    argmin_time: float


def _bridge_from_normals(z: np.ndarray) -> np.ndarray:
    """Rows of standard normals (..., n) -> pinned bridges on n+1 grid points."""
    n = z.shape[-1]
    walk = np.zeros(z.shape[:-1] + (n + 1,))
    np.cumsum(z, axis=-1, out=walk[..., 1:])
    walk *= math.sqrt(1.0 / n)
    frac = np.arange(n + 1) / n
    bridge = walk - frac * walk[..., -1:]
    bridge[..., 0] = 0.0
    bridge[..., -1] = 0.0
    return bridge


def sample_bridge(n_steps: int, seed: int, index: int = 0) -> BridgePath:
    """Brownian bridge on the grid i/n_steps: cumulated Gaussian walk minus (i/n) W_n."""
    if n_steps < 2:
        raise DomainError("n_steps must be >= 2")
    rng = path_rng(seed, index, BRIDGE)
    values = _bridge_from_normals(rng.standard_normal(n_steps))
    return BridgePath(values, np.arange(n_steps + 1) / n_steps, "bridge")


def path_extrema(p: BridgePath) -> PathExtrema:
    v = p.values
    hi = float(v.max())
    i_lo = int(np.argmin(v))  # earliest index on ties
    m_minus = -float(v[i_lo])
    return PathExtrema(hi, m_minus, hi + m_minus, float(p.times[i_lo]))


def refined_extrema(values: np.ndarray, dt: float, u_max: np.ndarray, u_min: np.ndarray):
    """Continuum max and min given grid values, by exact per-interval sampling.

    Over one step of length dt with endpoints a, b the bridge maximum has
    P(max > y) = exp(-2 (y - a)(y - b) / dt); inverting with uniforms gives
    max = (a + b + sqrt((b - a)^2 - 2 dt log u)) / 2, and the minimum mirrors it.
    Works row-wise on 2-D arrays.
    """
    a = values[..., :-1]
    b = values[..., 1:]
    mid = a + b
    d2 = (b - a) ** 2
    hi = 0.5 * (mid + np.sqrt(d2 - 2.0 * dt * np.log(u_max)))
    lo = 0.5 * (mid - np.sqrt(d2 - 2.0 * dt * np.log(u_min)))
    return hi.max(axis=-1), -lo.min(axis=-1)


def vervaat_excursion(p: BridgePath) -> BridgePath:
    """Cyclic shift of the bridge at its (earliest) grid argmin, minus the minimum."""
    v = p.values[:-1]
    s = int(np.argmin(v))
    e = np.empty_like(p.values)
    e[:-1] = np.roll(v, -s) - v[s]
    e[-1] = 0.0
    return BridgePath(e, p.times.copy(), "bridge")


def _block_extrema(seed: int, start: int, stop: int, n_steps: int, refine: bool):
    count = stop - start
    z = np.empty((count, n_steps))
    u = np.empty((count, 2 * n_steps)) if refine else None
    for row, idx in enumerate(range(start, stop)):
        rng = path_rng(seed, idx, BRIDGE)
        z[row] = rng.standard_normal(n_steps)
        if refine:
            u[row] = rng.random(2 * n_steps)
    bridges = _bridge_from_normals(z)
    if refine:
        # 1 - u lies in (0, 1] so the log is finite
        return refined_extrema(bridges, 1.0 / n_steps, 1.0 - u[:, :n_steps], 1.0 - u[:, n_steps:])
    return bridges.max(axis=1), -bridges.min(axis=1)


def _run_blocks(fn, n_items: int, workers: Optional[int]):
    """Apply fn(start, stop) over fixed BLOCK-sized index ranges, results in index order."""
    ranges = [(s, min(s + BLOCK, n_items)) for s in range(0, n_items, BLOCK)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(ranges) == 1:
        return [fn(a, b) for a, b in ranges]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def simulate_extrema(n_paths: int, n_steps: int, seed: int, refine: bool = True,
                     workers: Optional[int] = None):
    """Per-path (M+, M-) arrays for paths 0..n_paths-1."""
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    if n_steps < 2:
        raise DomainError("n_steps must be >= 2")
    parts = _run_blocks(lambda a, b: _block_extrema(seed, a, b, n_steps, refine), n_paths, workers)
    m_plus = np.concatenate([p[0] for p in parts])
    m_minus = np.concatenate([p[1] for p in parts])
    return m_plus, m_minus


FUNCTIONALS = {
    # name: number of parameters
    "onesided_tail": 1,
    "max_cdf": 1,
    "min_tail": 1,
    "joint_cdf": 2,
    "kuiper_cdf": 1,
    "diff_tail": 1,
    "quotient_cdf": 1,
    "product_moment": 0,
}


def functional_values(name: str, params: tuple, m_plus: np.ndarray, m_minus: np.ndarray) -> np.ndarray:
    """Per-path indicator (or M+ M- product) for a named functional."""
    if name not in FUNCTIONALS:
        raise DomainError(f"unknown functional {name!r}")
    if len(params) != FUNCTIONALS[name]:
        raise DomainError(f"{name} takes {FUNCTIONALS[name]} parameter(s)")
    if name == "onesided_tail":
        out = m_plus >= params[0]
    elif name == "max_cdf":
        out = np.maximum(m_plus, m_minus) <= params[0]
    elif name == "min_tail":
        out = np.minimum(m_plus, m_minus) > params[0]
    elif name == "joint_cdf":
        out = (m_plus <= params[0]) & (m_minus <= params[1])
    elif name == "kuiper_cdf":
        out = (m_plus + m_minus) <= params[0]
    elif name == "diff_tail":
        out = (m_plus - m_minus) >= params[0]
    elif name == "quotient_cdf":
        out = m_plus <= params[0] * m_minus
    else:
        return m_plus * m_minus
    return out.astype(np.float64)


def summarize(samples: np.ndarray) -> McEstimate:
    """Mean and standard error with compensated summation (order of paths fixed)."""
    n = len(samples)
    if n < 2:
        raise DomainError("need at least 2 samples")
    mean = math.fsum(samples) / n
    var = math.fsum((samples - mean) ** 2) / (n - 1)
    return McEstimate(mean, math.sqrt(var / n), n)


def estimate(functional: str, params: tuple = (), n_paths: int = 200_000, n_steps: int = 2048,
             seed: int = 0, refine: bool = True, workers: Optional[int] = None) -> McEstimate:
    if n_paths < 2:
        raise DomainError("n_paths must be >= 2")
    m_plus, m_minus = simulate_extrema(n_paths, n_steps, seed, refine, workers)
    return summarize(functional_values(functional, tuple(params), m_plus, m_minus))


# -- last zeros ---------------------------------------------------------------------

def _zero_hit_cdf(s: float, h: float, start: float, end: float) -> float:
    """P(bridge from ``start`` to ``end`` over [0, h] has hit 0 by time s), start > 0.

    Given the endpoints, W_s ~ N(mu, var) with mu = start + (end - start) s/h and
    var = s (h - s)/h; a path at x > 0 at time s has touched 0 with probability
    exp(-2 start x / s). Averaging over x gives two normal-CDF terms.
    """
    if s <= 0.0:
        return 0.0
    mu = start + (end - start) * s / h
    sd = math.sqrt(s * (h - s) / h)
    if sd == 0.0:
        return 1.0 if end <= 0.0 else math.exp(-2.0 * start * end / h)
    k = 2.0 * start / s
    below = special.ndtr(-mu / sd)
    log_touch = -k * mu + 0.5 * (k * sd) ** 2 + special.log_ndtr((mu - k * sd * sd) / sd)
    return float(below + math.exp(log_touch))


def _last_zero_offset(h: float, left: float, right: float, u: float) -> float:
    """Position in [0, h] of the last zero of a bridge from ``left`` to ``right``, given one exists.

    Reversing time turns it into the first zero of a bridge from ``right`` to
    ``left``, whose conditional CDF is inverted at ``u``.
    """
    if right == 0.0:
        return h
    if right < 0.0:
        right, left = -right, -left
    total = _zero_hit_cdf(h, h, right, left)
    target = u * total
    f = lambda s: _zero_hit_cdf(s, h, right, left) - target  # noqa: E731
    lo, hi = 0.0, h
    if f(hi) < 0.0:
        return 0.0
    tau = optimize.brentq(f, lo, hi, xtol=1e-14 * h, rtol=1e-12)
    return h - tau


def last_zero_time(values: np.ndarray, times: np.ndarray, u: Optional[np.ndarray] = None) -> float:
    """Last zero of a path known on a grid; see :func:`_last_zero`."""
    return _last_zero(values, times, u)[0]


def _last_zero(values, times, u=None):
    """(g, i): last zero g and the index i of the grid interval [t_i, t_i+1] holding it.

    Last zero of a path known on a grid.

    Without ``u`` only grid evidence is used: sign changes are located by
    linear interpolation and a grid value exactly 0 counts as a zero; a path
    with no zero returns ``times[0]``.

    With ``u`` (one uniform per interval plus one more) the path between grid
    points is a Brownian bridge: a same-sign interval a, b of length h touches 0
    with probability exp(-2 a b / h), and the last zero inside the selected
    interval is drawn from its exact conditional law.
    """
    v = np.asarray(values, dtype=np.float64)
    t = np.asarray(times, dtype=np.float64)
    n = len(v) - 1
    if v[-1] == 0.0:
        return float(t[-1]), n
    a, b = v[:-1], v[1:]
    prod = a * b
    hit = prod <= 0.0
    if u is not None:
        h = np.diff(t)
        with np.errstate(over="ignore", divide="ignore"):
            p_touch = np.exp(-2.0 * prod / h)
        hit |= u[:-1] < p_touch
    idx = np.flatnonzero(hit)
    if len(idx) == 0:
        return float(t[0]), 0
    i = int(idx[-1])
    if u is not None:
        return float(t[i] + _last_zero_offset(t[i + 1] - t[i], v[i], v[i + 1], u[-1])), i
    lo, hi = abs(v[i]), abs(v[i + 1])
    if lo + hi == 0.0:
        return float(t[i + 1]), i
    return float(t[i] + (t[i + 1] - t[i]) * lo / (lo + hi)), i


def last_zero_unit_bm(n_steps: int, seed: int, index: int = 0, refine: bool = True) -> float:
    """Last zero in [0, 1] of a Brownian motion simulated on n_steps steps."""
    if n_steps < 2:
        raise DomainError("n_steps must be >= 2")
    rng = path_rng(seed, index, LAST_ZERO)
    w = np.zeros(n_steps + 1)
    np.cumsum(rng.standard_normal(n_steps), out=w[1:])
    w *= math.sqrt(1.0 / n_steps)
    u = rng.random(n_steps + 1) if refine else None
    return last_zero_time(w, np.arange(n_steps + 1) / n_steps, u)


def sample_killed_bm(tp: ThetaParam, n_steps_per_unit: int, seed: int, index: int = 0,
                     refine: bool = True):
    """BM run up to an independent S ~ Exp(theta); returns (path, S, g) with g the last zero before S."""
    if n_steps_per_unit < 1:
        raise DomainError("n_steps_per_unit must be >= 1")
    rng = path_rng(seed, index, KILLED)
    s_theta = float(rng.exponential(1.0 / tp.theta))
    h = 1.0 / n_steps_per_unit
    n_full = int(math.floor(s_theta / h))
    times = np.arange(n_full + 1) * h
    if s_theta - times[-1] > 0:
        times = np.append(times, s_theta)
    steps = np.diff(times)
    values = np.zeros(len(times))
    if len(steps) == 0:
        return BridgePath(values, times, "bm_killed"), s_theta, 0.0
    np.cumsum(rng.standard_normal(len(steps)) * np.sqrt(steps), out=values[1:])
    u = rng.random(len(steps) + 1) if refine else None
    g = min(last_zero_time(values, times, u), s_theta)
    return BridgePath(values, times, "bm_killed"), s_theta, g


def last_zero_samples(n: int, n_steps: int, seed: int, refine: bool = True) -> np.ndarray:
    return np.array([last_zero_unit_bm(n_steps, seed, i, refine) for i in range(n)])


def killed_last_zero_samples(tp: ThetaParam, n: int, n_steps_per_unit: int, seed: int,
                             refine: bool = True) -> np.ndarray:
    return np.array([sample_killed_bm(tp, n_steps_per_unit, seed, i, refine)[2] for i in range(n)])


def killed_pair_samples(tp: ThetaParam, n: int, n_steps_per_unit: int, seed: int,
                        refine: bool = True) -> np.ndarray:
    """(max, -min) of killed BM over [0, g] for n independent runs.

    With ``refine`` the continuum extremes are drawn interval by interval:
    each whole grid step before the one holding g, then the stretch from its
    left grid point to g, which given g is a Brownian bridge ending at 0.
    """
    out = np.zeros((n, 2))
    for i in range(n):
        rng = path_rng(seed, i, KILLED)
        path, _, g = sample_killed_bm(tp, n_steps_per_unit, seed, i, refine)
        v, t = path.values, path.times
        if refine:
            # replay the stream to recover the interval sample_killed_bm selected
            u = _replay_uniforms(rng, len(t) - 1)
            _, k = _last_zero(v, t, u)
            k = min(k, len(t) - 1)
            pts = np.append(v[: k + 1], 0.0)
            steps = np.append(np.diff(t[: k + 1]), g - t[k])
            w = path_rng(seed, i, KILLED_REFINE).random(2 * (k + 1))
            hi, lo = refined_extrema(pts, steps, 1.0 - w[: k + 1], 1.0 - w[k + 1:])
            out[i] = max(hi, 0.0), max(lo, 0.0)
        else:
            keep = v[t <= g]
            if len(keep):
                out[i] = keep.max(), -keep.min()
    return out


def _replay_uniforms(rng: np.random.Generator, n_steps: int) -> np.ndarray:
    """Uniforms drawn by sample_killed_bm after its exponential and normals."""
    rng.exponential()
    rng.standard_normal(n_steps)
    return rng.random(n_steps + 1)


def vervaat_max_samples(n: int, n_steps: int, seed: int, refine: bool = True,
                        workers: Optional[int] = None) -> np.ndarray:
    """Maximum of the Vervaat excursion of n independent bridges.

    With ``refine`` the excursion's continuum range is drawn by per-interval
    sampling on the shifted path, so its maximum measured from its true minimum
    is returned.
    """
    dt = 1.0 / n_steps

    def block(start: int, stop: int) -> np.ndarray:
        res = np.empty(stop - start)
        for row, idx in enumerate(range(start, stop)):
            e = vervaat_excursion(sample_bridge(n_steps, seed, idx)).values
            if refine:
                u = path_rng(seed, idx, VERVAAT_REFINE).random(2 * n_steps)
                hi, lo = refined_extrema(e, dt, 1.0 - u[:n_steps], 1.0 - u[n_steps:])
                res[row] = hi + lo
            else:
                res[row] = e.max()
        return res

    return np.concatenate(_run_blocks(block, n, workers))
