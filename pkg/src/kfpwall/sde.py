"""Monte Carlo for the inelastic Brownian particle on the half-line.

    dX = V dt,  dV = sqrt(2) dB,   X >= 0,
    X(t-) = 0, V(t-) < 0  ->  V(t+) = -r V(t-).

Free flight uses the exact Gaussian transition of the Kolmogorov process.
Wall crossings inside a step are located on the cubic Hermite interpolant of
(X, V) across the step.  The step adapts to the local self-similar scale
h = min(h_max, c (x^{2/3} + v^2)).

Random numbers come from a per-path splitmix64 stream keyed by
(seed, path index), so results are independent of thread scheduling.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    # an old system TBB only means numba falls back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer requires")
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

log = logging.getLogger(__name__)

__all__ = [
    "ParticleState",
    "BounceRecord",
    "TrajectoryOutcome",
    "SimConfig",
    "CollapseSummary",
    "HittingSample",
    "step_exact",
    "bounce",
    "advance_with_wall",
    "simulate_path",
    "hitting_statistics",
    "collapse_experiment",
    "gaussian_pairs",
    "run_paths",
    "summarize_paths",
    "sample_blob",
]

# termination status codes
RUNNING, COLLAPSED, SURVIVED, BOUNCE_CAP, RETURNED = 0, 1, 2, 3, 4
_STATUS = {COLLAPSED: "collapsed", SURVIVED: "survived", BOUNCE_CAP: "bounce_cap", RETURNED: "returned"}

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_TWO53 = 1.0 / 9007199254740992.0


@dataclass(frozen=True)
class ParticleState:
    x: float
    v: float
    t: float = 0.0

    def __post_init__(self):
        if self.x < 0:
            raise ValueError("particle must lie in x >= 0")


@dataclass(frozen=True)
class BounceRecord:
    t_n: float
    v_in: float
    v_out: float


@dataclass
class TrajectoryOutcome:
    collapsed: bool
    t_final: float
    bounce_count: int
    bounces: list
    rng_seed: int
    status: str = ""
    final_state: ParticleState | None = None


@dataclass(frozen=True)
class SimConfig:
    r: float
    h_max: float = 0.05
    T_max: float = 50.0
    eps_v: float = 1e-5
    eps_x: float = 1e-9
    n_paths: int = 10_000
    seed: int = 12345
    c_step: float = 0.01
    min_bounces: int = 5
    bounce_cap: int = 10_000_000
    x0: float = 1.0
    v0: float = 0.0
    record_bounces: int = 0

    def __post_init__(self):
        for name in ("r", "h_max", "T_max", "eps_v", "eps_x", "c_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if not (self.eps_v < 1e-2 and self.eps_x < 1e-2):
            raise ValueError("collapse thresholds must be small")
        if self.x0 < 0:
            raise ValueError("x0 must be >= 0")


# ---------------------------------------------------------------- RNG ---

@njit(cache=True)
def _splitmix(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return state, z ^ (z >> _U64(31))


@njit(cache=True)
def _path_state(seed, path):
    # decorrelate substreams by hashing (seed, path) twice
    s = _U64(seed) ^ (_U64(path) * _MIX2)
    s, a = _splitmix(s)
    s, b = _splitmix(s ^ a)
    return b


@njit(cache=True)
def _normals(state):
    """Two independent N(0,1) draws by Box-Muller."""
    state, a = _splitmix(state)
    state, b = _splitmix(state)
    u1 = ((a >> _U64(11)) + _U64(1)) * _TWO53  # (0, 1]
    u2 = (b >> _U64(11)) * _TWO53
    rad = math.sqrt(-2.0 * math.log(u1))
    ang = 2.0 * math.pi * u2
    return state, rad * math.cos(ang), rad * math.sin(ang)


def gaussian_pairs(seed: int, path: int, n: int) -> np.ndarray:
    """First ``n`` normal pairs of a path's stream (for tests and replays)."""
    return _gaussian_pairs(np.uint64(seed), np.uint64(path), n)


@njit(cache=True)
def _gaussian_pairs(seed, path, n):
    out = np.empty((n, 2))
    st = _path_state(seed, path)
    for i in range(n):
        st, g1, g2 = _normals(st)
        out[i, 0] = g1
        out[i, 1] = g2
    return out


# ------------------------------------------------------------- kernels ---

@njit(cache=True)
def _increments(h, g1, g2):
    # Cholesky of [[2h^3/3, h^2], [h^2, 2h]] with X first
    sh = math.sqrt(h)
    dx = math.sqrt(2.0 / 3.0) * h * sh * g1
    dv = math.sqrt(1.5) * sh * g1 + math.sqrt(0.5) * sh * g2
    return dx, dv


@njit(cache=True)
def _hermite(x0, v0, x1, v1, h, s):
    u = s / h
    u2 = u * u
    u3 = u2 * u
    h00 = 2 * u3 - 3 * u2 + 1
    h10 = u3 - 2 * u2 + u
    h01 = -2 * u3 + 3 * u2
    h11 = u3 - u2
    pos = h00 * x0 + h10 * h * v0 + h01 * x1 + h11 * h * v1
    d00 = (6 * u2 - 6 * u) / h
    d10 = 3 * u2 - 4 * u + 1
    d01 = (-6 * u2 + 6 * u) / h
    d11 = 3 * u2 - 2 * u
    vel = d00 * x0 + d10 * v0 + d01 * x1 + d11 * v1
    return pos, vel


@njit(cache=True)
def _locate_crossing(x0, v0, x1, v1, h):
    lo, hi = 0.0, h
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        p, _v = _hermite(x0, v0, x1, v1, h, mid)
        if p > 0.0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    _p, vel = _hermite(x0, v0, x1, v1, h, s)
    return s, vel


@njit(cache=True)
def _run_path(x, v, r, h_max, c_step, t_max, eps_v, eps_x, min_bounces, bounce_cap,
              stop_at_first, st, rec_t, rec_vin):
    """Advance one path.  Returns (status, t_final, n_bounces, x, v)."""
    n_rec = rec_t.shape[0]
    t_b = 0.0  # time of the last bounce (or start)
    tau = 0.0  # time since t_b, kept separately to retain precision
    nb = 0
    d_prev = -1.0
    d_last = -1.0
    while True:
        h = c_step * (x ** (2.0 / 3.0) + v * v)
        if h > h_max:
            h = h_max
        rem = t_max - (t_b + tau)
        if rem <= 0.0:
            return SURVIVED, t_b + tau, nb, x, v
        if h > rem:
            h = rem
        if h < 1e-300:
            h = 1e-300
        st, g1, g2 = _normals(st)
        dx, dv = _increments(h, g1, g2)
        x1 = x + v * h + dx
        v1 = v + dv
        if x1 >= 0.0:
            x = x1
            v = v1
            tau += h
            continue
        s, vin = _locate_crossing(x, v, x1, v1, h)
        if vin >= 0.0:
            # interpolant touches zero tangentially; use the end velocity sign
            vin = v1 if v1 < 0.0 else -1e-300
        # flight durations come from tau + s directly: t_b can be large
        # enough that t_n - t_b loses every significant digit
        d_prev = d_last
        d_last = tau + s
        t_n = t_b + d_last
        if nb < n_rec:
            rec_t[nb] = t_n
            rec_vin[nb] = vin
        nb += 1
        t_b = t_n
        tau = 0.0
        x = 0.0
        v = -r * vin
        if stop_at_first:
            return RETURNED, t_n, nb, 0.0, vin
        if v < eps_v and x < eps_x and nb >= min_bounces and d_prev > 0.0:
            q = d_last / d_prev
            if q < 1.0:
                remaining = d_last * q / (1.0 - q)
                if remaining < eps_v * eps_v:
                    return COLLAPSED, t_n, nb, x, v
        if nb >= bounce_cap:
            return BOUNCE_CAP, t_n, nb, x, v


@njit(cache=True, parallel=True)
def _run_many(x0, v0, r, h_max, c_step, t_max, eps_v, eps_x, min_bounces, bounce_cap,
              stop_at_first, seed, n_paths, first_path):
    # x0, v0: per-path initial states
    status = np.empty(n_paths, dtype=np.int64)
    t_fin = np.empty(n_paths)
    nbs = np.empty(n_paths, dtype=np.int64)
    xs = np.empty(n_paths)
    vs = np.empty(n_paths)
    for i in prange(n_paths):
        st = _path_state(seed, np.uint64(first_path + i))
        rt = np.empty(0)
        rv = np.empty(0)
        s, tf, nb, xf, vf = _run_path(x0[i], v0[i], r, h_max, c_step, t_max, eps_v, eps_x,
                                      min_bounces, bounce_cap, stop_at_first, st, rt, rv)
        status[i] = s
        t_fin[i] = tf
        nbs[i] = nb
        xs[i] = xf
        vs[i] = vf
    return status, t_fin, nbs, xs, vs


@njit(cache=True)
def _run_one(x0, v0, r, h_max, c_step, t_max, eps_v, eps_x, min_bounces, bounce_cap,
             seed, path, n_rec):
    st = _path_state(seed, path)
    rt = np.zeros(n_rec)
    rv = np.zeros(n_rec)
    s, tf, nb, xf, vf = _run_path(x0, v0, r, h_max, c_step, t_max, eps_v, eps_x,
                                  min_bounces, bounce_cap, False, st, rt, rv)
    return s, tf, nb, xf, vf, rt, rv


# ------------------------------------------------------------ public API ---

def step_exact(state: ParticleState, h: float, g1: float, g2: float) -> ParticleState:
    """Exact free-flight transition over time ``h`` driven by two normals.

    The result may have x < 0; wall handling is done by the caller.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    dx, dv = _increments(h, g1, g2)
    return _raw_state(state.x + state.v * h + dx, state.v + dv, state.t + h)


def _raw_state(x: float, v: float, t: float) -> ParticleState:
    s = object.__new__(ParticleState)
    object.__setattr__(s, "x", x)
    object.__setattr__(s, "v", v)
    object.__setattr__(s, "t", t)
    return s


def bounce(v_in: float, r: float) -> float:
    if not v_in < 0:
        raise ValueError("arrival velocity must be negative")
    return -r * v_in


def _outcome(status, tf, nb, xf, vf, rt, rv, r, seed) -> TrajectoryOutcome:
    n = min(nb, rt.shape[0])
    recs = [BounceRecord(float(rt[i]), float(rv[i]), float(-r * rv[i])) for i in range(n)]
    return TrajectoryOutcome(
        collapsed=status == COLLAPSED,
        t_final=float(tf),
        bounce_count=int(nb),
        bounces=recs,
        rng_seed=int(seed),
        status=_STATUS[int(status)],
        final_state=_raw_state(float(xf), float(vf), float(tf)),
    )


def simulate_path(cfg: SimConfig, path: int = 0, state: ParticleState | None = None,
                  n_record: int | None = None) -> TrajectoryOutcome:
    """Run one trajectory of the (seed, path) substream and keep its bounce log."""
    if state is None:
        state = ParticleState(cfg.x0, cfg.v0)
    n_rec = cfg.record_bounces if n_record is None else n_record
    s, tf, nb, xf, vf, rt, rv = _run_one(
        float(state.x), float(state.v), cfg.r, cfg.h_max, cfg.c_step, cfg.T_max - state.t,
        cfg.eps_v, cfg.eps_x, cfg.min_bounces, cfg.bounce_cap,
        np.uint64(cfg.seed), np.uint64(path), int(n_rec),
    )
    out = _outcome(s, tf + state.t, nb, xf, vf, rt + state.t, rv, cfg.r, cfg.seed)
    if out.status == "bounce_cap":
        raise RuntimeError(f"bounce cap {cfg.bounce_cap} reached without a collapse verdict")
    return out


def advance_with_wall(state: ParticleState, cfg: SimConfig, rng: int = 0):
    """Advance until T_max or collapse; ``rng`` selects the path substream.

    Returns the final state and the list of bounce records.
    """
    out = simulate_path(cfg, path=int(rng), state=state, n_record=max(cfg.record_bounces, 100_000))
    return out.final_state, out.bounces


@dataclass
class CollapseSummary:
    r: float
    n_paths: int
    n_collapsed: int
    n_survived: int
    n_capped: int
    fraction: float
    ci_low: float
    ci_high: float
    mean_bounces: float
    mean_collapse_time: float
    config: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _wilson(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    c = (p + z * z / (2 * n)) / den
    w = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, c - w), min(1.0, c + w)


def run_paths(cfg: SimConfig, stop_at_first: bool = False, first_path: int = 0,
              initial: tuple[np.ndarray, np.ndarray] | None = None):
    """Raw per-path arrays (status, t_final, bounce_count, x, v).

    ``initial`` optionally gives per-path starting positions and velocities;
    otherwise every path starts at (cfg.x0, cfg.v0).
    """
    if initial is None:
        x0 = np.full(cfg.n_paths, float(cfg.x0))
        v0 = np.full(cfg.n_paths, float(cfg.v0))
    else:
        x0 = np.ascontiguousarray(initial[0], dtype=float)
        v0 = np.ascontiguousarray(initial[1], dtype=float)
        if x0.shape != (cfg.n_paths,) or v0.shape != (cfg.n_paths,):
            raise ValueError("initial states must have length n_paths")
        if np.any(x0 < 0):
            raise ValueError("initial positions must be >= 0")
    return _run_many(x0, v0, cfg.r, cfg.h_max, cfg.c_step, cfg.T_max,
                     cfg.eps_v, cfg.eps_x, cfg.min_bounces, cfg.bounce_cap, stop_at_first,
                     np.uint64(cfg.seed), cfg.n_paths, first_path)


def sample_blob(n: int, x0: float, v0: float, sigma_x: float, sigma_v: float, seed: int = 0,
                x_max: float = np.inf) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian blob conditioned on 0 <= x <= x_max (inverse-CDF sampling in x)."""
    rng = np.random.default_rng(seed)
    lo, hi = ndtr((0.0 - x0) / sigma_x), ndtr((x_max - x0) / sigma_x)
    xs = x0 + sigma_x * ndtri(lo + (hi - lo) * rng.random(n))
    vs = v0 + sigma_v * rng.standard_normal(n)
    return np.maximum(xs, 0.0), vs


def collapse_experiment(cfg: SimConfig, initial: tuple[np.ndarray, np.ndarray] | None = None) -> CollapseSummary:
    status, tf, nb, _x, _v = run_paths(cfg, initial=initial)
    return summarize_paths(cfg, status, tf, nb)


def summarize_paths(cfg: SimConfig, status: np.ndarray, tf: np.ndarray, nb: np.ndarray) -> CollapseSummary:
    n_col = int(np.sum(status == COLLAPSED))
    n_sur = int(np.sum(status == SURVIVED))
    n_cap = int(np.sum(status == BOUNCE_CAP))
    assert n_col + n_sur + n_cap == cfg.n_paths
    if n_cap:
        log.warning("%d paths hit the bounce cap at r=%g", n_cap, cfg.r)
    lo, hi = _wilson(n_col, cfg.n_paths)
    col = status == COLLAPSED
    return CollapseSummary(
        r=cfg.r,
        n_paths=cfg.n_paths,
        n_collapsed=n_col,
        n_survived=n_sur,
        n_capped=n_cap,
        fraction=n_col / cfg.n_paths,
        ci_low=lo,
        ci_high=hi,
        mean_bounces=float(np.mean(nb)),
        mean_collapse_time=float(np.mean(tf[col])) if n_col else math.nan,
        config=asdict(cfg),
    )


@dataclass
class HittingSample:
    b: float
    t1: np.ndarray
    h1: np.ndarray
    n_unreturned: int


def hitting_statistics(b: float, n_paths: int, rng: int = 0, c_step: float = 0.01,
                       h_max_unit: float = 1e9, t_max_unit: float = 1e12) -> HittingSample:
    """First return time and speed from (0, b).

    Step caps and horizon scale as b^2 so the discretized law is itself
    scale covariant; paths not back by the horizon are counted separately.
    """
    if not b > 0:
        raise ValueError("b must be positive")
    cfg = SimConfig(r=1.0, h_max=h_max_unit * b * b, T_max=t_max_unit * b * b, n_paths=n_paths,
                    seed=int(rng), c_step=c_step, x0=0.0, v0=float(b))
    status, tf, _nb, _x, vin = run_paths(cfg, stop_at_first=True)
    ok = status == RETURNED
    return HittingSample(b=b, t1=tf[ok].copy(), h1=-vin[ok], n_unreturned=int(np.sum(~ok)))
