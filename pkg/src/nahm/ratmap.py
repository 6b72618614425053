"""Rational maps and boundary data of a discrete Nahm solution.

``normalize`` uses the complex gauge freedom to make every interior gamma the
identity, so each interval carries a single constant beta. The flag-valued
rational map, the small-monad partial flags ``F_i`` and the curvature of the
boundary line bundles are computed from there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import null_space

from .adhm import SmallMonad, weight_restrict
from .errors import (
    DegenerateFlag,
    DegenerateSmallMonad,
    PoleAtX,
    SingularGamma,
    StencilAcrossPole,
    ValidationError,
    ZeroHorosphere,
)
from .lattice import RANK_RTOL, GaugeTransform, NahmSolution, gauge_transform
from .typedata import MonopoleType, kfrak  # noqa: F401  (re-exported)

POLE_RCOND = 1e-12
NEST_TOL = 1e-8


@dataclass(frozen=True)
class NormalizedSolution:
    type: MonopoleType
    beta_interval: dict
    gamma_jump: dict
    a_norm: dict
    b_norm: dict
    beta_spread: dict = field(default_factory=dict)
    solution: NahmSolution | None = None
    gauge: GaugeTransform | None = None


def _interval_sites(t: MonopoleType, i: int) -> list[int]:
    """Doubled weights ``w`` with ``p_i <= w < p_{i+1}`` (beta site is ``w + 1``)."""
    return list(range(t.p2(i), t.p2(i + 1), 2))


def _complete_to_invertible(gam: np.ndarray) -> np.ndarray:
    """Square G whose first rows are ``gam`` so that ``gam G^-1 = [I | 0]``."""
    comp = null_space(gam).conj().T
    return np.vstack([gam, comp])


def normalize(s: NahmSolution, jumps: bool = False, rtol: float = RANK_RTOL) -> NormalizedSolution:
    """Gauge every interior gamma to the identity, sweeping left to right.

    With ``jumps=True`` the rectangular gammas at interior mass points are also
    brought to ``[I | 0]`` using the remaining freedom at the start of each
    interval.
    """
    t = s.type
    g = {}
    for i in range(1, t.n):
        sites = _interval_sites(t, i)
        first = sites[0] + 1
        dim = s.beta[first].shape[0]
        if i == 1 or not jumps:
            g[first] = np.eye(dim, dtype=complex)
        else:
            p = t.p2(i)
            gam = g[p - 1] @ s.gamma[p]
            sv = np.linalg.svd(gam, compute_uv=False)
            if sv[0] == 0 or sv[-1] <= rtol * sv[0]:
                raise SingularGamma(f"jump gamma at weight {p / 2} is not surjective", p, float(sv[-1]))
            g[first] = _complete_to_invertible(gam)
        for w2 in sites[1:]:
            gam = s.gamma[w2]
            sv = np.linalg.svd(gam, compute_uv=False)
            if sv[0] == 0 or sv[-1] <= rtol * sv[0]:
                raise SingularGamma(f"gamma at weight {w2 / 2} is not injective", w2, float(sv[-1]))
            g[w2 + 1] = g[w2 - 1] @ gam
    gauge = GaugeTransform(g, {j: 1.0 + 0j for j in range(1, t.n + 1)})
    ns = gauge_transform(s, gauge, max_cond=np.inf)
    beta_interval, spread = {}, {}
    for i in range(1, t.n):
        sites = _interval_sites(t, i)
        b0 = ns.beta[sites[0] + 1]
        beta_interval[i] = b0
        scale = max(1.0, float(np.linalg.norm(b0)))
        spread[i] = max((float(np.linalg.norm(ns.beta[w + 1] - b0)) / scale for w in sites), default=0.0)
    return NormalizedSolution(
        type=t,
        beta_interval=beta_interval,
        gamma_jump={i: ns.gamma[t.p2(i)] for i in range(2, t.n)},
        a_norm=dict(ns.avec),
        b_norm=dict(ns.bvec),
        beta_spread=spread,
        solution=ns,
        gauge=gauge,
    )


def _transfer(ns: NormalizedSolution, j: int, i: int) -> np.ndarray:
    """Composite of the jump maps carrying interval ``i-1`` data into interval ``j``.

    For jumps in ``[I | 0]`` form this is truncation to the first
    ``k_1 + ... + k_j`` entries.
    """
    dim = ns.beta_interval[j].shape[0]
    out = np.eye(dim, dtype=complex)
    for m in range(j + 1, i):
        out = out @ ns.gamma_jump[m]
    return out


def _is_infinite(x) -> bool:
    return x is None or (np.isscalar(x) and not np.isfinite(x))


def rational_coefficients(ns: NormalizedSolution, h: complex, x) -> dict:
    """``c_{j,i}(x) = (-h)^(p_j - p_i) a_[p_j] (x - beta_[p_j])^-1 T b_[p_i]`` for j < i."""
    t = ns.type
    h = complex(h)
    if h == 0:
        raise ZeroHorosphere("horosphere parameter h must be nonzero")
    out = {}
    if _is_infinite(x):
        return {(j, i): 0j for j in range(1, t.n) for i in range(j + 1, t.n + 1)}
    x = complex(x)
    for j in range(1, t.n):
        beta = ns.beta_interval[j]
        m = x * np.eye(beta.shape[0]) - beta
        if np.linalg.cond(m) > 1.0 / POLE_RCOND:
            raise PoleAtX(f"x = {x} lies on the spectrum of beta_[p_{j}]")
        row = np.linalg.solve(m.T, ns.a_norm[j][0]).T
        for i in range(j + 1, t.n + 1):
            power = (t.p2(j) - t.p2(i)) // 2
            vec = _transfer(ns, j, i) @ ns.b_norm[i][:, 0]
            out[(j, i)] = complex((-h) ** power * (row @ vec))
    return out


@dataclass
class FlagPoint:
    """Nested subspaces ``V_1 ⊂ ... ⊂ V_{N-1}`` of C^N at one point x.

    ``subspaces[m-1]`` is an orthonormal N x m basis; ``frames[m-1]`` is the
    holomorphic basis it was built from (identity on the free coordinates).
    """

    x: complex
    subspaces: list
    frames: list

    def plucker(self, m: int) -> np.ndarray:
        """Affine Plücker coordinates of ``V_m`` (holomorphic in x)."""
        frame = self.frames[m - 1]
        n = frame.shape[0]
        return np.array([np.linalg.det(frame[list(rows), :]) for rows in combinations(range(n), m)])

    def nesting_error(self) -> float:
        err = 0.0
        for lo, hi in zip(self.subspaces, self.subspaces[1:]):
            resid = lo - hi @ (hi.conj().T @ lo)
            err = max(err, float(np.linalg.norm(resid)))
        return err


def _flag_frames(n: int, coeffs: dict) -> list:
    frames = []
    for m in range(1, n):
        free = list(range(1, m)) + [n]
        frame = np.zeros((n, m), dtype=complex)
        for col, f in enumerate(free):
            r = np.zeros(n + 1, dtype=complex)
            r[f] = 1.0
            for j in range(n - 1, m - 1, -1):
                r[j] = sum(coeffs[(j, i)] * r[i] for i in range(j + 1, n + 1))
            frame[:, col] = r[1:]
        frames.append(frame)
    return frames


def flag_at(ns: NormalizedSolution, h: complex, x) -> FlagPoint:
    """Value of the rational map: constraints ``r_j = sum_{i>j} c_{j,i} r_i`` for j >= m cut out V_m."""
    n = ns.type.n
    coeffs = rational_coefficients(ns, h, x)
    frames = _flag_frames(n, coeffs)
    subspaces = [np.linalg.qr(f)[0] for f in frames]
    point = FlagPoint(complex("inf") if _is_infinite(x) else complex(x), subspaces, frames)
    err = point.nesting_error()
    if err > NEST_TOL:
        raise DegenerateFlag(f"flag nesting fails by {err:.3e}")
    return point


def map_degree(f, center: complex = 0.0, radius: float = 1.0, n_points: int = 512,
               max_degree: int = 12, rtol: float = 1e-8) -> int:
    """Number of poles of a scalar rational function inside a circle.

    Uses contour moments ``m_k = (1/2πi) ∮ x^k f(x) dx`` (trapezoid rule) and the
    rank of their Hankel matrix.
    """
    theta = 2 * np.pi * np.arange(n_points) / n_points
    v = np.exp(1j * theta)
    vals = np.array([f(center + radius * e) for e in v])
    # moments rescaled by radius^-(k+1); a diagonal congruence, so the rank is unchanged
    moments = np.array([np.mean(v ** (k + 1) * vals) for k in range(2 * max_degree + 1)])
    hankel = np.array([[moments[i + j] for j in range(max_degree + 1)] for i in range(max_degree + 1)])
    sv = np.linalg.svd(hankel, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def winding_number(f, center: complex = 0.0, radius: float = 1.0, n_points: int = 4096) -> int:
    """Argument-principle count ``Z - P`` of a scalar function inside a circle."""
    theta = 2 * np.pi * np.arange(n_points + 1) / n_points
    vals = np.array([f(center + radius * np.exp(1j * th)) for th in theta])
    phase = np.unwrap(np.angle(vals))
    return int(round((phase[-1] - phase[0]) / (2 * np.pi)))


@dataclass
class BoundaryFlag:
    x: complex
    inner: np.ndarray
    outer: np.ndarray
    ambient: int

    @property
    def flag_type(self) -> tuple[int, int, int]:
        return self.inner.shape[1], self.outer.shape[1], self.ambient

    def nesting_error(self) -> float:
        resid = self.inner - self.outer @ (self.outer.conj().T @ self.inner)
        return float(np.linalg.norm(resid))


def _fixed_line_point(x) -> tuple:
    if _is_infinite(x):
        return (1.0, 0.0, 0.0, 0.0)
    return (complex(x), 0.0, -1.0, 0.0)


def _check_index(t: MonopoleType, i: int, upper: int) -> None:
    if not 1 <= i <= upper:
        raise ValidationError(f"index {i} outside 1..{upper}")


def boundary_flag_map(s: NahmSolution, i: int, x, rtol: float = RANK_RTOL) -> BoundaryFlag:
    """``F_i(x) = (A_x(H_{p_i}), B_x(L_{p_i})^⊥)`` in ``C^(2k_1+...+2k_{i-1}+k_i+1)``."""
    t = s.type
    _check_index(t, i, t.n - 1)
    sm = weight_restrict(s, _fixed_line_point(x), t.p2(i))
    A, B = sm.A, sm.B
    ua, sa, _ = np.linalg.svd(A)
    if sa.size and (sa[0] == 0 or sa[-1] <= rtol * sa[0]):
        raise DegenerateSmallMonad(f"small monad A-map at p_{i} is not injective")
    inner = ua[:, : A.shape[1]]
    if B.shape[0]:
        sb = np.linalg.svd(B, compute_uv=False)
        if sb[0] == 0 or sb[-1] <= rtol * sb[0]:
            raise DegenerateSmallMonad(f"small monad B-map at p_{i} is not surjective")
        outer = null_space(B, rcond=rtol)
    else:
        outer = np.eye(A.shape[0], dtype=complex)
    return BoundaryFlag(complex("inf") if _is_infinite(x) else complex(x), inner, outer, A.shape[0])


# ---------------------------------------------------------------------------
# curvature of the boundary line bundles L_{p_i}

def _log_gram(m: np.ndarray, rows: bool, rtol: float) -> tuple[np.ndarray, np.ndarray]:
    """Batched ``log det`` of ``m^* m`` (columns) or ``m m^*`` (rows) and a validity mask."""
    if m.shape[-1] == 0 or m.shape[-2] == 0:
        return np.zeros(m.shape[:-2]), np.ones(m.shape[:-2], dtype=bool)
    mh = np.conj(np.swapaxes(m, -1, -2))
    gram = m @ mh if rows else mh @ m
    ev = np.linalg.eigvalsh(gram)
    ok = ev[..., 0] > (rtol ** 2) * ev[..., -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        logdet = np.sum(np.log(np.where(ev > 0, ev, np.nan)), axis=-1)
    return logdet, ok & np.isfinite(logdet)


def log_norm_potential(sm: SmallMonad, pts: np.ndarray, chart: str = "x", rtol: float = RANK_RTOL):
    """``-log |sigma|^2 = log det(A^*A) - log det(BB^*)`` for a holomorphic generator.

    In chart ``"x"`` the point is ``[x:0:-1:0]``; in chart ``"u"`` it is ``[1:0:-u:0]``.
    """
    pts = np.asarray(pts, dtype=complex)
    p = pts[..., None, None]
    if chart == "x":
        A = p * sm.Ax - sm.Az
        B = p * sm.Bx - sm.Bz
    elif chart == "u":
        A = sm.Ax - p * sm.Az
        B = sm.Bx - p * sm.Bz
    else:
        raise ValidationError(f"unknown chart {chart!r}")
    la, oka = _log_gram(A, rows=False, rtol=rtol)
    lb, okb = _log_gram(B, rows=True, rtol=rtol)
    return la - lb, oka & okb


_STENCIL = np.array([0, 1, -1, 1j, -1j])


def _density_batch(sm: SmallMonad, pts: np.ndarray, step: float, chart: str) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(pts, dtype=complex)
    phi, ok = log_norm_potential(sm, pts[..., None] + step * _STENCIL, chart)
    lap = (phi[..., 1:].sum(axis=-1) - 4 * phi[..., 0]) / step ** 2
    return 0.5 * lap, ok


def curvature_density(s: NahmSolution, i: int, x: complex, step: float = 1e-3, chart: str = "x") -> float:
    """Curvature density of ``L_{p_i}`` at x: half the 5-point Laplacian of ``-log|sigma|^2``.

    Normalised so that its integral over P^1 divided by 2π is the degree.
    """
    t = s.type
    _check_index(t, i, t.n)
    if step <= 0:
        raise ValidationError("step must be positive")
    sm = weight_restrict(s, (1.0, 0.0, 0.0, 0.0), t.p2(i))
    rho, ok = _density_batch(sm, np.array([x]), step, chart)
    if not ok[0, 0]:
        raise DegenerateSmallMonad(f"small monad at p_{i} degenerates at x = {x}")
    if not ok[0].all():
        raise StencilAcrossPole(f"stencil of size {step} around x = {x} meets a degenerate point")
    return float(rho[0])


def chern_integral(s: NahmSolution, i: int, grid: int = 64, step: float = 1e-3) -> float:
    """Integral of the curvature density over P^1 divided by 2π.

    Two charts (x and u = 1/x) split at |x| = 1, each integrated on a polar grid
    with Gauss-Legendre radii and uniform angles.
    """
    t = s.type
    _check_index(t, i, t.n)
    sm = weight_restrict(s, (1.0, 0.0, 0.0, 0.0), t.p2(i))
    nodes, weights = np.polynomial.legendre.leggauss(grid)
    r = 0.5 * (nodes + 1.0)
    wr = 0.5 * weights
    theta = 2 * np.pi * (np.arange(grid) + 0.5) / grid
    pts = r[:, None] * np.exp(1j * theta)[None, :]
    total = 0.0
    for chart in ("x", "u"):
        rho, ok = _density_batch(sm, pts, step, chart)
        if not ok.all():
            raise DegenerateSmallMonad(f"small monad at p_{i} degenerates inside the {chart}-chart")
        total += float(np.sum(wr[:, None] * r[:, None] * rho) * (2 * np.pi / grid))
    return total / (2 * np.pi)
