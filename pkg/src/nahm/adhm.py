"""Equivariant ADHM matrices, monad maps and small monads.

Column order of ``H`` (and hence of ``alpha1``, ``alpha2``, ``a``) is ascending
weight, each weight block of size ``chi_w``. ``K`` is ordered as
(first H copy, second H copy, framing rows ``1..N``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateMonad,
    OffBlockViolation,
    ShapeMismatch,
    ValidationError,
    WeightOutOfRange,
    ZeroPoint,
)
from .lattice import RANK_RTOL, NahmSolution
from .typedata import MonopoleType, weight_profile

OFF_BLOCK_ATOL = 1e-12


def column_offsets(t: MonopoleType) -> dict:
    """Doubled weight -> (start, stop) column range in H."""
    prof = weight_profile(t)
    out = {}
    pos = 0
    for w2 in prof.weights2():
        out[w2] = (pos, pos + prof.at(w2))
        pos += prof.at(w2)
    return out


@dataclass(frozen=True)
class ADHMData:
    type: MonopoleType
    alpha1: np.ndarray
    alpha2: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        kappa, n = self.type.kappa, self.type.n
        for name, shape in (("alpha1", (kappa, kappa)), ("alpha2", (kappa, kappa)),
                            ("a", (n, kappa)), ("b", (kappa, n))):
            arr = np.array(getattr(self, name), dtype=complex, copy=True)
            if arr.shape != shape:
                raise ShapeMismatch(f"{name} has shape {arr.shape}, expected {shape}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def weight_of_column(self) -> np.ndarray:
        return weight_labels(self.type)


def weight_labels(t: MonopoleType) -> np.ndarray:
    """Doubled weight of every H basis vector (length kappa)."""
    prof = weight_profile(t)
    return np.concatenate([np.full(prof.at(w2), w2, dtype=int) for w2 in prof.weights2()])


def block_masks(t: MonopoleType) -> dict:
    """Boolean nonzero patterns of alpha1, alpha2, a, b for type ``t``."""
    w = weight_labels(t)
    p = np.array(t.all_masses2)
    row_p = np.arange(1, t.n + 1)
    return {
        "alpha1": w[:, None] == w[None, :],
        "alpha2": w[None, :] == w[:, None] + 2,
        "a": (p[:, None] == w[None, :]) & (row_p[:, None] <= t.n - 1),
        "b": (w[:, None] == p[None, :] - 2) & (row_p[None, :] >= 2),
    }


def assemble(s: NahmSolution) -> ADHMData:
    if not isinstance(s, NahmSolution):
        raise ShapeMismatch("assemble expects a NahmSolution")
    t = s.type
    kappa, n = t.kappa, t.n
    off = column_offsets(t)
    alpha1 = np.zeros((kappa, kappa), dtype=complex)
    alpha2 = np.zeros((kappa, kappa), dtype=complex)
    a = np.zeros((n, kappa), dtype=complex)
    b = np.zeros((kappa, n), dtype=complex)
    for site, blk in s.beta.items():
        lo, hi = off[site - 1]
        alpha1[lo:hi, lo:hi] = blk
    for site, blk in s.gamma.items():
        rlo, rhi = off[site - 2]
        clo, chi = off[site]
        alpha2[rlo:rhi, clo:chi] = blk
    for j, row in s.avec.items():
        lo, hi = off[t.p2(j)]
        a[j - 1, lo:hi] = row[0]
    for j, col in s.bvec.items():
        lo, hi = off[t.p2(j) - 2]
        b[lo:hi, j - 1] = col[:, 0]
    return ADHMData(t, alpha1, alpha2, a, b)


def disassemble(d: ADHMData, atol: float = OFF_BLOCK_ATOL) -> NahmSolution:
    """Extract lattice blocks; off-pattern entries above ``atol`` are rejected."""
    t = d.type
    masks = block_masks(t)
    worst, where = 0.0, None
    for name, mask in masks.items():
        m = np.abs(getattr(d, name)) * ~mask
        if m.size and m.max() > worst:
            worst = float(m.max())
            where = (name,) + tuple(int(v) for v in np.unravel_index(np.argmax(m), m.shape))
    if worst > atol:
        raise OffBlockViolation(
            f"off-block entry {worst:.3e} at {where[0]}[{where[1]}, {where[2]}]", worst, where
        )
    off = column_offsets(t)
    beta = {w2 + 1: d.alpha1[lo:hi, lo:hi] for w2, (lo, hi) in off.items()}
    gamma = {}
    for w2 in range(t.p2(1) + 2, t.pN2, 2):
        rlo, rhi = off[w2 - 2]
        clo, chi = off[w2]
        gamma[w2] = d.alpha2[rlo:rhi, clo:chi]
    avec = {}
    for j in range(1, t.n):
        lo, hi = off[t.p2(j)]
        avec[j] = d.a[j - 1 : j, lo:hi]
    bvec = {}
    for j in range(2, t.n + 1):
        lo, hi = off[t.p2(j) - 2]
        bvec[j] = d.b[lo:hi, j - 1 : j]
    return NahmSolution(t, beta, gamma, avec, bvec)


@dataclass
class EquivarianceReport:
    c: complex
    deviation: dict
    tolerance: float

    @property
    def passed(self) -> dict:
        return {k: v <= self.tolerance for k, v in self.deviation.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())

    def to_json(self) -> dict:
        return {"c": [self.c.real, self.c.imag], "deviation": self.deviation,
                "passed": self.passed, "ok": self.ok}


def _rel_dev(lhs: np.ndarray, rhs: np.ndarray) -> float:
    scale = max(float(np.abs(lhs).max(initial=0.0)), float(np.abs(rhs).max(initial=0.0)))
    diff = float(np.abs(lhs - rhs).max(initial=0.0))
    return diff / scale if scale > 0 else diff


def equivariance_check(d: ADHMData, c: complex, tol: float = 1e-10) -> EquivarianceReport:
    """Check the four circle-equivariance conditions with ``P_c = diag(c^w)``."""
    c = complex(c)
    if c == 0:
        raise ValidationError("c must be nonzero")
    logc = np.log(c)
    w = d.weight_of_column / 2.0
    P = np.exp(w * logc)
    Pinv = np.exp(-w * logc)
    lam = np.exp(np.array(d.type.all_masses2) / 2.0 * logc)
    lam_inv = 1.0 / lam
    conj = lambda m: (P[:, None] * m) * Pinv[None, :]
    dev = {
        "alpha1": _rel_dev(d.alpha1, conj(d.alpha1)),
        "alpha2": _rel_dev(d.alpha2, c * conj(d.alpha2)),
        "a": _rel_dev(d.a, (lam[:, None] * d.a) * Pinv[None, :]),
        "b": _rel_dev(d.b, c * (P[:, None] * d.b) * lam_inv[None, :]),
    }
    return EquivarianceReport(c, dev, tol)


def commutator(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x @ y - y @ x


def adhm_complex_residual(d: ADHMData) -> np.ndarray:
    return commutator(d.alpha1, d.alpha2) + d.b @ d.a


def adhm_real_residual(d: ADHMData) -> np.ndarray:
    h = lambda m: m.conj().T
    return (commutator(d.alpha1, h(d.alpha1)) + commutator(d.alpha2, h(d.alpha2))
            + d.b @ h(d.b) - h(d.a) @ d.a)


@dataclass(frozen=True)
class MonadMaps:
    A: np.ndarray
    B: np.ndarray
    point: tuple


def _point(X) -> tuple:
    X = tuple(complex(v) for v in X)
    if len(X) == 3:
        X = X + (0j,)
    if len(X) != 4:
        raise ValidationError("point needs homogeneous coordinates [x:y:z] or [x:y:z:w]")
    if all(v == 0 for v in X):
        raise ZeroPoint("homogeneous coordinates are all zero")
    return X


def monad_maps(d: ADHMData, X) -> MonadMaps:
    """``A_X`` ((2k+N) x k) and ``B_X`` (k x (2k+N)) over P^3 (w = 0 gives P^2)."""
    x, y, z, w = _point(X)
    kappa = d.type.kappa
    eye = np.eye(kappa)
    h = lambda m: m.conj().T
    p = x * eye + z * d.alpha1 - w * h(d.alpha2)
    q = y * eye + z * d.alpha2 + w * h(d.alpha1)
    A = np.vstack([p, q, z * d.a + w * h(d.b)])
    B = np.hstack([-q, p, z * d.b - w * h(d.a)])
    return MonadMaps(A, B, (x, y, z, w))


@dataclass
class MonadReport:
    injectivity: float
    surjectivity: float
    exactness: float
    relative_exactness: float
    scale_a: float
    scale_b: float
    rtol: float = RANK_RTOL

    @property
    def injective(self) -> bool:
        return self.injectivity > self.rtol * self.scale_a

    @property
    def surjective(self) -> bool:
        return self.surjectivity > self.rtol * self.scale_b

    @property
    def ok(self) -> bool:
        return self.injective and self.surjective

    def to_json(self) -> dict:
        return {"sigma_min_A": self.injectivity, "sigma_min_B": self.surjectivity,
                "norm_BA": self.exactness, "relative_BA": self.relative_exactness,
                "injective": self.injective, "surjective": self.surjective}


def monad_check(d: ADHMData, X, rtol: float = RANK_RTOL) -> MonadReport:
    m = monad_maps(d, X)
    sa = np.linalg.svd(m.A, compute_uv=False)
    sb = np.linalg.svd(m.B, compute_uv=False)
    ba = m.B @ m.A
    nba = float(np.linalg.norm(ba))
    denom = float(np.linalg.norm(m.A) * np.linalg.norm(m.B))
    return MonadReport(float(sa[-1]), float(sb[-1]), nba, nba / denom if denom else nba,
                       float(sa[0]), float(sb[0]), rtol)


def fibre(d: ADHMData, X, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of ``ker B_X ∩ (im A_X)^⊥``; exactly N columns."""
    m = monad_maps(d, X)
    sa = np.linalg.svd(m.A, compute_uv=False)
    if sa[0] == 0 or sa[-1] <= rtol * sa[0]:
        raise DegenerateMonad(f"A_X is not injective (sigma_min={sa[-1]:.3e})")
    stacked = np.vstack([m.B, m.A.conj().T])
    _, sv, vh = np.linalg.svd(stacked)
    rank = int(np.sum(sv > rtol * sv[0]))
    basis = vh[rank:].conj().T
    if basis.shape[1] != d.type.n:
        raise DegenerateMonad(f"fibre has dimension {basis.shape[1]}, expected {d.type.n}")
    return basis


@dataclass(frozen=True)
class SmallMonad:
    """Weight-w restriction of the monad along ``[x:0:z:0]``.

    ``A(x, z) = x * Ax + z * Az`` and likewise for ``B``; ``A``/``B`` hold the
    values at ``point``.
    """

    weight2: int
    Ax: np.ndarray
    Az: np.ndarray
    Bx: np.ndarray
    Bz: np.ndarray
    point: tuple
    dims: tuple = field(default=(0, 0, 0))

    def at(self, x: complex, z: complex = -1.0) -> tuple[np.ndarray, np.ndarray]:
        return x * self.Ax + z * self.Az, x * self.Bx + z * self.Bz

    @property
    def A(self) -> np.ndarray:
        return self.at(self.point[0], self.point[2])[0]

    @property
    def B(self) -> np.ndarray:
        return self.at(self.point[0], self.point[2])[1]

    def cohomology_dim(self, rtol: float = RANK_RTOL) -> int:
        """``dim ker B - rank A`` at ``point``."""
        from .lattice import numerical_rank

        A, B = self.A, self.B
        return A.shape[0] - numerical_rank(B, rtol) - numerical_rank(A, rtol)


def k_weight_labels(t: MonopoleType) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Doubled weights of the bases of H, K and L under the circle action."""
    h = weight_labels(t)
    k = np.concatenate([h, h + 2, np.array(t.all_masses2)])
    return h, k, h + 2


def weight_restrict(s: NahmSolution, X, w2: int) -> SmallMonad:
    """Restrict ``(A_X, B_X)`` at ``X = [x:0:z:0]`` to the doubled weight ``w2``."""
    t = s.type
    x, y, z, w = _point(X)
    if y != 0 or w != 0:
        raise ValidationError("weight restriction needs a point on the fixed line [x:0:z:0]")
    if w2 % 2 != t.p2(1) % 2 or not t.p2(1) <= w2 <= t.pN2:
        raise WeightOutOfRange(f"weight {w2 / 2} outside [{t.p2(1) / 2}, {t.pN2 / 2}]")
    d = assemble(s)
    hl, kl, ll = k_weight_labels(t)
    hs, ks, ls = hl == w2, kl == w2, ll == w2
    mx = monad_maps(d, (1, 0, 0, 0))
    mz = monad_maps(d, (0, 0, 1, 0))
    pick_a = lambda m: m.A[np.ix_(ks, hs)]
    pick_b = lambda m: m.B[np.ix_(ls, ks)]
    return SmallMonad(w2, pick_a(mx), pick_a(mz), pick_b(mx), pick_b(mz), (x, y, z, w),
                      (int(hs.sum()), int(ks.sum()), int(ls.sum())))
