"""Levenberg-Marquardt solver for the discrete Nahm equations.

Unknowns are the real and imaginary parts of every block (the ordering of
:meth:`NahmSolution.to_vector`). The residual stacks the complex equations and
then the real ones, each block as real part followed by imaginary part, so the
squared norm of the residual vector is :func:`total_residual`.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoConvergence, UnsupportedType, ValidationError
from .lattice import (
    NahmSolution,
    StabilityReport,
    check_stability,
    complex_residual,
    random_init,
    real_residual,
    total_residual,
)
from .typedata import MonopoleType, derive_type, site_dims


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 500
    tolerance: float = 1e-20
    restarts: int = 10
    seed: int = 0
    init_scale: float = 1.0
    damping: float = 1e-3

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValidationError("max_iterations must be non-negative")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.restarts < 1:
            raise ValidationError("restarts must be at least 1")
        if not self.init_scale > 0 or not self.damping > 0:
            raise ValidationError("init_scale and damping must be positive")


@dataclass
class SolveReport:
    converged: bool
    final_residual: float
    iterations: int
    restart_index: int
    stability: StabilityReport | None = None
    history: list = field(default_factory=list)
    message: str = ""

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "final_residual": self.final_residual,
            "iterations": self.iterations,
            "restart_index": self.restart_index,
            "stability": self.stability.to_json() if self.stability else None,
            "message": self.message,
        }


# ---------------------------------------------------------------------------
# residual and analytic Jacobian

def _offsets(t: MonopoleType) -> dict:
    """``(field, key) -> (start, rows, cols)`` in the real parameter vector."""
    layout = site_dims(t)
    out, pos = {}, 0
    for name, shapes in (("beta", layout.beta), ("gamma", layout.gamma), ("a", layout.a), ("b", layout.b)):
        for key in sorted(shapes):
            r, c = shapes[key]
            out[(name, key)] = (pos, r, c)
            pos += 2 * r * c
    return out


def residual_vector(s: NahmSolution) -> np.ndarray:
    parts = []
    for blocks in (complex_residual(s), real_residual(s)):
        for key in sorted(blocks):
            z = blocks[key].ravel()
            parts.append(np.concatenate([z.real, z.imag]))
    return np.concatenate(parts) if parts else np.zeros(0)


def _transpose_perm(r: int, c: int) -> np.ndarray:
    """Matrix P with ``vec(X^T) = P vec(X)`` for row-major vec of an r x c X."""
    perm = np.zeros((r * c, r * c))
    for p in range(r):
        for q in range(c):
            perm[q * r + p, p * c + q] = 1.0
    return perm


def _terms(s: NahmSolution) -> list:
    """Linearisation terms ``(block, field, key, L, R, conj)``.

    ``conj=False`` contributes ``L dX R``; ``conj=True`` contributes ``L dX^* R``.
    """
    t = s.type
    h = lambda m: m.conj().T
    I = lambda n: np.eye(n, dtype=complex)
    terms = []
    for w2 in range(t.p2(1) + 2, t.pN2, 2):
        blk = ("c", w2)
        g, bl, br = s.gamma[w2], s.beta[w2 - 1], s.beta[w2 + 1]
        terms.append((blk, "beta", w2 - 1, I(bl.shape[0]), g, False))
        terms.append((blk, "gamma", w2, bl, I(g.shape[1]), False))
        terms.append((blk, "gamma", w2, -I(g.shape[0]), br, False))
        terms.append((blk, "beta", w2 + 1, -g, I(br.shape[0]), False))
        j = t.mass_index(w2)
        if j is not None and 2 <= j <= t.n - 1:
            a, b = s.avec[j], s.bvec[j]
            terms.append((blk, "b", j, I(b.shape[0]), a, False))
            terms.append((blk, "a", j, b, I(a.shape[1]), False))
    for w2 in range(t.p2(1), t.pN2, 2):
        blk = ("r", w2)
        bt = s.beta[w2 + 1]
        n = bt.shape[0]
        terms.append((blk, "beta", w2 + 1, I(n), h(bt), False))
        terms.append((blk, "beta", w2 + 1, bt, I(n), True))
        terms.append((blk, "beta", w2 + 1, -I(n), bt, True))
        terms.append((blk, "beta", w2 + 1, -h(bt), I(n), False))
        if w2 + 2 in s.gamma:
            g = s.gamma[w2 + 2]
            terms.append((blk, "gamma", w2 + 2, I(n), h(g), False))
            terms.append((blk, "gamma", w2 + 2, g, I(n), True))
        if w2 in s.gamma:
            g = s.gamma[w2]
            terms.append((blk, "gamma", w2, -h(g), I(n), False))
            terms.append((blk, "gamma", w2, -I(n), g, True))
        j = t.mass_index(w2)
        if j is not None and j <= t.n - 1:
            a = s.avec[j]
            terms.append((blk, "a", j, -h(a), I(n), False))
            terms.append((blk, "a", j, -I(n), a, True))
        j = t.mass_index(w2 + 2)
        if j is not None and j >= 2:
            b = s.bvec[j]
            terms.append((blk, "b", j, I(n), h(b), False))
            terms.append((blk, "b", j, b, I(n), True))
    return terms


def _block_rows(s: NahmSolution) -> dict:
    out, pos = {}, 0
    for tag, blocks in (("c", complex_residual(s)), ("r", real_residual(s))):
        for key in sorted(blocks):
            n = blocks[key].size
            out[(tag, key)] = (pos, n)
            pos += 2 * n
    out[None] = pos
    return out


def jacobian(s: NahmSolution) -> np.ndarray:
    """Analytic real Jacobian of :func:`residual_vector` w.r.t. :meth:`NahmSolution.to_vector`."""
    cols = _offsets(s.type)
    rows = _block_rows(s)
    ncols = sum(2 * r * c for _, r, c in cols.values())
    J = np.zeros((rows[None], ncols))
    perms = {}
    for blk, name, key, L, R, conj in _terms(s):
        r0, nr = rows[blk]
        c0, fr, fc = cols[(name, key)]
        nc = fr * fc
        M = np.kron(L, R.T)
        if conj:
            if (fr, fc) not in perms:
                perms[(fr, fc)] = _transpose_perm(fr, fc)
            M = M @ perms[(fr, fc)]
            du, dv = M, -1j * M
        else:
            du, dv = M, 1j * M
        J[r0 : r0 + nr, c0 : c0 + nc] += du.real
        J[r0 + nr : r0 + 2 * nr, c0 : c0 + nc] += du.imag
        J[r0 : r0 + nr, c0 + nc : c0 + 2 * nc] += dv.real
        J[r0 + nr : r0 + 2 * nr, c0 + nc : c0 + 2 * nc] += dv.imag
    return J


# ---------------------------------------------------------------------------
# Levenberg-Marquardt

def _framing_start(t: MonopoleType) -> int:
    """Index in the parameter vector where the a and b blocks begin (they come last)."""
    offs = _offsets(t)
    return min(pos for (name, _), (pos, _, _) in offs.items() if name in ("a", "b"))


def _levenberg_marquardt(t: MonopoleType, x0: np.ndarray, opts: SolverOptions, framing: float):
    """Minimise the Nahm residual plus one row pinning ``sum |a_j|^2 + |b_j|^2 = framing``.

    The equations are homogeneous, so without the extra row the iteration can
    slide down the cone of solutions to the zero field.
    """
    fs = _framing_start(t)
    root = np.sqrt(framing)

    def full(s, x):
        r = residual_vector(s)
        return np.append(r, (x[fs:] @ x[fs:] - framing) / root)

    x = np.array(x0, dtype=float)
    s = NahmSolution.from_vector(t, x)
    r = full(s, x)
    cost = float(r @ r)
    history = [cost]
    mu = None
    it = 0
    while it < opts.max_iterations and cost > opts.tolerance:
        it += 1
        row = np.zeros(x.size)
        row[fs:] = 2.0 * x[fs:] / root
        J = np.vstack([jacobian(s), row])
        if mu is None:
            # basis-independent scale keeps the iteration unitary-gauge equivariant
            mu = opts.damping * max(1.0, float(np.sum(J * J)) / J.shape[1])
        n = J.shape[1]
        aug = np.vstack([J, np.sqrt(mu) * np.eye(n)])
        rhs = np.concatenate([-r, np.zeros(n)])
        step = np.linalg.lstsq(aug, rhs, rcond=None)[0]
        trial = NahmSolution.from_vector(t, x + step)
        r_new = full(trial, x + step)
        cost_new = float(r_new @ r_new)
        if np.isfinite(cost_new) and cost_new < cost:
            x, s, r, cost = x + step, trial, r_new, cost_new
            mu = max(mu / 3.0, 1e-15)
        else:
            mu = mu * 4.0
            if mu > 1e20:
                break
        history.append(cost)
    return s, total_residual(s), it, history


def _default_framing(t: MonopoleType, opts: SolverOptions) -> float:
    return 2.0 * (t.n - 1) * opts.init_scale ** 2


def _restart_seeds(opts: SolverOptions) -> list[int]:
    children = np.random.SeedSequence(opts.seed).spawn(opts.restarts)
    return [int(c.generate_state(1)[0]) for c in children]


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("NAHM_THREADS", "1")))
    except ValueError:
        return 1


def _attempt(t: MonopoleType, seed: int, index: int, opts: SolverOptions):
    x0 = random_init(t, seed, opts.init_scale).to_vector()
    s, cost, it, hist = _levenberg_marquardt(t, x0, opts, _default_framing(t, opts))
    converged = cost <= opts.tolerance
    stab = check_stability(s) if converged else None
    ok = converged and stab.ok
    msg = "converged" if ok else ("unstable: " + ", ".join(stab.failures()) if converged else "max iterations")
    return s, SolveReport(ok, cost, it, index, stab, hist, msg)


def solve(t: MonopoleType, opts: SolverOptions | None = None) -> tuple[NahmSolution, SolveReport]:
    """Solve from random starts; the lowest-index stable converged restart wins.

    Raises :class:`NoConvergence` (carrying the lowest-residual candidate) when
    no restart converges to a stable solution.
    """
    opts = opts or SolverOptions()
    seeds = _restart_seeds(opts)
    threads = _thread_count()
    results = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_attempt, t, sd, i, opts) for i, sd in enumerate(seeds)]
            results = [f.result() for f in futures]
    else:
        for i, sd in enumerate(seeds):
            results.append(_attempt(t, sd, i, opts))
            if results[-1][1].converged:
                break
    for s, rep in results:
        if rep.converged:
            return s, rep
    best, rep = min(results, key=lambda sr: sr[1].final_residual)
    raise NoConvergence(
        f"no stable solution after {len(results)} restarts (best residual {rep.final_residual:.3e})",
        best, rep,
    )


def refine(s: NahmSolution, opts: SolverOptions | None = None) -> tuple[NahmSolution, SolveReport]:
    """Continue Levenberg-Marquardt from ``s`` (no restarts)."""
    opts = opts or SolverOptions()
    x0 = s.to_vector()
    fs = _framing_start(s.type)
    framing = float(x0[fs:] @ x0[fs:])
    if framing == 0.0:
        framing = _default_framing(s.type, opts)
    out, cost, it, hist = _levenberg_marquardt(s.type, x0, opts, framing)
    converged = cost <= opts.tolerance
    stab = check_stability(out)
    rep = SolveReport(converged and stab.ok, cost, it, 0, stab, hist)
    if not converged:
        rep.message = "max iterations"
        raise NoConvergence(f"refinement stalled at residual {cost:.3e}", out, rep)
    if not stab.ok:
        rep.message = "unstable: " + ", ".join(stab.failures())
        raise NoConvergence(f"refined solution is not stable ({rep.message})", out, rep)
    rep.message = "converged"
    return out, rep


# ---------------------------------------------------------------------------
# closed-form SU(2), k = 1

def su2_k1_oracle(p, beta: complex = 0.0, scale: float = 1.0) -> NahmSolution:
    """Exact SU(2) charge-one solution of mass ``p``.

    Scalar data: every beta equals ``beta``; gamma, a and b all equal ``scale``.
    Both equations then hold identically.
    """
    try:
        p = Fraction(p)
    except (TypeError, ValueError) as exc:
        raise UnsupportedType(f"mass {p!r} is not rational") from exc
    if (2 * p).denominator != 1 or p < Fraction(1, 2):
        raise UnsupportedType(f"closed form needs a half-integer mass p >= 1/2, got {p}")
    if not scale > 0:
        raise UnsupportedType("scale must be positive")
    t = derive_type([-p], [1])
    lay = site_dims(t)
    one = np.ones((1, 1), dtype=complex)
    return NahmSolution(
        t,
        {k: complex(beta) * one for k in lay.beta},
        {k: scale * one for k in lay.gamma},
        {1: scale * one},
        {2: scale * one},
    )


def su2_k1_fit(s: NahmSolution) -> NahmSolution:
    """Member of the closed-form family with the same beta and framing norm as ``s``."""
    t = s.type
    if t.n != 2 or t.charges != (1,):
        raise UnsupportedType(f"{t} is not SU(2) with charge 1")
    first = min(s.beta)
    return su2_k1_oracle(-t.mass(1), complex(s.beta[first][0, 0]), float(np.abs(s.avec[1][0, 0])))
