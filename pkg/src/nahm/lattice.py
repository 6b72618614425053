"""Discrete Nahm data on the interval ``[p_1, p_N]``.

Site conventions (doubled integers throughout):

* ``beta[2i+1]``   : ``chi_i x chi_i``            for ``p_1 <= i <= p_N - 1``
* ``gamma[2i]``    : ``chi_{i-1} x chi_i``        for ``p_1 + 1 <= i <= p_N - 1``
* ``avec[j]``      : ``1 x chi_{p_j}``            for ``1 <= j <= N - 1``
* ``bvec[j]``      : ``chi_{p_j - 1} x 1``        for ``2 <= j <= N``

``gamma`` at ``p_1`` and ``p_N`` is identically zero and not stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch, SingularGauge, ValidationError
from .typedata import MonopoleType, SiteLayout, site_dims

RANK_RTOL = 1e-8


def _frozen(m) -> np.ndarray:
    arr = np.array(m, dtype=complex, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class NahmSolution:
    type: MonopoleType
    beta: dict
    gamma: dict
    avec: dict
    bvec: dict

    def __post_init__(self):
        layout = site_dims(self.type)
        for name, table, expected in (
            ("beta", self.beta, layout.beta),
            ("gamma", self.gamma, layout.gamma),
            ("a", self.avec, layout.a),
            ("b", self.bvec, layout.b),
        ):
            if set(table) != set(expected):
                missing = sorted(set(expected) - set(table))
                extra = sorted(set(table) - set(expected))
                raise ShapeMismatch(f"{name}: missing sites {missing}, unexpected sites {extra}")
            frozen = {}
            for key in sorted(expected):
                arr = _frozen(table[key])
                if arr.shape != expected[key]:
                    raise ShapeMismatch(
                        f"{name} at site {key}: shape {arr.shape}, expected {expected[key]}"
                    )
                frozen[key] = arr
            object.__setattr__(self, {"a": "avec", "b": "bvec"}.get(name, name), frozen)

    @property
    def layout(self) -> SiteLayout:
        return site_dims(self.type)

    def a_at(self, w2: int):
        j = self.type.mass_index(w2)
        if j is not None and j in self.avec:
            return self.avec[j]
        return None

    def b_at(self, w2: int):
        j = self.type.mass_index(w2)
        if j is not None and j in self.bvec:
            return self.bvec[j]
        return None

    def replace(self, **fields) -> "NahmSolution":
        kw = dict(type=self.type, beta=self.beta, gamma=self.gamma, avec=self.avec, bvec=self.bvec)
        kw.update(fields)
        return NahmSolution(**kw)

    # flat real parametrisation used by the solver
    def to_vector(self) -> np.ndarray:
        parts = []
        for table in (self.beta, self.gamma, self.avec, self.bvec):
            for key in sorted(table):
                z = table[key].ravel()
                parts.append(np.concatenate([z.real, z.imag]))
        return np.concatenate(parts) if parts else np.zeros(0)

    @classmethod
    def from_vector(cls, t: MonopoleType, x: np.ndarray) -> "NahmSolution":
        layout = site_dims(t)
        x = np.asarray(x, dtype=float)
        pos = 0
        tables = []
        for shapes in (layout.beta, layout.gamma, layout.a, layout.b):
            table = {}
            for key in sorted(shapes):
                r, c = shapes[key]
                n = r * c
                re = x[pos : pos + n]
                im = x[pos + n : pos + 2 * n]
                table[key] = (re + 1j * im).reshape(r, c)
                pos += 2 * n
            tables.append(table)
        if pos != x.size:
            raise ShapeMismatch(f"parameter vector has length {x.size}, expected {pos}")
        return cls(t, *tables)

    @classmethod
    def zeros(cls, t: MonopoleType) -> "NahmSolution":
        return cls.from_vector(t, np.zeros(site_dims(t).n_real_unknowns()))


@dataclass(frozen=True)
class GaugeTransform:
    """Complex gauge: ``g[2i+1]`` at beta sites, ``lam[j]`` framing factors (j = 1..N)."""

    g: dict
    lam: dict

    @classmethod
    def identity(cls, t: MonopoleType) -> "GaugeTransform":
        layout = site_dims(t)
        return cls({k: np.eye(r, dtype=complex) for k, (r, _) in layout.beta.items()},
                   {j: 1.0 + 0j for j in range(1, t.n + 1)})

    @classmethod
    def random_unitary(cls, t: MonopoleType, rng: np.random.Generator) -> "GaugeTransform":
        from scipy.stats import unitary_group

        layout = site_dims(t)
        g = {}
        for key in sorted(layout.beta):
            r = layout.beta[key][0]
            g[key] = unitary_group.rvs(r, random_state=rng) if r > 1 else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
        lam = {j: np.exp(2j * np.pi * rng.random()) for j in range(1, t.n + 1)}
        return cls(g, lam)

    @classmethod
    def random_general(cls, t: MonopoleType, rng: np.random.Generator) -> "GaugeTransform":
        layout = site_dims(t)
        g = {}
        for key in sorted(layout.beta):
            r = layout.beta[key][0]
            m = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
            g[key] = np.eye(r) + 0.3 * m
        lam = {j: complex(rng.standard_normal() + 2.0, rng.standard_normal()) for j in range(1, t.n + 1)}
        return cls(g, lam)

    def compose(self, first: "GaugeTransform") -> "GaugeTransform":
        """``self o first``: apply ``first`` then ``self``."""
        return GaugeTransform({k: self.g[k] @ first.g[k] for k in self.g},
                              {j: self.lam[j] * first.lam[j] for j in self.lam})

    def condition_numbers(self) -> dict:
        return {k: float(np.linalg.cond(m)) for k, m in self.g.items()}


def random_init(t: MonopoleType, seed: int, scale: float = 1.0) -> NahmSolution:
    """i.i.d. complex Gaussian entries with ``E|z|^2 = scale^2``."""
    rng = np.random.default_rng(seed)
    n = site_dims(t).n_real_unknowns()
    x = rng.standard_normal(n) * (scale / np.sqrt(2.0))
    return NahmSolution.from_vector(t, x)


def _check(s: NahmSolution) -> None:
    if not isinstance(s, NahmSolution):
        raise ShapeMismatch(f"expected NahmSolution, got {type(s).__name__}")


def complex_residual(s: NahmSolution) -> dict:
    """Complex discrete Nahm residual keyed by doubled site ``2(i+1)``.

    ``beta_{i+1/2} gamma_{i+1} - gamma_{i+1} beta_{i+3/2}`` plus ``b a`` at
    interior mass points.
    """
    _check(s)
    t = s.type
    out = {}
    for w2 in range(t.p2(1) + 2, t.pN2, 2):
        g = s.gamma[w2]
        r = s.beta[w2 - 1] @ g - g @ s.beta[w2 + 1]
        j = t.mass_index(w2)
        if j is not None and 2 <= j <= t.n - 1:
            r = r + s.bvec[j] @ s.avec[j]
        out[w2] = r
    return out


def real_residual(s: NahmSolution) -> dict:
    """Real (moment map) residual keyed by doubled site ``2i``, ``p_1 <= i <= p_N - 1``."""
    _check(s)
    t = s.type
    out = {}
    for w2 in range(t.p2(1), t.pN2, 2):
        bt = s.beta[w2 + 1]
        r = bt @ bt.conj().T - bt.conj().T @ bt
        g_next = s.gamma.get(w2 + 2)
        if g_next is not None:
            r = r + g_next @ g_next.conj().T
        g_here = s.gamma.get(w2)
        if g_here is not None:
            r = r - g_here.conj().T @ g_here
        j = t.mass_index(w2)
        if j is not None and j <= t.n - 1:
            a = s.avec[j]
            r = r - a.conj().T @ a
        j = t.mass_index(w2 + 2)
        if j is not None and j >= 2:
            b = s.bvec[j]
            r = r + b @ b.conj().T
        out[w2] = r
    return out


def total_residual(s: NahmSolution) -> float:
    """Sum of squared Frobenius norms of every complex and real residual block."""
    acc = 0.0
    for blocks in (complex_residual(s), real_residual(s)):
        for m in blocks.values():
            acc += float(np.vdot(m, m).real)
    return acc


def gauge_transform(s: NahmSolution, g: GaugeTransform, max_cond: float = 1e12) -> NahmSolution:
    """Apply ``beta -> g beta g^-1``, ``gamma_j -> g_{j-1/2} gamma_j g_{j+1/2}^-1``,
    ``a -> lam a g^-1``, ``b -> g b lam^-1``."""
    _check(s)
    t = s.type
    layout = site_dims(t)
    if set(g.g) != set(layout.beta) or set(g.lam) != set(range(1, t.n + 1)):
        raise ShapeMismatch("gauge transform sites do not match the solution layout")
    inv = {}
    for key, m in g.g.items():
        m = np.asarray(m, dtype=complex)
        if m.shape != layout.beta[key]:
            raise ShapeMismatch(f"gauge factor at site {key} has shape {m.shape}")
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > max_cond:
            raise SingularGauge(f"gauge factor at site {key} is singular (cond={cond:.3g})")
        inv[key] = np.linalg.inv(m)
    for j, lam in g.lam.items():
        if lam == 0:
            raise SingularGauge(f"framing factor lambda_{j} is zero")
    beta = {k: g.g[k] @ b @ inv[k] for k, b in s.beta.items()}
    gamma = {k: g.g[k - 1] @ c @ inv[k + 1] for k, c in s.gamma.items()}
    avec = {j: g.lam[j] * a @ inv[t.p2(j) + 1] for j, a in s.avec.items()}
    bvec = {j: g.g[t.p2(j) - 1] @ b / g.lam[j] for j, b in s.bvec.items()}
    return NahmSolution(t, beta, gamma, avec, bvec)


@dataclass
class StabilityReport:
    gamma_margins: dict = field(default_factory=dict)
    gamma_ok: dict = field(default_factory=dict)
    span_rank: dict = field(default_factory=dict)
    span_ok: dict = field(default_factory=dict)
    a_norms: dict = field(default_factory=dict)
    b_norms: dict = field(default_factory=dict)
    framing_floor: float = 0.0

    @property
    def injective(self) -> bool:
        return all(self.gamma_ok.values())

    @property
    def spanning(self) -> bool:
        return all(self.span_ok.values())

    @property
    def nondegenerate_framing(self) -> bool:
        norms = list(self.a_norms.values()) + list(self.b_norms.values())
        return all(v > self.framing_floor for v in norms)

    @property
    def ok(self) -> bool:
        return self.injective and self.spanning and self.nondegenerate_framing

    def failures(self) -> list[str]:
        out = [f"gamma[{k}]" for k, v in self.gamma_ok.items() if not v]
        out += [f"span[{k}]" for k, v in self.span_ok.items() if not v]
        out += [f"a[{k}]=0" for k, v in self.a_norms.items() if v <= self.framing_floor]
        out += [f"b[{k}]=0" for k, v in self.b_norms.items() if v <= self.framing_floor]
        return out

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "gamma_margin": {str(k): v for k, v in self.gamma_margins.items()},
            "gamma_ok": {str(k): v for k, v in self.gamma_ok.items()},
            "span_rank": {str(k): v for k, v in self.span_rank.items()},
            "span_ok": {str(k): v for k, v in self.span_ok.items()},
            "a_norm": {str(k): v for k, v in self.a_norms.items()},
            "b_norm": {str(k): v for k, v in self.b_norms.items()},
            "failures": self.failures(),
        }


def numerical_rank(m: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def check_stability(s: NahmSolution, rtol: float = RANK_RTOL) -> StabilityReport:
    """Injectivity margins of every gamma and the Krylov span test per interval.

    Interior square gammas must be injective; jump gammas (wide) must have full
    row rank. The span test runs on the normalised data, so it is skipped
    (reported False) when normalisation itself fails.
    """
    from .ratmap import normalize
    from .errors import NormalizationFailed

    rep = StabilityReport()
    scale = max([np.linalg.norm(m, 2) for m in s.gamma.values()] + [0.0])
    for key, g in s.gamma.items():
        sv = np.linalg.svd(g, compute_uv=False)
        smin = float(sv[-1]) if sv.size else 0.0
        rep.gamma_margins[key] = smin
        rep.gamma_ok[key] = bool(scale > 0 and smin > rtol * scale)
    field_scale = max(float(np.linalg.norm(m)) for table in (s.beta, s.gamma, s.avec, s.bvec)
                      for m in table.values())
    rep.framing_floor = rtol * field_scale
    for j, a in s.avec.items():
        rep.a_norms[j] = float(np.linalg.norm(a))
    for j, b in s.bvec.items():
        rep.b_norms[j] = float(np.linalg.norm(b))
    try:
        ns = normalize(s)
    except NormalizationFailed:
        for i in range(1, s.type.n):
            rep.span_rank[i] = 0
            rep.span_ok[i] = False
        return rep
    for i in range(1, s.type.n):
        beta, a = ns.beta_interval[i], ns.a_norm[i]
        dim = beta.shape[0]
        rows = [a]
        for _ in range(dim):
            rows.append(rows[-1] @ beta)
        krylov = np.vstack(rows)
        rank = numerical_rank(krylov, rtol)
        rep.span_rank[i] = rank
        rep.span_ok[i] = rank == dim
    return rep


@dataclass
class GaugeInvariants:
    gamma_sv: dict
    beta_eig: dict
    a_norm: dict
    b_norm: dict

    def max_deviation(self, other: "GaugeInvariants") -> float:
        from scipy.optimize import linear_sum_assignment

        dev = 0.0
        for k in self.gamma_sv:
            dev = max(dev, float(np.max(np.abs(self.gamma_sv[k] - other.gamma_sv[k]), initial=0.0)))
        for k in self.beta_eig:
            x, y = self.beta_eig[k], other.beta_eig[k]
            cost = np.abs(x[:, None] - y[None, :])
            r, c = linear_sum_assignment(cost)
            dev = max(dev, float(cost[r, c].max(initial=0.0)))
        for table, otable in ((self.a_norm, other.a_norm), (self.b_norm, other.b_norm)):
            for k in table:
                dev = max(dev, abs(table[k] - otable[k]))
        return dev

    def close_to(self, other: "GaugeInvariants", tol: float) -> bool:
        return self.max_deviation(other) <= tol


def gauge_invariants(s: NahmSolution) -> GaugeInvariants:
    """Unitary-gauge invariants: gamma singular values, beta spectra, |a|, |b|."""
    _check(s)
    return GaugeInvariants(
        gamma_sv={k: np.linalg.svd(g, compute_uv=False) for k, g in s.gamma.items()},
        beta_eig={k: np.linalg.eigvals(b) for k, b in s.beta.items()},
        a_norm={j: float(np.linalg.norm(a)) for j, a in s.avec.items()},
        b_norm={j: float(np.linalg.norm(b)) for j, b in s.bvec.items()},
    )
