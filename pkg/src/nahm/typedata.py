"""Monopole type data and the combinatorial invariants derived from it.

All weights and masses are carried as *doubled* integers (``2 * p``) so that
half-integer masses, allowed when N is even, stay exact. Weight steps are
therefore 2 in doubled units.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .errors import (
    EmptyInterval,
    NonIncreasingMasses,
    NonPositiveCharge,
    NonPositiveKappa,
    ParityViolation,
    ValidationError,
)


def to_doubled(value) -> int:
    """Convert a rational with denominator at most 2 to its doubled integer."""
    q = Fraction(value) if not isinstance(value, str) else Fraction(value.strip())
    d = 2 * q
    if d.denominator != 1:
        raise ValidationError(f"{value!r} is not an integer or half-integer")
    return int(d)


def from_doubled(d: int) -> Fraction:
    return Fraction(d, 2)


@dataclass(frozen=True)
class MonopoleType:
    """Validated type ``(p_1..p_{N-1}; k_1..k_{N-1})``.

    ``masses2`` stores ``2 p_i``. Use :func:`derive_type` or :meth:`from_doubled`
    to build one; the constructor validates.
    """

    n: int
    masses2: tuple[int, ...]
    charges: tuple[int, ...]
    kappa: int = field(init=False)
    c2: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "masses2", tuple(int(m) for m in self.masses2))
        object.__setattr__(self, "charges", tuple(int(k) for k in self.charges))
        _validate(self.n, self.masses2, self.charges)
        kappa = kappa_from_masses(self.all_masses2, self.charges)
        c2 = c2_from_masses(self.masses2, self.charges)
        if kappa <= 0:
            raise NonPositiveKappa(f"instanton charge {kappa} is not positive")
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "c2", c2)

    @classmethod
    def from_doubled(cls, masses2: Sequence[int], charges: Sequence[int]) -> "MonopoleType":
        if len(masses2) != len(charges) or len(masses2) < 1:
            raise ValidationError("masses and charges must have equal length N-1 >= 1")
        return cls(len(masses2) + 1, tuple(masses2), tuple(charges))

    @property
    def pN2(self) -> int:
        return -sum(self.masses2)

    @property
    def kN(self) -> int:
        return -sum(self.charges)

    @property
    def all_masses2(self) -> tuple[int, ...]:
        """Doubled masses ``2p_1, ..., 2p_N`` including the derived last one."""
        return self.masses2 + (self.pN2,)

    @property
    def all_charges(self) -> tuple[int, ...]:
        return self.charges + (self.kN,)

    def p2(self, j: int) -> int:
        """Doubled mass ``2 p_j`` for ``1 <= j <= N``."""
        if not 1 <= j <= self.n:
            raise IndexError(f"mass index {j} outside 1..{self.n}")
        return self.all_masses2[j - 1]

    def mass(self, j: int) -> Fraction:
        return from_doubled(self.p2(j))

    def cumulative_charge(self, i: int) -> int:
        """``k_1 + ... + k_i`` (0 for i = 0)."""
        return sum(self.charges[:i])

    def mass_index(self, w2: int) -> int | None:
        """Index j with ``2p_j == w2``, or None."""
        try:
            return self.all_masses2.index(w2) + 1
        except ValueError:
            return None

    def to_json(self) -> dict:
        return {"N": self.n, "p2": list(self.masses2), "k": list(self.charges)}

    @classmethod
    def from_json(cls, obj: dict) -> "MonopoleType":
        try:
            n = int(obj["N"])
            p2 = [int(v) for v in obj["p2"]]
            k = [int(v) for v in obj["k"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed type block: {exc}") from exc
        if n != len(p2) + 1:
            raise ValidationError(f"N={n} inconsistent with {len(p2)} masses")
        return cls.from_doubled(p2, k)

    def __str__(self):
        ps = ", ".join(str(from_doubled(m)) for m in self.masses2)
        ks = ", ".join(str(k) for k in self.charges)
        return f"SU({self.n}) type ({ps}; {ks})"


def _validate(n: int, masses2: tuple[int, ...], charges: tuple[int, ...]) -> None:
    if n < 2 or len(masses2) != n - 1 or len(charges) != n - 1:
        raise ValidationError("need N >= 2 with N-1 masses and N-1 charges")
    for k in charges:
        if k < 1:
            raise NonPositiveCharge(f"charge {k} must be a positive integer")
    for lo, hi in zip(masses2, masses2[1:]):
        if not lo < hi:
            raise NonIncreasingMasses(
                f"masses must be strictly increasing, got {from_doubled(lo)} >= {from_doubled(hi)}"
            )
    parities = {m % 2 for m in masses2}
    if len(parities) > 1:
        raise ParityViolation("masses mix integers and half-integers")
    if parities == {1} and n % 2 == 1:
        raise ParityViolation(f"half-integer masses need N even, got N={n}")
    pN2 = -sum(masses2)
    if not masses2[-1] < pN2:
        raise EmptyInterval(
            f"p_N = {from_doubled(pN2)} must exceed p_(N-1) = {from_doubled(masses2[-1])}"
        )


def kappa_from_masses(all_masses2: Sequence[int], charges: Sequence[int]) -> int:
    """Instanton charge: sum over intervals of length times cumulative charge."""
    total2 = 0
    cum = 0
    for i, k in enumerate(charges):
        cum += k
        total2 += (all_masses2[i + 1] - all_masses2[i]) * cum
    if total2 % 2:
        raise ValidationError("interval lengths are not integral")
    return total2 // 2


def c2_from_masses(masses2: Sequence[int], charges: Sequence[int]) -> int:
    """Equivariant second Chern class from the localisation formula.

    ``-[2 sum k_i p_i + sum_{i<j} (k_i p_j + k_j p_i)]`` over ``1 <= i, j <= N-1``.
    """
    m = len(masses2)
    acc2 = 2 * sum(k * p for k, p in zip(charges, masses2))
    for i in range(m):
        for j in range(i + 1, m):
            acc2 += charges[i] * masses2[j] + charges[j] * masses2[i]
    if acc2 % 2:
        raise ValidationError("second Chern class is not integral")
    return -acc2 // 2


def derive_type(masses: Iterable, charges: Iterable) -> MonopoleType:
    """Build a validated :class:`MonopoleType` from masses (rationals, den <= 2)."""
    masses2 = [to_doubled(m) for m in masses]
    charges = list(charges)
    for k in charges:
        if Fraction(k).denominator != 1:
            raise NonPositiveCharge(f"charge {k!r} is not an integer")
    t = MonopoleType.from_doubled(masses2, [int(k) for k in charges])
    assert t.kappa == t.c2, "kappa/c2 identity violated"
    return t


@dataclass(frozen=True)
class WeightProfile:
    """Weight multiplicities ``chi`` over doubled weights ``lo2 .. hi2 - 2``."""

    lo2: int
    hi2: int
    chi: dict

    def weights2(self) -> list[int]:
        return list(range(self.lo2, self.hi2, 2))

    def at(self, w2: int) -> int:
        """Multiplicity at doubled weight ``w2``; zero outside the range."""
        return self.chi.get(w2, 0)

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(self.chi[w] for w in self.weights2())

    @property
    def total(self) -> int:
        return sum(self.chi.values())


def weight_profile(t: MonopoleType) -> WeightProfile:
    ps = t.all_masses2
    chi = {}
    cum = 0
    for i in range(t.n - 1):
        cum += t.charges[i]
        for w2 in range(ps[i], ps[i + 1], 2):
            chi[w2] = cum
    return WeightProfile(ps[0], ps[-1], chi)


@dataclass(frozen=True)
class SiteLayout:
    """Block shapes keyed by doubled site index (beta, gamma) or mass index (a, b)."""

    beta: dict
    gamma: dict
    a: dict
    b: dict

    def n_real_unknowns(self) -> int:
        count = 0
        for table in (self.beta, self.gamma, self.a, self.b):
            count += sum(2 * r * c for r, c in table.values())
        return count


def site_dims(t: MonopoleType) -> SiteLayout:
    prof = weight_profile(t)
    p1, pN = t.p2(1), t.pN2
    beta = {w2 + 1: (prof.at(w2), prof.at(w2)) for w2 in prof.weights2()}
    gamma = {w2: (prof.at(w2 - 2), prof.at(w2)) for w2 in range(p1 + 2, pN, 2)}
    a = {j: (1, prof.at(t.p2(j))) for j in range(1, t.n)}
    b = {j: (prof.at(t.p2(j) - 2), 1) for j in range(2, t.n + 1)}
    return SiteLayout(beta, gamma, a, b)


def small_monad_dims(t: MonopoleType, w2: int) -> tuple[int, int, int]:
    """Dimensions ``(H_w, K_w, L_w)`` of the weight-w piece of the monad."""
    prof = weight_profile(t)
    h = prof.at(w2)
    framing = 1 if t.mass_index(w2) is not None else 0
    k = prof.at(w2) + prof.at(w2 - 2) + framing
    l = prof.at(w2 - 2)
    return h, k, l


def kfrak(t: MonopoleType, i: int) -> int:
    """Dimension of the projective space receiving the Plücker-Segre image of F_i."""
    if not 1 <= i <= t.n - 1:
        raise ValidationError(f"flag index {i} outside 1..{t.n - 1}")
    inner = t.cumulative_charge(i)
    ambient = 2 * t.cumulative_charge(i - 1) + t.charges[i - 1] + 1
    return comb(ambient, inner) * comb(ambient, inner + 1) - 1
