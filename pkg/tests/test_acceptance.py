"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import time
from fractions import Fraction

import numpy as np
from scipy.linalg import null_space, subspace_angles

from nahm import derive_type
from nahm.adhm import (
    adhm_complex_residual,
    adhm_real_residual,
    assemble,
    block_masks,
    column_offsets,
    equivariance_check,
    fibre,
    monad_check,
    weight_restrict,
)
from nahm.errors import ValidationError
from nahm.lattice import (
    GaugeTransform,
    complex_residual,
    gauge_invariants,
    gauge_transform,
    random_init,
    real_residual,
    total_residual,
)
from nahm.ratmap import chern_integral, curvature_density, flag_at, normalize
from nahm.solver import SolverOptions, solve, su2_k1_fit, su2_k1_oracle
from nahm.typedata import MonopoleType

RESULTS: list[str] = []

SU3 = derive_type([-3, -1], [1, 1])
BLOCK_TYPES = [
    (["-1/2"], [1]), (["-3/2"], [1]), ([-1], [2]), ([-3, -1], [1, 1]), ([-2, 0], [1, 2]),
    ([-1, 0], [2, 1]), (["-5/2", "-1/2", "1/2"], [1, 1, 1]), ([-2, -1, 1], [1, 1, 1]),
    ([-4, 1], [2, 1]), ([-2, -1, 0, 1], [1, 1, 1, 1]),
]


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _random_type(rng: np.random.Generator) -> MonopoleType:
    while True:
        n = int(rng.integers(2, 7))
        odd = n % 2 == 0 and bool(rng.integers(0, 2))
        pool = np.arange(-40 + (1 if odd else 0), 41, 2)
        masses2 = np.sort(rng.choice(pool, size=n - 1, replace=False))
        charges = rng.integers(1, 6, size=n - 1)
        if -masses2.sum() <= masses2[-1] or abs(masses2.sum()) > 40:
            continue
        try:
            return MonopoleType.from_doubled(masses2.tolist(), charges.tolist())
        except ValidationError:
            continue


def _brute_kappa(t: MonopoleType) -> int:
    total = 0
    for w2 in range(t.p2(1), t.pN2, 2):
        total += sum(k for p2, k in zip(t.masses2, t.charges) if p2 <= w2)
    return total


def test_criterion_1_combinatorial_identities():
    rng = np.random.default_rng(2024)
    bad = 0
    for _ in range(10_000):
        t = _random_type(rng)
        if not (t.kappa == t.c2 == _brute_kappa(t)):
            bad += 1
    for _ in range(100):
        k1, k2 = (int(v) for v in rng.integers(1, 50, size=2))
        if derive_type([-3, -1], [k1, k2]).kappa != 7 * k1 + 5 * k2:
            bad += 1
    for p2 in range(1, 41):
        for k in range(1, 6):
            t = MonopoleType.from_doubled([-p2], [k])
            if t.kappa != 2 * k * Fraction(p2, 2):
                bad += 1
    report(1, "kappa = c2, SU(3) 7k1+5k2, SU(2) 2kp", bad == 0, f"{bad} mismatches")


def _instances():
    for idx, (p, k) in enumerate(BLOCK_TYPES):
        t = derive_type(p, k)
        for j in range(10):
            yield random_init(t, 1000 * idx + j)


def test_criterion_2_block_equivalence():
    worst, off_pattern = 0.0, 0.0
    for s in _instances():
        d = assemble(s)
        off = column_offsets(s.type)
        cr, rr = adhm_complex_residual(d), adhm_real_residual(d)
        for w2, blk in complex_residual(s).items():
            (rlo, rhi), (clo, chi) = off[w2 - 2], off[w2]
            worst = max(worst, float(np.abs(cr[rlo:rhi, clo:chi] - blk).max()))
        for w2, blk in real_residual(s).items():
            lo, hi = off[w2]
            worst = max(worst, float(np.abs(rr[lo:hi, lo:hi] - blk).max()))
        masks = block_masks(s.type)
        off_pattern = max(off_pattern, float(np.abs(cr[~masks["alpha2"]]).max(initial=0.0)),
                          float(np.abs(rr[~masks["alpha1"]]).max(initial=0.0)))
    ok = worst < 1e-13 and off_pattern == 0.0
    report(2, "ADHM residual blocks equal lattice residuals", ok,
           f"max block diff {worst:.2e}, max off-pattern {off_pattern:.1e}")


def test_criterion_3_equivariance():
    rng = np.random.default_rng(3)
    worst = 0.0
    for s in _instances():
        d = assemble(s)
        for _ in range(20):
            c = complex(*rng.standard_normal(2))
            rep = equivariance_check(d, c, tol=1e-12)
            worst = max(worst, max(rep.deviation.values()))
    report(3, "circle equivariance of assembled data", worst <= 1e-12, f"max deviation {worst:.2e}")


def _solved_su3():
    return solve(SU3, SolverOptions(seed=0))


def test_criterion_4_monad_exactness():
    rng = np.random.default_rng(4)
    solved = [_solved_su3()[0], solve(derive_type(["-3/2"], [1]))[0]]
    worst = 0.0
    for s in solved:
        assert total_residual(s) < 1e-20
        d = assemble(s)
        for _ in range(100):
            X = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            worst = max(worst, monad_check(d, X).relative_exactness)
    rough = random_init(SU3, 99)
    assert total_residual(rough) > 1e-4
    d = assemble(rough)
    violated = max(monad_check(d, rng.standard_normal(4) + 1j * rng.standard_normal(4)).relative_exactness
                   for _ in range(100))
    ok = worst < 1e-10 and violated >= 1e-10
    report(4, "monad exactness iff solved", ok,
           f"solved max {worst:.2e}, unsolved max {violated:.2e}")


def _elimination_ok(p2: int) -> bool:
    """The real chain kernel is the constant vector and the complex chain forces constant beta."""
    chain = np.zeros((p2, p2 + 1))
    for i in range(p2):
        chain[i, i], chain[i, i + 1] = -1.0, 1.0
    ker = null_space(chain)
    diff = np.zeros((max(p2 - 1, 0), p2))
    for i in range(p2 - 1):
        diff[i, i], diff[i, i + 1] = 1.0, -1.0
    bker = null_space(diff) if p2 > 1 else np.ones((1, 1))
    const = lambda v: np.allclose(v[:, 0] / v[0, 0], 1.0)
    return ker.shape[1] == 1 and const(ker) and bker.shape[1] == 1 and const(bker)


def test_criterion_5_oracle_equivalence():
    details, ok = [], True
    for p in ("1/2", "3/2", "5/2"):
        p2 = int(2 * Fraction(p))
        oracle = su2_k1_oracle(p, beta=0.25 - 0.5j, scale=1.1)
        valid = _elimination_ok(p2) and total_residual(oracle) < 1e-26
        s, rep = solve(derive_type([f"-{p}"], [1]), SolverOptions(restarts=5))
        dev = gauge_invariants(s).max_deviation(gauge_invariants(su2_k1_fit(s)))
        good = valid and rep.final_residual < 1e-18 and rep.restart_index < 5 and dev < 1e-6
        ok &= good
        details.append(f"p={p}: res {rep.final_residual:.1e}, restart {rep.restart_index}, dev {dev:.1e}")
    report(5, "solver matches SU(2) k=1 closed form", ok, "; ".join(details))


def test_criterion_6_su3_end_to_end():
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    s, rep = _solved_su3()
    d = assemble(s)
    dims = {fibre(d, rng.standard_normal(4) + 1j * rng.standard_normal(4)).shape[1] for _ in range(20)}
    masses = set(SU3.all_masses2)
    coh_ok = True
    for _ in range(20):
        x = complex(*rng.standard_normal(2))
        for w2 in range(SU3.p2(1), SU3.pN2 + 1, 2):
            want = 1 if w2 in masses else 0
            coh_ok &= weight_restrict(s, (x, 0, -1, 0), w2).cohomology_dim() == want
    elapsed = time.perf_counter() - start
    ok = rep.final_residual < 1e-18 and dims == {3} and coh_ok and elapsed < 300
    report(6, "SU(3) (-3,-1),(1,1) end to end", ok,
           f"res {rep.final_residual:.1e}, fibre dims {sorted(dims)}, cohomology ok {coh_ok}, {elapsed:.1f}s")


def test_criterion_7_rational_map():
    rng = np.random.default_rng(7)
    s, _ = solve(derive_type(["-3/2"], [1]))
    ns = normalize(s)
    a, b = s.avec[1][0, 0], s.bvec[2][0, 0]
    chain = np.prod([s.gamma[w][0, 0] for w in sorted(s.gamma)])
    beta = s.beta[min(s.beta)][0, 0]
    scalar_err = 0.0
    for _ in range(100):
        h = complex(*rng.standard_normal(2))
        x = complex(*(2 * rng.standard_normal(2)))
        expect = (-h) ** -3 * a * chain * b / (x - beta)
        got = flag_at(ns, h, x).frames[0][0, 0]
        scalar_err = max(scalar_err, abs(got - expect) / abs(expect))
    ns3 = normalize(_solved_su3()[0])
    nest = 0.0
    for _ in range(100):
        h = complex(*rng.standard_normal(2))
        nest = max(nest, flag_at(ns3, h, complex(*(2 * rng.standard_normal(2)))).nesting_error())
    far = flag_at(ns3, 1.0, 1e6 * np.exp(1j * rng.uniform(0, 2 * np.pi)))
    e = np.eye(3)
    angle = max(subspace_angles(far.subspaces[0], e[:, [2]]).max(),
                subspace_angles(far.subspaces[1], e[:, [0, 2]]).max())
    ok = scalar_err < 1e-10 and nest < 1e-10 and angle < 1e-4
    report(7, "rational map: scalar form, nesting, limit at infinity", ok,
           f"scalar rel err {scalar_err:.1e}, nesting {nest:.1e}, angle at 1e6 {angle:.1e}")


def test_criterion_8_boundary_data():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    s, _ = solve(derive_type(["-3/2"], [1]))
    coarse = chern_integral(s, 1, grid=32)
    fine = chern_integral(s, 1, grid=64)
    gs = gauge_transform(s, GaugeTransform.random_unitary(s.type, rng))
    dens = 0.0
    for _ in range(20):
        x = complex(*rng.standard_normal(2))
        dens = max(dens, abs(curvature_density(s, 1, x) - curvature_density(gs, 1, x)))
    elapsed = time.perf_counter() - start
    ok = abs(abs(fine) - 1) <= 0.05 and abs(fine - coarse) < 1e-2 and dens < 1e-8 and elapsed < 300
    report(8, "boundary line bundle degree and gauge invariance", ok,
           f"chern {fine:.6f} (grid 64), refinement change {abs(fine - coarse):.1e}, "
           f"density gauge diff {dens:.1e}")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
