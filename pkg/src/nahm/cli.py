"""Command-line front end: ``nahm info|solve|verify|ratmap|boundary``.

Results are JSON on stdout (or ``--out``); diagnostics go to stderr as
single-line JSON. Exit status: 0 ok, 2 invalid input, 3 no convergence,
4 I/O or file-format error. Wall-clock timestamps only appear under ``meta``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import adhm, lattice, ratmap, solver
from .errors import NahmError, NoConvergence, SerializationError, ValidationError
from .serialization import read_solution, read_type, write_solution
from .typedata import kfrak, site_dims, weight_profile

EXIT_OK, EXIT_INVALID, EXIT_NOCONV, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("info", "solve", "verify", "ratmap", "boundary")


@dataclass
class RunConfig:
    command: str
    type_spec: str | None = None
    solution_path: str | None = None
    output_path: str | None = None
    seed: int = 0
    tol: float = 1e-20
    restarts: int = 10
    h: complex = 1.0
    grid: int = 48
    samples: int = 16

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.command in ("info", "solve") and not self.type_spec:
            raise ValidationError(f"{self.command} needs --type")
        if self.command in ("verify", "ratmap", "boundary") and not self.solution_path:
            raise ValidationError(f"{self.command} needs --in")
        if self.samples < 1 or self.grid < 2:
            raise ValidationError("--samples must be >= 1 and --grid >= 2")


def _meta() -> dict:
    return {"generated": datetime.now(timezone.utc).isoformat(timespec="seconds")}


def _cplx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _emit(obj: dict, out: str | None, stdout) -> None:
    text = json.dumps(obj, indent=1) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        stdout.write(text)


def _info(cfg: RunConfig) -> dict:
    t = read_type(cfg.type_spec)
    prof = weight_profile(t)
    lay = site_dims(t)
    return {
        "type": t.to_json(),
        "kappa": t.kappa,
        "c2": t.c2,
        "chi": {str(w): prof.at(w) for w in prof.weights2()},
        "site_dims": {
            "beta": {str(k): list(v) for k, v in sorted(lay.beta.items())},
            "gamma": {str(k): list(v) for k, v in sorted(lay.gamma.items())},
            "a": {str(k): list(v) for k, v in sorted(lay.a.items())},
            "b": {str(k): list(v) for k, v in sorted(lay.b.items())},
        },
        "real_unknowns": lay.n_real_unknowns(),
        "kfrak": {str(i): kfrak(t, i) for i in range(1, t.n)},
    }


def _solve(cfg: RunConfig) -> dict:
    t = read_type(cfg.type_spec)
    opts = solver.SolverOptions(tolerance=cfg.tol, restarts=cfg.restarts, seed=cfg.seed)
    s, rep = solver.solve(t, opts)
    if cfg.output_path:
        write_solution(s, cfg.output_path)
    out = {"report": rep.to_json(), "total_residual": lattice.total_residual(s)}
    if not cfg.output_path:
        from .serialization import solution_to_json

        out["solution"] = solution_to_json(s)
    return out


def _random_points(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    return rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim))


def _verify(cfg: RunConfig) -> dict:
    s = read_solution(cfg.solution_path)
    rng = np.random.default_rng(cfg.seed)
    d = adhm.assemble(s)
    cres, rres = lattice.complex_residual(s), lattice.real_residual(s)
    eq = [adhm.equivariance_check(d, complex(*rng.standard_normal(2))) for _ in range(cfg.samples)]
    monad = [adhm.monad_check(d, X) for X in _random_points(rng, cfg.samples, 4)]
    stab = lattice.check_stability(s)
    return {
        "type": s.type.to_json(),
        "total_residual": lattice.total_residual(s),
        "complex_residual": {str(k): float(np.linalg.norm(v)) for k, v in sorted(cres.items())},
        "real_residual": {str(k): float(np.linalg.norm(v)) for k, v in sorted(rres.items())},
        "equivariance": {"ok": all(r.ok for r in eq),
                         "max_deviation": max(max(r.deviation.values()) for r in eq)},
        "monad": {"max_relative_BA": max(m.relative_exactness for m in monad),
                  "min_sigma_A": min(m.injectivity for m in monad),
                  "min_sigma_B": min(m.surjectivity for m in monad)},
        "stability": stab.to_json(),
    }


def _ratmap(cfg: RunConfig) -> tuple[dict, str | None]:
    s = read_solution(cfg.solution_path)
    ns = ratmap.normalize(s)
    rng = np.random.default_rng(cfg.seed)
    xs = rng.standard_normal(cfg.samples) + 1j * rng.standard_normal(cfg.samples)
    rows, samples = [], []
    for x in xs:
        fp = ratmap.flag_at(ns, cfg.h, x)
        coords = [fp.plucker(m) for m in range(1, s.type.n)]
        flat = np.concatenate(coords)
        rows.append([x.real, x.imag] + [v for z in flat for v in (z.real, z.imag)])
        samples.append({"x": _cplx(x), "plucker": [[_cplx(z) for z in c] for c in coords],
                        "nesting_error": fp.nesting_error()})
    csv_text = None
    if cfg.output_path and cfg.output_path.endswith(".csv"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["re_x", "im_x"]
        for m in range(1, s.type.n):
            for q in range(len(samples[0]["plucker"][m - 1])):
                header += [f"re_V{m}_{q}", f"im_V{m}_{q}"]
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
        csv_text = buf.getvalue()
    return {"type": s.type.to_json(), "h": _cplx(cfg.h), "samples": samples}, csv_text


def _boundary(cfg: RunConfig) -> dict:
    s = read_solution(cfg.solution_path)
    rng = np.random.default_rng(cfg.seed)
    t = s.type
    xs = rng.standard_normal(cfg.samples) + 1j * rng.standard_normal(cfg.samples)
    chern, density = {}, {}
    for i in range(1, t.n + 1):
        chern[str(i)] = ratmap.chern_integral(s, i, cfg.grid)
        density[str(i)] = [{"x": _cplx(x), "density": ratmap.curvature_density(s, i, x)} for x in xs]
    return {"type": t.to_json(), "grid": cfg.grid, "chern": chern, "density": density}


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    def fail(code: int, exc: BaseException, extra: dict | None = None) -> int:
        rec = {"level": "error", "command": cfg.command, "error": type(exc).__name__, "message": str(exc)}
        if extra:
            rec.update(extra)
        stderr.write(json.dumps(rec) + "\n")
        return code

    try:
        cfg.validate()
        if cfg.command == "info":
            result = _info(cfg)
        elif cfg.command == "solve":
            result = _solve(cfg)
        elif cfg.command == "verify":
            result = _verify(cfg)
        elif cfg.command == "ratmap":
            result, csv_text = _ratmap(cfg)
            if csv_text is not None:
                Path(cfg.output_path).write_text(csv_text)
                result = {"type": result["type"], "h": result["h"], "csv": cfg.output_path,
                          "samples": len(result["samples"])}
                _emit(dict(result, meta=_meta()), None, stdout)
                return EXIT_OK
        else:
            result = _boundary(cfg)
        result["meta"] = _meta()
        out = None if cfg.command == "solve" else cfg.output_path
        _emit(result, out, stdout)
        return EXIT_OK
    except NoConvergence as exc:
        extra = {"report": exc.report.to_json()} if exc.report is not None else None
        return fail(EXIT_NOCONV, exc, extra)
    except ValidationError as exc:
        return fail(EXIT_INVALID, exc)
    except (SerializationError, OSError) as exc:
        return fail(EXIT_IO, exc)
    except NahmError as exc:
        return fail(EXIT_INVALID, exc)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nahm", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--type", dest="type_spec", help="type JSON file or inline JSON")
    p.add_argument("--in", dest="solution_path", help="solution JSON file")
    p.add_argument("--out", dest="output_path", help="output file")
    p.add_argument("--seed", type=int, default=0, help="base seed for solver restarts")
    p.add_argument("--tol", type=float, default=1e-20, help="target total residual")
    p.add_argument("--restarts", type=int, default=10, help="number of random starts")
    p.add_argument("--h-re", type=float, default=1.0, help="real part of the horosphere parameter h")
    p.add_argument("--h-im", type=float, default=0.0, help="imaginary part of h")
    p.add_argument("--grid", type=int, default=48, help="radial quadrature nodes for the degree integral")
    p.add_argument("--samples", type=int, default=16, help="number of sample points written")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except ValidationError as exc:
        sys.stderr.write(json.dumps({"level": "error", "command": None, "error": "UsageError",
                                     "message": str(exc)}) + "\n")
        return EXIT_INVALID
    cfg = RunConfig(
        command=ns.command, type_spec=ns.type_spec, solution_path=ns.solution_path,
        output_path=ns.output_path, seed=ns.seed, tol=ns.tol, restarts=ns.restarts,
        h=complex(ns.h_re, ns.h_im), grid=ns.grid, samples=ns.samples,
    )
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
