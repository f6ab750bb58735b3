"""Command-line front end.

Every subcommand reads a group configuration and writes one JSON report.
Exit codes: 0 success, 1 domain failure (validation, convergence, solver),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .config import (
    DIRECTION_SCHEMA,
    REPORT_SCHEMA,
    TARGETS_SCHEMA,
    ConfigError,
    GroupConfig,
    _get,
    _int,
    _number,
    dump_report,
    load_config,
    load_json,
    parse_complex,
    parse_matrix,
)
from .fd import FDConfig, FDError, fd_directional
from .group import Disk, GroupValidationError
from .integrals import (
    BranchTrackingError,
    PathPlanningError,
    QuadratureError,
    a_periods,
    integrate,
    period_matrix,
    default_base_point,
    plan_path,
)
from .moebius import fixed_points
from .series import (
    PoleProximityError,
    ThirdKindDifferential,
    TruncationError,
    default_probes,
    geometric_tail,
    holomorphic_basis,
)
from .solver import (
    FixedPointParameterization,
    FreeParameter,
    IntegralTarget,
    ModuliProblem,
    PeriodTarget,
    SolverError,
    convergence_exponent,
    newton_solve,
)
from .variational import (
    PerturbationDirection,
    PeriodVariation,
    fixed_point_direction,
    gauge_conjugation_direction,
    integrand_samples,
    BoundaryCache,
    vary_integral,
)

DOMAIN_ERRORS = (
    GroupValidationError,
    TruncationError,
    QuadratureError,
    PathPlanningError,
    BranchTrackingError,
    PoleProximityError,
    SolverError,
    FDError,
)


def parse_point(text: str) -> complex:
    """'re,im' or a Python complex literal such as '1+2j'."""
    try:
        if "," in text:
            re_, im_ = text.split(",")
            return complex(float(re_), float(im_))
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed complex number {text!r}") from None


# -- helpers ------------------------------------------------------------------


class Run:
    """Shared state of one CLI invocation."""

    def __init__(self, args):
        self.args = args
        self.timings: dict[str, float] = {}
        cfg = load_config(args.config)
        overrides = {}
        if getattr(args, "len", None) is not None:
            overrides.update(max_word_len=args.len, tail_tol=None)
        if getattr(args, "tol", None) is not None:
            overrides.update(tail_tol=args.tol, max_word_len=None)
        if getattr(args, "nodes", None) is not None:
            overrides["nodes"] = args.nodes
        if getattr(args, "base_point", None) is not None:
            overrides["base_point"] = args.base_point
        self.cfg: GroupConfig = cfg.with_settings(**overrides) if overrides else cfg
        self.group = self.cfg.group()
        self.report: dict = {
            "schema": REPORT_SCHEMA,
            "command": args.command,
            "version": __version__,
            "backend": _kernels.backend(),
            "config": self.cfg.to_dict(),
        }

    def timed(self, name, fn, *a, **kw):
        t0 = time.perf_counter()
        out = fn(*a, **kw)
        self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0
        return out

    def validate(self) -> bool:
        rep = self.timed("validate", self.group.validate)
        self.report["validation"] = rep.to_dict()
        return rep.usable

    def basis(self):
        s = self.cfg.settings
        return self.timed("series", holomorphic_basis, self.group, s.max_word_len,
                          tol=s.tail_tol, nodes=s.nodes)


def default_pole_pair(group) -> tuple[complex, complex]:
    """One point above and one below every disk; both lie in the fundamental domain."""
    disks = [d for _, d in group.all_disks()]
    top = default_base_point(group)
    bottom = min(d.center.imag - d.radius for d in disks)
    return top, complex(top.real, bottom - (top.imag - max(d.center.imag + d.radius for d in disks)))


def _basis_diagnostics(run: Run, basis) -> dict:
    probes = default_probes(run.group)
    out = []
    for h in basis:
        norms = h.layer_norms(probes)
        out.append({
            "index": h.k + 1,
            "max_word_len": h.max_word_len,
            "normalization": h.normalization,
            "layer_norms": norms,
            "geometric_tail": geometric_tail(norms),
        })
    return {"holomorphic": out}


# -- subcommands ----------------------------------------------------------------


def cmd_validate(run: Run) -> int:
    ok = run.validate()
    rep = run.report["validation"]
    if not ok:
        rep["offending"] = [c["name"] for c in rep["checks"] if not c["passed"]]
        rep["offending"] += rep["structural_errors"]
    return 0 if ok else 1


def cmd_periods(run: Run) -> int:
    if not run.validate():
        return 1
    s = run.cfg.settings
    basis = run.basis()
    amat = np.array([run.timed("a_periods", a_periods, h, run.group, s.nodes, None) for h in basis])
    amat_fine = np.array([a_periods(h, run.group, 2 * s.nodes, None) for h in basis])
    pm = run.timed("periods", period_matrix, run.group, basis, s.base_point)
    run.report["results"] = {
        "period_matrix": pm.entries,
        "base_point": pm.base_point,
        "symmetry_residual": pm.symmetry_residual,
        "imag_eigenvalues": pm.imag_eigenvalues,
        "a_period_matrix": amat,
        "a_period_identity_residual": float(np.max(np.abs(amat - np.eye(run.group.genus)))),
    }
    run.report["diagnostics"] = _basis_diagnostics(run, basis)
    run.report["diagnostics"]["quadrature"] = [
        {"nodes": s.nodes, "a_period_matrix": amat},
        {"nodes": 2 * s.nodes, "a_period_matrix": amat_fine,
         "change": float(np.max(np.abs(amat_fine - amat)))},
    ]
    return 0


def _differential(run: Run, basis=None):
    a = run.args
    s = run.cfg.settings
    if a.kind == "holomorphic":
        basis = basis or run.basis()
        k = a.index - 1
        if not 0 <= k < run.group.genus:
            raise ConfigError("--index", f"must be between 1 and {run.group.genus}")
        return basis[k]
    z, zp = default_pole_pair(run.group)
    z = z if a.pole is None else a.pole
    zp = zp if a.pole_prime is None else a.pole_prime
    try:
        return run.timed("series", ThirdKindDifferential.build, run.group, z, zp,
                         s.max_word_len, tol=s.tail_tol)
    except ValueError as exc:
        raise ConfigError("--pole", str(exc)) from None


def cmd_integrate(run: Run) -> int:
    if not run.validate():
        return 1
    a = run.args
    d = _differential(run)
    path = plan_path(run.group, a.start, a.end)
    value = run.timed("integrate", integrate, d, path)
    run.report["results"] = {
        "kind": a.kind,
        "value": value,
        "path": list(path.waypoints),
        "max_word_len": d.max_word_len,
    }
    return 0


def load_direction(path: str, run: Run) -> PerturbationDirection:
    doc = load_json(path)
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected an object")
    if doc.get("schema", DIRECTION_SCHEMA) != DIRECTION_SCHEMA:
        raise ConfigError("schema", f"unsupported schema {doc.get('schema')!r}")
    g = run.group
    kind = _get(doc, "kind", "")
    if kind == "matrices":
        ds = _get(doc, "deltas", "")
        if not isinstance(ds, list) or len(ds) != g.genus:
            raise ConfigError("deltas", f"expected {g.genus} matrices")
        return PerturbationDirection(tuple(parse_matrix(m, f"deltas[{i}]") for i, m in enumerate(ds)))
    if kind == "scaling":
        k = _int(_get(doc, "generator", ""), "generator", lo=1) - 1
        eps = parse_complex(doc.get("epsilon", [1.0, 0.0]), "epsilon")
        return PerturbationDirection.scaling(g, k, eps)
    if kind == "conjugation":
        return gauge_conjugation_direction(g, parse_matrix(_get(doc, "X", ""), "X"))
    if kind == "random":
        scale = _number(doc.get("scale", 1.0), "scale", positive=True)
        return PerturbationDirection.random(g, np.random.default_rng(run.args.seed), scale)
    if kind == "fixed_point":
        k = _int(_get(doc, "generator", ""), "generator", lo=1) - 1
        which = _get(doc, "which", "")
        if which not in ("attracting", "repelling", "multiplier"):
            raise ConfigError("which", "expected attracting, repelling or multiplier")
        return fixed_point_direction(g, k, which, parse_complex(doc.get("delta", [1.0, 0.0]), "delta"))
    raise ConfigError("kind", f"unknown direction kind {kind!r}")


def cmd_vary(run: Run) -> int:
    if not run.validate():
        return 1
    a = run.args
    s = run.cfg.settings
    direction = load_direction(a.direction, run)
    basis = run.basis()
    res: dict = {"target": a.target, "direction": list(direction.deltas)}
    if a.target == "period":
        pv = PeriodVariation(run.group, basis, s.nodes)
        value = run.timed("variation", pv, direction)
        res["variation"] = value
        res["nodes"] = pv.last_nodes
        cache = pv.cache
        pairs = [(j, k) for j in range(run.group.genus) for k in range(run.group.genus)]
        mags = [np.max(np.abs(np.concatenate(integrand_samples(cache, i, j, direction, s.nodes))))
                for i, j in pairs]
        res["integrand_max"] = float(max(mags))

        def f(grp):
            b = holomorphic_basis(grp, basis[0].max_word_len, nodes=s.nodes)
            return period_matrix(grp, b, s.base_point).entries
    else:
        if a.start is None or a.end is None:
            raise ConfigError("--from/--to", "integral targets need both endpoints")
        z, zp = a.start, a.end
        d = basis[a.index - 1]
        out = run.timed("variation", vary_integral, d, z, zp, direction, s.nodes)
        res.update(variation=out.value, per_circle=out.per_circle, nodes=out.nodes,
                   doubling_history=out.history)
        slot = ThirdKindDifferential.build(run.group, z, zp, d.max_word_len)
        cache = BoundaryCache(run.group, [d, slot])
        res["integrand_max"] = float(np.max(np.abs(np.concatenate(
            integrand_samples(cache, 0, 1, direction, s.nodes)))))
        value = out.value

        def f(grp):
            b = holomorphic_basis(grp, d.max_word_len, nodes=s.nodes)
            return integrate(b[a.index - 1], plan_path(grp, z, zp))
    if a.check_fd:
        fd = run.timed("fd", fd_directional, f, run.group, direction, FDConfig())
        diff = np.abs(np.asarray(value) - np.asarray(fd.value))
        scale = float(np.max(np.abs(fd.value)))
        res["fd"] = {
            "value": fd.value,
            "error_estimate": fd.error,
            "step": fd.step,
            "max_abs_discrepancy": float(np.max(diff)),
            "relative_discrepancy": float(np.max(diff) / scale) if scale > 0 else float("nan"),
        }
        if fd.warning:
            res["fd"]["warning"] = fd.warning
    run.report["results"] = res
    return 0


def _parse_free(v, i) -> FreeParameter:
    where = f"free[{i}]"
    try:
        return FreeParameter(_int(_get(v, "generator", where), f"{where}.generator", lo=1) - 1,
                             _get(v, "which", where), v.get("part", "re"))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from None


def _parse_targets(doc, base: Path, run: Run) -> list:
    out = []
    raw = _get(doc, "targets", "")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("targets", "expected a non-empty list")
    for i, t in enumerate(raw):
        where = f"targets[{i}]"
        kind = _get(t, "type", where)
        if kind == "period":
            out.append(PeriodTarget(_int(_get(t, "j", where), f"{where}.j", 1) - 1,
                                    _int(_get(t, "s", where), f"{where}.s", 1) - 1,
                                    parse_complex(_get(t, "value", where), f"{where}.value")))
        elif kind == "integral":
            out.append(IntegralTarget(_int(_get(t, "index", where), f"{where}.index", 1) - 1,
                                      parse_complex(_get(t, "from", where), f"{where}.from"),
                                      parse_complex(_get(t, "to", where), f"{where}.to"),
                                      parse_complex(_get(t, "value", where), f"{where}.value")))
        elif kind == "period_matrix_of":
            ref = load_config(base / _get(t, "config", where))
            grp = ref.group().require_valid()
            s = run.cfg.settings
            pm = period_matrix(grp, holomorphic_basis(grp, s.max_word_len, nodes=s.nodes),
                               s.base_point).entries
            g = grp.genus
            out.extend(PeriodTarget(j, k, pm[j, k]) for j in range(g) for k in range(j, g))
        else:
            raise ConfigError(f"{where}.type", f"unknown target type {kind!r}")
    return out


def cmd_solve(run: Run) -> int:
    if not run.validate():
        return 1
    doc = load_json(run.args.targets)
    if not isinstance(doc, dict):
        raise ConfigError(run.args.targets, "expected an object")
    if doc.get("schema", TARGETS_SCHEMA) != TARGETS_SCHEMA:
        raise ConfigError("schema", f"unsupported schema {doc.get('schema')!r}")
    free_raw = _get(doc, "free", "")
    if not isinstance(free_raw, list):
        raise ConfigError("free", "expected a list")
    free = [_parse_free(v, i) for i, v in enumerate(free_raw)]
    targets = _parse_targets(doc, Path(run.args.targets).parent, run)
    max_iter = _int(doc.get("max_iter", 20), "max_iter", lo=0)
    tol = _number(doc.get("tol", 1e-10), "tol", positive=True)
    s = run.cfg.settings
    if s.max_word_len is None:
        raise ConfigError("settings.max_word_len", "solve needs a fixed word length")
    fps = [fixed_points(g) for g in run.group.generators]
    param = FixedPointParameterization(
        [f.attracting for f in fps], [f.repelling for f in fps], [f.multiplier for f in fps],
        free, [Disk(p.Dprime.center, p.Dprime.radius) for p in run.group.disks])
    try:
        problem = ModuliProblem(param, targets, s.max_word_len, s.nodes, s.base_point)
    except ValueError as exc:
        raise ConfigError("free", str(exc)) from None
    try:
        group, trace = run.timed("solve", newton_solve, problem, None, max_iter, tol)
    except SolverError as exc:
        run.report["results"] = {"error": str(exc), "trace": exc.trace.to_dict()}
        return 1
    a, b, mu = param.triples(np.array(trace.records[-1].params))
    run.report["results"] = {
        "trace": trace.to_dict(),
        "convergence_exponent": convergence_exponent(trace.residual_norms),
        "final": {"attracting": a, "repelling": b, "multipliers": mu,
                  "matrices": [g.as_array() for g in group.generators]},
        "targets": [vars(t) | {"type": type(t).__name__} for t in targets],
    }
    return 0 if trace.converged else 1


def _monotone(norms) -> bool:
    """Strict decrease from layer 1 on, ignoring layers at the rounding floor.

    Layer 0 is the bare rational term and may be smaller than layer 1.
    """
    floor = 64 * np.finfo(float).eps * float(np.max(norms))
    tail = np.asarray(norms[1:])
    tail = tail[: np.argmax(tail <= floor)] if np.any(tail <= floor) else tail
    return bool(np.all(np.diff(tail) < 0))


def cmd_converge(run: Run) -> int:
    if not run.validate():
        return 1
    a = run.args
    probes = default_probes(run.group)
    diffs = [(f"holomorphic[{h.k + 1}]", h) for h in run.basis()]
    a.kind = "third"
    d = _differential(run)
    diffs.append((f"third[{d.z}, {d.zprime}]", d))
    rows = []
    for name, d in diffs:
        norms = d.layer_norms(probes)
        ratios = norms[1:] / np.where(norms[:-1] > 0, norms[:-1], np.nan)
        rows.append({"differential": name, "max_word_len": d.max_word_len, "layer_norms": norms,
                     "ratios": ratios, "geometric_tail": geometric_tail(norms),
                     "monotone": _monotone(norms)})
    run.report["results"] = {"layers": rows,
                             "multipliers": [fixed_points(g).multiplier for g in run.group.generators]}
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "periods": cmd_periods,
    "integrate": cmd_integrate,
    "vary": cmd_vary,
    "solve": cmd_solve,
    "converge": cmd_converge,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schottky", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="kernel threads (1 = serial)")
    common.add_argument("--seed", type=int, default=0, help="seed for random directions")
    common.add_argument("--out", type=Path, default=None, help="write the report here")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings")
    common.add_argument("-v", "--verbose", action="store_true")

    trunc = argparse.ArgumentParser(add_help=False)
    g = trunc.add_mutually_exclusive_group()
    g.add_argument("--len", type=int, help="maximum word length")
    g.add_argument("--tol", type=float, help="target geometric tail of the series")
    trunc.add_argument("--nodes", type=int, help="trapezoid nodes per circle")
    trunc.add_argument("--base-point", type=parse_point, dest="base_point")

    diff = argparse.ArgumentParser(add_help=False)
    diff.add_argument("--kind", choices=["holomorphic", "third"], default="holomorphic")
    diff.add_argument("--index", type=int, default=1, help="holomorphic basis index (1-based)")
    diff.add_argument("--pole", type=parse_point, help="residue +1 pole of a third-kind differential")
    diff.add_argument("--pole-prime", type=parse_point, dest="pole_prime", help="residue -1 pole")

    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("validate", parents=[common], help="check the Schottky configuration")
    sp.add_argument("config")
    sp = sub.add_parser("periods", parents=[common, trunc], help="period matrix and a-periods")
    sp.add_argument("config")
    sp = sub.add_parser("integrate", parents=[common, trunc, diff], help="Abelian integral")
    sp.add_argument("config")
    sp.add_argument("--from", dest="start", type=parse_point, required=True)
    sp.add_argument("--to", dest="end", type=parse_point, required=True)
    sp = sub.add_parser("vary", parents=[common, trunc], help="first-order variation")
    sp.add_argument("config")
    sp.add_argument("direction")
    sp.add_argument("--target", choices=["period", "integral"], default="period")
    sp.add_argument("--index", type=int, default=1, help="holomorphic differential for integrals")
    sp.add_argument("--from", dest="start", type=parse_point)
    sp.add_argument("--to", dest="end", type=parse_point)
    sp.add_argument("--check-fd", action="store_true", dest="check_fd")
    sp = sub.add_parser("solve", parents=[common, trunc], help="Newton solve for moduli")
    sp.add_argument("config")
    sp.add_argument("targets")
    sp = sub.add_parser("converge", parents=[common, trunc], help="layer-norm report")
    sp.add_argument("--pole", type=parse_point)
    sp.add_argument("--pole-prime", type=parse_point, dest="pole_prime")
    sp.add_argument("config")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        _kernels.set_threads(args.threads)
    try:
        run = Run(args)
        code = COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"schottky: parse error: {exc}", file=sys.stderr)
        return 2
    except DOMAIN_ERRORS as exc:
        print(f"schottky: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"schottky: {exc}", file=sys.stderr)
        return 2
    if args.timings:
        run.report["timings"] = run.timings
    text = dump_report(run.report)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
