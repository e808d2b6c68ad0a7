"""Command-line driver: ``helly gen | select | verify | bound``.

Exit status: 0 on success, 1 on bad input or usage, 2 when a numerical
check or a verification fails.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyInterior, HellyError, InternalCheckFailed, MismatchedInstance, SchemaError, Unbounded
from .model import (
    GENERATOR_KINDS,
    Polytope,
    family_digest,
    generate_instance,
    parse_family,
    serialize_family,
)
from .select import ALGORITHMS, certified_bound, run_selection, selection_cap
from .volume import volume_ratio

log = logging.getLogger("helly")

DEFAULT_D = 4.0
DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 0
BOUND_RTOL = 1e-6
EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2


class InputError(Exception):
    """Bad files or flags; mapped to exit status 1."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    algorithm: str | None = None
    d: float | None = None
    input: str | None = None
    output: str | None = None
    report: str | None = None
    seed: int = DEFAULT_SEED
    samples: int = DEFAULT_SAMPLES
    exact: bool = False
    workers: int = 1
    shape: str | None = None
    n: int | None = None
    m: int | None = None
    symmetric: bool = False


# ------------------------------------------------------------------ helpers

def _read_instance(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        family = parse_family(text)
    except (SchemaError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    try:
        P = Polytope.from_family(family)
    except (Unbounded, EmptyInterior) as exc:
        raise InputError(f"{path}: {exc}") from exc
    return family, P


def _write_json(obj, path):
    text = json.dumps(obj, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _measure(P, family, selected, cfg, seed):
    Q = Polytope.from_family(family.subfamily(selected))
    return volume_ratio(P, Q, samples=cfg.samples, seed=seed, exact=True if cfg.exact else None, workers=cfg.workers)


def _bound_ok(estimate, log_bound):
    return bool(math.log(estimate.ci99_high) <= log_bound + BOUND_RTOL) if estimate.ci99_high > 0 else False


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    return x


# ----------------------------------------------------------------- commands

def run_gen(cfg: RunConfig) -> int:
    try:
        family = generate_instance(cfg.shape, cfg.n, cfg.m, cfg.seed, cfg.symmetric)
    except (ValueError, Unbounded) as exc:
        raise InputError(str(exc)) from exc
    text = serialize_family(family)
    if cfg.output is None or cfg.output == "-":
        sys.stdout.write(text)
    else:
        Path(cfg.output).write_text(text, encoding="utf-8")
    return EXIT_OK


def run_select(cfg: RunConfig) -> int:
    family, P = _read_instance(cfg.input)
    d = None if cfg.algorithm == "naszodi" else cfg.d
    rep = run_selection(cfg.algorithm, P, d)
    estimate = _measure(P, family, rep.selected, cfg, cfg.seed)
    satisfied = _bound_ok(estimate, rep.certified_log_ratio)
    contained = estimate.ci99_high >= 1.0 - 1e-9
    report = {
        "algorithm": rep.algorithm,
        "d": rep.d,
        "dim": rep.dim,
        "selected": rep.selected,
        "s": rep.s,
        "cap": rep.cap,
        "gamma_achieved": rep.gamma_achieved,
        "certified_log_ratio": rep.certified_log_ratio,
        "certified_ratio": math.exp(rep.certified_log_ratio),
        "measured_ratio": estimate.as_dict(),
        "bound_satisfied": satisfied,
        "containment_ok": bool(contained),
        "kappa": None if rep.kappa is None else rep.kappa.tolist(),
        "residuals": rep.residuals,
        "details": rep.details,
        "instance_sha256": family_digest(family),
        "seed": cfg.seed,
        "samples": cfg.samples,
    }
    _write_json(_jsonable(report), cfg.output)
    if not satisfied:
        log.error("measured ratio %.6g exceeds the certified bound %.6g", estimate.ci99_high, report["certified_ratio"])
    return EXIT_OK if satisfied and contained else EXIT_CHECK


def _load_report(path):
    try:
        report = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("algorithm", "selected", "certified_log_ratio", "instance_sha256"):
        if key not in report:
            raise InputError(f"{path}: report lacks {key!r}")
    if report["algorithm"] not in ALGORITHMS:
        raise InputError(f"{path}: unknown algorithm {report['algorithm']!r}")
    return report


def run_verify(cfg: RunConfig) -> int:
    report = _load_report(cfg.report)
    family, P = _read_instance(cfg.input)
    digest = family_digest(family)
    if digest != report["instance_sha256"]:
        raise MismatchedInstance("report was produced from a different instance")
    seed = cfg.seed if cfg.seed is not None else int(report.get("seed", DEFAULT_SEED)) + 1
    algorithm, d, n = report["algorithm"], report.get("d"), family.dim
    selected = report["selected"]
    reasons = []
    bound = certified_bound(algorithm, n, d)
    if not math.isclose(bound, report["certified_log_ratio"], rel_tol=1e-12, abs_tol=1e-12):
        reasons.append("certified bound in the report does not match its parameters")
    if len(set(selected)) != len(selected) or not all(isinstance(i, int) and 0 <= i < len(family) for i in selected):
        reasons.append("selected indices are not distinct members of the family")
        selected = []
    if len(selected) > selection_cap(algorithm, n, d):
        reasons.append("selection exceeds its size cap")
    estimate = None
    if selected:
        try:
            estimate = _measure(P, family, selected, cfg, seed)
        except Unbounded:
            reasons.append("Unbounded: the selected members do not bound a polytope")
        except EmptyInterior:
            reasons.append("EmptyInterior: the selected members have no interior")
    if estimate is not None:
        if not _bound_ok(estimate, bound):
            reasons.append("measured ratio exceeds the certified bound")
        if estimate.ci99_high < 1.0 - 1e-9:
            reasons.append("selected intersection is smaller than P")
    result = {
        "pass": not reasons,
        "reasons": reasons,
        "algorithm": algorithm,
        "d": d,
        "s": len(selected),
        "certified_log_ratio": bound,
        "measured_ratio": None if estimate is None else estimate.as_dict(),
        "agrees_with_report": _agrees(estimate, report.get("measured_ratio")),
        "instance_sha256": digest,
        "seed": seed,
        "samples": cfg.samples,
    }
    _write_json(_jsonable(result), cfg.output)
    for r in reasons:
        log.error("verify: %s", r)
    return EXIT_OK if not reasons else EXIT_CHECK


def _agrees(estimate, previous):
    """Whether two ratio estimates have overlapping 99% intervals."""
    if estimate is None or not isinstance(previous, dict) or "ci99" not in previous:
        return None
    lo, hi = previous["ci99"]
    return bool(estimate.ci99_low <= hi * (1 + 1e-9) and lo <= estimate.ci99_high * (1 + 1e-9))


def run_bound(cfg: RunConfig) -> int:
    d = None if cfg.algorithm == "naszodi" else cfg.d
    value = certified_bound(cfg.algorithm, cfg.n, d)
    _write_json(
        {
            "algorithm": cfg.algorithm,
            "n": cfg.n,
            "d": d,
            "cap": selection_cap(cfg.algorithm, cfg.n, d),
            "certified_log_ratio": value,
            "certified_ratio": math.exp(value),
        },
        cfg.output,
    )
    return EXIT_OK


COMMANDS = {"gen": run_gen, "select": run_select, "verify": run_verify, "bound": run_bound}


# ------------------------------------------------------------------ parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="helly", description="Select few halfspaces with a certified volume-ratio bound.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a test instance")
    g.add_argument("--shape", choices=GENERATOR_KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int)
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--symmetric", action="store_true", help="emit strips instead of halfspaces")
    g.add_argument("--out", dest="output")

    def add_measure(p, seed_default):
        p.add_argument("--seed", type=int, default=seed_default)
        p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
        p.add_argument("--exact", action="store_true", help="require exact volumes")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", dest="output")

    s = sub.add_parser("select", help="run a selection algorithm and measure its ratio")
    s.add_argument("--algo", dest="algorithm", choices=ALGORITHMS, required=True)
    s.add_argument("--d", type=float)
    s.add_argument("--input", required=True)
    add_measure(s, DEFAULT_SEED)

    v = sub.add_parser("verify", help="independently re-check a selection report")
    v.add_argument("--report", required=True)
    v.add_argument("--input", required=True)
    add_measure(v, None)

    b = sub.add_parser("bound", help="print a certified bound")
    b.add_argument("--algo", dest="algorithm", choices=ALGORITHMS, required=True)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--d", type=float)
    b.add_argument("--out", dest="output")
    return parser


def parse_config(argv=None) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    values = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    algorithm = values.get("algorithm")
    if algorithm == "naszodi" and values.get("d") is not None:
        parser.error("naszodi takes no --d")
    if algorithm in ("symmetric", "lifted"):
        if values.get("d") is None:
            values["d"] = DEFAULT_D
        if not values["d"] > 1:
            parser.error("--d must exceed 1")
    if values.get("n") is not None and values["n"] < 1:
        parser.error("--n must be positive")
    if values.get("samples") is not None and values["samples"] < 1:
        parser.error("--samples must be positive")
    if values.get("workers") is not None and values["workers"] < 1:
        parser.error("--workers must be positive")
    return RunConfig(**values)


def _configure_logging():
    level = os.environ.get("HELLY_LOG", "error").upper()
    if level not in ("ERROR", "WARNING", "INFO", "DEBUG"):
        level = "ERROR"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None) -> int:
    _configure_logging()
    cfg = parse_config(argv)
    try:
        return COMMANDS[cfg.command](cfg)
    except (InputError, MismatchedInstance) as exc:
        print(f"helly: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalCheckFailed as exc:
        print(f"helly: internal check failed: {exc} {json.dumps(_jsonable(exc.diagnostics))}", file=sys.stderr)
        return EXIT_CHECK
    except HellyError as exc:
        print(f"helly: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
