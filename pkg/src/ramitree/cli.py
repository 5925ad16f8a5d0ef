"""Command-line front end.

Exit codes: 0 success/PASS, 1 FAIL or order mismatch, 2 INCONCLUSIVE or a
resource cap hit in an exact computation, 3 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import re
import sys
from dataclasses import dataclass
from pathlib import Path

from . import omega as om
from .engine import Budget, CapExceeded, GroupSnapshot, dump_elements, semi_abelian_witness
from .omega import OmegaError, parse_omega
from .ramify import verify_theorem

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_INVALID = 0, 1, 2, 3


class InvalidInput(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    budget: Budget
    k_max: int = 4
    threads: int = 1
    seed: int = 0
    fmt: str = "json"
    timings: bool = False

    def __post_init__(self):
        if self.k_max < 1 or self.threads < 1:
            raise InvalidInput("--kmax and --threads must be positive")

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        try:
            budget = Budget(args.max_elements, args.max_bytes, args.max_millis)
        except ValueError as exc:
            raise InvalidInput(str(exc)) from None
        return cls(budget, args.kmax, args.threads, args.seed, args.format, args.timings)


def _num(x):
    return "infinite" if x == om.INFINITE else int(x)


def info_report(omega) -> dict:
    om.require_nonconstant(omega)
    tail = om.shift(omega, 1)
    return {
        "omega": str(omega),
        "sigma_omega": str(tail),
        "indices": {f"i{k}": _num(om.index_first(omega, k)) for k in (0, 1, 2)},
        "sigma_indices": {f"i{k}": _num(om.index_first(tail, k)) for k in (0, 1, 2)},
        "m": om.m_of(omega),
        "classification": om.classify(omega).as_dict(),
        "d_generator": om.d_generator_letter(omega),
        "c_generator": om.c_generator_letter(omega),
        "threshold_m": om.threshold_M(omega),
        "threshold_case": om.threshold_case(omega),
        "predicted_orders": {w: om.predicted_order(omega, w).to_json() for w in om.PREDICTABLE_WORDS},
    }


def order_report(omega, n: int, word: str) -> dict:
    if not word or any(ch not in "abcde" for ch in word):
        raise InvalidInput(f"word {word!r} must be over a, b, c, d")
    measured = om.evaluate_word(omega, word, n).order()
    if word in om.PREDICTABLE_WORDS:
        prediction = om.predicted_order(omega, word)
        saturation = om.saturation_depth(omega, word)
    else:
        prediction, saturation = None, om.INFINITE
    if prediction is None or prediction.status != "finite":
        flag = "UNPREDICTED"
    elif n < saturation:
        flag = "UNSATURATED" if measured <= prediction.value else "MISMATCH"
    else:
        flag = "MATCH" if measured == prediction.value else "MISMATCH"
    return {
        "omega": str(omega),
        "depth": n,
        "word": word,
        "measured": measured,
        "predicted": None if prediction is None else prediction.to_json(),
        "saturation_depth": _num(saturation),
        "flag": flag,
    }


def _tsv(rows) -> str:
    def cell(v):
        if isinstance(v, (dict, list)):
            return json.dumps(v, separators=(",", ":"))
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        return str(v)

    header = list(rows[0])
    lines = ["\t".join(header)]
    lines += ["\t".join(cell(r.get(k)) for k in header) for r in rows]
    return "\n".join(lines)


def _emit(report: dict, cfg: RunConfig, out) -> None:
    if cfg.fmt == "tsv":
        out.write(_tsv([report]) + "\n")
    else:
        out.write(json.dumps(report, indent=2) + "\n")


def _omega_arg(text: str):
    omega = parse_omega(text)
    om.require_nonconstant(omega)
    return omega


def _depth_arg(n, minimum=1):
    if n is None or n < minimum:
        raise InvalidInput(f"--depth must be at least {minimum}")
    return n


def cmd_info(args, cfg, out) -> int:
    _emit(info_report(_omega_arg(args.omega)), cfg, out)
    return EXIT_OK


def cmd_verify(args, cfg, out) -> int:
    omega = _omega_arg(args.omega)
    n = _depth_arg(args.depth, 2)
    try:
        report = verify_theorem(
            omega, n, args.mode, k_max=cfg.k_max, budget=cfg.budget, threads=cfg.threads, timings=cfg.timings
        )
    except CapExceeded as exc:
        _emit({"omega": str(omega), "depth": n, "verdict": "INCONCLUSIVE", "cap": exc.resource, "partial": exc.partial}, cfg, out)
        return EXIT_INCONCLUSIVE
    _emit(report, cfg, out)
    return {"PASS": EXIT_OK, "FAIL": EXIT_FAIL, "INCONCLUSIVE": EXIT_INCONCLUSIVE}[report["verdict"]]


def _dump_name(omega, n: int) -> str:
    return f"G_{omega.preperiod or 'e'}_{omega.period}_n{n}.keys"


def cmd_enumerate(args, cfg, out) -> int:
    omega = _omega_arg(args.omega)
    n = _depth_arg(args.depth)
    group = GroupSnapshot.grigorchuk(omega, n)
    try:
        elements = group.enumerate(cfg.budget)
    except CapExceeded as exc:
        _emit({"omega": str(omega), "depth": n, "order": None, "cap": exc.resource, "partial": exc.partial}, cfg, out)
        return EXIT_INCONCLUSIVE
    report = {"omega": str(omega), "depth": n, "order": len(elements), "log2_order": len(elements).bit_length() - 1}
    if args.fixture_dir:
        path = Path(args.fixture_dir) / _dump_name(omega, n)
        path.parent.mkdir(parents=True, exist_ok=True)
        dump_elements(group, path)
        report["dump"] = str(path)
    _emit(report, cfg, out)
    return EXIT_OK


def cmd_order(args, cfg, out) -> int:
    report = order_report(_omega_arg(args.omega), _depth_arg(args.depth), args.word)
    _emit(report, cfg, out)
    return EXIT_FAIL if report["flag"] == "MISMATCH" else EXIT_OK


def cmd_semiabelian(args, cfg, out) -> int:
    omega = _omega_arg(args.omega)
    n = _depth_arg(args.depth)
    group = GroupSnapshot.grigorchuk(omega, n)
    try:
        search = semi_abelian_witness(
            group, cfg.budget, max_pairs=args.max_pairs, trials=args.trials, rng=random.Random(cfg.seed)
        )
    except CapExceeded as exc:
        _emit({"omega": str(omega), "depth": n, "result": "CapExceeded", "cap": exc.resource}, cfg, out)
        return EXIT_INCONCLUSIVE
    report = {
        "omega": str(omega),
        "depth": n,
        "threshold_m": om.threshold_M(omega),
        "group_order": group.order,
        "exponent": search.exponent,
        "result": "found" if search.witness else "NoneFound",
        "exhaustive": search.exhaustive,
        "pairs_tried": search.pairs_tried,
        "witness": search.witness.to_json() if search.witness else None,
    }
    _emit(report, cfg, out)
    if search.witness is None and not search.exhaustive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


_RANGE_END = re.compile(r"^(M)?([+-]?\d+)?$")


def parse_n_range(text: str, m: int) -> range:
    """``lo:hi`` inclusive; each end an integer, ``M`` or ``M+k``."""
    def end(tok):
        tok = tok.strip()
        match = _RANGE_END.match(tok)
        if not tok or match is None:
            raise InvalidInput(f"bad depth range end {tok!r}")
        base = m if match.group(1) else 0
        offset = int(match.group(2)) if match.group(2) else 0
        if not match.group(1) and not match.group(2):
            raise InvalidInput(f"bad depth range end {tok!r}")
        return base + offset

    lo, sep, hi = text.partition(":")
    lo_n = end(lo)
    hi_n = end(hi) if sep else lo_n
    return range(max(lo_n, 2), hi_n + 1)


def read_corpus(path) -> list:
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                entries.append((lineno, _omega_arg(text)))
            except OmegaError as exc:
                raise InvalidInput(f"{path}:{lineno}: {exc}") from None
    return entries


def cmd_sweep(args, cfg, out) -> int:
    entries = read_corpus(args.corpus)
    jobs = [(omega, n) for _, omega in entries for n in parse_n_range(args.n_range, om.threshold_M(omega))]
    red_alarm = unresolved = False
    header_done = False
    for omega, n in jobs:
        try:
            report = verify_theorem(omega, n, args.mode, k_max=cfg.k_max, budget=cfg.budget, threads=cfg.threads, timings=cfg.timings)
        except CapExceeded as exc:
            report = {"omega": str(omega), "depth": n, "verdict": "INCONCLUSIVE", "theorem_claim": "unresolved", "cap": exc.resource}
        red_alarm |= report["theorem_claim"] == "red-alarm"
        unresolved |= report["theorem_claim"] == "unresolved"
        if cfg.fmt == "tsv":
            table = _tsv([report]).split("\n")
            out.write(("\n".join(table) if not header_done else table[1]) + "\n")
            header_done = True
        else:
            out.write(json.dumps(report, separators=(",", ":")) + "\n")
        out.flush()
    if red_alarm:
        return EXIT_FAIL
    return EXIT_INCONCLUSIVE if unresolved else EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kmax", type=_positive_int, default=4, help="truncation ladder depth (default 4)")
    common.add_argument("--max-elements", type=_positive_int, default=2**20)
    common.add_argument("--max-bytes", type=_positive_int, default=2 * 2**30)
    common.add_argument("--max-millis", type=_positive_int, default=None)
    common.add_argument("--threads", type=_positive_int, default=int(os.environ.get("RAMITREE_THREADS", "1")))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "tsv"), default="json")
    common.add_argument("--fixture-dir", default=None, help="directory for element-set dumps")
    common.add_argument("--timings", action="store_true", help="fill elapsed_ms (makes reports run-dependent)")

    parser = _Parser(prog="ramitree", description="Finite quotients of Grigorchuk groups and their ramification structures.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("info", parents=[common], help="sequence invariants, threshold and predicted orders")
    p.add_argument("omega")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("verify", parents=[common], help="verify the ramification structure of G(n)")
    p.add_argument("omega")
    p.add_argument("-n", "--depth", type=_positive_int, required=True)
    p.add_argument("--mode", choices=("auto", "exact", "certified"), default="auto")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("enumerate", parents=[common], help="enumerate G(n)")
    p.add_argument("omega")
    p.add_argument("-n", "--depth", type=_positive_int, required=True)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("order", parents=[common], help="measured vs predicted order of a word")
    p.add_argument("omega")
    p.add_argument("-n", "--depth", type=_positive_int, required=True)
    p.add_argument("--word", required=True)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("semiabelian", parents=[common], help="search a semi-abelian violating pair")
    p.add_argument("omega")
    p.add_argument("-n", "--depth", type=_positive_int, required=True)
    p.add_argument("--trials", type=_positive_int, default=10**7)
    p.add_argument("--max-pairs", type=_positive_int, default=10**6)
    p.set_defaults(func=cmd_semiabelian)

    p = sub.add_parser("sweep", parents=[common], help="verify every sequence of a corpus file")
    p.add_argument("corpus")
    p.add_argument("--n-range", default="M:M+1", help="inclusive depth range, e.g. 4:6 or M:M+1")
    p.add_argument("--mode", choices=("auto", "exact", "certified"), default="auto")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = RunConfig.from_args(args)
        return args.func(args, cfg, out)
    except (InvalidInput, OmegaError, OSError) as exc:
        print(f"ramitree: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
