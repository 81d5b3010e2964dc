"""vocalc: run verification suites and report per-check status.

Exit status: 0 all checks pass, 1 any check fails, 2 some check is
unsupported or window-limited and none fails, 3 bad invocation or input.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from . import suites
from .dataio import validate_and_load
from .errors import MalformedInput, UnknownSuite

SUITE_NAMES = list(suites.SUITES) + ["all"]
STATUSES = ("pass", "fail", "window-limited", "unsupported")


@dataclass
class SuiteConfig:
    suite: str = "all"
    order: int = 8
    degree: int = 3
    input: str | None = None
    report_format: str = "text"
    check: str | None = None

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("order N must be at least 2")
        if self.degree < 1:
            raise ValueError("degree D must be at least 1")


@dataclass
class Report:
    suite: str
    order: int
    degree: int
    checks: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def counts(self) -> dict:
        out = dict.fromkeys(STATUSES, 0)
        for c in self.checks:
            out[c["status"]] += 1
        return out

    @property
    def exit_code(self) -> int:
        n = self.counts
        if n["fail"]:
            return 1
        if n["window-limited"] or n["unsupported"]:
            return 2
        return 0

    def machine(self) -> str:
        # no wall time: identical runs give byte-identical output
        doc = {
            "suite": self.suite,
            "order": self.order,
            "degree": self.degree,
            "checks": self.checks,
            "counts": self.counts,
            "exit": self.exit_code,
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    def text(self) -> str:
        lines = [f"suite {self.suite}  N={self.order}  D={self.degree}"]
        for c in self.checks:
            lines.append(f"  {c['status'].upper():15s} {c['id']}")
            for key in ("witness", "reason", "window"):
                if key in c["detail"]:
                    lines.append(f"      {key}: {json.dumps(c['detail'][key], sort_keys=True)}")
        n = self.counts
        lines.append(
            f"{len(self.checks)} checks: {n['pass']} pass, {n['fail']} fail, "
            f"{n['window-limited']} window-limited, {n['unsupported']} unsupported  ({self.wall_time:.2f} s)"
        )
        return "\n".join(lines)


def _selected(cfg: SuiteConfig):
    if cfg.check is not None:
        name = cfg.check.split("/", 1)[0]
        if name not in suites.SUITES:
            raise UnknownSuite(f"check id {cfg.check!r} names no suite")
        return [name]
    if cfg.suite not in SUITE_NAMES:
        raise UnknownSuite(f"unknown suite {cfg.suite!r}; choose from {', '.join(SUITE_NAMES)}")
    return list(suites.SUITES) if cfg.suite == "all" else [cfg.suite]


def run_suite(cfg: SuiteConfig) -> Report:
    names = _selected(cfg)
    data = None
    if cfg.input is not None:
        data = validate_and_load(cfg.input)
        kind = type(data).__name__
        for name in names:
            if suites.INPUT_KIND.get(name) != kind:
                raise MalformedInput(f"suite {name} does not take a {kind} input")
    report = Report(cfg.check or cfg.suite, cfg.order, cfg.degree)
    start = time.perf_counter()
    found = False
    for name in names:
        for cid, thunk in suites.SUITES[name](cfg.order, cfg.degree, data):
            if cfg.check is not None and cid != cfg.check:
                continue
            found = True
            status, detail = suites.run_check(thunk)
            report.checks.append({"id": cid, "status": status, "detail": suites._jsonable(detail)})
    if cfg.check is not None and not found:
        raise UnknownSuite(f"no check with id {cfg.check!r}")
    report.wall_time = time.perf_counter() - start
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vocalc", description="Exact verification suites for formal series, Virasoro factorizations, sewing and vertex operator coalgebras.")
    p.add_argument("--suite", default="all", help=f"one of: {', '.join(SUITE_NAMES)}")
    p.add_argument("--order", type=int, default=8, help="truncation order N (default 8)")
    p.add_argument("--degree", type=int, default=3, help="parameter degree D (default 3)")
    p.add_argument("--input", help="JSON data file (VOC data, moduli element or graded map)")
    p.add_argument("--report", choices=("text", "machine"), default="text")
    p.add_argument("--check", help="replay a single check by id")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = SuiteConfig(args.suite, args.order, args.degree, args.input, args.report, args.check)
        report = run_suite(cfg)
    except (ValueError, UnknownSuite, MalformedInput, OSError) as exc:
        print(f"vocalc: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(report.machine() if cfg.report_format == "machine" else report.text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
