"""Command-line entry point: ``onesided {constants,construct,verify,scan,approx}``.

Exit status: 0 when everything certified, 1 when a certificate or check
fails (the report is still written), 2 for usage and I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

from . import approx as approx_mod
from . import construction as cons
from . import verify as ver
from .constants import derive_constants, g_of_gamma
from .numerics import RealEnclosure, decimal_to_fraction, enclosure_to_json

log = logging.getLogger("onesided")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    profile_name: str = "scaled"
    overrides: Optional[dict] = None
    steps: int = 6
    seed: int = 0
    height_max: int = 1000
    bits: int = 256
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    plot_path: Optional[str] = None
    threads: int = 1

    def validate(self) -> None:
        if self.command == "construct" and self.steps < 1:
            raise UsageError("--steps must be >= 1")
        if self.command in ("scan", "approx") and self.height_max < 1:
            raise UsageError("--height-max must be >= 1")
        if self.command in ("verify", "scan") and not self.input_path:
            raise UsageError("--in is required")
        if self.threads < 1:
            raise UsageError("--threads must be >= 1")
        if self.bits < 64:
            raise UsageError("--bits must be >= 64")

    def profile(self) -> cons.ParameterProfile:
        p = cons.ParameterProfile.named(self.profile_name)
        if self.overrides:
            p = replace(p, **self.overrides)
        return p


# ---------------------------------------------------------------------------
# io helpers

def _write_text(path: Optional[str], text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _read_state(path: str) -> cons.ConstructionState:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return cons.loads(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise ver.MalformedState(f"{path}: {exc}") from exc


def _write_csv(path: Optional[str], header: Sequence[str], rows, comments: Sequence[str]) -> None:
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _constant_chain(profile: cons.ParameterProfile) -> list[str]:
    pc = ver.profile_constants(profile)
    return [
        f"profile {profile.label}: {json.dumps(profile.to_json(), sort_keys=True)}",
        f"theorem floor 2^-{pc.theorem_exp} h^-sigma; lemma-2 floor 2^-{pc.lemma2_exp} M^-sigma; "
        f"segments start below 2^{pc.start_exp}",
        *pc.derivation,
    ]


# ---------------------------------------------------------------------------
# commands

def cmd_constants(cfg: RunConfig) -> int:
    c = derive_constants(cfg.bits)
    out = c.to_json()
    out["g_of_2"] = enclosure_to_json(g_of_gamma(RealEnclosure.exact(2, cfg.bits), c.phi))
    _write_text(cfg.output_path, _dump_json(out))
    return EXIT_OK if all(out["certificates"].values()) else EXIT_FAIL


def cmd_construct(cfg: RunConfig) -> int:
    prof = cfg.profile()
    state = cons.init(prof, cfg.seed)
    t0 = time.perf_counter()
    status = EXIT_OK
    for _ in range(cfg.steps):
        try:
            state = cons.step(state)
        except cons.ConstructionError as exc:
            print(f"construct: step {state.nu} -> {state.nu + 1} failed: {exc}", file=sys.stderr)
            status = EXIT_FAIL
            break
        log.info("step %d done, M = 2^%.2f", state.nu, state.steps[-1].M.mid.numerator.bit_length()
                 - state.steps[-1].M.mid.denominator.bit_length())
    log.info("construction took %.2fs", time.perf_counter() - t0)
    _write_text(cfg.output_path, cons.dumps(state))
    if cfg.plot_path:
        from .plotting import plot_construction

        plot_construction(state, cfg.plot_path)
    return status


def cmd_verify(cfg: RunConfig, lemma_samples: int, lemma2_range: int) -> int:
    try:
        state = _read_state(cfg.input_path)
    except ver.MalformedState as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return EXIT_FAIL
    report = ver.check_conditions(state)
    out = {"conditions": report.to_json()}
    ok = report.overall
    cov = ver.coverage_check(state) if len(state.steps) >= 2 else None
    if cov is not None:
        out["coverage"] = cov.to_json()
        out["coverage"]["note"] = "gaps are reported, not failed: chaining needs e_H >= 3 + 3 sigma"
    K = len(state.steps) - 1
    if K >= 2 and (lemma_samples or lemma2_range):
        lem = []
        for nu in range(K - 1):
            entry = {"nu": nu}
            if lemma_samples:
                s = ver.lemma1_sample(state, nu, lemma_samples, cfg.seed)
                entry["lemma1"] = {"checked": s["checked"], "fails": [list(map(str, f)) for f in s["fails"]]}
                ok = ok and not s["fails"]
            if lemma2_range:
                r = ver.lemma2_enumerate(state, nu, lemma2_range, lemma2_range)
                entry["lemma2"] = {"kept": r.kept, "violations": [list(map(str, v)) for v in r.violations]}
                ok = ok and not r.violations
            lem.append(entry)
        out["lemmas"] = lem
    out["profile_constants"] = ver.profile_constants(state.profile).to_json()
    out["overall"] = ok
    _write_text(cfg.output_path, _dump_json(out))
    if not report.overall:
        for nu, cond, wit in report.failures():
            print(f"verify: step {nu} condition {cond} failed: {wit}", file=sys.stderr)
    if cfg.plot_path and cov is not None:
        from .plotting import plot_coverage

        plot_coverage(cov, cfg.plot_path)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_scan(cfg: RunConfig) -> int:
    state = _read_state(cfg.input_path)
    alpha = cons.alpha_enclosure(state)
    pc = ver.profile_constants(state.profile)
    sigma = derive_constants(max(128, alpha[0].bits)).sigma
    res = ver.theorem_scan(alpha, cfg.height_max, sigma, pc.floor, threads=cfg.threads)
    rows = [r.csv_row() for r in res.height_records]
    rows += [r.csv_row() for r in res.all_records_below if r not in res.height_records]
    comments = _constant_chain(state.profile) + [
        f"rows: running minimum of ||m1 a1 + m2 a2|| max(m1,m2)^sigma over heights <= {cfg.height_max}, "
        f"then any vector below the floor",
        f"minimum: ({res.min_normalized.m1}, {res.min_normalized.m2}) "
        f"normalized {float(res.min_normalized.normalized.mid):.6g}; below floor: {len(res.all_records_below)}",
    ]
    _write_csv(cfg.output_path, ver.SCAN_HEADER, rows, comments)
    if cfg.plot_path:
        from .plotting import plot_scan

        plot_scan(res.height_records, pc.theorem_exp, float(sigma.mid), cfg.plot_path)
    return EXIT_OK if not res.all_records_below else EXIT_FAIL


def _alpha_from_args(cfg: RunConfig, alpha_args, fibonacci: bool):
    if fibonacci:
        g = derive_constants(cfg.bits).phi - 1
        return (g, g), "alpha_1 = alpha_2 = phi - 1"
    if alpha_args:
        try:
            a = tuple(RealEnclosure.exact(Fraction(decimal_to_fraction(x)), cfg.bits) for x in alpha_args)
        except (ValueError, ArithmeticError) as exc:
            raise UsageError(f"--alpha: {exc}") from exc
        return a, f"alpha = ({alpha_args[0]}, {alpha_args[1]})"
    if not cfg.input_path:
        raise UsageError("approx needs --in, --alpha or --fibonacci")
    state = _read_state(cfg.input_path)
    return cons.alpha_enclosure(state), f"alpha from {cfg.input_path}"


def cmd_approx(cfg: RunConfig, alpha_args, fibonacci: bool, gnuplot: Optional[str]) -> int:
    alpha, origin = _alpha_from_args(cfg, alpha_args, fibonacci)
    recs = approx_mod.positive_records(alpha, cfg.height_max)
    summary = approx_mod.exponent_summary(recs)
    c = derive_constants(128)
    # g is defined for gamma >= 2 only and sigma < 2, so the comparator is g(2) = 2
    gamma = c.sigma if c.sigma.lo >= 2 else RealEnclosure.exact(2, c.bits)
    g_sig = g_of_gamma(gamma, c.phi)
    best = summary["best_exponent"]
    comments = [
        origin,
        f"records over x1, x2 >= 1 up to height {cfg.height_max}: {len(recs)}",
        f"best exponent {float(best.mid) if best else 'n/a'}; phi = {float(c.phi.mid):.6f}; "
        f"g(max(sigma, 2)) = {float(g_sig.mid):.6f} (reported, not tested)",
    ]
    _write_csv(cfg.output_path, approx_mod.CSV_HEADER, [r.csv_row() for r in recs], comments)
    if gnuplot:
        png = os.path.splitext(gnuplot)[0] + ".png"
        _write_text(gnuplot, approx_mod.gnuplot_script(cfg.output_path or "approx.csv", png))
    if cfg.plot_path:
        from .plotting import plot_approx

        plot_approx(recs, float(c.phi.mid), float(g_sig.mid), cfg.plot_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="onesided", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", help="certified sigma, tau, omega, phi as JSON")
    c.add_argument("--bits", type=int, default=256)
    c.add_argument("--out")

    c = sub.add_parser("construct", help="run the inductive construction")
    c.add_argument("--profile", choices=["scaled", "paper"], default="scaled")
    for name in ("e-zeta", "e-gap", "e-H", "e-M1", "e-disk"):
        c.add_argument(f"--{name}", type=int, help="override the profile exponent")
    c.add_argument("--steps", type=int, default=6)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.add_argument("--plot", help="PNG of norms and cap radii")

    c = sub.add_parser("verify", help="re-check a state file")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--out")
    c.add_argument("--lemma-samples", type=int, default=0, help="random Lemma-1 vectors per step")
    c.add_argument("--lemma2-range", type=int, default=0, help="|lambda|, |mu| bound for Lemma 2")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--plot", help="PNG of the segments I_nu")

    c = sub.add_parser("scan", help="exhaustive quadrant scan against the profile floor")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--height-max", type=int, default=1000)
    c.add_argument("--out")
    c.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    c.add_argument("--plot", help="PNG of the running minimum")

    c = sub.add_parser("approx", help="one-sided best approximation records")
    src = c.add_mutually_exclusive_group()
    src.add_argument("--in", dest="input")
    src.add_argument("--alpha", nargs=2, metavar=("A1", "A2"), help="exact decimals")
    src.add_argument("--fibonacci", action="store_true", help="alpha_1 = alpha_2 = phi - 1")
    c.add_argument("--height-max", type=int, default=10**4)
    c.add_argument("--bits", type=int, default=256)
    c.add_argument("--out")
    c.add_argument("--gnuplot", help="write a gnuplot script for exponent vs height")
    c.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    c.add_argument("--plot", help="PNG of exponents and phi-products")
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    overrides = {}
    for attr, key in (("e_zeta", "e_zeta"), ("e_gap", "e_gap"), ("e_H", "e_H"), ("e_M1", "e_M1"), ("e_disk", "e_disk")):
        v = getattr(ns, attr, None)
        if v is not None:
            overrides[key] = v
    return RunConfig(
        command=ns.command,
        profile_name=getattr(ns, "profile", "scaled"),
        overrides=overrides or None,
        steps=getattr(ns, "steps", 6),
        seed=getattr(ns, "seed", 0),
        height_max=getattr(ns, "height_max", 1000),
        bits=getattr(ns, "bits", 256),
        input_path=getattr(ns, "input", None),
        output_path=getattr(ns, "out", None),
        plot_path=getattr(ns, "plot", None),
        threads=getattr(ns, "threads", 1),
    )


def dispatch(cfg: RunConfig, ns: Optional[argparse.Namespace] = None) -> int:
    cfg.validate()
    if cfg.command == "constants":
        return cmd_constants(cfg)
    if cfg.command == "construct":
        return cmd_construct(cfg)
    if cfg.command == "verify":
        return cmd_verify(cfg, getattr(ns, "lemma_samples", 0), getattr(ns, "lemma2_range", 0))
    if cfg.command == "scan":
        return cmd_scan(cfg)
    if cfg.command == "approx":
        return cmd_approx(cfg, getattr(ns, "alpha", None), getattr(ns, "fibonacci", False), getattr(ns, "gnuplot", None))
    raise UsageError(f"unknown command {cfg.command}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return dispatch(_config(ns), ns)
    except UsageError as exc:
        print(f"onesided {ns.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except cons.InadmissibleProfile as exc:
        print(f"onesided {ns.command}: inadmissible profile: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"onesided {ns.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ver.MalformedState as exc:
        print(f"onesided {ns.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
