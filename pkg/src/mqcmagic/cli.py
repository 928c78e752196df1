"""Command-line surface: pattern execution, compilation, QFT scans, potential
search, estimation, and one-command replication of the reference figures.

Every leaf subcommand takes the same plumbing flags::

    --seed N          root seed; all randomness flows through named substreams
    --threads T       worker threads ("auto" or a count); never changes results
    --format json|csv output document format (structural outputs are JSON-only)
    --out PATH        write the document to PATH instead of stdout

With a fixed seed the emitted bytes are identical across runs and across
thread counts. Exit codes: 0 success, 2 malformed input, 3 flagged estimator
failure, 4 resource limit.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .accounting import (
    compare_arbitrary_vs_standard,
    ledger,
    potential_search,
    report_to_csv,
    report_to_json,
)
from .compiler import circuit_from_json, circuit_to_pattern, invested_magic
from .estimator import (
    bootstrap_stderr,
    estimate_m2,
    estimate_to_json,
    scaling_study,
    shots_from_csv,
)
from .magic import sre
from .patterns import (
    MeasurementCommand,
    Pattern,
    builtin,
    enumerate_branches,
    pattern_from_json,
    pattern_to_json,
    run_pattern,
)
from .qft import fidelity_table, fidelity_to_csv, profile_to_csv, qft_profile, scaling_fit, scaling_to_csv
from .states import cluster_state
from .util import EXIT_CODES, InputError, json_dumps, resolve_threads, spawn_rng

__all__ = ["RunConfig", "parse_inputs", "main"]

#: Default grid for the error-scaling replication: shots per basis ramp
#: 4 -> 64 at 81 bases, the 4-tuple-starved regime with the steep slope.
FIG9_GRID = (324, 648, 1296, 2592, 5184)
FIG9_REPEATS = 10

#: Default (theta, phi) surface for the arbitrary-vs-standard comparison.
FIG10_THETAS = 13
FIG10_PHIS = 16


@dataclass(frozen=True)
class RunConfig:
    """Plumbing shared by every subcommand.

    The same seed and inputs produce bit-identical output documents at any
    thread count.
    """

    seed: int
    output_format: str
    threads: int | str
    out: str | None

    def __post_init__(self):
        if self.output_format not in ("json", "csv"):
            raise InputError(f"output format must be json or csv, got {self.output_format!r}")
        try:
            resolve_threads(self.threads)
        except InputError:
            raise
        except ValueError:
            raise InputError(
                f'--threads must be "auto" or a positive integer, got {self.threads!r}'
            ) from None


def parse_inputs(path: str, kind: str):
    """Read and validate a pattern/circuit JSON or shots CSV file.

    Parse errors carry the offending location (row, command index, or field).
    """
    readers = {"pattern": pattern_from_json, "circuit": circuit_from_json, "shots": shots_from_csv}
    if kind not in readers:
        raise InputError(f"input kind must be one of {sorted(readers)}, got {kind!r}")
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return readers[kind](text)


def _resolve_pattern(source: str) -> Pattern:
    """A pattern JSON path, or the name of a parameterless builtin pattern."""
    if Path(source).is_file():
        return parse_inputs(source, "pattern")
    try:
        return builtin(source)
    except InputError as exc:
        raise InputError(f"{source!r} is neither a readable file nor a builtin pattern ({exc})") from None


def _csv(header: str, rows) -> str:
    return "\n".join([header, *rows]) + "\n"


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


# Subcommand handlers ---------------------------------------------------------


def _cmd_pattern_run(args, cfg: RunConfig) -> str:
    p = _resolve_pattern(args.source)
    if args.outcomes is not None:
        if set(args.outcomes) - {"0", "1"}:
            raise InputError(f"--outcomes must be a bit string, got {args.outcomes!r}")
        run = run_pattern(p, policy="branch", outcomes=[int(b) for b in args.outcomes])
    else:
        run = run_pattern(p, policy="sample", rng=spawn_rng(cfg.seed, "pattern-run"))
    if cfg.output_format == "json":
        return json_dumps(
            {
                "outcomes": list(run.outcomes),
                "branch_probability": run.branch_prob,
                "output_qubits": list(p.output),
                "reserved_trace_t": [v.t_units for v in run.reserved_trace],
                "correction_trace_t": [v.t_units for v in run.correction_trace],
                "final_state": [[float(a.real), float(a.imag)] for a in run.final_state.amps],
            }
        )
    rows = []
    m_i = c_i = 0
    for step, cmd in enumerate(p.commands):
        if isinstance(cmd, MeasurementCommand):
            label = cmd.label
            value = run.reserved_trace[m_i].t_units
            m_i += 1
        else:
            label = f"{cmd.op}{cmd.qubit}"
            value = run.correction_trace[c_i].t_units
            c_i += 1
        rows.append(f"{step},{label},{_fmt(value)}")
    return _csv("step,event,reserved_t", rows)


def _branch_final_t(run) -> float:
    trace = run.correction_trace or run.reserved_trace
    if trace:
        return trace[-1].t_units
    return sre(run.final_state, 2.0).t_units


def _cmd_pattern_branches(args, cfg: RunConfig) -> str:
    p = _resolve_pattern(args.source)
    runs = enumerate_branches(p, threads=cfg.threads)
    bits = ["".join(str(b) for b in r.outcomes) for r in runs]
    if cfg.output_format == "json":
        return json_dumps(
            {
                "n_branches": len(runs),
                "branches": [
                    {
                        "branch": s,
                        "probability": r.branch_prob,
                        "fid0": r.fid0,
                        "final_t": _branch_final_t(r),
                    }
                    for s, r in zip(bits, runs)
                ],
            }
        )
    rows = [
        f"{s},{_fmt(r.branch_prob)},{_fmt(r.fid0)},{_fmt(_branch_final_t(r))}"
        for s, r in zip(bits, runs)
    ]
    return _csv("branch,probability,fid0,final_t", rows)


def _cmd_compile(args, cfg: RunConfig) -> str:
    return pattern_to_json(circuit_to_pattern(parse_inputs(args.circuit, "circuit")))


def _cmd_imr(args, cfg: RunConfig) -> str:
    rep = invested_magic(parse_inputs(args.circuit, "circuit"))
    if cfg.output_format == "json":
        return json_dumps(
            {
                "alpha": rep.alpha,
                "total_bits": rep.total.bits,
                "total_t": rep.total.t_units,
                "n_j": rep.n_j,
                "n_cz": rep.n_cz,
                "nonclifford": rep.nonclifford,
                "angles": list(rep.angles),
                "contributions_t": [v.t_units for v in rep.contributions],
            }
        )
    rows = [
        f"{i},{a!r},{_fmt(v.t_units)}"
        for i, (a, v) in enumerate(zip(rep.angles, rep.contributions))
    ]
    return _csv("index,angle,t_units", rows)


def _cmd_qft_profile(args, cfg: RunConfig) -> str:
    prof = qft_profile(args.n, args.cutoff)
    if cfg.output_format == "csv":
        return profile_to_csv(prof)
    return json_dumps(
        {
            "n": prof.n,
            "cutoff": args.cutoff if args.cutoff is not None else prof.n,
            "j_count": prof.j_count,
            "total_bits": prof.total.bits,
            "total_t": prof.total.t_units,
            "per_frequency": [
                {"k": k, "count": count, "per_gate_t": per.t_units, "subtotal_t": sub.t_units}
                for k, count, per, sub in prof.per_frequency
            ],
        }
    )


def _cmd_qft_fit(args, cfg: RunConfig) -> str:
    fit = scaling_fit(args.lo, args.hi)
    if cfg.output_format == "csv":
        row = (
            f"{fit.slope!r},{fit.intercept!r},{fit.n_range[0]},{fit.n_range[1]},"
            f"{fit.residual!r},{fit.analytic_slope!r},{fit.analytic_intercept!r}"
        )
        return _csv("slope_t,intercept_t,n_lo,n_hi,residual_t,analytic_slope_t,analytic_intercept_t", [row])
    return json_dumps(
        {
            "slope_t": fit.slope,
            "intercept_t": fit.intercept,
            "n_lo": fit.n_range[0],
            "n_hi": fit.n_range[1],
            "residual_t": fit.residual,
            "analytic_slope_t": fit.analytic_slope,
            "analytic_intercept_t": fit.analytic_intercept,
        }
    )


def _cmd_qft_fidelity(args, cfg: RunConfig) -> str:
    cutoffs = _int_list(args.cutoffs, "--cutoffs")
    rows = fidelity_table(args.n, cutoffs, args.trials, cfg.seed, threads=cfg.threads)
    if cfg.output_format == "csv":
        return fidelity_to_csv(rows)
    return json_dumps(
        {
            "trials": args.trials,
            "rows": [
                {"n": n, "m": m, "min_fidelity": lo, "mean_fidelity": mean}
                for n, m, lo, mean in rows
            ],
        }
    )


def _cmd_potential(args, cfg: RunConfig) -> str:
    p = _resolve_pattern(args.source)
    measured = _int_list(args.measured, "--measured")
    res = potential_search(
        p.graph,
        measured,
        opts={"seed": cfg.seed, "grid_seeds": args.grid_seeds, "restarts": args.restarts},
        threads=cfg.threads,
    )
    if cfg.output_format == "json":
        return json_dumps(
            {
                "value_bits": res.value.bits,
                "value_t": res.value.t_units,
                "converged": res.converged,
                "argmax": [{"qubit": q, "theta": t, "phi": f} for q, t, f in res.argmax],
                "local_frame": [
                    {"qubit": q, "a": a, "b": b, "c": c} for q, a, b, c in res.local_frame
                ],
                "restart_trace_t": list(res.optimizer_trace),
            }
        )
    rows = [f"{i},{_fmt(v)}" for i, v in enumerate(res.optimizer_trace)]
    return _csv("restart,value_t", rows)


def _cmd_estimate(args, cfg: RunConfig) -> str:
    records = parse_inputs(args.shots, "shots")
    est = estimate_m2(records, threads=cfg.threads)
    if args.resamples:
        se = bootstrap_stderr(
            records, args.resamples, spawn_rng(cfg.seed, "estimate-bootstrap"), threads=cfg.threads
        )
        est = dataclasses.replace(est, stderr=se)
    if cfg.output_format == "json":
        return estimate_to_json(est)
    row = (
        f"{est.m2.bits!r},{est.m2.t_units!r},{est.purity!r},{_fmt(est.stderr)},"
        f"{est.n_bases},{est.shots_per_basis}"
    )
    return _csv("m2_bits,m2_T,purity,stderr_T,n_bases,shots_per_basis", [row])


def _cmd_replicate(args, cfg: RunConfig) -> str:
    if args.target in ("fig5", "fig6"):
        rep = ledger(builtin("t_state_1d" if args.target == "fig5" else "cs_box"))
        return report_to_csv(rep) if cfg.output_format == "csv" else report_to_json(rep)
    if args.target == "fig4e":
        ns = range(2, 65)
        if cfg.output_format == "csv":
            return scaling_to_csv(ns)
        fit = scaling_fit(8, 32)
        return json_dumps(
            {
                "rows": [{"n": n, "total_t": qft_profile(n).total.t_units} for n in ns],
                "fit": {"n_lo": 8, "n_hi": 32, "slope_t": fit.slope, "intercept_t": fit.intercept},
            }
        )
    if args.target == "fig9":
        res = scaling_study(
            cluster_state(),
            FIG9_GRID,
            repeats=FIG9_REPEATS,
            rng=spawn_rng(cfg.seed, "fig9"),
            threads=cfg.threads,
        )
        if cfg.output_format == "csv":
            return _csv(
                "n_shots,mean_abs_error_t", [f"{n},{_fmt(e)}" for n, e in res.points]
            )
        return json_dumps(
            {
                "points": [{"n_shots": n, "mean_abs_error_t": e} for n, e in res.points],
                "slope": res.slope,
                # log-log slope is undefined next to an exactly-zero error
                "local_slopes": [s if math.isfinite(s) else None for s in res.local_slopes],
            }
        )
    # fig10: arbitrary-vs-standard invested surface
    thetas = np.linspace(0.0, math.pi / 2.0, FIG10_THETAS)
    phis = np.linspace(0.0, 2.0 * math.pi, FIG10_PHIS, endpoint=False)
    targets = [(float(t), float(f)) for t in thetas for f in phis]
    rows = compare_arbitrary_vs_standard(targets=targets)
    if cfg.output_format == "csv":
        return _csv(
            "theta,phi,arbitrary_t,standard_t,overhead_t",
            [
                f"{t!r},{f!r},{_fmt(a.t_units)},{_fmt(s.t_units)},{_fmt(d.t_units)}"
                for t, f, a, s, d in rows
            ],
        )
    return json_dumps(
        {
            "rows": [
                {
                    "theta": t,
                    "phi": f,
                    "arbitrary_t": a.t_units,
                    "standard_t": s.t_units,
                    "overhead_t": d.t_units,
                }
                for t, f, a, s, d in rows
            ]
        }
    )


# Wiring ----------------------------------------------------------------------


def _int_list(text: str, flag: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise InputError(f"{flag} expects comma-separated integers, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    common.add_argument("--threads", default="auto", help='worker threads ("auto" or a count)')
    common.add_argument("--format", choices=("json", "csv"), default="json", help="output format")
    common.add_argument("--out", default=None, help="write the document here instead of stdout")

    parser = argparse.ArgumentParser(
        prog="mqcmagic",
        description="Magic-resource accounting for measurement-based quantum computation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pat = sub.add_parser("pattern", help="execute measurement patterns")
    pat_sub = pat.add_subparsers(dest="subcommand", required=True)
    run_p = pat_sub.add_parser("run", parents=[common], help="run one branch of a pattern")
    run_p.add_argument("source", help="pattern JSON path or builtin name (e.g. t_state_1d, cs_box)")
    run_p.add_argument("--outcomes", default=None, help="force this outcome bit string instead of sampling")
    run_p.set_defaults(handler=_cmd_pattern_run)
    br_p = pat_sub.add_parser("branches", parents=[common], help="enumerate all outcome branches")
    br_p.add_argument("source", help="pattern JSON path or builtin name")
    br_p.set_defaults(handler=_cmd_pattern_branches)

    comp = sub.add_parser("compile", parents=[common], help="compile a circuit to a pattern (JSON out)")
    comp.add_argument("circuit", help="circuit JSON path")
    comp.set_defaults(handler=_cmd_compile)

    imr = sub.add_parser("imr", parents=[common], help="invested magic of a circuit's measurements")
    imr.add_argument("circuit", help="circuit JSON path")
    imr.set_defaults(handler=_cmd_imr)

    qft = sub.add_parser("qft", help="transform-ladder resource scans")
    qft_sub = qft.add_subparsers(dest="subcommand", required=True)
    prof = qft_sub.add_parser("profile", parents=[common], help="per-frequency invested magic")
    prof.add_argument("--n", type=int, required=True, help="ladder width in qubits")
    prof.add_argument("--cutoff", type=int, default=None, help="drop controlled phases above this order")
    prof.set_defaults(handler=_cmd_qft_profile)
    fit = qft_sub.add_parser("fit", parents=[common], help="least-squares line through the totals")
    fit.add_argument("--lo", type=int, required=True, help="first ladder width")
    fit.add_argument("--hi", type=int, required=True, help="last ladder width")
    fit.set_defaults(handler=_cmd_qft_fit)
    fid = qft_sub.add_parser("fidelity", parents=[common], help="truncation fidelity table")
    fid.add_argument("--n", type=int, required=True, help="ladder width in qubits")
    fid.add_argument("--cutoffs", required=True, help="comma-separated cutoff orders")
    fid.add_argument("--trials", type=int, default=50, help="random inputs per cutoff")
    fid.set_defaults(handler=_cmd_qft_fidelity)

    pot = sub.add_parser("potential", parents=[common], help="maximum reserved magic over measurement choices")
    pot.add_argument("source", help="pattern JSON path or builtin name (its graph is searched)")
    pot.add_argument("--measured", required=True, help="comma-separated qubits to measure")
    pot.add_argument("--grid-seeds", type=int, default=2048, help="coarse grid candidates")
    pot.add_argument("--restarts", type=int, default=8, help="simplex refinements")
    pot.set_defaults(handler=_cmd_potential)

    est = sub.add_parser("estimate", parents=[common], help="M2/purity from randomized-measurement shots")
    est.add_argument("shots", help='shots CSV path (header "basis,outcome")')
    est.add_argument("--resamples", type=int, default=200, help="bootstrap resamples (0 disables)")
    est.set_defaults(handler=_cmd_estimate)

    rep = sub.add_parser("replicate", parents=[common], help="emit the reference figure data")
    rep.add_argument("target", choices=("fig5", "fig6", "fig4e", "fig9", "fig10"))
    rep.set_defaults(handler=_cmd_replicate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(
            seed=args.seed, output_format=args.format, threads=args.threads, out=args.out
        )
        text = args.handler(args, cfg)
        if cfg.out is None:
            sys.stdout.write(text)
        else:
            Path(cfg.out).write_text(text)
    except tuple(EXIT_CODES) as exc:
        print(f"error: {exc}", file=sys.stderr)
        for kind, code in EXIT_CODES.items():
            if isinstance(exc, kind):
                return code
        return 1  # unreachable; keeps the mapping honest
    return 0


if __name__ == "__main__":
    sys.exit(main())
