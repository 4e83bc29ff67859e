"""Command-line front end.

Exit status: 0 on success, 1 for invalid input (usage, unknown ids, bad
files or parameters), 2 when a run fails at runtime.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import AlignmentError, ConfigurationError, ParseError
from .harness.runner import render_table, run_many, run_scenario, software_version, write_reports
from .harness.scenarios import (enumerate_paper_scenarios, fault_scenarios, find_scenario,
                                normal_scenarios, paper_scale)
from .io import load_params, read_waveform_csv, write_waveform_csv
from .twin import DigitalTwin


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common_run(p, trials_default=None):
    p.add_argument("--trials", type=int, default=trials_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("reports"))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--noise-mode", choices=("gain", "sample"), default=None)
    p.add_argument("--paper-scale", action="store_true",
                   help="up to 17000 trials per scenario with 99%% confidence stopping")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mvtwin", description="MV-side digital twin of a distribution transformer")
    ap.add_argument("--version", action="version", version=software_version())
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run-scenario", help="run one scenario by id")
    p.add_argument("--id", required=True)
    p.add_argument("--confidence", type=float, default=None,
                   help="stop once every mean has this confidence at 1%% relative half-width")
    _common_run(p)

    _common_run(sub.add_parser("run-matrix", help="run the 24 normal-operation scenarios"))
    _common_run(sub.add_parser("run-faults", help="run the 72 fault scenarios"))

    p = sub.add_parser("filtering-study", help="Bode and spectrum comparison")
    p.add_argument("--params", default="sim_50kva")
    p.add_argument("--fs", type=float, default=30_000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("reports"))

    p = sub.add_parser("twin-file", help="run an LV recording through the twin")
    p.add_argument("--lv", type=Path, required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--fs", type=float, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("field-compare", help="score the twin against an MV recording")
    p.add_argument("--lv", type=Path, required=True)
    p.add_argument("--mv", type=Path, required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--out", type=Path, default=None)

    sub.add_parser("list-scenarios", help="print the 96 catalogue ids")
    return ap


def _tune(cfgs, args):
    out = []
    for c in cfgs:
        kw = {"seed": args.seed}
        if args.noise_mode:
            kw["noise_mode"] = args.noise_mode
        if args.trials is not None:
            kw["trials"] = args.trials
        c = replace(c, **kw)
        out.append(paper_scale(c) if args.paper_scale else c)
    return out


def _progress(rep):
    print(f"done {rep.scenario_id} ({rep.provenance['trials']} trials)", file=sys.stderr)


def _cmd_run_scenario(args) -> int:
    try:
        cfg = find_scenario(args.id)
    except KeyError:
        raise UsageError(f"unknown scenario id {args.id!r} (see list-scenarios)") from None
    cfg = _tune([cfg], args)[0]
    if args.confidence is not None:
        cfg = replace(cfg, confidence=args.confidence)
    rep = run_scenario(cfg, workers=args.workers)
    write_reports([rep], args.out, cfg.id)
    print(render_table([rep]))
    return 0


def _cmd_run_set(cfgs, name, args) -> int:
    reps = run_many(_tune(cfgs, args), workers=args.workers, progress=_progress)
    write_reports(reps, args.out, name)
    print(render_table(reps))
    return 0


def _cmd_filtering(args) -> int:
    from .harness.studies import filtering_study

    res = filtering_study(load_params(args.params), fs=args.fs, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / "bode.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["load", "circuit", "freq", "voltage_db", "voltage_deg", "current_db",
                    "current_deg"])
        for load, tables in res.bode.items():
            for name, tb in tables.items():
                for k, f in enumerate(tb.freqs):
                    w.writerow([load, name, f, tb.voltage_db[k], tb.voltage_phase[k],
                                tb.current_db[k], tb.current_phase[k]])
    with open(args.out / "harmonics.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(res.harmonics[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(res.harmonics)
    (args.out / "filtering.provenance.json").write_text(json.dumps(
        {"params": args.params, "fs": args.fs, "seed": args.seed, "dt": 1e-6,
         "version": software_version()}, indent=2) + "\n")
    for row in res.zoom():
        print(f"h{row['order']:>2}  V ref {row['ref_u']:10.3f}  twin {row['twin_u']:10.3f}  "
              f"I ref {row['ref_i']:8.5f}  twin {row['twin_i']:8.5f}")
    return 0


def _cmd_twin_file(args) -> int:
    params = load_params(args.params)
    ch = read_waveform_csv(args.lv)
    rate = next(iter(ch.values())).fs
    if abs(rate - args.fs) > 1e-9 * args.fs:
        raise ConfigurationError(f"--fs {args.fs:g} does not match file rate {rate:g}")
    missing = [c for c in ("uA", "uB", "uC", "iA", "iB", "iC") if c not in ch]
    if missing:
        raise ParseError(f"twin input needs all six channels, missing {missing}")
    import numpy as np

    u = np.stack([ch[c].samples for c in ("uA", "uB", "uC")])
    i = np.stack([ch[c].samples for c in ("iA", "iB", "iC")])
    frame, _ = DigitalTwin(params, rate).process(u, i)
    t0 = ch["uA"].t0
    out = {f"u{p}": frame.u[k] for k, p in enumerate("ABC")}
    out.update({f"i{p}": frame.i[k] for k, p in enumerate("ABC")})
    write_waveform_csv(args.out, out, fs=rate, t0=t0, meta={
        "side": "MV", "scenario_id": f"twin-file:{args.lv.name}", "params": args.params,
        "vector_group": params.vector_group,
        "tap_ratio": params.tap_ratio, "seed": "none", "dt": 1.0 / rate,
        "version": software_version()})
    return 0


def _cmd_field_compare(args) -> int:
    from .harness.studies import field_compare

    params = load_params(args.params)
    rep = field_compare(read_waveform_csv(args.lv), read_waveform_csv(args.mv), params, args.fs)
    print(render_table([rep]))
    if args.out:
        write_reports([rep], args.out, "field_compare")
    return 0


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cmd = args.command
        if cmd == "list-scenarios":
            for c in enumerate_paper_scenarios():
                print(c.id)
            return 0
        if cmd == "run-scenario":
            return _cmd_run_scenario(args)
        if cmd == "run-matrix":
            return _cmd_run_set(normal_scenarios(), "matrix", args)
        if cmd == "run-faults":
            return _cmd_run_set(fault_scenarios(), "faults", args)
        if cmd == "filtering-study":
            return _cmd_filtering(args)
        if cmd == "twin-file":
            return _cmd_twin_file(args)
        if cmd == "field-compare":
            return _cmd_field_compare(args)
        raise UsageError(f"unknown command {cmd!r}")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ParseError, ConfigurationError, AlignmentError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
