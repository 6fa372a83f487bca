"""End-to-end report for one polynomial map.

Stages run in order: load, index_sequence, classify, respects,
standard, decompose, kobayashi.  Any exception inside a stage comes out as
StageError carrying the stage name; whatever was computed before the failure
is still written to report.json.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time

import numpy as np

from . import catalog
from .domains import random_interior
from .errors import InputError, PropertyViolation, RegimeViolation, StageError
from .modulimap import f_flat_classify, index_bound, index_sequence, respects_check
from .polys import PolyMatrixMap
from .rigidity import decompose, detect_standard, kobayashi_distance

SCHEMA = 1

DEFAULTS = {
    "map": None,
    "map_file": None,
    "map_json": None,
    "samples": 3,
    "pairs": 50,
    "points": 200,
    "kobayashi_pairs": 50,
    "figures": True,
}

CHECKS = ("z_tau", "q_mu", "sigma", "trivial_fits", "lines")


def load_config(path_or_dict):
    if isinstance(path_or_dict, dict):
        raw = dict(path_or_dict)
    else:
        try:
            with open(path_or_dict) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError("config must be a JSON object")
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    cfg = {**DEFAULTS, **raw}
    given = [k for k in ("map", "map_file", "map_json") if cfg[k] is not None]
    if len(given) != 1:
        raise InputError("config needs exactly one of 'map', 'map_file', 'map_json'")
    for key in ("samples", "pairs", "points", "kobayashi_pairs"):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise InputError(f"{key} must be a positive integer")
    return cfg


def build_map(cfg):
    if cfg["map"] is not None:
        return catalog.get(cfg["map"])
    if cfg["map_file"] is not None:
        return PolyMatrixMap.load(cfg["map_file"])
    return PolyMatrixMap.from_json(cfg["map_json"])


def write_atomic(path, text):
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


class _Stages:
    """Runs named stages, recording timings and wrapping errors."""

    def __init__(self, report):
        self.report = report

    def run(self, name, fn):
        t0 = time.perf_counter()
        try:
            return fn()
        except StageError:
            raise
        except Exception as exc:  # every failure leaves with its stage label
            self.report["error"] = {"stage": name, "type": type(exc).__name__, "message": str(exc)}
            raise StageError(name, exc) from exc
        finally:
            self.report["timings"][name] = round(time.perf_counter() - t0, 3)


def _pipeline(f, cfg, rng, report, stages):
    src = f.source
    report["map"] = {"name": f.name, "source": src.label(), "target": f.target.label(),
                     "degree": f.degree, "claimed_proper": f.claimed_proper}

    seq = stages.run("index_sequence", lambda: index_sequence(f, rng))
    report["index_sequence"] = seq.to_json()
    report["index_sequence"]["bound"] = index_bound(f.target)
    report["index_sequence"]["unit_steps"] = [str(x) for x in seq.unit_steps(f.target.kind)]

    def classify():
        out = {}
        for lv in seq.levels:
            if lv.denominator == 1:
                out[str(lv)] = f_flat_classify(f, lv, rng, pairs=cfg["pairs"]).to_json()
        return out

    report["classification"] = stages.run("classify", classify)

    def respects():
        return {str(lv): respects_check(f, lv, cfg["samples"], rng) for lv in seq.levels}

    report["respects"] = stages.run("respects", respects)

    std = stages.run("standard", lambda: detect_standard(f, rng))
    report["standard"] = std.to_json()

    def decomp():
        try:
            return decompose(f, rng, npoints=cfg["points"])
        except RegimeViolation as exc:
            report["decomposition"] = {"applicable": False, "reason": str(exc)}
            return None

    res = stages.run("decompose", decomp)
    if res is not None:
        report["decomposition"] = {"applicable": True, **res.to_json()}
        report["decomposition"]["F2_trivial"] = res.F2 is None

    def kobayashi():
        if res is None or src.kind != "I" or res.F1.target.kind != "I":
            return None
        d0, d1 = [], []
        for _ in range(cfg["kobayashi_pairs"]):
            Z1, Z2 = random_interior(src, rng), random_interior(src, rng)
            d0.append(kobayashi_distance(Z1, Z2))
            d1.append(kobayashi_distance(res.F1(Z1), res.F1(Z2)))
        return d0, d1

    dists = stages.run("kobayashi", kobayashi)
    if dists is not None:
        gap = float(np.max(np.abs(np.subtract(*dists))))
        report["kobayashi"] = {"pairs": len(dists[0]), "max_gap": gap, "source": dists[0], "image": dists[1]}
    return seq


def _verdict(report):
    fails = []
    for lv, rep in report.get("respects", {}).items():
        fails += [f"respects[{lv}].{k}" for k, ok in rep["passed"].items() if not ok]
    dec = report.get("decomposition", {})
    if dec.get("applicable") and dec["residuals"]["reassembly"] >= 1e-7:
        fails.append("decomposition.reassembly")
    kob = report.get("kobayashi")
    if kob and kob["max_gap"] >= 1e-6:
        fails.append("kobayashi")
    return fails


def _summary(report):
    lines = [f"bsd-lab report (schema {report['schema']}, seed {report['seed']})"]
    m = report.get("map")
    if m:
        lines.append(f"map: {m['name']}  {m['source']} -> {m['target']}  degree {m['degree']}")
    seq = report.get("index_sequence")
    if seq:
        pairs = ", ".join(f"i_{a} = {b}" for a, b in zip(seq["levels"], seq["values"]))
        lines.append(f"index sequence: {pairs}  (cap {seq['bound']}, unit steps at {seq['unit_steps'] or 'none'})")
    for lv, c in report.get("classification", {}).items():
        lines.append(f"f-flat_{lv}: {c['kind']}  votes {c['votes']}")
    for lv, rep in report.get("respects", {}).items():
        parts = []
        for k in CHECKS:
            n_ok = sum(x["ok"] for x in rep[k])
            parts.append(f"{k} {n_ok}/{len(rep[k])}")
        lines.append(f"respects level {lv}: " + ", ".join(parts))
    std = report.get("standard")
    if std:
        lines.append(f"standard embedding: {std['standard']} ({std['reason']})")
    dec = report.get("decomposition")
    if dec:
        if dec["applicable"]:
            r = dec["residuals"]
            lines.append(f"decomposition: regime {dec['regime']}, reassembly {r['reassembly']:.2e} "
                         f"over {r['points']} points, F2 {'trivial' if dec['F2_trivial'] else 'present'}"
                         + (", after target transpose" if dec["post_transpose"] else ""))
        else:
            lines.append(f"decomposition: not applicable ({dec['reason']})")
    kob = report.get("kobayashi")
    if kob:
        lines.append(f"Kobayashi distances through F1: max gap {kob['max_gap']:.2e} over {kob['pairs']} pairs")
    if "error" in report:
        e = report["error"]
        lines.append(f"ERROR in stage {e['stage']}: {e['type']}: {e['message']}")
    lines.append("verdict: " + ("PASS" if report.get("passed") else "FAIL"))
    for item in report.get("failures", []):
        lines.append(f"  failed: {item}")
    return "\n".join(lines) + "\n"


def _write_outputs(report, out_dir, seq, want_figures):
    from . import plotting

    files = {}
    write_atomic(os.path.join(out_dir, "summary.txt"), _summary(report))
    files["summary"] = "summary.txt"
    if seq is not None:
        rows = [[str(lv), v, seq.k0.get(lv, "")] for lv, v in zip(seq.levels, seq.values)]
        write_atomic(os.path.join(out_dir, "index_sequence.csv"), _csv_text(["level", "index", "k0"], rows))
        files["index_csv"] = "index_sequence.csv"
    rows = []
    for lv, rep in report.get("respects", {}).items():
        for k in CHECKS:
            for j, item in enumerate(rep[k]):
                rows.append([lv, k, j, int(item["ok"]), item.get("s", ""), item.get("error", "")])
    if rows:
        write_atomic(os.path.join(out_dir, "checks.csv"),
                     _csv_text(["level", "check", "sample", "ok", "lower_or_upper_level", "error"], rows))
        files["checks_csv"] = "checks.csv"
    if want_figures:
        title = report.get("map", {}).get("name", "")
        if seq is not None:
            plotting.index_figure(seq.levels, seq.values, report["index_sequence"]["bound"],
                                  os.path.join(out_dir, "index_sequence.png"), title)
            files["index_figure"] = "index_sequence.png"
        if report.get("respects"):
            counts = {k: [0, 0] for k in CHECKS}
            for rep in report["respects"].values():
                for k in CHECKS:
                    for item in rep[k]:
                        counts[k][0 if item["ok"] else 1] += 1
            plotting.checks_figure(counts, os.path.join(out_dir, "checks.png"), title)
            files["checks_figure"] = "checks.png"
        if report.get("kobayashi"):
            plotting.distance_figure(report["kobayashi"]["source"], report["kobayashi"]["image"],
                                     os.path.join(out_dir, "kobayashi.png"), title)
            files["kobayashi_figure"] = "kobayashi.png"
    report["files"] = files
    write_atomic(os.path.join(out_dir, "report.json"), json.dumps(report, indent=2, default=str) + "\n")


def run_report(config, out_dir, seed=0):
    """Run the pipeline and write report.json, CSVs, summary.txt and figures.

    Returns the report dict.  Raises StageError (after writing the partial
    report) when a stage fails.
    """
    os.makedirs(out_dir, exist_ok=True)
    report = {"schema": SCHEMA, "seed": seed, "timings": {}}
    stages = _Stages(report)
    rng = np.random.default_rng(seed)
    cfg, seq, failure = None, None, None
    try:
        cfg = stages.run("config", lambda: load_config(config))
        report["config"] = {k: v for k, v in cfg.items() if k != "map_json"}
        f = stages.run("load", lambda: build_map(cfg))
        seq = _pipeline(f, cfg, rng, report, stages)
    except StageError as exc:
        failure = exc
    report["failures"] = _verdict(report) + ([f"stage {failure.stage}"] if failure else [])
    report["passed"] = not report["failures"]
    # timings vary between runs; keep them out of the deterministic payload
    timings = report.pop("timings")
    _write_outputs(report, out_dir, seq, bool(cfg and cfg["figures"]))
    write_atomic(os.path.join(out_dir, "timings.json"), json.dumps(timings, indent=2) + "\n")
    report["timings"] = timings
    if failure is not None:
        raise failure
    return report


def exit_code(exc):
    """CLI exit code: 2 for property violations, 3 for bad input, 1 otherwise."""
    cause = exc.cause if isinstance(exc, StageError) else exc
    if isinstance(cause, PropertyViolation):
        return 2
    if isinstance(cause, InputError):
        return 3
    return 1
