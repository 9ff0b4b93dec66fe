"""Command line entry point: ``run``, ``table``, ``replay`` and ``presets``.

Exit codes: 0 success, 2 bad input (parse error, missing columns, version
mismatch), 3 a run aborted on a protocol or adversary violation, 4 replay
divergence.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from . import config as cfgmod
from . import metrics, presets, simnet

log = logging.getLogger("centroid_agreement")

CSV_COLUMNS = (
    "run_id", "kind", "schedule", "n", "t", "f", "d", "epsilon", "adversary", "seed", "rounds",
    "max_pairwise_final_dist", "true_centroid", "opt_radius", "approx_ratio", "eps_agreement",
    "weak_valid", "strong_valid", "box_valid", "convex_valid",
)
VALIDITY_COLUMNS = ("weak_valid", "strong_valid", "box_valid", "convex_valid")

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_DIVERGED = 0, 2, 3, 4


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(float(x))


def csv_row(tr: simnet.Transcript) -> dict:
    sc = tr.scenario
    rep = metrics.report(tr)
    agree = {True: "true", False: "false", None: "n/a"}[rep.eps_agreement]
    return {
        "run_id": tr.run_id,
        "kind": sc.kind.value,
        "schedule": sc.schedule.value,
        "n": sc.n, "t": sc.t, "f": sc.f, "d": sc.d,
        "epsilon": _num(sc.epsilon),
        "adversary": sc.adversary.tag,
        "seed": sc.seed,
        "rounds": rep.rounds_used,
        "max_pairwise_final_dist": _num(rep.max_pairwise_final_dist),
        "true_centroid": ";".join(_num(x) for x in rep.true_centroid),
        "opt_radius": _num(rep.opt_radius),
        "approx_ratio": _num(rep.approx_ratio),
        "eps_agreement": agree,
        **{col: getattr(rep, col).value for col in VALIDITY_COLUMNS},
    }


def execute(plan: cfgmod.PlannedRun) -> tuple[dict, str, str | None]:
    """Run one planned scenario; returns its CSV row, transcript text and abort reason."""
    tr = simnet.run(plan.scenario, plan.run_id)
    return csv_row(tr), tr.to_jsonl(), tr.aborted


# --------------------------------------------------------------------- verbs


def cmd_run(args) -> int:
    try:
        cfg = cfgmod.load(args.config)
        plans = cfgmod.expand(cfg, seed_base=args.seed_base)
    except (cfgmod.ConfigError, ValueError, KeyError) as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = args.out or cfg.experiment.get("out", "results.csv")
    transcripts = args.transcripts or cfg.experiment.get("transcripts")
    jobs = args.jobs or int(cfg.experiment.get("jobs", 1))

    log.info("running %d scenario(s) with %d job(s)", len(plans), jobs)
    if jobs > 1 and len(plans) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(execute, plans, chunksize=max(1, len(plans) // (4 * jobs))))
    else:
        results = [execute(p) for p in plans]

    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row, _, _ in results:
            writer.writerow(row)
    if transcripts:
        with open(transcripts, "w", encoding="utf-8") as fh:
            for _, text, _ in results:
                fh.write(text)

    bad = [(row["run_id"], why) for row, _, why in results if why]
    for run_id, why in bad:
        print(f"{run_id}: {why}", file=sys.stderr)
    print(f"wrote {len(results)} row(s) to {out}")
    return EXIT_VIOLATION if bad else EXIT_OK


def _merge_validity(values) -> str:
    values = set(values)
    if "violated" in values:
        return "violated"
    if "holds" in values:
        return "holds"
    return "n/a"


def summarize(rows: list[dict]) -> list[str]:
    groups: dict[tuple[str, str], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["kind"], row["schedule"]), []).append(row)
    if not groups:
        return []
    head = f"{'kind':<18} {'schedule':<12} {'runs':>5} {'max_ratio':>10} {'mean_rounds':>11}  " \
           + " ".join(f"{c.split('_')[0]:>8}" for c in VALIDITY_COLUMNS)
    lines = [head]
    for (kind, sched), grp in sorted(groups.items()):
        ratios = [float(r["approx_ratio"]) for r in grp]
        finite = [x for x in ratios if not math.isnan(x)]
        worst = max(finite) if finite else math.nan
        mean_rounds = sum(int(r["rounds"]) for r in grp) / len(grp)
        validity = " ".join(f"{_merge_validity(r[c] for r in grp):>8}" for c in VALIDITY_COLUMNS)
        lines.append(
            f"{kind:<18} {sched:<12} {len(grp):>5} {worst:>10.4g} {mean_rounds:>11.2f}  {validity}"
        )
    return lines


def cmd_table(args) -> int:
    try:
        with open(args.results, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            fields = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INPUT
    if fields:
        missing = [c for c in ("kind", "schedule", "rounds", "approx_ratio", *VALIDITY_COLUMNS)
                   if c not in fields]
        if missing:
            print(f"{args.results}: missing columns {', '.join(missing)}", file=sys.stderr)
            return EXIT_INPUT
    for line in summarize(rows):
        print(line)
    return EXIT_OK


def split_transcripts(text: str) -> list[str]:
    """Split a JSONL file holding several runs at their header lines."""
    chunks, cur = [], []
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.lstrip().startswith('{"type": "header"') and cur:
            chunks.append("\n".join(cur))
            cur = []
        cur.append(line)
    if cur:
        chunks.append("\n".join(cur))
    return chunks


def cmd_replay(args) -> int:
    try:
        with open(args.transcript, encoding="utf-8") as fh:
            chunks = split_transcripts(fh.read())
        parsed = [simnet.Transcript.from_jsonl(c) for c in chunks]
    except (OSError, ValueError, KeyError) as exc:
        print(f"{args.transcript}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    for tr, version in parsed:
        if version != __version__:
            print(f"{tr.run_id}: written by version {version!r}, this is {__version__}", file=sys.stderr)
            return EXIT_INPUT
    for tr, _ in parsed:
        diff = simnet.replay(tr)
        if diff is not None:
            print(f"{tr.run_id}: diverged at round {diff[0]}, node {diff[1]}", file=sys.stderr)
            return EXIT_DIVERGED
    print(f"replayed {len(parsed)} transcript(s) bit-exactly")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in presets.PRESETS:
        print(f"{name:<20} {presets.PRESET_NOTES[name]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="centroid-agreement", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="execute every run an experiment config expands to")
    r.add_argument("--config", required=True, metavar="PATH")
    r.add_argument("--out", metavar="PATH", help="results CSV (default: config value or results.csv)")
    r.add_argument("--transcripts", metavar="PATH", help="write JSONL transcripts here")
    r.add_argument("--jobs", type=int, default=0, metavar="N", help="worker processes across runs")
    r.add_argument("--seed-base", type=int, default=0, metavar="K", help="offset added to every seed")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("table", help="summarize a results CSV per protocol kind")
    t.add_argument("results", metavar="CSV")
    t.set_defaults(func=cmd_table)

    rp = sub.add_parser("replay", help="re-execute transcripts and compare bit-exactly")
    rp.add_argument("transcript", metavar="JSONL")
    rp.set_defaults(func=cmd_replay)

    ps = sub.add_parser("presets", help="list built-in scenarios")
    ps.set_defaults(func=cmd_presets)
    return p


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("SIM_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
