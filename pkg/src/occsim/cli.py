"""Command-line front end: ``occsim {project,rank,rbo,validate,synth}``.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import hashlib
import logging
import os
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .crosswalk import Crosswalk, aggregate_to_isco, load_crosswalk
from .errors import DataError, ValidationError
from .fixtures import synthetic_taxonomy
from .graph import Taxonomy, aggregate_blocks
from .ingest import (
    TaxonomyFiles,
    load_external_rankings,
    load_taxonomy,
    load_transitions,
    write_rankings,
    write_taxonomy,
    write_transitions,
)
from .projections import Measure, SimilarityMatrix, project, rank_all, rank_row
from .rbo import RboConfig, rbo_distribution, write_histogram
from .report import plot_density, write_json, write_validation_report
from .validation import PowerLink, ValidationConfig, evaluate, generate_transitions

log = logging.getLogger("occsim")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _measures(text: str) -> list[Measure]:
    out = []
    for name in (s.strip() for s in text.split(",")):
        if not name:
            continue
        try:
            out.append(Measure(name))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"unknown measure {name!r} (choose from {', '.join(m.value for m in Measure)})"
            ) from None
    if not out:
        raise argparse.ArgumentTypeError("no measure given")
    return out


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file supplying defaults for any flag")
    common.add_argument("--taxonomy-dir", type=Path, help="directory with the four taxonomy CSVs")
    common.add_argument("--measures", type=_measures, default=_measures("jacc"),
                        help="comma-separated measure ids")
    common.add_argument("--workers", type=_positive_int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, help="output root (default $OCCSIM_OUT or ./runs)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="occsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"occsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", parents=[common], help="compute similarity matrices")
    p.add_argument("--no-bin", action="store_true", help="skip the binary matrix cache")

    p = sub.add_parser("rank", parents=[common], help="top-k similar occupations")
    p.add_argument("--source", action="append", default=[], help="occupation id or exact label")
    p.add_argument("--top-k", type=int, default=7)
    p.add_argument("--all-sources", action="store_true", help="rank every occupation")

    p = sub.add_parser("rbo", parents=[common], help="RBO against external rankings")
    p.add_argument("--rankings", type=Path, action="append", default=[])
    p.add_argument("--p", type=float, default=0.9)
    p.add_argument("--depth", type=_positive_int, default=None)
    p.add_argument("--bins", type=_positive_int, default=50)

    p = sub.add_parser("validate", parents=[common], help="ROC validation against transfers")
    p.add_argument("--crosswalk", type=Path, help="occupation_id,isco_code CSV "
                   "(default: isco_code column of occupations.csv)")
    p.add_argument("--transitions", type=Path)
    _validation_flags(p)

    p = sub.add_parser("synth", parents=[common], help="generate synthetic transfers")
    p.add_argument("--crosswalk", type=Path)
    p.add_argument("--total", type=_positive_int, default=100_000)
    p.add_argument("--link-exponent", type=float, default=2.0)
    p.add_argument("--link-eps", type=float, default=1e-3)
    p.add_argument("--percentile", type=float, default=98.0)
    p.add_argument("--occupations", type=_positive_int, default=200,
                   help="size of the random taxonomy when --taxonomy-dir is absent")
    p.add_argument("--skills", type=_positive_int, default=600)
    p.add_argument("--blocks", type=_positive_int, default=40)
    p.add_argument("--codes", type=_positive_int, default=50)
    return parser


def _validation_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rare-threshold", type=_positive_int, default=20)
    p.add_argument("--percentile", type=float, default=98.0)
    p.add_argument("--target-tnr", type=float, default=0.65)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--mode", choices=["transfers", "pairs"], default="transfers")


def read_config(path) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config: {exc}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            parser.error(f"unknown config key(s): {', '.join(unknown)}")
        defaults: dict[str, object] = dict(cfg)
        for action in sub._actions:
            # argparse only converts string defaults; append actions need lists
            if action.dest in cfg and isinstance(action, argparse._AppendAction):
                conv = action.type or str
                defaults[action.dest] = [conv(v.strip()) for v in cfg[action.dest].split(",")]
            elif action.dest in cfg and action.nargs == 0:
                defaults[action.dest] = cfg[action.dest].lower() in ("1", "true", "yes", "on")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# -- run directory ----------------------------------------------------------

_DIGEST_SKIP = {"workers", "out", "verbose", "config"}


def _file_digest(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunContext:
    directory: Path
    timestamp: str
    inputs: dict[str, str]
    params: dict[str, object]

    def manifest(self, **extra) -> dict:
        return {
            "occsim_version": __version__,
            "timestamp": self.timestamp,
            "inputs": self.inputs,
            "parameters": self.params,
            **extra,
        }


def _param_view(args: argparse.Namespace) -> dict[str, object]:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in _DIGEST_SKIP:
            continue
        if isinstance(value, list):
            value = [getattr(v, "value", str(v)) for v in value]
        elif isinstance(value, Path):
            value = str(value)
        out[key] = value
    return out


def open_run(args: argparse.Namespace, inputs: list[Path]) -> RunContext:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = time.gmtime(int(epoch)) if epoch else time.gmtime()
    stamp = time.strftime("%Y%m%dT%H%M%SZ", now)
    digests = {str(p): _file_digest(p) for p in sorted(set(inputs))}
    params = _param_view(args)
    h = hashlib.sha256(repr((sorted(digests.values()), sorted(params.items()))).encode())
    root = args.out or Path(os.environ.get("OCCSIM_OUT", "runs"))
    base = root / f"{args.command}-{stamp}-{h.hexdigest()[:8]}"
    run_dir, n = base, 1
    while run_dir.exists():
        n += 1
        run_dir = base.with_name(f"{base.name}-{n}")
    run_dir.mkdir(parents=True)
    return RunContext(run_dir, stamp, {Path(p).name: d for p, d in digests.items()}, params)


# -- shared loading -----------------------------------------------------------


def _require_file(path: Path | None, flag: str) -> Path:
    if path is None:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise UsageError(f"{flag}: no such file: {path}")
    return Path(path)


def _taxonomy_files(args) -> TaxonomyFiles:
    if args.taxonomy_dir is None:
        raise UsageError("--taxonomy-dir is required")
    files = TaxonomyFiles.from_dir(args.taxonomy_dir)
    for p in files.paths():
        if not p.is_file():
            raise UsageError(f"--taxonomy-dir: missing {p}")
    return files


def _projections(t: Taxonomy, measures, workers: int) -> dict[Measure, SimilarityMatrix]:
    w = aggregate_blocks(t) if any(m.uses_blocks for m in measures) else None
    out = {}
    for m in measures:
        start = time.perf_counter()
        out[m] = project(t, w, m, workers=workers)
        log.info("projected %s in %.2fs", m.value, time.perf_counter() - start)
    return out


def _crosswalk(args, t: Taxonomy) -> tuple[Crosswalk, list[Path]]:
    if args.crosswalk is not None:
        path = _require_file(args.crosswalk, "--crosswalk")
        return load_crosswalk(path, t), [path]
    cw = Crosswalk.from_taxonomy(t)
    if not cw.mapping:
        raise UsageError("no --crosswalk given and occupations.csv carries no isco_code values")
    return cw, []


# -- subcommands --------------------------------------------------------------


def cmd_project(args) -> int:
    files = _taxonomy_files(args)
    t = load_taxonomy(files)
    run = open_run(args, list(files.paths()))
    outputs = []
    for m, sim in _projections(t, args.measures, args.workers).items():
        sim.to_csv(run.directory / f"{m.value}.csv")
        outputs.append(f"{m.value}.csv")
        if not args.no_bin:
            sim.to_bin(run.directory / f"{m.value}.bin")
            outputs.append(f"{m.value}.bin")
    write_json(run.manifest(measures=[m.value for m in args.measures], outputs=outputs),
               run.directory / "manifest.json")
    print(run.directory)
    return EXIT_OK


def _resolve_source(t: Taxonomy, key: str) -> int:
    if key in t.occupation_index:
        return t.occupation_index[key]
    by_label = [i for i, o in enumerate(t.occupations) if o.label == key]
    if len(by_label) == 1:
        return by_label[0]
    labels = [o.label for o in t.occupations]
    hints = difflib.get_close_matches(key, labels, n=5, cutoff=0.5)
    msg = f"unknown occupation {key!r}"
    if hints:
        msg += "; did you mean: " + "; ".join(hints)
    raise UsageError(msg)


def cmd_rank(args) -> int:
    files = _taxonomy_files(args)
    t = load_taxonomy(files)
    if args.top_k < 0:
        raise UsageError("--top-k must be >= 0")
    sources = list(range(t.m)) if args.all_sources else [_resolve_source(t, s) for s in args.source]
    if not sources:
        raise UsageError("give --source (repeatable) or --all-sources")
    sims = _projections(t, args.measures, args.workers)
    run = open_run(args, list(files.paths()))
    label = {o.id: o.label for o in t.occupations}

    table_path = run.directory / "rankings_table.csv"
    with open(table_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_id", "rank", *[m.value for m in args.measures]])
        for m, sim in sims.items():
            lists = {t.occupations[i].id: rank_row(sim, i, args.top_k) for i in sources}
            write_rankings(lists, run.directory / f"rankings_{m.value}.csv")
        for i in sources:
            cols = [rank_row(sims[m], i, args.top_k) for m in args.measures]
            src = t.occupations[i]
            if not args.all_sources:
                print(f"\n{src.label} ({src.id})")
                print("\t".join(["rank", *[m.value for m in args.measures]]))
            for r in range(max((len(c) for c in cols), default=0)):
                row = [label[c[r]] if r < len(c) else "" for c in cols]
                w.writerow([src.id, r + 1, *row])
                if not args.all_sources:
                    print("\t".join([str(r + 1), *row]))
    write_json(run.manifest(measures=[m.value for m in args.measures]), run.directory / "manifest.json")
    print(run.directory)
    return EXIT_OK


def cmd_rbo(args) -> int:
    files = _taxonomy_files(args)
    if not args.rankings:
        raise UsageError("--rankings is required")
    ranking_paths = [_require_file(p, "--rankings") for p in args.rankings]
    cfg = RboConfig(p=args.p, max_depth=args.depth)
    t = load_taxonomy(files)
    external = {p: load_external_rankings(p, t) for p in ranking_paths}
    sims = _projections(t, args.measures, args.workers)
    run = open_run(args, [*files.paths(), *ranking_paths])
    summary = []
    for m, sim in sims.items():
        ours = rank_all(sim, args.depth)
        for path, ext in external.items():
            dist = rbo_distribution(ours, ext.lists, cfg, workers=args.workers)
            stem = f"rbo_{m.value}__{_slug(path.stem)}"
            dist.to_csv(run.directory / f"{stem}.csv")
            hist = dist.histogram(args.bins)
            write_histogram(hist, run.directory / f"{stem}_hist.csv")
            plot_density(hist, run.directory / f"{stem}_hist.svg", f"{m.value} vs {path.stem}")
            vals = [v for _, v in dist.values]
            summary.append({
                "measure": m.value,
                "rankings": path.name,
                "sources": len(vals),
                "only_in_projection": dist.only_in_a,
                "only_in_rankings": dist.only_in_b,
                "rejected_rows": ext.rejected,
                "mean_rbo": sum(vals) / len(vals),
            })
    write_json(run.manifest(results=summary), run.directory / "manifest.json")
    print(run.directory)
    return EXIT_OK


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def cmd_validate(args) -> int:
    files = _taxonomy_files(args)
    trans_path = _require_file(args.transitions, "--transitions")
    vcfg = ValidationConfig(
        rare_threshold=args.rare_threshold,
        norm_percentile=args.percentile,
        target_tnr=args.target_tnr,
        bins=args.bins,
        mode=args.mode,
    )
    t = load_taxonomy(files)
    cw, cw_inputs = _crosswalk(args, t)
    trans = load_transitions(trans_path)
    sims = _projections(t, args.measures, args.workers)
    run = open_run(args, [*files.paths(), *cw_inputs, trans_path])
    results = []
    for m, sim in sims.items():
        isco = aggregate_to_isco(sim, cw)
        isco.to_csv(run.directory / f"isco_{m.value}.csv")
        report = evaluate(isco, trans, vcfg)
        write_validation_report(report, run.directory, f"validate_{m.value}_{vcfg.mode}")
        results.append(report.summary())
        log.info("%s: AUC %.4f, threshold %.4f, TNR %.3f, TPR %.3f",
                 m.value, report.auc, report.threshold, report.tnr, report.tpr)
    write_json(run.manifest(unmapped_occupations=len(cw.unmapped), results=results),
               run.directory / "manifest.json")
    print(run.directory)
    return EXIT_OK


def cmd_synth(args) -> int:
    inputs: list[Path] = []
    if args.taxonomy_dir is not None:
        files = _taxonomy_files(args)
        t = load_taxonomy(files)
        inputs.extend(files.paths())
        cw, cw_inputs = _crosswalk(args, t)
        inputs.extend(cw_inputs)
    else:
        t = synthetic_taxonomy(args.occupations, args.skills, args.blocks, args.codes, seed=args.seed)
        cw = Crosswalk.from_taxonomy(t)
    measure = args.measures[0]
    sim = _projections(t, [measure], args.workers)[measure]
    isco = aggregate_to_isco(sim, cw)
    table = generate_transitions(
        isco, args.total, seed=args.seed,
        link=PowerLink(args.link_exponent, args.link_eps), percentile=args.percentile,
    )
    run = open_run(args, inputs)
    if args.taxonomy_dir is None:
        write_taxonomy(t, run.directory / "taxonomy")
    write_transitions(table, run.directory / "transitions.csv")
    write_json(run.manifest(measure=measure.value, total=table.total, pairs=len(table.counts)),
               run.directory / "manifest.json")
    print(run.directory)
    return EXIT_OK


COMMANDS = {
    "project": cmd_project,
    "rank": cmd_rank,
    "rbo": cmd_rbo,
    "validate": cmd_validate,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"occsim {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValidationError, ValueError) as exc:
        print(f"occsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
