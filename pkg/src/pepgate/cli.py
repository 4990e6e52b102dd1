"""Command-line interface.

One subcommand per pipeline stage plus `run` for the whole thing. Every
failure maps to a machine-readable category (the error class name) on
stderr and a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import MissingInput, PepgateError, SchemaError
from .gate import DEFAULT_TOLERANCE, build_gate, gate_check_batch, load_gate, save_gate
from .lm import SamplingConfig, load_model, perplexity, rank_by_perplexity, sample, save_model, train
from .pipeline import (
    load_scores,
    multi_seed_summary,
    report_from_summary,
    run_pipeline,
    summary_json,
    task_config,
)
from .plddt import AGGREGATORS, DEFAULT_THRESHOLD, structure_filter
from .sequences import FastaRecord, Policy, parse_fasta, write_fasta

_POLICIES = {"strict": Policy.STRICT, "skip-invalid": Policy.SKIP_INVALID}


def _require(path: str, stage: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise MissingInput(stage, str(p))
    return p


def _read(path: str, stage: str) -> str:
    return _require(path, stage).read_text()


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true"):
        return True
    if v in ("0", "false"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def _fraction(value: str) -> float:
    # accepts "0.25" or "1/3"
    if "/" in value:
        num, _, den = value.partition("/")
        return float(num) / float(den)
    return float(value)


# config-file key -> (TaskConfig field, caster)
CONFIG_KEYS = {
    "task": ("task", str),
    "corpus": ("corpus_path", str),
    "model": ("model_path", str),
    "gate": ("gate_path", str),
    "count": ("count", int),
    "max_length": ("max_length", int),
    "top_k": ("top_k", int),
    "repetition_penalty": ("repetition_penalty", float),
    "seed": ("seed", int),
    "order": ("order", int),
    "alpha": ("alpha", float),
    "keep_fraction": ("keep_fraction", _fraction),
    "plddt_threshold": ("plddt_threshold", float),
    "plddt_aggregation": ("plddt_aggregation", str),
    "scores": ("scores_path", str),
    "labels": ("labels_path", str),
    "expected_label": ("expected_label", _bool),
    "output_dir": ("output_dir", str),
}


def parse_config_file(text: str) -> dict:
    """Flat key=value lines; '#' comments and blank lines are skipped."""
    overrides: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SchemaError(f"line {lineno}", "expected key=value")
        key, value = key.strip(), value.strip()
        if key not in CONFIG_KEYS:
            raise SchemaError(f"line {lineno}", f"unknown key {key!r}")
        field, cast = CONFIG_KEYS[key]
        try:
            overrides[field] = cast(value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise SchemaError(f"line {lineno}", str(exc)) from None
    return overrides


def cmd_build_gate(args) -> int:
    records = parse_fasta(_read(args.corpus, "build-gate"), _POLICIES[args.policy])
    seqs = [r.sequence for r in records]
    provenance = args.provenance or f"{Path(args.corpus).name}: {len(seqs)} sequences"
    gate = build_gate(seqs, tolerance=args.tolerance, provenance=provenance, threads=args.threads)
    save_gate(gate, args.output)
    print(f"gate: 20 hulls from {len(seqs)} sequences -> {args.output}")
    return 0


def cmd_train(args) -> int:
    records = parse_fasta(_read(args.corpus, "train"), _POLICIES[args.policy])
    lm = train([r.sequence for r in records], order=args.order, alpha=args.alpha)
    save_model(lm, args.output)
    print(
        f"model: order={lm.order} alpha={lm.alpha} "
        f"contexts={len(lm.counts)} -> {args.output}"
    )
    return 0


def cmd_generate(args) -> int:
    lm = load_model(_require(args.model, "generate"))
    config = SamplingConfig(
        count=args.count,
        max_length=args.max_length,
        seed=args.seed,
        top_k=args.top_k,
        repetition_penalty=args.repetition_penalty,
    )
    seqs = sample(lm, config)
    records = [
        FastaRecord(
            id=f"gen_{i:04d} seed={args.seed} perplexity={perplexity(lm, s)!r}",
            sequence=s,
        )
        for i, s in enumerate(seqs)
    ]
    Path(args.output).write_text(write_fasta(records))
    print(f"generated {len(seqs)} sequences -> {args.output}")
    return 0


def cmd_rank(args) -> int:
    lm = load_model(_require(args.model, "rank"))
    records = parse_fasta(_read(args.input, "rank"))
    kept = rank_by_perplexity(lm, [r.sequence for r in records], args.keep_fraction)
    headers: dict[str, str] = {}
    for r in records:
        headers.setdefault(r.sequence.residues, r.id)
    out = [FastaRecord(id=headers[s.residues], sequence=s) for s in kept]
    Path(args.output).write_text(write_fasta(out))
    print(f"ranked: kept {len(kept)}/{len(records)} -> {args.output}")
    return 0


def cmd_gate(args) -> int:
    gate = load_gate(_require(args.gate, "gate"))
    records = parse_fasta(_read(args.input, "gate"))
    verdicts = gate_check_batch(gate, [r.sequence for r in records])
    valid = [r for r, v in zip(records, verdicts) if v.valid]
    Path(args.output).write_text(write_fasta(valid) if valid else "")
    if args.failures:
        lines = ["sequence_id\tfailed_amino_acids"]
        for r, v in zip(records, verdicts):
            if not v.valid:
                lines.append(f"{r.id.split()[0]}\t{','.join(v.failed_amino_acids)}")
        Path(args.failures).write_text("\n".join(lines) + "\n")
    print(f"gate: {len(valid)}/{len(records)} sequences valid -> {args.output}")
    return 0


def cmd_structure_filter(args) -> int:
    records = load_scores(args.scores)
    aggregate = AGGREGATORS[args.aggregation]
    passed, _ = structure_filter(records, args.threshold, aggregate)
    passed_ids = {r.sequence_id for r in passed}
    lines = ["sequence_id\tscore\tverdict"]
    for r in records:
        verdict = "pass" if r.sequence_id in passed_ids else "fail"
        lines.append(f"{r.sequence_id}\t{aggregate(r)!r}\t{verdict}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"structure gate: {len(passed)}/{len(records)} above {args.threshold} -> {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_score(args) -> int:
    lm = load_model(_require(args.model, "score"))
    records = parse_fasta(_read(args.input, "score"))
    lines = ["sequence_id\tperplexity"]
    for r in records:
        lines.append(f"{r.id.split()[0]}\t{perplexity(lm, r.sequence)!r}")
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
        print(f"scored {len(records)} sequences -> {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_run(args) -> int:
    overrides: dict = {}
    if args.config:
        overrides.update(parse_config_file(_read(args.config, "run")))
    for field, _ in CONFIG_KEYS.values():
        value = getattr(args, field, None)
        if value is not None:
            overrides[field] = value
    task = overrides.pop("task", "custom")
    report = run_pipeline(task_config(task, **overrides))
    sys.stdout.write(summary_json(report))
    return 0


def cmd_report(args) -> int:
    summaries = []
    for path in args.reports:
        text = _read(path, "report")
        try:
            summaries.append(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SchemaError(path, f"invalid JSON: {exc.msg}") from None
    if len(summaries) == 1:
        sys.stdout.write(json.dumps(summaries[0], indent=2, sort_keys=True) + "\n")
        return 0
    stats = multi_seed_summary([report_from_summary(s) for s in summaries])
    print("metric\tmean\tstd")
    for metric, (mean, std) in stats.items():
        print(f"{metric}\t{mean!r}\t{std!r}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pepgate",
        description="Generate peptide sequences and gate them on descriptor validity and structure confidence.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-gate", help="build the 20-hull validity gate from a reference corpus")
    p.add_argument("--corpus", required=True, help="reference FASTA")
    p.add_argument("--output", required=True, help="gate file to write")
    p.add_argument("--tolerance", type=float, default=DEFAULT_TOLERANCE)
    p.add_argument("--provenance", default="", help="free-text note stored in the gate file")
    p.add_argument("--policy", choices=sorted(_POLICIES), default="strict")
    p.add_argument("--threads", type=int, default=None, help="hull-build workers (default: PEPGATE_THREADS or all cores)")
    p.set_defaults(func=cmd_build_gate)

    p = sub.add_parser("train", help="train the n-gram model on a FASTA corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--policy", choices=sorted(_POLICIES), default="strict")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample sequences from a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--output", required=True, help="FASTA to write")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--max-length", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--top-k", type=int, default=950)
    p.add_argument("--repetition-penalty", type=float, default=1.2)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("rank", help="keep the lowest-perplexity fraction of a FASTA")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--keep-fraction", type=_fraction, default=1.0 / 3.0)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("gate", help="keep sequences whose descriptors fall inside every hull")
    p.add_argument("--gate", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--failures", default=None, help="optional TSV of failed sequences")
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("structure-filter", help="apply the pLDDT threshold to structure scores")
    p.add_argument("--scores", required=True, help="JSON score file or directory of PDB files")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--aggregation", choices=sorted(AGGREGATORS), default="mean")
    p.add_argument("--output", default=None, help="TSV to write (default: stdout)")
    p.set_defaults(func=cmd_structure_filter)

    p = sub.add_parser("score", help="per-sequence perplexity of a FASTA")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None, help="TSV to write (default: stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--config", default=None, help="flat key=value config file")
    p.add_argument("--task", dest="task", default=None)
    p.add_argument("--corpus", dest="corpus_path", default=None)
    p.add_argument("--model", dest="model_path", default=None)
    p.add_argument("--gate", dest="gate_path", default=None)
    p.add_argument("--count", dest="count", type=int, default=None)
    p.add_argument("--max-length", dest="max_length", type=int, default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.add_argument("--repetition-penalty", dest="repetition_penalty", type=float, default=None)
    p.add_argument("--seed", dest="seed", type=int, default=None)
    p.add_argument("--order", dest="order", type=int, default=None)
    p.add_argument("--alpha", dest="alpha", type=float, default=None)
    p.add_argument("--keep-fraction", dest="keep_fraction", type=_fraction, default=None)
    p.add_argument("--plddt-threshold", dest="plddt_threshold", type=float, default=None)
    p.add_argument("--plddt-aggregation", dest="plddt_aggregation", choices=sorted(AGGREGATORS), default=None)
    p.add_argument("--scores", dest="scores_path", default=None)
    p.add_argument("--labels", dest="labels_path", default=None)
    p.add_argument("--expected-label", dest="expected_label", type=_bool, default=None)
    p.add_argument("--output-dir", dest="output_dir", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="show one report or aggregate several across seeds")
    p.add_argument("reports", nargs="+", help="report.json files")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PepgateError, OSError, ValueError) as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
