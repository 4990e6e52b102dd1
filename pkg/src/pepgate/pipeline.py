"""End-to-end orchestration of the generate / rank / gate / score run.

Stages execute in a fixed order: train (or load) the model, sample,
remove duplicates, keep the lowest-perplexity fraction, test descriptor
validity against the hull gate, then optionally join externally predicted
structure scores and classifier labels. Every generated sequence lands in
the trace with the stage that eliminated it; stage counts and the derived
percentages go into a summary whose field names are fixed and versioned.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    EmptySurvivorSet,
    FormatVersionMismatch,
    InsufficientReports,
    MissingInput,
    SchemaError,
    StageMismatch,
)
from .gate import gate_check_batch, load_gate
from .lm import (
    NGramLM,
    SamplingConfig,
    load_model,
    perplexity,
    rank_by_perplexity,
    sample,
    train,
)
from .plddt import AGGREGATORS, DEFAULT_THRESHOLD, PlddtRecord, parse_plddt_json, parse_plddt_pdb, structure_filter
from .sequences import FastaRecord, ProteinSequence, dedup_sequences, parse_fasta, write_fasta

REPORT_FORMAT_VERSION = 1

TRACE_COLUMNS = ("sequence_id", "sequence", "perplexity", "verdict", "mean_plddt", "label")

VERDICT_DUPLICATE = "duplicate"
VERDICT_RANKED_OUT = "ranked_out"
VERDICT_HULL_INVALID = "hull_invalid"
VERDICT_PLDDT_LOW = "plddt_low"
VERDICT_SURVIVOR = "survivor"

# metrics multi_seed_summary aggregates when present in every report
SUMMARY_METRICS = (
    "pct_invalid_proteins",
    "pct_invalid_of_generated",
    "pct_plddt_above_70",
    "property_accuracy",
)

# residue budgets per task; the structure gate and sampler knobs are shared
TASK_PRESETS: dict[str, dict] = {
    "hemolytic": {"max_length": 40, "expected_label": True},
    "non-hemolytic": {"max_length": 40, "expected_label": False},
    "non-fouling": {"max_length": 20, "expected_label": True},
    "soluble": {"max_length": 200, "expected_label": True},
}


@dataclass(frozen=True)
class TaskConfig:
    """One run's inputs and knobs.

    Exactly one of corpus_path / model_path supplies the model. The
    structure and accuracy stages switch on when scores_path / labels_path
    are set. expected_label is the property class a survivor should have
    (False for the non-hemolytic task, where the negative class is wanted).
    """

    task: str = "custom"
    corpus_path: str | None = None
    model_path: str | None = None
    gate_path: str | None = None
    count: int = 1000
    max_length: int = 40
    top_k: int = 950
    repetition_penalty: float = 1.2
    seed: int = 0
    order: int = 2
    alpha: float = 0.1
    keep_fraction: float = 1.0 / 3.0
    plddt_threshold: float = DEFAULT_THRESHOLD
    plddt_aggregation: str = "mean"
    scores_path: str | None = None
    labels_path: str | None = None
    expected_label: bool = True
    output_dir: str | None = None

    def __post_init__(self):
        if not 0 < self.keep_fraction <= 1:
            raise ValueError("keep_fraction must be in (0, 1]")
        if not 0 <= self.plddt_threshold <= 100:
            raise ValueError("plddt_threshold must be in [0, 100]")
        if self.plddt_aggregation not in AGGREGATORS:
            known = ", ".join(sorted(AGGREGATORS))
            raise ValueError(f"plddt_aggregation must be one of {known}")


def task_config(task: str = "custom", **overrides) -> TaskConfig:
    """A TaskConfig with the task's preset residue budget applied first."""
    settings = dict(TASK_PRESETS.get(task, {}))
    settings["task"] = task
    settings.update(overrides)
    return TaskConfig(**settings)


@dataclass(frozen=True)
class TraceRow:
    sequence_id: str
    sequence: str
    perplexity: float
    verdict: str
    mean_plddt: float | None
    label: bool | None


@dataclass(frozen=True)
class PipelineReport:
    """Stage counts, derived percentages, and the per-sequence trace.

    structure_passed / pct_plddt_above_70 are None when the structure
    stage did not run; property_accuracy is None without labels.
    """

    task: str
    seed: int
    generated: int
    deduplicated: int
    ranked_kept: int
    hull_valid: int
    structure_passed: int | None
    pct_invalid_proteins: float
    pct_invalid_of_generated: float
    pct_plddt_above_70: float | None
    property_accuracy: float | None
    trace: tuple[TraceRow, ...]

    def __post_init__(self):
        counts = [self.generated, self.deduplicated, self.ranked_kept, self.hull_valid]
        if self.structure_passed is not None:
            counts.append(self.structure_passed)
        for earlier, later in zip(counts, counts[1:]):
            if later > earlier:
                raise ValueError(f"stage counts must be non-increasing, got {counts}")


def summary_dict(report: PipelineReport) -> dict:
    """The JSON summary's content; optional-stage fields are omitted, not null."""
    counts = {
        "generated": report.generated,
        "deduplicated": report.deduplicated,
        "ranked_kept": report.ranked_kept,
        "hull_valid": report.hull_valid,
    }
    if report.structure_passed is not None:
        counts["structure_passed"] = report.structure_passed
    out = {
        "format_version": REPORT_FORMAT_VERSION,
        "task": report.task,
        "seed": report.seed,
        "counts": counts,
        "pct_invalid_proteins": report.pct_invalid_proteins,
        "pct_invalid_of_generated": report.pct_invalid_of_generated,
    }
    if report.pct_plddt_above_70 is not None:
        out["pct_plddt_above_70"] = report.pct_plddt_above_70
    if report.property_accuracy is not None:
        out["property_accuracy"] = report.property_accuracy
    return out


def summary_json(report: PipelineReport) -> str:
    return json.dumps(summary_dict(report), indent=2, sort_keys=True) + "\n"


def trace_tsv(report: PipelineReport) -> str:
    """Tab-separated trace; floats use repr so re-runs are byte-identical."""
    lines = ["\t".join(TRACE_COLUMNS)]
    for row in report.trace:
        lines.append(
            "\t".join(
                (
                    row.sequence_id,
                    row.sequence,
                    repr(row.perplexity),
                    row.verdict,
                    "" if row.mean_plddt is None else repr(row.mean_plddt),
                    "" if row.label is None else ("1" if row.label else "0"),
                )
            )
        )
    return "\n".join(lines) + "\n"


def _require_file(path: str, stage: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise MissingInput(stage, str(p))
    return p


def load_scores(path: str) -> list[PlddtRecord]:
    """Structure scores from a JSON batch file or a directory of PDB files
    (one file per sequence, named <sequence_id>.pdb)."""
    p = Path(path)
    if p.is_dir():
        records = [parse_plddt_pdb(f.read_text(), f.stem) for f in sorted(p.glob("*.pdb"))]
        if not records:
            raise MissingInput("structure-filter", f"no .pdb files in {path}")
        return records
    return parse_plddt_json(_require_file(path, "structure-filter").read_text())


def parse_labels(text: str) -> dict[str, bool]:
    """Classifier labels: one `id<TAB>label` line each, label 0/1/true/false."""
    labels: dict[str, bool] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise SchemaError(f"line {lineno}", "expected id<TAB>label")
        sid, value = parts[0].strip(), parts[1].strip().lower()
        if value in ("1", "true"):
            label = True
        elif value in ("0", "false"):
            label = False
        else:
            raise SchemaError(f"line {lineno}", f"unrecognized label {parts[1]!r}")
        if sid in labels:
            raise SchemaError(f"line {lineno}", f"duplicate id {sid!r}")
        labels[sid] = label
    return labels


def compute_accuracy(
    survivor_ids: list[str], labels: dict[str, bool], expected: bool
) -> float:
    """Fraction of surviving sequences whose classifier label matches the
    intended property class."""
    ids = list(survivor_ids)
    if not ids:
        raise EmptySurvivorSet("no sequences survived the pipeline")
    missing = sorted(i for i in ids if i not in labels)
    if missing:
        raise StageMismatch("survivors missing classifier labels", missing)
    return sum(1 for i in ids if labels[i] == expected) / len(ids)


def report_from_summary(summary: dict) -> PipelineReport:
    """Rebuild a (trace-free) report from a written JSON summary."""
    if summary.get("format_version") != REPORT_FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"report format {summary.get('format_version')!r}, "
            f"expected {REPORT_FORMAT_VERSION}"
        )
    try:
        counts = summary["counts"]
        return PipelineReport(
            task=summary["task"],
            seed=summary["seed"],
            generated=counts["generated"],
            deduplicated=counts["deduplicated"],
            ranked_kept=counts["ranked_kept"],
            hull_valid=counts["hull_valid"],
            structure_passed=counts.get("structure_passed"),
            pct_invalid_proteins=summary["pct_invalid_proteins"],
            pct_invalid_of_generated=summary["pct_invalid_of_generated"],
            pct_plddt_above_70=summary.get("pct_plddt_above_70"),
            property_accuracy=summary.get("property_accuracy"),
            trace=(),
        )
    except KeyError as exc:
        raise SchemaError(str(exc), "missing report field") from None


def multi_seed_summary(reports: list[PipelineReport]) -> dict[str, tuple[float, float]]:
    """Per-metric (mean, sample standard deviation) across seeds.

    A metric is aggregated only when every report carries it; the sample
    deviation uses the n-1 denominator.
    """
    if len(reports) < 2:
        raise InsufficientReports(f"need at least 2 reports, got {len(reports)}")
    out: dict[str, tuple[float, float]] = {}
    for metric in SUMMARY_METRICS:
        values = [getattr(r, metric) for r in reports]
        if any(v is None for v in values):
            continue
        out[metric] = (statistics.fmean(values), statistics.stdev(values))
    return out


def _resolve_model(config: TaskConfig) -> NGramLM:
    if config.model_path is not None:
        return load_model(_require_file(config.model_path, "train"))
    if config.corpus_path is not None:
        records = parse_fasta(_require_file(config.corpus_path, "train").read_text())
        return train([r.sequence for r in records], config.order, config.alpha)
    raise MissingInput("train", "set corpus_path or model_path")


def _join_scores(
    records: list[PlddtRecord], valid: list[tuple[str, ProteinSequence]]
) -> dict[str, PlddtRecord]:
    """Match score records to the hull-valid sequences, strictly one each."""
    by_id: dict[str, PlddtRecord] = {}
    duplicates = []
    for rec in records:
        if rec.sequence_id in by_id:
            duplicates.append(rec.sequence_id)
        by_id[rec.sequence_id] = rec
    if duplicates:
        raise StageMismatch("duplicate structure score ids", sorted(set(duplicates)))
    valid_ids = [sid for sid, _ in valid]
    missing = sorted(set(valid_ids) - set(by_id))
    if missing:
        raise StageMismatch("structure scores missing for gated sequences", missing)
    unknown = sorted(set(by_id) - set(valid_ids))
    if unknown:
        raise StageMismatch("structure scores reference unknown sequence ids", unknown)
    mislength = sorted(sid for sid, seq in valid if len(by_id[sid]) != len(seq))
    if mislength:
        raise StageMismatch("structure score length differs from sequence length", mislength)
    return by_id


def run_pipeline(config: TaskConfig) -> PipelineReport:
    """Run every configured stage and write the run's artifacts.

    With output_dir set, writes post_gate.fasta (the file to hand to the
    external structure predictor), report.json, and trace.tsv. The whole
    run is a deterministic function of the config.
    """
    lm = _resolve_model(config)
    if config.gate_path is None:
        raise MissingInput("gate", "gate_path is not set")
    gate = load_gate(_require_file(config.gate_path, "gate"))

    sampling = SamplingConfig(
        count=config.count,
        max_length=config.max_length,
        seed=config.seed,
        top_k=config.top_k,
        repetition_penalty=config.repetition_penalty,
    )
    generated = sample(lm, sampling)
    ids = [f"gen_{i:04d}" for i in range(len(generated))]
    ppl: dict[str, float] = {}
    id_of: dict[str, str] = {}
    for sid, seq in zip(ids, generated):
        if seq.residues not in id_of:
            id_of[seq.residues] = sid
            ppl[seq.residues] = perplexity(lm, seq)

    unique = dedup_sequences(generated)
    kept = rank_by_perplexity(lm, unique, config.keep_fraction)
    kept_keys = {s.residues for s in kept}

    verdicts = gate_check_batch(gate, kept)
    valid = [
        (id_of[s.residues], s) for s, v in zip(kept, verdicts) if v.valid
    ]
    valid_keys = {s.residues for _, s in valid}

    post_gate = [
        FastaRecord(
            id=f"{sid} seed={config.seed} perplexity={ppl[s.residues]!r}",
            sequence=s,
        )
        for sid, s in valid
    ]

    score_of: dict[str, float] = {}
    structure_passed: int | None = None
    survivor_ids = [sid for sid, _ in valid]
    if config.scores_path is not None:
        by_id = _join_scores(load_scores(config.scores_path), valid)
        aggregate = AGGREGATORS[config.plddt_aggregation]
        ordered = [by_id[sid] for sid, _ in valid]
        passed, _failed = structure_filter(ordered, config.plddt_threshold, aggregate)
        passed_ids = {r.sequence_id for r in passed}
        score_of = {r.sequence_id: aggregate(r) for r in ordered}
        structure_passed = len(passed)
        survivor_ids = [sid for sid, _ in valid if sid in passed_ids]

    labels: dict[str, bool] = {}
    property_accuracy: float | None = None
    if config.labels_path is not None:
        labels = parse_labels(_require_file(config.labels_path, "accuracy").read_text())
        unknown = sorted(set(labels) - set(ids))
        if unknown:
            raise StageMismatch("labels reference unknown sequence ids", unknown)
        property_accuracy = compute_accuracy(survivor_ids, labels, config.expected_label)

    survivor_set = set(survivor_ids)
    rows = []
    for sid, seq in zip(ids, generated):
        key = seq.residues
        if id_of[key] != sid:
            verdict = VERDICT_DUPLICATE
        elif key not in kept_keys:
            verdict = VERDICT_RANKED_OUT
        elif key not in valid_keys:
            verdict = VERDICT_HULL_INVALID
        elif sid in survivor_set:
            verdict = VERDICT_SURVIVOR
        else:
            verdict = VERDICT_PLDDT_LOW
        rows.append(
            TraceRow(
                sequence_id=sid,
                sequence=key,
                perplexity=ppl[key],
                verdict=verdict,
                mean_plddt=score_of.get(sid),
                label=labels.get(sid),
            )
        )

    ranked_kept = len(kept)
    hull_valid = len(valid)
    pct_plddt = None
    if structure_passed is not None and hull_valid > 0:
        pct_plddt = 100.0 * structure_passed / hull_valid
    report = PipelineReport(
        task=config.task,
        seed=config.seed,
        generated=len(generated),
        deduplicated=len(unique),
        ranked_kept=ranked_kept,
        hull_valid=hull_valid,
        structure_passed=structure_passed,
        pct_invalid_proteins=100.0 * (ranked_kept - hull_valid) / ranked_kept,
        pct_invalid_of_generated=100.0 * (ranked_kept - hull_valid) / len(generated),
        pct_plddt_above_70=pct_plddt,
        property_accuracy=property_accuracy,
        trace=tuple(rows),
    )

    if config.output_dir is not None:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "post_gate.fasta").write_text(write_fasta(post_gate) if post_gate else "")
        (out / "report.json").write_text(summary_json(report))
        (out / "trace.tsv").write_text(trace_tsv(report))
    return report
