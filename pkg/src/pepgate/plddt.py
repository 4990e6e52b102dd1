"""Per-residue confidence scores and the structure quality gate.

Structure prediction runs as an external service; this module ingests its
outputs. Predicted-structure PDB files carry pLDDT in the B-factor column,
and batch score files carry it as JSON. Records with a sequence-level score
above the threshold pass the gate.
"""

from __future__ import annotations

import enum
import json
import statistics
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

from .errors import (
    MalformedAtomLine,
    MissingCaAtom,
    NoAtomRecords,
    SchemaError,
    ValueOutOfRange,
)

DEFAULT_THRESHOLD = 70.0


class ScoreSource(enum.Enum):
    """Where a record's per-residue values came from."""

    PDB_BFACTOR = "pdb_bfactor"
    JSON_SCORES = "json_scores"


@dataclass(frozen=True)
class PlddtRecord:
    """One sequence's per-residue pLDDT values, each in [0, 100]."""

    sequence_id: str
    per_residue: tuple[float, ...]
    source: ScoreSource

    def __post_init__(self):
        if not self.sequence_id:
            raise ValueError("sequence_id must be non-empty")
        if not self.per_residue:
            raise ValueError(f"record {self.sequence_id!r} has no residues")
        for i, v in enumerate(self.per_residue):
            if not 0.0 <= v <= 100.0:
                raise ValueOutOfRange(v, f"sequence {self.sequence_id!r}, residue {i}")

    def __len__(self) -> int:
        return len(self.per_residue)


def parse_plddt_pdb(text: str, sequence_id: str) -> PlddtRecord:
    """Extract per-residue pLDDT from a PDB file's B-factor column.

    Fixed columns (1-indexed): atom name 13-16, chain 22, residue number
    23-26, B-factor 61-66. Takes the CA atom of each residue in the first
    model's first chain; residues come back ordered by residue number.
    Records outside that model/chain are skipped with a warning.
    """
    ca_values: dict[int, float] = {}
    residues_seen: set[int] = set()
    chain: str | None = None
    saw_atom = False
    past_first_model = False
    skipped = 0

    for lineno, line in enumerate(text.splitlines(), start=1):
        tag = line[:6].strip()
        if tag == "ENDMDL":
            past_first_model = True
            continue
        if tag != "ATOM":
            continue
        saw_atom = True
        if past_first_model:
            skipped += 1
            continue
        if len(line) < 66:
            raise MalformedAtomLine(lineno, "record shorter than 66 columns")
        if chain is None:
            chain = line[21]
        elif line[21] != chain:
            skipped += 1
            continue
        try:
            resseq = int(line[22:26])
        except ValueError:
            raise MalformedAtomLine(lineno, "residue number is not an integer") from None
        residues_seen.add(resseq)
        if line[12:16].strip() != "CA":
            continue
        try:
            value = float(line[60:66])
        except ValueError:
            raise MalformedAtomLine(lineno, "B-factor is not a number") from None
        if not 0.0 <= value <= 100.0:
            raise ValueOutOfRange(value, f"residue {resseq}")
        # duplicate CA records (altloc variants) keep the first occurrence
        ca_values.setdefault(resseq, value)

    if not saw_atom:
        raise NoAtomRecords("no ATOM records in input")
    missing = sorted(residues_seen - ca_values.keys())
    if missing:
        raise MissingCaAtom(missing[0])
    if skipped:
        warnings.warn(
            f"{sequence_id}: skipped {skipped} ATOM records outside the "
            f"first model's chain {chain!r}",
            stacklevel=2,
        )
    return PlddtRecord(
        sequence_id,
        tuple(ca_values[r] for r in sorted(ca_values)),
        ScoreSource.PDB_BFACTOR,
    )


def parse_plddt_json(text: str) -> list[PlddtRecord]:
    """Parse a batch score file: a JSON array of {"id": ..., "plddt": [..]}.

    An empty array is a valid, empty batch. Shape violations raise
    SchemaError naming the offending path.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc.msg}") from None
    if not isinstance(data, list):
        raise SchemaError("$", "expected an array of score objects")

    records = []
    for i, entry in enumerate(data):
        path = f"$[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(path, "expected an object")
        for key in ("id", "plddt"):
            if key not in entry:
                raise SchemaError(f"{path}.{key}", "missing key")
        seq_id = entry["id"]
        if not isinstance(seq_id, str) or not seq_id:
            raise SchemaError(f"{path}.id", "expected a non-empty string")
        values = entry["plddt"]
        if not isinstance(values, list) or not values:
            raise SchemaError(f"{path}.plddt", "expected a non-empty array")
        per_residue = []
        for j, v in enumerate(values):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise SchemaError(f"{path}.plddt[{j}]", "expected a number")
            per_residue.append(float(v))
        records.append(PlddtRecord(seq_id, tuple(per_residue), ScoreSource.JSON_SCORES))
    return records


def mean_plddt(record: PlddtRecord) -> float:
    """Arithmetic mean over residues, the default sequence-level score."""
    return statistics.fmean(record.per_residue)


def min_plddt(record: PlddtRecord) -> float:
    """Worst residue; a stricter sequence-level score."""
    return min(record.per_residue)


def median_plddt(record: PlddtRecord) -> float:
    return statistics.median(record.per_residue)


AGGREGATORS: dict[str, Callable[[PlddtRecord], float]] = {
    "mean": mean_plddt,
    "min": min_plddt,
    "median": median_plddt,
}


def structure_filter(
    records: Iterable[PlddtRecord],
    threshold: float = DEFAULT_THRESHOLD,
    aggregate: Callable[[PlddtRecord], float] = mean_plddt,
) -> tuple[list[PlddtRecord], list[PlddtRecord]]:
    """Partition records into (passed, failed) by sequence-level score.

    A record passes when its aggregate score is strictly greater than the
    threshold (a score of exactly 70 fails the default gate). Input order
    is preserved within each partition.
    """
    if not 0.0 <= threshold <= 100.0:
        raise ValueError("threshold must be in [0, 100]")
    passed: list[PlddtRecord] = []
    failed: list[PlddtRecord] = []
    for record in records:
        (passed if aggregate(record) > threshold else failed).append(record)
    return passed, failed
