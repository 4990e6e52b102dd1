"""Protein sequence validation, FASTA I/O, and the training-corpus text format.

Amino acids are represented as one-letter uppercase strings. The canonical
ordering of the 20 standard residues is alphabetical and is fixed across the
whole package (descriptor tables, hull gates, model vocabularies all index
into AMINO_ACIDS).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import (
    EmptySequence,
    InvalidResidue,
    MalformedHeader,
    NoRecords,
    UnbalancedDelimiters,
)

#: The 20 standard residues, alphabetical by one-letter code. Index order is
#: load-bearing: every table keyed by amino acid uses this ordering.
AMINO_ACIDS: tuple[str, ...] = tuple("ACDEFGHIKLMNPQRSTVWY")

AA_INDEX: dict[str, int] = {aa: i for i, aa in enumerate(AMINO_ACIDS)}

_AA_SET = frozenset(AMINO_ACIDS)

#: Sequence boundary token used in the training-corpus text format.
DELIMITER = "<|endoftext|>"


class Policy(enum.Enum):
    """How validate_sequence treats characters outside the 20-letter alphabet."""

    STRICT = "strict"
    SKIP_INVALID = "skip-invalid"


@dataclass(frozen=True)
class ProteinSequence:
    """A validated, uppercase amino-acid string (length >= 1).

    Construct through validate_sequence for raw input; direct construction
    checks the invariants too.
    """

    residues: str

    def __post_init__(self):
        if not self.residues:
            raise EmptySequence("protein sequence must contain at least one residue")
        for i, ch in enumerate(self.residues):
            if ch not in _AA_SET:
                raise InvalidResidue(i, ch)

    def __len__(self) -> int:
        return len(self.residues)

    def __iter__(self):
        return iter(self.residues)

    def __str__(self) -> str:
        return self.residues


@dataclass(frozen=True)
class FastaRecord:
    id: str
    sequence: ProteinSequence

    def __post_init__(self):
        if not self.id or "\n" in self.id:
            raise MalformedHeader(0, f"invalid record id {self.id!r}")


def validate_sequence(raw: str, policy: Policy = Policy.STRICT) -> ProteinSequence:
    """Validate a raw string into a ProteinSequence.

    Whitespace is removed and lowercase letters are uppercased under both
    policies. STRICT raises InvalidResidue on the first non-standard
    character; SKIP_INVALID drops them and raises EmptySequence only when
    nothing remains.
    """
    cleaned = "".join(raw.split()).upper()
    if not cleaned:
        raise EmptySequence("sequence is empty after whitespace removal")
    if policy is Policy.STRICT:
        for i, ch in enumerate(cleaned):
            if ch not in _AA_SET:
                raise InvalidResidue(i, ch)
        return ProteinSequence(cleaned)
    kept = "".join(ch for ch in cleaned if ch in _AA_SET)
    if not kept:
        raise EmptySequence("no standard residues remain after filtering")
    return ProteinSequence(kept)


def parse_fasta(text: str, policy: Policy = Policy.STRICT) -> list[FastaRecord]:
    """Parse '>'-headed FASTA text into records.

    Wrapped sequence lines are concatenated. A record whose sequence
    validates to nothing is reported by raising the underlying error with
    the record id attached, never silently dropped.
    """
    records: list[FastaRecord] = []
    header: str | None = None
    header_line = 0
    parts: list[str] = []

    def flush() -> None:
        nonlocal header, parts
        if header is None:
            return
        raw = "".join(parts)
        try:
            seq = validate_sequence(raw, policy) if raw.strip() else None
        except EmptySequence:
            seq = None
        if seq is None:
            raise EmptySequence(
                f"record {header!r} (line {header_line}) has no valid residues"
            )
        records.append(FastaRecord(id=header, sequence=seq))
        header = None
        parts = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue
        if line.startswith(">"):
            flush()
            header = line[1:].strip()
            header_line = lineno
            if not header:
                raise MalformedHeader(lineno, "empty FASTA header")
        else:
            if header is None:
                raise MalformedHeader(lineno, "sequence data before any '>' header")
            parts.append(line)
    flush()

    if not records:
        raise NoRecords("no FASTA records found")
    return records


def write_fasta(records: list[FastaRecord], wrap: int = 60) -> str:
    """Render records as FASTA text, sequence lines wrapped at `wrap`."""
    lines: list[str] = []
    for rec in records:
        lines.append(f">{rec.id}")
        body = rec.sequence.residues
        for i in range(0, len(body), wrap):
            lines.append(body[i : i + wrap])
    return "\n".join(lines) + "\n"


def dedup_sequences(seqs: list[ProteinSequence]) -> list[ProteinSequence]:
    """Remove exact duplicates, keeping first occurrences in order."""
    seen: set[str] = set()
    out: list[ProteinSequence] = []
    for s in seqs:
        if s.residues not in seen:
            seen.add(s.residues)
            out.append(s)
    return out


def to_training_format(seqs: list[ProteinSequence], wrap: int = 60) -> str:
    """Render sequences in the training-corpus text format.

    Each sequence becomes: a delimiter line, residue lines of exactly `wrap`
    characters (last line may be shorter), and a closing delimiter line.
    Duplicate sequences are removed before rendering. Newline is LF.
    """
    if not seqs:
        raise EmptySequence("no sequences to format")
    if wrap < 1:
        raise ValueError("wrap must be a positive integer")
    lines: list[str] = []
    for seq in dedup_sequences(seqs):
        lines.append(DELIMITER)
        body = seq.residues
        for i in range(0, len(body), wrap):
            lines.append(body[i : i + wrap])
        lines.append(DELIMITER)
    return "\n".join(lines) + "\n"


def from_training_format(text: str) -> list[ProteinSequence]:
    """Inverse of to_training_format.

    Expects delimiter / body lines / delimiter per sequence; raises
    UnbalancedDelimiters on any structural violation.
    """
    seqs: list[ProteinSequence] = []
    in_body = False
    body: list[str] = []
    for line in text.splitlines():
        if line == DELIMITER:
            if not in_body:
                in_body = True
                body = []
            else:
                if not body:
                    raise UnbalancedDelimiters("empty sequence body between delimiters")
                seqs.append(validate_sequence("".join(body)))
                in_body = False
        else:
            if not in_body:
                raise UnbalancedDelimiters(
                    f"sequence data outside delimiters: {line!r}"
                )
            body.append(line)
    if in_body:
        raise UnbalancedDelimiters("unterminated sequence (missing closing delimiter)")
    return seqs
