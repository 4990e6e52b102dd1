"""Exception hierarchy for the pepgate pipeline.

Every error raised by this package derives from PepgateError so callers
(and the CLI) can map failures to a machine-readable category via
``type(exc).__name__``.
"""

from __future__ import annotations


class PepgateError(Exception):
    """Base class for all pepgate errors."""


# --- sequence handling ---------------------------------------------------

class EmptySequence(PepgateError):
    """No residues left after validation."""


class InvalidResidue(PepgateError):
    """A character outside the 20 standard one-letter codes under Strict policy."""

    def __init__(self, position: int, char: str, context: str = ""):
        self.position = position
        self.char = char
        where = f" in {context}" if context else ""
        super().__init__(f"invalid residue {char!r} at position {position}{where}")


class NoRecords(PepgateError):
    """FASTA input contained no records."""


class MalformedHeader(PepgateError):
    """FASTA structure violation (sequence before header, empty header)."""

    def __init__(self, line_number: int, detail: str = "malformed header"):
        self.line_number = line_number
        super().__init__(f"{detail} at line {line_number}")


class UnbalancedDelimiters(PepgateError):
    """Training-corpus text did not alternate delimiter / body / delimiter."""


# --- descriptor geometry --------------------------------------------------

class DegenerateInput(PepgateError):
    """Hull construction input has affine rank < 3.

    rank 0: all points coincident; 1: collinear; 2: coplanar.
    """

    def __init__(self, rank: int, detail: str = ""):
        self.rank = rank
        kind = {0: "coincident", 1: "collinear", 2: "coplanar"}.get(rank, "degenerate")
        msg = f"input points are {kind} (affine rank {rank})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class InsufficientPoints(PepgateError):
    """An amino acid contributed fewer than 4 descriptor points to the gate."""

    def __init__(self, amino_acid: str, count: int):
        self.amino_acid = amino_acid
        self.count = count
        super().__init__(
            f"amino acid {amino_acid}: {count} descriptor points (need >= 4)"
        )


# --- serialization --------------------------------------------------------

class FormatVersionMismatch(PepgateError):
    """File carries an unsupported format version."""


class ChecksumMismatch(PepgateError):
    """File is truncated or corrupted (checksum failed)."""


# --- language model -------------------------------------------------------

class EmptyCorpus(PepgateError):
    """Training corpus contained no sequences."""


# --- structure gate -------------------------------------------------------

class NoAtomRecords(PepgateError):
    """PDB text contained no ATOM records."""


class MissingCaAtom(PepgateError):
    """A residue had ATOM records but no CA atom."""

    def __init__(self, residue: int):
        self.residue = residue
        super().__init__(f"residue {residue} has no CA atom")


class MalformedAtomLine(PepgateError):
    """An ATOM record's fixed columns failed to parse."""

    def __init__(self, line_number: int, detail: str = ""):
        self.line_number = line_number
        msg = f"malformed ATOM record at line {line_number}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class ValueOutOfRange(PepgateError):
    """A pLDDT value fell outside [0, 100]."""

    def __init__(self, value: float, where: str = ""):
        self.value = value
        self.where = where
        msg = f"pLDDT value {value!r} outside [0, 100]"
        if where:
            msg += f" ({where})"
        super().__init__(msg)


class SchemaError(PepgateError):
    """JSON score file does not match the documented schema."""

    def __init__(self, path: str, detail: str = ""):
        self.path = path
        msg = f"schema violation at {path}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


# --- pipeline ---------------------------------------------------------------

class MissingInput(PepgateError):
    """A pipeline stage's required input file is absent."""

    def __init__(self, stage: str, detail: str = ""):
        self.stage = stage
        msg = f"missing input for stage {stage!r}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class StageMismatch(PepgateError):
    """Score/label files do not line up with the surviving sequence ids."""

    def __init__(self, detail: str, ids: list[str] | None = None):
        self.ids = ids or []
        msg = detail
        if self.ids:
            preview = ", ".join(self.ids[:5])
            if len(self.ids) > 5:
                preview += ", ..."
            msg += f" ({preview})"
        super().__init__(msg)


class EmptySurvivorSet(PepgateError):
    """Accuracy is undefined: no sequences survived the pipeline."""


class InsufficientReports(PepgateError):
    """Multi-seed summary needs at least two reports."""
