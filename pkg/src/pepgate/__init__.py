"""pepgate: generate peptide sequences and gate them on geometric validity
and structure confidence.

The package splits into sequence handling (`sequences`), the per-amino-acid
descriptor geometry (`descriptors`, `hull`, `gate`), the n-gram language
model and sampler (`lm`), structure-score ingestion (`plddt`), and the
orchestrating pipeline and CLI (`pipeline`, `cli`). The names below are the
supported public surface.
"""

from .descriptors import DescriptorPoint, DescriptorSet, compute_descriptors
from .errors import PepgateError
from .gate import (
    HullGate,
    ValidityVerdict,
    build_gate,
    gate_check,
    gate_check_batch,
    load_gate,
    save_gate,
)
from .hull import ConvexHull3, build_hull, contains, contains_many
from .lm import (
    NGramLM,
    SamplingConfig,
    load_model,
    next_token_dist,
    perplexity,
    rank_by_perplexity,
    sample,
    save_model,
    sequence_loss,
    train,
)
from .pipeline import (
    PipelineReport,
    TaskConfig,
    TraceRow,
    compute_accuracy,
    multi_seed_summary,
    report_from_summary,
    run_pipeline,
    summary_dict,
    summary_json,
    task_config,
    trace_tsv,
)
from .plddt import (
    AGGREGATORS,
    PlddtRecord,
    ScoreSource,
    mean_plddt,
    parse_plddt_json,
    parse_plddt_pdb,
    structure_filter,
)
from .sequences import (
    AMINO_ACIDS,
    FastaRecord,
    Policy,
    ProteinSequence,
    dedup_sequences,
    from_training_format,
    parse_fasta,
    to_training_format,
    validate_sequence,
    write_fasta,
)

__version__ = "0.1.0"

__all__ = [
    "AGGREGATORS",
    "AMINO_ACIDS",
    "ConvexHull3",
    "DescriptorPoint",
    "DescriptorSet",
    "FastaRecord",
    "HullGate",
    "NGramLM",
    "PepgateError",
    "PipelineReport",
    "PlddtRecord",
    "Policy",
    "ProteinSequence",
    "SamplingConfig",
    "ScoreSource",
    "TaskConfig",
    "TraceRow",
    "ValidityVerdict",
    "build_gate",
    "build_hull",
    "compute_accuracy",
    "compute_descriptors",
    "contains",
    "contains_many",
    "dedup_sequences",
    "from_training_format",
    "gate_check",
    "gate_check_batch",
    "load_gate",
    "load_model",
    "mean_plddt",
    "multi_seed_summary",
    "next_token_dist",
    "parse_fasta",
    "parse_plddt_json",
    "parse_plddt_pdb",
    "perplexity",
    "rank_by_perplexity",
    "report_from_summary",
    "run_pipeline",
    "sample",
    "save_gate",
    "save_model",
    "sequence_loss",
    "structure_filter",
    "summary_dict",
    "summary_json",
    "task_config",
    "to_training_format",
    "trace_tsv",
    "train",
    "validate_sequence",
    "write_fasta",
    "__version__",
]
