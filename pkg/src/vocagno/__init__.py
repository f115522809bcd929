"""Cross-tokenizer token alignment and teacher-guided selective language modeling."""

__version__ = "0.1.0"

from .alignment import (
    AlignmentEntry,
    AlignmentMap,
    ChunkPair,
    OverlapMetrics,
    align,
    align_oracle,
    align_spans,
    chunk_align,
    map_ios,
    overlap_metrics,
)
from .corpus_io import (
    CorpusRecord,
    Role,
    TokenSpan,
    TokenizedSequence,
    read_corpus,
    validate_sequence,
    write_corpus,
    write_masks,
)
from .guidance import (
    GuidanceConfig,
    Phi,
    ThresholdScope,
    TokenWeights,
    UnmappedPolicy,
    aggregate_teacher_loss,
    excess_loss,
    reweighted_loss,
    select_tokens,
)
from .baseline_losses import combined_loss, kl_divergence, uld_wasserstein
from .toy_tokenizers import (
    ToyVocab,
    VocabKind,
    encode,
    train_char,
    train_greedy_merge,
    train_whitespace,
    vocab_overlap,
)

__all__ = [
    "AlignmentEntry",
    "AlignmentMap",
    "ChunkPair",
    "CorpusRecord",
    "GuidanceConfig",
    "OverlapMetrics",
    "Phi",
    "Role",
    "ThresholdScope",
    "TokenSpan",
    "TokenWeights",
    "TokenizedSequence",
    "ToyVocab",
    "UnmappedPolicy",
    "VocabKind",
    "aggregate_teacher_loss",
    "align",
    "align_oracle",
    "align_spans",
    "chunk_align",
    "combined_loss",
    "encode",
    "excess_loss",
    "kl_divergence",
    "map_ios",
    "overlap_metrics",
    "read_corpus",
    "reweighted_loss",
    "select_tokens",
    "train_char",
    "train_greedy_merge",
    "train_whitespace",
    "uld_wasserstein",
    "validate_sequence",
    "vocab_overlap",
    "write_corpus",
    "write_masks",
]
