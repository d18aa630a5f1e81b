from dctpipe.bench.config import (
    CORPUS_ENV,
    DEFAULT_MODES,
    BadConfig,
    BenchConfig,
    Mode,
    config_text,
    load_config,
    parse_config_text,
    parse_mode,
)
from dctpipe.bench.corpus import (
    CorpusEntry,
    Manifest,
    crop_offset,
    load_corpus,
    make_synthetic_corpus,
    prepare_corpus,
    read_manifest,
)
from dctpipe.bench.harness import (
    BenchReport,
    ModeRow,
    PipelineStandIn,
    Stat,
    batch_plan,
    emit_report,
    run_bench,
)

__all__ = [
    "CORPUS_ENV",
    "DEFAULT_MODES",
    "BadConfig",
    "BenchConfig",
    "Mode",
    "config_text",
    "load_config",
    "parse_config_text",
    "parse_mode",
    "CorpusEntry",
    "Manifest",
    "crop_offset",
    "load_corpus",
    "make_synthetic_corpus",
    "prepare_corpus",
    "read_manifest",
    "BenchReport",
    "ModeRow",
    "PipelineStandIn",
    "Stat",
    "batch_plan",
    "emit_report",
    "run_bench",
]
