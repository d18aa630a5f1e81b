from dctpipe.cost.config import CostConfig, load_config
from dctpipe.cost.model import (
    ALL_VARIANTS,
    CONVENTIONS,
    DCT_FLOPS_PER_BLOCK,
    ArchSpec,
    Bottleneck,
    Comparison,
    CostReport,
    LayerCost,
    LayerKind,
    LayerSpec,
    Variant,
    build_variant,
    compare,
    comparison_csv,
    comparison_json,
    count,
    dct_preprocessing_flops,
    elaborate,
    parse_variant,
)

__all__ = [
    "CostConfig",
    "load_config",
    "ALL_VARIANTS",
    "CONVENTIONS",
    "DCT_FLOPS_PER_BLOCK",
    "ArchSpec",
    "Bottleneck",
    "Comparison",
    "CostReport",
    "LayerCost",
    "LayerKind",
    "LayerSpec",
    "Variant",
    "build_variant",
    "compare",
    "comparison_csv",
    "comparison_json",
    "count",
    "dct_preprocessing_flops",
    "elaborate",
    "parse_variant",
]
