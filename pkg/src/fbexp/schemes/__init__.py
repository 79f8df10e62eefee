"""Feedback coding schemes: configuration, binning, protocols and pilots."""

from .config import (
    PILOT,
    SchemeConfig,
    Variant,
    choose_subblock_count,
    emit_config,
    parse_config,
    parse_sweep,
    per_use_alphabet,
    subblock_rate,
)
from .partition import (
    PartitionMap,
    expected_collision_probability,
    sample_equal_partition,
    sample_partition_batch,
)
from .pilot import pilot_gamma, pilot_gamma_ladder, resolve_config
from .protocols import (
    BatchResult,
    EventClass,
    TrialOutcome,
    build_codebooks,
    make_scheme,
    replay,
    run_block_markov,
    run_compressed_feedback,
    run_multi_phase,
    run_no_feedback,
    run_two_phase,
)
