"""Hypergraph-counting detection and recovery for the spiked tensor model."""

from hypertpca.colorcoding import (
    ColorCodingPlan,
    Coloring,
    block_table,
    colorful_probability,
    detection_plan,
    f_tilde,
    g_necklace_dp,
    h_chain_dp,
    is_colorful,
    phi_tilde,
    recovery_plan,
    sample_coloring,
)
from hypertpca.counting import (
    exact_detection_stat,
    exact_recovery_score,
    null_second_moment,
    planted_mean,
    recovery_conditional_mean,
)
from hypertpca.errors import (
    CapacityError,
    ConfigError,
    FamilyError,
    HyperTPCAError,
    ParameterError,
    ShapeError,
)
from hypertpca.families import (
    BlockClass,
    BlockFamily,
    ChainClass,
    Family,
    NecklaceClass,
    aut_necklace_alg7,
    build_chains,
    build_family,
    build_necklaces,
    enumerate_blocks,
    read_manifest,
    write_manifest,
)
from hypertpca.harness import ExperimentConfig, TrialRecord, run, verify
from hypertpca.hypergraph import Hypergraph, automorphisms, canonical_class, leaf_orbits
from hypertpca.inference import DetectionConfig, RecoveryResult, detect, overlap, recover
from hypertpca.tensor_model import (
    ModelParams,
    Spike,
    SymmetricTensor,
    edge_monomial,
    sample_null,
    sample_planted,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
