"""Simulation and analysis of demultiplexed multiphoton interference in a tritter."""
from .budget import BudgetPipeline, downstream_rate, n_photon_source_rate, projection
from .circuit import (
    CircuitUnitary,
    PhaseCalibration,
    TritterLayout,
    build_tritter,
    compose,
    coupler_unitary,
    ideal_tritter,
    phase_from_voltage,
    phase_unitary,
)
from .demux import (
    DemuxScheme,
    RoutingWaveform,
    active_efficiency,
    conversion_rate_active,
    conversion_rate_passive,
    ideal_scheme_3arm,
)
from .detection import (
    ClickDistributionEstimator,
    ClickPatternCounts,
    DetectorTree,
    click_probability,
    estimate_distribution,
    simulate_counts,
)
from .fock import OccupationPattern, enumerate_patterns, pattern_multiplicity_factor
from .interference import (
    GramMatrix,
    OutputDistribution,
    PhotonEnsemble,
    SourceModel,
    chi_from_g2,
    distribution,
    gram_from_pairwise,
    mixture_distribution,
    oracle_distribution,
)
from .reconstruct import (
    UnitaryReconstructor,
    fidelity,
    reconstruct_unitary,
    simulate_measurements,
    visibility_matrix,
)

__version__ = "0.1.0"
