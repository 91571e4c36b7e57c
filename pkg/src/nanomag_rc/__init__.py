"""Reservoir computing on dipolar-coupled perpendicular nanomagnets.

Macrospin LLG dynamics with spin-transfer-torque inputs, a closed-form
ridge readout, three benchmark tasks, a delay-window baseline and an
area-energy-delay comparison model.
"""

__version__ = "0.1.0"

from .baseline import DelayEmbedding, DelayWindowConfig, Encoding, embed, run_baseline
from .efficiency import CMOS_DEFAULT, NMRC_DEFAULT, PlatformMetrics, aedp, ratio_report
from .exceptions import (
    CalibrationError,
    ConfigurationError,
    IntegrationDivergedError,
    LayoutParseError,
    RankDeficiencyError,
)
from .magnetics import (
    LLGParams,
    MagnetArray,
    NanomagnetSpec,
    Role,
    SimState,
    SttDrive,
    dipole_field,
    effective_field,
    llg_rhs,
    relax,
    step,
    total_energy,
)
from .readout import RidgeModel, RidgeReadout, Scheme, classify, predict, ridge_fit
from .reservoir import (
    PRESETS,
    NanomagnetReservoir,
    ReservoirLayout,
    SymbolProtocol,
    build_layout,
    calibrate_drive,
    encode_symbol,
    get_preset,
    reset,
    run_sequence,
)
from .tasks import (
    EcaConfig,
    TaskDataset,
    TaskReport,
    eca_step,
    gen_boolean_dataset,
    gen_eca_observer_dataset,
    gen_waveform_dataset,
    run_task,
    score,
)

__all__ = [
    "__version__",
    "DelayEmbedding",
    "DelayWindowConfig",
    "Encoding",
    "embed",
    "run_baseline",
    "CMOS_DEFAULT",
    "NMRC_DEFAULT",
    "PlatformMetrics",
    "aedp",
    "ratio_report",
    "CalibrationError",
    "ConfigurationError",
    "IntegrationDivergedError",
    "LayoutParseError",
    "RankDeficiencyError",
    "LLGParams",
    "MagnetArray",
    "NanomagnetSpec",
    "Role",
    "SimState",
    "SttDrive",
    "dipole_field",
    "effective_field",
    "llg_rhs",
    "relax",
    "step",
    "total_energy",
    "RidgeModel",
    "RidgeReadout",
    "Scheme",
    "classify",
    "predict",
    "ridge_fit",
    "PRESETS",
    "NanomagnetReservoir",
    "ReservoirLayout",
    "SymbolProtocol",
    "build_layout",
    "calibrate_drive",
    "encode_symbol",
    "get_preset",
    "reset",
    "run_sequence",
    "EcaConfig",
    "TaskDataset",
    "TaskReport",
    "eca_step",
    "gen_boolean_dataset",
    "gen_eca_observer_dataset",
    "gen_waveform_dataset",
    "run_task",
    "score",
]
