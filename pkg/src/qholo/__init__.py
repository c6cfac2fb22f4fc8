"""Heralded single-photon holography: simulation and analysis."""

from .coincidence import (
    CoincidenceReport,
    DelayCalibration,
    coincidence_report,
    count_coincidences,
    count_triples,
    find_delay,
    g2_zero,
    hbt_g2,
    rolling_g2,
)
from .errors import (
    BoundsError,
    ConfigurationError,
    DataError,
    DetectionError,
    FitError,
    InsufficientFringeError,
    ParseError,
    QHoloError,
    UndefinedStatisticError,
)
from .interferometer import (
    BeamProfile,
    ObjectMap,
    RateCalibration,
    TiltConfig,
    intensity_map,
    rate_maps,
)
from .metrics import FitParams, SnrInputs, fit_fringe, fringe_snr, snr_total, visibility
from .reconstruct import (
    ComplexField,
    Method,
    OrderMask,
    fft2,
    ifft2,
    isolate_order,
    linear_phase_reference,
    locate_first_order,
    reconstruct,
    reconstruct_hologram,
    recenter_alternative,
    remove_linear_phase,
)
from .scan import HologramFrame, ScanConfig, acquire, acquire_line
from .source_sim import (
    Bunching,
    ClassicalSourceConfig,
    DetectorConfig,
    SourceConfig,
    TimeTagStream,
    apply_detector,
    generate_classical,
    generate_pairs,
    split_beam,
)

__version__ = "0.1.0"
