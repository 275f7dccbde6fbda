"""Holographic self-controlled RIS pipeline.

Synthesize interference holograms on a 2D power-detector array, localize
terminals with a 2D-FFT fringe analysis, generate 1-bit beamforming
codings, and quantify the resulting link enhancement.
"""

from .beamforming import (
    CodingMatrix,
    LinkGainResult,
    PatternResult,
    PhaseProfile,
    farfield_phase_profile,
    link_gain,
    nearfield_phase_profile,
    pattern,
    quantize_1bit,
    read_coding_file,
    received_power,
    write_coding_file,
    write_pattern_csv,
)
from .errors import (
    AllCandidatesInfeasible,
    BaselineZeroPower,
    ConfigError,
    DegenerateInterference,
    FileFormatError,
    HolorisError,
    InfeasibleFrequency,
    NoPeak,
    SectorAmbiguous,
    SectorEmpty,
)
from .geometry import (
    SPEED_OF_LIGHT,
    AngularLocation,
    ArrayGeometry,
    SpatialFrequencyPair,
    angles_from_frequencies,
    angular_distance_deg,
    default_geometry,
    element_positions,
    position_at,
    spatial_frequencies,
    unit_direction,
    wrap_degrees,
)
from .localization import (
    LocalizationResult,
    OraclePolicy,
    SectorPolicy,
    SpectralPeaks,
    Spectrum,
    candidate_frequencies,
    disambiguate,
    extract_peaks,
    fft2,
    find_peak,
    format_report,
    localize,
    ml_refine,
    multiuser_localize,
    parse_report,
    peak_to_median_ratio,
    regulate,
)
from .wavefield import (
    DetectorModel,
    Hologram,
    Source,
    complex_field_at_array,
    read_hologram_csv,
    synthesize_hologram,
    write_hologram_csv,
)

__version__ = "0.1.0"

__all__ = [
    "AllCandidatesInfeasible",
    "AngularLocation",
    "ArrayGeometry",
    "BaselineZeroPower",
    "CodingMatrix",
    "ConfigError",
    "DegenerateInterference",
    "DetectorModel",
    "FileFormatError",
    "Hologram",
    "HolorisError",
    "InfeasibleFrequency",
    "LinkGainResult",
    "LocalizationResult",
    "NoPeak",
    "OraclePolicy",
    "PatternResult",
    "PhaseProfile",
    "SPEED_OF_LIGHT",
    "SectorAmbiguous",
    "SectorEmpty",
    "SectorPolicy",
    "Source",
    "SpatialFrequencyPair",
    "SpectralPeaks",
    "Spectrum",
    "angles_from_frequencies",
    "angular_distance_deg",
    "candidate_frequencies",
    "complex_field_at_array",
    "default_geometry",
    "disambiguate",
    "element_positions",
    "extract_peaks",
    "farfield_phase_profile",
    "fft2",
    "find_peak",
    "format_report",
    "link_gain",
    "localize",
    "ml_refine",
    "multiuser_localize",
    "nearfield_phase_profile",
    "parse_report",
    "pattern",
    "peak_to_median_ratio",
    "position_at",
    "quantize_1bit",
    "read_coding_file",
    "read_hologram_csv",
    "received_power",
    "regulate",
    "spatial_frequencies",
    "synthesize_hologram",
    "unit_direction",
    "wrap_degrees",
    "write_coding_file",
    "write_hologram_csv",
    "write_pattern_csv",
]
