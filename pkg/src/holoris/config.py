"""Run configuration: a strict JSON schema over the pipeline knobs.

A configuration document is a JSON object with optional sections
geometry, detector, sources, localization, and experiment.  Every key has
a documented default matching the reference hardware (32x32 panel, 0.02 m
pitch, 3.5 GHz carrier); unknown keys are rejected with the offending
field path so typos never silently fall back to defaults.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ConfigError
from .geometry import AngularLocation, ArrayGeometry, default_geometry
from .localization import OraclePolicy, SectorPolicy
from .wavefield import DetectorModel, Source


@dataclass(frozen=True)
class LocalizationSettings:
    """Spectral-analysis settings consumed by the experiment suites.

    Defaults match the suites (zero_pad_factor 2 with a matching DC guard);
    the bare localize API and subcommand default to the raw transform
    (factor 1, no guard) instead.
    """

    zero_pad_factor: int = 2
    dc_guard: int = 2
    significance_threshold: float = 6.0
    policy: OraclePolicy | SectorPolicy | None = None


@dataclass(frozen=True)
class ExperimentSettings:
    trials: int = 1
    seed: int = 0
    output_dir: str = "holoris_out"
    bs_locations: tuple = ()
    ue_locations: tuple = ()
    gain_phi_deg: tuple = tuple(float(p) for p in range(-60, 61, 15))
    ber_snr_db: tuple = tuple(float(s) for s in range(-10, 31))
    ber_gain_db: float = 16.4
    ber_modulation_order: int = 64


@dataclass(frozen=True)
class RunConfig:
    geometry: ArrayGeometry
    detector: DetectorModel
    sources: tuple
    localization: LocalizationSettings
    experiment: ExperimentSettings


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object")
    return value


def _reject_unknown(section: dict, allowed, path: str) -> None:
    unknown = set(section) - set(allowed)
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{path}.{name}: unknown key")


def _get_number(section: dict, key: str, default, path: str, minimum=None,
                strict_min=False, allow_none_as=None):
    if key not in section:
        return default
    value = section[key]
    if value is None and allow_none_as is not None:
        return allow_none_as
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    value = float(value)
    if minimum is not None:
        if strict_min and not value > minimum:
            raise ConfigError(f"{path}.{key}: must be > {minimum}")
        if not strict_min and not value >= minimum:
            raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    return value


def _get_int(section: dict, key: str, default, path: str, minimum=None):
    if key not in section:
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    return value


def _get_bool(section: dict, key: str, default, path: str):
    if key not in section:
        return default
    value = section[key]
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected true or false")
    return value


def _angle_pair(value, path: str) -> AngularLocation:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        raise ConfigError(f"{path}: expected [theta_deg, phi_deg]")
    try:
        return AngularLocation(float(value[0]), float(value[1]))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _parse_geometry(section: dict) -> ArrayGeometry:
    _reject_unknown(section, {"n_x", "n_z", "d_x_m", "d_z_m", "f_c_hz"}, "geometry")
    try:
        return ArrayGeometry(
            n_z=_get_int(section, "n_z", 32, "geometry", minimum=1),
            n_x=_get_int(section, "n_x", 32, "geometry", minimum=1),
            d_z_m=_get_number(section, "d_z_m", 0.02, "geometry", minimum=0.0,
                              strict_min=True),
            d_x_m=_get_number(section, "d_x_m", 0.02, "geometry", minimum=0.0,
                              strict_min=True),
            f_c_hz=_get_int(section, "f_c_hz", 3_500_000_000, "geometry", minimum=1),
        )
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from None


def _parse_detector(section: dict) -> DetectorModel:
    _reject_unknown(
        section,
        {"noise_std", "floor", "ceiling", "agc_enabled", "phase_jitter_std"},
        "detector",
    )
    try:
        return DetectorModel(
            noise_std=_get_number(section, "noise_std", 0.0, "detector", minimum=0.0),
            floor=_get_number(section, "floor", 0.0, "detector", minimum=0.0),
            ceiling=_get_number(section, "ceiling", math.inf, "detector",
                                allow_none_as=math.inf),
            agc_enabled=_get_bool(section, "agc_enabled", False, "detector"),
            phase_jitter_std=_get_number(section, "phase_jitter_std", 0.0,
                                         "detector", minimum=0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"detector: {exc}") from None


def _parse_source(entry, path: str) -> Source:
    section = _expect_mapping(entry, path)
    kind = section.get("kind", "far_field")
    if kind == "far_field":
        _reject_unknown(
            section,
            {"kind", "theta_deg", "phi_deg", "amplitude", "phase_rad", "frequency_tag"},
            path,
        )
        if "theta_deg" not in section or "phi_deg" not in section:
            raise ConfigError(f"{path}: far_field source needs theta_deg and phi_deg")
        angles = _angle_pair([section["theta_deg"], section["phi_deg"]], path)
        try:
            return Source.far_field(
                angles,
                amplitude=_get_number(section, "amplitude", 1.0, path, minimum=0.0),
                phase_rad=_get_number(section, "phase_rad", 0.0, path),
                frequency_tag=_get_int(section, "frequency_tag", 0, path, minimum=0),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if kind == "near_field":
        _reject_unknown(
            section,
            {"kind", "position_m", "amplitude", "phase_rad", "frequency_tag"},
            path,
        )
        pos = section.get("position_m")
        if (
            not isinstance(pos, (list, tuple))
            or len(pos) != 3
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in pos)
        ):
            raise ConfigError(f"{path}.position_m: expected [x_m, y_m, z_m]")
        try:
            return Source.near_field(
                [float(v) for v in pos],
                amplitude=_get_number(section, "amplitude", 1.0, path, minimum=0.0),
                phase_rad=_get_number(section, "phase_rad", 0.0, path),
                frequency_tag=_get_int(section, "frequency_tag", 0, path, minimum=0),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(f"{path}.kind: expected 'far_field' or 'near_field'")


def _default_sources() -> tuple:
    return (
        Source.far_field(AngularLocation(0.0, 0.0)),
        Source.far_field(AngularLocation(0.0, 30.0)),
    )


def _parse_range(section: dict, key: str, path: str):
    if key not in section or section[key] is None:
        return None
    value = section[key]
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
        or not value[0] <= value[1]
    ):
        raise ConfigError(f"{path}.{key}: expected [lo_deg, hi_deg] with lo <= hi")
    return (float(value[0]), float(value[1]))


def _parse_localization(section: dict) -> LocalizationSettings:
    _reject_unknown(
        section,
        {
            "zero_pad_factor",
            "dc_guard",
            "significance_threshold",
            "disambiguation",
            "oracle_deg",
            "sector_theta_deg",
            "sector_phi_deg",
        },
        "localization",
    )
    mode = section.get("disambiguation", "none")
    if mode not in ("none", "oracle", "sector"):
        raise ConfigError(
            "localization.disambiguation: expected 'none', 'oracle', or 'sector'"
        )
    policy = None
    if mode == "oracle":
        if "oracle_deg" not in section:
            raise ConfigError(
                "localization.oracle_deg: required for oracle disambiguation"
            )
        policy = OraclePolicy(
            truth=_angle_pair(section["oracle_deg"], "localization.oracle_deg")
        )
    elif mode == "sector":
        theta_range = _parse_range(section, "sector_theta_deg", "localization")
        phi_range = _parse_range(section, "sector_phi_deg", "localization")
        if theta_range is None and phi_range is None:
            raise ConfigError(
                "localization.sector_phi_deg: sector disambiguation needs at "
                "least one bounded axis"
            )
        policy = SectorPolicy(theta_range_deg=theta_range, phi_range_deg=phi_range)
    return LocalizationSettings(
        zero_pad_factor=_get_int(section, "zero_pad_factor", 2, "localization",
                                 minimum=1),
        dc_guard=_get_int(section, "dc_guard", 2, "localization", minimum=0),
        significance_threshold=_get_number(section, "significance_threshold", 6.0,
                                           "localization", minimum=0.0),
        policy=policy,
    )


def _parse_locations(section: dict, key: str, default: tuple, path: str) -> tuple:
    if key not in section:
        return default
    value = section[key]
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path}.{key}: expected a non-empty list of angle pairs")
    return tuple(
        _angle_pair(entry, f"{path}.{key}[{i}]") for i, entry in enumerate(value)
    )


def _parse_experiment(section: dict) -> ExperimentSettings:
    from .experiments import paper_bs_locations, paper_ue_locations

    _reject_unknown(
        section,
        {
            "trials",
            "seed",
            "output_dir",
            "bs_locations_deg",
            "ue_locations_deg",
            "gain_phi_deg",
            "ber_snr_db",
            "ber_gain_db",
            "ber_modulation_order",
        },
        "experiment",
    )
    defaults = ExperimentSettings()
    output_dir = section.get("output_dir", defaults.output_dir)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("experiment.output_dir: expected a non-empty string")
    gain_phi = section.get("gain_phi_deg")
    if gain_phi is None:
        gain_phi = defaults.gain_phi_deg
    else:
        if not isinstance(gain_phi, list) or not gain_phi or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in gain_phi
        ):
            raise ConfigError("experiment.gain_phi_deg: expected a list of degrees")
        gain_phi = tuple(float(v) for v in gain_phi)
    snr = section.get("ber_snr_db")
    if snr is None:
        snr = defaults.ber_snr_db
    else:
        if not isinstance(snr, list) or not snr or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in snr
        ):
            raise ConfigError("experiment.ber_snr_db: expected a list of dB values")
        snr = tuple(float(v) for v in snr)
    order = _get_int(section, "ber_modulation_order",
                     defaults.ber_modulation_order, "experiment", minimum=4)
    if order not in (4, 16, 64):
        raise ConfigError("experiment.ber_modulation_order: expected 4, 16, or 64")
    return ExperimentSettings(
        trials=_get_int(section, "trials", defaults.trials, "experiment", minimum=1),
        seed=_get_int(section, "seed", defaults.seed, "experiment", minimum=0),
        output_dir=output_dir,
        bs_locations=_parse_locations(
            section, "bs_locations_deg", paper_bs_locations(), "experiment"
        ),
        ue_locations=_parse_locations(
            section, "ue_locations_deg", paper_ue_locations(), "experiment"
        ),
        gain_phi_deg=gain_phi,
        ber_snr_db=snr,
        ber_gain_db=_get_number(section, "ber_gain_db", defaults.ber_gain_db,
                                "experiment"),
        ber_modulation_order=order,
    )


def parse_config(document: dict) -> RunConfig:
    """Validate a parsed JSON document into a RunConfig."""
    root = _expect_mapping(document, "config")
    _reject_unknown(
        root,
        {"geometry", "detector", "sources", "localization", "experiment"},
        "config",
    )
    geometry = _parse_geometry(_expect_mapping(root.get("geometry", {}), "geometry"))
    detector = _parse_detector(_expect_mapping(root.get("detector", {}), "detector"))
    if "sources" in root:
        raw = root["sources"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("sources: expected a non-empty list")
        sources = tuple(
            _parse_source(entry, f"sources[{i}]") for i, entry in enumerate(raw)
        )
    else:
        sources = _default_sources()
    localization = _parse_localization(
        _expect_mapping(root.get("localization", {}), "localization")
    )
    experiment = _parse_experiment(
        _expect_mapping(root.get("experiment", {}), "experiment")
    )
    return RunConfig(
        geometry=geometry,
        detector=detector,
        sources=sources,
        localization=localization,
        experiment=experiment,
    )


def load_config(path) -> RunConfig:
    """Read and validate a JSON configuration file."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON: {exc}") from None
    return parse_config(document)


def config_as_dict(cfg: RunConfig) -> dict:
    """Canonical dict form of a validated config, for manifests."""
    sources = []
    for s in cfg.sources:
        entry = {
            "kind": s.kind,
            "amplitude": s.amplitude,
            "phase_rad": s.phase_rad,
            "frequency_tag": s.frequency_tag,
        }
        if s.kind == "far_field":
            entry["theta_deg"] = s.angles.theta_deg
            entry["phi_deg"] = s.angles.phi_deg
        else:
            entry["position_m"] = list(s.position)
        sources.append(entry)
    loc = cfg.localization
    policy: dict = {"disambiguation": "none"}
    if isinstance(loc.policy, OraclePolicy):
        policy = {
            "disambiguation": "oracle",
            "oracle_deg": [loc.policy.truth.theta_deg, loc.policy.truth.phi_deg],
        }
    elif isinstance(loc.policy, SectorPolicy):
        policy = {
            "disambiguation": "sector",
            "sector_theta_deg": (
                list(loc.policy.theta_range_deg)
                if loc.policy.theta_range_deg
                else None
            ),
            "sector_phi_deg": (
                list(loc.policy.phi_range_deg) if loc.policy.phi_range_deg else None
            ),
        }
    return {
        "geometry": {
            "n_z": cfg.geometry.n_z,
            "n_x": cfg.geometry.n_x,
            "d_z_m": cfg.geometry.d_z_m,
            "d_x_m": cfg.geometry.d_x_m,
            "f_c_hz": cfg.geometry.f_c_hz,
        },
        "detector": {
            "noise_std": cfg.detector.noise_std,
            "floor": cfg.detector.floor,
            "ceiling": (
                None if math.isinf(cfg.detector.ceiling) else cfg.detector.ceiling
            ),
            "agc_enabled": cfg.detector.agc_enabled,
            "phase_jitter_std": cfg.detector.phase_jitter_std,
        },
        "sources": sources,
        "localization": {
            "zero_pad_factor": loc.zero_pad_factor,
            "dc_guard": loc.dc_guard,
            "significance_threshold": loc.significance_threshold,
            **policy,
        },
        "experiment": {
            "trials": cfg.experiment.trials,
            "seed": cfg.experiment.seed,
            "output_dir": cfg.experiment.output_dir,
            "bs_locations_deg": [
                [b.theta_deg, b.phi_deg] for b in cfg.experiment.bs_locations
            ],
            "ue_locations_deg": [
                [u.theta_deg, u.phi_deg] for u in cfg.experiment.ue_locations
            ],
            "gain_phi_deg": list(cfg.experiment.gain_phi_deg),
            "ber_snr_db": list(cfg.experiment.ber_snr_db),
            "ber_gain_db": cfg.experiment.ber_gain_db,
            "ber_modulation_order": cfg.experiment.ber_modulation_order,
        },
    }
