"""Fringe records: synthesis, storage, and damped-fringe estimation.

The interferometric observable is the probability of detecting the
particle in the symmetric output port,

    S(t) = 1/2 + Re rho_LR(t),

so every model in :mod:`gravfringe.twostate` predicts a damped fringe

    S(t) = 1/2 + (C/2) exp(-lambda t) cos(omega t + phi)

with contrast C, decay rate lambda and fringe frequency omega.  This
module synthesises such records (optionally with additive Gaussian
noise), writes and reads them as CSV, and recovers (lambda, omega, C)
with uncertainties by nonlinear least squares seeded from a
periodogram.

Records are deterministic functions of (model, times, noise_sd, seed):
the same seed always reproduces the same noise stream, and a noiseless
record never touches the generator at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import hilbert, lombscargle

from .errors import (
    FitConvergenceError,
    InsufficientSpanError,
    RecordError,
)
from .twostate import (
    PLUS_STATE,
    DynamicsModel,
    GeneralLinear,
    TwoLevelState,
    analytic_coherence,
    model_descriptor,
    spectral_solution,
)

__all__ = [
    "FringeRecord",
    "FitResult",
    "signal_from_state",
    "synthesize_record",
    "write_record",
    "read_record",
    "fit_damped_fringe",
    "write_fit_result",
    "read_fit_result",
    "population_shift",
]


@dataclass(frozen=True)
class FringeRecord:
    """A sampled interferometer signal.

    ``population`` (the left-arm population track) is present only when
    the generating model moves populations, i.e. the general linear
    model.  ``model`` is a short descriptor string recorded for
    provenance; ``noise_sd`` is the standard deviation of the additive
    Gaussian noise (0 for noiseless records) and ``seed`` the generator
    seed actually used (None for noiseless records).
    """

    times: np.ndarray
    signal: np.ndarray
    population: np.ndarray | None = None
    model: str = "unknown"
    seed: int | None = None
    noise_sd: float = 0.0

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        signal = np.asarray(self.signal, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "signal", signal)
        if times.ndim != 1 or times.size < 2:
            raise RecordError("a record needs a 1-d time axis with >= 2 samples")
        if signal.shape != times.shape:
            raise RecordError("signal and times must have matching shapes")
        if np.any(np.diff(times) <= 0.0):
            raise RecordError("record times must be strictly increasing")
        if self.population is not None:
            population = np.asarray(self.population, dtype=float)
            object.__setattr__(self, "population", population)
            if population.shape != times.shape:
                raise RecordError("population and times must have matching shapes")
        if self.noise_sd == 0.0:
            # a noiseless signal is a probability
            if np.any(signal < -1e-9) or np.any(signal > 1.0 + 1e-9):
                raise RecordError(
                    "noiseless signal leaves [0, 1]; the record is inconsistent "
                    "with noise_sd = 0"
                )

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])


def signal_from_state(state: TwoLevelState) -> float:
    """Symmetric-port detection probability 1/2 + Re rho_LR."""
    return 0.5 + state.rho_lr.real


def synthesize_record(
    model: DynamicsModel,
    times,
    noise_sd: float = 0.0,
    seed: int | None = None,
    initial: TwoLevelState = PLUS_STATE,
) -> FringeRecord:
    """Sample a model's fringe signal at the given times.

    Closed forms are used throughout: the single-exponential models via
    :func:`analytic_coherence`, the general linear model via
    :func:`spectral_solution` (which also yields the population track,
    included in the record for that model only).  Gaussian noise of
    standard deviation ``noise_sd`` is added from a fresh
    ``default_rng(seed)``; a ``noise_sd`` of zero produces a fully
    deterministic record and records ``seed=None``.
    """
    if noise_sd < 0.0:
        raise ValueError("noise_sd must be non-negative")
    ts = np.asarray(times, dtype=float)
    population = None
    if isinstance(model, GeneralLinear):
        states = [spectral_solution(model, initial, float(t)) for t in ts]
        coherence = np.array([s.rho_lr for s in states])
        population = np.array([s.rho_ll for s in states])
    else:
        coherence = analytic_coherence(model, initial, ts)
    signal = 0.5 + coherence.real
    used_seed: int | None = None
    if noise_sd > 0.0:
        used_seed = 0 if seed is None else int(seed)
        rng = np.random.default_rng(used_seed)
        signal = signal + rng.normal(0.0, noise_sd, size=signal.shape)
    return FringeRecord(
        times=ts,
        signal=signal,
        population=population,
        model=model_descriptor(model),
        seed=used_seed,
        noise_sd=float(noise_sd),
    )


# ------------------------------------------------------------------ CSV

_FLOAT_FORMAT = "%.17g"  # shortest round-trip-safe fixed choice


def write_record(record: FringeRecord, path: str | Path) -> None:
    """Write a record as CSV with a one-line metadata header.

    Layout: ``# model=...,seed=...,noise_sd=...`` then a column header
    ``t_s,signal[,population]`` and one row per sample.  Identical
    records produce byte-identical files.
    """
    lines = [
        f"# model={record.model},seed={record.seed},noise_sd={record.noise_sd!r}"
    ]
    if record.population is None:
        lines.append("t_s,signal")
        for t, s in zip(record.times, record.signal):
            lines.append(f"{t:.17g},{s:.17g}")
    else:
        lines.append("t_s,signal,population")
        for t, s, p in zip(record.times, record.signal, record.population):
            lines.append(f"{t:.17g},{s:.17g},{p:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_record(path: str | Path) -> FringeRecord:
    """Read a record written by :func:`write_record`."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise RecordError(f"{path}: missing metadata header line")
    meta: dict[str, str] = {}
    for item in text[0].lstrip("#").strip().split(","):
        key, _, value = item.partition("=")
        meta[key.strip()] = value.strip()
    for required in ("model", "seed", "noise_sd"):
        if required not in meta:
            raise RecordError(f"{path}: header missing {required!r}")
    if len(text) < 2:
        raise RecordError(f"{path}: missing column header")
    columns = text[1].split(",")
    if columns[:2] != ["t_s", "signal"]:
        raise RecordError(f"{path}: expected columns t_s,signal, got {text[1]!r}")
    has_population = columns == ["t_s", "signal", "population"]
    rows = [line.split(",") for line in text[2:] if line.strip()]
    try:
        data = np.array([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise RecordError(f"{path}: non-numeric sample value ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise RecordError(f"{path}: ragged or empty sample table")
    seed = None if meta["seed"] == "None" else int(meta["seed"])
    return FringeRecord(
        times=data[:, 0],
        signal=data[:, 1],
        population=data[:, 2] if has_population else None,
        model=meta["model"],
        seed=seed,
        noise_sd=float(meta["noise_sd"]),
    )


# ------------------------------------------------------------------ fit


@dataclass(frozen=True)
class FitResult:
    """Damped-fringe estimate with uncertainties.

    ``covariance`` is the 3x3 Gauss-Newton covariance of
    (lambda_hat, omega_hat, contrast_hat), marginalised over the phase.
    ``lambda_at_bound`` flags a fit pinned at lambda = 0: a record that
    would prefer negative damping (growing fringes) surfaces here
    instead of in an unphysical estimate.
    """

    lambda_hat: float
    omega_hat: float
    contrast_hat: float
    phase_hat: float
    covariance: np.ndarray
    residual_norm: float
    n_samples: int
    lambda_at_bound: bool = False

    @property
    def standard_errors(self) -> np.ndarray:
        """sqrt of the covariance diagonal: SE of (lambda, omega, contrast)."""
        return np.sqrt(np.diag(self.covariance))


def _fringe(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    lam, omega, contrast, phase = params
    return 0.5 + 0.5 * contrast * np.exp(-lam * t) * np.cos(omega * t + phase)


def _periodogram_peak(times: np.ndarray, signal: np.ndarray) -> float:
    """Dominant angular frequency of the detrended signal.

    Uniform records use a zero-padded FFT with parabolic peak
    interpolation; non-uniform records fall back to a Lomb-Scargle scan.
    Returns omega in rad per unit time.
    """
    detrended = signal - signal.mean()
    dt = np.diff(times)
    span = times[-1] - times[0]
    if np.allclose(dt, dt[0], rtol=1e-8):
        n = len(times)
        padded = 8 * n
        amplitude = np.abs(np.fft.rfft(detrended, n=padded))
        freqs = 2.0 * math.pi * np.fft.rfftfreq(padded, d=float(dt[0]))
        k = int(np.argmax(amplitude[1:])) + 1  # skip the DC bin
        if 1 <= k < len(amplitude) - 1:
            a, b, c = amplitude[k - 1], amplitude[k], amplitude[k + 1]
            denom = a - 2 * b + c
            shift = 0.5 * (a - c) / denom if denom != 0.0 else 0.0
            return float(freqs[k] + shift * (freqs[1] - freqs[0]))
        return float(freqs[k])
    # non-uniform: scan up to the mean Nyquist rate
    omega_max = math.pi / float(np.mean(dt))
    omegas = np.linspace(2.0 * math.pi / span / 4.0, omega_max, 4096)
    power = lombscargle(times, detrended, omegas)
    return float(omegas[np.argmax(power)])


def _envelope_seed(
    times: np.ndarray, signal: np.ndarray
) -> tuple[float, float]:
    """(lambda0, contrast0) from the analytic-signal envelope.

    Log-linear regression of the Hilbert envelope over the middle of
    the record, clipped to non-negative decay.
    """
    detrended = signal - signal.mean()
    envelope = np.abs(hilbert(detrended))
    n = len(times)
    inner = slice(n // 10, n - n // 10 or None)
    t_in = times[inner]
    env_in = np.clip(envelope[inner], 1e-12, None)
    slope, intercept = np.polyfit(t_in, np.log(env_in), 1)
    lam0 = max(-float(slope), 0.0)
    contrast0 = float(np.clip(2.0 * math.exp(intercept), 1e-3, 2.0))
    return lam0, contrast0


def fit_damped_fringe(
    record: FringeRecord,
    initial_guess: tuple[float, float, float, float] | None = None,
    tolerance: float = 1e-12,
) -> FitResult:
    """Estimate (lambda, omega, contrast, phase) from a record.

    The model is S(t) = 1/2 + (C/2) e^{-lambda t} cos(omega t + phi).
    Seeds come from a periodogram peak (omega), a Hilbert-envelope
    regression (lambda, C), and the first samples (phi), unless an
    explicit ``initial_guess`` (lambda, omega, C, phi) is given.
    Bounded least squares keeps lambda >= 0; a record preferring
    growth pins the estimate at zero and sets ``lambda_at_bound``.

    Raises :class:`InsufficientSpanError` when the record covers fewer
    than two periods at the seeded frequency, and
    :class:`FitConvergenceError` when the optimiser fails.
    """
    times = record.times
    signal = record.signal
    if initial_guess is not None:
        lam0, omega0, contrast0, phase0 = map(float, initial_guess)
    else:
        omega0 = _periodogram_peak(times, signal)
        lam0, contrast0 = _envelope_seed(times, signal)
        # phase from the dominant quadrature at t approx times[0]
        rotated = (signal - signal.mean()) * np.exp(-1j * omega0 * times)
        phase0 = float(-np.angle(np.mean(rotated)))
    if omega0 <= 0.0:
        raise InsufficientSpanError("periodogram found no positive frequency")
    periods = record.span * omega0 / (2.0 * math.pi)
    if periods < 2.0:
        raise InsufficientSpanError(
            f"record spans {periods:.2f} fringe periods at the seed frequency; "
            "at least 2 are needed to separate decay from frequency"
        )

    def residuals(params: np.ndarray) -> np.ndarray:
        return _fringe(params, times) - signal

    x0 = np.array([lam0, omega0, contrast0, phase0])
    result = least_squares(
        residuals,
        x0,
        bounds=([0.0, 0.0, 0.0, -2.0 * math.pi], [np.inf, np.inf, 2.0, 2.0 * math.pi]),
        method="trf",
        xtol=tolerance,
        ftol=tolerance,
        gtol=tolerance,
    )
    if not result.success:
        raise FitConvergenceError(
            f"fringe fit did not converge (status {result.status}): "
            f"{result.message}"
        )
    lam, omega, contrast, phase = result.x
    residual_norm = float(np.linalg.norm(result.fun))
    n = len(times)
    dof = max(n - 4, 1)
    sigma_sq = residual_norm**2 / dof
    jac = result.jac
    # Gauss-Newton covariance, pseudo-inverted for safety near the
    # lambda = 0 bound where the Jacobian can lose rank
    cov4 = sigma_sq * np.linalg.pinv(jac.T @ jac)
    cov4 = 0.5 * (cov4 + cov4.T)  # pinv symmetry only holds to rounding
    keep = [0, 1, 2]
    covariance = cov4[np.ix_(keep, keep)]
    return FitResult(
        lambda_hat=float(lam),
        omega_hat=float(omega),
        contrast_hat=float(contrast),
        phase_hat=float(math.remainder(phase, 2.0 * math.pi)),
        covariance=covariance,
        residual_norm=residual_norm,
        n_samples=n,
        lambda_at_bound=bool(lam == 0.0),
    )


_COV_NAMES = ("lambda", "omega", "contrast")


def write_fit_result(fit: FitResult, path: str | Path) -> None:
    """Serialise a fit as a flat key/value text block."""
    lines = [
        f"lambda_hat = {fit.lambda_hat!r}",
        f"omega_hat = {fit.omega_hat!r}",
        f"contrast_hat = {fit.contrast_hat!r}",
        f"phase_hat = {fit.phase_hat!r}",
        f"residual_norm = {fit.residual_norm!r}",
        f"n_samples = {fit.n_samples}",
        f"lambda_at_bound = {str(fit.lambda_at_bound).lower()}",
    ]
    for i, a in enumerate(_COV_NAMES):
        for j, b in enumerate(_COV_NAMES):
            if j < i:
                continue
            lines.append(f"cov_{a}_{b} = {float(fit.covariance[i, j])!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_fit_result(path: str | Path) -> FitResult:
    """Read a fit result written by :func:`write_fit_result`."""
    values: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    covariance = np.zeros((3, 3))
    for i, a in enumerate(_COV_NAMES):
        for j, b in enumerate(_COV_NAMES):
            if j < i:
                continue
            covariance[i, j] = covariance[j, i] = float(values[f"cov_{a}_{b}"])
    return FitResult(
        lambda_hat=float(values["lambda_hat"]),
        omega_hat=float(values["omega_hat"]),
        contrast_hat=float(values["contrast_hat"]),
        phase_hat=float(values["phase_hat"]),
        covariance=covariance,
        residual_norm=float(values["residual_norm"]),
        n_samples=int(values["n_samples"]),
        lambda_at_bound=values["lambda_at_bound"] == "true",
    )


def population_shift(record: FringeRecord) -> float:
    """Late-time population shift: mean of the final quarter minus 1/2.

    Requires a population track (general-model records); raises
    :class:`RecordError` otherwise.  The "final quarter" is by time,
    not by sample count, so non-uniform records weight correctly.
    """
    if record.population is None:
        raise RecordError(
            "record has no population track; only general-model records "
            "carry one"
        )
    cutoff = record.times[0] + 0.75 * record.span
    tail = record.population[record.times >= cutoff]
    if tail.size == 0:
        raise RecordError("no samples in the final quarter of the record")
    return float(np.mean(tail) - 0.5)
