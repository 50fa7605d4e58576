"""Synthesis of single-shot dispersive-readout I/Q trajectories.

The cavity pointer state for a qubit frozen in state s obeys the rotating-frame
ODE

    d(alpha)/dt = -i*E(t) - i*(Delta + chi_s)*alpha - (kappa/2)*alpha,

with chi_0 = +chi and chi_1 = -chi.  A shot is synthesized as the bin-averaged
pointer path of the (possibly decaying/heating) qubit plus additive Gaussian
measurement noise whose per-quadrature, per-bin variance is

    sigma^2 = 1 / (4 * eta * kappa * dt),

where eta is the amplification-chain efficiency.  Each shot draws from an RNG
stream derived from (seed, shot_id), so any sampling schedule produces
identical output.

Relaxation and heating are modeled as at most one instantaneous qubit jump per
shot; the cavity field is continuous across the jump and follows the new
state's dynamics afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import IntegrationDivergedError, InvalidSpecError

__all__ = [
    "TimeGrid",
    "CavityParams",
    "DecoherenceRates",
    "AmplifierModel",
    "NoiseModel",
    "PointerPaths",
    "Trajectory",
    "Dataset",
    "DatasetSpec",
    "evolve_pointer_states",
    "steady_state",
    "sample_trajectory",
    "generate_dataset",
    "noise_sigma",
    "predicted_separation",
    "calibrate_drive_amplitude",
    "default_grid",
    "default_dataset_spec",
    "weak_drive_cavity_params",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform acquisition grid: n_points bins covering [0, total_time]."""

    total_time: float
    n_points: int

    def __post_init__(self):
        if not (self.total_time > 0 and math.isfinite(self.total_time)):
            raise InvalidSpecError(f"total_time must be positive, got {self.total_time}")
        if self.n_points < 1:
            raise InvalidSpecError(f"n_points must be >= 1, got {self.n_points}")

    @property
    def dt(self) -> float:
        return self.total_time / self.n_points

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_points) + 0.5) * self.dt

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n_points + 1) * self.dt


@dataclass(frozen=True)
class CavityParams:
    """Cavity/readout parameters in SI units (rad/s for rates).

    ``drive`` is a piecewise-constant complex amplitude schedule: a sequence of
    (start_time, amplitude) segments, first segment starting at t = 0.
    """

    kappa: float
    chi: float
    detuning: float = 0.0
    drive: tuple = ()

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise InvalidSpecError(f"kappa must be positive, got {self.kappa}")
        segs = tuple((float(t), complex(a)) for t, a in self.drive)
        if not segs:
            raise InvalidSpecError("drive schedule is empty")
        if segs[0][0] != 0.0:
            raise InvalidSpecError("first drive segment must start at t=0")
        starts = [t for t, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise InvalidSpecError("drive segment start times must be strictly increasing")
        object.__setattr__(self, "drive", segs)

    @classmethod
    def constant_drive(cls, kappa: float, chi: float, amplitude: complex,
                       detuning: float = 0.0) -> "CavityParams":
        return cls(kappa=kappa, chi=chi, detuning=detuning, drive=((0.0, amplitude),))

    def chi_for_state(self, state: int) -> float:
        return self.chi if state == 0 else -self.chi

    def decay_const(self, state: int) -> complex:
        """lambda_s = i(Delta + chi_s) + kappa/2; alpha' = -iE - lambda_s*alpha."""
        return 1j * (self.detuning + self.chi_for_state(state)) + self.kappa / 2.0

    def drive_at(self, t: float) -> complex:
        amp = self.drive[0][1]
        for start, a in self.drive:
            if t >= start:
                amp = a
            else:
                break
        return amp


@dataclass(frozen=True)
class DecoherenceRates:
    """Jump and preparation error parameters.

    Times are exponential time constants in seconds; ``math.inf`` disables the
    channel.  ``prep_error_ground`` (``_excited``) is the probability that a
    shot requested in 0 (1) actually starts in the other state.
    """

    t1_time: float = math.inf
    heating_time: float = math.inf
    prep_error_ground: float = 0.0
    prep_error_excited: float = 0.0

    def __post_init__(self):
        for name in ("t1_time", "heating_time"):
            v = getattr(self, name)
            if not v > 0:
                raise InvalidSpecError(f"{name} must be positive, got {v}")
        for name in ("prep_error_ground", "prep_error_excited"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise InvalidSpecError(f"{name} must be in [0, 1), got {p}")


@dataclass(frozen=True)
class AmplifierModel:
    """Amplification chain: kind, added noise quanta, power gain, phase."""

    kind: str = "phase_preserving"
    added_noise: float = 0.5
    gain: float = 100.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("phase_preserving", "phase_sensitive"):
            raise InvalidSpecError(f"unknown amplifier kind {self.kind!r}")
        if self.gain <= 1.0:
            raise InvalidSpecError(f"gain must exceed 1, got {self.gain}")
        if self.kind == "phase_preserving":
            floor = 0.5 * (1.0 - 1.0 / self.gain)
            if self.added_noise < floor:
                raise InvalidSpecError(
                    f"phase-preserving added noise {self.added_noise} below "
                    f"quantum floor {floor:.6f}")
            if self.efficiency > 0.5:
                raise InvalidSpecError(
                    "phase-preserving efficiency exceeds 1/2; added_noise must "
                    "be >= 1/2")
        else:
            if self.added_noise < 0.0:
                raise InvalidSpecError("phase-sensitive added noise must be >= 0")

    @property
    def efficiency(self) -> float:
        return 1.0 / (1.0 + 2.0 * self.added_noise)


@dataclass(frozen=True)
class NoiseModel:
    """Acquisition-chain spectral model.

    ``bandwidth`` None means an all-pass chain: white noise, unfiltered
    means.  A finite bandwidth B models the analog low-pass in front of the
    digitizer: the recorded means AND the noise are confined to the complex
    Fourier modes with |f| <= B on the acquisition window, which correlates
    neighboring bins.  The marginal per-quadrature noise variance per bin is
    sigma^2 in either case.
    """

    bandwidth: float | None = None

    def __post_init__(self):
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise InvalidSpecError(f"bandwidth must be positive or None, got {self.bandwidth}")

    def n_harmonics(self, grid: TimeGrid) -> int:
        if self.bandwidth is None:
            return 0
        return max(1, int(round(self.bandwidth * grid.total_time)))

    def mode_matrix(self, grid: TimeGrid) -> np.ndarray | None:
        """(n_points, n_modes) complex basis; None for white noise."""
        if self.bandwidth is None:
            return None
        m = self.n_harmonics(grid)
        k = np.arange(-m, m + 1)
        t = grid.centers
        return np.exp(2j * np.pi * np.outer(t, k) / grid.total_time)

    def projection(self, grid: TimeGrid) -> np.ndarray | None:
        """In-band projector applied to every recorded mean path.

        The mode columns are orthogonal on bin centers (discrete Fourier
        vectors), so P = M M^H / n_points.  None for the all-pass chain.
        """
        modes = self.mode_matrix(grid)
        if modes is None:
            return None
        return (modes @ modes.conj().T) / grid.n_points


def noise_sigma(amplifier: AmplifierModel, grid: TimeGrid, kappa: float) -> float:
    """Per-quadrature, per-bin noise standard deviation."""
    return math.sqrt(1.0 / (4.0 * amplifier.efficiency * kappa * grid.dt))


@dataclass(frozen=True)
class PointerPaths:
    """Deterministic pointer paths for both qubit states, at bin centers."""

    grid: TimeGrid
    alpha0: np.ndarray
    alpha1: np.ndarray

    @property
    def beta(self) -> np.ndarray:
        """Pointer separation alpha0 - alpha1."""
        return self.alpha0 - self.alpha1

    @property
    def nu(self) -> np.ndarray:
        """Pointer sum alpha0 + alpha1."""
        return self.alpha0 + self.alpha1

    def for_state(self, state: int) -> np.ndarray:
        return self.alpha0 if state == 0 else self.alpha1


@dataclass(frozen=True)
class Trajectory:
    """One measured shot."""

    samples: np.ndarray
    prep_label: int
    shot_id: int
    jump_record: tuple = ()
    initial_state: int | None = None


@dataclass(frozen=True)
class DatasetSpec:
    """Everything needed to synthesize a labeled dataset (except the seed)."""

    n_shots: int
    grid: TimeGrid
    cavity: CavityParams
    rates: DecoherenceRates = DecoherenceRates()
    amplifier: AmplifierModel = AmplifierModel()
    noise: NoiseModel = NoiseModel()
    extra_metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_shots < 2 or self.n_shots % 2 != 0:
            raise InvalidSpecError(
                f"n_shots must be an even integer >= 2, got {self.n_shots}")


@dataclass
class Dataset:
    """Labeled shot collection: complex samples, labels, ground-truth records.

    ``samples[i, j]`` is the complex I/Q value of shot i in bin j.  Shots are
    ordered ground block first, then excited; ``jump_records[i]`` is a tuple of
    (time, from_state, to_state) events (at most one per shot).
    """

    spec: DatasetSpec
    seed: int
    samples: np.ndarray
    labels: np.ndarray
    jump_records: list
    initial_states: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def grid(self) -> TimeGrid:
        return self.spec.grid

    @property
    def n_shots(self) -> int:
        return self.samples.shape[0]

    def trajectory(self, i: int) -> Trajectory:
        return Trajectory(
            samples=self.samples[i],
            prep_label=int(self.labels[i]),
            shot_id=i,
            jump_record=tuple(self.jump_records[i]),
            initial_state=int(self.initial_states[i]),
        )

    def class_indices(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def truncated(self, n_bins: int) -> "Dataset":
        """View of the dataset keeping only the first n_bins bins."""
        if not 1 <= n_bins <= self.grid.n_points:
            raise InvalidSpecError(f"n_bins must be in [1, {self.grid.n_points}]")
        grid = TimeGrid(self.grid.dt * n_bins, n_bins)
        spec = DatasetSpec(
            n_shots=self.spec.n_shots, grid=grid, cavity=self.spec.cavity,
            rates=self.spec.rates, amplifier=self.spec.amplifier,
            noise=self.spec.noise, extra_metadata=self.spec.extra_metadata)
        return Dataset(spec=spec, seed=self.seed,
                       samples=self.samples[:, :n_bins], labels=self.labels,
                       jump_records=self.jump_records,
                       initial_states=self.initial_states,
                       metadata=dict(self.metadata, truncated_bins=n_bins))


# ---------------------------------------------------------------------------
# Pointer-state dynamics


def evolve_pointer_states(cavity: CavityParams, grid: TimeGrid,
                          n_substeps: int = 12) -> PointerPaths:
    """Integrate both pointer paths with fixed-step RK4, alpha(0) = 0.

    Uses ``n_substeps`` internal steps per output bin (minimum 10 enforced) and
    reports the value at each bin center.
    """
    if n_substeps < 10:
        raise InvalidSpecError(f"n_substeps must be >= 10, got {n_substeps}")
    if n_substeps % 2 != 0:
        raise InvalidSpecError("n_substeps must be even so bin centers land on the fine grid")
    paths = []
    for state in (0, 1):
        lam = cavity.decay_const(state)
        h = grid.dt / n_substeps
        n_fine = grid.n_points * n_substeps
        alpha = 0.0 + 0.0j
        out = np.empty(grid.n_points, dtype=complex)
        half_idx = n_substeps // 2

        def f(tt, a, lam=lam):
            return -1j * cavity.drive_at(tt) - lam * a

        for step in range(n_fine):
            t = step * h
            k1 = f(t, alpha)
            k2 = f(t + h / 2, alpha + h / 2 * k1)
            k3 = f(t + h / 2, alpha + h / 2 * k2)
            k4 = f(t + h, alpha + h * k3)
            alpha = alpha + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            if step % n_substeps == half_idx - 1:
                out[step // n_substeps] = alpha
        if not np.all(np.isfinite(out.view(float))):
            raise IntegrationDivergedError(
                f"pointer path for state {state} diverged (non-finite values)")
        paths.append(out)
    return PointerPaths(grid=grid, alpha0=paths[0], alpha1=paths[1])


def steady_state(cavity: CavityParams, state: int) -> complex:
    """Fixed point -iE/lambda_s for the final drive segment."""
    return -1j * cavity.drive[-1][1] / cavity.decay_const(state)


def _alpha_exact(cavity: CavityParams, state: int, times: np.ndarray) -> np.ndarray:
    """Closed-form pointer path at arbitrary times (piecewise-constant drive)."""
    lam = cavity.decay_const(state)
    times = np.asarray(times, dtype=float)
    out = np.empty(times.shape, dtype=complex)
    alpha_edge = 0.0 + 0.0j
    segs = cavity.drive
    for i, (start, amp) in enumerate(segs):
        end = segs[i + 1][0] if i + 1 < len(segs) else math.inf
        a_ss = -1j * amp / lam
        mask = (times >= start) & (times < end)
        if np.any(mask):
            out[mask] = a_ss + (alpha_edge - a_ss) * np.exp(-lam * (times[mask] - start))
        if math.isfinite(end):
            alpha_edge = a_ss + (alpha_edge - a_ss) * np.exp(-lam * (end - start))
    return out


def _integral_exact(cavity: CavityParams, state: int, a: float, b: float) -> complex:
    """Exact integral of the pointer path over [a, b], splitting drive segments."""
    lam = cavity.decay_const(state)
    segs = cavity.drive
    total = 0.0 + 0.0j
    alpha_edge = 0.0 + 0.0j
    for i, (start, amp) in enumerate(segs):
        end = segs[i + 1][0] if i + 1 < len(segs) else math.inf
        a_ss = -1j * amp / lam
        lo, hi = max(a, start), min(b, end)
        if hi > lo:
            a_in = a_ss + (alpha_edge - a_ss) * np.exp(-lam * (lo - start))
            total += a_ss * (hi - lo) + (a_in - a_ss) * (
                1.0 - np.exp(-lam * (hi - lo))) / lam
        if math.isfinite(end):
            alpha_edge = a_ss + (alpha_edge - a_ss) * np.exp(-lam * (end - start))
    return total


def _bin_mean_path(cavity: CavityParams, state: int, grid: TimeGrid) -> np.ndarray:
    """Exact boxcar (bin-averaged) pointer path, one value per bin."""
    lam = cavity.decay_const(state)
    edges = grid.edges
    segs = cavity.drive
    out = np.zeros(grid.n_points, dtype=complex)
    alpha_edge = 0.0 + 0.0j
    for i, (start, amp) in enumerate(segs):
        end = segs[i + 1][0] if i + 1 < len(segs) else math.inf
        a_ss = -1j * amp / lam
        lo = np.clip(edges[:-1], start, end)
        hi = np.clip(edges[1:], start, end)
        width = hi - lo
        live = width > 0
        if np.any(live):
            a_in = a_ss + (alpha_edge - a_ss) * np.exp(-lam * (lo[live] - start))
            integ = a_ss * width[live] + (a_in - a_ss) * (
                1.0 - np.exp(-lam * width[live])) / lam
            out[live] += integ
        if math.isfinite(end):
            alpha_edge = a_ss + (alpha_edge - a_ss) * np.exp(-lam * (end - start))
    return out / grid.dt


def bin_mean_paths(cavity: CavityParams, grid: TimeGrid) -> PointerPaths:
    """Boxcar-averaged pointer paths for both states (shot-synthesis means)."""
    return PointerPaths(grid=grid,
                        alpha0=_bin_mean_path(cavity, 0, grid),
                        alpha1=_bin_mean_path(cavity, 1, grid))


def _jump_bin_means(cavity: CavityParams, grid: TimeGrid, tau: float,
                    from_state: int, to_state: int,
                    base: PointerPaths) -> np.ndarray:
    """Bin-averaged mean path for a shot that jumps at time tau.

    The field is continuous across the jump: for t >= tau the path is the
    destination pointer path plus a transient (alpha_from(tau) -
    alpha_to(tau)) * exp(-lambda_to (t - tau)), integrated exactly per bin.
    """
    lam_to = cavity.decay_const(to_state)
    a_from = _alpha_exact(cavity, from_state, np.array([tau]))[0]
    a_to = _alpha_exact(cavity, to_state, np.array([tau]))[0]
    delta = a_from - a_to

    edges = grid.edges
    lo = np.maximum(edges[:-1], tau)
    hi = edges[1:]
    width = hi - lo
    live = width > 0

    mean = base.for_state(to_state).copy()
    corr = np.zeros(grid.n_points, dtype=complex)
    corr[live] = delta * (np.exp(-lam_to * (lo[live] - tau)) -
                          np.exp(-lam_to * (hi[live] - tau))) / (lam_to * grid.dt)
    mean += corr

    # bins fully before the jump follow the origin path; the straddling bin
    # mixes exact integrals of both segments
    pre = hi <= tau
    mean[pre] = base.for_state(from_state)[pre]
    straddle = (edges[:-1] < tau) & (tau < edges[1:])
    if np.any(straddle):
        j = int(np.flatnonzero(straddle)[0])
        pre_int = _integral_exact(cavity, from_state, edges[j], tau)
        post_int = _integral_exact(cavity, to_state, tau, edges[j + 1])
        post_int += delta * (1.0 - np.exp(-lam_to * (edges[j + 1] - tau))) / lam_to
        mean[j] = (pre_int + post_int) / grid.dt
    return mean


# ---------------------------------------------------------------------------
# Shot sampling


def _shot_rng(seed: int, shot_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(shot_id))))


def _draw_noise(rng: np.random.Generator, grid: TimeGrid, sigma: float,
                modes: np.ndarray | None) -> np.ndarray:
    if modes is None:
        z = rng.standard_normal(2 * grid.n_points)
        return sigma * (z[: grid.n_points] + 1j * z[grid.n_points:])
    r = modes.shape[1]
    z = rng.standard_normal(2 * r)
    coeff = (z[:r] + 1j * z[r:]) * (sigma / math.sqrt(r))
    return modes @ coeff


def _sample_one(cavity: CavityParams, rates: DecoherenceRates,
                grid: TimeGrid, sigma: float, modes: np.ndarray | None,
                base: PointerPaths, base_obs: PointerPaths,
                proj: np.ndarray | None, seed: int, shot_id: int,
                prep: int) -> tuple[np.ndarray, tuple, int]:
    """Mean path + noise for one shot.  Returns (samples, jump_record, init)."""
    rng = _shot_rng(seed, shot_id)

    initial = prep
    p_flip = rates.prep_error_ground if prep == 0 else rates.prep_error_excited
    if p_flip > 0.0 and rng.random() < p_flip:
        initial = 1 - prep

    jump: tuple = ()
    state_time = rates.t1_time if initial == 1 else rates.heating_time
    if math.isfinite(state_time):
        tau = rng.exponential(state_time)
        if tau < grid.total_time:
            jump = ((tau, initial, 1 - initial),)

    if jump:
        tau, s_from, s_to = jump[0]
        mean = _jump_bin_means(cavity, grid, tau, s_from, s_to, base)
        if proj is not None:
            mean = proj @ mean
    else:
        mean = base_obs.for_state(initial)

    return mean + _draw_noise(rng, grid, sigma, modes), jump, initial


def observed_mean_paths(cavity: CavityParams, grid: TimeGrid,
                        noise: NoiseModel = NoiseModel()) -> PointerPaths:
    """Pointer paths as the acquisition chain records them (band-limited)."""
    paths = bin_mean_paths(cavity, grid)
    proj = noise.projection(grid)
    if proj is None:
        return paths
    return PointerPaths(grid=grid, alpha0=proj @ paths.alpha0,
                        alpha1=proj @ paths.alpha1)


def sample_trajectory(cavity: CavityParams, rates: DecoherenceRates,
                      amplifier: AmplifierModel, grid: TimeGrid,
                      seed: int, shot_id: int = 0, prep: int = 1,
                      noise: NoiseModel = NoiseModel()) -> Trajectory:
    """Sample a single labeled shot from the stream (seed, shot_id)."""
    if prep not in (0, 1):
        raise InvalidSpecError(f"prep must be 0 or 1, got {prep}")
    sigma = noise_sigma(amplifier, grid, cavity.kappa)
    modes = noise.mode_matrix(grid)
    proj = noise.projection(grid)
    base = bin_mean_paths(cavity, grid)
    base_obs = observed_mean_paths(cavity, grid, noise)
    samples, jump, initial = _sample_one(
        cavity, rates, grid, sigma, modes, base, base_obs, proj, seed,
        shot_id, prep)
    return Trajectory(samples=samples, prep_label=prep, shot_id=shot_id,
                      jump_record=jump, initial_state=initial)


def generate_dataset(spec: DatasetSpec, seed: int) -> Dataset:
    """Synthesize n_shots labeled shots: ground block first, then excited.

    Each shot is drawn from its own (seed, shot_id) stream, so the result is
    independent of sampling order and reproducible shot-by-shot.
    """
    n = spec.n_shots
    grid = spec.grid
    sigma = noise_sigma(spec.amplifier, grid, spec.cavity.kappa)
    modes = spec.noise.mode_matrix(grid)
    proj = spec.noise.projection(grid)
    base = bin_mean_paths(spec.cavity, grid)
    base_obs = observed_mean_paths(spec.cavity, grid, spec.noise)

    samples = np.empty((n, grid.n_points), dtype=complex)
    labels = np.empty(n, dtype=np.uint8)
    initial_states = np.empty(n, dtype=np.uint8)
    jump_records: list = []
    half = n // 2
    for i in range(n):
        prep = 0 if i < half else 1
        row, jump, initial = _sample_one(
            spec.cavity, spec.rates, grid, sigma, modes, base, base_obs,
            proj, seed, i, prep)
        samples[i] = row
        labels[i] = prep
        initial_states[i] = initial
        jump_records.append(jump)

    meta = {
        "schema": "readoutml.dataset/1",
        "seed": int(seed),
        "noise_sigma": sigma,
        "n_noise_modes": 0 if modes is None else modes.shape[1],
    }
    meta.update(spec.extra_metadata)
    return Dataset(spec=spec, seed=int(seed), samples=samples, labels=labels,
                   jump_records=jump_records, initial_states=initial_states,
                   metadata=meta)


# ---------------------------------------------------------------------------
# Ground-truth separation and drive calibration


def predicted_separation(cavity: CavityParams, grid: TimeGrid,
                         amplifier: AmplifierModel,
                         noise: NoiseModel = NoiseModel(),
                         up_to_time: float | None = None) -> float:
    """Separation R of the ideal-noise matched filter, from ground truth.

    Uses the recorded (band-limited) pointer separation beta and the true
    noise covariance; with white noise this reduces to
    sum_j |beta_j|^2 / sigma^2.
    """
    sigma = noise_sigma(amplifier, grid, cavity.kappa)
    paths = observed_mean_paths(cavity, grid, noise)
    beta = paths.beta
    keep = np.ones(grid.n_points, dtype=bool)
    if up_to_time is not None:
        keep = grid.centers < up_to_time
    beta = np.where(keep, beta, 0.0)
    w = np.conj(beta) / sigma**2
    dt = grid.dt
    mean_gap = float(np.sum(np.real(w * beta))) * dt
    modes = noise.mode_matrix(grid)
    if modes is None:
        var_s = sigma**2 * float(np.sum(np.abs(w) ** 2)) * dt**2
    else:
        r = modes.shape[1]
        proj = modes.T @ w
        var_s = (sigma**2 / r) * float(np.sum(np.abs(proj) ** 2)) * dt**2
    return mean_gap**2 / var_s


def calibrate_drive_amplitude(kappa: float, chi: float, detuning: float,
                              drive_phase: float, grid: TimeGrid,
                              amplifier: AmplifierModel, noise: NoiseModel,
                              target_r: float,
                              up_to_time: float | None = None) -> complex:
    """Constant drive amplitude whose ideal matched-filter separation is target_r.

    R scales as |amplitude|^2, so a unit-drive evaluation fixes the scale.
    """
    if not target_r > 0:
        raise InvalidSpecError(f"target separation must be positive, got {target_r}")
    unit = CavityParams.constant_drive(kappa, chi, np.exp(1j * drive_phase), detuning)
    r_unit = predicted_separation(unit, grid, amplifier, noise, up_to_time)
    return np.exp(1j * drive_phase) * math.sqrt(target_r / r_unit)


# ---------------------------------------------------------------------------
# Reference presets

DEFAULT_KAPPA = 2 * math.pi * 1.21e6          # kappa/2pi = 1210 kHz
DEFAULT_CHI = -2 * math.pi * 1.4e6            # 2chi/2pi = -2.8 MHz
DEFAULT_T1 = 29e-6
DEFAULT_TOTAL_TIME = 2.6e-6
DEFAULT_N_POINTS = 163
DEFAULT_TARGET_R = 55.56
DEFAULT_HEATING_TIME = 288e-6                  # ~230 heated shots per 25600
DEFAULT_PREP_ERROR = 0.005
DEFAULT_NOISE_BANDWIDTH = 1.9e6
# ground steady state direction matching the quoted (-0.07, -0.02):
# arg(alpha0_ss) = -pi/2 + drive_phase - atan2(chi, kappa/2)
DEFAULT_DRIVE_PHASE = math.atan2(-0.02, -0.07) + math.pi / 2 + math.atan2(
    DEFAULT_CHI, DEFAULT_KAPPA / 2)


def default_grid(total_time: float = DEFAULT_TOTAL_TIME,
               n_points: int = DEFAULT_N_POINTS) -> TimeGrid:
    return TimeGrid(total_time=total_time, n_points=n_points)


def weak_drive_cavity_params() -> CavityParams:
    """Drive tuned so the ground pointer steady state sits at (-0.07, -0.02)."""
    target = -0.07 - 0.02j
    lam0 = 1j * DEFAULT_CHI + DEFAULT_KAPPA / 2.0
    amplitude = 1j * target * lam0
    return CavityParams.constant_drive(DEFAULT_KAPPA, DEFAULT_CHI, amplitude)


def default_dataset_spec(n_shots: int = 51200,
                       total_time: float = DEFAULT_TOTAL_TIME,
                       n_points: int = DEFAULT_N_POINTS,
                       target_r: float = DEFAULT_TARGET_R,
                       target_r_time: float | None = None,
                       t1_time: float = DEFAULT_T1,
                       heating_time: float = DEFAULT_HEATING_TIME,
                       prep_error: float = DEFAULT_PREP_ERROR,
                       noise_bandwidth: float | None = DEFAULT_NOISE_BANDWIDTH,
                       detuning: float = 0.0,
                       drive_amplitude: complex | None = None) -> DatasetSpec:
    """Synthetic dataset spec with the stock dispersive-readout parameters.

    With ``drive_amplitude`` None the constant drive is calibrated so the
    ideal-noise matched-filter separation over the first ``target_r_time``
    seconds (default: the whole window) equals ``target_r``.
    """
    grid = TimeGrid(total_time, n_points)
    amplifier = AmplifierModel()
    noise = NoiseModel(bandwidth=noise_bandwidth)
    if drive_amplitude is None:
        drive_amplitude = calibrate_drive_amplitude(
            DEFAULT_KAPPA, DEFAULT_CHI, detuning, DEFAULT_DRIVE_PHASE, grid,
            amplifier, noise, target_r, up_to_time=target_r_time)
    cavity = CavityParams.constant_drive(DEFAULT_KAPPA, DEFAULT_CHI,
                                         drive_amplitude, detuning)
    rates = DecoherenceRates(t1_time=t1_time, heating_time=heating_time,
                             prep_error_ground=prep_error,
                             prep_error_excited=prep_error)
    return DatasetSpec(n_shots=n_shots, grid=grid, cavity=cavity, rates=rates,
                       amplifier=amplifier, noise=noise)


def ideal_dataset_spec(n_shots: int = 25600, white_noise: bool = True,
                       **kwargs) -> DatasetSpec:
    """Default parameters with jumps and preparation errors switched off."""
    spec = default_dataset_spec(
        n_shots=n_shots,
        noise_bandwidth=None if white_noise else DEFAULT_NOISE_BANDWIDTH,
        **kwargs)
    return DatasetSpec(n_shots=spec.n_shots, grid=spec.grid, cavity=spec.cavity,
                       rates=DecoherenceRates(), amplifier=spec.amplifier,
                       noise=spec.noise)
