"""Synthetic action-trajectory datasets, normalization, and chunking.

Two generator families: "smooth-fourier" (random low-frequency sinusoid
mixtures, used for reconstruction studies) and "point-mass-expert"
(scripted pick-and-place traces, used for closed-loop policy evaluation).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .env import ACTION_DIM, ToyEnvConfig, scripted_episode
from .errors import (
    ConfigError,
    DegenerateDimensionError,
    InsufficientLengthError,
    ShapeError,
)

FAMILIES = ("smooth-fourier", "point-mass-expert")

# smooth-fourier knobs: each channel sums a few random sinusoids (never more
# than MAX_SINUSOIDS) with at most 4 cycles per trajectory, so the per-step
# delta is analytically bounded. One or two waves per channel keeps single
# chunks low-dimensional while the corpus stays diverse, which is what makes
# coarse-vs-fine reconstruction quality separable at desk scale.
MAX_SINUSOIDS = 5
WAVE_COUNT_RANGE = (1, 2)
MAX_CYCLES = 4.0
AMP_RANGE = (0.2, 1.0)
FREQ_RANGE = (0.25, MAX_CYCLES)


@dataclass
class DatasetConfig:
    n_trajectories: int
    T: int
    D_a: int
    family: str = "smooth-fourier"
    noise_std: float = 0.0

    def validate(self) -> None:
        if self.n_trajectories < 1:
            raise ConfigError(f"n_trajectories must be >= 1, got {self.n_trajectories}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.D_a < 1:
            raise ConfigError(f"D_a must be >= 1, got {self.D_a}")
        if self.noise_std < 0:
            raise ConfigError(f"noise_std must be >= 0, got {self.noise_std}")
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.family == "point-mass-expert" and self.D_a != ACTION_DIM:
            raise ConfigError(
                f"point-mass-expert trajectories have {ACTION_DIM} channels, got D_a={self.D_a}"
            )


@dataclass
class TrajectoryDataset:
    trajectories: list[np.ndarray]
    seed: int
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.trajectories)


@dataclass
class NormStats:
    min: np.ndarray
    max: np.ndarray


def sample_fourier_params(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw (amplitudes, frequencies, phases) for one channel.

    Exposed so tests can re-derive the sampled parameters from the same rng
    stream and check analytic bounds against generated signals.
    """
    n_waves = int(rng.integers(WAVE_COUNT_RANGE[0], WAVE_COUNT_RANGE[1] + 1))
    amp = rng.uniform(*AMP_RANGE, size=n_waves)
    freq = rng.uniform(*FREQ_RANGE, size=n_waves)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_waves)
    return amp, freq, phase


def eval_fourier(params: tuple[np.ndarray, np.ndarray, np.ndarray], T: int) -> np.ndarray:
    amp, freq, phase = params
    t = np.arange(T) / T
    return np.sin(2.0 * np.pi * freq[None, :] * t[:, None] + phase[None, :]) @ amp


def generate_synthetic_dataset(config: DatasetConfig, seed: int) -> TrajectoryDataset:
    """Deterministic function of (config, seed); same inputs, bit-identical data."""
    config.validate()
    rng = np.random.default_rng(seed)
    trajectories = []
    for _ in range(config.n_trajectories):
        if config.family == "smooth-fourier":
            traj = np.stack(
                [eval_fourier(sample_fourier_params(rng), config.T) for _ in range(config.D_a)],
                axis=1,
            )
        else:
            _, traj, success = scripted_episode(rng, config.T, ToyEnvConfig())
            if not success:
                raise ConfigError(
                    "scripted expert failed an episode; increase T beyond "
                    f"{config.T} so pick-and-place can finish"
                )
        if config.noise_std > 0:
            traj = traj + config.noise_std * rng.standard_normal(traj.shape)
        trajectories.append(np.ascontiguousarray(traj, dtype=np.float64))
    return TrajectoryDataset(trajectories=trajectories, seed=seed, metadata=asdict(config))


def fit_normalizer(dataset: TrajectoryDataset) -> NormStats:
    """Exact per-dimension extrema over every trajectory."""
    if not dataset.trajectories:
        raise ConfigError("cannot fit a normalizer on an empty dataset")
    stacked = np.concatenate(dataset.trajectories, axis=0)
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    degenerate = np.nonzero(lo == hi)[0]
    if degenerate.size:
        raise DegenerateDimensionError(
            f"dimensions {degenerate.tolist()} are constant (min == max)"
        )
    return NormStats(min=lo, max=hi)


def normalize(chunk: np.ndarray, stats: NormStats) -> np.ndarray:
    """Affine map [min, max] -> [-1, 1] per dimension; out-of-range inputs clip."""
    x = np.clip(np.asarray(chunk, dtype=np.float64), stats.min, stats.max)
    return -1.0 + 2.0 * (x - stats.min) / (stats.max - stats.min)


def denormalize(chunk: np.ndarray, stats: NormStats) -> np.ndarray:
    x = np.asarray(chunk, dtype=np.float64)
    return stats.min + (x + 1.0) * 0.5 * (stats.max - stats.min)


def chunk_stream(trajectory: np.ndarray, h_a: int, stride: int | None = None) -> list[np.ndarray]:
    """Sliding windows [t, t+h_a) for t = 0, stride, 2*stride, ...

    `stride=None` uses h_a//2, matching the half-chunk execution regime used
    when building training pairs.
    """
    traj = np.asarray(trajectory, dtype=np.float64)
    if traj.ndim != 2:
        raise ShapeError(f"trajectory must be T x D_a, got shape {traj.shape}")
    if stride is None:
        stride = max(1, h_a // 2)
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    T = traj.shape[0]
    if T < h_a:
        raise InsufficientLengthError(f"trajectory length {T} < chunk horizon {h_a}")
    return [traj[t : t + h_a].copy() for t in range(0, T - h_a + 1, stride)]


def dataset_chunks(dataset: TrajectoryDataset, h_a: int, stride: int | None = None) -> np.ndarray:
    """All chunks of every trajectory, stacked into one (N, h_a, D_a) array."""
    chunks = []
    for traj in dataset.trajectories:
        chunks.extend(chunk_stream(traj, h_a, stride))
    return np.stack(chunks, axis=0)


# ---------------------------------------------------------------------------
# file formats: JSON Lines dataset + sidecar metadata, JSON normalizer stats

def save_dataset(dataset: TrajectoryDataset, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "dataset.jsonl", "w") as fh:
        for traj in dataset.trajectories:
            fh.write(json.dumps({"traj": traj.tolist()}, sort_keys=True) + "\n")
    meta = {"seed": dataset.seed, "config": dataset.metadata, "format_version": 1}
    (directory / "metadata.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def load_dataset(directory: str | Path) -> TrajectoryDataset:
    directory = Path(directory)
    meta = json.loads((directory / "metadata.json").read_text())
    trajectories = []
    with open(directory / "dataset.jsonl") as fh:
        for line in fh:
            if line.strip():
                trajectories.append(np.asarray(json.loads(line)["traj"], dtype=np.float64))
    return TrajectoryDataset(trajectories=trajectories, seed=meta["seed"], metadata=meta["config"])


def save_norm_stats(stats: NormStats, path: str | Path) -> None:
    payload = {"min": stats.min.tolist(), "max": stats.max.tolist()}
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n")


def load_norm_stats(path: str | Path) -> NormStats:
    payload = json.loads(Path(path).read_text())
    return NormStats(min=np.asarray(payload["min"], dtype=np.float64),
                     max=np.asarray(payload["max"], dtype=np.float64))
