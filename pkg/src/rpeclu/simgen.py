"""Synthetic Gaussian-mixture scenarios with block means and exchangeable correlation."""

from dataclasses import dataclass, field, replace
import csv

import numpy as np

from .errors import RpecluError
from .gmm import HardPartition

TRANSFORMS = ("none", "exp", "log_abs", "sqrt_abs")
N_SCENARIOS = 26


@dataclass(frozen=True)
class ScenarioConfig:
    p: int
    g: int
    n_per_group: int = 100
    tau: tuple = (0.1,)
    mean_magnitude: float = 1.0
    rotated: bool = False
    transform: str = "none"
    relevant_fraction: float = 1.0
    seed: int = 0

    def taus(self):
        """Per-group tau values, broadcasting a single (homoscedastic) value."""
        tau = tuple(np.atleast_1d(self.tau).astype(float))
        if len(tau) == 1:
            return tau * self.g
        if len(tau) != self.g:
            raise RpecluError(f"tau must have length 1 or g={self.g}, got {len(tau)}")
        return tau


@dataclass
class LabeledDataset:
    x: np.ndarray
    truth: HardPartition
    config: ScenarioConfig = field(default=None, repr=False)

    def to_csv(self, path):
        """Write features ``x1..xp`` followed by an integer ``truth`` column."""
        write_labeled_csv(path, self.x, self.truth.labels)


def write_labeled_csv(path, x, labels, label_name="truth"):
    p = x.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{j + 1}" for j in range(p)] + [label_name])
        for row, lab in zip(x, labels):
            writer.writerow([repr(float(v)) for v in row] + [int(lab)])


def block_bounds(width, g):
    """Start/stop of g contiguous blocks over ``width`` coordinates; the last block takes the remainder."""
    size = width // g
    if size < 1:
        raise RpecluError(f"cannot split {width} coordinates into {g} blocks")
    starts = [k * size for k in range(g)]
    stops = starts[1:] + [width]
    return list(zip(starts, stops))


def group_means(p, g, magnitude=1.0, relevant_fraction=1.0):
    """(g, p) matrix whose row k equals ``magnitude`` on block k of the relevant coordinates."""
    width = int(round(relevant_fraction * p))
    mu = np.zeros((g, p))
    for k, (lo, hi) in enumerate(block_bounds(width, g)):
        mu[k, lo:hi] = magnitude
    return mu


def group_covariance(p, tau):
    """Unit diagonal, off-diagonal ``1 - tau``."""
    return (1.0 - tau) * np.ones((p, p)) + tau * np.eye(p)


def _check_tau(tau, p):
    if not -1.0 / (p - 1) < tau < 1.0:
        raise RpecluError(f"tau={tau} outside (-1/(p-1), 1)")
    # eigenvalue tau belongs to every direction orthogonal to the ones vector
    if tau <= 0:
        raise RpecluError(f"tau={tau} gives a covariance that is not positive definite")


def rotated_coordinates(p, count=50):
    """Indices of the first ``count`` odd-numbered variables (1st, 3rd, ...)."""
    return np.arange(0, p, 2)[:count]


def generate(config):
    """Draw a :class:`LabeledDataset` from ``config``."""
    p, g, m = config.p, config.g, config.n_per_group
    if p < 2 or g < 1:
        raise RpecluError("need p >= 2 and g >= 1")
    if m < 2:
        raise RpecluError("n_per_group must be at least 2")
    if config.transform not in TRANSFORMS:
        raise RpecluError(f"unknown transform {config.transform!r}")
    if not 0 < config.relevant_fraction <= 1:
        raise RpecluError("relevant_fraction must lie in (0, 1]")
    taus = config.taus()
    for tau in taus:
        _check_tau(tau, p)

    rng = np.random.default_rng(config.seed)
    mu = group_means(p, g, config.mean_magnitude, config.relevant_fraction)
    blocks = []
    for k, tau in enumerate(taus):
        # exchangeable draw: independent part sqrt(tau) * e, shared part sqrt(1 - tau) * c * 1
        e = rng.standard_normal((m, p))
        c = rng.standard_normal((m, 1))
        blocks.append(mu[k] + np.sqrt(tau) * e + np.sqrt(1.0 - tau) * c)
    if config.rotated:
        cols = rotated_coordinates(p)
        for k in range(g // 2):
            blocks[k][:, cols] *= -1.0
    x = np.vstack(blocks)
    if config.transform == "exp":
        x = np.exp(x)
    elif config.transform == "log_abs":
        x = np.log(np.abs(x))
    elif config.transform == "sqrt_abs":
        x = np.sqrt(np.abs(x))
    labels = np.repeat(np.arange(1, g + 1), m)
    return LabeledDataset(x=x, truth=HardPartition(labels, g), config=config)


# (p, g, tau, rotated) for settings 1-20
_GAUSSIAN = {
    1: (100, 2, (0.1,)), 2: (500, 2, (0.1,)), 3: (1000, 2, (0.1,)),
    4: (100, 4, (0.1,)), 5: (500, 4, (0.1,)), 6: (1000, 4, (0.1,)),
    7: (100, 2, (0.4,)), 8: (500, 2, (0.4,)), 9: (1000, 2, (0.4,)),
    10: (100, 4, (0.4,)), 11: (500, 4, (0.4,)), 12: (1000, 4, (0.4,)),
    13: (100, 2, (0.1, 0.6)), 14: (100, 2, (0.1, 0.3)),
    15: (500, 2, (0.1, 0.6)), 16: (500, 2, (0.1, 0.3)),
}
_NON_GAUSSIAN = {
    21: (2, "exp"), 22: (2, "log_abs"), 23: (2, "sqrt_abs"),
    24: (4, "exp"), 25: (4, "log_abs"), 26: (4, "sqrt_abs"),
}
# non-Gaussian rows do not state tau; the strongly correlated level is used
NON_GAUSSIAN_TAU = 0.1


def scenario_table(scenario_id, seed=0):
    """Configuration of simulation setting ``scenario_id`` (1-26)."""
    if not isinstance(scenario_id, (int, np.integer)) or not 1 <= scenario_id <= N_SCENARIOS:
        raise RpecluError(f"scenario id must be in 1..{N_SCENARIOS}, got {scenario_id!r}")
    scenario_id = int(scenario_id)
    if scenario_id in _GAUSSIAN:
        p, g, tau = _GAUSSIAN[scenario_id]
        return ScenarioConfig(p=p, g=g, tau=tau, seed=seed)
    if scenario_id <= 20:
        base = scenario_table(scenario_id - 4, seed)
        return replace(base, rotated=True)
    g, transform = _NON_GAUSSIAN[scenario_id]
    return ScenarioConfig(
        p=100, g=g, tau=(NON_GAUSSIAN_TAU,), transform=transform, relevant_fraction=0.5, seed=seed
    )
