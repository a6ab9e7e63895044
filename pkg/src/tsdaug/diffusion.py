"""Noise schedules and the closed-form forward/reverse diffusion algebra.

The forward process corrupts a clean series x0 with Gaussian noise whose
magnitude grows along a beta schedule.  With abar_t the cumulative product of
(1 - beta), a noisy sample at step t is

    x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps,      eps ~ N(0, I)

and the clean sample is recovered from a noise estimate by the inverse map
:func:`predict_x0`.  :func:`timestep_for_noise_rate` bridges the augmentation
noise amplitude r (of x + r*eps) to the discrete step whose noise-to-signal
amplitude sqrt((1-abar_t)/abar_t) is closest to r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tsdaug.errors import ConfigError

DEFAULT_T = 100
DEFAULT_BETA_1 = 1e-4
DEFAULT_BETA_T = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    beta: np.ndarray  # (T,), entries in (0, 1), non-decreasing

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        if beta.ndim != 1 or beta.size < 1:
            raise ConfigError("beta must be a non-empty vector")
        if np.any(beta <= 0.0) or np.any(beta >= 1.0):
            raise ConfigError("beta entries must lie strictly inside (0, 1)")
        if np.any(np.diff(beta) < 0.0):
            raise ConfigError("beta must be non-decreasing")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", 1.0 - beta)
        object.__setattr__(self, "alpha_bar", np.cumprod(1.0 - beta))

    @property
    def T(self) -> int:
        return self.beta.size

    def abar(self, t: int) -> float:
        """alpha_bar at step t (1-based)."""
        if not 1 <= t <= self.T:
            raise ConfigError(f"step t={t} outside [1, {self.T}]")
        return float(self.alpha_bar[t - 1])

    def noise_to_signal(self) -> np.ndarray:
        """sqrt((1 - abar_t) / abar_t) for every t; strictly increasing."""
        return np.sqrt((1.0 - self.alpha_bar) / self.alpha_bar)


def linear_beta_schedule(
    T: int = DEFAULT_T, beta_1: float = DEFAULT_BETA_1, beta_T: float = DEFAULT_BETA_T
) -> NoiseSchedule:
    if T < 1:
        raise ConfigError("T must be >= 1")
    if not 0.0 < beta_1 <= beta_T < 1.0:
        raise ConfigError("need 0 < beta_1 <= beta_T < 1")
    if T == 1:
        return NoiseSchedule(beta=np.array([beta_1]))
    return NoiseSchedule(beta=np.linspace(beta_1, beta_T, T))


def schedule_to_json(sched: NoiseSchedule) -> dict:
    return {
        "kind": "linear",
        "T": sched.T,
        "beta_1": float(sched.beta[0]),
        "beta_T": float(sched.beta[-1]),
    }


def schedule_from_json(obj: dict) -> NoiseSchedule:
    if obj.get("kind", "linear") != "linear":
        raise ConfigError(f"unknown schedule kind {obj.get('kind')!r}")
    return linear_beta_schedule(obj["T"], obj["beta_1"], obj["beta_T"])


def q_sample(x0: np.ndarray, t: int, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Closed-form forward marginal: sqrt(abar_t)*x0 + sqrt(1-abar_t)*eps."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ConfigError(f"x0 shape {x0.shape} != eps shape {eps.shape}")
    abar = sched.abar(t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def predict_x0(x_t: np.ndarray, eps_hat: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Invert the forward marginal given a noise estimate."""
    x_t = np.asarray(x_t, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    abar = sched.abar(t)
    return (x_t - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)


def timestep_for_noise_rate(r: float, sched: NoiseSchedule) -> int:
    """Step whose noise-to-signal amplitude best matches the rate r (>= 0)."""
    if r < 0:
        raise ConfigError("noise rate must be >= 0")
    ratios = sched.noise_to_signal()
    return int(np.argmin(np.abs(ratios - r))) + 1
