"""Forward diffusion: noise schedule and the closed-form noising step."""

from dataclasses import dataclass

import numpy as np

from ereact.skeleton import ValidationError


@dataclass(frozen=True)
class DiffusionSchedule:
    """T-step schedule; betas indexed 1..T are stored at [t-1]."""

    betas: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        object.__setattr__(self, "betas", betas)
        if betas.ndim != 1 or betas.size < 1:
            raise ValidationError("betas must be a non-empty 1-D array")
        if not ((betas > 0) & (betas < 1)).all():
            raise ValidationError("betas must lie in (0, 1)")
        alphas = 1.0 - betas
        alpha_bars = np.cumprod(alphas)
        if not (np.diff(alpha_bars) < 0).all():
            raise ValidationError("alpha_bar must be strictly decreasing")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @property
    def num_steps(self):
        return self.betas.size

    def alpha_bar(self, t):
        """alpha_bar at step t in 0..T; alpha_bar(0) = 1 by convention."""
        if t == 0:
            return 1.0
        self._check_t(t)
        return float(self.alpha_bars[t - 1])

    def _check_t(self, t):
        if not 1 <= t <= self.num_steps:
            raise ValidationError(f"timestep {t} out of range [1, {self.num_steps}]")

    def to_dict(self):
        return {"betas": self.betas.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(betas=np.asarray(d["betas"], dtype=np.float64))


def linear_schedule(num_steps=200, beta_start=1e-4, beta_end=5e-2):
    """Linear beta ramp.

    Desk default is T=200 with beta_end=0.05, which keeps alpha_bar_1 > 0.99
    and alpha_bar_T < 0.01; the paper-scale preset is T=1000 with
    beta_end=0.02 (same endpoint behavior at five times the length).
    """
    if num_steps < 1:
        raise ValidationError("num_steps must be >= 1")
    return DiffusionSchedule(betas=np.linspace(beta_start, beta_end, num_steps))


def q_sample(schedule, x0, t, eps):
    """X_t = sqrt(alpha_bar_t) * X_0 + sqrt(1 - alpha_bar_t) * eps.

    Works for numpy arrays and torch tensors alike (scalar coefficients).
    """
    schedule._check_t(t)
    ab = schedule.alpha_bar(t)
    if eps.shape != x0.shape:
        raise ValidationError("noise must have the same shape as x0")
    return (ab ** 0.5) * x0 + ((1.0 - ab) ** 0.5) * eps


def posterior_coefficients(schedule, t):
    """x0-parameterized DDPM posterior q(x_{t-1} | x_t, x0).

    Returns (coef_x0, coef_xt, variance) for
    mean = coef_x0 * x0 + coef_xt * x_t.
    """
    schedule._check_t(t)
    ab_t = schedule.alpha_bar(t)
    ab_prev = schedule.alpha_bar(t - 1)
    beta_t = float(schedule.betas[t - 1])
    alpha_t = float(schedule.alphas[t - 1])
    coef_x0 = (ab_prev ** 0.5) * beta_t / (1.0 - ab_t)
    coef_xt = (alpha_t ** 0.5) * (1.0 - ab_prev) / (1.0 - ab_t)
    variance = (1.0 - ab_prev) / (1.0 - ab_t) * beta_t
    return coef_x0, coef_xt, variance
