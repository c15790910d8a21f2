"""Euler-Maruyama oracles for square-root diffusions.

These integrators are the independent reference laws the series samplers
are judged against; they never share code or randomness with the series
path.
"""

from __future__ import annotations

import math

import numpy as np


def euler_sqrt_diffusion(x0: float, diffusion: float, drift: float, t_end: float,
                         step: float, n_paths: int, rng: np.random.Generator) -> np.ndarray:
    """Terminal values of dX = drift dt + diffusion sqrt(X+) dW, X_0 = x0.

    Full-truncation scheme: the square root reads the positive part and the
    state is clipped at zero after each increment.
    """
    n_steps = int(round(t_end / step))
    x = np.full(n_paths, float(x0))
    sdt = math.sqrt(step)
    for _ in range(n_steps):
        dw = rng.standard_normal(n_paths) * sdt
        x = x + drift * step + diffusion * np.sqrt(np.maximum(x, 0.0)) * dw
        np.maximum(x, 0.0, out=x)
    return x


def feller_marginal_oracle(a: float, sigma: float, t: float, step: float, n_paths: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Reference marginal of dZ = sigma sqrt(Z) dW from Z_0 = a."""
    return euler_sqrt_diffusion(a, sigma, 0.0, t, step, n_paths, rng)


def besq_marginal_oracle(beta: float, t: float, step: float, n_paths: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Reference marginal of dY = 2 sqrt(Y) dW + beta dt from Y_0 = 0."""
    return euler_sqrt_diffusion(0.0, 2.0, beta, t, step, n_paths, rng)
