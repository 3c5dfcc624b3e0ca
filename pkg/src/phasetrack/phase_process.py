"""Gaussian phase processes with power-law spectra.

The phase is realized by a chain of n+1 integrators driven by white noise,
x_0 -> x_1 -> ... -> x_n, with the physical phase phi = kappa^(n+1/2) x_n.
The undamped chain has spectrum kappa^(p-1)/|w|^p with p = 2n+2; giving each
stage a decay rate lambda_k turns the poles at w=0 into Lorentzian cutoffs
and makes the process stationary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.signal import lfilter

from .errors import NumericalError, ValidationError

__all__ = [
    "PhaseModel",
    "ChainState",
    "ChainTrajectory",
    "spectrum",
    "autocovariance",
    "integrate_chain",
    "sample_trajectory",
]


def _is_even_integer(p: float) -> bool:
    return float(p) == int(p) and int(p) % 2 == 0


@dataclass(frozen=True)
class PhaseModel:
    """Power-law phase model: spectral exponent p, rate kappa, stage dampings.

    ``dampings`` holds one nonnegative decay rate per chain stage
    (length p/2 for even integer p); an empty tuple means the undamped
    model. Non-even exponents are accepted for spectral bounds only and
    must be undamped.
    """

    p: float
    kappa: float
    dampings: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.p > 1:
            raise ValidationError(f"exponent-out-of-range: need p > 1, got p={self.p}")
        if not self.kappa > 0:
            raise ValidationError(f"kappa must be positive, got {self.kappa}")
        object.__setattr__(self, "dampings", tuple(float(d) for d in self.dampings))
        if any(d < 0 for d in self.dampings):
            raise ValidationError(f"dampings must be nonnegative, got {self.dampings}")
        if self.dampings:
            if not _is_even_integer(self.p):
                raise ValidationError(
                    "chain-requires-even-p: dampings are chain stage rates, "
                    f"undefined for p={self.p}"
                )
            if len(self.dampings) != int(self.p) // 2:
                raise ValidationError(
                    f"expected {int(self.p) // 2} damping rates for p={self.p}, "
                    f"got {len(self.dampings)}"
                )

    @property
    def is_even_integer(self) -> bool:
        return _is_even_integer(self.p)

    @property
    def n(self) -> int:
        """Chain index: p = 2n + 2."""
        if not self.is_even_integer:
            raise ValidationError(f"chain-requires-even-p: got p={self.p}")
        return int(self.p) // 2 - 1

    @property
    def is_damped(self) -> bool:
        return any(d > 0 for d in self.dampings)

    def damping_rates(self) -> np.ndarray:
        """Per-stage decay rates as an array of length n+1 (zeros if undamped)."""
        n_stages = self.n + 1
        if not self.dampings:
            return np.zeros(n_stages)
        return np.asarray(self.dampings, dtype=float)

    @property
    def phase_scale(self) -> float:
        """Factor kappa^(n+1/2) mapping the last chain component to the phase."""
        return self.kappa ** (self.n + 0.5)


@dataclass(frozen=True)
class ChainState:
    """Chain state vector (x_0 ... x_n) at one instant."""

    x: np.ndarray
    t: float


@dataclass(frozen=True)
class ChainTrajectory:
    """Sampled chain path.

    ``x`` has shape (n_steps+1, n+1) with x[0] = 0; ``dw`` holds the
    n_steps Wiener increments that drove it, exposed so a measurement
    simulator can reuse the identical noise stream. ``phi`` is the phase
    kappa^(n+1/2) x_n on the same grid.
    """

    model: PhaseModel
    dt: float
    t: np.ndarray
    x: np.ndarray
    dw: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return self.model.phase_scale * self.x[:, -1]

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, i: int) -> ChainState:
        return ChainState(x=self.x[i], t=float(self.t[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]


def spectrum(model: PhaseModel, omega):
    """Two-sided power spectral density of the phase at angular frequency omega.

    Undamped: kappa^(p-1)/|w|^p. Damped even-p chain:
    kappa^(p-1) * prod_k 1/(w^2 + lambda_k^2). Even in omega, strictly
    positive; rejects w = 0 whenever any stage is undamped there.
    """
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    if model.is_damped:
        lam = model.damping_rates()
        if np.any(w == 0.0) and np.any(lam == 0.0):
            raise NumericalError("spectrum-divergent-at-zero: undamped stage at omega=0")
        w2 = w[:, None] ** 2
        out = model.kappa ** (model.p - 1) / np.prod(w2 + lam[None, :] ** 2, axis=1)
    else:
        if np.any(w == 0.0):
            raise NumericalError("spectrum-divergent-at-zero: undamped model at omega=0")
        out = model.kappa ** (model.p - 1) / np.abs(w) ** model.p
    return float(out[0]) if scalar else out


def autocovariance(model: PhaseModel, tau) -> float | np.ndarray:
    """Stationary autocovariance of the phase at lag tau.

    Inverse Fourier transform of the spectrum, (1/pi) * int_0^inf S(w) cos(w tau) dw,
    evaluated with an oscillatory-weight quadrature. Defined only for fully
    damped models; the undamped chain has no stationary marginal.
    """
    lam = model.damping_rates()
    if not model.is_damped or np.any(lam == 0.0):
        raise ValidationError(
            "autocovariance undefined: model has an undamped stage (nonstationary)"
        )
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.empty_like(taus)
    for i, t_lag in enumerate(taus):
        val, _ = quad(
            lambda w: spectrum(model, w),
            0.0,
            np.inf,
            weight="cos",
            wvar=abs(t_lag),
            limit=400,
        )
        out[i] = val / np.pi
    return float(out[0]) if np.ndim(tau) == 0 else out


def integrate_chain(model: PhaseModel, dt: float, increments: np.ndarray) -> ChainTrajectory:
    """Drive the integrator chain with explicit noise increments.

    Explicit Euler update: dx_0 = -lambda_0 x_0 dt + dW,
    dx_{k+1} = (x_k - lambda_{k+1} x_{k+1}) dt, all starting from zero.
    Each stage is a first-order linear recurrence, evaluated with lfilter.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    lam = model.damping_rates()
    if np.max(lam) * dt >= 0.1:
        raise ValidationError(
            f"dt={dt} too coarse for damping rates {tuple(lam)} (need dt*max < 0.1)"
        )
    dw = np.asarray(increments, dtype=float)
    if dw.ndim != 1:
        raise ValidationError("increments must be a 1-d array")
    n_steps = dw.shape[0]
    n_stages = model.n + 1
    x = np.zeros((n_steps + 1, n_stages))
    # x_0[i+1] = (1 - lambda_0 dt) x_0[i] + dW[i]
    x[1:, 0] = lfilter([1.0], [1.0, -(1.0 - lam[0] * dt)], dw)
    for k in range(1, n_stages):
        # x_k[i+1] = (1 - lambda_k dt) x_k[i] + dt * x_{k-1}[i]
        x[1:, k] = lfilter([dt], [1.0, -(1.0 - lam[k] * dt)], x[:-1, k - 1])
    t = np.arange(n_steps + 1) * dt
    return ChainTrajectory(model=model, dt=dt, t=t, x=x, dw=dw)


def sample_trajectory(model: PhaseModel, dt: float, n_steps: int, seed: int) -> ChainTrajectory:
    """Sample one chain path of n_steps Euler steps, deterministic in the seed."""
    if not model.is_even_integer:
        raise ValidationError(f"chain-requires-even-p: got p={model.p}")
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    dw = rng.normal(0.0, np.sqrt(dt), size=n_steps)
    return integrate_chain(model, dt, dw)
