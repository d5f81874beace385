"""Regression losses with value, gradient and Newton curvature.

Every loss is a frozen dataclass. Methods take ``y`` (truth) and ``F``
(prediction) as scalars or equal-shape arrays, and derivatives are taken
with respect to ``F``. Scalar inputs give Python floats back.

:class:`Asrl` is the adaptive segmented loss. With ``r = y - F``::

    |r| <= d1         alpha * r**2 / 2
    d1 < |r| <= d2    beta * |r|
    |r| > d2          gamma * log(1 + |r|)

Its thresholds and weights live in an :class:`ASRLState` which is recomputed
from the current residuals by :func:`asrl_refresh`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from asrl import robust_stats
from asrl.errors import DomainError

__all__ = [
    "ASRLConfig",
    "ASRLState",
    "Squared",
    "Absolute",
    "Huber",
    "Asrl",
    "LossFunction",
    "asrl_refresh",
    "value",
    "gradient",
    "hessian",
    "curvature",
    "loss_from_descriptor",
    "DEFAULT_H_FLOOR",
]

DEFAULT_H_FLOOR = 1e-6

# |r| below this is treated as this in 1/|r| weights, keeping sums finite
_R_TINY = 1e-12


def _residual(y, F):
    y_arr = np.asarray(y, dtype=float)
    f_arr = np.asarray(F, dtype=float)
    if not (np.all(np.isfinite(y_arr)) and np.all(np.isfinite(f_arr))):
        raise DomainError("y and F must be finite")
    scalar = y_arr.ndim == 0 and f_arr.ndim == 0
    return y_arr - f_arr, scalar


def _out(arr, scalar):
    return float(arr) if scalar else arr


def _check_floor(h_floor):
    if not h_floor > 0:
        raise DomainError(f"h_floor must be > 0, got {h_floor!r}")


@dataclass(frozen=True)
class ASRLConfig:
    q_low: float = 0.5
    q_high: float = 0.9
    eps: float = 1e-6

    def __post_init__(self):
        if not (0.0 <= self.q_low <= 1.0 and 0.0 <= self.q_high <= 1.0):
            raise DomainError("q_low and q_high must lie in [0, 1]")
        if self.q_low > self.q_high:
            raise DomainError(f"q_low ({self.q_low}) must not exceed q_high ({self.q_high})")
        if not self.eps > 0:
            raise DomainError(f"eps must be > 0, got {self.eps!r}")


@dataclass(frozen=True)
class ASRLState:
    delta1: float
    delta2: float
    alpha: float
    beta: float
    gamma: float
    config: ASRLConfig = field(default_factory=ASRLConfig)

    def __post_init__(self):
        if not (self.delta1 >= 0 and self.delta2 >= 0 and self.delta1 <= self.delta2):
            raise DomainError(f"need 0 <= delta1 <= delta2, got {self.delta1}, {self.delta2}")
        for name in ("alpha", "beta", "gamma"):
            w = getattr(self, name)
            if not (math.isfinite(w) and w > 0):
                raise DomainError(f"{name} must be finite and > 0, got {w!r}")


def asrl_refresh(config: ASRLConfig, residuals) -> ASRLState:
    """Fresh ASRL state fitted to the current residual distribution."""
    sample = residuals if isinstance(residuals, robust_stats.ResidualSample) else robust_stats.ResidualSample(residuals)
    d1, d2 = robust_stats.thresholds(sample, config.q_low, config.q_high)
    alpha, beta, gamma = robust_stats.weights(robust_stats.dispersion(sample), config.eps)
    return ASRLState(d1, d2, alpha, beta, gamma, config)


class _Loss:
    name: str = ""

    def value(self, y, F):
        raise NotImplementedError

    def gradient(self, y, F):
        raise NotImplementedError

    def curvature(self, y, F):
        """Exact signed second derivative w.r.t. ``F`` (zero where linear)."""
        raise NotImplementedError

    def hessian(self, y, F, h_floor: float = DEFAULT_H_FLOOR):
        """Newton curvature: ``max(|curvature|, h_floor)``."""
        _check_floor(h_floor)
        c = np.abs(np.asarray(self.curvature(y, F), dtype=float))
        h = np.maximum(c, h_floor)
        return float(h) if h.ndim == 0 else h

    def majorizer(self, y, F, h_floor: float = DEFAULT_H_FLOOR):
        """Curvature ``w`` of the quadratic that touches the loss at ``r`` with
        matching slope, so that ``gradient == -w * r``; floored at ``h_floor``.

        Used as the Newton weight in IRLS-style boosting: a leaf value then
        becomes a weighted mean of its residuals.
        """
        raise NotImplementedError

    def refreshed(self, residuals):
        """Loss to use for the next boosting round. Static losses return self."""
        return self

    def descriptor(self) -> dict:
        return {"kind": self.name}


@dataclass(frozen=True)
class Squared(_Loss):
    name = "squared"

    def value(self, y, F):
        r, scalar = _residual(y, F)
        return _out(0.5 * r * r, scalar)

    def gradient(self, y, F):
        r, scalar = _residual(y, F)
        return _out(-r, scalar)

    def curvature(self, y, F):
        r, scalar = _residual(y, F)
        return _out(np.ones(r.shape), scalar)

    def majorizer(self, y, F, h_floor=DEFAULT_H_FLOOR):
        _check_floor(h_floor)
        r, scalar = _residual(y, F)
        return _out(np.full(r.shape, max(1.0, h_floor)), scalar)


@dataclass(frozen=True)
class Absolute(_Loss):
    name = "absolute"

    def value(self, y, F):
        r, scalar = _residual(y, F)
        return _out(np.abs(r), scalar)

    def gradient(self, y, F):
        r, scalar = _residual(y, F)
        return _out(-np.sign(r), scalar)

    def curvature(self, y, F):
        r, scalar = _residual(y, F)
        return _out(np.zeros(r.shape), scalar)

    def majorizer(self, y, F, h_floor=DEFAULT_H_FLOOR):
        _check_floor(h_floor)
        r, scalar = _residual(y, F)
        w = 1.0 / np.maximum(np.abs(r), _R_TINY)
        return _out(np.maximum(w, h_floor), scalar)


@dataclass(frozen=True)
class Huber(_Loss):
    delta: float = 1.0
    name = "huber"

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta > 0):
            raise DomainError(f"Huber delta must be > 0, got {self.delta!r}")

    def value(self, y, F):
        r, scalar = _residual(y, F)
        a = np.abs(r)
        v = np.where(a <= self.delta, 0.5 * r * r, self.delta * (a - 0.5 * self.delta))
        return _out(v, scalar)

    def gradient(self, y, F):
        r, scalar = _residual(y, F)
        g = np.where(np.abs(r) <= self.delta, -r, -self.delta * np.sign(r))
        return _out(g, scalar)

    def curvature(self, y, F):
        r, scalar = _residual(y, F)
        return _out(np.where(np.abs(r) <= self.delta, 1.0, 0.0), scalar)

    def majorizer(self, y, F, h_floor=DEFAULT_H_FLOOR):
        _check_floor(h_floor)
        r, scalar = _residual(y, F)
        a = np.abs(r)
        w = np.where(a <= self.delta, 1.0, self.delta / np.maximum(a, _R_TINY))
        return _out(np.maximum(w, h_floor), scalar)

    def descriptor(self):
        return {"kind": self.name, "delta": self.delta}


@dataclass(frozen=True)
class Asrl(_Loss):
    """Adaptive segmented robust loss.

    ``state`` is None until the first :meth:`refreshed` call; evaluating an
    unfitted loss raises :class:`DomainError`.
    """

    config: ASRLConfig = field(default_factory=ASRLConfig)
    state: ASRLState | None = None
    name = "asrl"

    @classmethod
    def from_state(cls, state: ASRLState) -> "Asrl":
        return cls(config=state.config, state=state)

    def refreshed(self, residuals) -> "Asrl":
        return Asrl(self.config, asrl_refresh(self.config, residuals))

    def _st(self) -> ASRLState:
        if self.state is None:
            raise DomainError("ASRL state not initialized; call refreshed() or asrl_refresh() first")
        return self.state

    def region(self, y, F):
        """Region index per residual: 0 small, 1 medium, 2 large."""
        st = self._st()
        r, scalar = _residual(y, F)
        a = np.abs(r)
        reg = np.where(a <= st.delta1, 0, np.where(a <= st.delta2, 1, 2))
        return int(reg) if scalar else reg

    def value(self, y, F):
        st = self._st()
        r, scalar = _residual(y, F)
        a = np.abs(r)
        v = np.where(
            a <= st.delta1,
            st.alpha * r * r / 2.0,
            np.where(a <= st.delta2, st.beta * a, st.gamma * np.log1p(a)),
        )
        return _out(v, scalar)

    def gradient(self, y, F):
        st = self._st()
        r, scalar = _residual(y, F)
        a = np.abs(r)
        s = np.sign(r)
        g = np.where(
            a <= st.delta1,
            -st.alpha * r,
            np.where(a <= st.delta2, -st.beta * s, -st.gamma * s / (1.0 + a)),
        )
        return _out(g, scalar)

    def curvature(self, y, F):
        # log branch is concave: the Newton hessian uses its magnitude
        st = self._st()
        r, scalar = _residual(y, F)
        a = np.abs(r)
        c = np.where(
            a <= st.delta1,
            st.alpha,
            np.where(a <= st.delta2, 0.0, -st.gamma / (1.0 + a) ** 2),
        )
        return _out(c, scalar)

    def majorizer(self, y, F, h_floor=DEFAULT_H_FLOOR):
        _check_floor(h_floor)
        st = self._st()
        r, scalar = _residual(y, F)
        a = np.abs(r)
        safe = np.maximum(a, _R_TINY)
        w = np.where(
            a <= st.delta1,
            st.alpha,
            np.where(a <= st.delta2, st.beta / safe, st.gamma / (safe * (1.0 + a))),
        )
        return _out(np.maximum(w, h_floor), scalar)

    def descriptor(self):
        return {"kind": self.name, "q_low": self.config.q_low, "q_high": self.config.q_high, "eps": self.config.eps}


LossFunction = Squared | Absolute | Huber | Asrl


def value(loss: LossFunction, y, F):
    return loss.value(y, F)


def gradient(loss: LossFunction, y, F):
    return loss.gradient(y, F)


def hessian(loss: LossFunction, y, F, h_floor: float = DEFAULT_H_FLOOR):
    return loss.hessian(y, F, h_floor)


def curvature(loss: LossFunction, y, F):
    return loss.curvature(y, F)


def loss_from_descriptor(desc: dict) -> LossFunction:
    kind = desc.get("kind")
    if kind == "squared":
        return Squared()
    if kind == "absolute":
        return Absolute()
    if kind == "huber":
        return Huber(float(desc["delta"]))
    if kind == "asrl":
        return Asrl(ASRLConfig(float(desc["q_low"]), float(desc["q_high"]), float(desc["eps"])))
    raise DomainError(f"unknown loss kind {kind!r}")
