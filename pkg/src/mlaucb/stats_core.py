"""Numerical primitives: keyed random streams, bivariate Gaussian draws,
the Student-t distribution and the closed-form t-quantile bound.
"""

from __future__ import annotations

import functools
import hashlib
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ConfigurationError, DomainError

MASK64 = (1 << 64) - 1

_BETACF_MAXITER = 50_000
_BETACF_EPS = 1e-16
_TINY = 1e-300


def derive_stream_id(*tags) -> int:
    """Hash an arbitrary tuple of tags (rep id, role name, arm ...) to 64 bits."""
    digest = hashlib.blake2b(repr(tags).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RandomStream:
    """Counter-based random stream keyed by ``(base_seed, stream_id)``.

    Backed by the Philox4x64 bijection: the 128-bit key is the pair of 64-bit
    integers, so distinct stream ids give independent sequences and the same
    pair always replays the same draws.
    """

    __slots__ = ("base_seed", "stream_id", "_gen")

    def __init__(self, base_seed: int, stream_id: int):
        self.base_seed = int(base_seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        key = (self.base_seed << 64) | self.stream_id
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @classmethod
    def for_role(cls, base_seed: int, *tags) -> "RandomStream":
        return cls(base_seed, derive_stream_id(*tags))

    @property
    def counter(self) -> int:
        """Number of 256-bit Philox blocks consumed so far."""
        ctr = self._gen.bit_generator.state["state"]["counter"]
        return int(ctr[0]) | (int(ctr[1]) << 64)

    def normal(self, size=None) -> np.ndarray | float:
        return self._gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def __repr__(self):
        return f"RandomStream(base_seed={self.base_seed}, stream_id={self.stream_id})"


def _check_bivariate(mu, mu_tilde, sigma, sigma_tilde, rho):
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}", "sigma")
    if not sigma_tilde > 0:
        raise ConfigurationError(f"sigma_tilde must be positive, got {sigma_tilde}", "sigma_tilde")
    if not abs(rho) <= 1:
        raise ConfigurationError(f"|rho| must be at most 1, got {rho}", "rho")


def sample_bivariate_many(spec, stream: RandomStream, size: int):
    """Draw ``size`` joint (reward, surrogate) pairs for one arm.

    ``spec`` needs attributes ``mu, mu_tilde, sigma, sigma_tilde, rho``.
    Returns two float arrays of length ``size``.
    """
    _check_bivariate(spec.mu, spec.mu_tilde, spec.sigma, spec.sigma_tilde, spec.rho)
    z = stream.normal((size, 2))
    z1 = z[:, 0]
    rho = float(spec.rho)
    mix = rho * z1 + math.sqrt(max(0.0, 1.0 - rho * rho)) * z[:, 1]
    reward = spec.mu + spec.sigma * z1
    surrogate = spec.mu_tilde + spec.sigma_tilde * mix
    return reward, surrogate


def sample_bivariate(spec, stream: RandomStream) -> tuple[float, float]:
    reward, surrogate = sample_bivariate_many(spec, stream, 1)
    return float(reward[0]), float(surrogate[0])


# --- Student t -------------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAXITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, one_minus_x: float | None = None) -> float:
    """Regularized incomplete beta function I_x(a, b).

    ``one_minus_x`` may be passed when 1 - x is known more accurately than
    by subtraction.
    """
    if one_minus_x is None:
        one_minus_x = 1.0 - x
    if x <= 0.0:
        return 0.0
    if one_minus_x <= 0.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(one_minus_x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, one_minus_x) / b


def _check_dof(dof):
    if not dof >= 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {dof}")


def t_sf(dof: float, x: float) -> float:
    """Upper tail P(T_dof > x)."""
    _check_dof(dof)
    if math.isnan(x):
        raise DomainError("x must not be NaN")
    if x == 0.0:
        return 0.5
    x2 = x * x
    if math.isinf(x2):
        tail = 0.0
    else:
        denom = dof + x2
        # P(|T| > |x|) = I_{d/(d+x^2)}(d/2, 1/2)
        tail = 0.5 * betainc(0.5 * dof, 0.5, dof / denom, x2 / denom)
    return tail if x > 0 else 1.0 - tail


def t_cdf(dof: float, x: float) -> float:
    """P(T_dof <= x) through the regularized incomplete beta function."""
    _check_dof(dof)
    if math.isnan(x):
        raise DomainError("x must not be NaN")
    if x == 0.0:
        return 0.5
    if x < 0:
        return t_sf(dof, -x)
    return 1.0 - t_sf(dof, x)


def t_pdf(dof: float, x: float) -> float:
    _check_dof(dof)
    log_norm = math.lgamma(0.5 * (dof + 1)) - math.lgamma(0.5 * dof) - 0.5 * math.log(dof * math.pi)
    return math.exp(log_norm - 0.5 * (dof + 1) * math.log1p(x * x / dof))


def _normal_guess(dof: float, delta: float) -> float:
    z = NormalDist().inv_cdf(1.0 - delta)
    # Cornish-Fisher expansion of the t quantile around the normal one
    z3 = z ** 3
    z5 = z ** 5
    return z + (z3 + z) / (4 * dof) + (5 * z5 + 16 * z3 + 3 * z) / (96 * dof * dof)


def _tail_guess(dof: float, delta: float) -> float:
    # leading power-law term of the tail: P(T > q) ~ c d^((d-2)/2) q^(-d)
    log_c = math.lgamma(0.5 * (dof + 1)) - math.lgamma(0.5 * dof) - 0.5 * math.log(math.pi)
    return math.exp((log_c + 0.5 * (dof - 2) * math.log(dof) - math.log(delta)) / dof)


@functools.lru_cache(maxsize=1 << 18)
def _upper_quantile(dof: float, delta: float) -> float:
    """Solve P(T_dof > q) = delta for 0 < delta < 1/2 (so q > 0).

    Newton iterations on log P(T > q) as a function of log q, where the
    t tail is close to linear, safeguarded by a bisection bracket.
    """
    if dof == 1:
        return math.tan(math.pi * (0.5 - delta))
    if dof == 2:
        c = 1.0 - 2.0 * delta
        return c * math.sqrt(2.0 / (4.0 * delta * (1.0 - delta)))

    log_target = math.log(delta)
    candidates = []
    for guess in (_normal_guess(dof, delta), _tail_guess(dof, delta)):
        if guess > 0 and math.isfinite(guess):
            sf = t_sf(dof, guess)
            if sf > 0:
                candidates.append((abs(math.log(sf) - log_target), guess, sf))
    _, q, sf = min(candidates)
    lo, hi = 0.0, math.inf
    for _ in range(200):
        if sf == delta:
            return q
        if sf > delta:
            lo = q
        else:
            hi = q
        # d log(sf) / d log(q) = -q pdf / sf
        step = (math.log(sf) - log_target) * sf / (q * t_pdf(dof, q))
        q_new = q * math.exp(min(step, 50.0))
        if not lo < q_new < hi:
            q_new = 0.5 * (lo + hi) if math.isfinite(hi) else 2.0 * q
        if abs(q_new - q) <= 1e-13 * q:
            return q_new
        q = q_new
        sf = t_sf(dof, q)
    return q


def t_quantile(dof: float, delta: float) -> float:
    """The 1 - delta quantile of Student's t with ``dof`` degrees of freedom."""
    _check_dof(dof)
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if delta == 0.5:
        return 0.0
    if delta < 0.5:
        return _upper_quantile(dof, delta)
    return -_upper_quantile(dof, 1.0 - delta)


@dataclass(frozen=True)
class TDist:
    """Student's t distribution with integer degrees of freedom."""

    dof: int

    def __post_init__(self):
        _check_dof(self.dof)

    def cdf(self, x: float) -> float:
        return t_cdf(self.dof, x)

    def sf(self, x: float) -> float:
        return t_sf(self.dof, x)

    def quantile(self, delta: float) -> float:
        return t_quantile(self.dof, delta)


def chk_quantile_bound(d: int, s: float) -> float:
    """sqrt(d * (s**(2/(d-1)) - 1)), the conservative stand-in for
    ``t_quantile(d, 1/(2 s sqrt(log s)))`` used by the unknown-variance baseline.
    """
    if int(d) != d or d < 2:
        raise DomainError(f"d must be an integer >= 2, got {d}")
    if not s > 1:
        raise DomainError(f"s must exceed 1, got {s}")
    return math.sqrt(d * math.expm1(2.0 * math.log(s) / (d - 1)))


def significance_level(t: float) -> float:
    """The decaying significance level 1/(2 t sqrt(log t)) used at step t."""
    if not t > 1:
        raise DomainError(f"significance level needs t > 1, got {t}")
    return 1.0 / (2.0 * t * math.sqrt(math.log(t)))
