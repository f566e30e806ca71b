"""Belief-propagation probes of the landscape around a reference state.

Messages live on the edges of the fully connected factor graph: one
variable node per spin, one factor node per pattern.  An external field
lambda * w_i tilts the measure toward the reference w; sweeping lambda
traces out local energy or local entropy profiles as a function of the
typical Hamming distance from w.

Only the zero-temperature (hard constraint, solution counting) and
infinite-temperature (free tilted spins) measures are implemented; the
latter trivializes to a product measure and is evaluated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .model import Instance, energy

_LOG2 = math.log(2.0)
_CLIP = 1.0 - 1e-15


def g_cavity(a, b):
    """Cavity bias of one spin under a Gaussian pattern constraint.

    The cavity sum of the remaining spins is N(a, b^2); the constraint
    keeps sum + sigma*xi >= 0.  Bias = (Z+ - Z-)/(Z+ + Z-) with
    Z+- = P(N(a, b^2) >= -+1), evaluated as tanh of half the log ratio
    so deep tails cannot underflow.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    bsafe = np.where(b > 0, b, 1.0)
    out = np.tanh(0.5 * (log_ndtr((1.0 + a) / bsafe)
                         - log_ndtr((a - 1.0) / bsafe)))
    if np.any(b <= 0):
        # frozen cavity: the slower-decaying tail wins outright
        frozen = np.where(a > 1.0, 0.0, np.where(a == 1.0, 1.0 / 3.0, 1.0))
        out = np.where(b > 0, out, frozen)
    return out


@dataclass
class MessageSet:
    """Fixed-point (or last-iterate) BP messages for one (instance, lambda).

    var_to_factor and factor_to_var are (p, n); m holds the total
    magnetizations including the external field.  Non-convergence is
    reported through the flags, never hidden.
    """

    var_to_factor: np.ndarray
    factor_to_var: np.ndarray
    m: np.ndarray
    converged: bool
    iterations: int
    residual: float


@dataclass(frozen=True)
class LandscapePoint:
    lam: float
    distance: float
    value: float
    converged: bool
    iterations: int


def _check_reference(instance: Instance, reference: np.ndarray) -> np.ndarray:
    w = np.asarray(reference)
    if w.shape != (instance.n,) or not np.all(np.abs(w) == 1):
        raise ValueError("reference must be a +-1 vector of length n")
    return w.astype(float)


def bp_solve(instance: Instance, lam: float, reference: np.ndarray,
             mode: str = "zero_temperature", *, tol: float = 1e-8,
             max_iter: int = 2000, damping: float = 0.5,
             rng: np.random.Generator | None = None) -> MessageSet:
    """Damped Jacobi iteration of the tilted message equations.

    Each sweep recomputes every factor-to-variable message from the
    current variable-to-factor set, then every variable-to-factor message
    from the fresh factor side; both families are mixed with the damping
    factor.  Stops when the largest message change falls below tol.
    """
    if lam < 0:
        raise ValueError("field strength lambda must be >= 0")
    w = _check_reference(instance, reference)
    xi = instance.xi.astype(float)
    p, n = xi.shape
    if mode == "infinite_temperature":
        m = np.tanh(lam * w)
        mtf = np.tile(m, (p, 1))
        return MessageSet(mtf, np.zeros((p, n)), m, True, 0, 0.0)
    if mode != "zero_temperature":
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        rng = np.random.default_rng(0)
    mtf = rng.uniform(-0.01, 0.01, size=(p, n))
    ftm = np.zeros((p, n))
    field = lam * w
    res = math.inf
    for it in range(1, max_iter + 1):
        one_m2 = 1.0 - mtf * mtf
        a = (xi * mtf).sum(axis=1, keepdims=True) - xi * mtf
        b = np.sqrt(np.maximum(one_m2.sum(axis=1, keepdims=True) - one_m2,
                               0.0))
        ftm_new = np.clip(xi * g_cavity(a, b), -_CLIP, _CLIP)
        ftm_new = ftm + damping * (ftm_new - ftm)
        ath = np.arctanh(np.clip(ftm_new, -_CLIP, _CLIP))
        total = ath.sum(axis=0) + field
        mtf_new = np.clip(np.tanh(total - ath), -_CLIP, _CLIP)
        mtf_new = mtf + damping * (mtf_new - mtf)
        res = max(np.abs(ftm_new - ftm).max() if p else 0.0,
                  np.abs(mtf_new - mtf).max() if p else 0.0)
        mtf, ftm = mtf_new, ftm_new
        if res < tol:
            m = np.tanh(np.arctanh(np.clip(ftm, -_CLIP, _CLIP)).sum(axis=0)
                        + field)
            return MessageSet(mtf, ftm, m, True, it, res)
    m = np.tanh(np.arctanh(np.clip(ftm, -_CLIP, _CLIP)).sum(axis=0) + field)
    return MessageSet(mtf, ftm, m, False, max_iter, res)


def distance_from_reference(messages: MessageSet, lam: float,
                            reference: np.ndarray) -> float:
    """Typical normalized Hamming distance d = (1 - <m, w>/n) / 2.

    Depends on lambda only through the converged messages; the argument is
    kept for interface symmetry with the solve call.
    """
    w = np.asarray(reference, dtype=float)
    return 0.5 * (1.0 - float(messages.m @ w) / w.size)


def bethe_free_entropy(instance: Instance, messages: MessageSet, lam: float,
                       reference: np.ndarray) -> float:
    """Bethe log-partition density of the tilted solution-counting measure.

    Factor, variable and edge contributions of the standard Bethe
    decomposition; the factor term is the Gaussian-tail probability that a
    pattern constraint holds under the full cavity product measure.
    """
    w = _check_reference(instance, reference)
    xi = instance.xi.astype(float)
    p, n = xi.shape
    mtf, ftm = messages.var_to_factor, messages.factor_to_var
    if p:
        a = (xi * mtf).sum(axis=1)
        b = np.sqrt(np.maximum((1.0 - mtf * mtf).sum(axis=1), 0.0))
        with np.errstate(divide="ignore"):
            log_zf = log_ndtr(np.where(b > 0, a / np.where(b > 0, b, 1.0),
                                       np.where(a >= 0, np.inf, -np.inf)))
        fsum = float(log_zf.sum())
        lp = np.log1p(np.clip(ftm, -_CLIP, _CLIP)).sum(axis=0)
        lm = np.log1p(-np.clip(ftm, -_CLIP, _CLIP)).sum(axis=0)
        log_zi = np.logaddexp(lam * w + lp, -lam * w + lm) - p * _LOG2
        esum = float((np.log1p(mtf * ftm) - _LOG2).sum())
    else:
        fsum = 0.0
        log_zi = np.logaddexp(lam * w, -lam * w)
        esum = 0.0
    return (fsum + float(log_zi.sum()) - esum) / n


def profile_energy(instance: Instance, reference: np.ndarray,
                   lambda_grid) -> list[LandscapePoint]:
    """Most-probable energy shift at distance d, infinite-temperature probe.

    The tilted measure factorizes (m_i = tanh(lambda w_i) exactly); each
    pattern violates independently with the Gaussian-CLT probability
    H(a/b), so no iteration is needed.  Values are energy densities
    relative to the reference configuration's own cost.
    """
    w = _check_reference(instance, reference)
    xi = instance.xi.astype(float)
    n = instance.n
    e_ref = energy(instance.xi, np.asarray(reference), "r0") / n
    out = []
    for lam in np.asarray(lambda_grid, dtype=float):
        if lam < 0:
            raise ValueError("field strength lambda must be >= 0")
        m = np.tanh(lam * w)
        d = 0.5 * (1.0 - float(m @ w) / n)
        if instance.p:
            a = xi @ m
            b2 = (1.0 - m * m).sum()
            if b2 > 0:
                viol = ndtr(-a / math.sqrt(b2))
            else:
                viol = (a < 0).astype(float)
            shift = float(viol.sum()) / n - e_ref
        else:
            shift = 0.0
        out.append(LandscapePoint(float(lam), d, shift, True, 0))
    return out


def profile_entropy(instance: Instance, reference: np.ndarray, lambda_grid,
                    *, tol: float = 1e-8, max_iter: int = 2000,
                    damping: float = 0.5, seed: int = 0) -> list[LandscapePoint]:
    """Local entropy density s(d) = phi(lambda) - lambda (1 - 2d).

    Each grid point is an independent zero-temperature BP job (fresh
    deterministic initialization derived from the seed), so failures stay
    localized; non-converged points are emitted with their flags rather
    than dropped.
    """
    w = np.asarray(reference)
    out = []
    for idx, lam in enumerate(np.asarray(lambda_grid, dtype=float)):
        rng = np.random.default_rng(np.random.SeedSequence((seed, idx)))
        msg = bp_solve(instance, float(lam), w, "zero_temperature", tol=tol,
                       max_iter=max_iter, damping=damping, rng=rng)
        d = distance_from_reference(msg, float(lam), w)
        phi = bethe_free_entropy(instance, msg, float(lam), w)
        out.append(LandscapePoint(float(lam), d, phi - lam * (1.0 - 2.0 * d),
                                  msg.converged, msg.iterations))
    return out
