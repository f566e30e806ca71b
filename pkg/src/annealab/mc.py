"""Metropolis samplers for the path-integral and classical annealers.

The quantum annealer is simulated through its Suzuki-Trotter image: y coupled
replicas of the classical system with effective energy

    H_eff = (1/y) sum_a E(sigma^a) - (J/beta) sum_{a,j} sigma_j^a sigma_j^{a+1}

(periodic in a), where the inter-replica coupling J and the constant offset K
follow from the transverse field:

    J = (1/2) log coth(beta Gamma / y),
    K = (y/2) log((1/2) sinh(2 beta Gamma / y)).

Classical annealing is the y = 1, J = 0 special case of the same kernel, with
the inverse temperature ramped instead of the field.

All margins are kept as integer pattern sums, updated incrementally under
single spin flips, so the energy bookkeeping is exact until the final
division.  Site and replica are drawn uniformly per attempt; a sweep means
N*y attempts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import model
from .backend import jit
from .rng import generator_for, next_double, next_index, state_for

GAMMA_FLOOR = 1e-6


def coupling_constants(beta: float, gamma: float, y: int,
                       gamma_floor: float = GAMMA_FLOOR) -> tuple[float, float]:
    """Replica coupling J and constant offset K for given field and depth.

    The field is clamped below at gamma_floor so the coupling stays finite
    when the schedule reaches zero.
    """
    x = beta * max(gamma, gamma_floor) / y
    return 0.5 * np.log(1.0 / np.tanh(x)), 0.5 * y * np.log(0.5 * np.sinh(2.0 * x))


@dataclass(frozen=True)
class TrotterCouplings:
    beta: float
    gamma: float
    y: int
    coupling: float
    offset: float

    @classmethod
    def from_params(cls, beta, gamma, y, gamma_floor=GAMMA_FLOOR):
        j, k = coupling_constants(beta, gamma, y, gamma_floor)
        return cls(beta=beta, gamma=gamma, y=y, coupling=j, offset=k)


@dataclass(frozen=True)
class AnnealSchedule:
    """Per-stage field, inverse temperature and attempted-flip budget.

    A run executes the stages in order: sample at (gammas[t], betas[t]) for
    flips[t] attempts, record one trace row, move on.  The stock protocol
    divides tau * N * y * 10^4 total attempts into 30 tau stages, lowering the
    field by (gamma0 - gamma1) / (30 tau) before each stage so the last stage
    sits exactly at gamma1.  A final stage at field zero evaluates its
    couplings at the gamma_floor clamp (the replica bonds freeze and the
    stack crystallises) while the trace reports the scheduled zero.
    """

    gammas: np.ndarray
    betas: np.ndarray
    flips: np.ndarray

    def __post_init__(self):
        if not (len(self.gammas) == len(self.betas) == len(self.flips)):
            raise ValueError("schedule arrays must have equal length")
        if np.any(np.diff(self.gammas) > 1e-12):
            raise ValueError("the field schedule must be non-increasing")

    @property
    def n_stages(self) -> int:
        return len(self.gammas)

    @staticmethod
    def _split_flips(total: int, n_stages: int) -> np.ndarray:
        base, rem = divmod(int(total), n_stages)
        flips = np.full(n_stages, base, dtype=np.int64)
        flips[:rem] += 1
        return flips

    @classmethod
    def sqa(cls, n: int, y: int, tau: int, beta: float, gamma0: float = 2.5,
            gamma1: float = 0.0, flips_per_site: float = 1e4) -> "AnnealSchedule":
        n_stages = 30 * tau
        # first decrement precedes the first stage; the ladder ends at gamma1
        # exactly (integer arithmetic in the numerator avoids endpoint dust)
        k = np.arange(1, n_stages + 1)
        gammas = gamma1 + (gamma0 - gamma1) * (n_stages - k) / n_stages
        betas = np.full(n_stages, float(beta))
        flips = cls._split_flips(round(tau * n * y * flips_per_site), n_stages)
        return cls(gammas=gammas, betas=betas, flips=flips)

    @classmethod
    def sa(cls, n: int, tau: int, betas: np.ndarray, gammas: np.ndarray | None = None,
           flips_per_site: float = 1e4) -> "AnnealSchedule":
        """Classical schedule; betas typically come from the equivalent-field
        map, gammas are carried along for the trace only."""
        betas = np.asarray(betas, dtype=float)
        n_stages = len(betas)
        if gammas is None:
            gammas = np.zeros(n_stages)
        flips = cls._split_flips(round(tau * n * flips_per_site), n_stages)
        return cls(gammas=np.asarray(gammas, float), betas=betas, flips=flips)


# --- stage kernels -----------------------------------------------------------
# One Metropolis stage at fixed (beta, gamma).  Shared by the quantum (y > 1)
# and classical (y = 1) paths; with one replica the neighbour term reads the
# spin itself and exp_q[...] = 1 keeps it inert.
#
# Each attempt runs a store-free counting pass over the pattern sums (the
# sign-bit accumulation vectorises) and commits with a second pass only on
# acceptance.  Sums and votes are int16 (|S| <= N < 2^15) so AVX lanes
# stay wide; patterns remain int8 and widen in-register.

@jit
def _stage_r0(xi_t, sigma, marg, e_rep, state, n_flips, exp_cl, exp_q, p_off):
    y, n = sigma.shape
    p = xi_t.shape[1]
    total = np.int64(0)
    for a in range(y):
        total += e_rep[a]
    acc_e = np.int64(0)
    n_acc = 0
    for _ in range(n_flips):
        a = next_index(state, y)
        j = next_index(state, n)
        sig = sigma[a, j]
        d = np.int16(-2 * sig)
        srow = marg[a]
        xrow = xi_t[j]
        cnt = np.int16(0)
        for mu in range(p):
            cnt += (srow[mu] + d * xrow[mu]) >> 15
        de = np.int64(-cnt) - e_rep[a]
        up = sigma[a - 1 if a > 0 else y - 1, j]
        dn = sigma[a + 1 if a < y - 1 else 0, j]
        qidx = 1 + ((-sig * (up + dn)) >> 1)
        ratio = exp_cl[de + p_off] * exp_q[qidx]
        if next_double(state) < ratio:
            for mu in range(p):
                srow[mu] += d * xrow[mu]
            sigma[a, j] = -sig
            e_rep[a] += de
            total += de
            n_acc += 1
        acc_e += total
    return n_acc, acc_e


@jit
def _stage_r1(xi_t, sigma, marg, m_rep, state, n_flips, exp_cl, exp_q, m_off):
    y, n = sigma.shape
    p = xi_t.shape[1]
    total = np.int64(0)
    for a in range(y):
        total += m_rep[a]
    acc_e = np.int64(0)
    n_acc = 0
    for _ in range(n_flips):
        a = next_index(state, y)
        j = next_index(state, n)
        sig = sigma[a, j]
        d = np.int16(-2 * sig)
        srow = marg[a]
        xrow = xi_t[j]
        neg = np.int32(0)
        for mu in range(p):
            new = srow[mu] + d * xrow[mu]
            neg += (-new) & (new >> 15)
        dm = neg - m_rep[a]
        up = sigma[a - 1 if a > 0 else y - 1, j]
        dn = sigma[a + 1 if a < y - 1 else 0, j]
        qidx = 1 + ((-sig * (up + dn)) >> 1)
        ratio = exp_cl[dm + m_off] * exp_q[qidx]
        if next_double(state) < ratio:
            for mu in range(p):
                srow[mu] += d * xrow[mu]
            sigma[a, j] = -sig
            m_rep[a] += dm
            total += dm
            n_acc += 1
        acc_e += total
    return n_acc, acc_e


@jit
def _stage_committee(xi_t, sigma, marg, votes, e_rep, state, n_flips,
                     exp_cl, exp_q, p_off, unit_size):
    # marg has shape (y, k_units, p); votes (y, p).  Unit sums stay odd
    # (unit_size odd, enforced by the driver), so a flip changes a unit's
    # sign exactly when the stored sum crosses zero.
    y, n = sigma.shape
    p = votes.shape[1]
    total = np.int64(0)
    for a in range(y):
        total += e_rep[a]
    acc_e = np.int64(0)
    n_acc = 0
    for _ in range(n_flips):
        a = next_index(state, y)
        j = next_index(state, n)
        k = j // unit_size
        sig = sigma[a, j]
        d = np.int16(-2 * sig)
        srow = marg[a, k]
        vrow = votes[a]
        xrow = xi_t[j]
        cnt = np.int16(0)
        for mu in range(p):
            old = srow[mu]
            new = old + d * xrow[mu]
            vnew = vrow[mu] + 2 * ((new >> 15) - (old >> 15))
            cnt += vnew >> 15
        de = np.int64(-cnt) - e_rep[a]
        up = sigma[a - 1 if a > 0 else y - 1, j]
        dn = sigma[a + 1 if a < y - 1 else 0, j]
        qidx = 1 + ((-sig * (up + dn)) >> 1)
        ratio = exp_cl[de + p_off] * exp_q[qidx]
        if next_double(state) < ratio:
            for mu in range(p):
                old = srow[mu]
                new = old + d * xrow[mu]
                srow[mu] = new
                vrow[mu] += 2 * ((new >> 15) - (old >> 15))
            sigma[a, j] = -sig
            e_rep[a] += de
            total += de
            n_acc += 1
        acc_e += total
    return n_acc, acc_e


# --- estimators --------------------------------------------------------------

def replica_overlap(sigma: np.ndarray, lag: int) -> float:
    """q(lag) = (1/Ny) sum_{a,j} sigma_j^a sigma_j^{a+lag}, periodic."""
    s = sigma.astype(np.int32)
    return float((s * np.roll(s, -lag, axis=0)).mean())


def transverse_estimator(sigma: np.ndarray, beta: float, gamma: float,
                         gamma_floor: float = GAMMA_FLOOR) -> float:
    """Per-site transverse magnetisation from adjacent-replica alignment.

    T = coth(2 b G / y) - <sigma^a sigma^{a+1}> / sinh(2 b G / y); a fully
    aligned stack at field G gives tanh(b G / y).
    """
    y = sigma.shape[0]
    x = 2.0 * beta * max(gamma, gamma_floor) / y
    return float(1.0 / np.tanh(x) - replica_overlap(sigma, 1) / np.sinh(x))


def default_lags(y: int) -> list[int]:
    """Powers of two up to y/2; empty for a single replica."""
    lags = []
    lag = 1
    while lag <= y // 2 and lag < y:
        lags.append(lag)
        lag *= 2
    return lags


# --- traces ------------------------------------------------------------------

@dataclass
class McTrace:
    """Per-stage record of one annealing run.

    energy_density is the within-stage average of E/(N y); overlaps and the
    transverse estimator are end-of-stage snapshots.  For classical runs
    (y = 1) there are no overlap columns and transverse is NaN.
    """

    steps: np.ndarray
    gammas: np.ndarray
    betas: np.ndarray
    energy_density: np.ndarray
    overlaps: np.ndarray  # (n_stages, len(lags))
    transverse: np.ndarray
    acc_rate: np.ndarray
    lags: list[int]
    final_sigma: np.ndarray
    wall_time: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.gammas) > 1e-12):
            raise ValueError("trace field values must be non-increasing")

    @property
    def final_energy_density(self) -> float:
        return float(self.energy_density[-1])

    def replica_majority(self) -> np.ndarray:
        """Site-wise majority vote over replicas; exact ties resolve to +1."""
        s = self.final_sigma.astype(np.int32).sum(axis=0)
        return np.where(s >= 0, 1, -1).astype(np.int8)

    def header(self) -> str:
        lag_cols = "".join(f",q1_lag{l}" for l in self.lags)
        return f"step,gamma,beta,energy_density{lag_cols},transverse,acc_rate"

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.header() + "\n")
            for i in range(len(self.steps)):
                cells = [str(int(self.steps[i])), repr(float(self.gammas[i])),
                         repr(float(self.betas[i])), repr(float(self.energy_density[i]))]
                cells += [repr(float(v)) for v in self.overlaps[i]]
                cells += [repr(float(self.transverse[i])), repr(float(self.acc_rate[i]))]
                fh.write(",".join(cells) + "\n")


def run_schedule(instance: model.Instance, schedule: AnnealSchedule, *, y: int,
                 seed: int, variant: str = "r0", k_units: int | None = None,
                 stream: str = "mc", stream_index: int = 0,
                 gamma_floor: float = GAMMA_FLOOR, lags: list[int] | None = None,
                 sigma0: np.ndarray | None = None,
                 check_consistency: bool = False) -> McTrace:
    """Execute an annealing schedule and collect the trace.

    With check_consistency=True the incrementally maintained margins and
    energies are re-derived from scratch after every stage and compared
    exactly; meant for tests, costs one O(N P y) pass per stage.
    """
    t0 = time.perf_counter()
    xi = instance.xi
    p, n = xi.shape
    if variant not in model.VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if k_units is not None:
        if n % k_units:
            raise ValueError("n must be divisible by k_units")
        if (n // k_units) % 2 == 0:
            raise ValueError("unit size must be odd so unit votes cannot tie")
        if variant != "r0":
            raise ValueError("the committee cost is defined for variant r0")
    xi_t = np.ascontiguousarray(xi.T)  # int8

    state = state_for(seed, stream, stream_index)
    init_rng = generator_for(seed, stream + "/init", stream_index)
    if sigma0 is None:
        sigma = (init_rng.integers(0, 2, size=(y, n), dtype=np.int8) * 2 - 1)
    else:
        sigma = np.array(sigma0, dtype=np.int8).reshape(y, n).copy()

    if k_units is None:
        marg = np.ascontiguousarray(
            (sigma.astype(np.int32) @ xi.T.astype(np.int32)).astype(np.int16))  # (y, p)
        if variant == "r0":
            e_rep = (marg < 0).sum(axis=1).astype(np.int64)
        else:
            e_rep = np.where(marg < 0, -marg, 0).sum(axis=1).astype(np.int64)
        votes = None
    else:
        marg = np.ascontiguousarray(np.stack(
            [model.committee_margins(xi, s, k_units).T for s in sigma]
        ).astype(np.int16))  # (y, k, p)
        votes = np.ascontiguousarray(
            np.sign(marg).sum(axis=1).astype(np.int16))  # (y, p)
        e_rep = (votes < 0).sum(axis=1).astype(np.int64)

    if lags is None:
        lags = default_lags(y)
    n_stages = schedule.n_stages
    dens = np.empty(n_stages)
    ovl = np.empty((n_stages, len(lags)))
    tvs = np.empty(n_stages)
    acc = np.empty(n_stages)
    inv_sqrt_n = 1.0 / np.sqrt(n)
    if variant == "r0" or k_units is not None:
        off = p
        delta_range = np.arange(-p, p + 1, dtype=np.float64)
        dens_scale = 1.0 / n
    else:
        off = 2 * p
        delta_range = np.arange(-2 * p, 2 * p + 1, dtype=np.float64) * inv_sqrt_n
        dens_scale = inv_sqrt_n / n

    for t in range(n_stages):
        beta_t = float(schedule.betas[t])
        gamma_t = float(schedule.gammas[t])
        n_flips = int(schedule.flips[t])
        if y > 1:
            j_cpl, _ = coupling_constants(beta_t, gamma_t, y, gamma_floor)
        else:
            j_cpl = 0.0
        with np.errstate(over="ignore"):
            exp_cl = np.exp(-(beta_t / y) * delta_range)
            exp_q = np.exp(np.array([-4.0 * j_cpl, 0.0, 4.0 * j_cpl]))
        if k_units is None:
            if variant == "r0":
                n_acc, acc_e = _stage_r0(xi_t, sigma, marg, e_rep, state,
                                         n_flips, exp_cl, exp_q, off)
            else:
                n_acc, acc_e = _stage_r1(xi_t, sigma, marg, e_rep, state,
                                         n_flips, exp_cl, exp_q, off)
        else:
            n_acc, acc_e = _stage_committee(xi_t, sigma, marg, votes, e_rep,
                                            state, n_flips, exp_cl, exp_q,
                                            off, n // k_units)
        dens[t] = acc_e * dens_scale / (n_flips * y)
        for li, lag in enumerate(lags):
            ovl[t, li] = replica_overlap(sigma, lag)
        tvs[t] = transverse_estimator(sigma, beta_t, gamma_t, gamma_floor) if y > 1 else np.nan
        acc[t] = n_acc / n_flips
        if check_consistency:
            _verify_state(xi, sigma, marg, votes, e_rep, variant, k_units)

    return McTrace(
        steps=np.arange(n_stages), gammas=schedule.gammas.copy(),
        betas=schedule.betas.copy(), energy_density=dens, overlaps=ovl,
        transverse=tvs, acc_rate=acc, lags=list(lags), final_sigma=sigma,
        wall_time=time.perf_counter() - t0,
        meta={"variant": variant, "y": y, "seed": seed, "stream": stream,
              "stream_index": stream_index, "k_units": k_units},
    )


def _verify_state(xi, sigma, marg, votes, e_rep, variant, k_units):
    if k_units is None:
        ref = sigma.astype(np.int32) @ xi.T.astype(np.int32)
        if not np.array_equal(ref.astype(np.int16), marg):
            raise AssertionError("incremental margins diverged from recomputation")
        if variant == "r0":
            ref_e = (ref < 0).sum(axis=1)
        else:
            ref_e = np.where(ref < 0, -ref, 0).sum(axis=1)
        if not np.array_equal(ref_e.astype(np.int64), e_rep):
            raise AssertionError("incremental energies diverged from recomputation")
    else:
        for a in range(sigma.shape[0]):
            ref = model.committee_margins(xi, sigma[a], k_units).T  # (k, p)
            if not np.array_equal(ref.astype(np.int16), marg[a]):
                raise AssertionError("incremental unit sums diverged from recomputation")
        ref_votes = np.sign(marg.astype(np.int32)).sum(axis=1).astype(np.int16)
        if not np.array_equal(ref_votes, votes):
            raise AssertionError("incremental votes diverged from recomputation")
        ref_e = (ref_votes < 0).sum(axis=1).astype(np.int64)
        if not np.array_equal(ref_e, e_rep):
            raise AssertionError("incremental energies diverged from recomputation")


def run_sqa(instance: model.Instance, *, y: int, beta: float, tau: int, seed: int,
            variant: str = "r0", k_units: int | None = None, gamma0: float = 2.5,
            gamma1: float = 0.0, flips_per_site: float = 1e4, **kw) -> McTrace:
    """Stock path-integral annealing run: field ramped down at fixed beta."""
    sched = AnnealSchedule.sqa(instance.n, y, tau, beta, gamma0, gamma1, flips_per_site)
    return run_schedule(instance, sched, y=y, seed=seed, variant=variant,
                        k_units=k_units, stream="mc/sqa", **kw)


def run_sa(instance: model.Instance, *, betas: np.ndarray, tau: int, seed: int,
           variant: str = "r0", k_units: int | None = None,
           gammas: np.ndarray | None = None, flips_per_site: float = 1e4,
           **kw) -> McTrace:
    """Classical annealing with an explicit inverse-temperature ladder."""
    sched = AnnealSchedule.sa(instance.n, tau, betas, gammas, flips_per_site)
    return run_schedule(instance, sched, y=1, seed=seed, variant=variant,
                        k_units=k_units, stream="mc/sa", **kw)


# --- fixed-parameter sampling (used for equilibrium comparisons) -------------

@dataclass
class EquilibriumResult:
    block_means: np.ndarray
    transverse_blocks: np.ndarray

    @property
    def energy(self) -> float:
        return float(self.block_means.mean())

    @property
    def energy_se(self) -> float:
        nb = len(self.block_means)
        return float(self.block_means.std(ddof=1) / np.sqrt(nb))

    @property
    def transverse(self) -> float:
        return float(self.transverse_blocks.mean())


def sample_equilibrium(instance: model.Instance, *, y: int, beta: float,
                       gamma: float, seed: int, variant: str = "r0",
                       burn_sweeps: int, n_blocks: int, block_sweeps: int,
                       stream: str = "mc/eq", stream_index: int = 0,
                       gamma_floor: float = GAMMA_FLOOR) -> EquilibriumResult:
    """Sample <E>/N at fixed (beta, gamma) with block averaging.

    Blocks should be much longer than the autocorrelation time; the standard
    error quoted downstream is the naive one over block means.
    """
    n = instance.n
    sweep = n * y
    n_stages = n_blocks + 1
    sched = AnnealSchedule(
        gammas=np.full(n_stages, float(gamma)),
        betas=np.full(n_stages, float(beta)),
        flips=np.concatenate([[burn_sweeps * sweep],
                              np.full(n_blocks, block_sweeps * sweep)]).astype(np.int64),
    )
    trace = run_schedule(instance, sched, y=y, seed=seed, variant=variant,
                         stream=stream, stream_index=stream_index,
                         gamma_floor=gamma_floor, lags=[])
    return EquilibriumResult(block_means=trace.energy_density[1:].copy(),
                             transverse_blocks=trace.transverse[1:].copy())
