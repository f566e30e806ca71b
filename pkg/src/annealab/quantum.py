"""Exact small-system quantum annealing in the full 2^N Hilbert space.

The Hamiltonian is diag(E) - Gamma * sum_j X_j in the sigma-z basis; it is
never materialized.  Real-time annealing follows the stepped protocol:
propagate for dt at fixed Gamma with a short Krylov (Lanczos) approximation
of exp(-i H dt), lower Gamma, repeat until the field reaches zero.  The
final wavefunction yields the solution statistics and probability-weighted
local entropy curves used to compare against the stochastic samplers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.linalg.blas import zaxpy as _zaxpy, zgemv as _zgemv

from .backend import BACKEND, jit

_MAX_N = 24


# --- Hamiltonian application -------------------------------------------------

@jit
def _matvec_kernel(table, psi, gamma, n_lo, out):
    """Blocked (Hpsi)[s] = E[s] psi[s] - gamma * sum_j psi[s ^ 2^j].

    Low bits are flipped inside an L2-resident block; high-bit neighbors
    stream in from the partner blocks.
    """
    size = psi.size
    n = 0
    while (1 << n) < size:
        n += 1
    if n_lo > n:
        n_lo = n
    lo_size = 1 << n_lo
    n_hi = n - n_lo
    for h in range(1 << n_hi):
        base = h << n_lo
        for l in range(lo_size):
            i = base + l
            acc = psi[i] - psi[i]  # zero of the amplitude dtype
            for j in range(n_lo):
                acc += psi[base + (l ^ (1 << j))]
            for j in range(n_hi):
                acc += psi[((h ^ (1 << j)) << n_lo) + l]
            out[i] = table[i] * psi[i] - gamma * acc
    return out


def _matvec_numpy(table, psi, gamma):
    """Vectorized route: bit flips as axis reversals of the (2,)*n tensor."""
    size = psi.size
    n = size.bit_length() - 1
    out = table * psi
    if gamma != 0.0 and n:
        t = psi.reshape((2,) * n)
        acc = np.zeros_like(t)
        for ax in range(n):
            acc += np.flip(t, axis=ax)
        out -= gamma * acc.reshape(size)
    return out


def _matvec(table, psi, gamma):
    if BACKEND == "numba":
        out = np.empty_like(psi)
        return _matvec_kernel(table, psi, gamma, 14, out)
    return _matvec_numpy(table, psi, gamma)


def _matvec_real(table, v, gamma):
    """Real-amplitude route for the symmetric eigensolvers."""
    if BACKEND == "numba":
        v = np.ascontiguousarray(v, dtype=float)
        out = np.empty_like(v)
        return _matvec_kernel(table, v, gamma, 14, out)
    return _matvec_numpy(table, np.asarray(v, dtype=float), gamma)


# --- domain types ------------------------------------------------------------

@dataclass
class QuantumState:
    """Wavefunction over the 2^N classical configurations (z basis)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size & (amps.size - 1):
            raise ValueError("amplitude vector length must be a power of two")
        self.amplitudes = amps

    @property
    def n(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def uniform_state(n: int) -> QuantumState:
    """Ground state of the pure driver: equal amplitude on every configuration."""
    size = 1 << n
    return QuantumState(np.full(size, 1.0 / math.sqrt(size), dtype=complex))


@dataclass(frozen=True)
class SilParams:
    """Stepped-annealing protocol knobs (defaults follow the reference runs)."""

    gamma_start: float = 5.0
    delta_gamma: float = 1e-3
    delta_t: float = 0.2
    krylov_dim: int = 10
    full_reorth: bool = True
    record_every: int = 100

    def __post_init__(self):
        if min(self.gamma_start, self.delta_gamma, self.delta_t) <= 0:
            raise ValueError("protocol parameters must be positive")
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be >= 2")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.gamma_start / self.delta_gamma))

    @property
    def t_max(self) -> float:
        return self.n_steps * self.delta_t


@dataclass
class SilResult:
    state: QuantumState
    gammas: np.ndarray       # recorded field values
    energies: np.ndarray     # <E>/N at the recorded fields
    renormalizations: int    # steps whose norm drifted past tolerance
    params: SilParams


@dataclass
class FinalStats:
    n_sol: int
    p_sol: float
    mean_energy: float       # <E>, unnormalized
    argmax_config: int
    p_argmax: float
    ipr: float
    mean_distance: float
    rank: int | None


@dataclass
class LocalEntropyCurves:
    d: np.ndarray            # grid {0, 1/N, ..., 1}
    phi_w: np.ndarray        # probability-weighted mean over the top set
    phi_sol: np.ndarray      # flat mean over all solutions
    n_w: int                 # size of the top-probability set
    top_all_solutions: bool


def apply_hamiltonian(state: QuantumState, gamma: float,
                      table: np.ndarray) -> QuantumState:
    """H|psi> without materializing H; the result is not normalized."""
    if table.size != state.amplitudes.size:
        raise ValueError("table and state dimensions differ")
    out = _matvec(np.asarray(table, dtype=float), state.amplitudes,
                  float(gamma))
    return QuantumState(out)


# --- short iterative Lanczos evolution ---------------------------------------

def _sil_step(psi, table, gamma, dt, m, full_reorth, basis=None):
    """One exp(-i H dt) application in an m-dimensional Krylov subspace.

    The basis workspace can be passed in to amortize the (m, 2^N)
    allocation across steps; projections run through in-place gemv so no
    basis-sized temporaries are created.
    """
    size = psi.size
    if basis is None or basis.shape[0] < m:
        basis = np.empty((m, size), dtype=complex)
    alphas = np.empty(m)
    betas = np.empty(max(m - 1, 0))
    basis[0] = psi
    w = _matvec(table, psi, gamma)
    alphas[0] = np.real(np.vdot(basis[0], w))
    w = _zaxpy(basis[0], w, a=-alphas[0])
    used = 1
    for k in range(1, m):
        if full_reorth:
            span = basis[:used].T        # F-contiguous view, no copy
            ov = _zgemv(1.0, span, w, trans=2)
            w = _zgemv(-1.0, span, ov, beta=1.0, y=w, overwrite_y=1)
        b = np.linalg.norm(w)
        if b < 1e-12:
            break  # invariant subspace: exact within the basis built so far
        betas[k - 1] = b
        basis[k] = w
        basis[k] /= b
        w = _matvec(table, basis[k], gamma)
        w = _zaxpy(basis[k - 1], w, a=-b)
        alphas[k] = np.real(np.vdot(basis[k], w))
        w = _zaxpy(basis[k], w, a=-alphas[k])
        used = k + 1
    if used == 1:
        return np.exp(-1j * dt * alphas[0]) * psi
    lam, u = eigh_tridiagonal(alphas[:used], betas[:used - 1])
    coeff = u @ (np.exp(-1j * dt * lam) * u[0, :])
    return _zgemv(1.0, basis[:used].T, np.ascontiguousarray(coeff))


def sil_evolve(table: np.ndarray, params: SilParams = SilParams(),
               norm_tol: float = 1e-9) -> SilResult:
    """Anneal the uniform state down to zero field, recording <E>/N."""
    table = np.asarray(table, dtype=float)
    size = table.size
    n = size.bit_length() - 1
    if (1 << n) != size:
        raise ValueError("table length must be a power of two")
    if n > _MAX_N:
        raise ValueError(f"N = {n} exceeds the exact-method cap {_MAX_N}")
    psi = uniform_state(n).amplitudes
    gammas, energies = [], []
    renorm = 0
    work = np.empty((params.krylov_dim, size), dtype=complex)
    for k in range(params.n_steps):
        gamma = params.gamma_start - k * params.delta_gamma
        psi = _sil_step(psi, table, gamma, params.delta_t,
                        params.krylov_dim, params.full_reorth, basis=work)
        nrm = np.linalg.norm(psi)
        if abs(nrm - 1.0) > norm_tol:
            renorm += 1
        psi /= nrm
        if k % params.record_every == 0:
            p = np.abs(psi) ** 2
            gammas.append(gamma)
            energies.append(float(p @ table) / n)
    p = np.abs(psi) ** 2
    gammas.append(0.0)
    energies.append(float(p @ table) / n)
    return SilResult(QuantumState(psi), np.array(gammas), np.array(energies),
                     renorm, params)


# --- spectra -----------------------------------------------------------------

def spectral_gap(table: np.ndarray, gamma: float, method: str = "lanczos",
                 ncv: int = 40, v0: np.ndarray | None = None,
                 tol: float = 0.0) -> tuple[float, float]:
    """Two lowest eigenvalues (H0, H1) of the annealing Hamiltonian.

    At gamma = 0 the matrix is diagonal and the answer is read off the
    table.  Degenerate ground states come back with H1 - H0 ~ 0; that is
    the physical statement, not an error.
    """
    table = np.asarray(table, dtype=float)
    size = table.size
    n = size.bit_length() - 1
    if n > _MAX_N:
        raise ValueError(f"N = {n} exceeds the exact-method cap {_MAX_N}")
    if gamma == 0.0:
        low = np.partition(table, 1)[:2]
        return float(low.min()), float(low.max())
    if method not in ("lanczos", "dense"):
        raise ValueError(f"unknown method {method!r}")
    if method == "dense" and n > 12:
        raise ValueError("dense cross-check capped at N = 12")
    if method == "dense" or size <= 16:
        h = np.diag(table)
        idx = np.arange(size)
        for j in range(n):
            h[idx, idx ^ (1 << j)] -= gamma
        w = np.linalg.eigvalsh(h)
        return float(w[0]), float(w[1])
    from scipy.sparse.linalg import LinearOperator, eigsh

    op = LinearOperator((size, size),
                        matvec=lambda v: _matvec_real(table, v, gamma),
                        dtype=float)
    w = eigsh(op, k=2, which="SA", ncv=min(ncv, size), v0=v0, tol=tol,
              return_eigenvectors=False)
    w = np.sort(w)
    return float(w[0]), float(w[1])


def gap_curve(table: np.ndarray, gammas, ncv: int = 40,
              tol: float = 0.0) -> np.ndarray:
    """(H0, H1) rows along a field grid.

    Successive iterative solves are warm-started from the previous ground
    vector, which cuts the Lanczos iteration count substantially on the
    smooth parts of the curve.
    """
    table = np.asarray(table, dtype=float)
    size = table.size
    rows = np.empty((len(gammas), 2))
    if size <= 16:
        for i, g in enumerate(gammas):
            rows[i] = spectral_gap(table, float(g))
        return rows
    from scipy.sparse.linalg import LinearOperator, eigsh

    v0 = None
    for i, g in enumerate(gammas):
        g = float(g)
        if g == 0.0:
            rows[i] = spectral_gap(table, 0.0)
            continue
        op = LinearOperator((size, size),
                            matvec=lambda v: _matvec_real(table, v, g),
                            dtype=float)
        w, vecs = eigsh(op, k=2, which="SA", ncv=min(ncv, size), v0=v0,
                        tol=tol)
        order = np.argsort(w)
        rows[i] = w[order]
        v0 = np.ascontiguousarray(vecs[:, order[0]])
    return rows


def thermal_oracle(table: np.ndarray, beta: float, gamma: float
                   ) -> tuple[float, float]:
    """Equilibrium <E> and <sigma^x> per spin by full diagonalization.

    Reference values for validating the samplers; capped at N = 12 where
    the dense spectrum is affordable.
    """
    table = np.asarray(table, dtype=float)
    size = table.size
    n = size.bit_length() - 1
    if n > 12:
        raise ValueError("thermal oracle capped at N = 12 (dense spectrum)")
    h = np.diag(table)
    idx = np.arange(size)
    for j in range(n):
        h[idx, idx ^ (1 << j)] -= gamma
    w, v = np.linalg.eigh(h)
    occ = np.exp(-beta * (w - w[0]))
    occ /= occ.sum()
    mean_e = float(occ @ ((v * v * table[:, None]).sum(axis=0)))
    total_x = 0.0
    for j in range(n):
        total_x += float(occ @ ((v * v[idx ^ (1 << j), :]).sum(axis=0)))
    return mean_e, total_x / n


# --- final-distribution statistics -------------------------------------------

def distribution_stats(state: QuantumState, table: np.ndarray,
                       sqa_config: np.ndarray | None = None) -> FinalStats:
    """Solution statistics of p(sigma) = |psi(sigma)|^2.

    The mean pairwise distance uses the per-bit marginal identity
    dbar = (1/N) sum_j 2 m_j (1 - m_j) with m_j the probability of bit j
    being clear, which equals the O(4^N) double sum exactly.
    """
    table = np.asarray(table, dtype=float)
    p = state.probabilities()
    if table.size != p.size:
        raise ValueError("table and state dimensions differ")
    n = state.n
    sol_mask = table == 0.0
    dbar = 0.0
    for j in range(n):
        m_plus = float(p.reshape(-1, 2, 1 << j)[:, 0, :].sum())
        dbar += 2.0 * m_plus * (1.0 - m_plus)
    dbar /= n
    argmax = int(np.argmax(p))
    rank = None
    if sqa_config is not None:
        c = _config_index(sqa_config, n)
        pc = p[c]
        rank = int(1 + np.count_nonzero(p > pc)
                   + np.count_nonzero((p == pc) & (np.arange(p.size) < c)))
    return FinalStats(
        n_sol=int(np.count_nonzero(sol_mask)),
        p_sol=float(p[sol_mask].sum()),
        mean_energy=float(p @ table),
        argmax_config=argmax,
        p_argmax=float(p[argmax]),
        ipr=float((p * p).sum()),
        mean_distance=dbar,
        rank=rank,
    )


def _config_index(sigma, n: int) -> int:
    """Encode a +-1 spin vector into the table index (bit j clear -> +1)."""
    sigma = np.asarray(sigma)
    if sigma.shape != (n,) or not np.all(np.abs(sigma) == 1):
        raise ValueError("configuration must be a +-1 vector of length n")
    bits = (1 - sigma.astype(np.int64)) // 2
    return int((bits << np.arange(n, dtype=np.int64)).sum())


def weighted_local_entropy(state: QuantumState, table: np.ndarray,
                           w: float = 0.9) -> LocalEntropyCurves:
    """Local-entropy curves around the most probable configurations.

    K(sigma, d) counts solutions within normalized Hamming radius d of a
    center; phi = (1/N) log K is averaged over the smallest set of
    top-probability configurations holding cumulative mass >= w (weighted
    by p), or flatly over all solutions.
    """
    if not 0.0 < w <= 1.0:
        raise ValueError("cumulative weight w must be in (0, 1]")
    table = np.asarray(table, dtype=float)
    p = state.probabilities()
    n = state.n
    sols = np.flatnonzero(table == 0.0).astype(np.uint64)
    if sols.size == 0:
        raise ValueError("instance has no solutions; local entropy undefined")
    order = np.lexsort((np.arange(p.size), -p))
    cum = np.cumsum(p[order])
    n_w = int(np.searchsorted(cum, w) + 1)
    top = order[:n_w].astype(np.uint64)
    top_ok = bool(np.all(table[top] == 0.0))
    if not top_ok:
        warnings.warn("top-probability set contains non-solutions; "
                      "local entropy there is -inf below the first "
                      "solution shell", stacklevel=2)
    d_grid = np.arange(n + 1) / n

    def curve(centers, weights):
        acc = np.zeros(n + 1)
        for c, wt in zip(centers, weights):
            if wt == 0.0:
                continue
            dist = np.bitwise_count(sols ^ c)
            k_shell = np.bincount(dist.astype(np.int64), minlength=n + 1)
            with np.errstate(divide="ignore"):
                acc += wt * np.log(np.cumsum(k_shell)) / n
        return acc

    wt_top = p[top.astype(np.int64)]
    wt_top = wt_top / wt_top.sum()
    phi_w = curve(top, wt_top)
    phi_sol = curve(sols, np.full(sols.size, 1.0 / sols.size))
    return LocalEntropyCurves(d_grid, phi_w, phi_sol, n_w, top_ok)
