"""Binary perceptron energy model.

An instance is a set of P patterns xi^mu in {-1,+1}^N, all nominally labelled
+1 (a pattern with label -1 is absorbed by negating it).  A weight vector
sigma in {-1,+1}^N classifies pattern mu correctly when its margin
Delta_mu = N^{-1/2} sum_j xi^mu_j sigma_j is strictly positive; a zero margin
counts as correct.  Two cost functions are supported:

* ``r0``: the number of misclassified patterns,
* ``r1``: the sum of |Delta_mu| over misclassified patterns,

plus a tree committee machine (``committee_energy``) whose K units each read a
contiguous slice of the pattern and vote by majority.

State indices: when the 2^N configurations are enumerated, index ``s`` encodes
spin j as ``+1`` when bit j of ``s`` is 0 (so index 0 is the all ``+1``
vector, and flipping spin j maps ``s`` to ``s ^ (1 << j)``).  The real-time
evolution module relies on the same convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backend import BACKEND, jit

VARIANTS = ("r0", "r1")

FORMAT_VERSION = 1


@dataclass(frozen=True)
class Instance:
    """One perceptron problem: patterns only, labels absorbed."""

    xi: np.ndarray  # (p, n) int8, entries +-1

    def __post_init__(self):
        xi = np.ascontiguousarray(self.xi, dtype=np.int8)
        if xi.ndim != 2:
            raise ValueError("patterns must be a (p, n) matrix")
        if not np.all(np.abs(xi) == 1):
            raise ValueError("pattern entries must be +-1")
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.xi.shape[1]

    @property
    def p(self) -> int:
        return self.xi.shape[0]

    @property
    def alpha(self) -> float:
        return self.p / self.n


def generate_instance(n: int, p: int, rng: np.random.Generator) -> Instance:
    """Draw p iid uniform +-1 patterns of length n."""
    xi = (rng.integers(0, 2, size=(p, n), dtype=np.int8) * 2 - 1).astype(np.int8)
    return Instance(xi)


def margins(xi: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Integer pattern sums S_mu = sum_j xi^mu_j sigma_j (margin * sqrt(N))."""
    return xi.astype(np.int32) @ sigma.astype(np.int32)


def energy(xi: np.ndarray, sigma: np.ndarray, variant: str = "r0") -> float:
    """Cost of one weight vector; exact, reference implementation."""
    s = margins(xi, sigma)
    if variant == "r0":
        return float(np.count_nonzero(s < 0))
    if variant == "r1":
        return float(-s[s < 0].sum(dtype=np.int64)) / np.sqrt(xi.shape[1])
    raise ValueError(f"unknown variant {variant!r}")


def committee_margins(xi: np.ndarray, sigma: np.ndarray, k_units: int) -> np.ndarray:
    """Per-unit integer sums, shape (p, k).

    Unit k reads the contiguous slice [k*n/K, (k+1)*n/K) of both the pattern
    and the weights; n must be divisible by k_units.
    """
    p, n = xi.shape
    if n % k_units:
        raise ValueError("n must be divisible by k_units")
    prod = xi.astype(np.int32) * sigma.astype(np.int32)[None, :]
    return prod.reshape(p, k_units, n // k_units).sum(axis=2)


def committee_energy(xi: np.ndarray, sigma: np.ndarray, k_units: int) -> int:
    """Number of patterns on which the majority vote of the units is negative.

    A unit with zero sum abstains; a zero overall vote counts as correct,
    consistent with the margin convention above.  With k_units == 1 this is
    exactly the ``r0`` perceptron cost.
    """
    votes = np.sign(committee_margins(xi, sigma, k_units)).sum(axis=1)
    return int(np.count_nonzero(votes < 0))


def sigma_from_index(s: int, n: int) -> np.ndarray:
    """Decode a state index into a +-1 spin vector (bit 0 -> spin 0)."""
    bits = (s >> np.arange(n, dtype=np.uint64)) & 1
    return (1 - 2 * bits).astype(np.int8)


# --- exhaustive energy tables ------------------------------------------------

@jit
def _table_gray(xi_t, r1, inv_sqrt_n, out):
    n, p = xi_t.shape
    sigma = np.ones(n, np.int8)
    s = np.zeros(p, np.int32)
    for j in range(n):
        for mu in range(p):
            s[mu] += xi_t[j, mu]
    acc = 0
    for mu in range(p):
        v = s[mu]
        if v < 0:
            acc += 1 if not r1 else -v
    out[0] = acc * inv_sqrt_n if r1 else float(acc)
    g = 0
    for i in range(1, 1 << n):
        j = 0
        while not (i >> j) & 1:
            j += 1
        d = np.int32(-2 * sigma[j])
        sigma[j] = -sigma[j]
        if r1:
            for mu in range(p):
                old = s[mu]
                new = old + d * xi_t[j, mu]
                s[mu] = new
                acc += ((-new) & (new >> 31)) - ((-old) & (old >> 31))
        else:
            for mu in range(p):
                old = s[mu]
                new = old + d * xi_t[j, mu]
                s[mu] = new
                acc += (old >> 31) - (new >> 31)
        g ^= 1 << j
        out[g] = acc * inv_sqrt_n if r1 else float(acc)


def enumerate_table_gray(instance: Instance, variant: str = "r0") -> np.ndarray:
    """All 2^n energies by single-flip Gray-code updates (sequential kernel)."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    xi_t = np.ascontiguousarray(instance.xi.T)
    out = np.empty(1 << instance.n)
    _table_gray(xi_t, variant == "r1", 1.0 / np.sqrt(instance.n), out)
    return out


def enumerate_table_blocks(instance: Instance, variant: str = "r0",
                           block_bits: int = 16) -> np.ndarray:
    """All 2^n energies via blocked matrix products (vectorised route).

    Margins are accumulated in float32, which is exact here: every partial sum
    of +-1 entries is an integer below 2^24.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n, p = instance.n, instance.p
    size = 1 << n
    bsz = min(size, 1 << block_bits)
    xi_f = instance.xi.T.astype(np.float32)
    shifts = np.arange(n, dtype=np.uint32)
    out = np.empty(size)
    for start in range(0, size, bsz):
        idx = np.arange(start, start + bsz, dtype=np.uint32)
        bits = (idx[:, None] >> shifts[None, :]) & np.uint32(1)
        sig = 1.0 - 2.0 * bits.astype(np.float32)
        s = sig @ xi_f
        if variant == "r0":
            out[start:start + bsz] = np.count_nonzero(s < 0, axis=1)
        else:
            out[start:start + bsz] = np.where(s < 0, -s, 0).sum(axis=1, dtype=np.float64)
    if variant == "r1":
        out /= np.sqrt(n)
    return out


def enumerate_table(instance: Instance, variant: str = "r0") -> np.ndarray:
    """Energy of every configuration, indexed by the documented bit encoding."""
    if BACKEND == "numba":
        return enumerate_table_gray(instance, variant)
    return enumerate_table_blocks(instance, variant)


def randomize_table(table: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Scrambled twin: same multiset of energies, assigned to random states.

    Destroys all structure linking energy to configuration geometry while
    keeping the spectrum, including the number of zero-energy states.
    """
    return rng.permutation(table)


def solutions_of(table: np.ndarray) -> np.ndarray:
    """Indices of zero-cost configurations."""
    return np.flatnonzero(table == 0.0)


# --- file formats ------------------------------------------------------------

def save_instance(path, instance: Instance) -> None:
    """Text format: first line ``N P``, then P rows of N +-1 entries."""
    with open(path, "w") as fh:
        fh.write(f"{instance.n} {instance.p}\n")
        for row in instance.xi:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected header 'N P'")
        n, p = int(header[0]), int(header[1])
        xi = np.loadtxt(fh, dtype=np.int8, ndmin=2)
    if xi.shape != (p, n):
        raise ValueError(f"{path}: expected {p} rows of {n} entries, got {xi.shape}")
    return Instance(xi)


def save_table(path, table: np.ndarray, variant: str) -> None:
    """Binary table container (npz), versioned."""
    n = int(np.log2(table.size))
    if 1 << n != table.size:
        raise ValueError("table length must be a power of two")
    np.savez_compressed(path, format_version=FORMAT_VERSION, n_spins=n,
                        variant=variant, energies=np.asarray(table, dtype=np.float64))


def load_table(path) -> tuple[np.ndarray, str]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version > FORMAT_VERSION:
            raise ValueError(f"{path}: table format {version} is newer than supported")
        return data["energies"], str(data["variant"])
