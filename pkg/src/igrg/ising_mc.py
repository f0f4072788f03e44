"""Metropolis Monte Carlo for the speed density of the swap flow on the 2D Ising model.

For a diagonal (classical) state ``p(s) ~ exp(K(s))`` with
``K(s) = beta * sum_<ij> s_i s_j`` the swap generator's tangent field is a
function on configurations,

    B(s) = sum_<ij> [p(s^ij) / p(s) - 1] = sum_<ij> [exp(dK_ij(s)) - 1],

where ``s^ij`` exchanges the neighbouring spins ``i`` and ``j``. Swapping is a
bijection on configurations, so ``E[B] = 0`` exactly, and on a periodic
lattice the speed density is ``sum_x Cov(b_0, b_x) = Var(B) / V``. Each site
owns its right and down bonds for the per-site decomposition ``b_x``.

Chains start from the all-up configuration. Random numbers come from a
caller-owned :class:`numpy.random.Generator`, drawn in blocks, so runs are
bit-reproducible for a given seed.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

TAU_CRITICAL = 2.0 / np.log(1.0 + np.sqrt(2.0))
_BLOCK_SWEEPS = 500


@dataclass(frozen=True)
class SpinConfiguration:
    """Periodic array of +-1 spins (1D ring or ``L x L`` square lattice)."""

    spins: np.ndarray

    def __post_init__(self):
        s = np.array(self.spins, dtype=np.int8)
        if s.ndim not in (1, 2) or (s.ndim == 2 and s.shape[0] != s.shape[1]):
            raise ValueError(f"spins must be a ring or a square lattice, got shape {s.shape}")
        if not np.all((s == 1) | (s == -1)):
            raise ValueError("every spin must be +1 or -1")
        s.flags.writeable = False
        object.__setattr__(self, "spins", s)

    @property
    def L(self) -> int:
        return self.spins.shape[0]

    @classmethod
    def aligned(cls, L: int, value: int = 1):
        return cls(np.full((L, L), value, dtype=np.int8))

    @classmethod
    def random(cls, L: int, rng):
        return cls(rng.choice(np.array([-1, 1], dtype=np.int8), size=(L, L)))


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_bins: int
    bin_size: int
    seed: int | None = None

    def __post_init__(self):
        if self.std_error < 0 or self.n_bins < 2:
            raise ValueError("MCEstimate needs std_error >= 0 and at least two bins")


# --- kernels -------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _neighbor_sum(s, i, j):
    L = s.shape[0]
    return s[(i + 1) % L, j] + s[(i - 1) % L, j] + s[i, (j + 1) % L] + s[i, (j - 1) % L]


@numba.njit(cache=True, nogil=True)
def _metropolis(s, beta, sites, uniforms):
    """Single-spin-flip updates at the given sites; returns the acceptance count."""
    L = s.shape[0]
    accepted = 0
    for k in range(sites.shape[0]):
        i = sites[k] // L
        j = sites[k] % L
        dk = -2.0 * beta * s[i, j] * _neighbor_sum(s, i, j)
        if dk >= 0.0 or uniforms[k] < np.exp(dk):
            s[i, j] = -s[i, j]
            accepted += 1
    return accepted


@numba.njit(cache=True, nogil=True)
def _swap_ratio(si, sj, hi, hj, beta):
    # exp(dK) - 1 for exchanging neighbours i, j whose neighbour sums are hi, hj
    if si == sj:
        return 0.0
    return np.exp(beta * (si - sj) * ((hj - si) - (hi - sj))) - 1.0


@numba.njit(cache=True, nogil=True)
def _site_terms_2d(s, beta, out):
    L = s.shape[0]
    for i in range(L):
        for j in range(L):
            hi = _neighbor_sum(s, i, j)
            si = s[i, j]
            ir = (i + 1) % L
            jd = (j + 1) % L
            out[i, j] = (_swap_ratio(si, s[ir, j], hi, _neighbor_sum(s, ir, j), beta)
                         + _swap_ratio(si, s[i, jd], hi, _neighbor_sum(s, i, jd), beta))


@numba.njit(cache=True, nogil=True)
def _swap_total_2d(s, beta):
    L = s.shape[0]
    total = 0.0
    for i in range(L):
        for j in range(L):
            hi = _neighbor_sum(s, i, j)
            si = s[i, j]
            ir = (i + 1) % L
            jd = (j + 1) % L
            total += _swap_ratio(si, s[ir, j], hi, _neighbor_sum(s, ir, j), beta)
            total += _swap_ratio(si, s[i, jd], hi, _neighbor_sum(s, i, jd), beta)
    return total


@numba.njit(cache=True, nogil=True)
def _energy_bonds(s):
    L = s.shape[0]
    e = 0
    for i in range(L):
        for j in range(L):
            e += s[i, j] * (s[(i + 1) % L, j] + s[i, (j + 1) % L])
    return e


@numba.njit(cache=True, nogil=True)
def _magnetization(s):
    m = 0
    for i in range(s.shape[0]):
        for j in range(s.shape[1]):
            m += s[i, j]
    return m


@numba.njit(cache=True, nogil=True)
def _state_index(s):
    L = s.shape[0]
    idx = 0
    for i in range(L):
        for j in range(L):
            idx = 2 * idx + (1 if s[i, j] < 0 else 0)
    return idx


@numba.njit(cache=True, nogil=True)
def _run_block(s, beta, sites, uniforms, n_sweeps, measure, b_out, e_out, m_out,
               hist, offset):
    V = s.shape[0] * s.shape[1]
    for sw in range(n_sweeps):
        _metropolis(s, beta, sites[sw * V:(sw + 1) * V], uniforms[sw * V:(sw + 1) * V])
        if measure:
            b_out[offset + sw] = _swap_total_2d(s, beta)
            e_out[offset + sw] = _energy_bonds(s)
            m_out[offset + sw] = abs(_magnetization(s)) / V
            if hist.shape[0] > 0:
                hist[_state_index(s)] += 1


# --- public API ----------------------------------------------------------------------


def metropolis_sweep(config: SpinConfiguration, beta_coupling: float, rng) -> SpinConfiguration:
    """One sweep of ``L^2`` single-flip proposals at uniformly random sites.

    A flip is accepted with probability ``min(1, exp(dK))``.
    """
    s = np.array(config.spins, dtype=np.int8)
    V = s.size
    sites = rng.integers(0, V, size=V)
    uniforms = rng.random(V)
    _metropolis(s, float(beta_coupling), sites, uniforms)
    return SpinConfiguration(s)


def _swap_total_1d(s, beta):
    n = s.shape[0]
    total = 0.0
    for i in range(n):
        j = (i + 1) % n
        hi = s[i - 1] + s[j]
        hj = s[i] + s[(j + 1) % n]
        total += float(_swap_ratio(int(s[i]), int(s[j]), int(hi), int(hj), beta))
    return total


def swap_beta_observable(config: SpinConfiguration, beta_coupling: float):
    """Return ``(B(s), True)``; the flag records that a per-site density is defined."""
    s = config.spins
    if s.ndim == 1:
        if s.shape[0] < 3:
            raise ValueError("rings need at least three sites")
        return _swap_total_1d(s, float(beta_coupling)), True
    if s.shape[0] < 3:
        raise ValueError("lattices need L >= 3 so that neighbours are distinct")
    return float(_swap_total_2d(s, float(beta_coupling))), True


def swap_site_terms(config: SpinConfiguration, beta_coupling: float) -> np.ndarray:
    """Per-site terms ``b_x`` (right and down bonds of each site), summing to ``B``."""
    out = np.zeros(config.spins.shape)
    _site_terms_2d(config.spins, float(beta_coupling), out)
    return out


@dataclass(frozen=True)
class ChainRecord:
    """Per-sweep measurements after thermalisation."""

    swap_total: np.ndarray
    bond_sum: np.ndarray
    abs_magnetization: np.ndarray
    histogram: np.ndarray | None = None


def run_chain(L: int, beta_coupling: float, sweeps: int, therm_sweeps: int = 0, seed=0,
              initial: SpinConfiguration | None = None, histogram: bool = False) -> ChainRecord:
    """Metropolis chain on an ``L x L`` periodic lattice, measuring after every sweep."""
    if L < 3:
        raise ValueError("L must be at least 3")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s = np.array((initial or SpinConfiguration.aligned(L)).spins, dtype=np.int8)
    V = L * L
    b = np.zeros(sweeps)
    e = np.zeros(sweeps)
    m = np.zeros(sweeps)
    hist = np.zeros(2 ** V if histogram else 0, dtype=np.int64)
    if histogram and V > 20:
        raise ValueError("state histograms are limited to 20 sites")
    beta_coupling = float(beta_coupling)
    dummy = np.zeros(0)
    done = 0
    for total, measure in ((therm_sweeps, False), (sweeps, True)):
        done = 0
        while done < total:
            n = min(_BLOCK_SWEEPS, total - done)
            sites = rng.integers(0, V, size=n * V)
            uniforms = rng.random(n * V)
            if measure:
                _run_block(s, beta_coupling, sites, uniforms, n, True, b, e, m, hist, done)
            else:
                _run_block(s, beta_coupling, sites, uniforms, n, False, dummy, dummy, dummy,
                           hist[:0], 0)
            done += n
    return ChainRecord(b, e, m, hist if histogram else None)


def _bins(series, n_bins):
    series = np.asarray(series, dtype=float)
    bin_size = len(series) // n_bins
    if bin_size < 1:
        raise ValueError("fewer samples than bins")
    return series[: bin_size * n_bins].reshape(n_bins, bin_size), bin_size


def binned_mean(series, n_bins: int, seed=None) -> MCEstimate:
    """Mean with the standard error of the bin averages."""
    bins, bin_size = _bins(series, n_bins)
    means = bins.mean(axis=1)
    return MCEstimate(float(means.mean()), float(means.std(ddof=1) / np.sqrt(n_bins)),
                      n_bins, bin_size, seed)


def jackknife_variance(series, n_bins: int, scale: float = 1.0, seed=None) -> MCEstimate:
    """``Var(series) * scale`` with a leave-one-bin-out jackknife error."""
    series = np.asarray(series, dtype=float)
    centred = series - series.mean()
    bins, bin_size = _bins(centred, n_bins)
    m1 = bins.mean(axis=1)
    m2 = (bins ** 2).mean(axis=1)
    full = (m2.mean() - m1.mean() ** 2) * scale
    loo1 = (m1.sum() - m1) / (n_bins - 1)
    loo2 = (m2.sum() - m2) / (n_bins - 1)
    jk = (loo2 - loo1 ** 2) * scale
    err = np.sqrt((n_bins - 1) / n_bins * np.sum((jk - jk.mean()) ** 2))
    return MCEstimate(float(full), float(err), n_bins, bin_size, seed)


def speed_density_mc(L: int, tau: float, sweeps: int = 100_000, therm_sweeps: int = 10_000,
                     n_bins: int = 50, seed: int = 0) -> MCEstimate:
    """Estimate ``Var(B) / L^2`` at temperature ``tau`` (``J = 1``)."""
    if sweeps < n_bins * 100:
        raise ValueError(f"need at least {n_bins * 100} sweeps for {n_bins} bins of >= 100")
    if tau <= 0:
        raise ValueError("temperature must be positive")
    rec = run_chain(L, 1.0 / tau, sweeps, therm_sweeps, seed)
    return jackknife_variance(rec.swap_total, n_bins, 1.0 / (L * L), seed)


def temperature_sweep(L: int, tau_grid, sweeps: int = 100_000, therm_sweeps: int = 10_000,
                      n_bins: int = 50, seed: int = 0, n_jobs: int = 1) -> list:
    """Independent chains per temperature, chain ``k`` seeded with ``seed + k``."""
    tau_grid = [float(t) for t in tau_grid]
    if not tau_grid or any(t <= 0 for t in tau_grid) or any(
            b <= a for a, b in zip(tau_grid, tau_grid[1:])):
        raise ValueError("tau grid must be nonempty, positive and ascending")

    def one(k):
        return speed_density_mc(L, tau_grid[k], sweeps, therm_sweeps, n_bins, seed + k)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            estimates = list(pool.map(one, range(len(tau_grid))))
    else:
        estimates = [one(k) for k in range(len(tau_grid))]
    return list(zip(tau_grid, estimates))


SWEEP_COLUMNS = ("tau", "f_mean", "f_stderr", "L", "sweeps", "seed")


def sweep_table(rows, L: int, sweeps: int, exact: dict | None = None) -> list:
    """Flatten ``temperature_sweep`` output into dict rows (optional exact column)."""
    table = []
    for tau, est in rows:
        row = {"tau": tau, "f_mean": est.mean, "f_stderr": est.std_error, "L": L,
               "sweeps": sweeps, "seed": est.seed}
        if exact is not None:
            row["f_exact"] = exact[tau]
        table.append(row)
    return table


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c] for c in columns])
    return buf.getvalue()


# --- exhaustive enumeration (small lattices) -----------------------------------------


def all_configurations(L: int) -> np.ndarray:
    """Every ``L x L`` configuration, ordered like the state index of the kernels."""
    V = L * L
    if V > 20:
        raise ValueError("enumeration is limited to 20 sites")
    idx = np.arange(2 ** V)
    bits = (idx[:, None] >> np.arange(V - 1, -1, -1)) & 1
    return (1 - 2 * bits).astype(np.int8).reshape(-1, L, L)


def _neighbor_sums(c):
    return (np.roll(c, 1, 1) + np.roll(c, -1, 1) + np.roll(c, 1, 2) + np.roll(c, -1, 2))


def swap_site_terms_batch(configs, beta_coupling: float) -> np.ndarray:
    """Vectorised per-site terms for a batch of configurations, shape ``(n, L, L)``."""
    c = configs.astype(np.int64)
    h = _neighbor_sums(c)
    out = np.zeros(c.shape)
    for axis in (1, 2):
        cj = np.roll(c, -1, axis)
        hj = np.roll(h, -1, axis)
        dk = beta_coupling * (c - cj) * ((hj - c) - (h - cj))
        out += np.expm1(dk)
    return out


@dataclass(frozen=True)
class ExactIsing:
    probabilities: np.ndarray
    site_terms: np.ndarray
    swap_total: np.ndarray
    bond_sum: np.ndarray

    @property
    def n_sites(self) -> int:
        return self.site_terms.shape[1] * self.site_terms.shape[2]

    def mean(self, values) -> float:
        return float(np.dot(self.probabilities, values))

    @property
    def speed_density(self) -> float:
        mu = self.mean(self.swap_total)
        return self.mean((self.swap_total - mu) ** 2) / self.n_sites


def enumerate_exact(L: int, beta_coupling: float) -> ExactIsing:
    configs = all_configurations(L)
    c = configs.astype(np.int64)
    bonds = np.sum(c * (np.roll(c, -1, 1) + np.roll(c, -1, 2)), axis=(1, 2))
    logw = beta_coupling * bonds
    w = np.exp(logw - logw.max())
    p = w / w.sum()
    terms = swap_site_terms_batch(configs, beta_coupling)
    return ExactIsing(p, terms, terms.sum(axis=(1, 2)), bonds.astype(float))


def exact_speed_density(L: int, tau: float) -> float:
    return enumerate_exact(L, 1.0 / tau).speed_density
