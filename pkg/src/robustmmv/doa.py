"""Source localization with a half-wavelength uniform linear array.

Angles are in degrees at every public entry point; the conversion to radians
happens only inside `steering_vector`.
"""

from dataclasses import dataclass, field

import numpy as np

from .mmv import as_support

NOISE_KINDS = ("gaussian", "igcg", "none")


def steering_vector(theta_deg, n):
    """ULA response ``exp(-1j*pi*k*sin(theta))``, ``k = 0..n-1``."""
    if not -90 <= theta_deg <= 90:
        raise ValueError(f"angle must lie in [-90, 90], got {theta_deg}")
    return np.exp(-1j * np.pi * np.arange(n) * np.sin(np.deg2rad(theta_deg)))


@dataclass(frozen=True)
class SteeringGrid:
    """Candidate arrival angles (degrees) for an `n`-sensor ULA."""

    n: int
    angles: np.ndarray = field(compare=False)

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        object.__setattr__(self, "angles", angles)
        if self.n < 1:
            raise ValueError("sensor count must be >= 1")
        if angles.ndim != 1 or angles.size < 2:
            raise ValueError("grid needs at least two angles")
        if np.any(np.diff(angles) <= 0):
            raise ValueError("grid angles must be strictly increasing")
        if angles[0] < -90 or angles[-1] > 90:
            raise ValueError("grid angles must lie in [-90, 90]")

    @classmethod
    def uniform(cls, n, start=-90.0, step=2.0, stop=90.0):
        count = int(round((stop - start) / step)) + 1
        return cls(n, start + step * np.arange(count))

    @property
    def p(self):
        return self.angles.size

    def index_of(self, theta_deg, atol=1e-9):
        hits = np.flatnonzero(np.abs(self.angles - theta_deg) <= atol)
        if hits.size == 0:
            raise ValueError(f"angle {theta_deg} is not on the grid")
        return int(hits[0])


def steering_matrix(grid):
    """Dictionary whose column j is the steering vector of ``grid.angles[j]``."""
    k = np.arange(grid.n)[:, None]
    return np.exp(-1j * np.pi * k * np.sin(np.deg2rad(grid.angles))[None, :])


def complex_normal(shape, rng, variance=1.0):
    """Circular complex Gaussian draws with ``E|z|^2 = variance``."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_inverse_gaussian(mean, shape_param, size, rng):
    """Inverse Gaussian variates via the Michael-Schucany-Haas transformation."""
    mu, lam = mean, shape_param
    y = rng.standard_normal(size) ** 2
    # cancellation-free form of mu + mu^2 y/(2 lam) - mu/(2 lam) sqrt(4 mu lam y + mu^2 y^2)
    x = mu - 2 * mu * mu * y / (mu * y + np.sqrt(4 * mu * lam * y + (mu * y) ** 2))
    u = rng.uniform(size=size)
    return np.where(u <= mu / (mu + x), x, mu * mu / x)


def sample_igcg_noise(n, q, lam, rng):
    """Compound Gaussian noise with inverse Gaussian texture (mean 1, shape `lam`).

    Entries are ``sqrt(tau) * z`` with ``z ~ CN(0, 1)``, so ``E|e|^2 = 1``.
    Small `lam` gives heavy tails.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    tau = sample_inverse_gaussian(1.0, lam, (n, q), rng)
    return np.sqrt(tau) * complex_normal((n, q), rng)


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise: ``"gaussian"``, ``"igcg"`` (needs `lam`) or ``"none"``.

    `variance` is the nominal per-entry noise power and serves as the SNR
    reference even for ``"none"``.
    """

    kind: str = "gaussian"
    lam: float = None
    variance: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.kind == "igcg" and not (self.lam is not None and self.lam > 0):
            raise ValueError("igcg noise needs a positive lambda")
        if not self.variance > 0:
            raise ValueError("noise variance must be positive")

    def sample(self, n, q, rng):
        if self.kind == "none":
            return np.zeros((n, q), dtype=np.complex128)
        if self.kind == "gaussian":
            return complex_normal((n, q), rng, self.variance)
        return np.sqrt(self.variance) * sample_igcg_noise(n, q, self.lam, rng)


@dataclass(frozen=True)
class Scenario:
    grid: SteeringGrid
    true_doa_indices: np.ndarray = field(compare=False)
    snapshots: int = 50
    snr_db: float = -10.0
    noise: NoiseModel = NoiseModel()

    def __post_init__(self):
        idx = as_support(self.true_doa_indices, self.grid.p)
        object.__setattr__(self, "true_doa_indices", idx)
        if self.snapshots < 1:
            raise ValueError("snapshots must be >= 1")

    @property
    def K(self):
        return self.true_doa_indices.size

    @property
    def source_power(self):
        """Per-source power ``10**(snr_db/10) * noise variance``."""
        return 10 ** (self.snr_db / 10) * self.noise.variance


def simulate_snapshots(scenario, rng, A=None):
    """Draw one measurement matrix for `scenario`.

    Returns ``(Y, S_true)`` with ``Y = A S_true + E``.  Sources are drawn
    before noise, so the source draws do not depend on the noise model.
    """
    grid = scenario.grid
    if A is None:
        A = steering_matrix(grid)
    idx = scenario.true_doa_indices
    S = np.zeros((grid.p, scenario.snapshots), dtype=np.complex128)
    S[idx] = complex_normal((idx.size, scenario.snapshots), rng, scenario.source_power)
    E = scenario.noise.sample(grid.n, scenario.snapshots, rng)
    return A @ S + E, S


def find_k_peaks(values, K):
    """Indices of the `K` largest local maxima of `values`, increasing.

    A maximal run of equal values is a peak when both neighbours of the run
    are strictly smaller (array ends count as smaller); it is reported at its
    first index.  If fewer than `K` peaks exist the remaining slots are filled
    with the largest non-peak values.  Ties go to the lowest index.
    """
    v = np.asarray(values, dtype=float)
    m = v.size
    if not 0 <= K <= m:
        raise ValueError(f"K must lie in [0, {m}], got {K}")
    peaks = []
    i = 0
    while i < m:
        j = i
        while j + 1 < m and v[j + 1] == v[i]:
            j += 1
        if (i == 0 or v[i - 1] < v[i]) and (j == m - 1 or v[j + 1] < v[j]):
            peaks.append(i)
        i = j + 1
    peaks = np.asarray(peaks, dtype=np.int64)
    chosen = peaks[np.argsort(-v[peaks], kind="stable")][:K]
    if chosen.size < K:
        rest = np.setdiff1d(np.arange(m), chosen)
        extra = rest[np.argsort(-v[rest], kind="stable")][:K - chosen.size]
        chosen = np.concatenate([chosen, extra])
    return np.sort(chosen)


def sample_covariance(Y):
    Y = np.asarray(Y)
    return Y @ Y.conj().T / Y.shape[1]


def music_spectrum(Y, grid, K, A=None):
    """MUSIC pseudospectrum ``1 / ||En^H a(theta)||^2`` on the grid."""
    Y = np.asarray(Y)
    n = Y.shape[0]
    if not 0 <= K < n:
        raise ValueError(f"MUSIC needs 0 <= K < n={n}, got K={K}")
    if A is None:
        A = steering_matrix(grid)
    _, V = np.linalg.eigh(sample_covariance(Y))
    En = V[:, :n - K]
    proj = En.conj().T @ A
    denom = np.sum(proj.real ** 2 + proj.imag ** 2, axis=0)
    with np.errstate(divide="ignore"):
        return 1.0 / denom


def music_estimate(Y, grid, K, A=None):
    """Grid indices of the `K` largest MUSIC pseudospectrum peaks."""
    return find_k_peaks(music_spectrum(Y, grid, K, A), K)


def exact_recovery(estimated, truth):
    return bool(np.array_equal(np.unique(np.asarray(estimated, dtype=np.int64)),
                               np.unique(np.asarray(truth, dtype=np.int64))))
