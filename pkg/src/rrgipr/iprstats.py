"""Inverse participation ratio of Laplacian eigenvectors and its ensemble statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .errors import FitError
from .spectra import EigenDecomposition, zero_mode_index

NORM_TOL = 1e-8
DEFAULT_IPR_BINS = 50
DEFAULT_IPR_RANGE = (1.0, 6.0)
DEFAULT_SUPPORT_TOL = 1e-6


def ipr(x) -> float:
    """n * sum(x_i**4) for a unit vector ``x``."""
    x = np.asarray(x, dtype=float)
    norm = math.sqrt(float(x @ x))
    if abs(norm - 1.0) >= NORM_TOL:
        raise ValueError(f"ipr needs a unit vector, got norm {norm}")
    return len(x) * float(np.sum(x**4))


def participation_ratio(x) -> float:
    x = np.asarray(x, dtype=float)
    sq = x * x
    mu1 = float(sq.sum())
    if mu1 == 0.0:
        raise ValueError("participation ratio of the zero vector is undefined")
    mu2 = float((sq * sq).sum())
    return mu1 * mu1 / (len(x) * mu2)


@dataclass(frozen=True)
class GraphIprSummary:
    """Per-graph IPR statistics over the n - 1 non-constant modes."""

    n: int
    z: int | None
    mean_ipr: float
    variance: float
    max_ipr: float
    mode_iprs: np.ndarray
    eigenvalues: np.ndarray = field(default_factory=lambda: np.empty(0))


def graph_ipr_summary(d: EigenDecomposition, z: int | None = None) -> GraphIprSummary:
    n = d.n
    keep = np.delete(np.arange(n), zero_mode_index(d))
    vecs = d.eigenvectors[:, keep]
    values = n * np.sum(vecs**4, axis=0)
    mean = float(values.mean())
    var = float(np.mean(values * values) - mean * mean)
    return GraphIprSummary(
        n=n,
        z=d.z if z is None else z,
        mean_ipr=mean,
        variance=max(var, 0.0),
        max_ipr=float(values.max()),
        mode_iprs=values,
        eigenvalues=np.asarray(d.eigenvalues)[keep],
    )


@dataclass(frozen=True)
class EnsembleIprStats:
    n: int
    z: int | None
    graph_count: int
    mean_ipr: float
    std_ipr: float
    mean_var: float
    std_var: float
    mu1: float
    mu2: float
    delta1: float
    delta2: float


def _check_homogeneous(summaries):
    if not summaries:
        raise ValueError("no graph summaries given")
    key = (summaries[0].n, summaries[0].z)
    if any((s.n, s.z) != key for s in summaries):
        raise ValueError("summaries mix different (n, z)")


def ensemble_stats(summaries, mu1, mu2) -> EnsembleIprStats:
    """Graph averages and normalised residuals against the sphere moments.

    delta1 = 1 - <mean IPR>/mu1, delta2 = 1 - <per-graph variance>/mu2.
    Dispersion is the sample standard deviation across graphs (0 for one graph).
    delta2 is NaN when mu2 == 0.
    """
    summaries = list(summaries)
    _check_homogeneous(summaries)
    means = np.array([s.mean_ipr for s in summaries])
    variances = np.array([s.variance for s in summaries])
    ddof = 1 if len(summaries) > 1 else 0
    mean_ipr = float(means.mean())
    mean_var = float(variances.mean())
    mu1, mu2 = float(mu1), float(mu2)
    return EnsembleIprStats(
        n=summaries[0].n,
        z=summaries[0].z,
        graph_count=len(summaries),
        mean_ipr=mean_ipr,
        std_ipr=float(means.std(ddof=ddof)),
        mean_var=mean_var,
        std_var=float(variances.std(ddof=ddof)),
        mu1=mu1,
        mu2=mu2,
        delta1=1.0 - mean_ipr / mu1,
        delta2=1.0 - mean_var / mu2 if mu2 != 0.0 else float("nan"),
    )


# --------------------------------------------------------------------------
# histograms and fits
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IprHistogram:
    edges: np.ndarray
    masses: np.ndarray
    graph_count: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def density(self) -> np.ndarray:
        return self.masses / self.widths


def ipr_histogram(summaries, bins: int = DEFAULT_IPR_BINS,
                  range: tuple[float, float] = DEFAULT_IPR_RANGE) -> IprHistogram:
    """Normalise each graph's IPR histogram, then average over graphs.

    Each graph is normalised by its full mode count n - 1, so values outside
    ``range`` lower that graph's in-range mass instead of being redistributed
    across the other graphs as a pooled histogram would.
    """
    summaries = list(summaries)
    _check_homogeneous(summaries)
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    lo, hi = range
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"invalid histogram range {range}")
    edges = np.linspace(lo, hi, bins + 1)
    total = np.zeros(bins)
    for s in summaries:
        counts, _ = np.histogram(s.mode_iprs, bins=edges)
        total += counts / len(s.mode_iprs)
    return IprHistogram(edges, total / len(summaries), len(summaries))


def histogram_skewness(h: IprHistogram) -> float:
    """Standardised third moment of the binned distribution."""
    w = h.masses / h.masses.sum()
    x = h.centers
    mean = float(w @ x)
    var = float(w @ (x - mean) ** 2)
    return float(w @ (x - mean) ** 3) / var**1.5


@dataclass(frozen=True)
class GaussianFit:
    mean: float
    sigma: float
    amplitude: float
    residual: float

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((x - self.mean) / self.sigma) ** 2) / (
            self.sigma * math.sqrt(2.0 * math.pi)
        )


def _gauss(x, amp, mean, sigma):
    return amp * np.exp(-0.5 * ((x - mean) / sigma) ** 2) / (abs(sigma) * math.sqrt(2.0 * math.pi))


def gaussian_fit(h: IprHistogram) -> GaussianFit:
    """Nonlinear least squares of a scaled normal density to the bin densities."""
    heights = h.density
    x = h.centers
    if np.count_nonzero(h.masses) < 3:
        raise FitError("gaussian fit needs at least three nonzero bins")
    w = h.masses / h.masses.sum()
    mean0 = float(w @ x)
    sigma0 = math.sqrt(max(float(w @ (x - mean0) ** 2), float(h.widths.min()) ** 2))
    try:
        popt, _ = curve_fit(_gauss, x, heights, p0=(h.masses.sum(), mean0, sigma0), maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"gaussian fit failed: {exc}") from exc
    amp, mean, sigma = (float(p) for p in popt)
    sigma = abs(sigma)
    if not sigma > 0.0:
        raise FitError("gaussian fit collapsed to zero width")
    resid = float(np.sum((heights - _gauss(x, amp, mean, sigma)) ** 2))
    return GaussianFit(mean=mean, sigma=sigma, amplitude=amp, residual=resid)


# --------------------------------------------------------------------------
# localised modes
# --------------------------------------------------------------------------


def localized_candidate_count(n: int, m: int) -> int:
    """Number of vectors with m entries +1/sqrt(2m), m entries -1/sqrt(2m), rest zero."""
    if not 1 <= m <= n // 2:
        raise ValueError(f"m must lie in [1, {n // 2}], got {m}")
    return math.factorial(n) // (math.factorial(m) ** 2 * math.factorial(n - 2 * m))


@dataclass(frozen=True)
class VectorSupport:
    support_size: int
    equal_magnitude: bool
    balanced: bool
    ipr: float


def classify_vector(x, support_tol: float = DEFAULT_SUPPORT_TOL) -> VectorSupport:
    x = np.asarray(x, dtype=float)
    on = np.abs(x) > support_tol
    k = int(on.sum())
    mags = np.abs(x[on])
    equal = k > 0 and bool(np.all(np.abs(mags - 1.0 / math.sqrt(k)) <= support_tol))
    balanced = k > 0 and int(np.sum(x[on] > 0)) * 2 == k
    return VectorSupport(k, equal, balanced, ipr(x))


@dataclass(frozen=True)
class LocalizedMode:
    mode_index: int
    ipr: float
    support_size: int
    balanced: bool


@dataclass
class LocalizedModeReport:
    n: int
    modes: list[LocalizedMode]
    candidate_counts: dict[int, int]
    support_tol: float
    ipr_tol: float

    @property
    def max_flagged_ipr(self) -> float:
        return max((m.ipr for m in self.modes), default=0.0)


def detect_localized(d: EigenDecomposition, support_tol: float = DEFAULT_SUPPORT_TOL,
                     ipr_tol: float = 1e-8) -> LocalizedModeReport:
    """Find eigenvectors spread with equal magnitude over k sites.

    A mode is reported when its |x_i| > support_tol components all equal
    1/sqrt(k) within ``support_tol``, its signs balance, and its IPR is within
    ``ipr_tol`` of n/k.  The candidate table maps each detected k to the number
    of such vectors orthogonal to the constant mode.
    """
    n = d.n
    zero = zero_mode_index(d)
    modes = []
    for idx in range(n):
        if idx == zero:
            continue
        info = classify_vector(d.eigenvectors[:, idx], support_tol)
        k = info.support_size
        if info.equal_magnitude and info.balanced and abs(info.ipr - n / k) <= ipr_tol:
            modes.append(LocalizedMode(idx, info.ipr, k, info.balanced))
    counts = {m.support_size: localized_candidate_count(n, m.support_size // 2) for m in modes}
    return LocalizedModeReport(n, modes, dict(sorted(counts.items())), support_tol, ipr_tol)
