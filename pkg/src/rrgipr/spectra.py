"""Graph Laplacian, full diagonalisation and the Kesten-McKay comparison."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import integrate

from .errors import ConvergenceError, DisconnectedGraphError
from .graphgen import RegularGraph

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 50


@dataclass(frozen=True)
class LaplacianMatrix:
    n: int
    z: int
    entries: np.ndarray


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues with eigenvectors stored as matrix columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    z: int | None = None
    method: str = "ql"

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class SpectralDensityHistogram:
    edges: np.ndarray
    masses: np.ndarray
    graph_count: int
    zero_mode_mass: float

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def laplacian(g: RegularGraph) -> LaplacianMatrix:
    lap = g.z * np.eye(g.n) - g.adjacency_matrix()
    return LaplacianMatrix(g.n, g.z, lap)


# --------------------------------------------------------------------------
# eigensolvers
# --------------------------------------------------------------------------


def householder_tridiagonalize(a: np.ndarray):
    """Reduce symmetric ``a`` to tridiagonal form, ``a = Q T Q^T``.

    Returns ``(diag, offdiag, Q)``.
    """
    t = np.array(a, dtype=float, copy=True)
    n = t.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = t[k + 1 :, k]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            continue
        alpha = -math.copysign(norm, x[0])
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm == 0.0:
            continue
        v /= vnorm
        # apply H = I - 2 v v^T from both sides on the trailing block
        t[k + 1 :, k:] -= 2.0 * np.outer(v, v @ t[k + 1 :, k:])
        t[:, k + 1 :] -= 2.0 * np.outer(t[:, k + 1 :] @ v, v)
        q[:, k + 1 :] -= 2.0 * np.outer(q[:, k + 1 :] @ v, v)
    return np.diag(t).copy(), np.diag(t, -1).copy(), q


def implicit_ql(diag, offdiag, z, max_sweeps=MAX_SWEEPS):
    """Implicit-shift QL on a symmetric tridiagonal matrix.

    ``z`` holds the accumulated transform on entry and the eigenvectors
    (columns) on exit.  Eigenvalues are returned unsorted.
    """
    d = np.array(diag, dtype=float)
    n = len(d)
    e = np.zeros(n)
    e[: n - 1] = offdiag
    z = np.array(z, dtype=float)
    eps = np.finfo(float).eps
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= eps * dd:
                    break
                m += 1
            if m == l:
                break
            sweeps += 1
            if sweeps > max_sweeps:
                raise ConvergenceError(f"QL iteration did not converge for eigenvalue {l}", index=l)
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                col = z[:, i + 1].copy()
                z[:, i + 1] = s * z[:, i] + c * col
                z[:, i] = c * z[:, i] - s * col
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d, z


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first component of largest magnitude made positive
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eigendecompose(lap: LaplacianMatrix | np.ndarray, tol: float = DEFAULT_TOL,
                   method: str = "ql") -> EigenDecomposition:
    """Full symmetric eigendecomposition.

    ``method``:

    * ``"ql"`` (default): LAPACK ``dsyev`` -- Householder tridiagonalisation
      followed by implicit-shift QL/QR with eigenvector accumulation.
    * ``"native"``: the same algorithm in numpy (``householder_tridiagonalize``
      then ``implicit_ql``); slow, used as an independent cross-check.
    * ``"dc"``: LAPACK ``dsyevd`` (divide and conquer), much faster for
      n >= 1000 and equal to ``"ql"`` up to rounding and degenerate bases.

    Within a degenerate eigenspace the returned basis is whatever the solver
    produces.  Every eigenvector's first largest-magnitude component is made
    positive.
    """
    if isinstance(lap, LaplacianMatrix):
        a, z = lap.entries, lap.z
    else:
        a, z = np.asarray(lap, dtype=float), None
    if not np.allclose(a, a.T, rtol=0.0, atol=tol * max(1.0, np.abs(a).max())):
        raise ValueError("matrix is not symmetric")
    if method == "native":
        diag, off, q = householder_tridiagonalize(a)
        w, v = implicit_ql(diag, off, q)
        order = np.argsort(w, kind="stable")
        w, v = w[order], v[:, order]
    elif method in ("ql", "dc"):
        driver = "ev" if method == "ql" else "evd"
        try:
            w, v = scipy.linalg.eigh(a, driver=driver, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"LAPACK eigensolver failed: {exc}") from exc
    else:
        raise ValueError(f"unknown eigensolver method {method!r}")
    return EigenDecomposition(np.asarray(w), _fix_signs(np.asarray(v)), z=z, method=method)


def zero_mode_index(d: EigenDecomposition, n: int | None = None, tol: float = 1e-8) -> int:
    """Index of the single zero eigenvalue (the constant mode).

    ``tol`` is absolute on the eigenvalue.  Raises DisconnectedGraphError when
    the kernel is not one-dimensional.
    """
    n = d.n if n is None else n
    small = np.flatnonzero(np.abs(d.eigenvalues) < tol)
    if len(small) != 1:
        raise DisconnectedGraphError(
            f"expected exactly one zero eigenvalue, found {len(small)} below {tol}"
        )
    idx = int(small[0])
    overlap = abs(d.eigenvectors[:, idx].sum()) / math.sqrt(n)
    if overlap < 1.0 - 1e-8:
        raise ConvergenceError(f"zero mode overlaps the constant vector by only {overlap}", index=idx)
    return idx


# --------------------------------------------------------------------------
# Kesten-McKay law
# --------------------------------------------------------------------------


def kesten_mckay_band(z: int) -> tuple[float, float]:
    half = 2.0 * math.sqrt(z - 1)
    return z - half, z + half


def kesten_mckay_density(eps, z: int):
    """Continuum part of the Kesten-McKay density for the Laplacian z I - A.

    Vectorised over ``eps``; zero outside the band.  The weight 1/n of the
    zero mode is not included.
    """
    if z < 2:
        raise ValueError("Kesten-McKay density needs z >= 2")
    x = np.asarray(eps, dtype=float) - z
    inside = 4.0 * (z - 1) - x * x
    # band edges computed in floating point land a few ulps inside
    inside = np.where(inside > 64 * np.finfo(float).eps * 4.0 * (z - 1), inside, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = z / (2.0 * math.pi) * np.sqrt(inside) / (z * z - x * x)
    rho = np.where(inside > 0.0, rho, 0.0)
    return float(rho) if np.ndim(rho) == 0 else rho


def kesten_mckay_bin_masses(edges, z: int) -> np.ndarray:
    """Integral of the continuum density over each histogram bin."""
    lo, hi = kesten_mckay_band(z)
    masses = []
    for a, b in zip(edges[:-1], edges[1:]):
        a, b = max(a, lo), min(b, hi)
        if b <= a:
            masses.append(0.0)
            continue
        val, _ = integrate.quad(lambda e: kesten_mckay_density(e, z), a, b, limit=200)
        masses.append(val)
    return np.array(masses)


def eigenvalue_histogram(decomps, bins: int = 50, range: tuple[float, float] | None = None,
                         exclude_zero_mode: bool = True, tol: float = 1e-8
                         ) -> SpectralDensityHistogram:
    """Graph-averaged eigenvalue histogram.

    Each graph's histogram is normalised by its number of counted modes
    (``n - 1`` when the zero mode is excluded) before averaging.  Eigenvalues
    outside ``range`` are dropped.  ``range`` defaults to the Kesten-McKay
    band, which needs ``z`` recorded on the decompositions.
    """
    decomps = list(decomps)
    if not decomps:
        raise ValueError("no decompositions to histogram")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    n = decomps[0].n
    if any(d.n != n for d in decomps):
        raise ValueError("decompositions have different sizes")
    if range is None:
        z = decomps[0].z
        if z is None:
            raise ValueError("range is required when the degree is unknown")
        range = kesten_mckay_band(z)
    edges = np.linspace(range[0], range[1], bins + 1)
    total = np.zeros(bins)
    for d in decomps:
        vals = np.asarray(d.eigenvalues)
        if exclude_zero_mode:
            vals = np.delete(vals, zero_mode_index(d, tol=tol))
        counts, _ = np.histogram(vals, bins=edges)
        total += counts / len(vals)
        _log_band_excursions(vals, d.z, n)
    return SpectralDensityHistogram(edges, total / len(decomps), len(decomps), 1.0 / n)


def _log_band_excursions(vals, z, n):
    if z is None or z < 2:
        return
    lo, hi = kesten_mckay_band(z)
    nonzero = vals[np.abs(vals) > 1e-8]
    if len(nonzero):
        excess = max(lo - nonzero.min(), nonzero.max() - hi, 0.0)
        if excess > 0.0:
            log.debug("n=%d z=%d: nonzero spectrum leaves the band by %.4g", n, z, excess)
