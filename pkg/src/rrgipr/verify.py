"""Pass/fail report over the sphere identities for a list of sizes."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .sphere import (
    Q_SUM_NAMES,
    expansion_moment_exact,
    gamma_half_ratio,
    gamma_half_ratio_closed_form,
    ipr2_sphere_average_exact,
    mc_ipr_moments,
    mu1_exact,
    mu2_exact,
    q_closed_form_sums,
    q_direct_sums,
    q_matrix,
    q_matrix_rotation,
    q_power_coeffs,
    sphere_average,
)

EXPANSION_MAX_N = 8
Q_MATRIX_MAX_N = 200
DEFAULT_MC_SAMPLES = 200_000


@dataclass
class CheckResult:
    n: int
    name: str
    expected: str
    observed: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, n, name, expected, observed, passed, detail=""):
        self.checks.append(CheckResult(n, name, str(expected), str(observed), bool(passed), detail))

    def to_text(self) -> str:
        lines = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            extra = f"  ({c.detail})" if c.detail else ""
            lines.append(f"{tag}  n={c.n:<4d} {c.name:<28s} expected={c.expected} observed={c.observed}{extra}")
        lines.append(f"{len(self.checks) - len(self.failures)}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        body = {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}
        return json.dumps(body, indent=2) + "\n"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _moment_checks(rep, n, rng, mc_samples):
    mu1, ipr2, mu2 = mu1_exact(n), ipr2_sphere_average_exact(n), mu2_exact(n)
    rep.add(n, "ipr2_minus_mu1_squared", mu2, ipr2 - mu1 * mu1, ipr2 - mu1 * mu1 == mu2)
    for k in (2, 4):
        a, b = gamma_half_ratio(n, k), gamma_half_ratio_closed_form(n, k)
        rep.add(n, f"gamma_ratio_k{k}", b, a, a == b)
    if n <= EXPANSION_MAX_N:
        e1 = expansion_moment_exact(n, 1)
        rep.add(n, "expansion_mu1", mu1, e1, e1 == mu1)
        e2 = expansion_moment_exact(n, 2)
        rep.add(n, "expansion_ipr2", ipr2, e2, e2 == ipr2)
    mc = mc_ipr_moments(n, mc_samples, rng)
    diff = abs(mc.mean - float(mu1))
    ok = diff <= 3.0 * mc.mean_se if mc.mean_se > 0 else diff < 1e-12
    rep.add(n, "mc_mean", f"{float(mu1):.10g}", f"{mc.mean:.10g}", ok, f"se={mc.mean_se:.3g}")
    if mu2 == 0:
        rep.add(n, "mc_variance", 0, f"{mc.variance:.3g}", mc.variance < 1e-12)
    else:
        diff = abs(mc.variance - float(mu2))
        rep.add(n, "mc_variance", f"{float(mu2):.10g}", f"{mc.variance:.10g}",
                diff <= 3.0 * mc.variance_se, f"se={mc.variance_se:.3g}")


def _q_checks(rep, n):
    q = q_matrix(n)
    orth = float(np.abs(q @ q.T - np.eye(n)).max())
    rep.add(n, "q_orthogonality", "<1e-12", f"{orth:.3g}", orth < 1e-12)
    target = np.zeros(n)
    target[-1] = np.sqrt(n)
    rows = float(np.abs(q.sum(axis=1) - target).max())
    rep.add(n, "q_row_sums", "<1e-12", f"{rows:.3g}", rows < 1e-12)
    gap = float(np.abs(q - q_matrix_rotation(n)).max())
    rep.add(n, "q_rotation_vs_components", "<1e-12", f"{gap:.3g}", gap < 1e-12)
    worst = 0.0
    for s in (1, 2, 3, 4, 6, 8):
        c = q_power_coeffs(s, n)
        for i in range(1, n):
            for j in (i, n, 1 if i != 1 else 2):
                if j == i and j == n:
                    continue
                worst = max(worst, _rel(c.power(i, j), q[i - 1, j - 1] ** s) if q[i - 1, j - 1] else 0.0)
    rep.add(n, "q_power_table", "<1e-10", f"{worst:.3g}", worst < 1e-10)


def _q_sum_checks(rep, n):
    closed, direct = q_closed_form_sums(n), q_direct_sums(n)
    for name in Q_SUM_NAMES:
        err = _rel(closed[name], direct[name]) if direct[name] else abs(closed[name])
        rep.add(n, f"q_sum_{name}", f"{direct[name]:.12g}", f"{closed[name]:.12g}", err < 1e-10)


def verify_analytics(n_list, seed: int = 0, mc_samples: int = DEFAULT_MC_SAMPLES) -> VerificationReport:
    """Run every sphere identity that applies to each n.

    Failures become report entries; nothing is raised for a failed identity.
    """
    rep = VerificationReport()
    rng = np.random.default_rng(seed)
    for n in n_list:
        n = int(n)
        if n < 2:
            rep.add(n, "size", ">=2", n, False, "sizes below 2 have no subsphere")
            continue
        odd = [1] + [0] * (n - 2)
        norm = [2] + [0] * (n - 2)
        rep.add(n, "folland_odd_zero", 0, sphere_average(odd), sphere_average(odd) == 0)
        rep.add(n, "folland_normalisation", 1, (n - 1) * sphere_average(norm),
                (n - 1) * sphere_average(norm) == Fraction(1))
        _moment_checks(rep, n, rng, mc_samples)
        if n <= Q_MATRIX_MAX_N:
            _q_checks(rep, n)
        if n >= 4:
            _q_sum_checks(rep, n)
    return rep
