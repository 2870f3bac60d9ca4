"""Quantum one-Wasserstein distance: certified brackets, Lipschitz seminorm and decay check."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import BoundNotClaimed, CheckResult, StationaryState, TOLERANCES, propagator, stationary_state
from .locality import CertificateReport, delta_vector
from .model import FiniteVolumeGenerator, ModelSpec
from .operators import (Region, StateError, check_density, dagger, embed_matrix, is_hermitian,
                        operator_norm, partial_trace_matrix, trace_norm, unvec, vec)


def _as_region(volume) -> Region:
    return volume if isinstance(volume, Region) else Region(volume)


def normalized_trace_out(matrix: np.ndarray, pos: int, n: int, site_dim: int) -> np.ndarray:
    """``T_x f = tr_x(f) / d`` re-embedded with the identity at x."""
    reduced = partial_trace_matrix(matrix, pos, n, site_dim) / site_dim
    rest = [p for p in range(n) if p != pos]
    if not rest:
        return reduced * np.eye(site_dim)
    return embed_matrix(reduced, rest, n, site_dim)


# --- Lipschitz seminorm ------------------------------------------------------------

def _top_eigvec(a: np.ndarray) -> tuple[float, np.ndarray]:
    w, v = np.linalg.eigh(a)
    k = int(np.argmax(np.abs(w)))
    return float(w[k]), v[:, k]


def site_theta_bracket(f: np.ndarray, pos: int, n: int, site_dim: int, refine: bool = True,
                       iterations: int = 500, tol: float = 1e-7) -> tuple[float, float]:
    """Bracket for ``theta_x(f) = 2 inf_{g away from x} ||f - g||`` (f self-adjoint).

    Lower: ``||f - T_x f||`` and a dual witness X with ``tr_x X = 0``.
    Upper: ``2 ||f - g||`` at g = T_x f, refined by projected subgradient descent.
    """
    if n == 1:
        w = np.linalg.eigvalsh(f)
        return float(w[-1] - w[0]), float(w[-1] - w[0])
    Tf = normalized_trace_out(f, pos, n, site_dim)
    r = f - Tf
    base = operator_norm(r)
    lower, best = base, base
    if refine and base > 0:
        g = Tf.copy()
        step0 = base / 2
        prev = best
        for it in range(iterations):
            lam, u = _top_eigvec(f - g)
            P = np.outer(u, u.conj())
            # subgradient of ||f - g|| in g is -sign(lam) T_x-projected P
            grad = -math.copysign(1.0, lam) * normalized_trace_out(P, pos, n, site_dim) * site_dim
            gn = np.linalg.norm(grad)
            if gn == 0:
                break
            g = g - step0 / math.sqrt(it + 1) * grad / gn
            g = (g + dagger(g)) / 2
            val = operator_norm(f - g)
            best = min(best, val)
            if it % 50 == 49:
                if prev - best < tol:
                    break
                prev = best
        lam, u = _top_eigvec(f - g)
        X = np.outer(u, u.conj()) * math.copysign(1.0, lam)
        X = X - normalized_trace_out(X, pos, n, site_dim)
        xn = trace_norm(X)
        if xn > 0:
            lower = max(lower, 2 * abs(np.trace(X @ f).real) / xn)
    return lower, 2 * best


def lipschitz_bracket(f: np.ndarray, volume, site_dim: int = 2, refine: bool = True) -> dict:
    """Per-site theta brackets of a self-adjoint f on the volume."""
    f = np.asarray(f, dtype=complex)
    if not is_hermitian(f, 1e-10):
        raise ValueError("Lipschitz seminorm needs a self-adjoint operator")
    volume = _as_region(volume)
    n = len(volume)
    if site_dim**n != f.shape[0]:
        raise ValueError("operator does not act on the volume")
    return {x: site_theta_bracket(f, i, n, site_dim, refine) for i, x in enumerate(volume)}


def lipschitz_seminorm(f: np.ndarray, volume, site_dim: int = 2, refine: bool = True) -> tuple[float, float]:
    """``(lower, upper)`` for ``sup_x theta_x(f)``."""
    per = lipschitz_bracket(f, volume, site_dim, refine)
    return max(v[0] for v in per.values()), max(v[1] for v in per.values())


# --- W_Lambda brackets --------------------------------------------------------------

@dataclass
class WassersteinBracket:
    lower: float
    upper: float
    order: list
    witness_decomposition: list = field(repr=False, default_factory=list)
    witness_observable: np.ndarray | None = field(repr=False, default=None)
    witness_label: str = ""

    def to_dict(self) -> dict:
        return {"kind": "bracket", "lower": self.lower, "upper": self.upper,
                "order": [list(s) for s in self.order], "witness": self.witness_label}


def telescoping_decomposition(delta: np.ndarray, n: int, site_dim: int) -> list[np.ndarray]:
    """``Delta^{(x_j)} = (prod_{i<j} T_{x_i})(Delta - T_{x_j} Delta)`` in site order."""
    parts = []
    cur = delta
    for pos in range(n):
        nxt = normalized_trace_out(cur, pos, n, site_dim)
        parts.append(cur - nxt)
        cur = nxt
    return parts


def hermitian_traceless_basis(d: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices."""
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            s = np.zeros((d, d), complex)
            s[j, k] = s[k, j] = 1
            out.append(s)
            a = np.zeros((d, d), complex)
            a[j, k], a[k, j] = -1j, 1j
            out.append(a)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        out.append(np.diag(diag * math.sqrt(2 / (l * (l + 1)))).astype(complex))
    return out


def reduce_to_site(matrix: np.ndarray, pos: int, n: int, site_dim: int) -> np.ndarray:
    """Partial trace over every site except ``pos``."""
    t = matrix.reshape([site_dim] * (2 * n))
    row = list(range(n))
    col = [k + n if k == pos else k for k in range(n)]
    return np.einsum(t, row + col, [pos, pos + n])


def _positive_projector(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(a)
    vp = v[:, w > 1e-14]
    return vp @ dagger(vp)


def w1_bracket(mu: np.ndarray, nu: np.ndarray, volume, site_dim: int = 2,
               refine: bool = True) -> WassersteinBracket:
    """Certified ``lower <= W(mu, nu) <= upper``."""
    volume = _as_region(volume)
    n = len(volume)
    for s in (mu, nu):
        try:
            check_density(s, 1e-9)
        except StateError as exc:
            raise StateError(f"not a state: {exc}") from exc
    delta = np.asarray(mu, complex) - np.asarray(nu, complex)
    delta = (delta + dagger(delta)) / 2
    parts = telescoping_decomposition(delta, n, site_dim)
    upper = 0.5 * sum(trace_norm(p) for p in parts)
    if upper == 0:
        return WassersteinBracket(0.0, 0.0, list(volume), parts, None, "zero")
    cands = []
    basis = hermitian_traceless_basis(site_dim)
    for k, b in enumerate(basis):
        total = np.zeros_like(delta)
        for i, x in enumerate(volume):
            m = embed_matrix(b, [i], n, site_dim)
            total = total + m
            cands.append((f"basis{k}@{x}", m))
        if n > 1:
            cands.append((f"sum basis{k}", total))
    for i, x in enumerate(volume):
        reduced = reduce_to_site(delta, i, n, site_dim)
        cands.append((f"P+ reduced@{x}", embed_matrix(_positive_projector(reduced), [i], n, site_dim)))
    cands.append(("P+ full", _positive_projector(delta)))
    best, best_f, label = 0.0, None, ""
    for name, f in cands:
        gain = abs(np.trace(delta @ f).real)
        if gain <= best * 1e-12:
            continue
        _, lip = lipschitz_seminorm(f, volume, site_dim, refine)
        if lip <= 0:
            continue
        val = gain / lip
        if val > best:
            best, best_f, label = val, f / lip, name
    return WassersteinBracket(min(best, upper), upper, list(volume), parts, best_f, label)


# --- decay check -------------------------------------------------------------------

def appena_slack(f: np.ndarray, volume, spectral, refine: bool = True) -> float:
    """``N eta |V| |||f|||_Lip / 2 - |||f|||`` with the certified lower Lip value."""
    volume = _as_region(volume)
    lower, _ = lipschitz_seminorm(f, volume, spectral.site_dim, refine)
    tri = float(delta_vector(f, volume, spectral).sum())
    return 0.5 * spectral.N * spectral.eta * len(volume) * lower - tri


def check_w_decay(gen: FiniteVolumeGenerator, spec: ModelSpec, cert: CertificateReport,
                  mu: np.ndarray, times, pi: StationaryState | None = None,
                  observables: Sequence[np.ndarray] = (), tol: float | None = None) -> CheckResult:
    """Per-site upper value ``W(mu P_t, pi)/|V|`` against ``C e^{-(lambda1 - M) t}``."""
    if not cert.verdict:
        raise BoundNotClaimed("the Wasserstein decay bound needs M < lambda1")
    if not spec.covariant:
        raise BoundNotClaimed("the Wasserstein decay bound needs a covariant model")
    pi = pi or stationary_state(gen)
    sp = spec.spectral
    gap = cert.lambda1 - cert.M
    C = cert.C0 / gap * sp.N * sp.eta / 2
    prop = propagator(gen)
    n = len(gen.volume)
    worst = math.inf
    series = []
    for t in np.asarray(times, dtype=float):
        mt = unvec(dagger(prop(float(t))) @ vec(np.asarray(mu, complex)), gen.dim)
        mt = (mt + dagger(mt)) / 2
        delta = mt - pi.density
        up = 0.5 * sum(trace_norm(p) for p in telescoping_decomposition(delta, n, gen.site_dim)) / n
        bound = C * math.exp(-gap * t)
        worst = min(worst, bound - up)
        series.append((float(t), "w_upper_per_site", up, bound))
    for f in observables:
        worst = min(worst, appena_slack(f, gen.volume, sp))
    tol = TOLERANCES["default"]["wasserstein"] if tol is None else tol
    return CheckResult("wasserstein_decay", spec.name, n, worst, worst >= tol,
                       {"C": C, "rate": gap, "observables": len(observables)}, series)


__all__ = ["WassersteinBracket", "lipschitz_seminorm", "lipschitz_bracket", "site_theta_bracket",
           "w1_bracket", "telescoping_decomposition", "check_w_decay", "appena_slack",
           "normalized_trace_out", "hermitian_traceless_basis"]
