"""Exact finite-volume evolution, stationary states and the bound-verification checks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .locality import CertificateReport, ThetaMatrix, delta_vector, finite_theta, weighted_column_sup
from .model import FiniteVolumeGenerator, ModelSpec
from .operators import LocalOperator, Region, operator_norm, site_distance, unvec, vec
from .single_site import SpectralData

FULL_EIG_MAX = 1024

TOLERANCES = {
    "default": {"slack": -1e-9, "contraction": -1e-8, "convergence": -1e-6, "propagation": -1e-8,
                "correlation": -1e-9, "intertwining": 1e-9, "stationary": 1e-9, "wasserstein": -1e-9},
    "strict": {"slack": -1e-11, "contraction": -1e-10, "convergence": -1e-6, "propagation": -1e-10,
               "correlation": -1e-11, "intertwining": 1e-10, "stationary": 1e-10, "wasserstein": -1e-11},
}


class NumericalFailure(RuntimeError):
    """A computation that should succeed at desk scale did not."""


class BoundNotClaimed(ValueError):
    """The requested inequality is only asserted under a passing certificate."""


@dataclass
class CheckResult:
    check: str
    model: str
    volume: int
    worst_slack: float
    passed: bool
    params: dict = field(default_factory=dict)
    series: list = field(default_factory=list)     # rows (t, quantity, value, bound)

    def to_dict(self) -> dict:
        return {"check": self.check, "model": self.model, "volume": self.volume,
                "params": self.params, "worst_slack": float(self.worst_slack), "pass": bool(self.passed)}


def series_csv(results: Iterable[CheckResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["t", "quantity", "value", "bound"])
    for r in results:
        for row in r.series:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# --- evolution ---------------------------------------------------------------

def _check_times(times) -> np.ndarray:
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if not np.all(np.isfinite(t)) or np.any(t < 0):
        raise ValueError("times must be finite and non-negative")
    return t


class Propagator:
    """Caches ``exp(t L)`` per distinct time for one superoperator."""

    def __init__(self, superop: np.ndarray):
        self.superop = superop
        self._cache: dict = {}

    def __call__(self, t: float) -> np.ndarray:
        key = float(t)
        if key not in self._cache:
            if key == 0.0:
                self._cache[key] = np.eye(self.superop.shape[0], dtype=complex)
            else:
                self._cache[key] = sla.expm(key * self.superop)
        return self._cache[key]


def propagator(gen: FiniteVolumeGenerator) -> Propagator:
    prop = gen.meta.get("_propagator")
    if prop is None:
        prop = Propagator(gen.heisenberg)
        gen.meta["_propagator"] = prop
    return prop


@dataclass
class EvolutionResult:
    times: np.ndarray
    observables: list
    seminorm_trace: np.ndarray | None = None
    distance_trace: np.ndarray | None = None


def evolve(gen: FiniteVolumeGenerator, f: LocalOperator | np.ndarray, times,
           spectral: SpectralData | None = None, pi: np.ndarray | None = None) -> EvolutionResult:
    """``P_t f = exp(t L) f`` in the Heisenberg picture on the time grid."""
    t = _check_times(times)
    fm = gen.embed(f) if isinstance(f, LocalOperator) else np.asarray(f, dtype=complex)
    prop = propagator(gen)
    obs = [unvec(prop(ti) @ vec(fm), gen.dim) for ti in t]
    semi = dist = None
    if spectral is not None:
        semi = np.array([delta_vector(o, gen.volume, spectral).sum() for o in obs])
    if pi is not None:
        pif = np.trace(pi @ fm)
        dist = np.array([operator_norm(o - pif * np.eye(gen.dim)) for o in obs])
    return EvolutionResult(t, obs, semi, dist)


def rk4_evolve(apply: Callable[[np.ndarray], np.ndarray], f: np.ndarray, t: float, step: float = 1e-3) -> np.ndarray:
    """Fixed-step classical Runge-Kutta integration of ``df/dt = L f``."""
    n = max(1, int(math.ceil(t / step - 1e-12)))
    h = t / n
    g = np.array(f, dtype=complex)
    for _ in range(n):
        k1 = apply(g)
        k2 = apply(g + 0.5 * h * k1)
        k3 = apply(g + 0.5 * h * k2)
        k4 = apply(g + h * k3)
        g = g + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return g


def expm_cross_check(gen: FiniteVolumeGenerator, f: np.ndarray, t: float, step: float = 1e-3) -> float:
    """Relative difference between the expm route and the operator-level integrator."""
    a = unvec(propagator(gen)(t) @ vec(f), gen.dim)
    b = rk4_evolve(gen.apply, f, t, step)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def choi_matrix(channel: np.ndarray) -> np.ndarray:
    """Choi matrix ``sum_ij |i><j| (x) Phi(|i><j|)`` of a column-stacked superoperator."""
    D = int(round(math.sqrt(channel.shape[0])))
    phi = channel.reshape((D, D, D, D), order="F")       # phi[a, b, i, j] = Phi(E_ij)_ab
    return phi.transpose(2, 0, 3, 1).reshape(D * D, D * D)


def choi_min_eigenvalue(gen: FiniteVolumeGenerator, t: float) -> float:
    channel = sla.expm(t * gen.schrodinger)
    C = choi_matrix(channel)
    return float(np.linalg.eigvalsh((C + C.conj().T) / 2).min())


# --- stationary state --------------------------------------------------------

@dataclass
class StationaryState:
    density: np.ndarray
    residual: float
    degeneracy: int
    min_eigenvalue: float

    def expectation(self, f: np.ndarray) -> complex:
        return complex(np.trace(self.density @ f))


def _null_count(S: np.ndarray, tol: float) -> int:
    if S.shape[0] <= FULL_EIG_MAX:
        ev = np.linalg.eigvals(S)
    else:
        k = min(6, S.shape[0] - 2)
        ev = spla.eigs(S, k=k, sigma=1e-3, which="LM", return_eigenvectors=False)
    return int(np.sum(np.abs(ev.real) < tol))


def stationary_state(gen: FiniteVolumeGenerator, tol: float = 1e-9) -> StationaryState:
    """Unit-trace null vector of the Schrodinger generator."""
    S = gen.schrodinger
    D = gen.dim
    A = S.copy()
    A[0, :] = vec(np.eye(D)).conj()
    b = np.zeros(D * D, dtype=complex)
    b[0] = 1.0
    try:
        x = sla.solve(A, b)
    except sla.LinAlgError as exc:
        raise NumericalFailure(f"stationary-state solve failed: {exc}") from exc
    rho = unvec(x, D)
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    residual = float(np.linalg.norm(S @ vec(rho)))
    lo = float(np.linalg.eigvalsh(rho).min())
    if residual > 1e3 * tol or lo < -1e-8:
        raise NumericalFailure(f"no PSD stationary state (residual {residual:.3g}, min eig {lo:.3g})")
    return StationaryState(rho, residual, _null_count(S, tol), lo)


# --- conditional expectations as superoperators -------------------------------

def exh_superop(volume: Region, x, h: int, spectral: SpectralData) -> np.ndarray:
    """Column-stacked matrix of ``f -> E_{x,h} f`` on the volume."""
    from .locality import exh_matrix
    D = spectral.site_dim ** len(volume)
    out = np.empty((D * D, D * D), dtype=complex)
    for col in range(D * D):
        e = np.zeros(D * D, dtype=complex)
        e[col] = 1
        out[:, col] = vec(exh_matrix(unvec(e, D), volume, x, h, spectral))
    return out


def check_intertwining(gen0: FiniteVolumeGenerator, spectral: SpectralData) -> float:
    """``max_{x,h} max_units ||(E_{x,h} L0 - L0 E_{x,h} + lambda_h E_{x,h}) E_ab||``."""
    L0 = gen0.heisenberg
    D = gen0.dim
    worst = 0.0
    for x in gen0.volume:
        for h, lam in enumerate(spectral.eigenvalues):
            E = exh_superop(gen0.volume, x, h, spectral)
            R = E @ L0 - L0 @ E + lam * E
            for col in range(D * D):
                worst = max(worst, operator_norm(unvec(R[:, col], D)))
    return worst


# --- bound checks ------------------------------------------------------------

def _profile(gen: FiniteVolumeGenerator, m: np.ndarray, spectral: SpectralData) -> np.ndarray:
    return delta_vector(m, gen.volume, spectral)


def check_resolvent_bound(gen: FiniteVolumeGenerator, spec: ModelSpec, cert: CertificateReport,
                          lam: float, observables: Sequence[np.ndarray],
                          theta: ThetaMatrix | None = None) -> CheckResult:
    """Solve ``(lam - L) g = f`` and compare delta(g) with ``(lam + lambda1 - Theta)^{-1} delta(f)``."""
    sp = spec.spectral
    lam1 = sp.gap
    if lam <= 0 or lam + lam1 <= cert.M:
        raise BoundNotClaimed("resolvent bound needs lam > 0 and lam + lambda1 > M")
    theta = theta or finite_theta(spec, gen.volume)
    n = len(gen.volume)
    K = np.linalg.inv((lam + lam1) * np.eye(n) - theta.entries)
    lu = sla.lu_factor(lam * np.eye(gen.dim**2) - gen.heisenberg)
    worst = math.inf
    for f in observables:
        g = unvec(sla.lu_solve(lu, vec(f)), gen.dim)
        df, dg = _profile(gen, f, sp), _profile(gen, g, sp)
        pointwise = float(np.min(K @ df - dg))
        scalar = df.sum() / (lam + lam1 - cert.M) - dg.sum()
        worst = min(worst, pointwise, scalar)
    tol = TOLERANCES["default"]["slack"]
    return CheckResult("resolvent", spec.name, n, worst, worst >= tol, {"lambda": lam})


def check_contraction(gen: FiniteVolumeGenerator, spec: ModelSpec, cert: CertificateReport,
                      observables: Sequence[np.ndarray], times,
                      theta: ThetaMatrix | None = None, tol: float | None = None) -> CheckResult:
    """``delta(P_t f) <= e^{-lambda1 t} e^{t Theta} delta(f)`` and ``|||P_t f||| <= e^{(M-lambda1)t}|||f|||``."""
    sp = spec.spectral
    lam1 = sp.gap
    t_grid = _check_times(times)
    theta = theta or finite_theta(spec, gen.volume)
    prop = propagator(gen)
    worst = math.inf
    series = []
    profiles0 = [_profile(gen, f, sp) for f in observables]
    for t in t_grid:
        P = prop(t)
        Et = math.exp(-lam1 * t) * sla.expm(t * theta.entries)
        for i, (f, d0) in enumerate(zip(observables, profiles0)):
            dt = _profile(gen, unvec(P @ vec(f), gen.dim), sp)
            pointwise = float(np.min(Et @ d0 - dt))
            bound = math.exp((cert.M - lam1) * t) * d0.sum()
            worst = min(worst, pointwise, bound - dt.sum())
            if i == 0:
                series.append((t, "seminorm", dt.sum(), bound))
    tol = TOLERANCES["default"]["contraction"] if tol is None else tol
    return CheckResult("contraction", spec.name, len(gen.volume), worst, worst >= tol,
                       {"times": len(t_grid), "observables": len(observables)}, series)


def check_convergence(gen: FiniteVolumeGenerator, spec_name: str, cert: CertificateReport,
                      observables: Sequence[np.ndarray], times, seminorm_fn: Callable,
                      pi: StationaryState | None = None, tol: float | None = None) -> CheckResult:
    """``||P_t f - pi(f) 1|| <= C0/(lambda1 - M) e^{-(lambda1 - M) t} |||f|||``."""
    if not cert.verdict:
        raise BoundNotClaimed("convergence bound is only claimed when M < lambda1")
    pi = pi or stationary_state(gen)
    gap = cert.lambda1 - cert.M
    pref = cert.C0 / gap
    prop = propagator(gen)
    worst = math.inf
    series = []
    eye = np.eye(gen.dim)
    for i, f in enumerate(observables):
        s0 = seminorm_fn(f)
        pif = pi.expectation(f)
        for t in _check_times(times):
            lhs = operator_norm(unvec(prop(t) @ vec(f), gen.dim) - pif * eye)
            bound = pref * math.exp(-gap * t) * s0
            worst = min(worst, bound - lhs)
            if i == 0:
                series.append((t, "distance", lhs, bound))
    tol = TOLERANCES["default"]["convergence"] if tol is None else tol
    return CheckResult("convergence", spec_name, len(gen.volume), worst, worst >= tol,
                       {"observables": len(observables)}, series)


def _effective_omega(gen: FiniteVolumeGenerator, spec: ModelSpec) -> np.ndarray:
    from .locality import omega_matrix
    items = []
    for t in gen.meta["terms"]:
        if t.l is not None:
            items.append((t.region, operator_norm(t.l)))
    for t in gen.meta["excluded_iota"]:
        x, j = t.unperturbed
        items.append((Region([x]), operator_norm(spec.jumps0[j])))
    return omega_matrix(items, gen.volume, spec.spectral.eta)


def check_propagation(gen: FiniteVolumeGenerator, spec: ModelSpec, cert: CertificateReport,
                      f1: LocalOperator, f2: LocalOperator, times, xi: float = 0.5,
                      n_quad: int = 48, tol: float | None = None) -> CheckResult:
    """Factorization defect of ``P_t(f1 f2)`` against the integral and closed-form bounds."""
    if set(f1.support.sites) & set(f2.support.sites):
        raise ValueError("observables must have disjoint supports")
    sp = spec.spectral
    lam1 = sp.gap
    m1, m2 = gen.embed(f1), gen.embed(f2)
    d1, d2 = _profile(gen, m1, sp), _profile(gen, m2, sp)
    theta = finite_theta(spec, gen.volume)
    omega = _effective_omega(gen, spec)
    m_xi, o_xi = weighted_column_sup(spec, xi, None if spec.covariant else gen.volume)
    dist = f1.support.distance(f2.support)
    prop = propagator(gen)
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    worst = math.inf
    series = []
    for t in _check_times(times):
        P = prop(t)
        lhs = operator_norm(unvec(P @ vec(m1 @ m2), gen.dim)
                            - unvec(P @ vec(m1), gen.dim) @ unvec(P @ vec(m2), gen.dim))
        rate = 2 * (m_xi - lam1)
        growth = t if abs(rate) < 1e-14 else (math.exp(rate * t) - 1) / rate
        closed = o_xi * growth * math.exp(-xi * dist) * d1.sum() * d2.sum()
        integral = 0.0
        if t > 0:
            for s_node, w in zip(0.5 * t * (nodes + 1), 0.5 * t * weights):
                Es = sla.expm(s_node * theta.entries)
                integral += w * math.exp(-2 * lam1 * s_node) * float((Es @ d1) @ omega @ (Es @ d2))
        worst = min(worst, closed - lhs, integral - lhs)
        series.append((t, "factorization_defect", lhs, min(closed, integral)))
    tol = TOLERANCES["default"]["propagation"] if tol is None else tol
    return CheckResult("propagation", spec.name, len(gen.volume), worst, worst >= tol,
                       {"xi": xi, "distance": dist, "M_xi": m_xi, "Omega_xi": o_xi}, series)


def check_correlation_decay(gen: FiniteVolumeGenerator, spec_name: str, cert: CertificateReport,
                            pairs: Sequence[tuple[LocalOperator, LocalOperator]],
                            seminorm_fn: Callable, pi: StationaryState | None = None,
                            tol: float | None = None) -> CheckResult:
    """``|pi(f1 f2) - pi(f1) pi(f2)| <= C e^{-zeta dist} (||f1|| + |||f1|||)(||f2|| + |||f2|||)``."""
    if not cert.verdict:
        raise BoundNotClaimed("correlation decay is only claimed when M < lambda1")
    pi = pi or stationary_state(gen)
    worst = math.inf
    series = []
    for f1, f2 in pairs:
        m1, m2 = gen.embed(f1), gen.embed(f2)
        dist = f1.support.distance(f2.support)
        corr = abs(pi.expectation(m1 @ m2) - pi.expectation(m1) * pi.expectation(m2))
        w1 = f1.norm() + seminorm_fn(m1)
        w2 = f2.norm() + seminorm_fn(m2)
        bound = cert.C * math.exp(-cert.zeta * dist) * w1 * w2 if math.isfinite(cert.C) else math.inf
        worst = min(worst, bound - corr)
        series.append((dist, "correlation", corr, bound))
    tol = TOLERANCES["default"]["correlation"] if tol is None else tol
    return CheckResult("correlation", spec_name, len(gen.volume), worst, worst >= tol,
                       {"pairs": len(pairs), "zeta": cert.zeta, "C": cert.C}, series)


def check_volume_limit(assemble_fn: Callable[[Region], FiniteVolumeGenerator], f: LocalOperator,
                       t: float, volumes: Sequence[Region]) -> dict:
    """Increments ``||P_t^{V_n} f - P_t^{V_{n+1}} f||`` over nested volumes."""
    increments = []
    prev = None
    for vol in volumes:
        gen = assemble_fn(vol)
        cur = LocalOperator(vol, f.site_dim, evolve(gen, f, [t]).observables[0])
        if prev is not None:
            if not prev.support.issubset(vol):
                raise ValueError("volumes must be nested")
            increments.append(operator_norm(prev.on(vol) - cur.matrix))
        prev = cur
    ratio = increments[-1] / increments[0] if increments and increments[0] > 0 else 0.0
    return {"t": t, "volumes": [len(v) for v in volumes], "increments": increments,
            "last_over_first": ratio}


__all__ = ["CheckResult", "EvolutionResult", "StationaryState", "NumericalFailure",
           "BoundNotClaimed", "Propagator", "TOLERANCES", "evolve", "rk4_evolve",
           "expm_cross_check", "choi_matrix", "choi_min_eigenvalue", "stationary_state",
           "exh_superop", "check_intertwining", "check_resolvent_bound", "check_contraction",
           "check_convergence", "check_propagation", "check_correlation_decay",
           "check_volume_limit", "series_csv", "propagator"]
