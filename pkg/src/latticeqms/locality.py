"""Conditional-expectation calculus, seminorms and the ergodicity certificate."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .model import InteractionTerm, ModelSpec, perturbation_terms
from .operators import (LocalOperator, Region, Site, SupportError, _move_site_first, dagger,
                        embed_matrix, operator_norm, site_distance)
from .single_site import SpectralData

XI_GRID = np.logspace(-3, np.log10(5.0), 32)
SCHEMA_VERSION = "1.0"


# --- E_{x,h} and delta profiles -------------------------------------------

def _reduced_components(matrix: np.ndarray, pos: int, n_sites: int, spectral: SpectralData) -> np.ndarray:
    """Stack over h of ``tr_x((rho e_h*) f)`` as operators on the other sites."""
    d = spectral.site_dim
    t = _move_site_first(matrix, pos, n_sites, d)
    return np.einsum("hab,bras->hrs", spectral.coefficient_weights(), t)


def exh_apply(f: LocalOperator, x, h: int, spectral: SpectralData) -> LocalOperator:
    """``E_{x,h} f = E_{x,0}(e_{x,h}* f)``, returned on the support of f (identity at x)."""
    if x not in f.support:
        raise SupportError(f"site {x} not in support {f.support.sites}")
    if not 0 <= h <= spectral.N:
        raise IndexError(f"component index {h} out of range")
    n = len(f.support)
    pos = f.support.index(x)
    d = spectral.site_dim
    t = _move_site_first(f.matrix, pos, n, d)
    red = np.einsum("ab,bras->rs", spectral.rho @ dagger(spectral.basis[h]), t)
    full = embed_matrix(np.kron(np.eye(d), red), [pos] + [p for p in range(n) if p != pos], n, d)
    return LocalOperator(f.support, f.site_dim, full)


def exh_matrix(matrix: np.ndarray, volume: Region, x, h: int, spectral: SpectralData) -> np.ndarray:
    return exh_apply(LocalOperator(volume, spectral.site_dim, matrix), x, h, spectral).matrix


def site_delta(matrix: np.ndarray, pos: int, n_sites: int, spectral: SpectralData) -> float:
    comps = _reduced_components(matrix, pos, n_sites, spectral)
    return float(sum(operator_norm(c) for c in comps[1:]))


@dataclass(frozen=True)
class DeltaProfile:
    values: dict
    total: float

    def __getitem__(self, x) -> float:
        return self.values.get(tuple(x), 0.0)

    def vector(self, sites: Sequence[Site]) -> np.ndarray:
        return np.array([self[s] for s in sites])


def delta_profile(f: LocalOperator, spectral: SpectralData) -> DeltaProfile:
    """``delta_x(f) = sum_{h>=1} ||E_{x,h} f||`` for every site of the support."""
    n = len(f.support)
    vals = {x: site_delta(f.matrix, i, n, spectral) for i, x in enumerate(f.support)}
    return DeltaProfile(vals, float(sum(vals.values())))


def seminorm(f: LocalOperator, spectral: SpectralData) -> float:
    return delta_profile(f, spectral).total


def delta_vector(matrix: np.ndarray, volume: Region, spectral: SpectralData) -> np.ndarray:
    n = len(volume)
    return np.array([site_delta(matrix, i, n, spectral) for i in range(n)])


def _term_deltas(matrix: np.ndarray | None, region: Region, spectral: SpectralData) -> dict:
    if matrix is None:
        return {}
    return delta_profile(LocalOperator(region, spectral.site_dim, matrix), spectral).values


# --- constants ---------------------------------------------------------------

def _reference_sites(spec: ModelSpec, volume: Region | None) -> list[Site]:
    if spec.covariant:
        return [(0,) * spec.dimension]
    if volume is not None:
        return list(volume)
    sites = set()
    for t in spec.terms:
        sites |= set(t.region.sites)
    return sorted(sites)


def site_load(spec: ModelSpec, x: Site) -> float:
    """``sum_{alpha: chi(alpha) ni x} (||k_alpha|| + 2 ||l_alpha||^2)``."""
    total = 0.0
    for t in spec.terms_containing(x):
        if t.k is not None:
            total += operator_norm(t.k)
        if t.l is not None:
            total += 2 * operator_norm(t.l) ** 2
    return total


def compute_C0(spec: ModelSpec, volume: Region | None = None) -> float:
    """``2 eta sup_x sum_{chi(alpha) ni x}(||k|| + 2||l||^2)``."""
    eta = spec.spectral.eta
    return 2 * eta * max(site_load(spec, x) for x in _reference_sites(spec, volume))


def term_theta(spec: ModelSpec, term: InteractionTerm) -> dict:
    """Per-term coefficients ``theta_{x,y}(alpha)`` for x, y in chi(alpha).

    ``2 eta [(1 + eta^2 d_xy) delta_x(k) + 2 (eta^2 + d_xy) S_x]`` where S_x is the
    bracket of delta/norm products of the jump split.
    """
    sp = spec.spectral
    eta = sp.eta
    region = term.region
    k, pairs = perturbation_terms(spec, term)
    dk = _term_deltas(k, region, sp)
    S = {x: 0.0 for x in region}
    # each bilinear B(u, v) contributes delta_x(u)||v|| + ||u|| delta_x(v)
    for u, v in pairs:
        du, dv = _term_deltas(u, region, sp), _term_deltas(v, region, sp)
        nu, nv = operator_norm(u), operator_norm(v)
        for x in region:
            S[x] += du.get(x, 0.0) * nv + nu * dv.get(x, 0.0)
    out = {}
    for x in region:
        for y in region:
            dxy = 1.0 if x == y else 0.0
            out[(x, y)] = 2 * eta * ((1 + eta**2 * dxy) * dk.get(x, 0.0)
                                     + 2 * (eta**2 + dxy) * S[x])
    return out


@dataclass
class ThetaMatrix:
    sites: list
    entries: np.ndarray            # entries[i, j] = theta_{sites[i], sites[j]}
    exact: bool

    @property
    def column_sums(self) -> np.ndarray:
        return self.entries.sum(axis=0)

    @property
    def M(self) -> float:
        return float(self.column_sums.max()) if self.entries.size else 0.0


def theta_column(spec: ModelSpec, y: Site) -> dict:
    """``theta_{x,y} = N sum_{alpha: y in chi(alpha)} theta_{x,y}(alpha)`` for all x."""
    N = spec.spectral.N
    y = tuple(y)
    col: dict = {}
    for t in spec.terms_containing(y):
        for (x, yy), v in term_theta(spec, t).items():
            if yy == y:
                col[x] = col.get(x, 0.0) + N * v
    return col


def compute_theta(spec: ModelSpec, volume: Region | None = None) -> ThetaMatrix:
    """Theta matrix.

    Without a volume (covariant model) this is the exact column at the origin,
    indexed by relative site.  With a volume it is the matrix built from the
    terms that the finite-volume generator keeps (chi(alpha) inside).
    """
    if volume is None:
        if not spec.covariant:
            return compute_theta(spec, Region(_reference_sites(spec, None)))
        origin = (0,) * spec.dimension
        col = theta_column(spec, origin)
        sites = sorted(col)
        ent = np.array([[col[s]] for s in sites]) if sites else np.zeros((0, 1))
        return ThetaMatrix(sites, ent, exact=True)
    return finite_theta(spec, volume)


def finite_theta(spec: ModelSpec, volume: Region, periodic_shape=None) -> ThetaMatrix:
    N = spec.spectral.N
    sites = list(volume)
    index = {s: i for i, s in enumerate(sites)}
    ent = np.zeros((len(sites), len(sites)))
    included, _, _ = spec.terms_in(volume, periodic_shape)
    for t in included:
        for (x, y), v in term_theta(spec, t).items():
            ent[index[x], index[y]] += N * v
    return ThetaMatrix(sites, ent, exact=spec.covariant)


def omega_column(spec: ModelSpec, y: Site) -> dict:
    """``omega_{x,y} = 8 eta^2 sum_{chi(alpha) contains x, y} ||l_alpha||^2``."""
    eta = spec.spectral.eta
    col: dict = {}
    for t in spec.terms_containing(y):
        if t.l is None:
            continue
        w = 8 * eta**2 * operator_norm(t.l) ** 2
        for x in t.region:
            col[x] = col.get(x, 0.0) + w
    return col


def omega_matrix(jumps_by_region: Sequence[tuple[Region, float]], volume: Region, eta: float) -> np.ndarray:
    sites = list(volume)
    index = {s: i for i, s in enumerate(sites)}
    out = np.zeros((len(sites), len(sites)))
    for region, lnorm in jumps_by_region:
        idx = [index[s] for s in region]
        for i in idx:
            for j in idx:
                out[i, j] += 8 * eta**2 * lnorm**2
    return out


def weighted_column_sup(spec: ModelSpec, xi: float, volume: Region | None = None) -> tuple[float, float]:
    """``(M_xi, Omega_xi)``."""
    if spec.covariant and volume is None:
        origin = (0,) * spec.dimension
        col = theta_column(spec, origin)
        m_xi = sum(v * math.exp(xi * site_distance(x, origin)) for x, v in col.items())
        om = omega_column(spec, origin)
        o_xi = max((v * math.exp(xi * site_distance(x, origin)) for x, v in om.items()), default=0.0)
        return m_xi, o_xi
    sites = _reference_sites(spec, volume)
    reg = Region(sites)
    th = finite_theta(spec, reg)
    dist = np.array([[site_distance(a, b) for b in sites] for a in sites], dtype=float)
    m_xi = float((th.entries * np.exp(xi * dist)).sum(axis=0).max())
    o_xi = 0.0
    for y in sites:
        for x, v in omega_column(spec, y).items():
            o_xi = max(o_xi, v * math.exp(xi * site_distance(x, y)))
    return m_xi, o_xi


@dataclass
class CertificateReport:
    model: str
    statistics: str
    N: int | None
    eta: float | None
    lambda1: float
    C0: float
    M: float
    margin: float
    verdict: bool
    M_kind: str
    range: int
    xi: float | None = None
    M_xi: float | None = None
    Omega_xi: float | None = None
    zeta: float | None = None
    C: float | None = None
    convergence_prefactor: float | None = None
    theta_column: list = field(default_factory=list)
    xi_trace: list = field(default_factory=list)
    spectral: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and not math.isfinite(v):
                d[k] = "inf" if v > 0 else "-inf"
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def zeta_of(xi: float, lam1: float, M: float, R: int) -> float:
    gap = lam1 - M
    return gap * xi / (gap + 2 * M * math.exp(R * xi))


def correlation_constant(xi: float, lam1: float, M: float, R: int, C0: float,
                         omega_xi: float, N: int, eta: float) -> float:
    """``C_xi = 2 N eta^2 max{C0/(lambda1 - M), Omega_xi/(2 M e^{R xi})}``."""
    if M <= 0:
        return math.inf
    return 2 * N * eta**2 * max(C0 / (lam1 - M), omega_xi / (2 * M * math.exp(R * xi)))


def certify(spec: ModelSpec, volume: Region | None = None, xi_grid=XI_GRID) -> CertificateReport:
    """Evaluate C0, theta, M and, when M < lambda1, the decay constants."""
    sp = spec.spectral
    lam1, eta, N = sp.gap, sp.eta, sp.N
    C0 = compute_C0(spec, volume)
    theta = compute_theta(spec, None if spec.covariant else volume)
    M = theta.M
    margin = lam1 - M
    verdict = bool(margin > 0)
    R = spec.interaction_range
    rep = CertificateReport(
        model=spec.name, statistics="qudit", N=N, eta=eta, lambda1=lam1, C0=C0, M=M,
        margin=margin, verdict=verdict,
        M_kind="exact" if spec.covariant else "volume estimate", range=R,
        theta_column=[[list(s), float(v)] for s, v in zip(theta.sites, theta.column_sums
                                                         if not spec.covariant else theta.entries[:, 0])],
        spectral=sp.to_dict())
    if verdict:
        rep.convergence_prefactor = C0 / margin
        best = None
        for xi in xi_grid:
            z = zeta_of(float(xi), lam1, M, R)
            m_xi, o_xi = weighted_column_sup(spec, float(xi), None if spec.covariant else volume)
            c = correlation_constant(float(xi), lam1, M, R, C0, o_xi, N, eta)
            rep.xi_trace.append({"xi": float(xi), "zeta": z, "M_xi": m_xi, "Omega_xi": o_xi, "C": c})
            if best is None or z > best[1] + 1e-15:
                best = (float(xi), z, m_xi, o_xi, c)
        rep.xi, rep.zeta, rep.M_xi, rep.Omega_xi, rep.C = best
    return rep


# --- bound checks used by tests and the verify command -------------------

def lem246_slack(spec: ModelSpec, term: InteractionTerm, f: LocalOperator, x: Site, h: int) -> float:
    """``sum_y theta_{x,y}(alpha) delta_y(f) - ||E_{x,h} L1_alpha f - L1_alpha E_{x,h} f||``."""
    sp = spec.spectral
    region = f.support.union(term.region)
    fm = f.on(region)
    k, pairs = perturbation_terms(spec, term)

    def L1(g):
        out = np.zeros_like(g)
        if k is not None:
            km = LocalOperator(term.region, spec.site_dim, k).on(region)
            out += 1j * (km @ g - g @ km)
        for u, v in pairs:
            um = LocalOperator(term.region, spec.site_dim, u).on(region)
            vm = LocalOperator(term.region, spec.site_dim, v).on(region)
            out += 2 * um @ g @ vm - um @ vm @ g - g @ um @ vm
        return out

    lhs = exh_matrix(L1(fm), region, x, h, sp) - L1(exh_matrix(fm, region, x, h, sp))
    coeffs = term_theta(spec, term)
    prof = delta_profile(LocalOperator(region, spec.site_dim, fm), sp)
    rhs = sum(coeffs.get((tuple(x), y), 0.0) * prof[y] for y in term.region)
    return rhs - operator_norm(lhs)


def kbound_slack(u: LocalOperator, f: LocalOperator, spectral: SpectralData) -> float:
    """``2 eta ||u|| sum_{x in supp u} delta_x(f) - ||[u, f]||``."""
    region = u.support.union(f.support)
    um, fm = u.on(region), f.on(region)
    prof = delta_profile(LocalOperator(region, u.site_dim, fm), spectral)
    rhs = 2 * spectral.eta * u.norm() * sum(prof[x] for x in u.support)
    return rhs - operator_norm(um @ fm - fm @ um)


def product_seminorm_slack(f1: LocalOperator, f2: LocalOperator, spectral: SpectralData) -> float:
    """``N eta^2 (|||f1||| ||f2|| + ||f1|| |||f2|||) - |||f1 f2|||``."""
    prod = f1 @ f2
    s1, s2 = seminorm(f1, spectral), seminorm(f2, spectral)
    rhs = spectral.N * spectral.eta**2 * (s1 * f2.norm() + f1.norm() * s2)
    return rhs - seminorm(prod, spectral)


def dugv_slack(u: LocalOperator, g: LocalOperator, v: LocalOperator, x: Site, h: int,
               spectral: SpectralData) -> float:
    """``eta^2 ||g|| (delta_x(u)||v|| + ||u|| delta_x(v)) - ||E_{x,h}(u g v)||`` for g away from x."""
    if x in g.support:
        raise SupportError("g must act trivially at x")
    region = u.support.union(g.support).union(v.support).union(Region([x]))
    um, gm, vm = u.on(region), g.on(region), v.on(region)
    lhs = operator_norm(exh_matrix(um @ gm @ vm, region, x, h, spectral))
    du = delta_profile(LocalOperator(region, u.site_dim, um), spectral)[x]
    dv = delta_profile(LocalOperator(region, v.site_dim, vm), spectral)[x]
    rhs = spectral.eta**2 * g.norm() * (du * v.norm() + u.norm() * dv)
    return rhs - lhs


__all__ = ["DeltaProfile", "ThetaMatrix", "CertificateReport", "exh_apply", "exh_matrix",
           "delta_profile", "delta_vector", "seminorm", "compute_C0", "compute_theta",
           "finite_theta", "term_theta", "theta_column", "omega_column", "weighted_column_sup",
           "certify", "zeta_of", "correlation_constant", "lem246_slack", "kbound_slack",
           "product_seminorm_slack", "dugv_slack", "XI_GRID"]
