"""Jordan-Wigner CAR representation, skew derivations and the Fermi Ornstein-Uhlenbeck model."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, reduce
from itertools import product
from typing import Sequence

import numpy as np

from .locality import CertificateReport, zeta_of, XI_GRID
from .model import FiniteVolumeGenerator, GeneratorManifest
from .operators import Region, Site, dagger, operator_norm, site_distance

LOWER = np.array([[0, 1], [0, 0]], dtype=complex)
PARITY = np.diag([1.0, -1.0]).astype(complex)


class ParityError(ValueError):
    """Operator without the declared definite parity."""


def _kron_all(mats):
    return reduce(np.kron, mats, np.ones((1, 1), dtype=complex))


@dataclass(frozen=True)
class CarRep:
    """CAR operators on the ordered volume; basis states are occupation bit strings."""

    volume: Region
    h_field: float = 0.0

    @property
    def n(self) -> int:
        return len(self.volume)

    @property
    def dim(self) -> int:
        return 2 ** self.n

    @cached_property
    def a(self) -> dict:
        out = {}
        for i, x in enumerate(self.volume):
            factors = [PARITY] * i + [LOWER] + [np.eye(2, dtype=complex)] * (self.n - i - 1)
            out[x] = _kron_all(factors)
        return out

    @cached_property
    def w(self) -> np.ndarray:
        return _kron_all([PARITY] * self.n)

    @cached_property
    def v(self) -> dict:
        return {x: self.w @ ax for x, ax in self.a.items()}

    def adag(self, x) -> np.ndarray:
        return dagger(self.a[tuple(x)])

    def number(self, x) -> np.ndarray:
        ax = self.a[tuple(x)]
        return dagger(ax) @ ax

    def ad_w(self, f: np.ndarray) -> np.ndarray:
        return self.w @ f @ self.w

    def parity_of(self, f: np.ndarray, atol: float = 1e-12) -> int | None:
        fw = self.ad_w(f)
        if np.max(np.abs(fw - f), initial=0) <= atol:
            return 0
        if np.max(np.abs(fw + f), initial=0) <= atol:
            return 1
        return None

    @cached_property
    def _monomials(self) -> list:
        per_site = []
        for x in self.volume:
            ax = self.a[x]
            per_site.append([np.eye(self.dim, dtype=complex), ax, dagger(ax),
                             np.eye(self.dim) - 2 * dagger(ax) @ ax])
        mons = []
        for choice in product(range(4), repeat=self.n):
            m = np.eye(self.dim, dtype=complex)
            for site_ops, c in zip(per_site, choice):
                if c:
                    m = m @ site_ops[c]
            mons.append((choice, m))
        return mons

    def expand(self, f: np.ndarray) -> dict:
        """Coefficients of f in the ordered monomials in ``1, a_x, a_x*, 1 - 2 n_x``."""
        out = {}
        for choice, m in self._monomials:
            c = np.vdot(m, f) / np.vdot(m, m).real
            if abs(c) > 1e-15:
                out[choice] = c
        return out


def build_car(volume: Region | Sequence, h: float = 0.0) -> CarRep:
    volume = volume if isinstance(volume, Region) else Region(volume)
    if len(volume) == 0:
        raise ValueError("volume must be nonempty")
    return CarRep(volume, float(h))


def car_embed(f: np.ndarray, source: CarRep, target: CarRep, in_v: bool = False) -> np.ndarray:
    """Image of an element of the source algebra under the canonical CAR embedding.

    With ``in_v`` the input is an element of ``w A`` or ``A_even`` (a jump
    operator); its odd part is carried as ``w g`` with g odd in the algebra.
    """
    if not source.volume.issubset(target.volume):
        raise ValueError("source volume must be contained in the target volume")
    f = np.asarray(f, dtype=complex)
    odd_v = False
    if in_v:
        p = source.parity_of(source.w @ f)
        if p == 1:
            odd_v = True
            f = source.w @ f
    out = np.zeros((target.dim, target.dim), dtype=complex)
    for choice, c in source.expand(f).items():
        m = np.eye(target.dim, dtype=complex)
        for x, k in zip(source.volume, choice):
            if k == 1:
                m = m @ target.a[x]
            elif k == 2:
                m = m @ target.adag(x)
            elif k == 3:
                m = m @ (np.eye(target.dim) - 2 * target.number(x))
        out += c * m
    if odd_v:
        out = target.w @ out
    return out


# --- derivations ---------------------------------------------------------------

DERIVATION_KINDS = {"d": "d", "∂": "d", "dbar": "dbar", "∂̄": "dbar",
                    "dcheck": "dcheck", "∂̌": "dcheck", "dbarcheck": "dbarcheck", "∂̄̌": "dbarcheck"}


def derivation(rep: CarRep, kind: str, x, f: np.ndarray) -> np.ndarray:
    """``d = w[v_x, .]``, ``dbar = -w[v_x*, .]``, ``dcheck = w[a_x, .]``, ``dbarcheck = -w[a_x*, .]``."""
    kind = DERIVATION_KINDS[kind]
    x = tuple(x) if not isinstance(x, int) else (x,)
    w = rep.w
    if kind == "d":
        u, sign = rep.v[x], 1
    elif kind == "dbar":
        u, sign = dagger(rep.v[x]), -1
    elif kind == "dcheck":
        u, sign = rep.a[x], 1
    else:
        u, sign = rep.adag(x), -1
    return sign * (w @ (u @ f - f @ u))


def conditional_expectation(rep: CarRep, x, f: np.ndarray) -> np.ndarray:
    """Trace-preserving conditional expectation onto the algebra away from x.

    Averages ``U f U*`` over the unitary basis {1, v+v*, i(v-v*), [v, v*]}
    of the algebra generated by v_x, which is the commutant of that algebra.
    """
    v = rep.v[tuple(x) if not isinstance(x, int) else (x,)]
    vd = dagger(v)
    units = [v + vd, 1j * (v - vd), v @ vd - vd @ v]
    return (f + sum(u @ f @ dagger(u) for u in units)) / 4


def D_op(rep: CarRep, x, f: np.ndarray) -> np.ndarray:
    v = rep.v[(x,) if isinstance(x, int) else tuple(x)]
    return dagger(v) @ (v @ f - f @ v)


def Dbar_op(rep: CarRep, x, f: np.ndarray) -> np.ndarray:
    v = rep.v[(x,) if isinstance(x, int) else tuple(x)]
    vd = dagger(v)
    return v @ (vd @ f - f @ vd)


def decomposition_check(rep: CarRep, f: np.ndarray, x=None) -> float:
    """Residual of ``f = E_x f + D_x f + Dbar_x f - (D_x Dbar_x + Dbar_x D_x) f / 2``."""
    sites = rep.volume.sites if x is None else [x]
    worst = 0.0
    for s in sites:
        Df, Dbf = D_op(rep, s, f), Dbar_op(rep, s, f)
        rhs = (conditional_expectation(rep, s, f) + Df + Dbf
               - 0.5 * (D_op(rep, s, Dbf) + Dbar_op(rep, s, Df)))
        worst = max(worst, float(np.max(np.abs(f - rhs))))
    return worst


def fermion_profile(rep: CarRep, f: np.ndarray) -> dict:
    return {x: (operator_norm(derivation(rep, "d", x, f)), operator_norm(derivation(rep, "dbar", x, f)))
            for x in rep.volume}


def fermion_seminorm(rep: CarRep, f: np.ndarray) -> float:
    return float(sum(a + b for a, b in fermion_profile(rep, f).values()))


def pi0_density(rep: CarRep) -> np.ndarray:
    """Density matrix of the free-fermion product state ``e^{h sum n_x} / (1 + e^h)^|V|``."""
    N = sum(rep.number(x) for x in rep.volume)
    rho = np.diag(np.exp(rep.h_field * np.real(np.diag(N)))).astype(complex)
    return rho / (1 + math.exp(rep.h_field)) ** rep.n


def ou_jumps(rep: CarRep, x) -> list[np.ndarray]:
    """Jumps with ``L0_x = D(e^{h/4} v_x*) + D(e^{-h/4} v_x)``, D(l) = l*[., l] + [l*, .]l."""
    v = rep.v[tuple(x)]
    h = rep.h_field
    return [math.exp(h / 4) * dagger(v), math.exp(-h / 4) * v]


def fermi_ou_generator(rep: CarRep) -> FiniteVolumeGenerator:
    jumps = [j for x in rep.volume for j in ou_jumps(rep, x)]
    return FiniteVolumeGenerator(rep.volume, 2, [], jumps,
                                 meta={"model": "fermi-ou", "terms": [], "excluded_iota": []})


def ou_gap(h: float) -> float:
    return 2 * math.cosh(h / 2)


# --- interacting fermion models -------------------------------------------------

@dataclass(frozen=True)
class FermionTerm:
    """Term on ``region`` given in the region's own CAR representation."""

    id: str
    region: Region
    hamiltonian: np.ndarray | None = field(default=None, repr=False)
    jump: np.ndarray | None = field(default=None, repr=False)
    parity: int = 0

    def __post_init__(self):
        rep = build_car(self.region)
        if self.hamiltonian is not None:
            k = np.asarray(self.hamiltonian, dtype=complex)
            if k.shape != (rep.dim, rep.dim):
                raise ValueError(f"hamiltonian of {self.id} has wrong shape")
            if np.max(np.abs(k - dagger(k))) > 1e-12:
                raise ValueError(f"hamiltonian of {self.id} is not self-adjoint")
            if rep.parity_of(k) != 0:
                raise ParityError(f"hamiltonian of {self.id} is not even")
            object.__setattr__(self, "hamiltonian", k)
        if self.jump is not None:
            l = np.asarray(self.jump, dtype=complex)
            if l.shape != (rep.dim, rep.dim):
                raise ValueError(f"jump of {self.id} has wrong shape")
            # l in V_p means w l w = (-1)^p l
            if rep.parity_of(l) != self.parity:
                raise ParityError(f"jump of {self.id} does not have parity {self.parity}")
            object.__setattr__(self, "jump", l)

    def shifted(self, s: Site) -> "FermionTerm":
        return FermionTerm(f"{self.id}@{tuple(s)}", self.region.shifted(s), self.hamiltonian,
                           self.jump, self.parity)


@dataclass(frozen=True)
class FermionModelSpec:
    name: str
    dimension: int
    h_field: float
    terms: tuple = ()
    covariant: bool = True
    range: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if self.range is not None and t.region.diameter() > self.range:
                raise ValueError(f"term {t.id} exceeds the declared range")

    @property
    def gap(self) -> float:
        return ou_gap(self.h_field)

    @property
    def interaction_range(self) -> int:
        if self.range is not None:
            return int(math.ceil(self.range))
        return max((t.region.diameter() for t in self.terms), default=0)

    def terms_containing(self, y) -> list[FermionTerm]:
        y = tuple(y)
        if not self.covariant:
            return [t for t in self.terms if y in t.region]
        out = []
        for t in self.terms:
            for s in t.region:
                out.append(t.shifted(tuple(a - b for a, b in zip(y, s))))
        return out

    def terms_in(self, volume: Region) -> tuple[list, int]:
        if not self.covariant:
            inc = [t for t in self.terms if t.region.issubset(volume)]
            return inc, len(self.terms) - len(inc)
        seen, inc, excl = set(), [], 0
        for t in self.terms:
            for y in volume:
                for s in t.region:
                    tt = t.shifted(tuple(a - b for a, b in zip(y, s)))
                    key = (t.id, tt.region.sites)
                    if key in seen:
                        continue
                    seen.add(key)
                    if tt.region.issubset(volume):
                        inc.append(tt)
                    else:
                        excl += 1
        return inc, excl


def assemble_fermion(spec: FermionModelSpec, volume: Region) -> tuple[FiniteVolumeGenerator, CarRep]:
    """``sum_{x in V} L0_x + sum_{chi(alpha) in V} (i[k, .] + D(l))`` on the volume."""
    rep = build_car(volume, spec.h_field)
    included, n_excl = spec.terms_in(volume)
    hams, jumps = [], []
    for x in volume:
        jumps += ou_jumps(rep, x)
    for t in included:
        src = build_car(t.region)
        if t.hamiltonian is not None:
            hams.append(car_embed(t.hamiltonian, src, rep))
        if t.jump is not None:
            jumps.append(car_embed(t.jump, src, rep, in_v=True))
    manifest = GeneratorManifest(volume.sites, len(included), n_excl, len(jumps), rep.dim,
                                 rep.dim**2, False)
    gen = FiniteVolumeGenerator(volume, 2, hams, jumps, manifest,
                                {"model": spec.name, "terms": included, "excluded_iota": [],
                                 "statistics": "fermion"})
    return gen, rep


def _term_theta(t: FermionTerm) -> dict:
    """``(theta_x(alpha), theta~_x(alpha))`` for x in chi(alpha), without the factor 4."""
    rep = build_car(t.region)
    out = {}
    ln = operator_norm(t.jump) if t.jump is not None else 0.0
    for x in t.region:
        th = tt = 0.0
        if t.hamiltonian is not None:
            th += operator_norm(derivation(rep, "d", x, t.hamiltonian))
            tt += operator_norm(derivation(rep, "dbar", x, t.hamiltonian))
        if t.jump is not None:
            l, ld = t.jump, dagger(t.jump)
            th += 2 * ln * (operator_norm(derivation(rep, "dcheck", x, l))
                            + operator_norm(derivation(rep, "dcheck", x, ld)))
            tt += 2 * ln * (operator_norm(derivation(rep, "dbarcheck", x, l))
                            + operator_norm(derivation(rep, "dbarcheck", x, ld)))
        out[x] = (th, tt)
    return out


def fermion_theta_column(spec: FermionModelSpec, y) -> dict:
    """``x -> (theta_{x,y}, theta~_{x,y})``."""
    col: dict = {}
    for t in spec.terms_containing(y):
        for x, (a, b) in _term_theta(t).items():
            c = col.get(x, (0.0, 0.0))
            col[x] = (c[0] + 4 * a, c[1] + 4 * b)
    return col


def fermion_theta_matrices(spec: FermionModelSpec, volume: Region) -> tuple[np.ndarray, np.ndarray]:
    """Finite-volume theta and theta~ from the terms inside the volume."""
    sites = list(volume)
    idx = {s: i for i, s in enumerate(sites)}
    th = np.zeros((len(sites), len(sites)))
    tt = np.zeros_like(th)
    included, _ = spec.terms_in(volume)
    for t in included:
        per = _term_theta(t)
        for y in t.region:
            for x, (a, b) in per.items():
                th[idx[x], idx[y]] += 4 * a
                tt[idx[x], idx[y]] += 4 * b
    return th, tt


def fermion_C0(spec: FermionModelSpec) -> float:
    sites = [(0,) * spec.dimension] if spec.covariant else \
        sorted({s for t in spec.terms for s in t.region}) or [(0,) * spec.dimension]
    best = 0.0
    for x in sites:
        load = 0.0
        for t in spec.terms_containing(x):
            if t.hamiltonian is not None:
                load += operator_norm(t.hamiltonian)
            if t.jump is not None:
                load += 2 * operator_norm(t.jump) ** 2
        best = max(best, load)
    return spec.gap + 4 * best


def fermion_certificate(spec: FermionModelSpec, xi_grid=XI_GRID) -> CertificateReport:
    """C0, theta, theta~ and ``M = sup_y sum_x (theta + theta~)``; pass iff M < 2 ch(h/2)."""
    gap = spec.gap
    C0 = fermion_C0(spec)
    if spec.covariant:
        col = fermion_theta_column(spec, (0,) * spec.dimension)
        M = sum(a + b for a, b in col.values())
        column = [[list(x), a, b] for x, (a, b) in sorted(col.items())]
    else:
        sites = sorted({s for t in spec.terms for s in t.region})
        M, column = 0.0, []
        for y in sites:
            col = fermion_theta_column(spec, y)
            M = max(M, sum(a + b for a, b in col.values()))
    rep = CertificateReport(model=spec.name, statistics="fermion", N=None, eta=None, lambda1=gap,
                            C0=C0, M=M, margin=gap - M, verdict=bool(gap - M > 0),
                            M_kind="exact" if spec.covariant else "volume estimate",
                            range=spec.interaction_range, theta_column=column,
                            spectral={"gap": gap, "h_field": spec.h_field})
    if rep.verdict:
        rep.convergence_prefactor = C0 / rep.margin
        R = spec.interaction_range
        best = max(((float(xi), zeta_of(float(xi), gap, M, R)) for xi in xi_grid), key=lambda p: p[1])
        rep.xi, rep.zeta = best
        rep.xi_trace = [{"xi": float(xi), "zeta": zeta_of(float(xi), gap, M, R)} for xi in xi_grid]
    return rep


# --- finite-volume checks ---------------------------------------------------------

def derivation_superop(rep: CarRep, kind: str, x) -> np.ndarray:
    """Column-stacked matrix of ``f -> derivation(rep, kind, x, f)``."""
    kind = DERIVATION_KINDS[kind]
    x = tuple(x) if not isinstance(x, int) else (x,)
    u = {"d": rep.v[x], "dbar": dagger(rep.v[x]), "dcheck": rep.a[x], "dbarcheck": rep.adag(x)}[kind]
    sign = 1 if kind in ("d", "dcheck") else -1
    eye = np.eye(rep.dim)
    return sign * (np.kron(eye, rep.w @ u) - np.kron(u.T, rep.w))


def fermion_intertwining(rep: CarRep) -> float:
    """``max ||(d L0 - L0 d + 2 ch(h/2) d) E_ab||`` over sites, both derivations and matrix units."""
    L0 = fermi_ou_generator(rep).heisenberg
    g = ou_gap(rep.h_field)
    worst = 0.0
    for x in rep.volume:
        for kind in ("d", "dbar"):
            Ds = derivation_superop(rep, kind, x)
            R = Ds @ L0 - L0 @ Ds + g * Ds
            for col in range(R.shape[1]):
                worst = max(worst, operator_norm(R[:, col].reshape(rep.dim, rep.dim, order="F")))
    return worst


def _profile_vector(rep: CarRep, f: np.ndarray) -> np.ndarray:
    prof = fermion_profile(rep, f)
    return np.array([prof[x][0] + prof[x][1] for x in rep.volume])


def perturbation_apply(gen: FiniteVolumeGenerator, rep: CarRep, f: np.ndarray) -> np.ndarray:
    """``L1 f`` from the terms kept in the volume."""
    from .operators import apply_super
    from .model import lindblad_superop
    n_ou = 2 * len(rep.volume)
    jumps = gen.jumps[n_ou:]
    out = np.zeros_like(f)
    for k in gen.hamiltonians:
        out += 1j * (k @ f - f @ k)
    for l in jumps:
        ld = dagger(l)
        out += ld @ (f @ l - l @ f) + (ld @ f - f @ ld) @ l
    return out


def lem245_slack(spec: FermionModelSpec, gen: FiniteVolumeGenerator, rep: CarRep,
                 f: np.ndarray) -> float:
    """Worst slack of the commutator bounds for d and dbar against theta, theta~."""
    th, tt = fermion_theta_matrices(spec, rep.volume)
    prof = _profile_vector(rep, f)
    L1f = perturbation_apply(gen, rep, f)
    worst = math.inf
    for i, x in enumerate(rep.volume):
        for kind, mat in (("d", th), ("dbar", tt)):
            lhs = operator_norm(derivation(rep, kind, x, L1f)
                                - perturbation_apply(gen, rep, derivation(rep, kind, x, f)))
            worst = min(worst, float(mat[i] @ prof) - lhs)
    return worst


def stima1_slack(rep: CarRep, f: np.ndarray) -> float:
    """``2 ch(h/2)(||d_x f|| + ||dbar_x f||) - ||L0_x f||`` minimized over x."""
    from .model import lindblad_superop
    g = ou_gap(rep.h_field)
    worst = math.inf
    for x in rep.volume:
        Lx = lindblad_superop(rep.dim, [], ou_jumps(rep, x))
        lhs = operator_norm((Lx @ f.reshape(-1, order="F")).reshape(rep.dim, rep.dim, order="F"))
        a, b = fermion_profile(rep, f)[x]
        worst = min(worst, g * (a + b) - lhs)
    return worst


def uf_slack(rep: CarRep, u: np.ndarray, sites: Sequence, f: np.ndarray) -> float:
    """``4 ||u|| sum_{x in X}(||d_x f|| + ||dbar_x f||) - ||[u, f]||`` for u in V_X."""
    prof = fermion_profile(rep, f)
    rhs = 4 * operator_norm(u) * sum(prof[tuple(x)][0] + prof[tuple(x)][1] for x in sites)
    return rhs - operator_norm(u @ f - f @ u)


def fermion_contraction(spec: FermionModelSpec, gen: FiniteVolumeGenerator, rep: CarRep,
                        cert: CertificateReport, observables: Sequence[np.ndarray], times):
    """``|||P_t f||| <= e^{(M - 2ch) t}|||f|||`` and the pointwise Groenwall bound."""
    import scipy.linalg as sla
    from .dynamics import CheckResult, TOLERANCES, propagator
    th, tt = fermion_theta_matrices(spec, rep.volume)
    K = th + tt
    g = ou_gap(rep.h_field)
    prop = propagator(gen)
    worst = math.inf
    series = []
    p0 = [_profile_vector(rep, f) for f in observables]
    for t in np.asarray(times, dtype=float):
        P = prop(float(t))
        Et = math.exp(-g * t) * sla.expm(t * K)
        for i, (f, w0) in enumerate(zip(observables, p0)):
            ft = (P @ f.reshape(-1, order="F")).reshape(rep.dim, rep.dim, order="F")
            wt = _profile_vector(rep, ft)
            bound = math.exp((cert.M - g) * t) * w0.sum()
            worst = min(worst, bound - wt.sum(), float(np.min(Et @ w0 - wt)))
            if i == 0:
                series.append((float(t), "seminorm", float(wt.sum()), bound))
    tol = TOLERANCES["default"]["contraction"]
    return CheckResult("fermion_contraction", spec.name, len(rep.volume), worst, worst >= tol,
                       {"observables": len(observables)}, series)


def fermion_checks(spec: FermionModelSpec, volume: Region, rng: np.random.Generator | None = None,
                   n_random: int = 5, times=None) -> list:
    """Intertwining, commutator bounds, contraction, convergence and pi0 stationarity."""
    from .dynamics import CheckResult, TOLERANCES, check_convergence, stationary_state
    rng = rng or np.random.default_rng(0)
    times = np.linspace(0, 3, 7) if times is None else times
    cert = fermion_certificate(spec)
    gen, rep = assemble_fermion(spec, volume)
    out = []
    ires = fermion_intertwining(rep)
    out.append(CheckResult("fermion_intertwining", spec.name, len(volume), -ires,
                           ires < TOLERANCES["default"]["intertwining"], {"residual": ires}))
    fs = []
    for _ in range(n_random):
        z = rng.normal(size=(rep.dim, rep.dim)) + 1j * rng.normal(size=(rep.dim, rep.dim))
        fs.append(z)
    s245 = min(lem245_slack(spec, gen, rep, f) for f in fs)
    out.append(CheckResult("fermion_commutator_bound", spec.name, len(volume), s245,
                           s245 >= TOLERANCES["default"]["slack"], {"observables": n_random}))
    s1 = min(stima1_slack(rep, f) for f in fs)
    out.append(CheckResult("fermion_site_generator_bound", spec.name, len(volume), s1,
                           s1 >= TOLERANCES["default"]["slack"], {}))
    ou = fermi_ou_generator(rep)
    pi0 = pi0_density(rep)
    res = float(np.max(np.abs(ou.apply_dual(pi0))))
    out.append(CheckResult("fermion_pi0_stationary", spec.name, len(volume), -res, res < 1e-10,
                           {"residual": res}))
    herm = [(f + dagger(f)) / 2 for f in fs]
    out.append(fermion_contraction(spec, gen, rep, cert, herm, times))
    if cert.verdict:
        R = spec.interaction_range
        sites = [x for x in volume if _boundary_distance(x, volume) > R] or list(volume)
        obs = []
        for x in sites:
            for m in (rep.number(x), rep.a[x] + rep.adag(x)):
                obs.append(m)
        pi = stationary_state(gen)
        out.append(check_convergence(gen, spec.name, cert, obs, times,
                                     lambda m: fermion_seminorm(rep, m), pi))
    return out


def _boundary_distance(x, volume: Region) -> int:
    """Distance from x to the complement of the volume's bounding box."""
    sites = volume.sites
    d = len(x)
    best = math.inf
    for k in range(d):
        lo = min(s[k] for s in sites)
        hi = max(s[k] for s in sites)
        best = min(best, x[k] - lo + 1, hi - x[k] + 1)
    return int(best)


__all__ = ["CarRep", "FermionTerm", "FermionModelSpec", "ParityError", "build_car", "car_embed",
           "derivation", "conditional_expectation", "D_op", "Dbar_op", "decomposition_check",
           "fermion_profile", "fermion_seminorm", "pi0_density", "fermi_ou_generator", "ou_gap",
           "assemble_fermion", "fermion_certificate", "fermion_theta_column",
           "fermion_theta_matrices", "fermion_C0", "ou_jumps", "fermion_checks",
           "fermion_intertwining", "lem245_slack", "stima1_slack", "uf_slack",
           "derivation_superop", "fermion_contraction"]
