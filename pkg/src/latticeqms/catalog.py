"""Built-in models: XYZ, dissipative spins, classical conjugation and hopping fermions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .fermions import FermionModelSpec, FermionTerm, build_car
from .locality import compute_C0
from .model import InteractionTerm, ModelError, ModelSpec, operator_on
from .operators import (SIGMA_1, SIGMA_2, SIGMA_3, LocalOperator, Region, dagger, embed_matrix,
                        operator_norm)
from .single_site import SingleSiteGenerator

I2 = np.eye(2, dtype=complex)


def _unit(d: int, k: int) -> tuple:
    return tuple(1 if i == k else 0 for i in range(d))


# --- XYZ ------------------------------------------------------------------------

def model_xyz(J1: float, J2: float, J3: float, d: int = 1, name: str | None = None) -> ModelSpec:
    """Site dissipation with jumps sigma_j/sqrt(2), j=1,2, plus the XYZ nearest-neighbour coupling."""
    single = SingleSiteGenerator(2, I2 / 2, (SIGMA_1 / math.sqrt(2), SIGMA_2 / math.sqrt(2)))
    origin = (0,) * d
    terms = []
    for k in range(d):
        e = _unit(d, k)
        region = Region([origin, e])
        for j, (J, s) in enumerate(zip((J1, J2, J3), (SIGMA_1, SIGMA_2, SIGMA_3)), start=1):
            if J == 0:
                continue
            terms.append(InteractionTerm(f"xyz{j}[{k}]", region,
                                         hamiltonian=operator_on(J * np.kron(s, s), [origin, e], 2)))
    return ModelSpec(name or f"xyz(J=({J1},{J2},{J3}),d={d})", 2, d, single, terms, covariant=True,
                     range=1)


def xyz_bounds(J1: float, J2: float, J3: float, d: int = 1) -> dict:
    """Closed-form values quoted for the XYZ model."""
    J = abs(J1) + abs(J2) + abs(J3)
    return {"lambda1": 2.0, "eta": math.sqrt(2), "C0_bound": 2 * math.sqrt(2) * (1 + 2 * d * J),
            "M_bound": 96 * math.sqrt(2) * d * J, "threshold": 1 / (48 * math.sqrt(2) * d), "J": J}


# --- dissipative spins ----------------------------------------------------------

def _diag(p) -> np.ndarray:
    return np.diag(np.asarray(p, dtype=complex))


def _coordinate_descent(obj: Callable, x0: np.ndarray, tol: float = 1e-9, sweeps: int = 200) -> np.ndarray:
    x = np.array(x0, dtype=float)
    prev = obj(x)
    for _ in range(sweeps):
        for i in range(len(x)):
            def line(t, i=i):
                y = x.copy()
                y[i] = t
                return obj(y)
            span = max(1.0, abs(x[i]))
            res = minimize_scalar(line, bracket=(x[i] - span, x[i] + span), method="golden",
                                  tol=tol)
            if res.fun <= line(x[i]):
                x[i] = res.x
        cur = obj(x)
        if prev - cur <= tol:
            break
        prev = cur
    return x


def minimize_over_diagonal(obj: Callable, seed: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, float]:
    """Minimize a convex objective over real (g0, g1).

    Coordinate descent with golden-section line search from the origin and
    from ``seed``, then a Nelder-Mead polish; ties go to the smaller norm.
    """
    cands = []
    for start in (np.zeros(2), np.asarray(seed, dtype=float)):
        x = _coordinate_descent(obj, start, tol)
        pol = minimize(obj, x, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14,
                                                                 "maxiter": 4000})
        if pol.fun <= obj(x):
            x = pol.x
        cands.append((obj(x), float(np.linalg.norm(x)), x))
    best = min(c[0] for c in cands)
    close = [c for c in cands if c[0] <= best + 10 * tol]
    val, _, x = min(close, key=lambda c: c[1])
    return x, float(val)


@dataclass
class SpinDissipative:
    spec: ModelSpec
    a: np.ndarray
    b: np.ndarray
    alpha: tuple
    beta: tuple
    Delta12: float
    Delta3: float
    eta_formula: float
    C0: float
    M_bound: float
    extras: dict = field(default_factory=dict)


def model_spin_dissipative(jumps: Sequence, radius: int = 0, d: int = 1,
                           name: str = "spin-dissipative") -> SpinDissipative:
    """Purely dissipative covariant spin model from jumps l_(0,j), j=1,2,3, on the ball B_R(0).

    ``jumps`` are matrices on the box ``[-R, R]^d`` (lexicographic site order)
    or None for a zero jump.
    """
    ball = Region.box([2 * radius + 1] * d, origin=[-radius] * d)
    n = len(ball)
    origin = (0,) * d
    pos0 = ball.index(origin)
    dim = 2 ** n
    ls = [np.zeros((dim, dim), complex) if l is None else np.asarray(l, dtype=complex) for l in jumps]
    if len(ls) != 3 or any(l.shape != (dim, dim) for l in ls):
        raise ModelError("need three jumps on the ball B_R(0)")

    def at0(m):
        return embed_matrix(m, [pos0], n, 2)

    s1, s2 = at0(SIGMA_1), at0(SIGMA_2)

    def obj12(p):
        g = at0(_diag(p))
        return operator_norm(s1 @ g - ls[0]) + operator_norm(s2 @ g - ls[1])

    def obj3(p):
        return operator_norm(at0(_diag(p)) - ls[2])

    def ls_seed(targets, ops):
        # least squares in Hilbert-Schmidt norm over diag(p) pulled through ops
        cols = []
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1
            g = at0(_diag(e))
            cols.append(np.concatenate([(o @ g).ravel() for o in ops]))
        A = np.stack(cols, axis=1)
        rhs = np.concatenate([t.ravel() for t in targets])
        A2 = np.vstack([A.real, A.imag])
        r2 = np.concatenate([rhs.real, rhs.imag])
        return np.linalg.lstsq(A2, r2, rcond=None)[0]

    pa, D12 = minimize_over_diagonal(obj12, ls_seed(ls[:2], [s1, s2]))
    pb, D3 = minimize_over_diagonal(obj3, ls_seed(ls[2:], [np.eye(dim)]))
    a0, a1 = pa
    b0, b1 = pb
    S = a0**2 + a1**2
    if S <= 1e-12:
        raise ModelError("degenerate minimizer a: alpha_0^2 + alpha_1^2 vanishes")
    a, b = _diag(pa), _diag(pb)
    rho = _diag([a1**2, a0**2]) / S
    single = SingleSiteGenerator(2, rho, (SIGMA_1 @ a, SIGMA_2 @ a, b))
    terms = []
    for j in range(3):
        terms.append(InteractionTerm(f"l{j + 1}", ball, jump=LocalOperator(ball, 2, ls[j]),
                                     unperturbed=(origin, j)))
    spec = ModelSpec(name, 2, d, single, terms, covariant=True, range=2 * radius)
    eta_f = math.sqrt(1 + max(a0**2 / a1**2, a1**2 / a0**2)) if a0 * a1 != 0 else math.inf
    eta = spec.spectral.eta
    M_bound = 72 * eta**2 * (eta**2 + 1) * (2 * radius + 1) ** d * (
        2 * max(abs(a0), abs(a1)) * D12 + 2 * max(abs(b0), abs(b1)) * D3 + D12**2 + D3**2)
    return SpinDissipative(spec, a, b, (float(a0), float(a1)), (float(b0), float(b1)), D12, D3,
                           eta_f, compute_C0(spec), M_bound,
                           {"lambda": 4 * S, "mu": 2 * S + (b0 - b1) ** 2})


def spin_dissipative_eigenvalues(alpha0: float, alpha1: float, beta0: float, beta1: float) -> list:
    S = alpha0**2 + alpha1**2
    mu = 2 * S + (beta0 - beta1) ** 2
    return sorted([0.0, 4 * S, mu, mu])


# --- classical conjugation -------------------------------------------------------

def spins_of(index: int, L: int) -> np.ndarray:
    """Spin configuration of a basis index; spin +1 is the state |0>."""
    bits = [(index >> (L - 1 - i)) & 1 for i in range(L)]
    return 1 - 2 * np.array(bits)


def glauber_rate(beta: float) -> Callable:
    """Heat-bath rate ``(1 - s_x tanh(beta (s_{x-1} + s_{x+1}))) / 2`` on a ring."""
    def c(x: int, s: np.ndarray) -> float:
        L = len(s)
        return 0.5 * (1 - s[x] * math.tanh(beta * (s[(x - 1) % L] + s[(x + 1) % L])))
    return c


def constant_rate(value: float = 1.0) -> Callable:
    return lambda x, s: value


def classical_generator(rate: Callable, L: int) -> np.ndarray:
    """Matrix Q with ``(Q f)(s) = sum_x c_x(s)(f(s^x) - f(s))`` on {-1, 1}^L."""
    n = 2**L
    Q = np.zeros((n, n))
    for i in range(n):
        s = spins_of(i, L)
        for x in range(L):
            c = rate(x, s)
            if c < 0:
                raise ValueError("negative flip rate")
            j = i ^ (1 << (L - 1 - x))
            Q[i, j] += c
            Q[i, i] -= c
    return Q


@dataclass
class ClassicalConjugation:
    jumps: list
    residual: float
    classical: np.ndarray
    L: int


def conjugation_jumps(rate: Callable, L: int, diagonal_jump: Callable | None = None) -> list:
    """``l_{x,j} = sigma_{x,j} iota(sqrt(c_x)) / 2`` for j=1,2 and an optional diagonal ``l_{x,3}``."""
    n = 2**L
    out = []
    for x in range(L):
        g = np.zeros(n)
        for i in range(n):
            c = rate(x, spins_of(i, L))
            if c < 0:
                raise ValueError("negative flip rate")
            g[i] = math.sqrt(c)
        G = np.diag(g).astype(complex)
        for s in (SIGMA_1, SIGMA_2):
            out.append(0.5 * embed_matrix(s, [x], L, 2) @ G)
        if diagonal_jump is not None:
            out.append(np.diag([diagonal_jump(x, spins_of(i, L)) for i in range(n)]).astype(complex))
    return out


def model_classical_conjugation(rate: Callable, L: int,
                                diagonal_jump: Callable | None = None) -> ClassicalConjugation:
    """Jumps realizing a classical spin-flip dynamics on a ring, with the conjugation residual."""
    from .model import lindblad_superop
    from .operators import apply_super
    jumps = conjugation_jumps(rate, L, diagonal_jump)
    n = 2**L
    Lsup = lindblad_superop(n, [], jumps)
    Q = classical_generator(rate, L)
    res = 0.0
    for i in range(n):
        f = np.zeros(n)
        f[i] = 1.0
        lhs = apply_super(Lsup, np.diag(f).astype(complex))
        rhs = np.diag(Q @ f)
        res = max(res, float(np.max(np.abs(lhs - rhs))))
    return ClassicalConjugation(jumps, res, Q, L)


def classical_local_jumps(rate_local: Callable, radius: int = 1) -> list:
    """Template jumps on B_R(0) from a rate depending on the spins in B_R(0) (1-d)."""
    n = 2 * radius + 1
    out = []
    g = np.zeros(2**n)
    for i in range(2**n):
        c = rate_local(spins_of(i, n))
        if c < 0:
            raise ValueError("negative flip rate")
        g[i] = math.sqrt(c)
    G = np.diag(g).astype(complex)
    for s in (SIGMA_1, SIGMA_2):
        out.append(0.5 * embed_matrix(s, [radius], n, 2) @ G)
    out.append(None)
    return out


# --- fermions ----------------------------------------------------------------------

def model_fermion_hopping(J: float, d: int = 1, h: float = 0.0, name: str | None = None) -> FermionModelSpec:
    """Fermi-OU site dissipation plus ``k_{x,y} = J(a_x* a_y + a_y* a_x)`` on nearest neighbours."""
    origin = (0,) * d
    terms = []
    if J != 0:
        for k in range(d):
            e = _unit(d, k)
            rep = build_car(Region([origin, e]))
            ax, ay = rep.a[origin], rep.a[e]
            kmat = J * (dagger(ax) @ ay + dagger(ay) @ ax)
            terms.append(FermionTerm(f"hop[{k}]", rep.volume, hamiltonian=kmat))
    return FermionModelSpec(name or f"fermion-hopping(J={J},d={d},h={h})", d, h, terms,
                            covariant=True, range=1)


def fermion_hopping_bounds(J: float, d: int = 1, h: float = 0.0) -> dict:
    return {"M": 32 * d * abs(J), "gap": 2 * math.cosh(h / 2),
            "threshold": math.cosh(h / 2) / (16 * d)}


# --- random GNS-self-adjoint qudit models -------------------------------------------

def random_gns_single_site(dim: int, rng: np.random.Generator, unitary: bool = True) -> SingleSiteGenerator:
    """Detailed-balance single-site generator with a random faithful diagonal state."""
    p = rng.uniform(0.2, 1.0, size=dim)
    p /= p.sum()
    jumps = []
    for i in range(dim):
        for j in range(i + 1, dim):
            w = rng.uniform(0.3, 1.0)
            e_ij = np.zeros((dim, dim), complex)
            e_ij[i, j] = 1
            jumps.append(math.sqrt(w * p[i]) * e_ij)
            jumps.append(math.sqrt(w * p[j]) * e_ij.T)
    jumps.append(np.diag(rng.normal(size=dim)).astype(complex) * 0.5)
    rho = np.diag(p).astype(complex)
    if unitary:
        z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        U, _ = np.linalg.qr(z)
        rho = U @ rho @ dagger(U)
        jumps = [U @ l @ dagger(U) for l in jumps]
    return SingleSiteGenerator(dim, rho, tuple(jumps))


def random_gns_model(dim: int, rng: np.random.Generator, coupling: float = 0.01,
                     d: int = 1, name: str = "random-gns") -> ModelSpec:
    """Random GNS-self-adjoint single site plus a small random nearest-neighbour Hamiltonian."""
    single = random_gns_single_site(dim, rng)
    origin = (0,) * d
    terms = []
    if coupling:
        for k in range(d):
            e = _unit(d, k)
            z = rng.normal(size=(dim**2, dim**2)) + 1j * rng.normal(size=(dim**2, dim**2))
            kmat = (z + dagger(z)) / 2
            kmat *= coupling / operator_norm(kmat)
            terms.append(InteractionTerm(f"rand[{k}]", Region([origin, e]),
                                         hamiltonian=operator_on(kmat, [origin, e], dim)))
    return ModelSpec(name, dim, d, single, terms, covariant=True, range=1)


BUILTINS = {
    "xyz": {"factory": "model_xyz", "params": {"J1": 0.001, "J2": 0.0, "J3": 0.0, "d": 1},
            "description": "site-dissipative spins with XYZ coupling"},
    "spin-dissipative": {"factory": "model_spin_dissipative",
                         "params": {"alpha0": 0.7, "alpha1": -0.4, "beta0": 0.3, "beta1": -0.2,
                                    "epsilon": 1e-4},
                         "description": "purely dissipative spins, jumps near sigma_j a and b"},
    "classical-glauber": {"factory": "model_classical_conjugation", "params": {"beta": 0.2},
                          "description": "quantum lift of heat-bath Ising dynamics"},
    "fermion-hopping": {"factory": "model_fermion_hopping", "params": {"J": 0.05, "d": 1, "h": 0.0},
                        "description": "Fermi Ornstein-Uhlenbeck plus nearest-neighbour hopping"},
}


def spin_dissipative_example(alpha0=0.7, alpha1=-0.4, beta0=0.3, beta1=-0.2, epsilon=1e-4,
                             seed: int = 0) -> SpinDissipative:
    """Jumps ``sigma_j a`` and ``b`` perturbed by a seeded nearest-neighbour term of size epsilon."""
    rng = np.random.default_rng(seed)
    a, b = _diag([alpha0, alpha1]), _diag([beta0, beta1])
    base = [SIGMA_1 @ a, SIGMA_2 @ a, b]
    jumps = []
    for m in base:
        full = embed_matrix(m, [1], 3, 2)
        if epsilon:
            z = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
            full = full + epsilon * z / operator_norm(z)
        jumps.append(full)
    return model_spin_dissipative(jumps, radius=1, d=1)


def builtin(name: str, **params):
    """Instantiate a built-in model by name; returns a ModelSpec or FermionModelSpec."""
    if name not in BUILTINS:
        raise KeyError(f"unknown built-in {name!r}; known: {sorted(BUILTINS)}")
    p = dict(BUILTINS[name]["params"])
    p.update(params)
    if name == "xyz":
        return model_xyz(float(p["J1"]), float(p["J2"]), float(p["J3"]), int(p["d"]))
    if name == "spin-dissipative":
        return spin_dissipative_example(p["alpha0"], p["alpha1"], p["beta0"], p["beta1"],
                                        p["epsilon"], int(p.get("seed", 0))).spec
    if name == "classical-glauber":
        beta = float(p["beta"])

        def rate(s):
            return 0.5 * (1 - s[1] * math.tanh(beta * (s[0] + s[2])))
        jumps = classical_local_jumps(rate, 1)
        return model_spin_dissipative(jumps, radius=1, d=1, name=f"classical-glauber(beta={beta})").spec
    return model_fermion_hopping(float(p["J"]), int(p["d"]), float(p["h"]))
