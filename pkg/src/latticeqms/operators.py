"""Dense operator algebra on finite lattice volumes.

Sites are integer tuples, regions are lexicographically ordered site tuples and
every operator on a region is a dense ``(n+1)^|region|`` square matrix whose
tensor factors follow that order.  Superoperators act on column-stacked
vectorizations, ``vec(A X B) = (B^T kron A) vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np

Site = tuple[int, ...]

ATOL = 1e-12

SIGMA_1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
PAULI = (SIGMA_1, SIGMA_2, SIGMA_3)


class SupportError(ValueError):
    """Raised when an operator's support does not fit the requested region."""


class StateError(ValueError):
    """Raised for matrices that should be density matrices but are not."""


def as_site(x: Iterable[int] | int) -> Site:
    if isinstance(x, (int, np.integer)):
        return (int(x),)
    return tuple(int(c) for c in x)


def site_distance(x: Site, y: Site) -> int:
    """Max-metric distance on the lattice."""
    return max((abs(a - b) for a, b in zip(x, y)), default=0)


def shift_site(x: Site, s: Site) -> Site:
    return tuple(a + b for a, b in zip(x, s))


@dataclass(frozen=True)
class Region:
    """Finite ordered set of lattice sites."""

    sites: tuple[Site, ...]

    def __init__(self, sites: Iterable[Iterable[int] | int]):
        normalized = [as_site(s) for s in sites]
        if len(set(normalized)) != len(normalized):
            raise ValueError(f"duplicate sites in region: {normalized}")
        dims = {len(s) for s in normalized}
        if len(dims) > 1:
            raise ValueError("sites of mixed lattice dimension")
        object.__setattr__(self, "sites", tuple(sorted(normalized)))

    @classmethod
    def box(cls, shape: Sequence[int], origin: Sequence[int] | None = None) -> "Region":
        origin = tuple(origin) if origin is not None else (0,) * len(shape)
        return cls(tuple(o + c for o, c in zip(origin, coords))
                   for coords in product(*(range(n) for n in shape)))

    @classmethod
    def chain(cls, length: int, start: int = 0) -> "Region":
        return cls(range(start, start + length))

    def __len__(self) -> int:
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, x) -> bool:
        return as_site(x) in self.sites

    def index(self, x) -> int:
        try:
            return self.sites.index(as_site(x))
        except ValueError:
            raise SupportError(f"site {x} not in region {self.sites}") from None

    def issubset(self, other: "Region") -> bool:
        return set(self.sites) <= set(other.sites)

    def union(self, other: "Region") -> "Region":
        return Region(set(self.sites) | set(other.sites))

    def minus(self, other: Iterable) -> "Region":
        drop = {as_site(x) for x in other}
        return Region(s for s in self.sites if s not in drop)

    def shifted(self, s: Site) -> "Region":
        return Region(shift_site(x, s) for x in self.sites)

    @property
    def dimension(self) -> int:
        return len(self.sites[0]) if self.sites else 0

    def diameter(self) -> int:
        return max((site_distance(x, y) for x in self.sites for y in self.sites), default=0)

    def distance(self, other: "Region") -> int:
        return min(site_distance(x, y) for x in self.sites for y in other.sites)


# --- vectorization -------------------------------------------------------

def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(matrix).reshape(-1, order="F")


def unvec(vector: np.ndarray, dim: int | None = None) -> np.ndarray:
    vector = np.asarray(vector)
    if dim is None:
        dim = int(round(np.sqrt(vector.size)))
    return vector.reshape((dim, dim), order="F")


def sandwich_super(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Matrix of ``X -> left @ X @ right`` acting on ``vec(X)``."""
    return np.kron(np.asarray(right).T, np.asarray(left))


def bilinear_super(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Superoperator of ``f -> u[f, v] + [u, f]v = 2ufv - uvf - fuv``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    eye = np.eye(u.shape[0], dtype=complex)
    uv = u @ v
    return 2 * np.kron(v.T, u) - np.kron(eye, uv) - np.kron(uv.T, eye)


def dissipator_super(jump: np.ndarray) -> np.ndarray:
    """Heisenberg dissipator ``f -> l*[f, l] + [l*, f]l``."""
    jump = np.asarray(jump, dtype=complex)
    return bilinear_super(jump.conj().T, jump)


def hamiltonian_super(k: np.ndarray) -> np.ndarray:
    """Superoperator of ``f -> i[k, f]``."""
    k = np.asarray(k, dtype=complex)
    eye = np.eye(k.shape[0], dtype=complex)
    return 1j * (np.kron(eye, k) - np.kron(k.T, eye))


def apply_super(superop: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return unvec(superop @ vec(matrix), matrix.shape[0])


# --- tensor embedding -----------------------------------------------------

def embed_matrix(matrix: np.ndarray, positions: Sequence[int], n_sites: int, site_dim: int) -> np.ndarray:
    """Embed an operator acting on ``positions`` (in that order) into ``n_sites`` factors."""
    positions = list(positions)
    k = len(positions)
    if len(set(positions)) != k or any(p < 0 or p >= n_sites for p in positions):
        raise SupportError(f"invalid positions {positions} for {n_sites} sites")
    if matrix.shape != (site_dim**k, site_dim**k):
        raise ValueError(f"matrix shape {matrix.shape} does not match {k} sites of dim {site_dim}")
    rest = [p for p in range(n_sites) if p not in positions]
    full = np.kron(matrix, np.eye(site_dim ** len(rest), dtype=complex))
    if positions == list(range(k)):
        return full
    order = positions + rest
    # axis i of the kron product corresponds to global factor order[i]
    perm = np.argsort(order)
    t = full.reshape((site_dim,) * (2 * n_sites))
    t = t.transpose(list(perm) + [n_sites + p for p in perm])
    return t.reshape(site_dim**n_sites, site_dim**n_sites)


def _move_site_first(matrix: np.ndarray, pos: int, n_sites: int, site_dim: int) -> np.ndarray:
    """Reshape to ``(d, R, d, R)`` with site ``pos`` split off in front."""
    t = matrix.reshape((site_dim,) * (2 * n_sites))
    rest = [p for p in range(n_sites) if p != pos]
    t = t.transpose([pos] + rest + [n_sites + pos] + [n_sites + p for p in rest])
    r = site_dim ** (n_sites - 1)
    return t.reshape(site_dim, r, site_dim, r)


def partial_trace_matrix(matrix: np.ndarray, pos: int, n_sites: int, site_dim: int,
                         weight: np.ndarray | None = None) -> np.ndarray:
    """``tr_x(matrix)`` or, with ``weight``, ``tr_x((weight kron 1) matrix)``."""
    t = _move_site_first(matrix, pos, n_sites, site_dim)
    if weight is None:
        return np.einsum("aras->rs", t)
    return np.einsum("ab,bras->rs", weight, t)


def operator_norm(matrix: np.ndarray) -> float:
    """Largest singular value, via a Hermitian eigensolve."""
    m = np.asarray(matrix)
    if m.size == 0:
        return 0.0
    if np.allclose(m, m.conj().T, atol=1e-14, rtol=0):
        return float(np.max(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))
    return float(np.sqrt(max(np.linalg.eigvalsh(m.conj().T @ m).max(), 0.0)))


def trace_norm(matrix: np.ndarray) -> float:
    return float(np.linalg.svd(np.asarray(matrix), compute_uv=False).sum())


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).conj().T


def is_hermitian(m: np.ndarray, atol: float = ATOL) -> bool:
    m = np.asarray(m)
    return bool(np.allclose(m, m.conj().T, atol=atol, rtol=0))


def check_density(rho: np.ndarray, atol: float = 1e-10, faithful: bool = False) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise StateError("density matrix must be square")
    if not is_hermitian(rho, atol):
        raise StateError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise StateError(f"density matrix has trace {np.trace(rho).real:.6g}")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if faithful and lo <= ATOL:
        raise StateError(f"state is not faithful (min eigenvalue {lo:.3g})")
    if lo < -atol:
        raise StateError(f"density matrix has negative eigenvalue {lo:.3g}")


def gns_inner(rho: np.ndarray, a: np.ndarray, b: np.ndarray) -> complex:
    """GNS inner product ``rho(a* b) = tr(rho a* b)``."""
    check_density(rho, faithful=True)
    return complex(np.trace(rho @ dagger(a) @ b))


# --- local operators --------------------------------------------------------

@dataclass(frozen=True)
class LocalOperator:
    """A dense operator together with its finite support."""

    support: Region
    site_dim: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.site_dim ** len(self.support)
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} != ({dim}, {dim}) for support of size "
                             f"{len(self.support)}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def single(cls, matrix: np.ndarray, site) -> "LocalOperator":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(Region([site]), matrix.shape[0], matrix)

    @classmethod
    def identity(cls, region: Region, site_dim: int) -> "LocalOperator":
        return cls(region, site_dim, np.eye(site_dim ** len(region), dtype=complex))

    @classmethod
    def product(cls, factors: dict, site_dim: int) -> "LocalOperator":
        """Tensor product of single-site matrices keyed by site."""
        region = Region(factors)
        m = np.ones((1, 1), dtype=complex)
        for s in region:
            m = np.kron(m, np.asarray(factors[s] if s in factors else factors[s[0]], dtype=complex))
        return cls(region, site_dim, m)

    def embed(self, target: Region) -> "LocalOperator":
        if not self.support.issubset(target):
            raise SupportError(f"support {self.support.sites} not contained in {target.sites}")
        positions = [target.index(s) for s in self.support]
        return LocalOperator(target, self.site_dim,
                             embed_matrix(self.matrix, positions, len(target), self.site_dim))

    def on(self, target: Region) -> np.ndarray:
        """Embedded matrix on ``target``."""
        return self.embed(target).matrix

    @property
    def adjoint(self) -> "LocalOperator":
        return LocalOperator(self.support, self.site_dim, dagger(self.matrix))

    def _joint(self, other: "LocalOperator"):
        if other.site_dim != self.site_dim:
            raise ValueError("site dimensions differ")
        region = self.support.union(other.support)
        return region, self.on(region), other.on(region)

    def __matmul__(self, other: "LocalOperator") -> "LocalOperator":
        region, a, b = self._joint(other)
        return LocalOperator(region, self.site_dim, a @ b)

    def __add__(self, other: "LocalOperator") -> "LocalOperator":
        region, a, b = self._joint(other)
        return LocalOperator(region, self.site_dim, a + b)

    def __sub__(self, other: "LocalOperator") -> "LocalOperator":
        region, a, b = self._joint(other)
        return LocalOperator(region, self.site_dim, a - b)

    def __mul__(self, c) -> "LocalOperator":
        return LocalOperator(self.support, self.site_dim, c * self.matrix)

    __rmul__ = __mul__

    def shifted(self, s: Site) -> "LocalOperator":
        return LocalOperator(self.support.shifted(s), self.site_dim, self.matrix)

    def norm(self) -> float:
        return operator_norm(self.matrix)

    def trace_norm(self) -> float:
        return trace_norm(self.matrix)

    def partial_trace(self, x, weight: np.ndarray | None = None) -> "LocalOperator":
        pos = self.support.index(x)
        if weight is not None:
            check_density(weight)
        out = partial_trace_matrix(self.matrix, pos, len(self.support), self.site_dim, weight)
        return LocalOperator(self.support.minus([x]), self.site_dim, out)

    def is_hermitian(self, atol: float = ATOL) -> bool:
        return is_hermitian(self.matrix, atol)


def embed(f: LocalOperator, target: Region) -> LocalOperator:
    return f.embed(target)


def partial_trace(f: LocalOperator, x, weight: np.ndarray | None = None) -> LocalOperator:
    return f.partial_trace(x, weight)


def local_commutator(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    return a @ b - b @ a


def local_anticommutator(a: LocalOperator, b: LocalOperator) -> LocalOperator:
    return a @ b + b @ a


# --- matrix (de)serialization --------------------------------------------

def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square nested array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]
