"""Single-qudit unperturbed generator and its GNS spectral decomposition."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .operators import (StateError, check_density, dagger, dissipator_super,
                        operator_norm, unvec, vec)

GNS_TOL = 1e-9
GAP_FLOOR = 1e-12


class SelfAdjointnessError(ValueError):
    """The generator is not self-adjoint for the GNS inner product of rho."""


@dataclass(frozen=True)
class SingleSiteGenerator:
    site_dim: int
    rho: np.ndarray = field(repr=False)
    jumps: tuple = field(default=(), repr=False)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (self.site_dim, self.site_dim):
            raise ValueError(f"rho has shape {rho.shape}, expected site_dim {self.site_dim}")
        check_density(rho, faithful=True)
        jumps = tuple(np.asarray(j, dtype=complex) for j in self.jumps)
        for j in jumps:
            if j.shape != rho.shape:
                raise ValueError(f"jump of shape {j.shape} does not match site_dim {self.site_dim}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "jumps", jumps)


def build_L0(g: SingleSiteGenerator) -> np.ndarray:
    """Heisenberg superoperator ``sum_j (l_j*[f, l_j] + [l_j*, f] l_j)`` on vec(f)."""
    out = np.zeros((g.site_dim**2, g.site_dim**2), dtype=complex)
    for jump in g.jumps:
        out += dissipator_super(jump)
    return out


def gns_gram(rho: np.ndarray) -> np.ndarray:
    """Gram matrix of the GNS inner product in column-stacked coordinates."""
    return np.kron(np.asarray(rho).T, np.eye(rho.shape[0]))


def check_gns_selfadjoint(g: SingleSiteGenerator, L0: np.ndarray | None = None) -> tuple[bool, float]:
    """Largest |<a, L b> - <L a, b>| over matrix units a, b."""
    if L0 is None:
        L0 = build_L0(g)
    G = gns_gram(g.rho)
    # <a, L b> = a^H G L b over the standard basis
    lhs = G @ L0
    residual = float(np.max(np.abs(lhs - dagger(L0) @ G))) if L0.size else 0.0
    return residual < GNS_TOL, residual


@dataclass(frozen=True)
class SpectralData:
    rho: np.ndarray = field(repr=False)
    basis: tuple = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eta: float = 0.0
    gap: float = 0.0

    @property
    def N(self) -> int:
        return len(self.basis) - 1

    @property
    def site_dim(self) -> int:
        return self.rho.shape[0]

    def coefficient_weights(self) -> np.ndarray:
        """Stack of ``rho e_h*`` so that ``E_{x,h} f = tr_x((rho e_h*) f)``."""
        return np.stack([self.rho @ dagger(e) for e in self.basis])

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """GNS coefficients ``<e_h, f>_rho`` of a single-site operator."""
        return np.array([np.trace(self.rho @ dagger(e) @ f) for e in self.basis])

    def to_dict(self) -> dict:
        return {"eigenvalues": [float(v) for v in self.eigenvalues],
                "eta": float(self.eta), "gap": float(self.gap),
                "basis_norms": [operator_norm(e) for e in self.basis]}


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i in np.argsort(values, kind="stable"):
        if groups and abs(values[i] - values[groups[-1][0]]) <= tol:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return groups


def _row_major_units(dim: int) -> list[np.ndarray]:
    units = []
    for a in range(dim):
        for b in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[a, b] = 1
            units.append(e)
    return units


def spectral_decompose(g: SingleSiteGenerator, L0: np.ndarray | None = None,
                       basis: Sequence[np.ndarray] | None = None) -> SpectralData:
    """GNS-orthonormal eigenbasis of ``-L0`` with ``e_0 = 1``.

    Within a degenerate eigenspace the basis is fixed by Gram-Schmidt of the
    projected matrix units taken in row-major order, with the identity seeded
    first for the kernel.  A user basis (excluding or including the identity)
    replaces the computed one after validation.
    """
    if L0 is None:
        L0 = build_L0(g)
    ok, residual = check_gns_selfadjoint(g, L0)
    if not ok:
        raise SelfAdjointnessError(f"generator is not GNS self-adjoint (residual {residual:.3g})")
    dim = g.site_dim
    if basis is not None:
        return _from_user_basis(g, L0, basis)

    chol = np.linalg.cholesky(gns_gram(g.rho))          # G = C C^H
    ch = dagger(chol)
    # Hermitian operator in the GNS-orthonormal frame y = C^H x
    A = ch @ (-L0) @ np.linalg.inv(ch)
    A = (A + dagger(A)) / 2
    vals, vecs = np.linalg.eigh(A)
    scale = max(1.0, float(np.max(np.abs(vals))))
    groups = _cluster(vals, 1e-8 * scale)

    to_frame = lambda m: ch @ vec(m)
    seeds = _row_major_units(dim)
    out_vals, out_vecs = [], []
    for gi, idx in enumerate(groups):
        V = vecs[:, idx]
        P = V @ dagger(V)
        cands = ([to_frame(np.eye(dim))] if gi == 0 else []) + [to_frame(s) for s in seeds]
        chosen: list[np.ndarray] = []
        for c in cands:
            r = P @ c
            for q in chosen:
                r = r - q * np.vdot(q, r)
            nr = np.linalg.norm(r)
            if nr > 1e-6:
                chosen.append(r / nr)
            if len(chosen) == len(idx):
                break
        lam = float(np.mean(vals[idx]))
        for q in chosen:
            out_vecs.append(q)
            out_vals.append(lam)

    inv_ch = np.linalg.inv(ch)
    mats = [unvec(inv_ch @ y, dim) for y in out_vecs]
    # e_0 must be exactly the identity (up to phase fixed by the seed)
    mats[0] = np.eye(dim, dtype=complex)
    for m in mats[1:]:
        m[np.abs(m) < 1e-14] = 0
    eigenvalues = np.array(out_vals)
    eigenvalues[np.abs(eigenvalues) < GAP_FLOOR] = 0.0
    return _finish(g, tuple(mats), eigenvalues)


def _finish(g: SingleSiteGenerator, basis: tuple, eigenvalues: np.ndarray) -> SpectralData:
    eta = max((operator_norm(e) for e in basis[1:]), default=1.0)
    gap = float(eigenvalues[1]) if len(eigenvalues) > 1 else 0.0
    if gap <= GAP_FLOOR:
        gap = 0.0
    return SpectralData(g.rho, basis, eigenvalues, float(eta), gap)


def _from_user_basis(g: SingleSiteGenerator, L0: np.ndarray, basis) -> SpectralData:
    dim = g.site_dim
    mats = [np.asarray(b, dtype=complex) for b in basis]
    if len(mats) == dim * dim - 1:
        mats = [np.eye(dim, dtype=complex)] + mats
    if len(mats) != dim * dim or not np.allclose(mats[0], np.eye(dim), atol=1e-12):
        raise ValueError("basis must contain N+1 elements starting with the identity")
    G = np.array([[np.trace(g.rho @ dagger(a) @ b) for b in mats] for a in mats])
    if np.max(np.abs(G - np.eye(len(mats)))) > 1e-10:
        raise ValueError("basis is not GNS-orthonormal")
    vals = []
    for e in mats:
        le = -unvec(L0 @ vec(e), dim)
        lam = np.trace(g.rho @ dagger(e) @ le).real
        if np.max(np.abs(le - lam * e)) > 1e-9:
            raise ValueError("basis element is not an eigenvector of -L0")
        vals.append(lam)
    vals = np.array(vals)
    order = np.argsort(vals, kind="stable")
    if order[0] != 0:
        order = np.concatenate([[0], order[order != 0]])
    vals = vals[order]
    vals[np.abs(vals) < GAP_FLOOR] = 0.0
    return _finish(g, tuple(mats[i] for i in order), vals)


def reconstruct(spec: SpectralData, f: np.ndarray) -> np.ndarray:
    """``sum_h lambda_h <e_h, f> e_h``, i.e. ``-L0 f`` from spectral data."""
    c = spec.coefficients(f)
    return sum(lam * ch * e for lam, ch, e in zip(spec.eigenvalues, c, spec.basis))


__all__ = ["SingleSiteGenerator", "SpectralData", "SelfAdjointnessError", "StateError",
           "build_L0", "check_gns_selfadjoint", "spectral_decompose", "gns_gram", "reconstruct"]
