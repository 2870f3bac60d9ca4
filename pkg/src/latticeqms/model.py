"""Interaction families, the unperturbed/perturbation split and finite-volume generators."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .operators import (LocalOperator, Region, Site, SupportError, bilinear_super, dagger,
                        embed_matrix, hamiltonian_super, shift_site)
from .single_site import SingleSiteGenerator, SpectralData, spectral_decompose


class ModelError(ValueError):
    """Inconsistent model definition."""


def operator_on(matrix: np.ndarray, sites: Sequence, site_dim: int) -> LocalOperator:
    """LocalOperator from a matrix whose tensor factors follow ``sites`` as listed."""
    region = Region(sites)
    matrix = np.asarray(matrix, dtype=complex)
    positions = [region.index(s) for s in sites]
    if positions != list(range(len(positions))):
        matrix = embed_matrix(matrix, positions, len(region), site_dim)
    return LocalOperator(region, site_dim, matrix)


@dataclass(frozen=True)
class InteractionTerm:
    """One index alpha: region chi(alpha) with optional k_alpha and l_alpha.

    ``unperturbed`` marks the term as iota((site, j)); its jump is then split
    as ``l = l0_j + l1`` with ``l0_j`` the j-th single-site jump at ``site``.
    """

    id: str
    region: Region
    hamiltonian: LocalOperator | None = None
    jump: LocalOperator | None = None
    unperturbed: tuple[Site, int] | None = None

    def __post_init__(self):
        for name in ("hamiltonian", "jump"):
            op = getattr(self, name)
            if op is None:
                continue
            if not op.support.issubset(self.region):
                raise SupportError(f"{name} of term {self.id} leaves its region")
            if op.support != self.region:
                object.__setattr__(self, name, op.embed(self.region))
        if self.hamiltonian is not None and not self.hamiltonian.is_hermitian(1e-12):
            raise ModelError(f"hamiltonian of term {self.id} is not self-adjoint")
        if self.unperturbed is not None:
            site, j = self.unperturbed
            site = tuple(site)
            if site not in self.region:
                raise ModelError(f"term {self.id}: iota site {site} not in its region")
            object.__setattr__(self, "unperturbed", (site, int(j)))

    @property
    def k(self) -> np.ndarray | None:
        return None if self.hamiltonian is None else self.hamiltonian.matrix

    @property
    def l(self) -> np.ndarray | None:
        return None if self.jump is None else self.jump.matrix

    def is_zero(self, atol: float = 0.0) -> bool:
        return all(m is None or np.max(np.abs(m)) <= atol for m in (self.k, self.l))

    def shifted(self, s: Site, label: str | None = None) -> "InteractionTerm":
        return translate_term(self, s, label)


def translate_term(term: InteractionTerm, s: Site, label: str | None = None) -> InteractionTerm:
    """Same local matrices on the region shifted by ``s``."""
    s = tuple(s)
    unp = None
    if term.unperturbed is not None:
        unp = (shift_site(term.unperturbed[0], s), term.unperturbed[1])
    return InteractionTerm(
        id=label if label is not None else f"{term.id}@{s}",
        region=term.region.shifted(s),
        hamiltonian=None if term.hamiltonian is None else term.hamiltonian.shifted(s),
        jump=None if term.jump is None else term.jump.shifted(s),
        unperturbed=unp,
    )


@dataclass(frozen=True)
class ModelSpec:
    """Interacting qudit model.

    With ``covariant=True`` the ``terms`` are templates and the family is the
    set of all their lattice translates; otherwise ``terms`` is the full
    (finite) family.  Every site x carries the single-site jumps of
    ``single_site``; the term marked ``unperturbed=(x, j)`` is iota((x, j)).
    Missing iota-terms are taken to be exactly the unperturbed jump.
    """

    name: str
    site_dim: int
    dimension: int
    single_site: SingleSiteGenerator
    terms: tuple[InteractionTerm, ...] = ()
    covariant: bool = True
    range: float | None = None
    basis: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.single_site.site_dim != self.site_dim:
            raise ModelError("single-site generator dimension differs from site_dim")
        keys = [t.unperturbed for t in self.terms if t.unperturbed is not None]
        if len(set(keys)) != len(keys):
            raise ModelError("iota is not injective: two terms share an unperturbed index")
        n_jumps = len(self.single_site.jumps)
        for t in self.terms:
            if t.region.dimension != self.dimension:
                raise ModelError(f"term {t.id} lives in dimension {t.region.dimension}")
            if t.unperturbed is not None and not 0 <= t.unperturbed[1] < n_jumps:
                raise ModelError(f"term {t.id}: unperturbed jump index out of range")
            for op in (t.hamiltonian, t.jump):
                if op is not None and op.site_dim != self.site_dim:
                    raise ModelError(f"term {t.id} has wrong site dimension")
            if self.range is not None and t.region.diameter() > self.range and not t.is_zero():
                raise ModelError(f"term {t.id} exceeds the declared range {self.range}")
        if self.covariant:
            origin = (0,) * self.dimension
            for t in self.terms:
                if t.unperturbed is not None and t.unperturbed[0] != origin:
                    raise ModelError("covariant templates must anchor iota-terms at the origin")

    @cached_property
    def spectral(self) -> SpectralData:
        return spectral_decompose(self.single_site, basis=self.basis)

    @property
    def jumps0(self) -> tuple:
        return self.single_site.jumps

    @property
    def interaction_range(self) -> int:
        if self.range is not None:
            return int(np.ceil(self.range))
        return max((t.region.diameter() for t in self.terms), default=0)

    def unperturbed_jump(self, site: Site, j: int) -> LocalOperator:
        return LocalOperator.single(self.jumps0[j], site)

    # -- term enumeration ---------------------------------------------------

    def terms_containing(self, y: Site) -> list[InteractionTerm]:
        """All terms alpha of the (infinite, if covariant) family with y in chi(alpha)."""
        y = tuple(y)
        if not self.covariant:
            return [t for t in self.terms if y in t.region] + self._implicit_at([y], only=[y])
        out = []
        for t in self.terms:
            for s in t.region:
                shift = tuple(a - b for a, b in zip(y, s))
                out.append(translate_term(t, shift))
        out += self._implicit_at([y], only=[y])
        return out

    def _implicit_at(self, sites: Iterable[Site], only=None) -> list[InteractionTerm]:
        """Synthesized iota-terms l = l0 for unperturbed indices with no declared term."""
        declared = {t.unperturbed[1] for t in self.terms if t.unperturbed is not None} \
            if self.covariant else {t.unperturbed for t in self.terms if t.unperturbed is not None}
        out = []
        for x in sites:
            for j in range(len(self.jumps0)):
                key = j if self.covariant else (x, j)
                if key in declared:
                    continue
                out.append(InteractionTerm(f"iota({x},{j})", Region([x]),
                                           jump=self.unperturbed_jump(x, j), unperturbed=(x, j)))
        return out

    def terms_in(self, volume: Region, periodic: Sequence[int] | None = None):
        """Terms with chi(alpha) inside the volume, and excluded iota-terms.

        Returns ``(included, excluded_iota, n_excluded)``.  With ``periodic``
        (box extents) templates are wrapped around the torus instead.
        """
        included, excluded = [], []
        n_excluded = 0
        if self.covariant:
            candidates = []
            for t in self.terms:
                if periodic is not None:
                    anchors = list(volume)
                else:
                    anchors = sorted({tuple(a - b for a, b in zip(y, s0))
                                      for y in volume for s0 in t.region})
                for x in anchors:
                    tt = translate_term(t, x)
                    if periodic is not None:
                        tt = _wrap_term(tt, periodic, self.site_dim)
                    candidates.append((tt, x))
        else:
            candidates = [(t, None) for t in self.terms]
        for tt, _ in candidates:
            if tt is None:
                n_excluded += 1
                continue
            if tt.region.issubset(volume):
                included.append(tt)
            else:
                n_excluded += 1
                if tt.unperturbed is not None and tt.unperturbed[0] in volume:
                    excluded.append(tt)
        included += self._implicit_at(list(volume))
        return included, excluded, n_excluded


def _wrap_term(term: InteractionTerm, shape: Sequence[int], site_dim: int) -> InteractionTerm | None:
    listed = list(term.region)
    wrapped = [tuple(c % n for c, n in zip(s, shape)) for s in listed]
    if len(set(wrapped)) != len(wrapped):
        return None

    def wrap(op):
        if op is None:
            return None
        return operator_on(op.matrix, wrapped, site_dim)

    unp = None
    if term.unperturbed is not None:
        unp = (tuple(c % n for c, n in zip(term.unperturbed[0], shape)), term.unperturbed[1])
    return InteractionTerm(term.id, Region(wrapped), wrap(term.hamiltonian), wrap(term.jump), unp)


# --- superoperator assembly --------------------------------------------------

@dataclass
class GeneratorManifest:
    volume: tuple
    n_terms: int
    n_excluded: int
    n_jumps: int
    hilbert_dim: int
    superop_dim: int
    periodic: bool

    def to_dict(self) -> dict:
        return {"volume": [list(s) for s in self.volume], "terms": self.n_terms,
                "excluded_terms": self.n_excluded, "jumps": self.n_jumps,
                "hilbert_dim": self.hilbert_dim, "superoperator_dim": self.superop_dim,
                "periodic": self.periodic}


class FiniteVolumeGenerator:
    """Lindblad generator on a finite volume as a dense superoperator.

    ``heisenberg`` acts on column-stacked observables; ``schrodinger`` is its
    Hilbert-Schmidt adjoint acting on density matrices.
    """

    def __init__(self, volume: Region, site_dim: int, hamiltonians: list[np.ndarray],
                 jumps: list[np.ndarray], manifest: GeneratorManifest | None = None,
                 meta: dict | None = None):
        self.volume = volume
        self.site_dim = site_dim
        self.dim = site_dim ** len(volume)
        self.hamiltonians = hamiltonians
        self.jumps = jumps
        self.manifest = manifest
        self.meta = meta or {}
        self._heis = None

    @property
    def heisenberg(self) -> np.ndarray:
        if self._heis is None:
            self._heis = lindblad_superop(self.dim, self.hamiltonians, self.jumps)
        return self._heis

    @property
    def schrodinger(self) -> np.ndarray:
        return self.heisenberg.conj().T

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Heisenberg action computed directly from the operators."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k in self.hamiltonians:
            out += 1j * (k @ f - f @ k)
        for l in self.jumps:
            ld = dagger(l)
            out += 2 * ld @ f @ l - ld @ l @ f - f @ ld @ l
        return out

    def apply_dual(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for k in self.hamiltonians:
            out += -1j * (k @ rho - rho @ k)
        for l in self.jumps:
            ld = dagger(l)
            out += 2 * l @ rho @ ld - ld @ l @ rho - rho @ ld @ l
        return out

    def embed(self, f: LocalOperator) -> np.ndarray:
        return f.on(self.volume)


def lindblad_superop(dim: int, hamiltonians: Sequence[np.ndarray], jumps: Sequence[np.ndarray]) -> np.ndarray:
    """``i[K, .] + sum_l (l*[., l] + [l*, .] l)`` on vec, with aggregated one-sided parts."""
    eye = np.eye(dim, dtype=complex)
    K = sum(hamiltonians, np.zeros((dim, dim), dtype=complex))
    Q = sum((dagger(l) @ l for l in jumps), np.zeros((dim, dim), dtype=complex))
    out = np.kron(eye, 1j * K - Q)
    out -= np.kron((1j * K + Q).T, eye)
    for l in jumps:
        out += 2 * np.kron(l.T, dagger(l))
    return out


def _effective(spec: ModelSpec, volume: Region, periodic=None):
    included, excluded, n_excl = spec.terms_in(volume, periodic)
    hams, jumps = [], []
    for t in included:
        if t.hamiltonian is not None:
            hams.append(t.hamiltonian.on(volume))
        if t.jump is not None:
            jumps.append(t.jump.on(volume))
    for t in excluded:
        x, j = t.unperturbed
        jumps.append(spec.unperturbed_jump(x, j).on(volume))
    return included, excluded, n_excl, hams, jumps


def assemble(spec: ModelSpec, volume: Region, periodic: bool = False,
             shape: Sequence[int] | None = None) -> FiniteVolumeGenerator:
    """Finite-volume generator: unperturbed jumps on every site plus L1 of terms inside."""
    wrap = None
    if periodic:
        if not spec.covariant:
            raise ModelError("periodic boundary requires a covariant model")
        if shape is None:
            raise ModelError("periodic boundary needs the box shape")
        wrap = tuple(shape)
    included, excluded, n_excl, hams, jumps = _effective(spec, volume, wrap)
    manifest = GeneratorManifest(volume.sites, len(included), n_excl, len(jumps),
                                 spec.site_dim ** len(volume), spec.site_dim ** (2 * len(volume)),
                                 periodic)
    return FiniteVolumeGenerator(volume, spec.site_dim, hams, jumps, manifest,
                                 {"model": spec.name, "terms": included, "excluded_iota": excluded})


def split_perturbation(spec: ModelSpec, volume: Region, periodic: bool = False,
                       shape: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return superoperators ``(L0_total, L1_total)`` on the volume."""
    gen = assemble(spec, volume, periodic, shape)
    unperturbed = unperturbed_generator(spec, volume)
    L0 = unperturbed.heisenberg
    # assemble L1 from its defining case split rather than by subtraction
    dim = gen.dim
    L1 = np.zeros_like(L0)
    for t in gen.meta["terms"]:
        if t.hamiltonian is not None:
            L1 += hamiltonian_super(t.hamiltonian.on(volume))
        if t.unperturbed is not None:
            x, j = t.unperturbed
            l0 = spec.unperturbed_jump(x, j).on(volume)
            lf = t.jump.on(volume) if t.jump is not None else np.zeros((dim, dim), complex)
            l1 = lf - l0
            L1 += bilinear_super(dagger(l0), l1) + bilinear_super(dagger(l1), l0) \
                + bilinear_super(dagger(l1), l1)
        elif t.jump is not None:
            lf = t.jump.on(volume)
            L1 += bilinear_super(dagger(lf), lf)
    return L0, L1


def unperturbed_generator(spec: ModelSpec, volume: Region) -> FiniteVolumeGenerator:
    jumps = [spec.unperturbed_jump(x, j).on(volume)
             for x in volume for j in range(len(spec.jumps0))]
    return FiniteVolumeGenerator(volume, spec.site_dim, [], jumps,
                                 meta={"model": spec.name + ":unperturbed", "terms": []})


def perturbation_terms(spec: ModelSpec, term: InteractionTerm):
    """``(k, [(u, v), ...])`` with ``L1_alpha = i[k, .] + sum B(u, v)`` on the term region.

    For an iota-term the pairs are (l0*, l1), (l1*, l0), (l1*, l1); otherwise
    the single pair (l*, l).
    """
    region = term.region
    dim = spec.site_dim ** len(region)
    k = term.k
    if term.unperturbed is not None:
        x, j = term.unperturbed
        l0 = spec.unperturbed_jump(x, j).on(region)
        lf = term.l if term.l is not None else np.zeros((dim, dim), complex)
        l1 = lf - l0
        pairs = [(dagger(l0), l1), (dagger(l1), l0), (dagger(l1), l1)]
    elif term.l is not None:
        pairs = [(dagger(term.l), term.l)]
    else:
        pairs = []
    return k, pairs


def model_manifest(spec: ModelSpec) -> dict:
    return {"name": spec.name, "site_dim": spec.site_dim, "dimension": spec.dimension,
            "covariant": spec.covariant, "range": spec.interaction_range,
            "templates": len(spec.terms), "single_site_jumps": len(spec.jumps0)}


__all__ = ["InteractionTerm", "ModelSpec", "FiniteVolumeGenerator", "GeneratorManifest",
           "ModelError", "assemble", "split_perturbation", "translate_term", "operator_on",
           "unperturbed_generator", "perturbation_terms", "lindblad_superop", "model_manifest"]
