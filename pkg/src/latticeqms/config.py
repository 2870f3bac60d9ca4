"""JSON model configuration: schema, validation, load and save."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from .fermions import FermionModelSpec, FermionTerm
from .locality import SCHEMA_VERSION
from .model import InteractionTerm, ModelSpec, operator_on
from .operators import LocalOperator, Region, matrix_from_json, matrix_to_json
from .single_site import SingleSiteGenerator


class ConfigError(ValueError):
    """Configuration that violates the schema or is inconsistent."""


_MATRIX = {"type": "array", "items": {"type": "array", "items": {
    "type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}}}
_SITE = {"type": "array", "items": {"type": "integer"}, "minItems": 1}

SCHEMA = {
    "type": "object",
    "required": ["name", "statistics", "dimension", "interactions"],
    "properties": {
        "schema_version": {"type": "string"},
        "name": {"type": "string"},
        "statistics": {"enum": ["qudit", "fermion"]},
        "site_dim": {"type": "integer", "minimum": 2},
        "dimension": {"type": "integer", "minimum": 1},
        "h_field": {"type": "number"},
        "single_site": {
            "type": "object", "required": ["rho", "jumps"],
            "properties": {"rho": _MATRIX, "jumps": {"type": "array", "items": _MATRIX},
                           "basis": {"type": "array", "items": _MATRIX}},
        },
        "interactions": {"type": "array", "items": {
            "type": "object", "required": ["offsets"],
            "properties": {
                "id": {"type": "string"},
                "offsets": {"type": "array", "items": _SITE, "minItems": 1},
                "hamiltonian": {"anyOf": [_MATRIX, {"type": "null"}]},
                "jump": {"anyOf": [_MATRIX, {"type": "null"}]},
                "unperturbed": {"anyOf": [{"type": "null"}, {"type": "array", "minItems": 2,
                                                             "maxItems": 2}]},
                "parity": {"enum": [0, 1]},
            },
            "additionalProperties": False,
        }},
        "covariant": {"type": "boolean"},
        "range": {"anyOf": [{"type": "number", "minimum": 0}, {"type": "null"}]},
        "volume": {"type": "object", "properties": {
            "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            "boundary": {"enum": ["open", "periodic"]}}},
    },
    "allOf": [
        {"if": {"properties": {"statistics": {"const": "qudit"}}},
         "then": {"required": ["site_dim", "single_site"]}},
        {"if": {"properties": {"statistics": {"const": "fermion"}}},
         "then": {"required": ["h_field"]}},
    ],
}


def validate(data: dict) -> None:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"schema violation at {list(exc.absolute_path)}: {exc.message}") from exc


def spec_from_dict(data: dict):
    """Build a ModelSpec or FermionModelSpec from a validated config tree."""
    validate(data)
    try:
        if data["statistics"] == "fermion":
            return _fermion_from_dict(data)
        return _qudit_from_dict(data)
    except ConfigError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _qudit_from_dict(data: dict) -> ModelSpec:
    d = int(data["site_dim"])
    ss = data["single_site"]
    single = SingleSiteGenerator(d, matrix_from_json(ss["rho"]),
                                 tuple(matrix_from_json(j) for j in ss["jumps"]))
    basis = tuple(matrix_from_json(b) for b in ss["basis"]) if ss.get("basis") else None
    terms = []
    for i, t in enumerate(data["interactions"]):
        sites = [tuple(s) for s in t["offsets"]]
        region = Region(sites)
        ham = jump = None
        if t.get("hamiltonian") is not None:
            ham = operator_on(matrix_from_json(t["hamiltonian"]), sites, d)
        if t.get("jump") is not None:
            jump = operator_on(matrix_from_json(t["jump"]), sites, d)
        unp = t.get("unperturbed")
        if unp is not None:
            unp = (tuple(unp[0]), int(unp[1]))
        terms.append(InteractionTerm(t.get("id", f"t{i}"), region, ham, jump, unp))
    return ModelSpec(data["name"], d, int(data["dimension"]), single, terms,
                     covariant=bool(data.get("covariant", True)), range=data.get("range"),
                     basis=basis)


def _fermion_from_dict(data: dict) -> FermionModelSpec:
    terms = []
    for i, t in enumerate(data["interactions"]):
        sites = [tuple(s) for s in t["offsets"]]
        if sites != sorted(sites):
            raise ConfigError("fermion term offsets must be listed in lattice order")
        ham = matrix_from_json(t["hamiltonian"]) if t.get("hamiltonian") is not None else None
        jump = matrix_from_json(t["jump"]) if t.get("jump") is not None else None
        terms.append(FermionTerm(t.get("id", f"t{i}"), Region(sites), ham, jump,
                                 int(t.get("parity", 0))))
    return FermionModelSpec(data["name"], int(data["dimension"]), float(data["h_field"]), terms,
                            covariant=bool(data.get("covariant", True)), range=data.get("range"))


def spec_to_dict(spec, volume: dict | None = None) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "name": spec.name}
    if isinstance(spec, FermionModelSpec):
        out.update(statistics="fermion", dimension=spec.dimension, h_field=spec.h_field,
                   covariant=spec.covariant, range=spec.range)
        out["interactions"] = [
            {"id": t.id, "offsets": [list(s) for s in t.region.sites],
             "hamiltonian": None if t.hamiltonian is None else matrix_to_json(t.hamiltonian),
             "jump": None if t.jump is None else matrix_to_json(t.jump), "parity": t.parity}
            for t in spec.terms]
    else:
        ss = {"rho": matrix_to_json(spec.single_site.rho),
              "jumps": [matrix_to_json(j) for j in spec.single_site.jumps]}
        if spec.basis is not None:
            ss["basis"] = [matrix_to_json(b) for b in spec.basis]
        out.update(statistics="qudit", site_dim=spec.site_dim, dimension=spec.dimension,
                   single_site=ss, covariant=spec.covariant, range=spec.range)
        out["interactions"] = [
            {"id": t.id, "offsets": [list(s) for s in t.region.sites],
             "hamiltonian": None if t.k is None else matrix_to_json(t.k),
             "jump": None if t.l is None else matrix_to_json(t.l),
             "unperturbed": None if t.unperturbed is None else [list(t.unperturbed[0]),
                                                                t.unperturbed[1]]}
            for t in spec.terms]
    if volume is not None:
        out["volume"] = volume
    return out


def atomic_write(path: str | Path, text: str) -> None:
    """Write a file in one rename so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def save(spec, path: str | Path, volume: dict | None = None) -> None:
    atomic_write(path, json.dumps(spec_to_dict(spec, volume), indent=1))


def load_dict(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def load(path: str | Path):
    return spec_from_dict(load_dict(path))


def volume_from_dict(data: dict | None, dimension: int, default: int = 3) -> tuple[Region, bool]:
    vol = (data or {}).get("volume") or {}
    shape = vol.get("shape") or [default] * dimension
    if len(shape) != dimension:
        raise ConfigError("volume shape does not match the lattice dimension")
    return Region.box(shape), vol.get("boundary", "open") == "periodic"


__all__ = ["SCHEMA", "ConfigError", "validate", "spec_from_dict", "spec_to_dict", "save", "load",
           "load_dict", "atomic_write", "volume_from_dict"]
