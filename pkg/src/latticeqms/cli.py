"""Command-line interface: certify, spectrum, evolve, verify, correlations, wasserstein, catalog."""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import catalog
from .config import ConfigError, atomic_write, load_dict, spec_from_dict, volume_from_dict
from .dynamics import (TOLERANCES, BoundNotClaimed, CheckResult, NumericalFailure,
                       check_contraction, check_convergence, check_correlation_decay,
                       check_intertwining, check_propagation, check_resolvent_bound,
                       choi_min_eigenvalue, expm_cross_check, propagator, series_csv,
                       stationary_state)
from .fermions import (FermionModelSpec, assemble_fermion, fermion_certificate, fermion_checks,
                       fermion_seminorm, ou_gap)
from .locality import SCHEMA_VERSION, certify, delta_vector
from .model import assemble, unperturbed_generator
from .operators import LocalOperator, Region, unvec, vec, operator_norm
from .single_site import build_L0, check_gns_selfadjoint
from .wasserstein import check_w_decay, hermitian_traceless_basis, w1_bracket

EXIT_OK, EXIT_CHECK_FAILED, EXIT_SCHEMA, EXIT_NUMERIC = 0, 1, 2, 3

_TOL_KEY = {"resolvent": "slack", "contraction": "contraction", "convergence": "convergence",
            "propagation": "propagation", "correlation": "correlation",
            "wasserstein_decay": "wasserstein", "fermion_contraction": "contraction",
            "fermion_commutator_bound": "slack", "fermion_site_generator_bound": "slack"}


def parse_times(text: str) -> np.ndarray:
    try:
        t0, t1, n = text.split(":")
        return np.linspace(float(t0), float(t1), int(n))
    except ValueError as exc:
        raise ConfigError(f"--times expects t0:t1:n, got {text!r}") from exc


def parse_volume(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(p) for p in text.lower().split("x")]
    except ValueError as exc:
        raise ConfigError(f"--volume expects L or LxM, got {text!r}") from exc


def _parse_value(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def load_model(args) -> tuple[object, dict]:
    """Model spec and the config tree's volume block."""
    if args.builtin:
        params = {}
        for item in args.set or []:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            k, v = item.split("=", 1)
            params[k] = _parse_value(v)
        try:
            return catalog.builtin(args.builtin, **params), {}
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    if not args.config:
        raise ConfigError("give a config file or --builtin NAME")
    data = load_dict(args.config)
    return spec_from_dict(data), data


def resolve_volume(args, spec, data) -> tuple[Region, bool]:
    shape = parse_volume(args.volume)
    if shape is not None:
        if len(shape) == 1 and spec.dimension > 1:
            shape = shape * spec.dimension
        if len(shape) != spec.dimension:
            raise ConfigError("volume shape does not match the lattice dimension")
        return Region.box(shape), bool(args.periodic)
    vol, periodic = volume_from_dict(data, spec.dimension)
    return vol, periodic or bool(args.periodic)


def _emit(args, name: str, payload, csv_text: str | None = None) -> None:
    if args.format == "csv" and csv_text is not None:
        text, ext = csv_text, "csv"
    else:
        text, ext = json.dumps(payload, indent=2, default=_json_default), "json"
    if args.out:
        atomic_write(Path(args.out) / f"{name}.{ext}", text)
    else:
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    return str(o)


def _certificate(spec):
    return fermion_certificate(spec) if isinstance(spec, FermionModelSpec) else certify(spec)


def _random_hermitian(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (z + z.conj().T) / 2


# --- commands --------------------------------------------------------------------

def cmd_certify(args, spec, data) -> int:
    _emit(args, "certificate", _certificate(spec).to_dict())
    return EXIT_OK


def cmd_spectrum(args, spec, data) -> int:
    if isinstance(spec, FermionModelSpec):
        payload = {"statistics": "fermion", "h_field": spec.h_field, "gap": ou_gap(spec.h_field),
                   "schema_version": SCHEMA_VERSION}
    else:
        ok, res = check_gns_selfadjoint(spec.single_site)
        payload = dict(spec.spectral.to_dict(), gns_selfadjoint=ok, gns_residual=res,
                       schema_version=SCHEMA_VERSION)
    _emit(args, "spectrum", payload)
    return EXIT_OK


def _default_observables(spec, rep_or_gen, volume):
    x = volume.sites[len(volume) // 2]
    if isinstance(spec, FermionModelSpec):
        rep = rep_or_gen
        return [("n", rep.number(x)), ("a+a*", rep.a[x] + rep.adag(x))]
    gen = rep_or_gen
    return [(f"basis{k}", gen.embed(LocalOperator.single(b, x)))
            for k, b in enumerate(hermitian_traceless_basis(spec.site_dim))]


def cmd_evolve(args, spec, data) -> int:
    volume, periodic = resolve_volume(args, spec, data)
    times = parse_times(args.times)
    cert = _certificate(spec)
    if isinstance(spec, FermionModelSpec):
        gen, rep = assemble_fermion(spec, volume)
        obs = _default_observables(spec, rep, volume)
        semi = lambda m: fermion_seminorm(rep, m)
    else:
        gen = assemble(spec, volume, periodic)
        obs = _default_observables(spec, gen, volume)
        semi = lambda m: float(delta_vector(m, volume, spec.spectral).sum())
    pi = stationary_state(gen)
    prop = propagator(gen)
    rows = []
    for name, f in obs:
        pif = pi.expectation(f)
        s0 = semi(f)
        for t in times:
            val = operator_norm(unvec(prop(float(t)) @ vec(f), gen.dim) - pif * np.eye(gen.dim))
            bound = (cert.C0 / cert.margin * math.exp(-cert.margin * t) * s0
                     if cert.verdict else float("nan"))
            rows.append((float(t), f"{name}:distance_to_equilibrium", val, bound))
    csv_text = series_csv([CheckResult("evolve", spec.name, len(volume), 0.0, True, {}, rows)])
    payload = {"model": spec.name, "volume": len(volume), "schema_version": SCHEMA_VERSION,
               "series": [dict(zip(("t", "quantity", "value", "bound"), r)) for r in rows]}
    _emit(args, "evolve", payload, csv_text)
    return EXIT_OK


def qudit_checks(spec, volume: Region, periodic: bool, rng, times, jobs: int = 1) -> list:
    cert = certify(spec)
    gen = assemble(spec, volume, periodic)
    sp = spec.spectral
    R = spec.interaction_range
    n = len(volume)
    D = gen.dim
    obs = [gen.embed(LocalOperator(Region(volume.sites[i:i + 2]), spec.site_dim,
                                   _random_hermitian(rng, spec.site_dim ** len(volume.sites[i:i + 2]))))
           for i in range(n)]
    semi = lambda m: float(delta_vector(m, volume, sp).sum())
    x0, x1 = volume.sites[0], volume.sites[-1]
    f1 = LocalOperator(Region([x0]), spec.site_dim, _random_hermitian(rng, spec.site_dim))
    f2 = LocalOperator(Region([x1]), spec.site_dim, _random_hermitian(rng, spec.site_dim))

    def gns():
        ok, res = check_gns_selfadjoint(spec.single_site)
        return CheckResult("gns_selfadjoint", spec.name, 1, -res, ok, {"residual": res})

    def intertwining():
        res = check_intertwining(unperturbed_generator(spec, volume), sp)
        return CheckResult("intertwining", spec.name, n, -res,
                           res < TOLERANCES["default"]["intertwining"], {"residual": res})

    def cross():
        err = expm_cross_check(gen, obs[0], float(times[-1]) / 4 or 0.25)
        return CheckResult("expm_vs_rk4", spec.name, n, -err, err < 1e-6, {"error": err})

    def cp():
        worst = min(choi_min_eigenvalue(gen, t) for t in (0.1, 1.0))
        return CheckResult("complete_positivity", spec.name, n, worst, worst >= -1e-8, {})

    tasks = [gns, intertwining, cross]
    if D <= 64:
        tasks.append(cp)
    tasks.append(lambda: check_resolvent_bound(gen, spec, cert, 1.0, obs))
    tasks.append(lambda: check_contraction(gen, spec, cert, obs, times))
    if n >= 2:
        tasks.append(lambda: check_propagation(gen, spec, cert, f1, f2, times))
    if cert.verdict:
        pi = stationary_state(gen)

        def stationary():
            return CheckResult("stationary_unique", spec.name, n, -pi.residual,
                               pi.degeneracy == 1 and pi.residual < 1e-9,
                               {"degeneracy": pi.degeneracy, "residual": pi.residual})
        inner = [i for i, x in enumerate(volume) if min(x[k] - volume.sites[0][k] for k in range(len(x))) >= R
                 and min(volume.sites[-1][k] - x[k] for k in range(len(x))) >= R] or list(range(n))
        conv_obs = [gen.embed(LocalOperator(Region([volume.sites[i]]), spec.site_dim,
                                            _random_hermitian(rng, spec.site_dim))) for i in inner]
        tasks.append(stationary)
        tasks.append(lambda: check_convergence(gen, spec.name, cert, conv_obs, times, semi, pi))
        if n >= 2:
            tasks.append(lambda: check_correlation_decay(gen, spec.name, cert, [(f1, f2)], semi, pi))
        if spec.covariant and D <= 256:
            mu = np.zeros((D, D), complex)
            mu[0, 0] = 1
            tasks.append(lambda: check_w_decay(gen, spec, cert, mu, times, pi))
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        return list(ex.map(lambda f: f(), tasks))


def run_checks(spec, volume, periodic, seed: int, times, jobs: int = 1) -> list:
    rng = np.random.default_rng(seed)
    if isinstance(spec, FermionModelSpec):
        return fermion_checks(spec, volume, rng, times=times)
    return qudit_checks(spec, volume, periodic, rng, times, jobs)


def apply_profile(results: list, profile: str) -> list:
    tol = TOLERANCES[profile]
    for r in results:
        key = _TOL_KEY.get(r.check)
        if key is not None:
            r.passed = bool(r.worst_slack >= tol[key])
    return results


def cmd_verify(args, spec, data) -> int:
    volume, periodic = resolve_volume(args, spec, data)
    times = parse_times(args.times)
    start = time.perf_counter()
    results = apply_profile(run_checks(spec, volume, periodic, args.seed, times, args.jobs),
                            args.tolerance_profile)
    cert = _certificate(spec)
    payload = {"schema_version": SCHEMA_VERSION, "certificate": cert.to_dict(),
               "checks": [r.to_dict() for r in results],
               "timings": {"total_seconds": time.perf_counter() - start},
               "all_passed": all(r.passed for r in results)}
    _emit(args, "verify", payload, series_csv(results))
    return EXIT_OK if payload["all_passed"] else EXIT_CHECK_FAILED


def cmd_correlations(args, spec, data) -> int:
    volume, periodic = resolve_volume(args, spec, data)
    cert = _certificate(spec)
    rng = np.random.default_rng(args.seed)
    x0 = volume.sites[0]
    if isinstance(spec, FermionModelSpec):
        gen, rep = assemble_fermion(spec, volume)
        pi = stationary_state(gen)
        rows = []
        for x in volume.sites[1:]:
            m1, m2 = rep.number(x0), rep.number(x)
            c = abs(pi.expectation(m1 @ m2) - pi.expectation(m1) * pi.expectation(m2))
            rows.append({"distance": max(abs(a - b) for a, b in zip(x, x0)), "correlation": c})
        _emit(args, "correlations", {"model": spec.name, "rows": rows, "bound": None})
        return EXIT_OK
    gen = assemble(spec, volume, periodic)
    pi = stationary_state(gen)
    a = _random_hermitian(rng, spec.site_dim)
    pairs = [(LocalOperator(Region([x0]), spec.site_dim, a), LocalOperator(Region([x]), spec.site_dim, a))
             for x in volume.sites[1:]]
    semi = lambda m: float(delta_vector(m, volume, spec.spectral).sum())
    try:
        res = check_correlation_decay(gen, spec.name, cert, pairs, semi, pi)
    except BoundNotClaimed as exc:
        _emit(args, "correlations", {"model": spec.name, "verdict": False, "note": str(exc)})
        return EXIT_OK
    res = apply_profile([res], args.tolerance_profile)[0]
    _emit(args, "correlations", res.to_dict(), series_csv([res]))
    return EXIT_OK if res.passed else EXIT_CHECK_FAILED


def cmd_wasserstein(args, spec, data) -> int:
    if isinstance(spec, FermionModelSpec):
        raise ConfigError("the Wasserstein command handles qudit models")
    volume, periodic = resolve_volume(args, spec, data)
    gen = assemble(spec, volume, periodic)
    cert = certify(spec)
    D = gen.dim
    mu = np.zeros((D, D), complex)
    mu[0, 0] = 1
    pi = stationary_state(gen)
    bracket = w1_bracket(mu, (pi.density + pi.density.conj().T) / 2, volume, spec.site_dim)
    payload = {"model": spec.name, "initial_bracket": bracket.to_dict()}
    try:
        res = apply_profile([check_w_decay(gen, spec, cert, mu, parse_times(args.times), pi)],
                            args.tolerance_profile)[0]
    except BoundNotClaimed as exc:
        payload["decay"] = {"claimed": False, "note": str(exc)}
        _emit(args, "wasserstein", payload)
        return EXIT_OK
    payload["decay"] = res.to_dict()
    _emit(args, "wasserstein", payload, series_csv([res]))
    return EXIT_OK if res.passed else EXIT_CHECK_FAILED


def cmd_catalog(args, spec, data) -> int:
    _emit(args, "catalog", {k: {"description": v["description"], "defaults": v["params"]}
                            for k, v in catalog.BUILTINS.items()})
    return EXIT_OK


COMMANDS = {"certify": cmd_certify, "spectrum": cmd_spectrum, "evolve": cmd_evolve,
            "verify": cmd_verify, "correlations": cmd_correlations,
            "wasserstein": cmd_wasserstein, "catalog": cmd_catalog}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latticeqms", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", nargs="?", help="model configuration (JSON)")
    p.add_argument("--builtin", help="use a built-in model instead of a config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="built-in parameter")
    p.add_argument("--volume", help="box extents, e.g. 4 or 3x3")
    p.add_argument("--periodic", action="store_true", help="wrap the box into a torus")
    p.add_argument("--times", default="0:3:12", help="time grid t0:t1:n")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance-profile", choices=sorted(TOLERANCES), default="default")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec, data = (None, {}) if args.command == "catalog" else load_model(args)
        return COMMANDS[args.command](args, spec, data)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
