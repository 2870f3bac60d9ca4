import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_matrix(rng, dim):
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


def random_hermitian(rng, dim):
    z = random_matrix(rng, dim)
    return (z + z.conj().T) / 2


def random_density(rng, dim, rank=None):
    z = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = z @ z.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results: item number -> list of (ok, detail)
ACCEPTANCE: dict = {}


def record(item: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(item, []).append((bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(f"{d} [{'ok' if ok else 'fail'}]" for ok, d in parts)
        terminalreporter.write_line(f"acceptance {n:2d}: {status}  {details}")
