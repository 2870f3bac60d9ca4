import json

import numpy as np
import pytest

from latticeqms.catalog import builtin
from latticeqms.cli import main
from latticeqms.config import ConfigError, load, save, spec_from_dict, spec_to_dict, validate
from latticeqms.fermions import fermion_certificate, FermionModelSpec
from latticeqms.locality import certify


def cert_of(spec):
    c = fermion_certificate(spec) if isinstance(spec, FermionModelSpec) else certify(spec)
    return c.to_dict()


@pytest.mark.parametrize("name", ["xyz", "spin-dissipative", "classical-glauber", "fermion-hopping"])
def test_round_trip_preserves_certificate(name, tmp_path):
    spec = builtin(name)
    path = tmp_path / "model.json"
    save(spec, path, volume={"shape": [3], "boundary": "open"})
    again = load(path)
    assert cert_of(again) == cert_of(spec)
    assert spec_to_dict(again) == spec_to_dict(spec)


def test_schema_violations():
    data = spec_to_dict(builtin("xyz"))
    bad = dict(data, statistics="boson")
    with pytest.raises(ConfigError):
        validate(bad)
    missing = {k: v for k, v in data.items() if k != "single_site"}
    with pytest.raises(ConfigError):
        spec_from_dict(missing)
    extra = json.loads(json.dumps(data))
    extra["interactions"][0]["colour"] = "red"
    with pytest.raises(ConfigError):
        spec_from_dict(extra)


def test_inconsistent_config_is_a_config_error():
    data = spec_to_dict(builtin("xyz"))
    data["single_site"]["rho"] = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    with pytest.raises(ConfigError):
        spec_from_dict(data)


def test_cli_certify_and_catalog(capsys):
    assert main(["certify", "--builtin", "xyz", "--set", "J1=0.002"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] is True and out["lambda1"] == pytest.approx(2.0)
    assert main(["certify", "--builtin", "xyz", "--set", "J1=1"]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] is False
    assert main(["catalog"]) == 0
    assert "fermion-hopping" in json.loads(capsys.readouterr().out)


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "statistics": "qudit"}))
    assert main(["certify", str(bad)]) == 2
    assert main(["certify", str(tmp_path / "missing.json")]) == 2
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["certify", str(tmp_path / "junk.json")]) == 2
    assert main(["certify", "--builtin", "nope"]) == 2
    assert main(["evolve", "--builtin", "xyz", "--times", "bad"]) == 2
    capsys.readouterr()


def test_cli_verify_is_deterministic(tmp_path, capsys):
    args = ["verify", "--builtin", "fermion-hopping", "--volume", "3", "--times", "0:2:5"]
    assert main(args) == 0
    first = json.loads(capsys.readouterr().out)
    assert main(args) == 0
    second = json.loads(capsys.readouterr().out)
    first.pop("timings"), second.pop("timings")
    assert first == second
    assert first["all_passed"]


def test_cli_verify_qudit_to_directory(tmp_path):
    out = tmp_path / "res"
    code = main(["verify", "--builtin", "xyz", "--set", "J1=0.002", "--volume", "3",
                 "--times", "0:2:5", "--out", str(out), "--jobs", "2"])
    assert code == 0
    data = json.loads((out / "verify.json").read_text())
    names = {c["check"] for c in data["checks"]}
    assert {"intertwining", "contraction", "convergence", "complete_positivity"} <= names


def test_cli_csv_output(tmp_path):
    out = tmp_path / "csv"
    assert main(["evolve", "--builtin", "xyz", "--set", "J1=0.002", "--volume", "2",
                 "--format", "csv", "--out", str(out)]) == 0
    files = list(out.glob("*.csv"))
    assert files
    assert files[0].read_text().splitlines()[0] == "t,quantity,value,bound"


def test_cli_config_file_verify(tmp_path, capsys):
    path = tmp_path / "xyz.json"
    save(builtin("xyz", J1=0.002), path, volume={"shape": [2]})
    assert main(["verify", str(path), "--times", "0:1:3"]) == 0
    assert json.loads(capsys.readouterr().out)["checks"][0]["volume"] in (1, 2)


def test_cli_spectrum_and_wasserstein(capsys):
    assert main(["spectrum", "--builtin", "xyz"]) == 0
    capsys.readouterr()
    assert main(["wasserstein", "--builtin", "xyz", "--set", "J1=0.002", "--volume", "2",
                 "--times", "0:2:4"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["initial_bracket"]["lower"] <= payload["initial_bracket"]["upper"]


def test_cli_correlations(capsys):
    assert main(["correlations", "--builtin", "xyz", "--set", "J1=0.002", "--volume", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["pass"] is True


def test_strict_profile_changes_nothing_for_passing_model(capsys):
    assert main(["verify", "--builtin", "fermion-hopping", "--volume", "2", "--times", "0:1:3",
                 "--tolerance-profile", "strict"]) == 0
    capsys.readouterr()
