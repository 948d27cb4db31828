import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from spinquad.benchmark import Verdict
from spinquad.cli import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main
from spinquad.config import SCHEMA, ConfigError, parse
from spinquad.samples import SampleSet
from spinquad.tomography import ReconGrid

BASE = "config.version = 1\nscenario.name = t\nscenario.seed = 42\n"


def write(tmp_path, body, name="c.cfg"):
    p = tmp_path / name
    p.write_text(BASE + body)
    return p


def run(tmp_path, cmd, body, out="out", *extra):
    cfg = write(tmp_path, body)
    return main([cmd, "--config", str(cfg), "--out", str(tmp_path / out), *extra])


def test_parse_types_and_defaults():
    sc = parse(BASE + "# comment\nbenchmark.lambda = 0.5  # trailing\noracle.alphas = 0, 1.5\n")
    assert sc["benchmark.lambda"] == 0.5 and sc["oracle.alphas"] == [0.0, 1.5]
    assert sc["tomography.angles"] == SCHEMA["tomography.angles"][1]
    assert sc.seed == 42 and sc.name == "t" and len(sc.digest) == 64


@pytest.mark.parametrize("body,line,msg", [
    ("nonsense\n", 4, "expected"),
    ("bogus = 1\n", 4, "section"),
    ("state.unknown = 1\n", 4, "unknown key"),
    ("\nstate.kind = cat\n", 5, "one of"),
    ("tomography.shots = 0\n", 4, "positive"),
    ("benchmark.eta = 1\nbenchmark.eta = 2\n", 5, "duplicate"),
])
def test_parse_errors_name_the_line(body, line, msg):
    with pytest.raises(ConfigError, match=msg) as err:
        parse(BASE + body, "f.cfg")
    assert err.value.line == line and f"f.cfg:{line}:" in str(err.value)


def test_seed_is_mandatory():
    with pytest.raises(ConfigError, match="scenario.seed"):
        parse("config.version = 1\nscenario.name = t\n")


def test_version_checked():
    with pytest.raises(ConfigError, match="version"):
        parse("config.version = 2\nscenario.name = t\nscenario.seed = 1\n")


def test_benchmark_reports_bound(tmp_path):
    assert run(tmp_path, "benchmark", "benchmark.eta = 1\nbenchmark.lambda = 1\nbenchmark.samples = 2000\n") == EXIT_OK
    v = Verdict.from_json((tmp_path / "out" / "verdict.json").read_text())
    assert v.F_c == pytest.approx(2 / 3, abs=1e-15) and v.pass_fidelity
    man = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert man["seed"] == 42 and set(man["versions"]) == {"spinquad", "numpy", "scipy", "python"}
    assert man["config_sha256"] == parse((tmp_path / "c.cfg").read_text()).digest


def test_seed_override(tmp_path):
    body = "benchmark.channel = measure_prepare\nbenchmark.samples = 500\n"
    run(tmp_path, "benchmark", body, "a")
    run(tmp_path, "benchmark", body, "b", "--seed", "7")
    a = json.loads((tmp_path / "a" / "verdict.json").read_text())
    b = json.loads((tmp_path / "b" / "verdict.json").read_text())
    assert b["seed"] == 7 and a["F_bar"] != b["F_bar"]


def test_config_error_exit(tmp_path, capsys):
    assert run(tmp_path, "benchmark", "benchmark.lambda = x\n") == EXIT_CONFIG
    assert "c.cfg:4" in capsys.readouterr().err
    assert run(tmp_path, "benchmark", "benchmark.lambda = -1\n") == EXIT_CONFIG
    assert run(tmp_path, "husimi", "state.kind = fock1\n") == EXIT_CONFIG
    assert main(["benchmark", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    assert main(["nope", "--config", "x"]) == EXIT_CONFIG


def test_invariant_exit(tmp_path):
    assert run(tmp_path, "oracle-check", "oracle.cutoff = 3\noracle.alphas = 1\n") == EXIT_INVARIANT
    report = json.loads((tmp_path / "out" / "oracle.json").read_text())
    assert not report["pass"]
    assert (tmp_path / "out" / "manifest.json").exists()


def test_oracle_check_passes(tmp_path):
    assert run(tmp_path, "oracle-check", "oracle.cutoff = 30\noracle.alphas = 0.5\n") == EXIT_OK


def test_folded_search_fixture(tmp_path):
    assert run(tmp_path, "folded-search", "search.template = folded_swap\n") == EXIT_OK
    got = json.loads((tmp_path / "out" / "folded_search.json").read_text())
    fixture = json.loads((Path(__file__).parent / "fixtures" / "folded_search.json").read_text())
    assert got["matches"] == fixture["folded_swap"]["matches"]


def test_scheme_custom_steps(tmp_path):
    body = ("scheme.name = custom\nscheme.steps = Z+, Y+\nscheme.measure = s_z\nscheme.shots = 100\n"
            "state.kind = coherent\nstate.alpha_re = 0.5\n")
    assert run(tmp_path, "scheme", body) == EXIT_OK
    summary = json.loads((tmp_path / "out" / "scheme.json").read_text())
    assert summary["steps"] == ["Z+", "Y+"]
    assert np.array_equal(summary["matrix"], [[1, 0, 0, 1], [0, 0, -1, 0], [0, 1, 1, 0], [-1, 0, 0, 0]])
    s = SampleSet.load(tmp_path / "out" / "samples.csv")
    assert len(s) == 100
    assert run(tmp_path, "scheme", "scheme.name = custom\nscheme.steps = Q+\n", "bad") == EXIT_CONFIG
    assert run(tmp_path, "scheme", "scheme.measure = s_x\n", "bad2") == EXIT_CONFIG


def test_artifacts_round_trip(tmp_path):
    body = "tomography.angles = 10\ntomography.shots = 500\ntomography.grid_n = 16\n"
    assert run(tmp_path, "tomography", body) == EXIT_OK
    out = tmp_path / "out"
    s = SampleSet.load(out / "samples.csv")
    assert s.to_csv() == (out / "samples.csv").read_text()
    w = ReconGrid.load(out / "wigner.csv")
    assert w.to_csv() == (out / "wigner.csv").read_text()
    assert np.array_equal(np.loadtxt(out / "wigner.dat"), w.values)
    man = json.loads((out / "manifest.json").read_text())
    for name, digest in man["artifacts"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
