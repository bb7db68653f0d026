"""The `xlab` command-line client, run in-process against the service."""
import json
from pathlib import Path

import pytest

from markovlab.cli import build_parser, main
from markovlab.experiments import (ExperimentConfig, run_experiment,
                                   write_artifacts)
from markovlab.graphs import cycle, graph_to_edgelist
from markovlab.spaces import (complete_graph_space, space_to_float,
                              space_to_json)


@pytest.fixture()
def files(tmp_path):
    c4 = tmp_path / "c4.txt"
    c4.write_text(graph_to_edgelist(cycle(4)))
    k2 = tmp_path / "k2.json"
    k2.write_text(space_to_json(complete_graph_space(2)))
    k3f = tmp_path / "k3f.json"
    k3f.write_text(space_to_json(space_to_float(complete_graph_space(3))))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "experiment": "cycle-spectral",
        "params": {"n": 4, "trials": 2, "k_max": 4}, "seed": 3}))
    return tmp_path


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    assert "sphere-k22" in out and "cycle-spectral" in out
    assert len(out.strip().splitlines()) == 6


def test_density_plain_rational(files, capsys):
    rc = main(["density", "--graph", str(files / "c4.txt"),
               "--space", str(files / "k2.json")])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "2"


def test_density_json_output(files, capsys):
    rc = main(["density", "--graph", str(files / "c4.txt"),
               "--space", str(files / "k2.json"), "--json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == {"t": "2", "width": 2, "mode": "rational"}


def test_density_float_decimal(files, capsys):
    rc = main(["density", "--graph", str(files / "c4.txt"),
               "--space", str(files / "k3f.json"), "--normalized"])
    assert rc == 0
    assert float(capsys.readouterr().out) == pytest.approx(9 / 8, abs=1e-12)


def test_density_bigraph(files, capsys):
    big = files / "b22.json"
    big.write_text(json.dumps({"left": 2, "right": 2,
                               "edges": [[0, 0], [0, 1], [1, 0], [1, 1]]}))
    rc = main(["density", "--graph", str(big), "--space",
               str(files / "k2.json"), "--bigraph"])
    assert rc == 0
    assert capsys.readouterr().out.strip() == "2"


def test_density_missing_file(files, capsys):
    rc = main(["density", "--graph", str(files / "absent.txt"),
               "--space", str(files / "k2.json")])
    assert rc == 2
    assert "xlab:" in capsys.readouterr().err


def test_density_service_error_reaches_stderr(files, capsys):
    bad = files / "bad.json"
    bad.write_text(json.dumps({"n": 2, "eta": [["1/2", "1/4"], ["0", "1/4"]],
                               "mode": "rational"}))
    rc = main(["density", "--graph", str(files / "c4.txt"),
               "--space", str(bad)])
    assert rc == 2
    assert "service error" in capsys.readouterr().err


def test_run_writes_artifacts(files, capsys):
    out = files / "out"
    rc = main(["run", str(files / "cfg.json"), "--out", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "[pass]" in stdout and "1/1 assertions passed" in stdout
    assert (out / "cycle-spectral.csv").exists()
    doc = json.loads((out / "summary.json").read_text())
    assert doc["experiment"] == "cycle-spectral"
    assert doc["assertions"][0]["pass"] is True


def test_run_matches_library_artifacts(files, capsys):
    out = files / "out"
    assert main(["run", str(files / "cfg.json"), "--out", str(out)]) == 0
    cfg = ExperimentConfig(experiment="cycle-spectral",
                           params={"n": 4, "trials": 2, "k_max": 4}, seed=3)
    lib = write_artifacts(run_experiment(cfg), files / "lib")
    assert (out / "cycle-spectral.csv").read_bytes() == \
        Path(lib.artifacts[0]).read_bytes()


def test_run_nonempty_dir_guard(files, capsys):
    out = files / "out"
    assert main(["run", str(files / "cfg.json"), "--out", str(out)]) == 0
    assert main(["run", str(files / "cfg.json"), "--out", str(out)]) == 2
    assert "not empty" in capsys.readouterr().err
    assert main(["run", str(files / "cfg.json"), "--out", str(out),
                 "--force"]) == 0


def test_run_bad_config(files, capsys):
    bad = files / "bad-cfg.json"
    bad.write_text('{"experiment": "cycle-spectral", "unknown": 1}')
    rc = main(["run", str(bad), "--out", str(files / "o")])
    assert rc == 2
    assert "bad config" in capsys.readouterr().err


def test_seq_report(files, capsys):
    report = files / "seq.csv"
    rc = main(["seq", "--graph", str(files / "c4.txt"),
               "--space", str(files / "k2.json"),
               "--orders", "3", "--seed", "11", "--report", str(report)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "orders_tested: 5" in out
    assert "max_deviation: 0.0" in out
    lines = report.read_text().splitlines()
    assert lines[0] == "order_index,order,deviation"
    assert len(lines) == 6
    assert lines[1] == "0,0 1 2 3,0.0"


def test_spectrum_plain(files, capsys):
    rc = main(["spectrum", "--space", str(files / "k2.json")])
    assert rc == 0
    values = [float(line) for line in capsys.readouterr().out.split()]
    assert values == pytest.approx([1.0, -1.0], abs=1e-12)


def test_spectrum_json(files, capsys):
    rc = main(["spectrum", "--space", str(files / "k3f.json"), "--json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["eigenvalues"]) == 3
    assert doc["residual"] <= 1e-12


def test_convolution_csv(files, capsys):
    out = files / "conv.csv"
    rc = main(["convolution", "--kmax", "20", "--powers", "2,4",
               "--out", str(out)])
    assert rc == 0
    stdout = capsys.readouterr().out
    assert "power=2" in stdout and "strictly_increasing=True" in stdout
    lines = out.read_text().splitlines()
    assert lines[0] == "k,lambda,lower_bound,ratio"
    assert len(lines) == 22
    assert lines[1].startswith("0,0.5,nan,nan")


def test_convolution_bad_powers(files, capsys):
    rc = main(["convolution", "--kmax", "5", "--powers", "2,x",
               "--out", str(files / "c.csv")])
    assert rc == 2


def test_sphere_k22_csv_deterministic(files, capsys):
    a, b = files / "a.csv", files / "b.csv"
    for target in (a, b):
        rc = main(["sphere-k22", "--d", "3", "--samples", "1000",
                   "--seed", "3", "--out", str(target)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "order,sample_index,inner_product"
    assert len(lines) == 2001
    out = capsys.readouterr().out
    assert "mass_at_one: 1.0" in out


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["frobnicate"])


def test_serve_defaults():
    args = build_parser().parse_args(["serve"])
    assert args.host == "127.0.0.1"
    assert args.port == 8000
