import pytest

from rgnn_compiler import __version__
from rgnn_compiler.cli import main
from rgnn_compiler.graphs import FeaturedGraph, path_graph
from rgnn_compiler.harness import generate_graphs
from rgnn_compiler.utils.io import read_graph, write_graph


@pytest.fixture()
def path2(tmp_path):
    filepath = tmp_path / "path2.txt"
    write_graph(path_graph(2), filepath)
    return str(filepath)


@pytest.fixture()
def single(tmp_path):
    filepath = tmp_path / "single.txt"
    write_graph(FeaturedGraph(["1"]), filepath)
    return str(filepath)


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["run", "graph.txt", "--algo", "quantum"])
    assert err.value.code == 2


def test_refine(path2, capsys):
    assert main(["refine", path2]) == 0
    out = capsys.readouterr().out
    assert out.startswith("rounds 4 classes 1\n# node 0\n")
    assert "# node 1\n" in out
    assert main(["refine", path2, "--node", "1", "--rounds", "0"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("rounds 0 classes 1\n# node 1\n")
    assert "# node 0" not in out


@pytest.mark.parametrize("stage", ["reference", "mpcga", "native"])
def test_run_stages(path2, stage, capsys):
    assert main(["run", path2, "--algo", "degree", "--stage", stage]) == 0
    assert capsys.readouterr().out == "0 1\n1 1\n"


def test_run_rgnn(single, capsys):
    assert main(["run", single, "--algo", "feature-echo", "--mode", "hybrid"]) == 0
    assert capsys.readouterr().out.startswith("0 1\n# T=")


def test_compile_and_run_bundle(single, tmp_path, capsys):
    bundle = tmp_path / "degree.bundle"
    assert main(["compile", "--algo", "degree", "--out", str(bundle)]) == 0
    assert capsys.readouterr().out.startswith("mode=hybrid d=")
    assert bundle.exists()
    assert main(["run", single, "--bundle", str(bundle), "--algo", "degree"]) == 0
    assert capsys.readouterr().out == "0 0\n"


def test_input_errors(path2, tmp_path, capsys):
    assert main(["run", path2]) == 2
    assert "needs --algo" in capsys.readouterr().err
    assert main(["lower", "--algo", "feature-echo"]) == 2
    assert "no MPC-GA" in capsys.readouterr().err
    assert main(["refine", str(tmp_path / "missing.txt")]) == 2
    assert main(["sketch", path2, "--node", "5"]) == 2


def test_verify(capsys):
    argv = ["verify", "--algo", "degree", "--seed", "1", "--count", "3", "--n-max", "3"]
    assert main([*argv, "--stages", "mpcga,native"]) == 0
    assert capsys.readouterr().out.endswith("VERDICT PASS\n")


def test_gen(tmp_path, capsys):
    out = tmp_path / "graphs"
    assert main(["gen", "--seed", "3", "--count", "2", "--out", str(out)]) == 0
    expected = generate_graphs(2, 3)
    for i, g in enumerate(expected):
        assert read_graph(out / f"graph_{i}.txt") == g
    assert main(["gen", "--seed", "3", "--count", "2"]) == 0
    assert capsys.readouterr().out.startswith(write_graph(expected[0]))


def test_verify_gates(capsys):
    argv = ["verify", "--algo", "degree", "--seed", "1", "--count", "2", "--n-max", "2"]
    assert main([*argv, "--stages", "mpcga,full"]) == 1
    assert "VIOLATION graph=0 stage=full MissingProgram" in capsys.readouterr().out
    assert main([*argv, "--stages", "mpcga,full", "--full-n-max", "0"]) == 0
    out = capsys.readouterr().out
    assert "stages=mpcga\n" in out
    assert out.endswith("VERDICT PASS\n")
