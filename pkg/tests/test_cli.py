import numpy as np
import pytest

from heatsym import cli
from heatsym.io import read_solution
from heatsym.meshes import Layer


def test_list_models(capsys):
    assert cli.main(["list-models"]) == 0
    out = capsys.readouterr().out
    assert "K=u^s,Q=0" in out and "SH54E" in out


def test_run_constant(tmp_path):
    out = tmp_path / "c.csv"
    code = cli.main(["run", "--model", "K=e^u,Q=0", "--scheme", "SH21", "--ic", "constant(c=2)",
                     "--nodes", "11", "--steps", "5", "--T", "0.1", "-o", str(out)])
    assert code == 0
    layers = read_solution(out)
    assert len(layers) == 6
    assert np.allclose(layers[-1].u, 2.0)


def test_run_moving_kernel(tmp_path):
    out = tmp_path / "k.csv"
    assert cli.main(["run", "--model", "K=1,Q=0", "--scheme", "SH54E", "--boundary", "exact",
                     "--T", "1", "--steps", "20", "--nodes", "41", "-o", str(out)]) == 0
    last = read_solution(out)[-1]
    assert np.allclose(last.x, 2 * np.linspace(-10, 10, 41), atol=1e-9)
    assert np.max(np.abs(last.u - np.exp(-last.x ** 2 / 8) / np.sqrt(2))) < 1e-9


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "o.csv"
    cfg.write_text("# constant run\nmodel = K=e^u,Q=0\nscheme = SH21\nic = constant(c=3)\n"
                   f"nodes = 7\nsteps = 4\nT = 0.1\noutput = {out}\n")
    assert cli.main(["run", "--config", str(cfg)]) == 0
    assert len(read_solution(out)) == 5
    assert cli.main(["run", "--config", str(cfg), "--steps", "2"]) == 0
    assert len(read_solution(out)) == 3


def test_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model = K=1,Q=0\nwibble = 3\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2
    cfg.write_text("no equals sign here\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2


@pytest.mark.parametrize("argv", [
    ["run", "--scheme", "SH21"],
    ["run", "--model", "K=1,Q=0", "--scheme", "SH99"],
    ["run", "--model", "K=1,Q=0", "--scheme", "SH21", "--nodes", "2"],
    ["run", "--model", "K=q,Q=0", "--scheme", "SH11"],
    ["run", "--model", "K=1,Q=0", "--scheme", "SH54E", "--ic", "sawtooth()"],
    ["run", "--model", "K=any,Q=any", "--scheme", "SH11", "--K", "__import__('os')"],
    ["audit", "--model", "K=1,Q=0", "--generators", "X99"],
    ["audit"],
    ["bogus-command"],
])
def test_config_exit_code(argv):
    assert cli.main(argv) == 2


def test_solver_failure_exit_code():
    code = cli.main(["run", "--model", "K=1,Q=0", "--scheme", "EQ55A", "--x-left", "0",
                     "--x-right", "1", "--nodes", "21", "--T", "5", "--steps", "200",
                     "--ic", "hat(height=1,width=0.1,base=0)", "-o", "/dev/null"])
    assert code == 3


def test_audit_pass_and_fail(capsys):
    assert cli.main(["audit", "--model", "K=u^s,Q=0", "--sigma", "2", "--scheme", "SH31",
                     "--trials", "20"]) == 0
    assert "0 above" in capsys.readouterr().out
    assert cli.main(["audit", "--model", "K=1,Q=0", "--scheme", "EQ55A",
                     "--generators", "X3", "--trials", "20"]) == 4


def test_audit_arbitrary_k(capsys):
    assert cli.main(["audit", "--model", "K=any,Q=0", "--K", "u**2", "--trials", "10"]) == 0


def test_seed_env_and_flag(monkeypatch, capsys):
    monkeypatch.setenv("HEATSYM_SEED", "5")
    assert cli.resolve_seed(None) == 5
    assert cli.resolve_seed(9) == 9
    argv = ["audit", "--model", "K=1,Q=0", "--scheme", "SH54E", "--trials", "5"]
    cli.main(argv)
    a = capsys.readouterr().out
    cli.main(argv + ["--seed", "5"])
    assert capsys.readouterr().out == a
    monkeypatch.setenv("HEATSYM_SEED", "x")
    assert cli.main(argv) == 2
    monkeypatch.delenv("HEATSYM_SEED")
    assert cli.resolve_seed(None) == 0


def test_convergence(tmp_path):
    out = tmp_path / "conv.csv"
    assert cli.main(["convergence", "--scheme", "EQ55A", "--refinements", "2",
                     "-o", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "h,tau,error,order" and len(rows) == 4
    assert abs(float(rows[-1].split(",")[-1]) - 2) < 0.2
    assert cli.main(["convergence", "--refinements", "0"]) == 2
    assert cli.main(["convergence", "--scheme", "SH21"]) == 2


def test_convergence_transformed_reference(tmp_path):
    out = tmp_path / "conv.csv"
    assert cli.main(["convergence", "--reference", "power-transformed", "--refinements", "2",
                     "-o", str(out)]) == 0


def test_transform_roundtrip(tmp_path):
    src, img, back = (tmp_path / n for n in ("s.csv", "i.csv", "b.csv"))
    assert cli.main(["run", "--model", "K=u^s,Q=d*u", "--sigma", "1", "--delta", "1",
                     "--scheme", "SH32", "--ic", "hat(base=1,height=0.5,width=2)",
                     "--x-left", "-2", "--x-right", "2", "--nodes", "21", "--T", "0.05",
                     "--steps", "10", "-o", str(src)]) == 0
    assert cli.main(["transform", "--transform", "CH32", "--delta", "1", "--sigma", "1",
                     "--input", str(src), "-o", str(img)]) == 0
    assert cli.main(["transform", "--transform", "CH32", "--delta", "1", "--sigma", "1",
                     "--inverse", "--input", str(img), "-o", str(back)]) == 0
    for a, b in zip(read_solution(src), read_solution(back)):
        assert abs(a.t - b.t) < 1e-12
        assert np.allclose(a.u, b.u, rtol=1e-12)


def test_transform_outside_domain(tmp_path):
    src = tmp_path / "s.csv"
    from heatsym.io import write_solution
    # the tangent map is only defined on |x| < sqrt(3) pi / 2
    write_solution(src, [Layer(0.0, np.linspace(0, 3, 3), np.ones(3))])
    assert cli.main(["transform", "--transform", "CH44B", "--input", str(src),
                     "-o", str(tmp_path / "o.csv")]) == 2
    assert cli.main(["transform", "--transform", "CH32", "--input", str(tmp_path / "nope.csv")]) == 2


def test_conserve_check(tmp_path, capsys):
    out = tmp_path / "m.csv"
    assert cli.main(["conserve-check", "--model", "K=u^s,Q=0", "--sigma", "1",
                     "--ic", "hat(base=1,height=1,width=1)", "--x-left", "-3",
                     "--x-right", "3", "--nodes", "31", "--steps", "20", "--T", "0.05",
                     "-o", str(out)]) == 0
    assert "FirstMoment" in capsys.readouterr().err
    sol = tmp_path / "sol.csv"
    cli.main(["run", "--model", "K=u^s,Q=0", "--sigma", "1", "--scheme", "SH31N",
              "--ic", "hat(base=1,height=1,width=1)", "--x-left", "-3", "--x-right", "3",
              "--nodes", "31", "--steps", "20", "--T", "0.05", "-o", str(sol)])
    assert cli.main(["conserve-check", "--model", "K=u^s,Q=0", "--sigma", "1",
                     "--input", str(sol), "--law", "mass", "-o", str(out)]) == 0
