import json
import subprocess
import sys

import pytest

from lcarand.cli import RunManifest, main


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_lucas_queries(capsys):
    assert run(capsys, "lucas", "--digits", "53")[1] == "1,0,1,0,1,1\n"
    assert run(capsys, "lucas", "--binomial", "53", "5")[1] == "1\n"
    assert run(capsys, "lucas", "--set", "5")[1] == "0,1,4,5\n"
    assert run(capsys, "lucas", "--split", "53", "4")[1] == "5,3\n"
    assert run(capsys, "lucas", "--zeroblocks", "19")[1] == "1\n2,4\n"
    assert "3,16" in run(capsys, "lucas", "--gaps", "19")[1]
    assert run(capsys, "lucas", "--inJ", "53", "--s0", "7")[1] == "true\n"
    assert run(capsys, "lucas", "--inJ", "63", "--s0", "7")[1] == "false\n"
    assert run(capsys, "lucas", "--p", "3", "--digits", "17")[1] == "2,2,1\n"


def test_lca_commands(capsys):
    assert run(capsys, "lca", "power", "1+x", "--n", "5")[1] == "1+x+x^4+x^5\n"
    assert run(capsys, "lca", "power", "1+x", "--n", "5", "--naive")[1] == "1+x+x^4+x^5\n"
    out = run(capsys, "lca", "classify", "1+x^12+x^13")[1]
    assert out == "bipartite f=12 gamma=1+x\n"
    assert run(capsys, "lca", "classify", "1+x^2+x^3")[1] == "not bipartite\n"
    assert run(capsys, "lca", "srank", "1+x^5+x^6+x^11+x^12+x^13", "--S", "4")[1] == "3\n"


def test_invalid_input_exit_code(capsys):
    code, _, err = run(capsys, "lca", "power", "1+x^^2")
    assert code == 2 and "position 4" in err
    code, _, err = run(capsys, "lucas", "--p", "4", "--digits", "3")
    assert code == 2 and "prime" in err
    code, _, err = run(capsys, "spectrum", "no-such-model")
    assert code == 2
    with pytest.raises(SystemExit) as ei:
        main(["spectrum"])
    assert ei.value.code == 2


def test_resource_cap_exit_code(capsys, tmp_path):
    f = tmp_path / "big.model"
    psi = ",".join(["0", "1"] * (6**4 // 2))
    row = ",".join(["1/6"] * 6)
    f.write_text(f"[quasi]\nhidden = {';'.join([row] * 6)}\npsi = {psi}\nleft = 2\nright = 1\ncap = 100\n")
    code, _, err = run(capsys, "spectrum", str(f), "--jmax", "2")
    assert code == 3 and "resource cap" in err
    code, _, _ = run(capsys, "spectrum", "irdi", "--jmax", "2", "--method", "exact")
    assert code == 0


def test_spectrum_output_and_manifest_header(capsys):
    code, out, err = run(capsys, "spectrum", "bernoulli", "--chi", "sites=0,1", "--jmax", "8", "--eps", "0.05")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("# manifest sha256=") and len(lines[0].split("=")[1]) == 64
    assert lines[1] == "j,re,im,abs,method,stderr"
    assert len(lines) == 2 + 9
    assert "backend: exact" in err and "pass" in err


def test_output_independent_of_threads(capsys):
    base = ["spectrum", "mrf-demo", "--chi", "sites=0,2", "--jmax", "32", "--seed", "4"]
    a = run(capsys, *base, "--threads", "1")[1]
    b = run(capsys, *base, "--threads", "4")[1]
    assert a == b
    mc = ["spectrum", "mrf-demo", "--jmax", "3", "--method", "monte-carlo", "--samples", "5000", "--seed", "9"]
    assert run(capsys, *mc, "--threads", "1")[1] == run(capsys, *mc, "--threads", "3")[1]
    other = run(capsys, *mc[:-1], "10", "--threads", "1")[1]
    assert other.splitlines()[0] != run(capsys, *mc, "--threads", "1")[1].splitlines()[0]


def test_out_file_manifest_and_replay(capsys, tmp_path):
    target = tmp_path / "spec.csv"
    code, _, _ = run(capsys, "spectrum", "even-shift", "--jmax", "16", "--out", str(target), "--threads", "2")
    assert code == 0
    man_path = tmp_path / "spec.csv.manifest.json"
    data = json.loads(man_path.read_text())
    assert data["seed"] == 0 and "--out" not in data["command"] and "--threads" not in data["command"]
    m = RunManifest.load(man_path)
    assert target.read_text().splitlines()[0] == f"# manifest sha256={m.digest}"
    # wall clock is recorded but does not enter the digest
    m.wall_clock = 123.0
    assert m.digest == data["digest"]
    again = tmp_path / "again.csv"
    assert run(capsys, "replay", str(man_path), "--out", str(again))[0] == 0
    assert again.read_text() == target.read_text()


def test_replay_rejects_tampered_manifest(capsys, tmp_path):
    target = tmp_path / "x.csv"
    run(capsys, "lucasmix", "bernoulli", "--hmax", "4", "--out", str(target))
    man = tmp_path / "x.csv.manifest.json"
    data = json.loads(man.read_text())
    data["seed"] = 99
    man.write_text(json.dumps(data))
    assert run(capsys, "replay", str(man))[0] == 2
    assert run(capsys, "replay", str(tmp_path / "missing.json"))[0] == 2


def test_multi_table_output_directory(capsys, tmp_path):
    d = tmp_path / "irdi"
    code, _, _ = run(capsys, "demo", "irdi", "--n-max", "12", "--max-level", "6", "--hmax", "8", "--out", str(d))
    assert code == 0
    assert {p.name for p in d.iterdir()} == {"irdi-entropy.csv", "irdi-lucasmix.csv", "manifest.json"}


def test_other_commands(capsys):
    code, out, _ = run(capsys, "dispersion", "--jmax", "16", "--S", "2")
    assert code == 0 and out.splitlines()[1] == "j,rank"
    code, out, _ = run(capsys, "dispersion", "--jmax", "16", "--densities", "--ladder", "1")
    assert code == 0 and out.splitlines()[1] == "R,horizon,count,density"
    code, out, _ = run(capsys, "randomize", "bernoulli", "--w", "2", "--jmax", "3", "--samples", "10000")
    assert code == 0 and len(out.splitlines()) == 2 + 4
    code, out, _ = run(capsys, "entropy", "mrf-demo", "--max-level", "3")
    assert code == 0 and out.splitlines()[1] == "N,block_bits,bits_per_symbol"
    code, out, _ = run(capsys, "entropy", "irdi", "--min-level", "2", "--max-level", "3")
    assert code == 0 and out.splitlines()[1] == "N,bits_per_symbol"
    code, out, err = run(capsys, "demo", "even-shift", "--nmax", "50")
    assert code == 0 and "0.11111" in err
    code, out, err = run(capsys, "demo", "mrf-bound", "--kmax", "4", "--span", "8")
    assert code == 0 and "observed <= bound" in err


def test_global_flags_before_or_after_subcommand(capsys):
    a = run(capsys, "--p", "3", "lucas", "--digits", "17")[1]
    b = run(capsys, "lucas", "--p", "3", "--digits", "17")[1]
    assert a == b == "2,2,1\n"


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "lcarand", "lucas", "--set", "3"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "0,1,2,3\n"
    r = subprocess.run([sys.executable, "-m", "lcarand", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "0.1.0" in r.stdout
