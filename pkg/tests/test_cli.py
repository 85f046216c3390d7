import subprocess
import sys

import pytest

from ctmcgsa.cli import cli_main


def run(*argv):
    return cli_main([str(a) for a in argv])


def read_all(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.is_file()}


def header(path):
    return path.read_text().splitlines()[0]


def test_simulate_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("simulate", "--config", "sir", "--seed", 7, "--out-dir", a) == 0
    assert run("simulate", "--config", "sir", "--seed", 7, "--out-dir", b) == 0
    assert read_all(a) == read_all(b)
    assert header(a / "trajectory_mnrm.csv") == "time,S,I,R"


def test_simulate_seed_changes_values_not_schema(tmp_path):
    run("simulate", "--config", "sir", "--seed", 7, "--out-dir", tmp_path / "a")
    run("simulate", "--config", "sir", "--seed", 8, "--out-dir", tmp_path / "b")
    a, b = tmp_path / "a" / "trajectory_mnrm.csv", tmp_path / "b" / "trajectory_mnrm.csv"
    assert a.read_bytes() != b.read_bytes()
    assert header(a) == header(b)


def test_simulate_many_runs_and_plots(tmp_path):
    assert run(
        "simulate", "--config", "seiarhd", "--runs", 30, "--representation", "first-reaction",
        "--representation", "mnrm", "--out-dir", tmp_path,
    ) == 0
    runs = tmp_path / "runs_mnrm.csv"
    assert header(runs) == "run,extinction_time,n_jumps,S,E,A,I,H,R,D"
    assert len(runs.read_text().splitlines()) == 31
    paths = tmp_path / "paths_first-reaction.csv"
    assert len(paths.read_text().splitlines()) == 1 + 30 * 121
    assert run("plot", "--kind", "fan", paths, "--out-dir", tmp_path) == 0
    assert (tmp_path / "fan_I_first-reaction.svg").exists()
    assert run("plot", "--kind", "extinction", runs, tmp_path / "runs_first-reaction.csv", "--out-dir", tmp_path) == 0
    assert (tmp_path / "extinction.svg").read_text().startswith("<svg")


def test_simulate_param_override(tmp_path):
    assert run("simulate", "--config", "sir", "--param", "beta=0", "--out-dir", tmp_path) == 0
    rows = (tmp_path / "trajectory_mnrm.csv").read_text().splitlines()
    # without infection only the 5 recoveries happen
    assert len(rows) == 1 + 1 + 5
    assert run("simulate", "--config", "sir", "--param", "delta=1", "--out-dir", tmp_path) == 2
    assert run("simulate", "--config", "sir", "--param", "beta", "--out-dir", tmp_path) == 2


@pytest.fixture(scope="module")
def scalar_dirs(tmp_path_factory):
    base = tmp_path_factory.mktemp("scalar")
    out = {}
    for name, seed in (("a", 5), ("b", 5), ("c", 6)):
        d = base / name
        assert run("gsa-scalar", "--config", "sir", "--n", 40, "--reps", 3, "--seed", seed, "--out-dir", d) == 0
        out[name] = d
    return out


def test_gsa_scalar_outputs(scalar_dirs):
    d = scalar_dirs["a"]
    assert sorted(p.name for p in d.iterdir()) == ["scalar_first-reaction.csv", "scalar_mnrm.csv"]
    lines = (d / "scalar_mnrm.csv").read_text().splitlines()
    assert lines[0] == "group,replication,first_order,total,variance,numerator_total"
    assert len(lines) == 1 + 3 * 3
    assert [l.split(",")[0] for l in lines[1:4]] == ["beta"] * 3


def test_gsa_scalar_determinism(scalar_dirs):
    assert read_all(scalar_dirs["a"]) == read_all(scalar_dirs["b"])
    a, c = read_all(scalar_dirs["a"]), read_all(scalar_dirs["c"])
    assert a.keys() == c.keys()
    for name in a:
        assert a[name] != c[name]
        assert a[name].splitlines()[0] == c[name].splitlines()[0]


def test_compare_reps_and_boxplot(scalar_dirs, tmp_path):
    d = scalar_dirs["a"]
    assert run("compare-reps", d / "scalar_first-reaction.csv", d / "scalar_mnrm.csv", "--out-dir", tmp_path) == 0
    out = tmp_path / "welch_scalar_first-reaction_vs_scalar_mnrm.csv"
    lines = out.read_text().splitlines()
    assert lines[0] == "group,t,df,p,reject" and len(lines) == 4
    assert run("plot", "--kind", "boxplot", d / "scalar_first-reaction.csv", d / "scalar_mnrm.csv", "--out-dir", tmp_path) == 0
    box = (tmp_path / "boxplot_total.svg").read_text()
    assert ">first-reaction<" in box and ">mnrm<" in box


def test_gsa_functional_and_dynamical_plot(tmp_path):
    args = ("gsa-functional", "--config", "sir", "--n", 20, "--reps", 2, "--representation", "direct2")
    assert run(*args, "--out-dir", tmp_path / "a") == 0
    assert run(*args, "--out-dir", tmp_path / "b") == 0
    assert read_all(tmp_path / "a") == read_all(tmp_path / "b")
    dyn = tmp_path / "a" / "functional_direct2_dynamical.csv"
    assert header(dyn) == "group,time,first_order,total,variance,defined"
    assert len(dyn.read_text().splitlines()) == 1 + 3 * 101
    agg = tmp_path / "a" / "functional_direct2_aggregated.csv"
    assert len(agg.read_text().splitlines()) == 1 + 3 * 2
    assert run("plot", "--kind", "dynamical", dyn, "--out-dir", tmp_path) == 0
    text = (tmp_path / "dynamical_total_direct2.svg").read_text()
    assert text.count("<polyline") >= 3


def test_validate_small(tmp_path):
    code = run("validate", "--runs", 300, "--seed", 3, "--out-dir", tmp_path)
    lines = (tmp_path / "validate.csv").read_text().splitlines()
    assert lines[0] == "model,qoi,rep1,rep2,test,statistic,p,reject"
    assert len(lines) == 1 + 18
    rejected = any(l.endswith(",1") for l in lines[1:])
    assert code == (2 if rejected else 0)


@pytest.mark.parametrize(
    "argv, code",
    [
        ([], 1),
        (["frobnicate"], 1),
        (["simulate", "--bogus"], 1),
        (["simulate", "--representation", "tau-leap"], 1),
        (["simulate", "--config", "sir", "--seed", "0"], 2),
        (["simulate", "--config", "sir", "--runs", "0"], 2),
        (["simulate", "--config", "no-such-config"], 2),
        (["gsa-scalar", "--config", "sir", "--reps", "1"], 2),
        (["gsa-scalar", "--config", "sir", "--study", "functional"], 2),
        (["compare-reps", "missing1.csv", "missing2.csv"], 3),
        (["plot", "--kind", "boxplot", "missing.csv"], 3),
    ],
)
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli_main(argv) == code


def test_plot_rejects_wrong_csv(tmp_path):
    run("simulate", "--config", "sir", "--out-dir", tmp_path)
    assert run("plot", "--kind", "fan", tmp_path / "trajectory_mnrm.csv", "--out-dir", tmp_path) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ctmcgsa", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "validate", "gsa-scalar", "gsa-functional", "compare-reps", "plot"):
        assert cmd in out.stdout
