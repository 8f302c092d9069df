import csv
from pathlib import Path

import numpy as np
import pytest

from interperc import cli
from interperc.core import LayerGraph
from interperc.dataio import read_sweep_csv, write_edgelist
from interperc.netgen import GenSpec, gen_layer
from interperc.theory import ConvergenceError

DATA = Path(__file__).parent / "data"
SMALL = ["--set", "network.kind=er", "--set", "network.n=600", "--set", "network.mean_degree=5",
         "--set", "p.step=0.1", "--set", "realizations=2"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_golden_sweep(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["simulate", "--config", str(DATA / "mini.cfg"), "--no-refine", "--out", str(out)]) == 0
    assert out.read_bytes() == (DATA / "golden_sweep.csv").read_bytes()


@pytest.mark.parametrize("cmd", ["simulate", "overlap", "chain"])
def test_thread_count_does_not_change_bytes(tmp_path, cmd):
    outs = []
    for threads in ("1", "2"):
        out = tmp_path / f"{cmd}{threads}.csv"
        args = [cmd, *SMALL, "--set", "theta=-2,4", "--set", "omega=0,1", "--threads", threads, "--out", str(out)]
        assert cli.main(args) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_simulate_prints_transitions(tmp_path, capsys):
    cli.main(["simulate", *SMALL, "--set", "theta=-2", "--no-refine", "--out", str(tmp_path / "s.csv")])
    assert "theta=-2 layer=A p_c=" in capsys.readouterr().out


def test_simulate_endpoints(tmp_path):
    out = tmp_path / "s.csv"
    cli.main(["simulate", *SMALL, "--set", "theta=1", "--set", "p.step=1", "--no-refine", "--out", str(out)])
    recs = read_sweep_csv(out)
    assert [r.p for r in recs] == [0.0, 0.0, 1.0, 1.0]
    assert recs[0].s_mean == 0.0
    # ER(5) giant fraction about 0.993
    assert all(r.s_mean > 0.98 for r in recs[2:])


def test_refinement_adds_points(tmp_path):
    out = tmp_path / "s.csv"
    cli.main(["simulate", *SMALL, "--set", "theta=-2", "--out", str(out)])
    ps = sorted({r.p for r in read_sweep_csv(out)})
    assert len(ps) > 11
    assert any(abs(p * 1000 - round(p * 1000)) < 1e-6 and abs(p * 10 - round(p * 10)) > 1e-6 for p in ps)


def test_layers_three_delegates_to_chain(tmp_path):
    out = tmp_path / "s.csv"
    cli.main(["simulate", *SMALL, "--set", "theta=0", "--set", "layers=3", "--no-refine", "--out", str(out)])
    assert {r.layer for r in read_sweep_csv(out)} == {"A", "B", "C"}


def test_theory_command(tmp_path, capsys):
    out = tmp_path / "t.csv"
    rc = cli.main(["theory", "--set", "network.kind=er", "--set", "network.mean_degree=4", "--set", "theta=-2",
                   "--set", "p.step=0.05", "--out", str(out)])
    assert rc == 0
    rows = _rows(out)
    assert rows[0]["p"] == "0" and rows[0]["s_mean"] == "0" and rows[0]["realizations"] == "0"
    assert rows[0]["noi_mean"] == "NA"
    assert "p_c=0.7196" in capsys.readouterr().out


def test_theory_partial_failure(tmp_path, monkeypatch, capsys):
    real = cli.solve_fixed_point

    def flaky(p, *a, **k):
        if abs(p - 0.5) < 1e-9:
            raise ConvergenceError("stuck", (0.3, 0.3))
        return real(p, *a, **k)

    monkeypatch.setattr(cli, "solve_fixed_point", flaky)
    rc = cli.main(["theory", "--set", "network.kind=er", "--set", "theta=0", "--set", "p.step=0.25",
                   "--out", str(tmp_path / "t.csv")])
    assert rc == 2
    assert "theta=0 p=0.5" in capsys.readouterr().err


def test_phase_command(tmp_path):
    out = tmp_path / "ph.csv"
    assert cli.main(["phase", "--set", "network.kind=er", "--set", "network.mean_degree=4",
                     "--set", "theta=-2,0,4,6", "--out", str(out)]) == 0
    rows = _rows(out)
    first = rows[0]
    assert first["theta"] == "-2" and first["order"] == "first"
    assert abs(float(first["p_c"]) - 0.7194) <= 1e-3
    assert [r["order"] for r in rows].count("crossover") == 1
    body = [r for r in rows if r["order"] != "crossover"]
    pcs = [float(r["p_c"]) for r in body]
    assert pcs == sorted(pcs, reverse=True)
    for r in body:
        assert (float(r["S_c"]) > 0) == (r["order"] == "first")


def test_crossover_command(tmp_path):
    out = tmp_path / "c.csv"
    assert cli.main(["crossover", "--set", "network.kind=er", "--set", "network.mean_degree=4",
                     "--set", "theta=-2,6", "--out", str(out)]) == 0
    row = _rows(out)[0]
    assert abs(float(row["theta_c"]) - float(row["theta_c_classifier"])) <= 0.05


def test_overlap_writes_pc_table(tmp_path):
    out = tmp_path / "ov.csv"
    assert cli.main(["overlap", *SMALL, "--set", "theta=0", "--set", "omega=0,1", "--no-refine",
                     "--out", str(out)]) == 0
    pc = _rows(tmp_path / "ov_pc.csv")
    assert {(r["omega"], r["layer"]) for r in pc} == {("0", "A"), ("0", "B"), ("1", "A"), ("1", "B")}
    assert {r.omega for r in read_sweep_csv(out)} == {0.0, 1.0}


def test_overlap_needs_er(tmp_path):
    assert cli.main(["overlap", "--set", "network.kind=scale_free", "--set", "theta=0",
                     "--out", str(tmp_path / "x.csv")]) == 1


@pytest.mark.parametrize("argv,code", [
    (["simulate", "--set", "theta=0"], 1),
    (["simulate", "--config", "/nonexistent.cfg"], 1),
    (["simulate", "--set", "network.kind=er", "--set", "theta=0", "--set", "p.step=0"], 1),
    (["simulate", "--set", "network.kind=er", "--set", "theta=0", "--set", "typo=1"], 1),
    (["simulate", "--set", "nonsense"], 1),
    (["simulate", "--set", "network.kind=er", "--set", "theta=0", "--threads", "0"], 1),
    (["empirical", "--set", "theta=0"], 1),
])
def test_input_errors(tmp_path, argv, code, capsys):
    assert cli.main([*argv, "--out", str(tmp_path / "x.csv")]) == code
    assert "error" in capsys.readouterr().err


def test_unwritable_output(tmp_path):
    rc = cli.main(["theory", "--set", "network.kind=er", "--set", "theta=0", "--set", "p.step=0.5",
                   "--out", str(tmp_path / "no" / "dir.csv")])
    assert rc == 1


def test_runtime_error_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("worker died")

    monkeypatch.setattr(cli, "run_ensemble", boom)
    assert cli.main(["simulate", *SMALL, "--set", "theta=0", "--out", str(tmp_path / "x.csv")]) == 2


def test_paper_scale_flag():
    args = cli.build_parser().parse_args(["simulate", "--set", "network.kind=er", "--set", "theta=0",
                                          "--paper-scale", "--out", "x"])
    spec = cli.load_spec(args)
    assert (spec.n, spec.realizations) == (500_000, 40)


# --- empirical --------------------------------------------------------------

def _connected(spec):
    g = gen_layer(spec)
    n = g.n
    ring = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    return LayerGraph.from_edges(n, np.concatenate([g.edges, ring]))


@pytest.fixture(scope="module")
def empirical_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("emp")
    internet = _connected(GenSpec("scale_free", 6474, gamma=2.3, k_min=2, seed=1))
    grid = _connected(GenSpec("er", 4941, 4.0, seed=2))
    a, b = d / "as.txt", d / "grid.txt"
    write_edgelist(internet, a, labels=[f"as{i}" for i in range(6474)])
    write_edgelist(grid, b)
    return a, b, d


def test_empirical_end_to_end(empirical_files):
    a, b, d = empirical_files
    out = d / "emp.csv"
    rc = cli.main(["empirical", str(a), str(b), "--set", "theta=-2,0,2,4", "--set", "p.start=0.4",
                   "--set", "p.step=0.05", "--set", "realizations=4", "--no-refine", "--out", str(out)])
    assert rc == 0
    recs = read_sweep_csv(out)
    by = {(r.theta, r.p, r.layer): r for r in recs}
    ps = sorted({r.p for r in recs})
    # intact connected layers: nothing is lost at p = 1
    assert by[(-2.0, 1.0, "A")].s_mean == 1.0 and by[(4.0, 1.0, "B")].s_mean == 1.0
    # long cascades near the threshold when hubs depend on small nodes
    peak = max(ps, key=lambda p: by[(-2.0, p, "A")].noi_mean)
    assert by[(-2.0, peak, "A")].noi_mean > by[(4.0, peak, "A")].noi_mean
    for p in ps:
        for lay in "AB":
            assert by[(-2.0, p, lay)].s_mean <= min(by[(0.0, p, lay)].s_mean, by[(2.0, p, lay)].s_mean) + 0.02
