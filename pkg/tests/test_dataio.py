import math
from pathlib import Path

import numpy as np
import pytest

from interperc.core import LayerGraph
from interperc.dataio import (CSV_HEADER, ConfigError, DataError, SweepRecord, load_edgelist, parse_config,
                              parse_config_text, read_sweep_csv, write_edgelist, write_sweep_csv)
from interperc.netgen import GenSpec, gen_er

DATA = Path(__file__).parent / "data"


def _write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# --- edge lists -------------------------------------------------------------

def test_load_simple(tmp_path):
    f = load_edgelist(_write(tmp_path, "a b\nb c\n"))
    assert f.graph.n == 3 and f.graph.m == 2
    assert f.labels == ["a", "b", "c"] and f.index["c"] == 2
    assert f.directed is False


def test_load_dedupes_and_drops_loops(tmp_path, caplog):
    f = load_edgelist(_write(tmp_path, "# header\n% konect\n\na b\nb a\nc c\na   b\n"))
    assert f.graph.m == 1
    assert f.graph.n == 3
    assert (f.self_loops, f.duplicates) == (1, 2)
    assert "self-loop" in caplog.text


def test_load_malformed_line(tmp_path):
    with pytest.raises(DataError, match=":3:"):
        load_edgelist(_write(tmp_path, "a b\nb c\nx y z\n"))


def test_load_empty(tmp_path):
    with pytest.raises(DataError):
        load_edgelist(_write(tmp_path, "# nothing\n"))


def test_load_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_edgelist(tmp_path / "nope.txt")


def test_power_grid_sized_fixture(tmp_path):
    # synthetic stand-in: a spanning path keeps every node present
    g = gen_er(GenSpec("er", 4941, 2.7, seed=3))
    path = np.column_stack([np.arange(4940), np.arange(1, 4941)])
    full = LayerGraph.from_edges(4941, np.concatenate([g.edges, path]))
    p = tmp_path / "grid.txt"
    write_edgelist(full, p, labels=[f"bus{i}" for i in range(4941)])
    assert load_edgelist(p).graph.n == 4941


def test_roundtrip_idempotent(tmp_path):
    src = _write(tmp_path, "x y\nz x\ny z\nw z\nz w\n")
    f1 = load_edgelist(src)
    out = tmp_path / "norm.txt"
    write_edgelist(f1.graph, out)
    f2 = load_edgelist(out)
    write_edgelist(f2.graph, tmp_path / "norm2.txt")
    f3 = load_edgelist(tmp_path / "norm2.txt")
    assert f2.graph.n == f1.graph.n and f2.graph.m == f1.graph.m
    assert np.array_equal(f2.graph.edges, f3.graph.edges)
    assert sorted(np.bincount(f1.graph.edges.ravel()).tolist()) == sorted(np.bincount(f2.graph.edges.ravel()).tolist())


# --- CSV --------------------------------------------------------------------

def test_empty_csv(tmp_path):
    p = tmp_path / "e.csv"
    write_sweep_csv([], p)
    assert p.read_bytes() == b"theta,omega,p,layer,s_mean,s_std,noi_mean,realizations\n"


def test_csv_roundtrip_and_format(tmp_path):
    r = SweepRecord(-2.0, None, 0.7194, "A", 0.123456789, 0.0, 3.5, 10)
    p = tmp_path / "r.csv"
    write_sweep_csv([r], p)
    assert p.read_text().splitlines()[1] == "-2,NA,0.7194,A,0.123457,0,3.5,10"
    back = read_sweep_csv(p)[0]
    assert (back.theta, back.omega, back.p, back.layer, back.realizations) == (-2.0, None, 0.7194, "A", 10)
    assert back.s_mean == pytest.approx(0.123457)


def test_csv_noi_na(tmp_path):
    p = tmp_path / "t.csv"
    write_sweep_csv([SweepRecord(0.0, None, 0.5, "A", 0.1, 0.0, math.nan, 0)], p)
    assert p.read_text().splitlines()[1].endswith(",NA,0")
    assert math.isnan(read_sweep_csv(p)[0].noi_mean)


def test_csv_sorted_and_deterministic(tmp_path):
    recs = [SweepRecord(th, om, p, lay, 0.5, 0.1, 2.0, 3)
            for th in (4.0, -2.0) for om in (0.5, None) for p in (0.6, 0.55) for lay in ("B", "A")]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_sweep_csv(recs, a)
    write_sweep_csv(recs[::-1], b)
    assert a.read_bytes() == b.read_bytes()
    rows = [r.split(",") for r in a.read_text().splitlines()[1:]]
    assert rows[0][:4] == ["-2", "NA", "0.55", "A"]
    assert rows[-1][:4] == ["4", "0.5", "0.6", "B"]
    assert a.read_bytes().endswith(b"\n") and b"\r" not in a.read_bytes()


def test_csv_unwritable(tmp_path):
    with pytest.raises(DataError):
        write_sweep_csv([], tmp_path / "missing" / "x.csv")


def test_record_validation():
    with pytest.raises(ValueError):
        SweepRecord(0.0, None, 0.5, "A", 1.5, 0.0, 1.0, 1)
    with pytest.raises(ValueError):
        SweepRecord(0.0, None, 0.5, "A", 0.5, 0.0, 1.0, -1)


def test_read_rejects_bad_header(tmp_path):
    p = _write(tmp_path, "a,b\n", "x.csv")
    with pytest.raises(DataError):
        read_sweep_csv(p)


def test_golden_header():
    assert tuple((DATA / "golden_sweep.csv").read_text().splitlines()[0].split(",")) == CSV_HEADER


# --- config -----------------------------------------------------------------

def test_minimal_config_defaults():
    s = parse_config_text("network.kind = er\ntheta = 0\n")
    assert (s.seed, s.realizations, s.n, s.p_step, s.layers, s.pairing) == (42, 10, 100_000, 0.005, 2, "identity")
    assert s.explicit == {"network.kind", "theta"}
    assert len(s.p_grid()) == 201 and s.p_grid()[-1] == 1.0


def test_fig2_config():
    s = parse_config_text("""
        # Fig. 2 at full size
        network.kind = er
        network.n = 5e5
        network.mean_degree = 5
        theta = -2, 0, 4, 6
        realizations = 40
    """)
    assert (s.kind, s.n, s.mean_degree, s.thetas, s.realizations) == ("er", 500_000, 5.0, (-2.0, 0.0, 4.0, 6.0), 40)


def test_theta_range_syntax():
    s = parse_config_text("network.kind = er\ntheta = -2:6:0.5, 10\n")
    assert s.thetas[0] == -2.0 and s.thetas[-2] == 6.0 and s.thetas[-1] == 10.0 and len(s.thetas) == 18


@pytest.mark.parametrize("text,msg", [
    ("network.kind = er\ntheta = 0\np.step = 0\n", "p.step must be positive"),
    ("theta = 0\n", "network.kind"),
    ("network.kind = er\n", "theta"),
    ("network.kind = er\ntheta = 0\nnetwork.nn = 5\n", "network.nn"),
    ("network.kind = er\ntheta = 0\ntheta = 1\n", "duplicate"),
    ("network.kind = er\ntheta = x\n", "theta"),
    ("network.kind = er\ntheta = 0\nnetwork.n = 10.5\n", "network.n"),
    ("network.kind = er\ntheta = 0\nlayers = 4\n", "layers"),
    ("network.kind = er\ntheta = 0\nomega = 1.5\n", "omega"),
    ("network.kind = er\ntheta = 0\npairing = best\n", "pairing"),
    ("network.kind = lattice\ntheta = 0\n", "network.kind"),
    ("network.kind = er\ntheta = 0\nrealizations = 0\n", "realizations"),
    ("network.kind = er\ntheta = 0\np.start = 0.9\np.stop = 0.1\n", "p.start"),
    ("network.kind = er\ntheta = 0\njust words\n", "key = value"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config_text(text)


def test_parse_config_file(tmp_path):
    s = parse_config(DATA / "mini.cfg")
    assert s.n == 400 and s.thetas == (-2.0, 4.0)
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "absent.cfg")


def test_overrides_and_defaults():
    s = parse_config_text("network.kind = er\ntheta = 0\n", overrides={"seed": "5"}, defaults={"seed": "9", "layers": "3"})
    assert s.seed == 5 and s.layers == 3
