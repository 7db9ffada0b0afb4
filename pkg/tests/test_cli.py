import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mapcones import cli, generators
from mapcones import serialize as ser
from mapcones.errors import SchemaError
from mapcones.superop import SuperOp, depolarizing, identity, transposition

E12 = [[0, 1], [0, 0]]


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def family(coeffs, n=2):
    return {"rep": "family", "n": n, "data": list(coeffs)}


def verdicts(out):
    return {v["label"]: v for v in json.loads(out)["verdicts"]}


def test_classify_transpose(tmp_path, capsys):
    path = write(tmp_path, "t.json", ser.map_to_json(transposition(2)))
    code, out, _ = run(["classify", "--input", path, "--cones", "cp,p2,ppt"], capsys)
    assert code == 0
    v = verdicts(out)
    assert v["cp"]["status"] == "NotMember"
    assert v["p2"]["status"] == "NotMember"
    # C_T has eigenvalue -1, so T fails the CP half of the PPT test
    assert v["ppt"]["status"] == "NotMember"
    diag = json.loads(out)["diagnostics"]
    assert diag == {"hermitian_preserving": True, "unital": True, "trace_preserving": True}


def test_classify_depolarizing_and_zero(tmp_path, capsys):
    path = write(tmp_path, "p.json", ser.map_to_json(depolarizing(2), "kraus"))
    code, out, _ = run(["classify", "--input", path, "--cones", "cp,eb"], capsys)
    v = verdicts(out)
    assert code == 0 and v["cp"]["status"] == "Member" and v["eb"]["status"] == "Member"
    path = write(tmp_path, "z.json", ser.map_to_json(SuperOp.zero(3)))
    code, out, _ = run(["classify", "--input", path, "--cones", "cp,ppt,eb,p1,p2,p3"], capsys)
    assert code == 0
    assert all(v["status"] == "Member" for v in verdicts(out).values())


def test_classify_family_input(tmp_path, capsys):
    path = write(tmp_path, "f.json", family((2, 0, 0, -1)))
    code, out, _ = run(["classify", "--input", path, "--cones", "p1,p2", "--samples", "500"], capsys)
    v = verdicts(out)
    assert code == 0
    assert v["p1"]["status"] == "NoWitnessFound"
    assert v["p2"]["status"] == "NotMember" and v["p2"]["witness"] is not None


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


def test_evolve_depolarizing_eb_flip(tmp_path, capsys):
    path = write(tmp_path, "L.json", family((1, 0, 0, -1)))
    code, out, _ = run(["evolve", "--input", path], capsys)
    assert code == 0
    assert "\r\n" in out
    header, rows = read_csv(out)
    assert tuple(header) == ("t", "coefP", "coefD", "coefT", "coefId", "min_choi_eig", "ppt_min_eig", "cp", "ppt", "eb")
    assert len(rows) == 100
    eb = [r[header.index("eb")] for r in rows]
    ts = [float(r[0]) for r in rows]
    flips = [i for i in range(1, len(eb)) if eb[i] != eb[i - 1]]
    assert len(flips) == 1 and eb[0] == "false" and eb[-1] == "true"
    i = flips[0]
    # true entry is ln 3; one log step on [1e-2, 10] with 100 points
    assert ts[i - 1] <= math.log(3) <= ts[i]
    step = (10 / 1e-2) ** (1 / 99)
    assert ts[i] / ts[i - 1] <= step * (1 + 1e-12)


def test_evolve_zero_generator_constant(tmp_path, capsys):
    path = write(tmp_path, "L.json", family((0, 0, 0, 0)))
    code, out, _ = run(["evolve", "--input", path, "--scale", "linear", "--t0", "0", "--t1", "5", "--steps", "7"], capsys)
    header, rows = read_csv(out)
    assert code == 0 and len(rows) == 7
    assert len({tuple(r[1:]) for r in rows}) == 1
    assert rows[0][1:5] == ["0", "0", "0", "1"]


def test_evolve_gksl_cp_every_time(tmp_path, capsys):
    path = write(tmp_path, "g.json", {"n": 2, "kind": "gksl", "H": [[0, 0], [0, 0]], "V": [E12]})
    code, out, _ = run(["evolve", "--input", path, "--steps", "20"], capsys)
    header, rows = read_csv(out)
    assert code == 0
    assert tuple(header) == cli.GENERIC_COLUMNS
    assert all(r[header.index("cp")] == "true" for r in rows)


def test_evolve_json_format(tmp_path, capsys):
    path = write(tmp_path, "L.json", family((1, 0, 0, -1)))
    code, out, _ = run(["evolve", "--input", path, "--format", "json", "--steps", "3"], capsys)
    doc = json.loads(out)
    assert doc["schema"] == cli.CSV_SCHEMA_VERSION and len(doc["rows"]) == 3


def test_entry_time(tmp_path, capsys):
    path = write(tmp_path, "L.json", family((1, 0, 1, -2)))
    code, out, _ = run(["entry-time", "--input", path, "--cones", "cp,eb"], capsys)
    assert code == 0
    cp, eb = json.loads(out)["results"]
    assert cp["method"] == "both" and cp["delta"] <= 1e-8
    assert abs(cp["t_star"] - 0.48121182505960347) <= 1e-8
    assert abs(eb["t_star"] - 0.7909857206) <= 1e-8
    path = write(tmp_path, "N.json", family((0, 0, 1, -1)))
    code, out, _ = run(["entry-time", "--input", path], capsys)
    assert json.loads(out)["results"][0]["t_star"] == "inf"


def test_gksl_build_and_decompose_round_trip(tmp_path, capsys, rng):
    g = generators.random_gksl(3, rng)
    path = write(tmp_path, "g.json", ser.gksl_to_json(g))
    out_path = str(tmp_path / "S.json")
    code, _, _ = run(["gksl", "build", "--input", path, "--out", out_path], capsys)
    built = json.loads(open(out_path).read())
    assert code == 0 and built["diagnostics"]["cp_generator"] is True
    assert built["diagnostics"]["unit_defect"] <= 1e-10
    code, out, _ = run(["gksl", "decompose", "--input", out_path], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["roundtrip_residual"] <= 1e-9
    rebuilt = generators.build_gksl(ser.gksl_from_json(doc))
    assert generators.action_residual(rebuilt, generators.build_gksl(g)) <= 1e-9


def test_schoenberg_transpose_minus_identity(tmp_path, capsys):
    path = write(tmp_path, "S.json", ser.map_to_json(transposition(2) - identity(2)))
    code, out, err = run(["schoenberg", "--input", path, "--cones", "p2", "--samples", "2000"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["conditional"]["status"] == "NotMember"
    assert doc["grid"]["status"] == "NotMember" and doc["grid"]["first_violation_t"] is not None
    assert doc["agreement"] == "agree" and err == ""
    code, out, _ = run(["schoenberg", "--input", path, "--cones", "cp"], capsys)
    doc = json.loads(out)
    assert doc["exact"] and doc["cp_generator"] is False and doc["agreement"] == "agree"


def test_schoenberg_non_unital(tmp_path, capsys):
    S = depolarizing(2) * -0.5
    path = write(tmp_path, "S.json", ser.map_to_json(S))
    code, out, _ = run(["schoenberg", "--input", path, "--idempotent", "P", "--cones", "cp"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["agreement"] == "agree" and doc["grid"]["status"] == "Member"


def test_exit_code_parse(tmp_path, capsys):
    path = write(tmp_path, "bad.json", '{"n": 2,\n "rep": "choi" "data": []}')
    code, _, err = run(["classify", "--input", path], capsys)
    assert code == 2 and "line 2" in err
    path = write(tmp_path, "bad2.json", {"n": 2, "rep": "bogus", "data": []})
    assert run(["classify", "--input", path], capsys)[0] == 2
    with pytest.raises(SystemExit) as e:
        cli.main(["classify", "--input", path, "--frobnicate"])
    assert e.value.code == 2
    path = write(tmp_path, "ok.json", ser.map_to_json(identity(2)))
    assert run(["classify", "--input", path, "--cones", "xx"], capsys)[0] == 2


def test_exit_code_dimension(tmp_path, capsys):
    path = write(tmp_path, "dim.json", {"n": 2, "rep": "choi", "data": np.eye(3).tolist()})
    assert run(["classify", "--input", path], capsys)[0] == 3
    path = write(tmp_path, "ok.json", ser.map_to_json(identity(2)))
    assert run(["classify", "--input", path, "--cones", "p3"], capsys)[0] == 3


def test_exit_code_unsupported(tmp_path, capsys):
    T0 = (identity(2) + transposition(2)) * 0.5
    t0 = write(tmp_path, "T0.json", ser.map_to_json(T0))
    s = write(tmp_path, "S.json", ser.map_to_json(T0))
    code, _, err = run(["schoenberg", "--input", s, "--idempotent", t0, "--cones", "p1"], capsys)
    assert code == 4 and "unsupported" in err
    path = write(tmp_path, "m.json", ser.map_to_json(identity(2)))
    assert run(["entry-time", "--input", path], capsys)[0] == 4


def test_exit_code_numeric(tmp_path, capsys):
    path = write(tmp_path, "P.json", ser.map_to_json(depolarizing(2)))
    code, _, err = run(["gksl", "decompose", "--input", path], capsys)
    assert code == 5 and "numeric error" in err


def test_byte_identical_outputs(tmp_path, capsys):
    path = write(tmp_path, "f.json", family((1, 0, 1, -2), n=3))
    outs = []
    for i in range(2):
        target = str(tmp_path / f"out{i}.json")
        cli.main(["classify", "--input", path, "--cones", "cp,p1,p2", "--samples", "300", "--out", target])
        outs.append(open(target, "rb").read())
    assert outs[0] == outs[1]
    csvs = []
    for i in range(2):
        target = str(tmp_path / f"out{i}.csv")
        cli.main(["evolve", "--input", path, "--out", target])
        csvs.append(open(target, "rb").read())
    assert csvs[0] == csvs[1]


def test_console_script_entry_point(tmp_path):
    path = write(tmp_path, "L.json", family((1, 0, 0, -1)))
    r = subprocess.run([sys.executable, "-m", "mapcones.cli", "entry-time", "--input", path, "--cones", "eb"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert abs(json.loads(r.stdout)["results"][0]["t_star"] - math.log(3)) <= 1e-8


def test_serialize_round_trips(rng):
    G = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    S = SuperOp.from_choi(G)
    for rep in ("choi", "natural", "tensor"):
        back = ser.map_from_json(json.loads(json.dumps(ser.map_to_json(S, rep))))
        assert np.array_equal(back.choi, S.choi)
    P = ser.map_from_json(ser.map_to_json(depolarizing(2), "kraus"))
    assert np.allclose(P.choi, depolarizing(2).choi)
    assert np.array_equal(ser.decode_matrix([[1, [0, 2]]]), np.array([[1, 2j]]))
    for bad in ([], [[1], [1, 2]], [[True]], [["x"]]):
        with pytest.raises(SchemaError):
            ser.decode_matrix(bad)
    with pytest.raises(SchemaError):
        ser.generator_from_json({"n": 2, "kind": "nope"})
