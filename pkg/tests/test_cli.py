import json
import shutil
from pathlib import Path

import pytest

from conftest import PYTHON
from modalembed import Dialect, parse_problem
from modalembed.cli import parse_status, summarize, RunRecord

SPEC = "$modal == [ $domains == $constant, $designation == $rigid, $modalities == $modal_system_M ]"
GOOD = f"tff(spec,logic, {SPEC} ).\ntff(c,conjecture, {{$box}} @ (p) => p ).\n"


@pytest.fixture
def good(tmp_path):
    path = tmp_path / "good.p"
    path.write_text(GOOD)
    return path


# --- translate -----------------------------------------------------------------

def test_translate_uses_in_file_spec(cli, good):
    code, out, _ = cli("translate", good)
    assert code == 0
    target = parse_problem(out, Dialect.THF)
    assert target.named("emb__rel_reflexive") is not None


def test_translate_flags_override(cli, good, tmp_path):
    out_path = tmp_path / "out.p"
    code, _, _ = cli("translate", good, "--system", "K", "-o", out_path)
    assert code == 0
    assert "emb__rel_reflexive" not in out_path.read_text()


def test_translate_s5u_and_collapse(cli, data, tmp_path):
    src = data / "samples" / "fo_converse_barcan.p"
    code, out, _ = cli("translate", src, "--system", "S5", "--domains", "cumulative", "--s5u")
    assert code == 0 and "emb__rel" not in out and "emb__eiw_i" in out
    code, out, _ = cli("translate", src, "--system", "S5", "--domains", "cumulative", "--s5u", "--s5-collapse")
    assert code == 0 and "emb__eiw_i" not in out


def test_translate_flexible_exit_2(cli, good):
    code, _, err = cli("translate", good, "--designation", "flexible")
    assert code == 2 and "flexible" in err


def test_translate_parse_error_exit_1(cli, tmp_path):
    bad = tmp_path / "bad.p"
    bad.write_text("tff(bad,axiom, p( ).\n")
    code, _, err = cli("translate", bad)
    assert code == 1 and "1:17" in err


def test_translate_without_spec_exit_2(cli, data):
    code, _, _ = cli("translate", data / "samples" / "prop_t.p")
    assert code == 2


def test_translate_unknown_system_exit_2(cli, data):
    code, _, _ = cli("translate", data / "samples" / "prop_t.p", "--system", "S17", "--domains", "constant")
    assert code == 2


def test_translate_missing_file_exit_1(cli, tmp_path):
    code, _, _ = cli("translate", tmp_path / "nope.p")
    assert code == 1


def test_config_file_and_flag_precedence(cli, data, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"system": "S4", "domains": "varying"}))
    src = data / "samples" / "fo_instantiation.p"
    code, out, _ = cli("translate", src, "--config", config)
    assert code == 0 and "logic S4/varying" in out
    code, out, _ = cli("translate", src, "--config", config, "--system", "K")
    assert code == 0 and "logic K/varying" in out


def test_config_unknown_key(cli, data, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"sytsem": "S4"}))
    code, _, err = cli("translate", data / "samples" / "prop_t.p", "--config", config)
    assert code == 2 and "sytsem" in err


def test_include_root_from_environment(cli, tmp_path, monkeypatch):
    (tmp_path / "ax.ax").write_text("tff(ax,axiom, p ).\n")
    src = tmp_path / "inc.p"
    src.write_text(f"include('ax.ax').\ntff(spec,logic, {SPEC} ).\ntff(c,conjecture, {{$box}} @ (p) ).\n")
    monkeypatch.setenv("TPTP", str(tmp_path))
    code, out, _ = cli("translate", src)
    assert code == 0 and "thf(ax,axiom" in out


# --- inject-specs ------------------------------------------------------------------

def test_inject_one_problem_defaults(cli, data, tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    shutil.copy(data / "samples" / "fo_barcan.p", src)
    code, _, _ = cli("inject-specs", src, tmp_path / "out")
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert code == 0 and len(names) == 20
    assert "fo_barcan.S4.cumulative.p" in names
    first = (tmp_path / "out" / "fo_barcan.K.varying.p").read_text()
    problem = parse_problem(first)
    assert problem.formulas[0].role.base == "logic" and problem.logic_spec.label == "K/varying"


def test_inject_matrix_subset(cli, data, tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    for name in ("prop_t.p", "prop_d.p", "fo_barcan.p"):
        shutil.copy(data / "samples" / name, src)
    code, _, _ = cli("inject-specs", src, tmp_path / "out", "--systems", "K", "--domains", "varying")
    assert code == 0 and len(list((tmp_path / "out").iterdir())) == 3


def test_inject_refuses_existing_spec(cli, data, good, tmp_path):
    src = good.parent
    shutil.copy(data / "samples" / "prop_t.p", src)
    code, _, err = cli("inject-specs", src, tmp_path / "out")
    assert code == 2 and "already contains" in err
    assert not (tmp_path / "out").exists()


# --- convert-qmltp -------------------------------------------------------------------

def test_convert_qmltp(cli, data):
    code, out, _ = cli("convert-qmltp", data / "qmltp" / "modal_k.p")
    assert code == 0
    assert "tff(ax1,axiom-local, {$box} @ (p => q) )." in out
    assert "tff(con,conjecture, {$box} @ (q) )." in out


def test_convert_qmltp_rejects_nxf(cli, data):
    code, _, _ = cli("convert-qmltp", data / "samples" / "prop_t.p")
    assert code == 1


def test_convert_qmltp_equality_warning(cli, data):
    code, out, err = cli("convert-qmltp", data / "qmltp" / "equality.p")
    assert code == 0 and "warning" in err and "f(a) = a" in out


def test_converted_then_translated(cli, data, tmp_path):
    nxf = tmp_path / "k.p"
    assert cli("convert-qmltp", data / "qmltp" / "first_order.p", "-o", nxf)[0] == 0
    code, out, _ = cli("translate", nxf, "--system", "D", "--domains", "varying")
    assert code == 0 and "emb__eiw_i_local_socrates" in out


# --- oracle ----------------------------------------------------------------------------

def test_oracle_corpus_exit_0(cli):
    code, out, _ = cli("oracle", "--corpus", "propositional", "--system", "K", "--domains", "constant",
                       "--max-worlds", "2")
    assert code == 0
    summary = json.loads(out.splitlines()[-1].split("summary: ", 1)[1])
    assert summary["mismatches"] == 0


def test_oracle_barcan_cumulative(cli, data):
    code, out, _ = cli("oracle", data / "oracle" / "barcan.p", "--system", "K", "--domains", "cumulative")
    assert code == 0
    assert "[barcan as a goal, K/cumulative]" in out and "countermodel" in out
    lines = {line.split("]")[0]: line for line in out.splitlines() if line.startswith("[")}
    assert lines["[barcan as a goal, K/cumulative"].endswith("valid=no")
    assert lines["[converse_barcan as a goal, K/cumulative"].endswith("valid=yes")


def test_oracle_dyadic_exit_2(cli, data):
    code, _, _ = cli("oracle", data / "oracle" / "dyadic.p", "--system", "K", "--domains", "constant")
    assert code == 2


def test_oracle_bounds_exit_2(cli, data):
    code, _, _ = cli("oracle", data / "oracle" / "barcan.p", "--system", "K", "--domains", "constant",
                     "--max-worlds", "9")
    assert code == 2


# --- run ----------------------------------------------------------------------------------

STUB = Path(__file__).parent / "data" / "bridge" / "stub_prover.py"


def _backend(name, table):
    return f"{name}={PYTHON} {STUB} {table} {{file}}"


def _problems(tmp_path, data, names):
    d = tmp_path / "problems"
    d.mkdir(exist_ok=True)
    for n in names:
        shutil.copy(next((data / "bridge" / "problems").glob(f"{n}.*.p")), d)
    return d


def _table(tmp_path, name, mapping):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(mapping))
    return path


def _records(report):
    lines = [line for line in report.read_text().splitlines() if not line.startswith("#")]
    header = lines[0].split("\t")
    return [dict(zip(header, line.split("\t"))) for line in lines[1:]]


def test_run_two_theorems(cli, data, tmp_path):
    probs = _problems(tmp_path, data, ["t01", "t02"])
    table = _table(tmp_path, "a", {"t01": "Theorem", "t02": "Theorem"})
    code, out, _ = cli("run", probs, "--backend", _backend("A", table), "--report", tmp_path / "r.tsv", "--jobs", "2")
    assert code == 0
    summary = _records(tmp_path / "r.summary.tsv")
    total = next(r for r in summary if r["spec"] == "Total")
    assert total["A"] == "2" and total["Union"] == "2"
    assert "wall-clock" in (tmp_path / "r.tsv").read_text().splitlines()[0]


def test_run_timeout(cli, data, tmp_path):
    probs = _problems(tmp_path, data, ["t01"])
    table = _table(tmp_path, "a", {"t01": "sleep"})
    code, _, _ = cli("run", probs, "--backend", _backend("A", table), "--timeout", "0.5",
                     "--report", tmp_path / "r.tsv")
    (rec,) = _records(tmp_path / "r.tsv")
    assert code == 0 and rec["status"] == "Timeout"
    assert 0.5 <= float(rec["wall_seconds"]) < 5


def test_run_spawn_failure_recorded(cli, data, tmp_path):
    probs = _problems(tmp_path, data, ["t01", "t02"])
    code, _, _ = cli("run", probs, "--backend", f"ghost={tmp_path}/no-such-prover {{file}}",
                     "--report", tmp_path / "r.tsv")
    recs = _records(tmp_path / "r.tsv")
    assert code == 0 and [r["status"] for r in recs] == ["Error", "Error"]


def test_run_disjoint_backends(cli, data, tmp_path):
    probs = _problems(tmp_path, data, ["t01", "t02", "t03"])
    a = _table(tmp_path, "a", {"t01": "Theorem", "t02": "Theorem"})
    b = _table(tmp_path, "b", {"t03": "Theorem"})
    code, _, _ = cli("run", probs, "--backend", _backend("A", a), "--backend", _backend("B", b),
                     "--report", tmp_path / "r.tsv")
    total = next(r for r in _records(tmp_path / "r.summary.tsv") if r["spec"] == "Total")
    assert code == 0 and total["Union"] == "3" and total["Intersection"] == "0"
    assert len(_records(tmp_path / "r.tsv")) == 6


def test_run_untranslatable_problem_is_error(cli, tmp_path):
    d = tmp_path / "p"
    d.mkdir()
    (d / "broken.p").write_text("tff(c,conjecture, p( ).\n")
    table = _table(tmp_path, "a", {})
    code, _, _ = cli("run", d, "--backend", _backend("A", table), "--report", tmp_path / "r.tsv")
    (rec,) = _records(tmp_path / "r.tsv")
    assert code == 0 and rec["status"] == "Error"


def test_run_needs_file_placeholder(cli, data, tmp_path):
    code, _, _ = cli("run", data / "bridge" / "problems", "--backend", "A=echo hi")
    assert code == 2


@pytest.mark.parametrize("output, status", [
    ("% SZS status Theorem for x\n", "Theorem"),
    ("noise\nSZS status CounterSatisfiable\n", "CounterSatisfiable"),
    ("% SZS status GaveUp\n", "GaveUp"),
    ("Theorem\n", "Unknown"),
    ("", "Unknown"),
    ("% SZS status ResourceOut\n", "Unknown"),
])
def test_parse_status(output, status):
    assert parse_status(output) == status


def test_summarize_unique():
    recs = [RunRecord("p1", "K/constant", "A", "Theorem", 0), RunRecord("p1", "K/constant", "B", "Theorem", 0),
            RunRecord("p2", "K/constant", "A", "Theorem", 0), RunRecord("p2", "K/constant", "B", "GaveUp", 0)]
    (row, total) = summarize(recs, ["A", "B"])
    assert row == {"spec": "K/constant", "A": 2, "B": 1, "Union": 2, "Intersection": 1, "Unique A": 1, "Unique B": 0}
    assert total["spec"] == "Total"
