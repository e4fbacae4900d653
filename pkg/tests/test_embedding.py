import json

import pytest

from modalembed import EmbeddingOptions, embed_formula, embed_problem, parse_file, parse_problem, plan
from modalembed.embedding import emit_domain_axioms, emit_frame_axioms
from modalembed.errors import MissingConjecture, UnhandledConnective, UnsupportedFeature
from modalembed.logic_spec import FrameCondition as F
from modalembed.logic_spec import simple_spec
from modalembed.parser import Dialect, parse_formula
from modalembed.syntax_core import (
    contains_modal, free_variables, is_beta_normal, check_problem, subterms, Lambda, HOApply,
)
from modalembed.thf_printer import format_formula, print_problem

BOX_P = "tff(c,conjecture, {$box} @ (p) ).\n"


def _plan(text=BOX_P, system="K", domains="constant", **opts):
    return plan(parse_problem(text), simple_spec(system, domains), EmbeddingOptions(**opts))


def _emb(formula, system="K", domains="constant", **opts):
    problem = parse_problem(f"tff(c,conjecture, {formula} ).")
    return format_formula(embed_formula(problem.conjecture.formula,
                                        plan(problem, simple_spec(system, domains), EmbeddingOptions(**opts))), "thf")


# --- plan ---------------------------------------------------------------------

def test_plan_s5u_universal():
    pl = _plan(system="S5", s5u=True)
    assert pl.s5u and dict(pl.frame_axioms) == {None: {F.UNIVERSAL}}
    assert pl.relations == {} and emit_frame_axioms(pl) == []


def test_plan_k_varying_has_eiw():
    pl = _plan("tff(c,conjecture, ! [X: $i] : q(X) ).", "K", "varying")
    assert dict(pl.frame_axioms) == {None: frozenset()}
    assert set(pl.eiw) == {"$i"}
    names = [af.name for af in emit_domain_axioms(pl)]
    assert names == ["emb__eiw_i_nonempty"]


def test_plan_flexible_unsupported():
    with pytest.raises(UnsupportedFeature):
        plan(parse_problem(BOX_P), simple_spec("D", "constant", "flexible"))


def test_plan_s5u_ignored_when_not_s5():
    assert not _plan(system="S4", s5u=True).s5u


def test_plan_collapse_only_for_s5_cumulative_or_decreasing():
    text = "tff(c,conjecture, ! [X: $i] : q(X) )."
    assert _plan(text, "S5", "cumulative", s5_collapse=True).s5_domain_collapse
    assert _plan(text, "S5", "decreasing", s5_collapse=True).domains["$i"].value == "constant"
    assert not _plan(text, "S5", "varying", s5_collapse=True).s5_domain_collapse
    assert not _plan(text, "S4", "cumulative", s5_collapse=True).s5_domain_collapse
    assert not _plan(text, "S5", "cumulative").s5_domain_collapse


def test_fresh_names_avoid_user_symbols():
    pl = _plan("tff(c,conjecture, {$box} @ (emb__world & emb__rel & emb__w0) ).")
    assert pl.world_type != "emb__world" and pl.relations[None] != "emb__rel" and pl.current_world != "emb__w0"


def test_indices_get_distinct_relations():
    pl = _plan("tff(c,conjecture, {$box(#a)} @ (p) => {$box(#b)} @ ({$box} @ (p)) ).")
    assert pl.relations == {None: "emb__rel", "a": "emb__rel_a", "b": "emb__rel_b"}


# --- embed_formula -------------------------------------------------------------

def test_box_k():
    assert _emb("{$box} @ (p)") == "^ [W: emb__world] : ! [V: emb__world] : (~ (emb__rel @ W @ V) | (p @ V))"


def test_dia_direct_existential():
    assert _emb("{$dia} @ (p)") == "^ [W: emb__world] : ? [V: emb__world] : ((emb__rel @ W @ V) & (p @ V))"


def test_box_s5u_unguarded():
    assert _emb("{$box} @ (p)", "S5", s5u=True) == "^ [W: emb__world] : ! [V: emb__world] : (p @ V)"


def test_atom_is_eta_reduced():
    assert _emb("p") == "p"


def test_cumulative_quantifier_guard():
    assert _emb("! [X: $i] : {$box} @ (q(X))", "K", "cumulative") == (
        "^ [W: emb__world] : ! [X: $i] : ((emb__eiw_i @ X @ W) "
        "=> (! [V: emb__world] : (~ (emb__rel @ W @ V) | (q @ X @ V))))")


def test_constant_quantifier_unguarded():
    assert _emb("? [X: $i] : q(X)") == "^ [W: emb__world] : ? [X: $i] : (q @ X @ W)"


def test_rigid_equality_world_independent():
    assert _emb("a = b") == "^ [W: emb__world] : (a = b)"


def test_unknown_connective_rejected(data):
    problem = parse_problem("tff(c,conjecture, {$knows(#alice)} @ (p) ).")
    with pytest.raises(UnhandledConnective):
        embed_problem(problem, simple_spec("K", "constant"))


# --- frame and domain axioms ---------------------------------------------------

def _texts(afs):
    return [format_formula(af.formula, "thf") for af in afs]


def test_frame_axioms_m():
    assert _texts(emit_frame_axioms(_plan(system="M"))) == ["! [W: emb__world] : (emb__rel @ W @ W)"]


def test_frame_axioms_s4():
    names = [af.name for af in emit_frame_axioms(_plan(system="S4"))]
    assert names == ["emb__rel_reflexive", "emb__rel_transitive"]


@pytest.mark.parametrize("system, names", [
    ("K", []), ("D", ["serial"]), ("M", ["reflexive"]), ("S4", ["reflexive", "transitive"]),
    ("S5", ["reflexive", "euclidean"]), ("B", ["reflexive", "symmetric"]), ("K4", ["transitive"]),
])
def test_frame_axiom_names(system, names):
    assert [af.name for af in emit_frame_axioms(_plan(system=system))] == [f"emb__rel_{n}" for n in names]


def test_domain_axioms_varying_with_constant():
    pl = _plan("tff(a_decl,type, a: $i ).\ntff(c,conjecture, ? [X: $i] : q(X) & q(a) ).", "K", "varying")
    assert _texts(emit_domain_axioms(pl)) == [
        "! [W: emb__world] : ? [X: $i] : (emb__eiw_i @ X @ W)",
        "! [W: emb__world] : (emb__eiw_i @ a @ W)",
    ]


def test_domain_axioms_cumulative_no_constants():
    pl = _plan("tff(c,conjecture, ? [X: $i] : q(X) ).", "K", "cumulative")
    assert _texts(emit_domain_axioms(pl))[1] == (
        "! [X: $i, V: emb__world, W: emb__world] : "
        "(((emb__eiw_i @ X @ V) & (emb__rel @ V @ W)) => (emb__eiw_i @ X @ W))")


def test_domain_axioms_decreasing_direction():
    pl = _plan("tff(c,conjecture, ? [X: $i] : q(X) ).", "K", "decreasing")
    assert _texts(emit_domain_axioms(pl))[1] == (
        "! [X: $i, V: emb__world, W: emb__world] : "
        "(((emb__eiw_i @ X @ W) & (emb__rel @ V @ W)) => (emb__eiw_i @ X @ V))")


def test_domain_axioms_function_closure():
    pl = _plan("tff(c,conjecture, ? [X: $i] : q(f(X,a)) ).", "K", "varying")
    assert "! [W: emb__world, X1: $i, X2: $i] : (((emb__eiw_i @ X1 @ W) & (emb__eiw_i @ X2 @ W)) " \
           "=> (emb__eiw_i @ (f @ X1 @ X2) @ W))" in _texts(emit_domain_axioms(pl))


def test_domain_axioms_constant_empty():
    pl = _plan("tff(c,conjecture, ? [X: $i] : q(X) ).", "K", "constant")
    assert emit_domain_axioms(pl) == []


def test_domain_axioms_per_relation():
    pl = _plan("tff(c,conjecture, ? [X: $i] : {$box(#a)} @ ({$box(#b)} @ (q(X))) ).", "K", "cumulative")
    names = [af.name for af in emit_domain_axioms(pl)]
    assert names == ["emb__eiw_i_nonempty", "emb__eiw_i_cumulative_emb__rel",
                     "emb__eiw_i_cumulative_emb__rel_a", "emb__eiw_i_cumulative_emb__rel_b"]


# --- embed_problem ---------------------------------------------------------------

def test_problem_order_and_consequence():
    p = parse_problem("tff(g,axiom, p ).\ntff(l,axiom-local, q ).\ntff(c,conjecture, {$box} @ (p) => q ).")
    out = print_problem(embed_problem(p, simple_spec("M", "constant")), "thf")
    names = [line.split(",")[0].split("(")[1] for line in out.splitlines() if line.startswith("thf(")]
    assert names == ["emb__world_type", "emb__w0_decl", "emb__rel_decl", "p_decl", "q_decl",
                     "emb__rel_reflexive", "g", "l", "c"]
    assert "thf(g,axiom, ! [W: emb__world] : (p @ W) )." in out
    assert "thf(l,axiom, q @ emb__w0 )." in out


def test_missing_conjecture():
    with pytest.raises(MissingConjecture):
        embed_problem(parse_problem("tff(a,axiom, p )."), simple_spec("K", "constant"))


def test_in_file_spec_used(data):
    p = parse_file(data / "golden" / "nxf" / "fo_two_types.S4.varying.p")
    out = print_problem(embed_problem(p), "thf")
    assert "emb__rel_transitive" in out and "emb__eiw_city" in out


def test_output_well_formed(data):
    for path in sorted((data / "samples").glob("*.p")):
        for system, domains in [("K", "varying"), ("S5", "cumulative"), ("D", "decreasing")]:
            target = embed_problem(parse_file(path), simple_spec(system, domains))
            check_problem(target)
            for af in target.formulas:
                if af.role.base in ("type", "logic"):
                    continue
                assert not contains_modal(af.formula)
                assert free_variables(af.formula) == set()
                assert is_beta_normal(af.formula)


def test_determinism(data):
    path = data / "samples" / "fo_function.p"
    a = print_problem(embed_problem(parse_file(path), simple_spec("S4", "varying")), "thf")
    b = print_problem(embed_problem(parse_file(path), simple_spec("S4", "varying")), "thf")
    assert a == b


def _golden_cases():
    from conftest import DATA
    manifest = json.loads((DATA / "golden" / "MANIFEST.json").read_text())
    return sorted(manifest["thf"].items())


@pytest.mark.parametrize("golden, case", _golden_cases(), ids=[g for g, _ in _golden_cases()])
def test_emitted_thf_matches_golden(data, golden, case):
    spec = simple_spec(case["system"], case["domains"]) if case["system"] else None
    problem = parse_file(data / case["source"])
    out = print_problem(embed_problem(problem, spec, EmbeddingOptions(**case["options"])), "thf")
    assert out == (data / "golden" / golden).read_text()


def test_emitted_thf_reparses_as_thf(data):
    text = (data / "golden" / "thf" / "fo_barcan.K.cumulative.p").read_text()
    target = parse_problem(text, Dialect.THF)
    assert print_problem(target, "thf") == text
