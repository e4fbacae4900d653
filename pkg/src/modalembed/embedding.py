"""Shallow embedding of first-order modal problems into classical higher-order logic.

Worlds get a fresh base type; every formula becomes a predicate on worlds.
Atoms take the current world as an extra curried argument, boxes and
diamonds quantify over accessible worlds, and quantifiers over individuals
are guarded by an exists-in-world predicate when domains are not constant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from modalembed import logic_spec as ls
from modalembed.errors import MissingConjecture, UnhandledConnective, UnsupportedFeature
from modalembed.logic_spec import DomainSemantics, FrameCondition, LogicSpec
from modalembed.syntax_core import (
    BOOL, INDIVIDUAL, TARGET, TTYPE, AnnotatedFormula, App, Atom, BaseType, Binary, Const, Equality,
    Expr, FunctionType, HOApply, Lambda, Modal, NonClassical, Not, Problem, Quantified, Role, Truth,
    TypeDecl, Var, all_variables, and_all, apply_all, arg_types, beta_normalize, check_problem,
    eta_reduce_lambda, fresh_name, infer_signature, modal_indices, normalize_connectives, spine,
    subterms, type_of,
)

PREFIX = "emb__"


@dataclass(frozen=True)
class EmbeddingOptions:
    s5u: bool = False          # universal relation for S5 modalities
    s5_collapse: bool = False  # treat S5 cumulative/decreasing domains as constant
    defs: bool = False         # named definitions for the lifted connectives


@dataclass(frozen=True)
class EmbeddingPlan:
    world_type: str
    current_world: str
    relations: Mapping[Optional[str], str]            # modal index (None = default) -> symbol
    eiw: Mapping[str, str]                             # base type -> exists-in-world symbol
    frame_axioms: Mapping[Optional[str], frozenset]   # modal index -> frame conditions
    domains: Mapping[str, DomainSemantics]            # base type -> planned semantics
    s5u: bool
    s5_domain_collapse: bool
    spec: LogicSpec
    signature: Mapping                                # source signature (completed)
    defs: bool = False
    taken: frozenset = field(default=frozenset(), repr=False)

    @property
    def mu(self) -> BaseType:
        return BaseType(self.world_type)

    @property
    def lifted_bool(self) -> FunctionType:
        return FunctionType(self.mu, BOOL)

    def lift(self, t):
        """Type lifting: $o becomes world > $o, structurally through function types."""
        if t == BOOL:
            return self.lifted_bool
        if isinstance(t, FunctionType):
            return FunctionType(self.lift(t.domain), self.lift(t.codomain))
        return t

    def guarded(self, t) -> bool:
        return isinstance(t, BaseType) and t.name in self.eiw

    def relation(self, index: Optional[str]) -> str:
        if index in self.relations:
            return self.relations[index]
        return self.relations[None]


def _sanitize(text: str) -> str:
    return re.sub(r"[^a-zA-Z0-9_]", "_", text.lstrip("$"))


def _base_types(t, out: set):
    if isinstance(t, FunctionType):
        _base_types(t.domain, out)
        _base_types(t.codomain, out)
    elif t not in (BOOL, TTYPE):
        out.add(t.name)


def resolve_spec(problem: Problem, spec: Optional[LogicSpec]) -> LogicSpec:
    if spec is not None:
        return spec
    if problem.logic_spec is not None:
        return problem.logic_spec
    logic = problem.logic_formula
    if logic is not None:
        return ls.resolve(logic.formula)  # raises the precise LogicSpecError
    raise UnsupportedFeature("no logic specification in the problem and none given")


def plan(problem: Problem, spec: Optional[LogicSpec] = None,
         options: EmbeddingOptions = EmbeddingOptions()) -> EmbeddingPlan:
    spec = resolve_spec(problem, spec)
    if spec.designation != ls.Designation.RIGID:
        raise UnsupportedFeature("flexible designation is not supported")
    problem = infer_signature(problem)
    sig = dict(problem.signature)
    formulas = [af.formula for af in problem.logical_formulas()]

    taken = set(sig) | {af.name for af in problem.formulas}
    for t in sig.values():
        _base_types(t, taken)

    def fresh(base):
        name = fresh_name(base, taken)
        taken.add(name)
        return name

    world_type = fresh(PREFIX + "world")
    current = fresh(PREFIX + "w0")

    used_indices = set()
    for f in formulas:
        used_indices |= modal_indices(f)
        for n in subterms(f):
            if isinstance(n, NonClassical) and n.args:
                raise UnhandledConnective(f"connective ${n.name} is not supported by the embedding")
    indices = sorted({i for i in used_indices if i is not None} | set(spec.modalities.per_index))
    keys = ([None] if spec.modalities.default is not None or None in used_indices else []) + indices
    conditions = {i: ls.frame_conditions(spec.modalities.schemes_for(i)) for i in keys}

    all_equiv = all(ls.is_equivalence(c) for c in conditions.values())
    s5u = options.s5u and all_equiv
    relations = {}
    if s5u:
        conditions = {i: frozenset({FrameCondition.UNIVERSAL}) for i in keys}
    else:
        for i in keys:
            relations[i] = fresh(PREFIX + "rel" if i is None else f"{PREFIX}rel_{_sanitize(i)}")

    used_types = set()
    for t in sig.values():
        _base_types(t, used_types)
    for f in formulas:
        for n in subterms(f):
            if isinstance(n, (Quantified, Lambda)):
                _base_types(n.vtype, used_types)

    domains, collapse = {}, False
    for t in sorted(used_types):
        sem = spec.domain_of(t)
        if options.s5_collapse and all_equiv and sem in (DomainSemantics.CUMULATIVE, DomainSemantics.DECREASING):
            sem, collapse = DomainSemantics.CONSTANT, True
        domains[t] = sem
    eiw = {t: fresh(f"{PREFIX}eiw_{_sanitize(t)}") for t in sorted(domains) if domains[t] != DomainSemantics.CONSTANT}

    return EmbeddingPlan(world_type, current, relations, eiw, conditions, domains, s5u, collapse,
                         spec, sig, options.defs, frozenset(taken))


# ---------------------------------------------------------------------------
# Formula translation
# ---------------------------------------------------------------------------

def _world_names(avoid):
    k = 0
    while True:
        for base in ("W", "V", "U"):
            name = base if k == 0 else f"{base}{k}"
            if name not in avoid:
                yield name
        k += 1


class _Embedder:
    def __init__(self, plan: EmbeddingPlan, avoid=frozenset()):
        self.plan = plan
        gen = _world_names(set(avoid))
        self.names = [next(gen) for _ in range(64)]
        self.gen = gen
        self.defs_used: dict = {}

    def wname(self, depth: int) -> str:
        while depth >= len(self.names):
            self.names.append(next(self.gen))
        return self.names[depth]

    def rel(self, index, w, v) -> Expr:
        return apply_all(Const(self.plan.relation(index)), w, v)

    # -- lifting of arbitrary typed source expressions ------------------------
    def lifted(self, e: Expr, env, depth: int) -> Expr:
        t = type_of(e, self.plan.signature, env)
        if t == BOOL:
            if self.plan.defs:
                return self.lifted_defs(e, env, depth)
            w = self.wname(depth)
            return _abstract_world(w, self.plan.mu, self.at(e, Var(w), env, depth + 1))
        if isinstance(e, (Var, Const)):
            return e
        if isinstance(e, App):
            return apply_all(Const(e.func), *(self.lifted(a, env, depth) for a in e.args))
        if isinstance(e, Atom):
            return apply_all(Const(e.pred), *(self.lifted(a, env, depth) for a in e.args))
        if isinstance(e, HOApply):
            return beta_normalize(HOApply(self.lifted(e.fun, env, depth), self.lifted(e.arg, env, depth)))
        if isinstance(e, Lambda):
            return Lambda(e.var, self.plan.lift(e.vtype),
                          self.lifted(e.body, {**env, e.var: e.vtype}, depth))
        raise UnsupportedFeature(f"cannot embed term {type(e).__name__}")

    def at(self, f: Expr, w: Expr, env, depth: int) -> Expr:
        """The $o-typed target formula stating that source formula f holds at world w.

        `depth` counts the world binders in scope and selects fresh world variable names.
        """
        plan = self.plan
        if isinstance(f, Truth):
            return f
        if isinstance(f, (Var, Const)):
            return HOApply(f, w)
        if isinstance(f, Atom):
            return apply_all(Const(f.pred), *(self.lifted(a, env, depth) for a in f.args), w)
        if isinstance(f, App):
            return apply_all(Const(f.func), *(self.lifted(a, env, depth) for a in f.args), w)
        if isinstance(f, HOApply):
            head, args = spine(f)
            return beta_normalize(apply_all(self.lifted(head, env, depth),
                                            *(self.lifted(a, env, depth) for a in args), w))
        if isinstance(f, Not):
            return Not(self.at(f.body, w, env, depth))
        if isinstance(f, Binary):
            return Binary(f.op, self.at(f.lhs, w, env, depth), self.at(f.rhs, w, env, depth))
        if isinstance(f, Quantified):
            inner_env = {**env, f.var: f.vtype}
            body = self.at(f.body, w, inner_env, depth)
            if plan.guarded(f.vtype):
                guard = apply_all(Const(plan.eiw[f.vtype.name]), Var(f.var), w)
                body = Binary("implies" if f.kind == "forall" else "and", guard, body)
            return Quantified(f.kind, f.var, plan.lift(f.vtype), body)
        if isinstance(f, Modal):
            v = self.wname(depth)
            body = self.at(f.body, Var(v), env, depth + 1)
            if plan.s5u:
                return Quantified("forall" if f.op == "box" else "exists", v, plan.mu, body)
            r = self.rel(f.index, w, Var(v))
            if f.op == "box":
                return Quantified("forall", v, plan.mu, Binary("or", Not(r), body))
            return Quantified("exists", v, plan.mu, Binary("and", r, body))
        if isinstance(f, Equality):
            t = type_of(f.lhs, plan.signature, env)
            if t == BOOL:
                return Equality(self.at(f.lhs, w, env, depth), self.at(f.rhs, w, env, depth))
            return Equality(self.lifted(f.lhs, env, depth), self.lifted(f.rhs, env, depth))
        if isinstance(f, NonClassical):
            raise UnhandledConnective(f"connective ${f.name} is not supported by the embedding")
        raise UnsupportedFeature(f"cannot embed {type(f).__name__}")

    # -- named-definition mode ----------------------------------------------
    def lifted_defs(self, f: Expr, env, depth: int) -> Expr:
        plan = self.plan
        if isinstance(f, Not):
            return HOApply(self.defn("mnot"), self.lifted_defs(f.body, env, depth))
        if isinstance(f, Binary):
            return apply_all(self.defn("m" + f.op), self.lifted_defs(f.lhs, env, depth),
                             self.lifted_defs(f.rhs, env, depth))
        if isinstance(f, Modal):
            index = f.index if f.index in plan.relations or plan.s5u else None
            rel = None if plan.s5u else plan.relation(f.index)
            return HOApply(self.defn("m" + f.op, rel, index), self.lifted_defs(f.body, env, depth))
        if isinstance(f, Quantified) and isinstance(f.vtype, BaseType) and f.vtype != BOOL:
            body = self.lifted_defs(f.body, {**env, f.var: f.vtype}, depth)
            return HOApply(self.defn("m" + f.kind, f.vtype.name, f.vtype.name), Lambda(f.var, f.vtype, body))
        w = self.wname(depth)
        return _abstract_world(w, plan.mu, self.at_inline(f, Var(w), env, depth + 1))

    def at_inline(self, f, w, env, depth):
        saved, self.plan = self.plan, _replace_defs(self.plan, False)
        try:
            return self.at(f, w, env, depth)
        finally:
            self.plan = saved

    def defn(self, kind: str, arg=None, label=None) -> Const:
        """Symbol of the named lifted connective `kind` (parameterised by `arg`)."""
        key = (kind, arg)
        if key not in self.defs_used:
            suffix = "" if label is None else "_" + _sanitize(label)
            self.defs_used[key] = fresh_name(f"{PREFIX}{kind}{suffix}", self.plan.taken)
        return Const(self.defs_used[key])


def _abstract_world(w: str, mu, body: Expr) -> Expr:
    """`^ [w: mu] : body`, eta-reduced when body is `f @ w`."""
    reduced = eta_reduce_lambda(w, body)
    return reduced if reduced is not body else Lambda(w, mu, body)


def _replace_defs(plan: EmbeddingPlan, defs: bool) -> EmbeddingPlan:
    return replace(plan, defs=defs)


def _source_avoid(problem_or_formulas) -> frozenset:
    names = set()
    for f in problem_or_formulas:
        names |= all_variables(f)
    return frozenset(names)


def embed_formula(f: Expr, plan: EmbeddingPlan) -> Expr:
    """The lifted form of a closed source formula: a target term of type world > $o."""
    f = normalize_connectives(f)
    emb = _Embedder(plan, _source_avoid([f]))
    return emb.lifted(f, {}, 0)


def embed_at(f: Expr, plan: EmbeddingPlan, world: Expr) -> Expr:
    """The target formula stating that `f` holds at `world` (inline embedding)."""
    f = normalize_connectives(f)
    emb = _Embedder(_replace_defs(plan, False), _source_avoid([f]))
    return emb.at(f, world, {}, 0)


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

def _thf(name, role, formula) -> AnnotatedFormula:
    return AnnotatedFormula("thf", name, Role(role), formula)


def _frame_formula(cond: FrameCondition, r: str, mu) -> Optional[Expr]:
    R = lambda a, b: apply_all(Const(r), Var(a), Var(b))
    fa = lambda names, body: _forall(names, mu, body)
    if cond == FrameCondition.SERIAL:
        return fa("W", Quantified("exists", "V", mu, R("W", "V")))
    if cond == FrameCondition.REFLEXIVE:
        return fa("W", R("W", "W"))
    if cond == FrameCondition.SYMMETRIC:
        return fa("WV", Binary("implies", R("W", "V"), R("V", "W")))
    if cond == FrameCondition.TRANSITIVE:
        return fa("WVU", Binary("implies", Binary("and", R("W", "V"), R("V", "U")), R("W", "U")))
    if cond == FrameCondition.EUCLIDEAN:
        return fa("WVU", Binary("implies", Binary("and", R("W", "V"), R("W", "U")), R("V", "U")))
    return None


def _forall(names, t, body):
    for n in reversed(list(names)):
        body = Quantified("forall", n, t, body)
    return body


_CONDITION_ORDER = [FrameCondition.SERIAL, FrameCondition.REFLEXIVE, FrameCondition.SYMMETRIC,
                    FrameCondition.TRANSITIVE, FrameCondition.EUCLIDEAN]


def emit_frame_axioms(plan: EmbeddingPlan) -> list:
    out = []
    for index, r in plan.relations.items():
        for cond in _CONDITION_ORDER:
            if cond in plan.frame_axioms.get(index, ()):
                out.append(_thf(f"{r}_{cond.value}", "axiom", _frame_formula(cond, r, plan.mu)))
    return out


def emit_domain_axioms(plan: EmbeddingPlan, signature: Optional[Mapping] = None) -> list:
    signature = plan.signature if signature is None else signature
    mu = plan.mu
    out = []
    for tname, eiw in plan.eiw.items():
        t = BaseType(tname)
        E = lambda x, w: apply_all(Const(eiw), x, Var(w))
        out.append(_thf(f"{eiw}_nonempty", "axiom",
                        Quantified("forall", "W", mu, Quantified("exists", "X", t, E(Var("X"), "W")))))
        sem = plan.domains[tname]
        if sem in (DomainSemantics.CUMULATIVE, DomainSemantics.DECREASING):
            src, dst = ("V", "W") if sem == DomainSemantics.CUMULATIVE else ("W", "V")
            if plan.s5u:
                body = Binary("implies", E(Var("X"), "V"), E(Var("X"), "W"))
                out.append(_thf(f"{eiw}_{sem.value}", "axiom",
                                Quantified("forall", "X", t, _forall("VW", mu, body))))
            for index, r in plan.relations.items():
                body = Binary("implies",
                              Binary("and", E(Var("X"), src), apply_all(Const(r), Var("V"), Var("W"))),
                              E(Var("X"), dst))
                out.append(_thf(f"{eiw}_{sem.value}_{r}", "axiom",
                                Quantified("forall", "X", t, _forall("VW", mu, body))))
        # local terms: every ground term denotes an existing object at every world
        for sym, st in signature.items():
            args, result = arg_types(st)
            if result != t or any(not isinstance(a, BaseType) or a == BOOL for a in args):
                continue
            xs = [f"X{k + 1}" for k in range(len(args))]
            guards = [apply_all(Const(plan.eiw[a.name]), Var(x), Var("W"))
                      for x, a in zip(xs, args) if a.name in plan.eiw]
            concl = E(apply_all(Const(sym), *(Var(x) for x in xs)), "W")
            body = Binary("implies", and_all(guards), concl) if guards else concl
            for x, a in reversed(list(zip(xs, args))):
                body = Quantified("forall", x, a, body)
            out.append(_thf(f"{eiw}_local_{_sanitize(sym)}", "axiom", Quantified("forall", "W", mu, body)))
    return out


def _definition_body(plan: EmbeddingPlan, kind: str, arg) -> tuple:
    """(type, lambda term) of a named lifted connective."""
    mu, sigma = plan.mu, plan.lifted_bool
    A, B, W, V, P, X = Var("A"), Var("B"), Var("W"), Var("V"), Var("P"), Var("X")
    lam = lambda n, t, b: Lambda(n, t, b)
    if kind == "mnot":
        return FunctionType(sigma, sigma), lam("A", sigma, lam("W", mu, Not(HOApply(A, W))))
    if kind[1:] in ("and", "or", "implies", "iff"):
        body = Binary(kind[1:], HOApply(A, W), HOApply(B, W))
        return FunctionType(sigma, FunctionType(sigma, sigma)), lam("A", sigma, lam("B", sigma, lam("W", mu, body)))
    if kind in ("mbox", "mdia"):
        if arg is None:
            q = Quantified("forall" if kind == "mbox" else "exists", "V", mu, HOApply(A, V))
        else:
            r = apply_all(Const(arg), W, V)
            q = (Quantified("forall", "V", mu, Binary("or", Not(r), HOApply(A, V))) if kind == "mbox"
                 else Quantified("exists", "V", mu, Binary("and", r, HOApply(A, V))))
        return FunctionType(sigma, sigma), lam("A", sigma, lam("W", mu, q))
    if kind in ("mforall", "mexists"):
        t = BaseType(arg)
        pt = FunctionType(t, sigma)
        body = apply_all(P, X, W)
        if plan.guarded(t):
            guard = apply_all(Const(plan.eiw[arg]), X, W)
            body = Binary("implies" if kind == "mforall" else "and", guard, body)
        q = Quantified("forall" if kind == "mforall" else "exists", "X", t, body)
        return FunctionType(pt, sigma), lam("P", pt, lam("W", mu, q))
    raise ValueError(kind)


# ---------------------------------------------------------------------------
# Problems
# ---------------------------------------------------------------------------

def _header(plan: EmbeddingPlan) -> tuple:
    spec = plan.spec
    lines = [f"% Shallow embedding into THF; logic {spec.label}, rigid designation, local consequence"]
    for index in plan.frame_axioms:
        label = ls.system_label(spec.modalities.schemes_for(index))
        name = "default" if index is None else f"#{index}"
        lines.append(f"% modality {name}: {label}" + (" (universal relation)" if plan.s5u else ""))
    for t, sem in plan.domains.items():
        lines.append(f"% domain of {t}: {sem.value}")
    if plan.s5_domain_collapse:
        lines.append("% S5 cumulative/decreasing domains treated as constant")
    if len(plan.relations) > 1 and any(s in (DomainSemantics.CUMULATIVE, DomainSemantics.DECREASING)
                                       for t, s in plan.domains.items() if t in plan.eiw):
        lines.append("% domain constraints are imposed along every accessibility relation")
    return tuple(lines)


def embed_problem(problem: Problem, spec: Optional[LogicSpec] = None,
                  options: EmbeddingOptions = EmbeddingOptions()) -> Problem:
    """Translate a source problem into a classical THF problem (local consequence)."""
    if problem.conjecture is None:
        raise MissingConjecture("the problem has no conjecture")
    p = plan(problem, spec, options)
    completed = infer_signature(problem)
    check_problem(completed)
    mu, sigma = p.mu, p.lifted_bool
    avoid = _source_avoid(af.formula for af in problem.logical_formulas())
    emb = _Embedder(p, avoid)

    premises, conjecture = [], None
    for af in problem.logical_formulas():
        f = normalize_connectives(af.formula)
        if af.role.base == "conjecture":
            conjecture = _thf(af.name, "conjecture", _at_world(emb, f, Const(p.current_world), 0))
        elif af.role.locality == "local":
            premises.append(_thf(af.name, "axiom", _at_world(emb, f, Const(p.current_world), 0)))
        else:
            w = emb.wname(0)
            premises.append(_thf(af.name, "axiom", Quantified("forall", w, mu, _at_world(emb, f, Var(w), 1))))

    decl_names = {af.name for af in problem.formulas}
    taken_af = set(decl_names) | set(p.taken)

    def decl(sym, t, name=None):
        name = name or fresh_name(f"{_sanitize(sym)}_decl", taken_af)
        taken_af.add(name)
        return _thf(name, "type", TypeDecl(sym, t))

    out = [decl(p.world_type, TTYPE, f"{p.world_type}_type")]
    user_decls = [af for af in problem.formulas if isinstance(af.formula, TypeDecl)]
    out += [AnnotatedFormula("thf", af.name, af.role, af.formula)
            for af in user_decls if af.formula.type == TTYPE]
    out.append(decl(p.current_world, mu))
    for r in p.relations.values():
        out.append(decl(r, FunctionType(mu, FunctionType(mu, BOOL))))
    for t, e in p.eiw.items():
        out.append(decl(e, FunctionType(BaseType(t), FunctionType(mu, BOOL))))
    declared = set()
    for af in user_decls:
        if af.formula.type != TTYPE:
            out.append(AnnotatedFormula("thf", af.name, af.role,
                                        TypeDecl(af.formula.name, p.lift(af.formula.type))))
            declared.add(af.formula.name)
    for sym, t in completed.signature.items():
        if sym not in declared and t != TTYPE:
            out.append(decl(sym, p.lift(t)))
    if emb.defs_used:
        for (kind, arg), name in sorted(emb.defs_used.items(), key=lambda kv: kv[1]):
            t, _ = _definition_body(p, kind, arg)
            out.append(decl(name, t))
    out += emit_frame_axioms(p)
    out += emit_domain_axioms(p, completed.signature)
    if emb.defs_used:
        for (kind, arg), name in sorted(emb.defs_used.items(), key=lambda kv: kv[1]):
            _, body = _definition_body(p, kind, arg)
            out.append(_thf(f"{name}_def", "definition", Equality(Const(name), body)))
    out += premises
    out.append(conjecture)

    sig = {af.formula.name: af.formula.type for af in out if isinstance(af.formula, TypeDecl)}
    return Problem(tuple(out), None, sig, TARGET, _header(p))


def _at_world(emb: _Embedder, f: Expr, w: Expr, depth: int) -> Expr:
    if emb.plan.defs:
        return HOApply(emb.lifted_defs(f, {}, depth), w)
    return emb.at(f, w, {}, depth)
