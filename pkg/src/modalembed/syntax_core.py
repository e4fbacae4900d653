"""Abstract syntax shared by the parser, the embedding and the oracle.

One expression hierarchy covers both the modal source language (NXF/NHF)
and the classical higher-order target language (THF).  Terms and formulae
are the same Python classes; which positions they may occupy is decided by
typing, not by the class hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union

from modalembed.errors import ArityConflict, SortConflict, TypeCheckError


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BaseType:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class FunctionType:
    domain: "SimpleType"
    codomain: "SimpleType"

    def __str__(self):
        dom = f"({self.domain})" if isinstance(self.domain, FunctionType) else str(self.domain)
        return f"{dom} > {self.codomain}"


SimpleType = Union[BaseType, FunctionType]

INDIVIDUAL = BaseType("$i")
BOOL = BaseType("$o")
TTYPE = BaseType("$tType")


def fn_type(*types: SimpleType) -> SimpleType:
    """Right-nested function type: fn_type(a, b, c) is a > (b > c)."""
    result = types[-1]
    for t in reversed(types[:-1]):
        result = FunctionType(t, result)
    return result


def arg_types(t: SimpleType) -> tuple[list[SimpleType], SimpleType]:
    args = []
    while isinstance(t, FunctionType):
        args.append(t.domain)
        t = t.codomain
    return args, t


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expr:
    """Base class of every term and formula node."""

    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    """A symbol occurrence without arguments (constant, propositional atom in THF, `$word`)."""
    name: str


@dataclass(frozen=True)
class App(Expr):
    """First-order functional application `f(t1, ..., tn)` in term position."""
    func: str
    args: tuple


@dataclass(frozen=True)
class Atom(Expr):
    """First-order atom `p(t1, ..., tn)` (or `p`) in formula position."""
    pred: str
    args: tuple = ()


@dataclass(frozen=True)
class Equality(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Not(Expr):
    body: Expr


# binary connective names and their TPTP spelling
BINARY_OPS = {
    "and": "&",
    "or": "|",
    "implies": "=>",
    "implied_by": "<=",
    "iff": "<=>",
    "xor": "<~>",
}
ASSOCIATIVE_OPS = frozenset({"and", "or"})


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    lhs: Expr
    rhs: Expr

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary connective {self.op!r}")


@dataclass(frozen=True)
class Quantified(Expr):
    kind: str  # "forall" | "exists"
    var: str
    vtype: SimpleType
    body: Expr

    def __post_init__(self):
        if self.kind not in ("forall", "exists"):
            raise ValueError(f"unknown quantifier {self.kind!r}")


@dataclass(frozen=True)
class Modal(Expr):
    op: str  # "box" | "dia"
    index: Optional[str]
    body: Expr

    def __post_init__(self):
        if self.op not in ("box", "dia"):
            raise ValueError(f"unknown modal operator {self.op!r}")


@dataclass(frozen=True)
class NonClassical(Expr):
    """A `{$name(#index, key := value)}` connective outside the modal set.

    With ``args == ()`` it denotes the bare connective (used as a term, e.g.
    as the key of a logic specification entry).
    """
    name: str
    index: Optional[str] = None
    params: tuple = ()  # tuple of (key, Expr) pairs
    args: tuple = ()


@dataclass(frozen=True)
class Truth(Expr):
    value: bool


@dataclass(frozen=True)
class Lambda(Expr):
    var: str
    vtype: SimpleType
    body: Expr


@dataclass(frozen=True)
class HOApply(Expr):
    fun: Expr
    arg: Expr


@dataclass(frozen=True)
class TermList(Expr):
    """`[t1, ..., tn]`; appears in logic specifications and connective parameters."""
    items: tuple


@dataclass(frozen=True)
class SpecEq(Expr):
    """`lhs == rhs` inside a logic specification."""
    lhs: Expr
    rhs: Expr


def and_all(items: Iterable[Expr]) -> Expr:
    items = list(items)
    if not items:
        return Truth(True)
    out = items[0]
    for f in items[1:]:
        out = Binary("and", out, f)
    return out


def apply_all(head: Expr, *args: Expr) -> Expr:
    for a in args:
        head = HOApply(head, a)
    return head


def forall(vars_: Iterable[tuple[str, SimpleType]], body: Expr) -> Expr:
    for name, t in reversed(list(vars_)):
        body = Quantified("forall", name, t, body)
    return body


# ---------------------------------------------------------------------------
# Annotated formulae and problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Role:
    base: str
    subrole: Optional[str] = None

    def __str__(self):
        return self.base if self.subrole is None else f"{self.base}-{self.subrole}"

    @property
    def locality(self) -> str:
        """`local` or `global` reading of a premise or conjecture."""
        if self.base == "conjecture":
            return "local"
        if self.subrole in ("local", "global"):
            return self.subrole
        return "local" if self.base == "hypothesis" else "global"


@dataclass(frozen=True)
class TypeDecl:
    name: str
    type: SimpleType


@dataclass(frozen=True)
class AnnotatedFormula:
    language: str  # tff | thf | fof | qmf
    name: str
    role: Role
    formula: Union[Expr, TypeDecl]
    source: Optional[str] = None
    useful_info: Optional[str] = None


SOURCE = "source"
TARGET = "target"


@dataclass(frozen=True)
class Problem:
    formulas: tuple
    logic_spec: object = None  # logic_spec.LogicSpec
    signature: Mapping[str, SimpleType] = field(default_factory=dict)
    stage: str = SOURCE
    header: tuple = field(default=(), compare=False)
    diagnostics: tuple = field(default=(), compare=False)

    def named(self, name: str) -> AnnotatedFormula:
        for af in self.formulas:
            if af.name == name:
                return af
        raise KeyError(name)

    @property
    def conjecture(self) -> Optional[AnnotatedFormula]:
        for af in self.formulas:
            if af.role.base == "conjecture":
                return af
        return None

    @property
    def logic_formula(self) -> Optional[AnnotatedFormula]:
        for af in self.formulas:
            if af.role.base == "logic":
                return af
        return None

    def logical_formulas(self) -> list[AnnotatedFormula]:
        return [af for af in self.formulas if af.role.base not in ("type", "logic")]


# ---------------------------------------------------------------------------
# Traversals
# ---------------------------------------------------------------------------

def children(e: Expr) -> tuple:
    if isinstance(e, (Var, Const, Truth)):
        return ()
    if isinstance(e, (App, Atom)):
        return e.args
    if isinstance(e, Equality):
        return (e.lhs, e.rhs)
    if isinstance(e, Not):
        return (e.body,)
    if isinstance(e, Binary):
        return (e.lhs, e.rhs)
    if isinstance(e, (Quantified, Lambda, Modal)):
        return (e.body,)
    if isinstance(e, NonClassical):
        return tuple(v for _, v in e.params) + e.args
    if isinstance(e, HOApply):
        return (e.fun, e.arg)
    if isinstance(e, TermList):
        return e.items
    if isinstance(e, SpecEq):
        return (e.lhs, e.rhs)
    raise TypeError(f"not an expression: {e!r}")


def subterms(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_variables(e: Expr) -> frozenset:
    """Names of the variables with a free occurrence in `e`."""
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, (Quantified, Lambda)):
        return free_variables(e.body) - {e.var}
    out = frozenset()
    for c in children(e):
        out |= free_variables(c)
    return out


def all_variables(e: Expr) -> frozenset:
    names = set()
    for node in subterms(e):
        if isinstance(node, Var):
            names.add(node.name)
        elif isinstance(node, (Quantified, Lambda)):
            names.add(node.var)
    return frozenset(names)


def modal_depth(e: Expr) -> int:
    inner = max((modal_depth(c) for c in children(e)), default=0)
    if isinstance(e, Modal) or (isinstance(e, NonClassical) and e.args):
        return inner + 1
    return inner


def quantifier_depth(e: Expr) -> int:
    inner = max((quantifier_depth(c) for c in children(e)), default=0)
    return inner + 1 if isinstance(e, Quantified) else inner


def contains_modal(e: Expr) -> bool:
    return any(isinstance(n, (Modal, NonClassical)) for n in subterms(e))


def modal_indices(e: Expr) -> set:
    return {n.index for n in subterms(e) if isinstance(n, Modal)}


# ---------------------------------------------------------------------------
# Normalisation helpers
# ---------------------------------------------------------------------------

def map_children(e: Expr, fn) -> Expr:
    """Rebuild `e` with `fn` applied to every direct child."""
    if isinstance(e, (Var, Const, Truth)):
        return e
    if isinstance(e, App):
        return App(e.func, tuple(fn(a) for a in e.args))
    if isinstance(e, Atom):
        return Atom(e.pred, tuple(fn(a) for a in e.args))
    if isinstance(e, Equality):
        return Equality(fn(e.lhs), fn(e.rhs))
    if isinstance(e, Not):
        return Not(fn(e.body))
    if isinstance(e, Binary):
        return Binary(e.op, fn(e.lhs), fn(e.rhs))
    if isinstance(e, Quantified):
        return Quantified(e.kind, e.var, e.vtype, fn(e.body))
    if isinstance(e, Lambda):
        return Lambda(e.var, e.vtype, fn(e.body))
    if isinstance(e, Modal):
        return Modal(e.op, e.index, fn(e.body))
    if isinstance(e, NonClassical):
        return NonClassical(e.name, e.index, tuple((k, fn(v)) for k, v in e.params),
                            tuple(fn(a) for a in e.args))
    if isinstance(e, HOApply):
        return HOApply(fn(e.fun), fn(e.arg))
    if isinstance(e, TermList):
        return TermList(tuple(fn(i) for i in e.items))
    if isinstance(e, SpecEq):
        return SpecEq(fn(e.lhs), fn(e.rhs))
    raise TypeError(f"not an expression: {e!r}")


def normalize_connectives(e: Expr) -> Expr:
    """Rewrite `<~>` and `<=` into the primitives ~, |, &, =>, <=>."""
    e = map_children(e, normalize_connectives)
    if isinstance(e, Binary):
        if e.op == "xor":
            return Not(Binary("iff", e.lhs, e.rhs))
        if e.op == "implied_by":
            return Binary("implies", e.rhs, e.lhs)
    return e


def fresh_name(base: str, taken) -> str:
    if base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def substitute(e: Expr, name: str, value: Expr) -> Expr:
    """Capture-avoiding substitution of `value` for free `name` in `e`."""
    if isinstance(e, Var):
        return value if e.name == name else e
    if isinstance(e, (Quantified, Lambda)):
        if e.var == name:
            return e
        fv = free_variables(value)
        if e.var in fv and name in free_variables(e.body):
            new = fresh_name(e.var, fv | all_variables(e.body) | {name})
            body = substitute(e.body, e.var, Var(new))
            e = (Quantified(e.kind, new, e.vtype, body) if isinstance(e, Quantified)
                 else Lambda(new, e.vtype, body))
        return map_children(e, lambda c: substitute(c, name, value))
    return map_children(e, lambda c: substitute(c, name, value))


def beta_normalize(e: Expr) -> Expr:
    """Normal-order beta reduction to beta-normal form (terminates on well-typed input)."""
    if isinstance(e, HOApply):
        fun = beta_normalize(e.fun)
        if isinstance(fun, Lambda):
            return beta_normalize(substitute(fun.body, fun.var, e.arg))
        return HOApply(fun, beta_normalize(e.arg))
    return map_children(e, beta_normalize)


def is_beta_normal(e: Expr) -> bool:
    return not any(isinstance(n, HOApply) and isinstance(n.fun, Lambda) for n in subterms(e))


def alpha_equal(a: Expr, b: Expr) -> bool:
    """Structural equality up to renaming of bound variables."""
    return _alpha(a, b, {}, {}, 0)


def _alpha(a, b, env_a, env_b, depth):
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        la, lb = env_a.get(a.name), env_b.get(b.name)
        if la is None and lb is None:
            return a.name == b.name
        return la == lb
    if isinstance(a, (Quantified, Lambda)):
        if a.vtype != b.vtype or getattr(a, "kind", None) != getattr(b, "kind", None):
            return False
        return _alpha(a.body, b.body, {**env_a, a.var: depth}, {**env_b, b.var: depth}, depth + 1)
    if isinstance(a, (Const, Truth)):
        return a == b
    if isinstance(a, (App, Atom)):
        if (getattr(a, "func", None), getattr(a, "pred", None)) != \
                (getattr(b, "func", None), getattr(b, "pred", None)):
            return False
    elif isinstance(a, Binary):
        if a.op != b.op:
            return False
    elif isinstance(a, Modal):
        if (a.op, a.index) != (b.op, b.index):
            return False
    elif isinstance(a, NonClassical):
        if (a.name, a.index, [k for k, _ in a.params]) != (b.name, b.index, [k for k, _ in b.params]):
            return False
    ca, cb = children(a), children(b)
    return len(ca) == len(cb) and all(_alpha(x, y, env_a, env_b, depth) for x, y in zip(ca, cb))


def eta_reduce_lambda(var: str, body: Expr) -> Expr:
    """`^[var]: body`, or `f` when body is `f @ var` with var not free in f."""
    if isinstance(body, HOApply) and body.arg == Var(var) and var not in free_variables(body.fun):
        return body.fun
    return body


# ---------------------------------------------------------------------------
# Typing
# ---------------------------------------------------------------------------

def type_of(e: Expr, signature: Mapping[str, SimpleType], env: Mapping[str, SimpleType] = None) -> SimpleType:
    """Infer the simple type of `e`; raises TypeCheckError on ill-typed input."""
    env = env or {}
    if isinstance(e, Var):
        if e.name not in env:
            raise TypeCheckError(f"unbound variable {e.name}")
        return env[e.name]
    if isinstance(e, Truth):
        return BOOL
    if isinstance(e, Const):
        if e.name not in signature:
            raise TypeCheckError(f"undeclared symbol {e.name}")
        return signature[e.name]
    if isinstance(e, (App, Atom)):
        head = e.func if isinstance(e, App) else e.pred
        if head not in signature:
            raise TypeCheckError(f"undeclared symbol {head}")
        t = signature[head]
        for a in e.args:
            if not isinstance(t, FunctionType):
                raise TypeCheckError(f"{head} applied to too many arguments")
            at = type_of(a, signature, env)
            if at != t.domain:
                raise TypeCheckError(f"argument of {head} has type {at}, expected {t.domain}")
            t = t.codomain
        if isinstance(e, Atom) and t != BOOL:
            raise TypeCheckError(f"{head} used as a formula but has type {t}")
        return t
    if isinstance(e, HOApply):
        ft = type_of(e.fun, signature, env)
        if not isinstance(ft, FunctionType):
            raise TypeCheckError(f"application of non-function of type {ft}")
        at = type_of(e.arg, signature, env)
        if at != ft.domain:
            raise TypeCheckError(f"argument has type {at}, expected {ft.domain}")
        return ft.codomain
    if isinstance(e, Lambda):
        return FunctionType(e.vtype, type_of(e.body, signature, {**env, e.var: e.vtype}))
    if isinstance(e, Quantified):
        _expect_bool(e.body, signature, {**env, e.var: e.vtype})
        return BOOL
    if isinstance(e, Equality):
        lt = type_of(e.lhs, signature, env)
        rt = type_of(e.rhs, signature, env)
        if lt != rt:
            raise TypeCheckError(f"equality between {lt} and {rt}")
        return BOOL
    if isinstance(e, Not):
        _expect_bool(e.body, signature, env)
        return BOOL
    if isinstance(e, Binary):
        _expect_bool(e.lhs, signature, env)
        _expect_bool(e.rhs, signature, env)
        return BOOL
    if isinstance(e, Modal):
        _expect_bool(e.body, signature, env)
        return BOOL
    if isinstance(e, NonClassical):
        for a in e.args:
            _expect_bool(a, signature, env)
        return BOOL
    raise TypeCheckError(f"cannot type {type(e).__name__}")


def _expect_bool(e, signature, env):
    t = type_of(e, signature, env)
    if t != BOOL:
        raise TypeCheckError(f"expected a formula, found type {t}")


def check_problem(problem: Problem) -> None:
    """Raise TypeCheckError unless every logical formula is closed and of type $o."""
    for af in problem.logical_formulas():
        fv = free_variables(af.formula)
        if fv:
            raise TypeCheckError(f"{af.name}: free variables {sorted(fv)}")
        try:
            _expect_bool(af.formula, problem.signature, {})
        except TypeCheckError as exc:
            raise TypeCheckError(f"{af.name}: {exc}") from None


# ---------------------------------------------------------------------------
# Signature inference
# ---------------------------------------------------------------------------

def declared_signature(formulas: Iterable[AnnotatedFormula]) -> dict:
    return {af.formula.name: af.formula.type for af in formulas if isinstance(af.formula, TypeDecl)}


def infer_signature(problem: Problem) -> Problem:
    """Complete the signature of an untyped (QMLTP-style) first-order problem.

    Undeclared predicates and functions are monomorphised onto `$i`; declared
    types are never overridden.
    """
    declared = declared_signature(problem.formulas)
    declared.update({k: v for k, v in problem.signature.items() if k not in declared})
    uses: dict = {}  # name -> (sort, arity); sort in {"pred", "func"}

    def note(name, sort, arity):
        if name in declared:
            return
        prev = uses.get(name)
        if prev is None:
            uses[name] = (sort, arity)
        elif prev[0] != sort:
            raise SortConflict(f"{name} is used both as a predicate and as a function")
        elif prev[1] != arity:
            raise ArityConflict(f"{name} is used with arities {prev[1]} and {arity}")

    def visit_term(t):
        if isinstance(t, Const):
            if not t.name.startswith("$"):
                note(t.name, "func", 0)
        elif isinstance(t, App):
            note(t.func, "func", len(t.args))
            for a in t.args:
                visit_term(a)
        elif isinstance(t, Var):
            pass
        else:
            visit_formula(t)

    def visit_formula(f):
        if isinstance(f, Atom):
            if not f.pred.startswith("$"):
                note(f.pred, "pred", len(f.args))
            for a in f.args:
                visit_term(a)
        elif isinstance(f, Const):
            if not f.name.startswith("$"):
                note(f.name, "pred", 0)
        elif isinstance(f, Equality):
            visit_term(f.lhs)
            visit_term(f.rhs)
        elif isinstance(f, HOApply):
            head, args = _spine(f)
            if isinstance(head, Const) and not head.name.startswith("$"):
                note(head.name, "pred", len(args))
                for a in args:
                    visit_term(a)
            else:
                for c in children(f):
                    visit_formula(c)
        elif isinstance(f, (Var, Truth)):
            pass
        elif isinstance(f, NonClassical):
            for a in f.args:
                visit_formula(a)
        else:
            for c in children(f):
                visit_formula(c)

    for af in problem.logical_formulas():
        visit_formula(af.formula)

    sig = dict(declared)
    for name, (sort, arity) in uses.items():
        result = BOOL if sort == "pred" else INDIVIDUAL
        sig[name] = fn_type(*([INDIVIDUAL] * arity), result)
    return Problem(problem.formulas, problem.logic_spec, sig, problem.stage,
                   problem.header, problem.diagnostics)


def _spine(e: Expr):
    args = []
    while isinstance(e, HOApply):
        args.append(e.arg)
        e = e.fun
    return e, list(reversed(args))


spine = _spine
