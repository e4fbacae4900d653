"""Deterministic TPTP printer for source (tff/thf with connectives) and target (thf) problems.

Layout: an annotated formula goes on one line when it fits in 120 columns;
otherwise the formula starts on a new line indented by four spaces and is
broken at connectives, quantifier bodies and application spines.
"""

from __future__ import annotations

import re

from modalembed.errors import StageMismatch
from modalembed.syntax_core import (
    BINARY_OPS, SOURCE, TARGET, AnnotatedFormula, App, Atom, Binary, Const, Equality, Expr,
    FunctionType, HOApply, Lambda, Modal, NonClassical, Not, Problem, Quantified, SpecEq, TermList,
    Truth, TypeDecl, Var, BaseType, contains_modal, spine,
)

WIDTH = 120
INDENT = 4
STEP = 2

_PLAIN_NAME = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")
_AF_NAME = re.compile(r"([a-z][a-zA-Z0-9_]*|[0-9]+)\Z")


def quote_name(name: str) -> str:
    if _PLAIN_NAME.match(name) or name.startswith("$") or name.startswith('"') or name[:1].isdigit():
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _af_name(name: str) -> str:
    return name if _AF_NAME.match(name) else "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


# ---------------------------------------------------------------------------
# Documents: str | Cat(parts) | Group(parts)
# A Group prints flat when it fits, else one part per line, indented.
# ---------------------------------------------------------------------------

class Cat(tuple):
    pass


class Group(tuple):
    pass


class HangGroup(Group):
    """A group whose parts after the second align under the second part's content."""


def _flat(doc) -> str:
    if isinstance(doc, str):
        return doc
    if isinstance(doc, Cat):
        return "".join(_flat(d) for d in doc)
    return " ".join(_flat(d) for d in doc)


def _render(doc, indent: int, col: int, limit: int) -> str:
    flat = _flat(doc)
    if isinstance(doc, str) or col + len(flat) <= limit:
        return flat
    if isinstance(doc, Cat):
        out = ""
        for part in doc:
            text = _render(part, indent, col, limit)
            out += text
            col = len(text) - text.rindex("\n") - 1 if "\n" in text else col + len(text)
        return out
    inner = indent + STEP
    out = _render(doc[0], inner, col, limit)
    for i, part in enumerate(doc[1:], 1):
        at = inner + STEP if isinstance(doc, HangGroup) and i > 1 else inner
        out += "\n" + " " * at + _render(part, at, at, limit)
    return out


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

def format_type(t, higher_order: bool = True) -> str:
    if isinstance(t, BaseType):
        return quote_name(t.name)
    if higher_order:
        dom = format_type(t.domain, True)
        if isinstance(t.domain, FunctionType):
            dom = f"({dom})"
        return f"{dom} > {format_type(t.codomain, True)}"
    args = []
    while isinstance(t, FunctionType):
        args.append(t.domain)
        t = t.codomain
    parts = [f"({format_type(a, False)})" if isinstance(a, FunctionType) else format_type(a, False)
             for a in args]
    lhs = parts[0] if len(parts) == 1 else "(" + " * ".join(parts) + ")"
    return f"{lhs} > {format_type(t, False)}"


# ---------------------------------------------------------------------------
# Formulae
# ---------------------------------------------------------------------------

_ATOMIC = (Var, Const, App, Atom, Truth)


class _Formatter:
    def __init__(self, higher_order: bool, untyped: bool = False):
        self.ho = higher_order
        self.untyped = untyped

    def doc(self, e: Expr):
        if isinstance(e, Var):
            return e.name
        if isinstance(e, Const):
            return quote_name(e.name)
        if isinstance(e, Truth):
            return "$true" if e.value else "$false"
        if isinstance(e, (App, Atom)):
            head = quote_name(e.func if isinstance(e, App) else e.pred)
            if not e.args:
                return head
            return Cat((head, "(", ",".join(_flat(self.doc(a)) for a in e.args), ")"))
        if isinstance(e, Equality):
            return Cat((self.side(e.lhs), " = ", self.side(e.rhs)))
        if isinstance(e, Not):
            return Cat(("~ ", self.unit(e.body)))
        if isinstance(e, Binary):
            return self.binary(e)
        if isinstance(e, (Quantified, Lambda)):
            return self.binder(e)
        if isinstance(e, Modal):
            return self.connective(e.op, e.index, (), (e.body,))
        if isinstance(e, NonClassical):
            return self.connective(e.name, e.index, e.params, e.args)
        if isinstance(e, HOApply):
            head, args = spine(e)
            parts = [self.atomic(head)] + [Cat(("@ ", self.atomic(a))) for a in args]
            return Group(parts)
        if isinstance(e, TermList):
            return Cat(("[", ",".join(_flat(self.doc(i)) for i in e.items), "]"))
        if isinstance(e, SpecEq):
            return self.spec_eq(e)
        raise TypeError(f"cannot print {e!r}")

    @staticmethod
    def paren(doc):
        return Cat(("(", doc, ")"))

    def is_unitary(self, e) -> bool:
        if isinstance(e, _ATOMIC):
            return True
        if isinstance(e, NonClassical) and not e.args:
            return True
        return not self.ho and isinstance(e, (Modal, NonClassical))

    def unit(self, e):
        """Operand of ~ and quantifier bodies."""
        if self.is_unitary(e) or isinstance(e, (Not, Quantified, Lambda)):
            return self.doc(e)
        return self.paren(self.doc(e))

    def side(self, e):
        """Operand of =."""
        return self.doc(e) if self.is_unitary(e) else self.paren(self.doc(e))

    def atomic(self, e):
        """Head or argument of an @ chain."""
        if isinstance(e, _ATOMIC) or (isinstance(e, NonClassical) and not e.args):
            return self.doc(e)
        return self.paren(self.doc(e))

    def operand(self, e):
        if self.is_unitary(e) or isinstance(e, Not):
            return self.doc(e)
        return self.paren(self.doc(e))

    def binary(self, e: Binary):
        op = BINARY_OPS[e.op]
        operands = []
        node = e
        if e.op in ("and", "or"):
            while isinstance(node, Binary) and node.op == e.op:
                operands.append(node.rhs)
                node = node.lhs
            operands.append(node)
            operands.reverse()
        else:
            operands = [e.lhs, e.rhs]
        parts = [self.operand(operands[0])] + [Cat((op + " ", self.operand(o))) for o in operands[1:]]
        return Group(parts)

    def binder(self, e):
        sym = {"forall": "!", "exists": "?"}.get(getattr(e, "kind", None), "^")
        bound = []
        node = e
        while type(node) is type(e) and getattr(node, "kind", None) == getattr(e, "kind", None):
            bound.append(node)
            node = node.body
        if self.untyped:
            vars_ = ",".join(b.var for b in bound)
        else:
            vars_ = ", ".join(f"{b.var}: {format_type(b.vtype, self.ho)}" for b in bound)
        body = self.unit(node)
        if isinstance(node, Equality):
            body = self.paren(self.doc(node))
        return Group((f"{sym} [{vars_}] :", body))

    def connective(self, name, index, params, args):
        inner = []
        if index is not None:
            inner.append("#" + index)
        inner += [f"{k} := {_flat(self.doc(v))}" for k, v in params]
        conn = "{$" + name + (f"({','.join(inner)})" if inner else "") + "}"
        if not args:
            return conn
        if self.ho:
            return Group([conn] + [Cat(("@ ", self.atomic(a))) for a in args])
        if len(args) == 1:
            return Group((conn + " @", self.paren(self.doc(args[0]))))
        return Group((conn + " @", Cat(("(", ", ".join(_flat(self.doc(a)) for a in args), ")"))))

    def spec_eq(self, e: SpecEq):
        lhs = _flat(self.doc(e.lhs))
        if isinstance(e.rhs, TermList):
            items = [self.doc(i) for i in e.rhs.items]
            if not items:
                return f"{lhs} == []"
            body = [Cat(("[ ", items[0], "," if len(items) > 1 else " ]"))]
            for i, item in enumerate(items[1:], 1):
                body.append(Cat((item, "," if i < len(items) - 1 else " ]")))
            return HangGroup([f"{lhs} =="] + body)
        return Cat((lhs, " == ", self.doc(e.rhs)))


def format_formula(e: Expr, language: str = "tff") -> str:
    return _flat(_Formatter(language == "thf", language in ("fof", "qmf", "cnf")).doc(e))


def format_annotated(af: AnnotatedFormula) -> str:
    fmt = _Formatter(af.language == "thf", af.language in ("fof", "qmf", "cnf"))
    if isinstance(af.formula, TypeDecl):
        doc = Cat((quote_name(af.formula.name), ": ", format_type(af.formula.type, af.language == "thf")))
    else:
        doc = fmt.doc(af.formula)
    tail = ""
    if af.source is not None:
        tail += ", " + af.source
        if af.useful_info is not None:
            tail += ", " + af.useful_info
    head = f"{af.language}({_af_name(af.name)},{af.role},"
    line = f"{head} {_flat(doc)}{tail} )."
    if len(line) <= WIDTH:
        return line
    body = _render(doc, INDENT, INDENT, WIDTH - 3)
    if tail:
        return f"{head}\n{' ' * INDENT}{body},\n{' ' * INDENT}{tail[2:]} )."
    return f"{head}\n{' ' * INDENT}{body} )."


def print_problem(problem: Problem, style: str = "thf") -> str:
    """Serialize a problem.  `style` is `thf` for embedded output, `nxf`/`nhf` for source problems."""
    if style not in ("thf", "nxf", "nhf"):
        raise ValueError(f"unknown print style {style!r}")
    expected = TARGET if style == "thf" else SOURCE
    if problem.stage != expected:
        raise StageMismatch(f"cannot print a {problem.stage}-stage problem in {style} style")
    if style == "thf":
        for af in problem.formulas:
            if af.language != "thf":
                raise StageMismatch(f"{af.name}: {af.language} formula in a thf problem")
            if isinstance(af.formula, Expr) and contains_modal(af.formula):
                raise StageMismatch(f"{af.name}: modal connective in a target-stage problem")
    lines = list(problem.header)
    if lines:
        lines.append("")
    lines += [format_annotated(af) for af in problem.formulas]
    return "\n".join(lines) + "\n"
