"""Parser for TPTP problem files in the tff/thf dialects with non-classical
connectives and logic specifications, plus the QMLTP `qmf` converter."""

from __future__ import annotations

import enum
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from modalembed import logic_spec as ls
from modalembed.errors import LogicSpecError, ParseError
from modalembed.syntax_core import (
    BOOL, INDIVIDUAL, SOURCE, TARGET, AnnotatedFormula, App, Atom, Binary, Const, Equality, Expr,
    FunctionType, HOApply, Lambda, Modal, NonClassical, Not, Problem, Quantified, Role, SpecEq,
    TermList, Truth, TypeDecl, Var, BaseType, contains_modal, declared_signature, subterms,
)

DEFAULT_MAX_BYTES = 32 * 1024 * 1024

MODAL_ALIASES = {"box": "box", "necessary": "box", "dia": "dia", "possible": "dia"}


class Dialect(str, enum.Enum):
    NXF = "nxf"
    NHF = "nhf"
    THF = "thf"
    QMLTP = "qmltp"


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str  # "error" | "warning"
    line: int
    column: int
    message: str

    def __str__(self):
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_PUNCT = ["<=>", "<~>", "~|", "~&", "=>", "<=", "!=", "==", ":=", "!!", "??",
          "(", ")", "[", "]", "{", "}", ",", ".", ":", "!", "?", "^", "@", "~", "|", "&",
          "=", ">", "*", "#", "-", "+", "<"]

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>%[^\n]*)
  | (?P<block>/\*.*?\*/)
  | (?P<squote>'(?:\\.|[^'\\\n])*')
  | (?P<dquote>"(?:\\.|[^"\\\n])*")
  | (?P<dollar>\$\$?[a-zA-Z_][a-zA-Z0-9_]*)
  | (?P<upper>[A-Z][a-zA-Z0-9_]*)
  | (?P<lower>[a-z][a-zA-Z0-9_]*)
  | (?P<number>[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?(?:/[0-9]+)?)
  | (?P<punct>""" + "|".join(re.escape(p) for p in _PUNCT) + r""")
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


EOF = "eof"


def tokenize(text: str):
    """Return (tokens, leading comment lines)."""
    tokens, header = [], []
    pos, line, line_start = 0, 1, 0
    seen_token = False
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError([ParseDiagnostic("error", line, pos - line_start + 1,
                                              f"unexpected character {text[pos]!r}")])
        kind = m.lastgroup
        value = m.group()
        if kind == "comment":
            if not seen_token:
                header.append(value.rstrip())
        elif kind not in ("ws", "block"):
            seen_token = True
            tokens.append(Token(kind, value, line, pos - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token(EOF, "", line, pos - line_start + 1))
    return tokens, tuple(header)


def _unquote(text: str) -> str:
    return re.sub(r"\\(.)", r"\1", text[1:-1])


# ---------------------------------------------------------------------------
# Recursive descent
# ---------------------------------------------------------------------------

class _Fail(Exception):
    def __init__(self, token, message):
        self.token = token
        self.message = message


_BINOPS = {"&": "and", "|": "or", "=>": "implies", "<=": "implied_by", "<=>": "iff",
           "<~>": "xor", "~|": "nor", "~&": "nand"}


class _Parser:
    def __init__(self, tokens, qmltp=False):
        self.toks = tokens
        self.i = 0
        self.qmltp = qmltp
        self.higher_order = False
        self.untyped = False
        self.warnings = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text) -> bool:
        t = self.tok
        return t.kind == "punct" and t.text == text

    def advance(self) -> Token:
        t = self.tok
        if t.kind != EOF:
            self.i += 1
        return t

    def expect(self, text) -> Token:
        if not self.at(text):
            raise _Fail(self.tok, f"expected '{text}', found {self.describe(self.tok)}")
        return self.advance()

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == EOF else f"'{t.text}'"

    # top level
    def parse_file(self):
        entries = []
        while self.tok.kind != EOF:
            entries.append(self.parse_entry())
        return entries

    def parse_entry(self):
        t = self.tok
        if t.kind != "lower":
            raise _Fail(t, f"expected an annotated formula, found {self.describe(t)}")
        if t.text == "include":
            return self.parse_include()
        if t.text not in ("tff", "thf", "fof", "qmf", "cnf"):
            raise _Fail(t, f"unknown formula language '{t.text}'")
        lang = self.advance().text
        self.higher_order = lang == "thf"
        self.untyped = lang in ("fof", "qmf", "cnf")
        if lang == "qmf" and not self.qmltp:
            raise _Fail(t, "qmf formulae need the QMLTP converter")
        self.expect("(")
        name = self.parse_name()
        self.expect(",")
        role = self.parse_role()
        self.expect(",")
        if role.base == "type":
            formula = self.parse_type_decl()
        elif role.base == "logic":
            formula = self.parse_spec()
        else:
            formula = self.parse_formula()
        source = info = None
        if self.at(","):
            self.advance()
            source = self.parse_general_text()
            if self.at(","):
                self.advance()
                info = self.parse_general_text()
        self.expect(")")
        self.expect(".")
        return AnnotatedFormula(lang, name, role, formula, source, info), t

    def parse_include(self):
        start = self.advance()
        self.expect("(")
        t = self.tok
        if t.kind != "squote":
            raise _Fail(t, "include expects a quoted file name")
        self.advance()
        selection = None
        if self.at(","):
            self.advance()
            self.expect("[")
            selection = []
            if not self.at("]"):
                selection.append(self.parse_name())
                while self.at(","):
                    self.advance()
                    selection.append(self.parse_name())
            self.expect("]")
        self.expect(")")
        self.expect(".")
        return ("include", _unquote(t.text), selection), start

    def parse_name(self) -> str:
        t = self.tok
        if t.kind in ("lower", "upper", "number"):
            self.advance()
            return t.text
        if t.kind == "squote":
            self.advance()
            return _unquote(t.text)
        raise _Fail(t, f"expected a name, found {self.describe(t)}")

    def parse_role(self) -> Role:
        t = self.tok
        if t.kind != "lower":
            raise _Fail(t, f"expected a formula role, found {self.describe(t)}")
        self.advance()
        sub = None
        if self.at("-"):
            self.advance()
            s = self.tok
            if s.kind != "lower":
                raise _Fail(s, "expected a subrole after '-'")
            sub = self.advance().text
        return Role(t.text, sub)

    def parse_general_text(self) -> str:
        """Consume one general term and return its token text, canonically spaced."""
        depth, parts = 0, []
        while True:
            t = self.tok
            if t.kind == EOF:
                raise _Fail(t, "unterminated annotation")
            if depth == 0 and t.kind == "punct" and t.text in (",", ")"):
                break
            if t.kind == "punct" and t.text in "([":
                depth += 1
            elif t.kind == "punct" and t.text in ")]":
                depth -= 1
            parts.append(t.text)
            self.advance()
        if not parts:
            raise _Fail(self.tok, "empty annotation")
        return "".join(parts)

    # types
    def parse_type_decl(self) -> TypeDecl:
        if self.at("("):
            self.advance()
            decl = self.parse_type_decl()
            self.expect(")")
            return decl
        t = self.tok
        if t.kind in ("lower", "squote", "dollar"):
            name = self.parse_symbol_name()
        else:
            raise _Fail(t, f"expected a symbol name in type declaration, found {self.describe(t)}")
        self.expect(":")
        return TypeDecl(name, self.parse_type())

    def parse_symbol_name(self) -> str:
        t = self.advance()
        return _unquote(t.text) if t.kind == "squote" else t.text

    def parse_type(self):
        if not self.higher_order and self.at("("):
            # tff: (a * b) > c, or a parenthesised atomic type
            open_tok = self.advance()
            parts = [self.parse_type()]
            while self.at("*"):
                self.advance()
                parts.append(self.parse_type())
            self.expect(")")
            if len(parts) > 1:
                if not self.at(">"):
                    raise _Fail(open_tok, "product type must be followed by '>'")
                self.advance()
                result = self.parse_type()
                for p in reversed(parts):
                    result = FunctionType(p, result)
                return result
            left = parts[0]
        else:
            left = self.parse_unitary_type()
        if self.at(">"):
            self.advance()
            return FunctionType(left, self.parse_type())
        return left

    def parse_unitary_type(self):
        if self.at("("):
            self.advance()
            t = self.parse_type()
            self.expect(")")
            return t
        t = self.tok
        if t.kind in ("dollar", "lower", "squote"):
            return BaseType(self.parse_symbol_name())
        raise _Fail(t, f"expected a type, found {self.describe(t)}")

    # logic specifications
    def parse_spec(self) -> Expr:
        if self.at("("):
            self.advance()
            e = self.parse_spec()
            self.expect(")")
            return e
        lhs = self.parse_spec_atom()
        if self.at("=="):
            self.advance()
            return SpecEq(lhs, self.parse_spec_value())
        return lhs

    def parse_spec_value(self) -> Expr:
        if self.at("["):
            open_tok = self.advance()
            items = []
            if not self.at("]"):
                items.append(self.parse_spec())
                while self.at(","):
                    self.advance()
                    items.append(self.parse_spec())
            if not self.at("]"):
                raise _Fail(open_tok, f"unclosed '[' (found {self.describe(self.tok)})")
            self.advance()
            return TermList(tuple(items))
        return self.parse_spec_atom()

    def parse_spec_atom(self) -> Expr:
        t = self.tok
        if t.kind in ("dollar", "lower", "squote", "upper", "number"):
            self.advance()
            return Const(_unquote(t.text) if t.kind == "squote" else t.text)
        if self.at("{"):
            return self.parse_connective()
        raise _Fail(t, f"expected a specification term, found {self.describe(t)}")

    # formulae
    def parse_formula(self) -> Expr:
        lhs = self.parse_operand()
        t = self.tok
        if t.kind == "punct" and t.text in _BINOPS:
            op = _BINOPS[self.advance().text]
            rhs = self.parse_operand()
            if op in ("and", "or"):
                lhs = Binary(op, lhs, rhs)
                while self.at(t.text):
                    self.advance()
                    lhs = Binary(op, lhs, self.parse_operand())
            elif op == "nor":
                lhs = Not(Binary("or", lhs, rhs))
            elif op == "nand":
                lhs = Not(Binary("and", lhs, rhs))
            else:
                lhs = Binary(op, lhs, rhs)
            nxt = self.tok
            if nxt.kind == "punct" and nxt.text in _BINOPS:
                raise _Fail(nxt, f"'{nxt.text}' after '{t.text}' needs parentheses")
        return lhs

    def parse_operand(self) -> Expr:
        e = self.parse_unit()
        if self.higher_order:
            while self.at("@"):
                self.advance()
                e = _apply(e, self.parse_unit())
        return e

    def parse_unit(self) -> Expr:
        t = self.tok
        if t.kind == "punct":
            if t.text == "~":
                self.advance()
                return Not(self.parse_unit())
            if t.text in ("!", "?") and self.peek().kind == "punct" and self.peek().text == "[":
                return self.parse_quantified()
            if t.text == "^" and self.higher_order:
                return self.parse_quantified()
            if t.text == "#" and self.qmltp:
                return self.parse_qmltp_modal()
        lhs = self.parse_unitary()
        if self.at("=") or self.at("!="):
            neg = self.advance().text == "!="
            lhs = self.as_term(lhs)
            rhs = self.parse_unitary() if self.higher_order else self.parse_term()
            eq = Equality(lhs, self.as_term(rhs))
            return Not(eq) if neg else eq
        return lhs

    def as_term(self, e: Expr) -> Expr:
        if isinstance(e, Atom):
            return App(e.pred, e.args) if e.args else Const(e.pred)
        return e

    def parse_quantified(self) -> Expr:
        q = self.advance().text
        kind = {"!": "forall", "?": "exists", "^": "lambda"}[q]
        self.expect("[")
        bound = [self.parse_typed_var()]
        while self.at(","):
            self.advance()
            bound.append(self.parse_typed_var())
        self.expect("]")
        self.expect(":")
        body = self.parse_unit()
        for name, vtype in reversed(bound):
            body = Lambda(name, vtype, body) if kind == "lambda" else Quantified(kind, name, vtype, body)
        return body

    def parse_typed_var(self):
        t = self.tok
        if t.kind != "upper":
            raise _Fail(t, f"expected a variable, found {self.describe(t)}")
        self.advance()
        if self.at(":"):
            self.advance()
            return t.text, self.parse_type()
        if self.higher_order:
            raise _Fail(self.tok, "thf variables need a type")
        return t.text, INDIVIDUAL

    def parse_qmltp_modal(self) -> Expr:
        self.advance()
        t = self.tok
        if t.kind != "lower" or t.text not in ("box", "dia"):
            raise _Fail(t, "expected #box or #dia")
        self.advance()
        index = None
        if self.at("("):
            self.advance()
            index = self.parse_name()
            self.expect(")")
        if not self.at(":"):
            raise _Fail(self.tok, f"expected ':' after #{t.text}, found {self.describe(self.tok)}")
        self.advance()
        return Modal(t.text, index, self.parse_unit())

    def parse_unitary(self) -> Expr:
        t = self.tok
        if self.at("("):
            open_tok = self.advance()
            e = self.parse_formula()
            if not self.at(")"):
                raise _Fail(open_tok, f"unclosed '(' (found {self.describe(self.tok)} "
                                      f"at {self.tok.line}:{self.tok.col})")
            self.advance()
            return e
        if self.at("{"):
            conn = self.parse_connective()
            if self.higher_order:
                return conn
            if not self.at("@"):
                return conn
            self.advance()
            open_tok = self.expect("(")
            args = [self.parse_formula()]
            while self.at(","):
                self.advance()
                args.append(self.parse_formula())
            if not self.at(")"):
                raise _Fail(open_tok, f"unclosed '(' (found {self.describe(self.tok)})")
            self.advance()
            return _apply_connective(conn, tuple(args))
        if t.kind == "dollar" and t.text in ("$true", "$false"):
            self.advance()
            return Truth(t.text == "$true")
        if t.kind == "upper":
            self.advance()
            return Var(t.text)
        if t.kind in ("lower", "squote", "dollar"):
            name = self.parse_symbol_name()
            args = self.parse_args() if self.at("(") else ()
            if self.higher_order:
                return App(name, args) if args else Const(name)
            return Atom(name, args)
        if t.kind in ("number", "dquote"):
            self.advance()
            return Const(t.text)
        raise _Fail(t, f"expected a formula, found {self.describe(t)}")

    def parse_args(self) -> tuple:
        open_tok = self.advance()
        args = []
        while True:
            t = self.tok
            if t.kind == EOF or (t.kind == "punct" and t.text in (")", ".", ",", "]")):
                raise _Fail(open_tok, f"unclosed '(' (expected a term, found {self.describe(t)} "
                                      f"at {t.line}:{t.col})")
            args.append(self.parse_formula() if self.higher_order else self.parse_term())
            if self.at(","):
                self.advance()
                continue
            if self.at(")"):
                self.advance()
                return tuple(args)
            raise _Fail(open_tok, f"unclosed '(' (found {self.describe(self.tok)} "
                                  f"at {self.tok.line}:{self.tok.col})")

    def parse_term(self) -> Expr:
        t = self.tok
        if t.kind == "upper":
            self.advance()
            return Var(t.text)
        if t.kind in ("lower", "squote", "dollar"):
            name = self.parse_symbol_name()
            if self.at("("):
                return App(name, self.parse_args())
            return Const(name)
        if t.kind in ("number", "dquote"):
            self.advance()
            return Const(t.text)
        raise _Fail(t, f"expected a term, found {self.describe(t)}")

    def parse_connective(self) -> NonClassical:
        open_tok = self.expect("{")
        t = self.tok
        if t.kind != "dollar":
            raise _Fail(t, "expected a $connective name")
        self.advance()
        name = t.text.lstrip("$")
        index, params = None, []
        if self.at("("):
            self.advance()
            first = True
            while True:
                if first and self.at("#"):
                    self.advance()
                    index = self.parse_name()
                else:
                    kt = self.tok
                    if kt.kind not in ("dollar", "lower"):
                        raise _Fail(kt, "connective parameters are #index or key := value")
                    self.advance()
                    self.expect(":=")
                    params.append((kt.text, self.parse_param_value()))
                first = False
                if self.at(","):
                    self.advance()
                    continue
                self.expect(")")
                break
        if not self.at("}"):
            raise _Fail(open_tok, f"unclosed '{{' (found {self.describe(self.tok)})")
        self.advance()
        if name not in MODAL_ALIASES:
            self.warnings.append(ParseDiagnostic("warning", t.line, t.col, f"unknown connective ${name}"))
        return NonClassical(name, index, tuple(params))

    def parse_param_value(self) -> Expr:
        if self.at("["):
            self.advance()
            items = []
            if not self.at("]"):
                items.append(self.parse_term())
                while self.at(","):
                    self.advance()
                    items.append(self.parse_term())
            self.expect("]")
            return TermList(tuple(items))
        return self.parse_term()


def _apply_connective(conn: NonClassical, args: tuple) -> Expr:
    if conn.name in MODAL_ALIASES and not conn.params and len(args) == 1:
        return Modal(MODAL_ALIASES[conn.name], conn.index, args[0])
    return NonClassical(conn.name, conn.index, conn.params, args)


def _apply(fun: Expr, arg: Expr) -> Expr:
    if isinstance(fun, NonClassical) and not fun.args:
        return _apply_connective(fun, (arg,))
    return HOApply(fun, arg)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def _run(text: str, qmltp=False, max_bytes=DEFAULT_MAX_BYTES):
    if len(text.encode("utf-8", "surrogatepass")) > max_bytes:
        raise ParseError([ParseDiagnostic("error", 1, 1, f"input larger than {max_bytes} bytes")])
    tokens, header = tokenize(text)
    p = _Parser(tokens, qmltp=qmltp)
    try:
        entries = p.parse_file()
    except _Fail as f:
        raise ParseError([ParseDiagnostic("error", f.token.line, f.token.col, f.message)]) from None
    except RecursionError:
        t = p.tok
        raise ParseError([ParseDiagnostic("error", t.line, t.col, "formula nested too deeply")]) from None
    return entries, header, p.warnings


def _resolve_includes(entries, include_root, stack, qmltp, max_bytes):
    out, warnings = [], []
    for entry, tok in entries:
        if isinstance(entry, AnnotatedFormula):
            out.append((entry, tok))
            continue
        _, fname, selection = entry
        root = Path(include_root) if include_root is not None else Path(os.environ.get("TPTP", "."))
        path = (root / fname).resolve()
        if path in stack:
            raise ParseError([ParseDiagnostic("error", tok.line, tok.col, f"include cycle through {fname}")])
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError([ParseDiagnostic("error", tok.line, tok.col,
                                              f"cannot include {fname}: {exc.strerror}")]) from None
        sub, _, sub_warn = _run(text, qmltp, max_bytes)
        sub_out, sub_w = _resolve_includes(sub, include_root, stack | {path}, qmltp, max_bytes)
        warnings += sub_warn + sub_w
        out.extend(e for e in sub_out if selection is None or e[0].name in selection)
    return out, warnings


def _validate(entries):
    errors, names = [], set()
    logic = conj = 0
    for af, tok in entries:
        if af.name in names:
            errors.append(ParseDiagnostic("error", tok.line, tok.col, f"duplicate formula name {af.name}"))
        names.add(af.name)
        if af.role.base == "logic":
            logic += 1
            if logic > 1:
                errors.append(ParseDiagnostic("error", tok.line, tok.col, "more than one logic specification"))
        if af.role.base == "conjecture":
            conj += 1
            if conj > 1:
                errors.append(ParseDiagnostic("error", tok.line, tok.col, "more than one conjecture"))
        if af.role.subrole is not None and af.role.subrole not in ("local", "global"):
            errors.append(ParseDiagnostic("warning", tok.line, tok.col, f"unknown subrole {af.role.subrole}"))
    return errors


def parse_problem(text: str, dialect: Optional[Dialect] = None, include_root=None,
                  max_bytes: int = DEFAULT_MAX_BYTES) -> Problem:
    """Parse a problem file.  Raises ParseError carrying the error diagnostics.

    Warnings (unknown connectives, unresolvable logic specifications) are
    attached to ``Problem.diagnostics``.
    """
    if dialect is not None:
        dialect = Dialect(dialect)
    if dialect == Dialect.QMLTP:
        return convert_qmltp(text, include_root=include_root, max_bytes=max_bytes)
    entries, header, warnings = _run(text, max_bytes=max_bytes)
    entries, inc_warn = _resolve_includes(entries, include_root, frozenset(), False, max_bytes)
    diags = warnings + inc_warn + _validate(entries)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ParseError(errors)
    formulas = tuple(af for af, _ in entries)

    modal = any(contains_modal(af.formula) for af in formulas if isinstance(af.formula, Expr)
                and af.role.base != "logic")
    has_logic = any(af.role.base == "logic" for af in formulas)
    if dialect is None:
        all_thf = all(af.language == "thf" for af in formulas)
        stage = TARGET if all_thf and not modal and not has_logic else SOURCE
    else:
        stage = TARGET if dialect == Dialect.THF else SOURCE
    if stage == TARGET and (modal or has_logic):
        af, tok = next((af, tok) for af, tok in entries
                       if af.role.base == "logic" or (isinstance(af.formula, Expr) and contains_modal(af.formula)))
        raise ParseError([ParseDiagnostic("error", tok.line, tok.col,
                                          f"{af.name}: non-classical content in a classical THF problem")])

    spec = None
    for af, tok in entries:
        if af.role.base == "logic":
            try:
                spec = ls.resolve(af.formula)
            except LogicSpecError as exc:
                diags.append(ParseDiagnostic("warning", tok.line, tok.col, f"{af.name}: {exc}"))
    return Problem(formulas, spec, declared_signature(formulas), stage, header, tuple(diags))


def parse_file(path, dialect: Optional[Dialect] = None, include_root=None,
               max_bytes: int = DEFAULT_MAX_BYTES) -> Problem:
    path = Path(path)
    size = path.stat().st_size
    if size > max_bytes:
        raise ParseError([ParseDiagnostic("error", 1, 1, f"{path} is larger than {max_bytes} bytes")])
    return parse_problem(path.read_text(encoding="utf-8"), dialect, include_root, max_bytes)


def parse_formula(text: str, language: str = "tff") -> Expr:
    """Parse a bare formula, e.g. parse_formula("{$box} @ (p)")."""
    tokens, _ = tokenize(text)
    p = _Parser(tokens, qmltp=language == "qmf")
    p.higher_order = language == "thf"
    p.untyped = language in ("fof", "qmf")
    try:
        f = p.parse_formula()
        if p.tok.kind != EOF:
            raise _Fail(p.tok, f"unexpected {p.describe(p.tok)} after formula")
    except _Fail as fail:
        raise ParseError([ParseDiagnostic("error", fail.token.line, fail.token.col, fail.message)]) from None
    return f


def parse_logic_annotation(text: str) -> ls.LogicSpec:
    """Resolve a `$modal == [...]` specification, given alone or as a `logic` annotated formula."""
    stripped = text.strip()
    if re.match(r"(tff|thf)\s*\(", stripped):
        entries, _, _ = _run(stripped)
        logic = [af for af, _ in entries if isinstance(af, AnnotatedFormula) and af.role.base == "logic"]
        if len(logic) != 1:
            raise ParseError([ParseDiagnostic("error", 1, 1, "expected exactly one logic annotated formula")])
        return ls.resolve(logic[0].formula)
    tokens, _ = tokenize(stripped)
    p = _Parser(tokens)
    try:
        expr = p.parse_spec()
        if p.tok.kind != EOF:
            raise _Fail(p.tok, f"unexpected {p.describe(p.tok)} after specification")
    except _Fail as fail:
        raise ParseError([ParseDiagnostic("error", fail.token.line, fail.token.col, fail.message)]) from None
    return ls.resolve(expr)


def convert_qmltp(text: str, include_root=None, max_bytes: int = DEFAULT_MAX_BYTES) -> Problem:
    """Convert a QMLTP `qmf` problem into an NXF (tff) source problem.

    `#box : phi` becomes `{$box} @ (phi)` and every axiom becomes axiom-local.
    Uses of `=` are kept as interpreted equality and reported as warnings.
    """
    entries, header, warnings = _run(text, qmltp=True, max_bytes=max_bytes)
    entries, inc_warn = _resolve_includes(entries, include_root, frozenset(), True, max_bytes)
    diags = warnings + inc_warn
    for af, tok in entries:
        if af.language not in ("qmf", "fof"):
            raise ParseError([ParseDiagnostic("error", tok.line, tok.col,
                                              f"not QMLTP syntax: '{af.language}' formula {af.name}")])
    diags += _validate(entries)
    errors = [d for d in diags if d.severity == "error"]
    if errors:
        raise ParseError(errors)
    out = []
    for af, tok in entries:
        role = af.role
        if role.base == "axiom":
            role = Role("axiom", "local")
        if isinstance(af.formula, Expr) and any(isinstance(n, Equality) for n in subterms(af.formula)):
            diags.append(ParseDiagnostic("warning", tok.line, tok.col,
                                         f"{af.name}: '=' kept as interpreted equality"))
        out.append(replace(af, language="tff", role=role))
    formulas = tuple(out)
    return Problem(formulas, None, declared_signature(formulas), SOURCE, header, tuple(diags))
