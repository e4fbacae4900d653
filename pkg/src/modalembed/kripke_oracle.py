"""Bounded Kripke-semantics oracle.

Models are enumerated exhaustively up to small bounds and evaluated in
batches: every array carries a leading model axis, so one numpy operation
evaluates a subformula in every model of a batch at once.

Two evaluators are provided:

* `eval_modal` interprets source formulae directly over Kripke models;
* `eval_hol` is a finite-domain evaluator for classical higher-order terms,
  used on the output of the embedding under the interpretation induced by a
  Kripke model (worlds become a base type, the accessibility relation and the
  domains become predicates).

`cross_check` compares the two pointwise.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

import numpy as np

from modalembed import logic_spec as ls
from modalembed.embedding import (
    EmbeddingOptions, EmbeddingPlan, embed_formula, embed_problem, emit_domain_axioms, emit_frame_axioms,
    plan as make_plan,
)
from modalembed.errors import BoundsTooLarge, OutsideFragment, UnassignedSymbol, UnsupportedFeature
from modalembed.logic_spec import DomainSemantics, FrameCondition, LogicSpec
from modalembed.syntax_core import (
    BOOL, INDIVIDUAL, App, AnnotatedFormula, Atom, BaseType, Binary, Const, Equality, Expr, FunctionType,
    HOApply, Lambda, Modal, NonClassical, Not, Problem, Quantified, Role, Truth, TypeDecl, Var,
    arg_types, beta_normalize, fn_type, infer_signature, modal_depth, normalize_connectives,
    quantifier_depth, spine, subterms, free_variables,
)

MAX_WORLDS = 4
MAX_DOMAIN = 2
MAX_PREDICATES = 2
CHUNK = 1 << 16


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KripkeModel:
    """A finite first-order Kripke model with rigid constants.

    Worlds are 0..worlds-1 and domain elements 0..carrier-1.  `props` maps a
    proposition to the worlds where it holds; `preds` maps a unary predicate
    to its (world, element) extension.
    """
    worlds: int
    relations: Mapping[Optional[str], frozenset]
    carrier: int = 1
    domains: tuple = ()
    props: Mapping[str, frozenset] = field(default_factory=dict)
    preds: Mapping[str, frozenset] = field(default_factory=dict)
    consts: Mapping[str, int] = field(default_factory=dict)

    def describe(self) -> str:
        lines = [f"worlds: {', '.join(f'w{i}' for i in range(self.worlds))}"]
        for index, pairs in self.relations.items():
            name = "R" if index is None else f"R_{index}"
            lines.append(f"{name}: {{{', '.join(f'(w{a},w{b})' for a, b in sorted(pairs))}}}")
        if self.domains:
            lines.append(f"carrier: {{{', '.join(f'd{e}' for e in range(self.carrier))}}}")
            lines.append("domains: " + "; ".join(
                f"w{w}: {{{', '.join(f'd{e}' for e in sorted(d))}}}" for w, d in enumerate(self.domains)))
        for p, ws in sorted(self.props.items()):
            lines.append(f"{p} true at: {{{', '.join(f'w{w}' for w in sorted(ws))}}}")
        for p, ext in sorted(self.preds.items()):
            lines.append(f"{p}: {{{', '.join(f'w{w}:d{e}' for w, e in sorted(ext))}}}")
        for c, e in sorted(self.consts.items()):
            lines.append(f"{c} = d{e}")
        return "\n".join(lines)

    def to_batch(self) -> "ModelBatch":
        n, c = self.worlds, self.carrier
        rel = {}
        for index, pairs in self.relations.items():
            r = np.zeros((1, n, n), bool)
            for a, b in pairs:
                r[0, a, b] = True
            rel[index] = r
        dom = np.zeros((1, n, c), bool)
        for w in range(n):
            for e in (self.domains[w] if self.domains else range(c)):
                dom[0, w, e] = True
        props = {}
        for p, ws in self.props.items():
            a = np.zeros((1, n), bool)
            a[0, list(ws)] = True
            props[p] = a
        preds = {}
        for p, ext in self.preds.items():
            a = np.zeros((1, n, c), bool)
            for w, e in ext:
                a[0, w, e] = True
            preds[p] = a
        consts = {k: np.array([v]) for k, v in self.consts.items()}
        return ModelBatch(n, c, rel, dom, props, preds, consts)


@dataclass
class ModelBatch:
    """B models sharing world count n and carrier size c.

    rel[index]: (B,n,n); dom: (B,n,c); props[p]: (B,n); preds[p]: (B,n,c); consts[a]: (B,) or (1,) when shared by the whole batch.
    """
    n: int
    c: int
    rel: dict
    dom: np.ndarray
    props: dict
    preds: dict
    consts: dict

    @property
    def size(self) -> int:
        return self.dom.shape[0]

    def model(self, b: int) -> KripkeModel:
        n, c = self.n, self.c
        rel = {k: frozenset((i, j) for i in range(n) for j in range(n) if r[b, i, j]) for k, r in self.rel.items()}
        domains = tuple(frozenset(e for e in range(c) if self.dom[b, w, e]) for w in range(n))
        props = {p: frozenset(w for w in range(n) if a[b, w]) for p, a in self.props.items()}
        preds = {p: frozenset((w, e) for w in range(n) for e in range(c) if a[b, w, e])
                 for p, a in self.preds.items()}
        consts = {k: int(v[b if len(v) > 1 else 0]) for k, v in self.consts.items()}
        return KripkeModel(n, rel, c, domains, props, preds, consts)


# ---------------------------------------------------------------------------
# Fragment and bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Fragment:
    """The symbols of a problem inside the oracle's monadic fragment."""
    props: tuple = ()
    preds: tuple = ()
    consts: tuple = ()
    indices: tuple = (None,)

    @property
    def first_order(self) -> bool:
        return bool(self.preds or self.consts)


def extract_fragment(problem: Problem) -> Fragment:
    problem = infer_signature(problem)
    props, preds, consts = [], [], []
    for name, t in problem.signature.items():
        if t == BOOL:
            props.append(name)
        elif t == FunctionType(INDIVIDUAL, BOOL):
            preds.append(name)
        elif t == INDIVIDUAL:
            consts.append(name)
        else:
            raise OutsideFragment(f"symbol {name}: {t} is outside the monadic fragment")
    indices = set()
    for af in problem.logical_formulas():
        for node in subterms(af.formula):
            if isinstance(node, Quantified) and node.vtype != INDIVIDUAL:
                raise OutsideFragment(f"quantification over {node.vtype} is outside the monadic fragment")
            if isinstance(node, (HOApply, Lambda)) or (isinstance(node, NonClassical) and node.args):
                raise OutsideFragment(f"{type(node).__name__} is outside the monadic fragment")
            if isinstance(node, Modal):
                indices.add(node.index)
    ordered = ([None] if None in indices or not indices else []) + sorted(i for i in indices if i is not None)
    return Fragment(tuple(props), tuple(preds), tuple(consts), tuple(ordered))


@dataclass(frozen=True)
class Bounds:
    max_worlds: int = 3
    max_domain: int = 2
    fragment: Fragment = Fragment()
    frame_class: Mapping[Optional[str], frozenset] = field(default_factory=lambda: {None: frozenset()})
    domains: DomainSemantics = DomainSemantics.CONSTANT
    min_worlds: int = 1
    min_domain: int = 1
    local_terms: bool = True
    force: bool = False

    def check(self):
        if self.force:
            return
        npred = len(self.fragment.props) + len(self.fragment.preds)
        if self.max_worlds > MAX_WORLDS or self.max_domain > MAX_DOMAIN or npred > MAX_PREDICATES:
            raise BoundsTooLarge(
                f"bounds ({self.max_worlds} worlds, {self.max_domain} elements, {npred} predicates) exceed the "
                f"oracle ceiling ({MAX_WORLDS}, {MAX_DOMAIN}, {MAX_PREDICATES}); pass force=True to override")


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

_REL_CACHE: dict = {}


def all_relations(n: int) -> np.ndarray:
    if n not in _REL_CACHE:
        codes = np.arange(1 << (n * n), dtype=np.int64)
        bits = (codes[:, None] >> np.arange(n * n)) & 1
        _REL_CACHE[n] = bits.astype(bool).reshape(-1, n, n)
    return _REL_CACHE[n]


def satisfies(rel: np.ndarray, cond: FrameCondition) -> np.ndarray:
    """Vectorised frame-condition test over a stack of relations (K,n,n) -> (K,)."""
    n = rel.shape[1]
    if cond == FrameCondition.SERIAL:
        return rel.any(axis=2).all(axis=1)
    if cond == FrameCondition.REFLEXIVE:
        return rel[:, np.arange(n), np.arange(n)].all(axis=1)
    if cond == FrameCondition.SYMMETRIC:
        return (rel == rel.transpose(0, 2, 1)).all(axis=(1, 2))
    if cond == FrameCondition.TRANSITIVE:
        r = rel.astype(np.uint8)
        comp = np.matmul(r, r) > 0
        return ~(comp & ~rel).any(axis=(1, 2))
    if cond == FrameCondition.EUCLIDEAN:
        pairs = rel[:, :, :, None] & rel[:, :, None, :]  # (K, w, v, u): R w v and R w u
        return ~(pairs & ~rel[:, None, :, :]).any(axis=(1, 2, 3))
    if cond == FrameCondition.UNIVERSAL:
        return rel.all(axis=(1, 2))
    raise ValueError(cond)


def frame_relations(n: int, conditions) -> np.ndarray:
    rel = all_relations(n)
    keep = np.ones(len(rel), bool)
    for cond in conditions:
        keep &= satisfies(rel, cond)
    return rel[keep]


def _product_indices(sizes) -> np.ndarray:
    if not sizes:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*[np.arange(s) for s in sizes], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _subset_masks(c: int) -> np.ndarray:
    """Nonempty subsets of range(c) as boolean masks (2^c - 1, c)."""
    codes = np.arange(1, 1 << c)
    return ((codes[:, None] >> np.arange(c)) & 1).astype(bool)


def enumerate_batches(bounds: Bounds, chunk: int = CHUNK) -> Iterator[ModelBatch]:
    """Exhaustive, duplicate-free stream of model batches within `bounds`."""
    bounds.check()
    frag = bounds.fragment
    keys = list(bounds.frame_class)
    carriers = range(bounds.min_domain, bounds.max_domain + 1) if frag.first_order else [1]
    for n in range(bounds.min_worlds, bounds.max_worlds + 1):
        rel_lists = [frame_relations(n, bounds.frame_class[k]) for k in keys]
        rel_idx = _product_indices([len(r) for r in rel_lists])
        if len(rel_idx) == 0:
            continue
        union = np.zeros((len(rel_idx), n, n), bool)
        for j, rl in enumerate(rel_lists):
            union |= rl[rel_idx[:, j]]
        for c in carriers:
            yield from _batches_for(n, c, bounds, keys, rel_lists, rel_idx, union, chunk)


def _batches_for(n, c, bounds, keys, rel_lists, rel_idx, union, chunk):
    frag = bounds.fragment
    # constants
    const_idx = _product_indices([c] * len(frag.consts))                  # (Kc, m)
    # domains
    if bounds.domains == DomainSemantics.CONSTANT:
        doms = np.ones((1, n, c), bool)
    else:
        subsets = _subset_masks(c)
        doms = subsets[_product_indices([len(subsets)] * n)]             # (Kd, n, c)
    # local-term closure: every constant exists at every world
    if bounds.local_terms and len(frag.consts):
        present = np.zeros((len(const_idx), c), bool)
        for j in range(len(frag.consts)):
            present[np.arange(len(const_idx)), const_idx[:, j]] = True
        dc_ok = ~(present[None, :, None, :] & ~doms[:, None, :, :]).any(axis=(2, 3))  # (Kd, Kc)
    else:
        dc_ok = np.ones((len(doms), len(const_idx)), bool)
    # domain discipline along every relation
    if bounds.domains in (DomainSemantics.CUMULATIVE, DomainSemantics.DECREASING):
        if bounds.domains == DomainSemantics.CUMULATIVE:   # R w v  =>  D_w <= D_v
            bad = (doms[:, :, None, :] & ~doms[:, None, :, :]).any(axis=3)
        else:                                              # R w v  =>  D_v <= D_w
            bad = (doms[:, None, :, :] & ~doms[:, :, None, :]).any(axis=3)
        flat_r = union.reshape(len(union), n * n).astype(np.int32)
        flat_b = bad.reshape(len(doms), n * n).astype(np.int32)
        rd_ok = (flat_r @ flat_b.T) == 0                                  # (Kr, Kd)
    else:
        rd_ok = np.ones((len(union), len(doms)), bool)
    triples = np.argwhere(rd_ok[:, :, None] & dc_ok[None, :, :])          # (T, 3): kr, kd, kc

    # valuations
    val_sizes, val_tables = [], []
    for _ in frag.props:
        tab = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(bool)   # (2^n, n)
        val_sizes.append(len(tab))
        val_tables.append(tab)
    for _ in frag.preds:
        tab = ((np.arange(1 << (n * c))[:, None] >> np.arange(n * c)) & 1).astype(bool).reshape(-1, n, c)
        val_sizes.append(len(tab))
        val_tables.append(tab)
    val_idx = _product_indices(val_sizes)                                   # (Kv, #symbols)
    kv = len(val_idx)

    # Each batch shares one constant assignment, so constants are stored as
    # length-1 arrays and every application to them is a plain slice.
    per_chunk = max(1, chunk // kv)
    for kc0 in range(len(const_idx)):
        group = triples[triples[:, 2] == kc0]
        consts = {name: const_idx[kc0:kc0 + 1, j] for j, name in enumerate(frag.consts)}
        for start in range(0, len(group), per_chunk):
            t = group[start:start + per_chunk]
            yield _make_batch(n, c, t, kv, keys, rel_lists, rel_idx, doms, val_idx, val_tables, frag, consts)


def _make_batch(n, c, t, kv, keys, rel_lists, rel_idx, doms, val_idx, val_tables, frag, consts):
    kr = np.repeat(t[:, 0], kv)
    kd = np.repeat(t[:, 1], kv)
    vi = np.tile(val_idx, (len(t), 1))
    rel = {k: rel_lists[j][rel_idx[kr, j]] for j, k in enumerate(keys)}
    dom = doms[kd]
    props, preds = {}, {}
    for j, name in enumerate(frag.props):
        props[name] = val_tables[j][vi[:, j]]
    for j, name in enumerate(frag.preds):
        jj = len(frag.props) + j
        preds[name] = val_tables[jj][vi[:, jj]]
    return ModelBatch(n, c, rel, dom, props, preds, consts)


def enumerate_models(bounds: Bounds) -> Iterator[KripkeModel]:
    for batch in enumerate_batches(bounds):
        for b in range(batch.size):
            yield batch.model(b)


def count_models(bounds: Bounds) -> int:
    return sum(batch.size for batch in enumerate_batches(bounds))


# ---------------------------------------------------------------------------
# Direct Kripke semantics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalContext:
    model: KripkeModel
    world: int
    assignment: Mapping[str, int] = field(default_factory=dict)


def eval_modal(f: Expr, ctx: EvalContext, quant_style=DomainSemantics.CONSTANT) -> bool:
    """Truth of a source formula at ctx.world of ctx.model."""
    batch = ctx.model.to_batch()
    env = {k: np.array([v]) for k, v in ctx.assignment.items()}
    return bool(eval_modal_batch(f, batch, DomainSemantics(quant_style), env)[0, ctx.world])


def eval_modal_batch(f: Expr, batch: ModelBatch, quant_style=DomainSemantics.CONSTANT, env=None) -> np.ndarray:
    """Truth values (B, n) of source formula f at every world of every model of the batch."""
    return _ModalEval(batch, DomainSemantics(quant_style)).formula(normalize_connectives(f), env or {})


class _ModalEval:
    def __init__(self, batch: ModelBatch, style: DomainSemantics):
        self.b = batch
        self.style = style
        self.shape = (batch.size, batch.n)
        self.rows = np.arange(batch.size)

    def term(self, t: Expr, env):
        """Element denoted by a term: a python int or an int array (B,)."""
        if isinstance(t, Var):
            if t.name not in env:
                raise UnassignedSymbol(f"unbound variable {t.name}")
            return env[t.name]
        if isinstance(t, Const):
            if t.name not in self.b.consts:
                raise UnassignedSymbol(f"no interpretation for constant {t.name}")
            return self.b.consts[t.name]
        raise OutsideFragment(f"term {type(t).__name__} is outside the monadic fragment")

    def formula(self, f: Expr, env) -> np.ndarray:
        b = self.b
        if isinstance(f, Truth):
            return np.full(self.shape, f.value)
        if isinstance(f, (Atom, Const)) and not getattr(f, "args", ()):
            name = f.pred if isinstance(f, Atom) else f.name
            if name not in b.props:
                raise UnassignedSymbol(f"no interpretation for proposition {name}")
            return b.props[name]
        if isinstance(f, Atom):
            if len(f.args) != 1 or f.pred not in b.preds:
                raise OutsideFragment(f"atom {f.pred}/{len(f.args)} is outside the monadic fragment")
            e = self.term(f.args[0], env)
            table = b.preds[f.pred]
            if np.ndim(e) == 0 or len(e) == 1:
                return table[:, :, int(np.ravel(e)[0])]
            return table[self.rows, :, e]
        if isinstance(f, Equality):
            same = np.asarray(self.term(f.lhs, env) == self.term(f.rhs, env)).reshape(-1, 1)
            return np.broadcast_to(same, self.shape)
        if isinstance(f, Not):
            return ~self.formula(f.body, env)
        if isinstance(f, Binary):
            lhs, rhs = self.formula(f.lhs, env), self.formula(f.rhs, env)
            return _BOOL_OPS[f.op](lhs, rhs)
        if isinstance(f, Quantified):
            if f.vtype != INDIVIDUAL:
                raise OutsideFragment(f"quantification over {f.vtype}")
            acc = None
            for e in range(b.c):
                val = self.formula(f.body, {**env, f.var: np.array([e])})
                if self.style != DomainSemantics.CONSTANT:
                    exists = b.dom[:, :, e]
                    val = (~exists | val) if f.kind == "forall" else (exists & val)
                acc = val if acc is None else ((acc & val) if f.kind == "forall" else (acc | val))
            return acc
        if isinstance(f, Modal):
            body = self.formula(f.body, env)
            rel = b.rel[f.index] if f.index in b.rel else b.rel[None]
            if f.op == "box":
                return ~(rel & ~body[:, None, :]).any(axis=2)
            return (rel & body[:, None, :]).any(axis=2)
        raise OutsideFragment(f"{type(f).__name__} is outside the oracle fragment")


_BOOL_OPS = {
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "implies": lambda a, b: ~a | b,
    "implied_by": lambda a, b: a | ~b,
    "iff": lambda a, b: a == b,
    "xor": lambda a, b: a != b,
}


# ---------------------------------------------------------------------------
# Finite higher-order evaluation
# ---------------------------------------------------------------------------

@dataclass
class Interpretation:
    """A batch of finite interpretations of a classical higher-order signature.

    `sizes` gives the carrier size of every base type other than $o; values
    are numpy arrays with a leading batch axis (of size B or 1) followed by
    one axis per argument of the symbol's curried type.  Function-typed
    arguments are indexed by their code (see `encode`).  `definitions` maps
    defined symbols to their defining terms.
    """
    sizes: Mapping[str, int]
    values: dict
    batch: int = 1
    definitions: Mapping[str, Expr] = field(default_factory=dict)
    max_table: int = 1 << 16

    def size_of(self, t) -> int:
        if t == BOOL:
            return 2
        if isinstance(t, BaseType):
            if t.name not in self.sizes:
                raise UnassignedSymbol(f"no carrier for type {t.name}")
            return self.sizes[t.name]
        dom = self.size_of(t.domain)
        cod = self.size_of(t.codomain)
        total = cod ** dom
        if total > self.max_table:
            raise BoundsTooLarge(f"function type {t} has {total} elements")
        return total

    def with_value(self, name: str, value) -> "Interpretation":
        return Interpretation(self.sizes, {**self.values, name: np.asarray(value)}, self.batch,
                              self.definitions, self.max_table)


def _table_shape(t, interp: Interpretation):
    """(axis sizes, result type) of a value of type t."""
    shape = []
    while isinstance(t, FunctionType):
        shape.append(interp.size_of(t.domain))
        t = t.codomain
    return shape, t


def encode(table: np.ndarray, result_size: int) -> np.ndarray:
    """Code (B,) of function tables (B, d1, ..., dk) with entries < result_size."""
    flat = table.reshape(table.shape[0], -1).astype(np.int64)
    weights = result_size ** np.arange(flat.shape[1], dtype=np.int64)
    return flat @ weights


def decode(code: int, shape, result_size: int, as_bool: bool) -> np.ndarray:
    total = int(np.prod(shape)) if shape else 1
    digits = (code // result_size ** np.arange(total, dtype=np.int64)) % result_size
    out = digits.reshape((1,) + tuple(shape))
    return out.astype(bool) if as_bool else out


def all_values(t, interp: Interpretation):
    """Every value of type t, as arrays with a batch axis of size 1."""
    if t == BOOL:
        return [np.array([False]), np.array([True])]
    if isinstance(t, BaseType):
        return [np.array([e]) for e in range(interp.size_of(t))]
    shape, result = _table_shape(t, interp)
    rsize = interp.size_of(result)
    return [decode(k, shape, rsize, result == BOOL) for k in range(interp.size_of(t))]


def eval_hol(f: Expr, interp: Interpretation, env: Optional[Mapping] = None) -> np.ndarray:
    """Value of a closed target term; for formulae a boolean array over the batch (B or 1,)."""
    return _HolEval(interp).eval(f, dict(env or {}))


class _HolEval:
    def __init__(self, interp: Interpretation):
        self.i = interp
        self.defs_cache = {}

    def const(self, name: str):
        if name in self.i.values:
            return self.i.values[name]
        if name in self.i.definitions:
            if name not in self.defs_cache:
                self.defs_cache[name] = self.eval(self.i.definitions[name], {})
            return self.defs_cache[name]
        raise UnassignedSymbol(f"no interpretation for {name}")

    def eval(self, e: Expr, env):
        if isinstance(e, Var):
            if e.name not in env:
                raise UnassignedSymbol(f"unbound variable {e.name}")
            return env[e.name]
        if isinstance(e, Const):
            return self.const(e.name)
        if isinstance(e, Truth):
            return np.array([e.value])
        if isinstance(e, (HOApply, App, Atom)):
            if isinstance(e, HOApply):
                head, args = spine(e)
            else:
                head, args = Const(e.func if isinstance(e, App) else e.pred), list(e.args)
            if isinstance(head, Lambda):
                return self.eval(beta_normalize(e), env)
            val = self.eval(head, env)
            for a in args:
                val = _apply(val, self.eval(a, env), self.i)
            return val
        if isinstance(e, Not):
            return ~self.eval(e.body, env)
        if isinstance(e, Binary):
            return _BOOL_OPS[e.op](self.eval(e.lhs, env), self.eval(e.rhs, env))
        if isinstance(e, Equality):
            a, b = self.eval(e.lhs, env), self.eval(e.rhs, env)
            eq = a == b
            if eq.ndim > 1:
                eq = eq.all(axis=tuple(range(1, eq.ndim)))
            return eq
        if isinstance(e, Quantified):
            acc = None
            for v in all_values(e.vtype, self.i):
                val = self.eval(e.body, {**env, e.var: v})
                if acc is None:
                    acc = val
                else:
                    acc = (acc & val) if e.kind == "forall" else (acc | val)
                if acc.shape == (1,) and acc[0] == (e.kind == "exists"):
                    break
            return acc
        if isinstance(e, Lambda):
            results = [self.eval(e.body, {**env, e.var: v}) for v in all_values(e.vtype, self.i)]
            bsize = max(r.shape[0] for r in results)
            results = [np.broadcast_to(r, (bsize,) + r.shape[1:]) for r in results]
            return np.stack(results, axis=1)
        if isinstance(e, (Modal, NonClassical)):
            raise UnsupportedFeature("non-classical connective in a target-stage term")
        raise UnsupportedFeature(f"cannot evaluate {type(e).__name__}")


def _apply(fun: np.ndarray, arg: np.ndarray, interp: Interpretation) -> np.ndarray:
    if fun.ndim < 2:
        raise UnsupportedFeature("application of a non-function value")
    if arg.ndim > 1:  # function-valued argument: index by its code
        if arg.dtype != bool:
            raise UnsupportedFeature("function-valued arguments must be predicates")
        arg = encode(arg, 2)
    if arg.shape[0] == 1:
        return fun[:, int(arg[0])]
    if fun.shape[0] == 1:
        return fun[0][arg]
    return fun[np.arange(fun.shape[0]), arg]


# ---------------------------------------------------------------------------
# Induced interpretation of the embedded signature
# ---------------------------------------------------------------------------

def induced_interpretation(batch: ModelBatch, plan: EmbeddingPlan, definitions=None) -> Interpretation:
    """Interpretation of the embedded signature determined by a batch of Kripke models."""
    values = {}
    for index, name in plan.relations.items():
        rel = batch.rel[index] if index in batch.rel else batch.rel[None]
        values[name] = rel
    for tname, name in plan.eiw.items():
        values[name] = batch.dom.transpose(0, 2, 1)          # eiw X W
    for p, a in batch.props.items():
        values[p] = a                                         # p W
    for p, a in batch.preds.items():
        values[p] = a.transpose(0, 2, 1)                      # p X W
    for c, a in batch.consts.items():
        values[c] = a
    return Interpretation({plan.world_type: batch.n, "$i": batch.c}, values, batch.size, definitions or {})


# ---------------------------------------------------------------------------
# Cross-checking
# ---------------------------------------------------------------------------

@dataclass
class Witness:
    what: str
    model: KripkeModel
    world: int
    modal_value: Optional[bool] = None
    hol_value: Optional[bool] = None

    def describe(self) -> str:
        head = f"{self.what} at w{self.world}"
        if self.modal_value is not None:
            head += f" (Kripke: {self.modal_value}, embedded: {self.hol_value})"
        return head + "\n" + "\n".join("  " + l for l in self.model.describe().splitlines())


@dataclass
class CrossCheckReport:
    label: str
    models: int = 0
    points: int = 0
    mismatches: int = 0
    axiom_violations: int = 0
    invalid_points: int = 0
    witnesses: list = field(default_factory=list)
    countermodel: Optional[Witness] = None

    @property
    def valid(self) -> bool:
        return self.invalid_points == 0

    @property
    def ok(self) -> bool:
        return self.mismatches == 0 and self.axiom_violations == 0

    def merge(self, other: "CrossCheckReport") -> "CrossCheckReport":
        out = CrossCheckReport(self.label, self.models + other.models, self.points + other.points,
                               self.mismatches + other.mismatches,
                               self.axiom_violations + other.axiom_violations,
                               self.invalid_points + other.invalid_points,
                               (self.witnesses + other.witnesses)[:5],
                               self.countermodel or other.countermodel)
        return out

    def summary(self) -> dict:
        return {"label": self.label, "models": self.models, "points": self.points,
                "mismatches": self.mismatches, "axiom_violations": self.axiom_violations,
                "valid": self.valid}

    def to_text(self) -> str:
        lines = [f"[{self.label}] models={self.models} points={self.points} mismatches={self.mismatches} "
                 f"axiom_violations={self.axiom_violations} valid={'yes' if self.valid else 'no'}"]
        for w in self.witnesses:
            lines.append("mismatch: " + w.describe())
        if self.countermodel is not None:
            lines.append("countermodel: " + self.countermodel.describe())
        return "\n".join(lines)


def bounds_for(problem: Problem, plan: EmbeddingPlan, max_worlds=3, max_domain=2, force=False,
               min_worlds=1) -> Bounds:
    frag = extract_fragment(problem)
    keys = dict(plan.frame_axioms) or {None: frozenset()}
    frag = Fragment(frag.props, frag.preds, frag.consts, tuple(keys))
    dom = plan.domains.get("$i", DomainSemantics.CONSTANT)
    return Bounds(max_worlds, max_domain, frag, keys, dom, min_worlds=min_worlds, force=force)


def _definitions(target: Problem) -> dict:
    out = {}
    for af in target.formulas:
        if af.role.base == "definition" and isinstance(af.formula, Equality) and isinstance(af.formula.lhs, Const):
            out[af.formula.lhs.name] = af.formula.rhs
    return out


def cross_check(problem: Problem, spec: Optional[LogicSpec] = None, max_worlds: int = 3, max_domain: int = 2,
                options: EmbeddingOptions = EmbeddingOptions(), force: bool = False,
                witnesses: int = 3) -> CrossCheckReport:
    """Compare Kripke truth of every premise and the conjecture with the embedded problem.

    For every enumerated model and world w, each source formula is evaluated
    directly (global premises at all worlds, the rest at w) and its
    embedded counterpart is evaluated with the current-world constant set to
    w.  Emitted frame and domain axioms must hold in every model.
    """
    p = make_plan(problem, spec, options)
    target = embed_problem(problem, spec, options)
    bounds = bounds_for(problem, p, max_worlds, max_domain, force)
    defs = _definitions(target)
    source = {af.name: af for af in problem.logical_formulas()}
    generated = [af for af in target.formulas
                 if af.role.base == "axiom" and af.name not in source]
    report = CrossCheckReport(p.spec.label + (" s5u" if p.s5u else ""))
    style = bounds.domains
    for batch in enumerate_batches(bounds):
        interp = induced_interpretation(batch, p, defs)
        B, n = batch.size, batch.n
        report.models += B
        report.points += B * n
        modal = {}
        for name, af in source.items():
            val = eval_modal_batch(af.formula, batch, style)
            if af.role.base != "conjecture" and af.role.locality == "global":
                val = np.broadcast_to(val.all(axis=1, keepdims=True), val.shape)
            modal[name] = val
        for af in generated:
            ok = np.broadcast_to(eval_hol(af.formula, interp.with_value(p.current_world, [0])), (B,))
            bad = np.flatnonzero(~ok)
            report.axiom_violations += len(bad)
            if len(bad) and len(report.witnesses) < witnesses:
                report.witnesses.append(Witness(f"emitted axiom {af.name} fails", batch.model(int(bad[0])), 0))
        hol = {name: np.zeros((B, n), bool) for name in source}
        for k in range(n):
            at_k = interp.with_value(p.current_world, [k])
            for name in source:
                hol[name][:, k] = np.broadcast_to(eval_hol(target.named(name).formula, at_k), (B,))
        premises_m = np.ones((B, n), bool)
        premises_h = np.ones((B, n), bool)
        conj_m = conj_h = None
        for name, af in source.items():
            diff = np.argwhere(modal[name] != hol[name])
            report.mismatches += len(diff)
            for b, w in diff[:max(0, witnesses - len(report.witnesses))]:
                report.witnesses.append(Witness(f"formula {name}", batch.model(int(b)), int(w),
                                                bool(modal[name][b, w]), bool(hol[name][b, w])))
            if af.role.base == "conjecture":
                conj_m, conj_h = modal[name], hol[name]
            else:
                premises_m &= modal[name]
                premises_h &= hol[name]
        if conj_m is not None:
            refuted = premises_m & ~conj_m
            report.invalid_points += int(refuted.sum())
            if report.countermodel is None and refuted.any():
                b, w = np.argwhere(refuted)[0]
                report.countermodel = Witness("conjecture refuted", batch.model(int(b)), int(w))
    return report


def formula_problem(f: Expr, name: str = "goal") -> Problem:
    return Problem((AnnotatedFormula("tff", name, Role("conjecture"), f),))


def check_formula(f: Expr, spec: LogicSpec, max_worlds: int = 3, max_domain: int = 2,
                  options: EmbeddingOptions = EmbeddingOptions(), force: bool = False) -> CrossCheckReport:
    return cross_check(formula_problem(f), spec, max_worlds, max_domain, options, force)


class CorpusChecker:
    """Checks many formulae over one shared model enumeration.

    Models are enumerated once per (spec, bounds); each formula is compared
    pointwise: Kripke truth at every world against the tabulated embedded
    term (world > $o) under the induced interpretation.
    """

    def __init__(self, signature_problem: Problem, spec: LogicSpec, max_worlds=3, max_domain=2,
                 options: EmbeddingOptions = EmbeddingOptions(), force=False, min_worlds=1):
        self.plan = make_plan(signature_problem, spec, options)
        self.bounds = bounds_for(signature_problem, self.plan, max_worlds, max_domain, force, min_worlds)
        self.batches = list(enumerate_batches(self.bounds))
        self.interps = [induced_interpretation(b, self.plan) for b in self.batches]

    @property
    def models(self) -> int:
        return sum(b.size for b in self.batches)

    def modal_table(self, f: Expr):
        return [eval_modal_batch(f, b, self.bounds.domains) for b in self.batches]

    def hol_table(self, f: Expr):
        lifted = embed_formula(f, self.plan)
        out = []
        for b, interp in zip(self.batches, self.interps):
            val = eval_hol(lifted, interp)
            out.append(np.broadcast_to(val, (b.size, b.n)))
        return out

    def check(self, f: Expr, label: str = "") -> CrossCheckReport:
        report = CrossCheckReport(label or self.plan.spec.label)
        for batch, m, h in zip(self.batches, self.modal_table(f), self.hol_table(f)):
            report.models += batch.size
            report.points += batch.size * batch.n
            diff = np.argwhere(m != h)
            report.mismatches += len(diff)
            if len(diff) and len(report.witnesses) < 3:
                b, w = diff[0]
                report.witnesses.append(Witness("formula", batch.model(int(b)), int(w),
                                                bool(m[b, w]), bool(h[b, w])))
            refuted = ~m
            report.invalid_points += int(refuted.sum())
            if report.countermodel is None and refuted.any():
                b, w = np.argwhere(refuted)[0]
                report.countermodel = Witness("formula false", batch.model(int(b)), int(w))
        return report

    def axiom_violations(self) -> int:
        """Enumerated models on which some generated frame or domain axiom is false."""
        axioms = emit_frame_axioms(self.plan) + emit_domain_axioms(self.plan, self.plan.signature)
        bad = 0
        for batch, interp in zip(self.batches, self.interps):
            ok = np.ones(batch.size, bool)
            for af in axioms:
                ok &= np.broadcast_to(eval_hol(af.formula, interp), (batch.size,))
            bad += int((~ok).sum())
        return bad

    def valid(self, f: Expr, use_embedding: bool = False) -> bool:
        tables = self.hol_table(f) if use_embedding else self.modal_table(f)
        return all(bool(t.all()) for t in tables)


# ---------------------------------------------------------------------------
# Formula corpora
# ---------------------------------------------------------------------------

def _grow(leaves, unary, binary, max_size):
    """All formulae of size 1..max_size built from leaves with the given constructors."""
    by_size = {1: list(leaves)}
    for size in range(2, max_size + 1):
        out = []
        for make in unary:
            out += [make(f) for f in by_size[size - 1]]
        for make in binary:
            for left in range(1, size - 1):
                right = size - 1 - left
                out += [make(a, b) for a in by_size[left] for b in by_size[right]]
        by_size[size] = out
    return [f for s in range(1, max_size + 1) for f in by_size[s]]


_PROP_UNARY = [Not, lambda f: Modal("box", None, f), lambda f: Modal("dia", None, f)]
_PROP_BINARY = [(lambda op: (lambda a, b: Binary(op, a, b)))(op) for op in ("and", "or", "implies", "iff")]


def propositional_corpus(max_size: int = 5, atoms=("p", "q"), max_modal_depth: int = 3) -> list:
    """Every formula over `atoms` with ~, box, dia, &, |, =>, <=> up to `max_size` nodes."""
    leaves = [Atom(a) for a in atoms]
    return [f for f in _grow(leaves, _PROP_UNARY, _PROP_BINARY, max_size) if modal_depth(f) <= max_modal_depth]


def first_order_corpus(max_size: int = 5, pred: str = "q", const: str = "a",
                       max_quantifier_depth: int = 2) -> list:
    """Closed monadic formulae over one predicate and one constant, variables X and Y."""
    leaves = [Atom(pred, (Var("X"),)), Atom(pred, (Var("Y"),)), Atom(pred, (Const(const),)),
              Equality(Var("X"), Const(const))]
    unary = list(_PROP_UNARY) + [
        (lambda k, v: (lambda f: Quantified(k, v, INDIVIDUAL, f)))(k, v)
        for k in ("forall", "exists") for v in ("X", "Y")]
    binary = [(lambda op: (lambda a, b: Binary(op, a, b)))(op) for op in ("and", "or", "implies")]
    out = [f for f in _grow(leaves, unary, binary, max_size)
           if not free_variables(f) and quantifier_depth(f) <= max_quantifier_depth]
    return out + [barcan(pred), converse_barcan(pred)]


def standard_first_order_corpus(sample: int = 400, seed: int = 0) -> list:
    """All first-order corpus formulae up to size 4, the two Barcan formulae,
    and a fixed pseudo-random sample of `sample` size-5 formulae."""
    small = first_order_corpus(4)
    size5 = first_order_corpus(5)[len(small) - 2:-2]
    return small + random.Random(seed).sample(size5, min(sample, len(size5)))


def barcan(pred: str = "q") -> Expr:
    qx = Atom(pred, (Var("X"),))
    return Binary("implies", Quantified("forall", "X", INDIVIDUAL, Modal("box", None, qx)),
                  Modal("box", None, Quantified("forall", "X", INDIVIDUAL, qx)))


def converse_barcan(pred: str = "q") -> Expr:
    qx = Atom(pred, (Var("X"),))
    return Binary("implies", Modal("box", None, Quantified("forall", "X", INDIVIDUAL, qx)),
                  Quantified("forall", "X", INDIVIDUAL, Modal("box", None, qx)))


def signature_problem(props=("p", "q"), preds=(), consts=()) -> Problem:
    """A conjecture-free problem that only declares the corpus signature."""
    decls = [AnnotatedFormula("tff", f"{p}_decl", Role("type"), TypeDecl(p, BOOL)) for p in props]
    decls += [AnnotatedFormula("tff", f"{p}_decl", Role("type"), TypeDecl(p, FunctionType(INDIVIDUAL, BOOL)))
              for p in preds]
    decls += [AnnotatedFormula("tff", f"{c}_decl", Role("type"), TypeDecl(c, INDIVIDUAL)) for c in consts]
    return Problem(tuple(decls), None, {af.formula.name: af.formula.type for af in decls})


# characteristic axiom-scheme instances
_p = Atom("p")
_box = lambda f: Modal("box", None, f)
_dia = lambda f: Modal("dia", None, f)
SCHEME_INSTANCES = {
    ls.AxiomScheme.D: Binary("implies", _box(_p), _dia(_p)),
    ls.AxiomScheme.T: Binary("implies", _box(_p), _p),
    ls.AxiomScheme.FOUR: Binary("implies", _box(_p), _box(_box(_p))),
    ls.AxiomScheme.FIVE: Binary("implies", _dia(_p), _box(_dia(_p))),
    ls.AxiomScheme.B: Binary("implies", _p, _box(_dia(_p))),
}
