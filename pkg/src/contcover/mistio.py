"""Reading and writing coverability instances.

Two formats are supported.  The primary one is a plain-text subset of
the MIST input language:

    # comment lines start with '#'
    vars
        p0 p1
    rules
        p0 >= 2 -> p0' = p0 - 1, p1' = p1 + 1;
        p0 >= 1 -> p0' = p0 - 1;
    init
        p0 = 1, p1 = 0
    target
        p1 >= 1

Sections must appear in the order vars, rules, init, target; the rules
section may be absent or empty (a net without transitions).  A rule's
guard is a comma-separated conjunction of `var >= nat` atoms (absent
variables default to bound 0) and its updates have the shape
`var' = var + nat`, `var' = var - nat` or `var' = var`.  A rule
consumes guard-bound tokens and produces bound-plus-delta tokens, so
the resulting production must be non-negative.  `init` assigns exact
token counts (unmentioned variables are 0); interval initial conditions
and `invariants` sections of the full MIST language are rejected.  Each
line of `target` is one conjunctive lower-bound marking; multiple lines
form a disjunction of cover targets.

The secondary format is JSON:

    {"name": ..., "places": [...],
     "transitions": [{"name": ..., "pre": {place: nat}, "post": {place: nat}}],
     "init": {place: nat}, "targets": [{place: nat}]}

Parsing either format back from its serialisation reproduces the
instance structurally.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .petri import PetriNet, make_net

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class ParseError(ValueError):
    """Syntax or consistency error, located by line and column (1-based)."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Instance:
    """A coverability problem: net, initial marking, cover targets.

    Markings are positional over `net.places`; each target is a lower
    bound to be covered and at least one target must be present.
    """

    name: str
    net: PetriNet
    initial: tuple[int, ...]
    targets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.net.places)
        if len(self.initial) != n or any(len(t) != n for t in self.targets):
            raise ValueError("markings must match the net's places")
        if not self.targets:
            raise ValueError("at least one cover target is required")
        if any(v < 0 for v in self.initial) or any(v < 0 for t in self.targets for v in t):
            raise ValueError("markings must be non-negative")


def parse(text: str, fmt: str = "mist", name: str = "") -> Instance:
    if fmt == "mist":
        return _parse_mist(text, name)
    if fmt == "json":
        return _parse_json(text, name)
    raise ValueError(f"unknown format {fmt!r}")


def serialize(instance: Instance, fmt: str = "mist") -> str:
    if fmt == "mist":
        return _serialize_mist(instance)
    if fmt == "json":
        return _serialize_json(instance)
    raise ValueError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# MIST subset


@dataclass(frozen=True)
class _Token:
    kind: str  # ident, nat, sym
    text: str
    line: int
    col: int


_SYMBOLS = (">=", "->", "'", "=", ",", ";", "+", "-", "[", "]")
_SECTIONS = ("vars", "rules", "init", "target")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        i = 0
        while i < len(line):
            ch = line[i]
            if ch.isspace():
                i += 1
                continue
            m = _IDENT.match(line, i)
            if m:
                tokens.append(_Token("ident", m.group(), lineno, i + 1))
                i = m.end()
                continue
            if ch.isdigit():
                j = i
                while j < len(line) and line[j].isdigit():
                    j += 1
                tokens.append(_Token("nat", line[i:j], lineno, i + 1))
                i = j
                continue
            for sym in _SYMBOLS:
                if line.startswith(sym, i):
                    tokens.append(_Token("sym", sym, lineno, i + 1))
                    i += len(sym)
                    break
            else:
                raise ParseError(f"unexpected character {ch!r}", lineno, i + 1)
    return tokens


class _MistParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def _peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _fail(self, message: str, token: Optional[_Token] = None):
        token = token or self._peek()
        if token is None:
            last = self.tokens[-1] if self.tokens else None
            line = last.line if last else 1
            col = last.col + len(last.text) if last else 1
            raise ParseError(message + " (unexpected end of input)", line, col)
        raise ParseError(message, token.line, token.col)

    def _next(self, message: str) -> _Token:
        tok = self._peek()
        if tok is None:
            self._fail(message)
        self.pos += 1
        return tok

    def _expect_sym(self, sym: str) -> _Token:
        tok = self._next(f"expected {sym!r}")
        if tok.kind != "sym" or tok.text != sym:
            self._fail(f"expected {sym!r}, found {tok.text!r}", tok)
        return tok

    def _expect_nat(self) -> int:
        tok = self._next("expected a natural number")
        if tok.kind != "nat":
            self._fail(f"expected a natural number, found {tok.text!r}", tok)
        return int(tok.text)

    def _at_keyword(self, *words: str) -> bool:
        tok = self._peek()
        return tok is not None and tok.kind == "ident" and tok.text in words

    def _expect_keyword(self, word: str) -> _Token:
        tok = self._next(f"expected section {word!r}")
        if tok.kind != "ident" or tok.text != word:
            self._fail(f"expected section {word!r}, found {tok.text!r}", tok)
        return tok

    def _variable(self, places: dict[str, int]) -> tuple[str, _Token]:
        tok = self._next("expected a variable name")
        if tok.kind != "ident":
            self._fail(f"expected a variable name, found {tok.text!r}", tok)
        if tok.text in _SECTIONS or tok.text in ("in", "invariants"):
            self._fail(f"expected a variable name, found keyword {tok.text!r}", tok)
        if tok.text not in places:
            self._fail(f"unknown variable {tok.text!r}", tok)
        return tok.text, tok

    def parse(self, name: str) -> Instance:
        places: dict[str, int] = {}

        self._expect_keyword("vars")
        while self._peek() is not None and not self._at_keyword(*_SECTIONS[1:]):
            tok = self._next("expected a variable name")
            if tok.kind != "ident":
                self._fail(f"expected a variable name, found {tok.text!r}", tok)
            if tok.text in places:
                self._fail(f"duplicate variable {tok.text!r}", tok)
            places[tok.text] = len(places)
        if not places:
            self._fail("the vars section declares no variables")

        rules: list[tuple[dict[str, int], dict[str, int]]] = []
        if self._at_keyword("rules"):
            self._next("")
            while self._peek() is not None and not self._at_keyword(*_SECTIONS, "invariants"):
                rules.append(self._rule(places))
        if self._at_keyword("invariants"):
            self._fail("invariants sections are not supported")

        self._expect_keyword("init")
        init = self._init(places)

        self._expect_keyword("target")
        targets = self._targets(places)
        if self._peek() is not None:
            self._fail("trailing input after the target section")

        ordered = sorted(places, key=places.get)
        transitions = [f"t{i + 1}" for i in range(len(rules))]
        pre = {}
        post = {}
        for i, (guard, delta) in enumerate(rules):
            t = transitions[i]
            for p, bound in guard.items():
                if bound:
                    pre[(p, t)] = bound
            for p in set(guard) | set(delta):
                produced = guard.get(p, 0) + delta.get(p, 0)
                if produced:
                    post[(p, t)] = produced
        net = make_net(ordered, transitions, pre, post)
        init_marking = tuple(init.get(p, 0) for p in ordered)
        target_markings = tuple(
            tuple(tm.get(p, 0) for p in ordered) for tm in targets
        )
        return Instance(name, net, init_marking, target_markings)

    def _rule(self, places: dict[str, int]):
        guard: dict[str, int] = {}
        while True:
            var, tok = self._variable(places)
            self._expect_sym(">=")
            bound = self._expect_nat()
            if var in guard:
                self._fail(f"variable {var!r} guarded twice in one rule", tok)
            guard[var] = bound
            tok = self._next("expected ',' or '->'")
            if tok.kind == "sym" and tok.text == ",":
                continue
            if tok.kind == "sym" and tok.text == "->":
                break
            self._fail(f"expected ',' or '->', found {tok.text!r}", tok)

        delta: dict[str, int] = {}
        while True:
            var, vtok = self._variable(places)
            self._expect_sym("'")
            self._expect_sym("=")
            src, stok = self._variable(places)
            if src != var:
                self._fail(f"update of {var!r} must read {var!r}, not {src!r}", stok)
            if var in delta:
                self._fail(f"variable {var!r} updated twice in one rule", vtok)
            nxt = self._next("expected '+', '-', ',' or ';'")
            if nxt.kind == "sym" and nxt.text in ("+", "-"):
                amount = self._expect_nat()
                delta[var] = amount if nxt.text == "+" else -amount
                nxt = self._next("expected ',' or ';'")
            else:
                delta[var] = 0
            produced = guard.get(var, 0) + delta[var]
            if produced < 0:
                self._fail(
                    f"rule produces {produced} tokens in {var!r} "
                    f"(guard {guard.get(var, 0)} with delta {delta[var]})",
                    vtok,
                )
            if nxt.kind == "sym" and nxt.text == ";":
                return guard, delta
            if not (nxt.kind == "sym" and nxt.text == ","):
                self._fail(f"expected ',' or ';', found {nxt.text!r}", nxt)

    def _init(self, places: dict[str, int]) -> dict[str, int]:
        init: dict[str, int] = {}
        while True:
            var, tok = self._variable(places)
            nxt = self._next("expected '='")
            if nxt.kind == "ident" and nxt.text == "in":
                self._fail("interval initial conditions are not supported", nxt)
            if not (nxt.kind == "sym" and nxt.text == "="):
                self._fail(f"expected '=', found {nxt.text!r}", nxt)
            if var in init:
                self._fail(f"variable {var!r} initialised twice", tok)
            init[var] = self._expect_nat()
            nxt = self._peek()
            if nxt is not None and nxt.kind == "sym" and nxt.text == ",":
                self.pos += 1
                continue
            return init

    def _targets(self, places: dict[str, int]) -> list[dict[str, int]]:
        targets: list[dict[str, int]] = []
        current: dict[str, int] = {}
        current_line: Optional[int] = None
        pending_comma = False
        while self._peek() is not None:
            tok = self._peek()
            if current_line is not None and tok.line != current_line:
                if pending_comma:
                    self._fail("a target conjunction must stay on one line", tok)
                targets.append(current)
                current, current_line = {}, None
            var, vtok = self._variable(places)
            current_line = vtok.line
            self._expect_sym(">=")
            if var in current:
                self._fail(f"variable {var!r} bounded twice in one target", vtok)
            current[var] = self._expect_nat()
            pending_comma = False
            nxt = self._peek()
            if nxt is not None and nxt.kind == "sym" and nxt.text == ",":
                if nxt.line != current_line:
                    self._fail("a target conjunction must stay on one line", nxt)
                self.pos += 1
                pending_comma = True
        if pending_comma:
            self._fail("dangling ',' at the end of the target section")
        if current:
            targets.append(current)
        if not targets:
            self._fail("the target section is empty")
        return targets


def _parse_mist(text: str, name: str) -> Instance:
    return _MistParser(text).parse(name)


def _serialize_mist(instance: Instance) -> str:
    net = instance.net
    if net.transitions and not net.places:
        raise ValueError("a net with transitions but no places has no MIST form")
    for n in net.places:
        if not _IDENT.fullmatch(n):
            raise ValueError(f"place name {n!r} is not a MIST identifier")
    lines = ["vars", "    " + " ".join(net.places), "rules"]
    for ti, _ in enumerate(net.transitions):
        guard = [
            f"{net.places[p]} >= {w}"
            for p, w in sorted(net.pre[ti].items())
        ]
        deltas = []
        for p in sorted(set(net.pre[ti]) | set(net.post[ti])):
            d = net.post[ti].get(p, 0) - net.pre[ti].get(p, 0)
            if d > 0:
                deltas.append(f"{net.places[p]}' = {net.places[p]} + {d}")
            elif d < 0:
                deltas.append(f"{net.places[p]}' = {net.places[p]} - {-d}")
        if not guard:
            anchor = min(net.post[ti]) if net.post[ti] else 0
            guard = [f"{net.places[anchor]} >= 0"]
        if not deltas:
            anchor = min(net.pre[ti]) if net.pre[ti] else 0
            deltas = [f"{net.places[anchor]}' = {net.places[anchor]}"]
        lines.append(f"    {', '.join(guard)} -> {', '.join(deltas)};")
    lines.append("init")
    lines.append("    " + ", ".join(f"{p} = {v}" for p, v in zip(net.places, instance.initial)))
    lines.append("target")
    for target in instance.targets:
        atoms = [f"{p} >= {v}" for p, v in zip(net.places, target) if v > 0]
        if not atoms:
            atoms = [f"{net.places[0]} >= 0"]
        lines.append("    " + ", ".join(atoms))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# JSON


def _parse_json(text: str, name: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None

    def fail(message: str):
        raise ParseError(message, 1, 1)

    if not isinstance(doc, dict):
        fail("top-level value must be an object")
    places = doc.get("places")
    if not isinstance(places, list) or not all(isinstance(p, str) for p in places):
        fail("'places' must be a list of strings")
    if not places:
        fail("at least one place is required")
    for p in places:
        if not _IDENT.fullmatch(p):
            fail(f"place name {p!r} is not an identifier")

    def marking(obj, what: str) -> dict[str, int]:
        if not isinstance(obj, dict):
            fail(f"{what} must be an object mapping places to naturals")
        out = {}
        for p, v in obj.items():
            if p not in places:
                fail(f"{what} references unknown place {p!r}")
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                fail(f"{what} value for {p!r} must be a natural number")
            out[p] = v
        return out

    transitions = doc.get("transitions", [])
    if not isinstance(transitions, list):
        fail("'transitions' must be a list")
    tnames = []
    pre = {}
    post = {}
    for i, tr in enumerate(transitions):
        if not isinstance(tr, dict):
            fail("each transition must be an object")
        tname = tr.get("name", f"t{i + 1}")
        if not isinstance(tname, str) or not _IDENT.fullmatch(tname):
            fail(f"transition name {tname!r} is not an identifier")
        if tname in tnames or tname in places:
            fail(f"duplicate name {tname!r}")
        tnames.append(tname)
        for (slot, store) in (("pre", pre), ("post", post)):
            for p, v in marking(tr.get(slot, {}), f"transition {tname!r} {slot}").items():
                if v:
                    store[(p, tname)] = v
    net = make_net(places, tnames, pre, post)
    init = marking(doc.get("init", {}), "'init'")
    targets = doc.get("targets")
    if not isinstance(targets, list) or not targets:
        fail("'targets' must be a non-empty list")
    target_markings = tuple(
        tuple(marking(t, "target").get(p, 0) for p in places) for t in targets
    )
    iname = doc.get("name", name)
    if not isinstance(iname, str):
        fail("'name' must be a string")
    return Instance(
        iname or name,
        net,
        tuple(init.get(p, 0) for p in places),
        target_markings,
    )


def _serialize_json(instance: Instance) -> str:
    net = instance.net
    doc = {
        "name": instance.name,
        "places": list(net.places),
        "transitions": [
            {
                "name": t,
                "pre": {net.places[p]: w for p, w in sorted(net.pre[ti].items())},
                "post": {net.places[p]: w for p, w in sorted(net.post[ti].items())},
            }
            for ti, t in enumerate(net.transitions)
        ],
        "init": {p: v for p, v in zip(net.places, instance.initial) if v},
        "targets": [
            {p: v for p, v in zip(net.places, target) if v}
            for target in instance.targets
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
