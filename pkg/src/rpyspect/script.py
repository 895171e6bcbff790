"""The .crs script language: lexer, parser, AST, static validation, and a
pretty-printer.

The language is a flat sequence of named-argument calls plus two loop
forms, forEach and forEachUnion, whose block binds a single integer loop
variable usable in +/- argument arithmetic. A `use("...").with { ... }`
wrapper is accepted syntax that only introduces the block scope; it is not
preserved in the AST. Unknown function names, unknown argument names, and
argument type mismatches are rejected at parse-validation time, before
anything runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import BadArgumentError, ScriptSyntaxError, UnknownFunctionError

# --- AST ---------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: object  # int, float, bool, or str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # "+" or "-"
    left: Expr
    right: Expr


@dataclass(frozen=True)
class ListExpr:
    items: tuple[Expr, ...]


Expr = Union[Lit, Var, BinOp, ListExpr]


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[tuple[str, Expr], ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def arg(self, name: str) -> Optional[Expr]:
        for key, expr in self.args:
            if key == name:
                return expr
        return None


@dataclass(frozen=True)
class Loop:
    kind: str  # "forEach" or "forEachUnion"
    args: tuple[tuple[str, Expr], ...]
    var: str
    body: tuple[Statement, ...]
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    def arg(self, name: str) -> Optional[Expr]:
        for key, expr in self.args:
            if key == name:
                return expr
        return None


Statement = Union[Call, Loop]


@dataclass(frozen=True)
class ScriptProgram:
    statements: tuple[Statement, ...]


# --- Registered surface --------------------------------------------------

# Argument types: int, real (int accepted), bool, str, range (3-element
# [int, int, bool] triple), intpair (2-element [int, int]).
REGISTRY: dict[str, dict[str, tuple]] = {
    "set": {"required": (), "optional": (("n_pct_range", "int"), ("median_range", "int"))},
    "importFile": {
        "required": (("file", "str"), ("type", "str")),
        "optional": (
            ("RPY", "range"),
            ("PY", "range"),
            ("sampling", "str"),
            ("maxCR", "int"),
            ("offset", "int"),
            ("seed", "int"),
        ),
    },
    "analyzeFile": {
        "required": (("file", "str"), ("type", "str")),
        "optional": (("RPY", "range"), ("PY", "range")),
    },
    "info": {"required": (), "optional": ()},
    "cluster": {
        "required": (("threshold", "real"),),
        "optional": (("volume", "bool"), ("page", "bool"), ("DOI", "bool")),
    },
    "merge": {"required": (), "optional": ()},
    "removeCR": {"required": (("N_CR", "intpair"),), "optional": ()},
    "saveFile": {"required": (("file", "str"),), "optional": ()},
    "exportFile": {"required": (("file", "str"), ("type", "str")), "optional": ()},
}

LOOP_ARGS = {"required": (("count", "int"),), "optional": (("dir", "str"),)}
LOOP_KINDS = ("forEach", "forEachUnion")


# --- Lexer ---------------------------------------------------------------


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT INT REAL STRING BOOL PUNCT ARROW EOF
    value: object
    line: int
    col: int


_PUNCT = set("()[]{},:+-.")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)

    def err(msg: str):
        raise ScriptSyntaxError(msg, line, col)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if text.startswith("->", i):
            tokens.append(_Token("ARROW", "->", start_line, start_col))
            i += 2
            col += 2
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
                tok = _Token("REAL", float(text[i:j]), start_line, start_col)
            else:
                tok = _Token("INT", int(text[i:j]), start_line, start_col)
            tokens.append(tok)
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            if word in ("true", "false"):
                tokens.append(_Token("BOOL", word == "true", start_line, start_col))
            else:
                tokens.append(_Token("IDENT", word, start_line, start_col))
            col += j - i
            i = j
            continue
        if c == '"':
            value, i, line, col = _lex_string(text, i, line, col)
            tokens.append(_Token("STRING", value, start_line, start_col))
            continue
        if c in _PUNCT:
            tokens.append(_Token("PUNCT", c, start_line, start_col))
            i += 1
            col += 1
            continue
        err(f"unexpected character {c!r}")
    tokens.append(_Token("EOF", None, line, col))
    return tokens


_ESCAPES = {'"': '"', "\\": "\\", "/": "/", "n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f"}


def _lex_string(text: str, i: int, line: int, col: int):
    # i points at the opening quote.
    out: list[str] = []
    start_line, start_col = line, col
    i += 1
    col += 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == '"':
            return "".join(out), i + 1, line, col + 1
        if c == "\n":
            raise ScriptSyntaxError("unterminated string literal", start_line, start_col)
        if c == "\\":
            if i + 1 >= n:
                break
            esc = text[i + 1]
            if esc in _ESCAPES:
                out.append(_ESCAPES[esc])
                i += 2
                col += 2
                continue
            if esc == "u" and i + 5 < n:
                out.append(chr(int(text[i + 2 : i + 6], 16)))
                i += 6
                col += 6
                continue
            raise ScriptSyntaxError(f"bad escape \\{esc}", line, col)
        out.append(c)
        i += 1
        col += 1
    raise ScriptSyntaxError("unterminated string literal", start_line, start_col)


# --- Parser --------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect_punct(self, char: str) -> _Token:
        tok = self.take()
        if tok.kind != "PUNCT" or tok.value != char:
            raise ScriptSyntaxError(f"expected {char!r}, got {tok.value!r}", tok.line, tok.col)
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.take()
        if tok.kind != kind:
            raise ScriptSyntaxError(f"expected {kind}, got {tok.value!r}", tok.line, tok.col)
        return tok

    def at_punct(self, char: str) -> bool:
        tok = self.peek()
        return tok.kind == "PUNCT" and tok.value == char

    def parse_program(self) -> ScriptProgram:
        statements: list[Statement] = []
        while self.peek().kind != "EOF":
            statements.extend(self.parse_statement())
        return ScriptProgram(statements=tuple(statements))

    def parse_statement(self) -> list[Statement]:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ScriptSyntaxError(f"expected a statement, got {tok.value!r}", tok.line, tok.col)
        if tok.value == "use" and self.peek(1).kind == "PUNCT" and self.peek(1).value == "(":
            return self.parse_use_block()
        if tok.value in LOOP_KINDS:
            return [self.parse_loop()]
        return [self.parse_call()]

    def parse_use_block(self) -> list[Statement]:
        # use("...").with { loop trailing-statements }
        self.take()
        self.expect_punct("(")
        self.expect("STRING")
        self.expect_punct(")")
        self.expect_punct(".")
        with_tok = self.expect("IDENT")
        if with_tok.value != "with":
            raise ScriptSyntaxError(
                f"expected 'with', got {with_tok.value!r}", with_tok.line, with_tok.col
            )
        brace = self.expect_punct("{")
        statements: list[Statement] = []
        while not self.at_punct("}"):
            if self.peek().kind == "EOF":
                raise ScriptSyntaxError("unterminated use-block", brace.line, brace.col)
            statements.extend(self.parse_statement())
        self.expect_punct("}")
        if not statements or not isinstance(statements[0], Loop):
            raise ScriptSyntaxError(
                "a use-block must start with forEach or forEachUnion", brace.line, brace.col
            )
        return statements

    def parse_loop(self) -> Loop:
        head = self.take()
        kind = head.value
        self.expect_punct("(")
        args: list[tuple[str, Expr]] = []
        var = None
        body: tuple[Statement, ...] = ()
        while True:
            if self.at_punct("{"):
                var, body = self.parse_block()
                break
            name_tok = self.expect("IDENT")
            self.expect_punct(":")
            args.append((name_tok.value, self.parse_expr()))
            if self.at_punct(","):
                self.take()
                continue
            break
        if var is None:
            tok = self.peek()
            raise ScriptSyntaxError(f"{kind} needs a {{ var -> ... }} block", tok.line, tok.col)
        self.expect_punct(")")
        return Loop(
            kind=kind,
            args=tuple(args),
            var=var,
            body=body,
            line=head.line,
            col=head.col,
        )

    def parse_block(self) -> tuple[str, tuple[Statement, ...]]:
        brace = self.expect_punct("{")
        var_tok = self.expect("IDENT")
        self.expect("ARROW")
        statements: list[Statement] = []
        while not self.at_punct("}"):
            if self.peek().kind == "EOF":
                raise ScriptSyntaxError("unterminated loop block", brace.line, brace.col)
            statements.extend(self.parse_statement())
        self.expect_punct("}")
        return var_tok.value, tuple(statements)

    def parse_call(self) -> Call:
        name_tok = self.expect("IDENT")
        self.expect_punct("(")
        args: list[tuple[str, Expr]] = []
        if not self.at_punct(")"):
            while True:
                arg_tok = self.expect("IDENT")
                self.expect_punct(":")
                args.append((arg_tok.value, self.parse_expr()))
                if self.at_punct(","):
                    self.take()
                    continue
                break
        self.expect_punct(")")
        return Call(name=name_tok.value, args=tuple(args), line=name_tok.line, col=name_tok.col)

    def parse_expr(self) -> Expr:
        left = self.parse_atom()
        while self.peek().kind == "PUNCT" and self.peek().value in ("+", "-"):
            op = self.take().value
            right = self.parse_atom()
            left = BinOp(op=op, left=left, right=right)
        return left

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind in ("INT", "REAL", "STRING", "BOOL"):
            self.take()
            return Lit(tok.value)
        if tok.kind == "IDENT":
            self.take()
            return Var(tok.value)
        if self.at_punct("["):
            self.take()
            items = [self.parse_expr()]
            while self.at_punct(","):
                self.take()
                items.append(self.parse_expr())
            self.expect_punct("]")
            return ListExpr(items=tuple(items))
        if self.at_punct("("):
            self.take()
            inner = self.parse_expr()
            self.expect_punct(")")
            return inner
        raise ScriptSyntaxError(f"expected an expression, got {tok.value!r}", tok.line, tok.col)


# --- Static validation ----------------------------------------------------


def _expr_type(expr: Expr, loop_var: Optional[str], line: int, col: int) -> str:
    """Static type of an expression; loop variables are integers."""
    if isinstance(expr, Lit):
        if isinstance(expr.value, bool):
            return "bool"
        if isinstance(expr.value, int):
            return "int"
        if isinstance(expr.value, float):
            return "real"
        return "str"
    if isinstance(expr, Var):
        if loop_var is None or expr.name != loop_var:
            raise BadArgumentError(f"unbound variable {expr.name!r}", line, col)
        return "int"
    if isinstance(expr, BinOp):
        for side in (expr.left, expr.right):
            if _expr_type(side, loop_var, line, col) != "int":
                raise BadArgumentError("arithmetic needs integer operands", line, col)
        return "int"
    return "list"


def _check_arg(name: str, expr: Expr, want: str, loop_var: Optional[str], line: int, col: int):
    got = _expr_type(expr, loop_var, line, col)
    if want == "range":
        if not (isinstance(expr, ListExpr) and len(expr.items) == 3):
            raise BadArgumentError(f"{name} expects a [lo, hi, flag] triple", line, col)
        kinds = [_expr_type(e, loop_var, line, col) for e in expr.items]
        if kinds[0] != "int" or kinds[1] != "int" or kinds[2] != "bool":
            raise BadArgumentError(f"{name} expects [int, int, bool]", line, col)
        return
    if want == "intpair":
        if not (isinstance(expr, ListExpr) and len(expr.items) == 2):
            raise BadArgumentError(f"{name} expects a [lo, hi] pair", line, col)
        if any(_expr_type(e, loop_var, line, col) != "int" for e in expr.items):
            raise BadArgumentError(f"{name} expects [int, int]", line, col)
        return
    if want == "real":
        if got not in ("real", "int"):
            raise BadArgumentError(f"{name} expects a number, got {got}", line, col)
        return
    if got != want:
        raise BadArgumentError(f"{name} expects {want}, got {got}", line, col)


def _validate_args(
    name: str,
    args: tuple[tuple[str, Expr], ...],
    spec: dict,
    loop_var: Optional[str],
    line: int,
    col: int,
) -> None:
    allowed = {arg: kind for arg, kind in spec["required"]}
    allowed.update({arg: kind for arg, kind in spec["optional"]})
    seen = set()
    for arg, expr in args:
        if arg not in allowed:
            raise BadArgumentError(f"{name} has no argument {arg!r}", line, col)
        if arg in seen:
            raise BadArgumentError(f"duplicate argument {arg!r}", line, col)
        seen.add(arg)
        _check_arg(arg, expr, allowed[arg], loop_var, line, col)
    for arg, _ in spec["required"]:
        if arg not in seen:
            raise BadArgumentError(f"{name} requires argument {arg!r}", line, col)


def _validate(statements: tuple[Statement, ...], loop_var: Optional[str]) -> None:
    for stmt in statements:
        if isinstance(stmt, Loop):
            _validate_args(stmt.kind, stmt.args, LOOP_ARGS, loop_var, stmt.line, stmt.col)
            _validate(stmt.body, stmt.var)
        else:
            spec = REGISTRY.get(stmt.name)
            if spec is None:
                raise UnknownFunctionError(f"unknown function {stmt.name!r}", stmt.line, stmt.col)
            _validate_args(stmt.name, stmt.args, spec, loop_var, stmt.line, stmt.col)


def parse_script(text: str) -> ScriptProgram:
    """Parse and statically validate a script."""
    program = _Parser(_tokenize(text)).parse_program()
    _validate(program.statements, None)
    return program


# --- Evaluation and pretty-printing ---------------------------------------


def eval_expr(expr: Expr, bindings: Optional[dict[str, int]] = None):
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Var):
        if not bindings or expr.name not in bindings:
            raise BadArgumentError(f"unbound variable {expr.name!r}")
        return bindings[expr.name]
    if isinstance(expr, BinOp):
        left = eval_expr(expr.left, bindings)
        right = eval_expr(expr.right, bindings)
        return left + right if expr.op == "+" else left - right
    return [eval_expr(item, bindings) for item in expr.items]


def _fmt_expr(expr: Expr) -> str:
    if isinstance(expr, Lit):
        v = expr.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, str):
            return json.dumps(v, ensure_ascii=False)
        return str(v)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, BinOp):
        right = _fmt_expr(expr.right)
        if isinstance(expr.right, BinOp):
            right = f"({right})"
        return f"{_fmt_expr(expr.left)} {expr.op} {right}"
    return "[" + ", ".join(_fmt_expr(item) for item in expr.items) + "]"


def pretty(program: ScriptProgram) -> str:
    """Canonical source form; parsing it back reproduces the same AST."""
    out: list[str] = []
    _pretty_into(program.statements, out, 0)
    return "\n".join(out) + "\n" if out else ""


def _pretty_into(statements: tuple[Statement, ...], out: list[str], depth: int) -> None:
    pad = "    " * depth
    for stmt in statements:
        if isinstance(stmt, Loop):
            args = "".join(f"{name}: {_fmt_expr(e)}, " for name, e in stmt.args)
            out.append(f"{pad}{stmt.kind}({args}{{ {stmt.var} ->")
            _pretty_into(stmt.body, out, depth + 1)
            out.append(f"{pad}}})")
        else:
            args = ", ".join(f"{name}: {_fmt_expr(e)}" for name, e in stmt.args)
            out.append(f"{pad}{stmt.name}({args})")
