"""Parser and printer for the deterministic SQL subset.

Supported statements: single-table UPDATE (multi-assignment, additive SET
expressions), SELECT with equality conjunctions, INSERT of full rows, and
CALL of a registered stored procedure. Scripts are semicolon-separated.
The full grammar lives in docs/sql-subset.md.

Money values are exact scaled integers (two decimal places); no floats
appear anywhere in parse trees or state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

DECIMAL_SCALE = 100

KEYWORDS = {
    "UPDATE", "SET", "WHERE", "AND", "SELECT", "FROM",
    "INSERT", "INTO", "VALUES", "CALL",
}


class ParseError(ValueError):
    def __init__(self, offset: int, expected: str, found: str = "") -> None:
        self.offset = offset
        self.expected = expected
        self.found = found
        detail = f", found {found}" if found else ""
        super().__init__(f"parse error at offset {offset}: expected {expected}{detail}")


@dataclass(frozen=True)
class Literal:
    """A typed constant: kind is one of 'int', 'decimal', 'string'.

    Decimal values are stored as integers scaled by 100.
    """

    kind: str
    value: Union[int, str]


@dataclass(frozen=True)
class ColumnRef:
    name: str


# An additive expression is a sequence of signed terms; sign is +1 or -1.
Term = Union[ColumnRef, Literal]


@dataclass(frozen=True)
class Expr:
    terms: tuple[tuple[int, Term], ...]


@dataclass(frozen=True)
class Assignment:
    column: str
    expr: Expr


@dataclass(frozen=True)
class Condition:
    column: str
    value: Literal


@dataclass(frozen=True)
class UpdateStmt:
    table: str
    assignments: tuple[Assignment, ...]
    where: tuple[Condition, ...]


@dataclass(frozen=True)
class SelectStmt:
    columns: tuple[str, ...] | None  # None means '*'
    table: str
    where: tuple[Condition, ...]


@dataclass(frozen=True)
class InsertStmt:
    table: str
    values: tuple[Literal, ...]


@dataclass(frozen=True)
class CallStmt:
    proc: str
    args: tuple[Literal, ...]


SqlStatement = Union[UpdateStmt, SelectStmt, InsertStmt, CallStmt]


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT KEYWORD INT DECIMAL STRING SYMBOL EOF
    text: str
    offset: int


_SYMBOLS = set(",()=+-;*")


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        start = i
        if c.isalpha() or c == "_":
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i]
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(_Token("KEYWORD", upper, start))
            else:
                tokens.append(_Token("IDENT", word, start))
        elif c.isdigit():
            while i < n and text[i].isdigit():
                i += 1
            if i < n and text[i] == ".":
                i += 1
                frac_start = i
                while i < n and text[i].isdigit():
                    i += 1
                frac = text[frac_start:i]
                if not 1 <= len(frac) <= 2:
                    raise ParseError(frac_start, "1 or 2 fractional digits")
                tokens.append(_Token("DECIMAL", text[start:i], start))
            else:
                tokens.append(_Token("INT", text[start:i], start))
        elif c == "'":
            i += 1
            chars: list[str] = []
            while True:
                if i >= n:
                    raise ParseError(start, "closing quote for string literal")
                if text[i] == "'":
                    if i + 1 < n and text[i + 1] == "'":  # '' escapes a quote
                        chars.append("'")
                        i += 2
                        continue
                    i += 1
                    break
                chars.append(text[i])
                i += 1
            tokens.append(_Token("STRING", "".join(chars), start))
        elif c in _SYMBOLS:
            tokens.append(_Token("SYMBOL", c, start))
            i += 1
        else:
            raise ParseError(i, "a token", repr(c))
    tokens.append(_Token("EOF", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self._tokens = _tokenize(text)
        self._pos = 0

    def _peek(self) -> _Token:
        return self._tokens[self._pos]

    def _next(self) -> _Token:
        tok = self._tokens[self._pos]
        self._pos += 1
        return tok

    def _error(self, expected: str) -> ParseError:
        tok = self._peek()
        found = tok.text if tok.kind != "EOF" else "end of input"
        return ParseError(tok.offset, expected, repr(found))

    def _expect_symbol(self, sym: str) -> None:
        tok = self._peek()
        if tok.kind != "SYMBOL" or tok.text != sym:
            raise self._error(repr(sym))
        self._next()

    def _expect_keyword(self, kw: str) -> None:
        tok = self._peek()
        if tok.kind != "KEYWORD" or tok.text != kw:
            raise self._error(kw)
        self._next()

    def _accept_keyword(self, kw: str) -> bool:
        tok = self._peek()
        if tok.kind == "KEYWORD" and tok.text == kw:
            self._next()
            return True
        return False

    def _accept_symbol(self, sym: str) -> bool:
        tok = self._peek()
        if tok.kind == "SYMBOL" and tok.text == sym:
            self._next()
            return True
        return False

    def _ident(self, what: str) -> str:
        tok = self._peek()
        if tok.kind != "IDENT":
            raise self._error(what)
        return self._next().text

    def script(self) -> list[SqlStatement]:
        statements = [self._statement()]
        while self._accept_symbol(";"):
            if self._peek().kind == "EOF":  # trailing semicolon
                break
            statements.append(self._statement())
        tok = self._peek()
        if tok.kind != "EOF":
            raise self._error("';' or end of input")
        return statements

    def _statement(self) -> SqlStatement:
        tok = self._peek()
        if tok.kind != "KEYWORD":
            raise self._error("UPDATE, SELECT, INSERT, or CALL")
        if tok.text == "UPDATE":
            return self._update()
        if tok.text == "SELECT":
            return self._select()
        if tok.text == "INSERT":
            return self._insert()
        if tok.text == "CALL":
            return self._call()
        raise self._error("UPDATE, SELECT, INSERT, or CALL")

    def _update(self) -> UpdateStmt:
        self._expect_keyword("UPDATE")
        table = self._ident("table name")
        self._expect_keyword("SET")
        assignments = [self._assignment()]
        while self._accept_symbol(","):
            assignments.append(self._assignment())
        where = self._where_opt()
        return UpdateStmt(table=table, assignments=tuple(assignments), where=where)

    def _assignment(self) -> Assignment:
        column = self._ident("column name")
        self._expect_symbol("=")
        return Assignment(column=column, expr=self._expr())

    def _expr(self) -> Expr:
        terms: list[tuple[int, Term]] = []
        sign = -1 if self._accept_symbol("-") else 1
        terms.append((sign, self._term()))
        while True:
            if self._accept_symbol("+"):
                terms.append((1, self._term()))
            elif self._accept_symbol("-"):
                terms.append((-1, self._term()))
            else:
                break
        return Expr(terms=tuple(terms))

    def _term(self) -> Term:
        tok = self._peek()
        if tok.kind == "IDENT":
            return ColumnRef(name=self._next().text)
        if tok.kind in ("INT", "DECIMAL", "STRING"):
            return self._literal()
        raise self._error("column, number, or string")

    def _literal(self) -> Literal:
        negative = self._accept_symbol("-")
        tok = self._peek()
        if tok.kind == "INT":
            self._next()
            value = int(tok.text)
            return Literal(kind="int", value=-value if negative else value)
        if tok.kind == "DECIMAL":
            self._next()
            whole, frac = tok.text.split(".")
            scaled = int(whole) * DECIMAL_SCALE + int(frac.ljust(2, "0"))
            return Literal(kind="decimal", value=-scaled if negative else scaled)
        if tok.kind == "STRING":
            if negative:
                raise self._error("number after '-'")
            self._next()
            return Literal(kind="string", value=tok.text)
        raise self._error("literal")

    def _where_opt(self) -> tuple[Condition, ...]:
        if not self._accept_keyword("WHERE"):
            return ()
        conditions = [self._condition()]
        while self._accept_keyword("AND"):
            conditions.append(self._condition())
        return tuple(conditions)

    def _condition(self) -> Condition:
        column = self._ident("column name")
        self._expect_symbol("=")
        return Condition(column=column, value=self._literal())

    def _select(self) -> SelectStmt:
        self._expect_keyword("SELECT")
        columns: tuple[str, ...] | None
        if self._accept_symbol("*"):
            columns = None
        else:
            names = [self._ident("column name")]
            while self._accept_symbol(","):
                names.append(self._ident("column name"))
            columns = tuple(names)
        self._expect_keyword("FROM")
        table = self._ident("table name")
        return SelectStmt(columns=columns, table=table, where=self._where_opt())

    def _insert(self) -> InsertStmt:
        self._expect_keyword("INSERT")
        self._expect_keyword("INTO")
        table = self._ident("table name")
        self._expect_keyword("VALUES")
        self._expect_symbol("(")
        values = [self._literal()]
        while self._accept_symbol(","):
            values.append(self._literal())
        self._expect_symbol(")")
        return InsertStmt(table=table, values=tuple(values))

    def _call(self) -> CallStmt:
        self._expect_keyword("CALL")
        proc = self._ident("procedure name")
        self._expect_symbol("(")
        args: list[Literal] = []
        if not self._accept_symbol(")"):
            args.append(self._literal())
            while self._accept_symbol(","):
                args.append(self._literal())
            self._expect_symbol(")")
        return CallStmt(proc=proc, args=tuple(args))


def parse_sql(text: str) -> list[SqlStatement]:
    """Parse a semicolon-separated script into ordered statements."""
    return _Parser(text).script()


def format_decimal(scaled: int) -> str:
    sign = "-" if scaled < 0 else ""
    magnitude = abs(scaled)
    return f"{sign}{magnitude // DECIMAL_SCALE}.{magnitude % DECIMAL_SCALE:02d}"


def _print_literal(lit: Literal) -> str:
    if lit.kind == "int":
        return str(lit.value)
    if lit.kind == "decimal":
        return format_decimal(int(lit.value))
    escaped = str(lit.value).replace("'", "''")
    return f"'{escaped}'"


def _print_expr(expr: Expr) -> str:
    parts: list[str] = []
    for index, (sign, term) in enumerate(expr.terms):
        rendered = term.name if isinstance(term, ColumnRef) else _print_literal(term)
        if index == 0:
            parts.append(f"-{rendered}" if sign < 0 else rendered)
        else:
            parts.append(f"{'+' if sign > 0 else '-'} {rendered}")
    return " ".join(parts)


def _print_where(where: tuple[Condition, ...]) -> str:
    if not where:
        return ""
    conds = " AND ".join(f"{c.column} = {_print_literal(c.value)}" for c in where)
    return f" WHERE {conds}"


def print_statement(stmt: SqlStatement) -> str:
    """Render a statement in canonical form; parsing it back yields an equal tree."""
    if isinstance(stmt, UpdateStmt):
        sets = ", ".join(f"{a.column} = {_print_expr(a.expr)}" for a in stmt.assignments)
        return f"UPDATE {stmt.table} SET {sets}{_print_where(stmt.where)}"
    if isinstance(stmt, SelectStmt):
        cols = "*" if stmt.columns is None else ", ".join(stmt.columns)
        return f"SELECT {cols} FROM {stmt.table}{_print_where(stmt.where)}"
    if isinstance(stmt, InsertStmt):
        values = ", ".join(_print_literal(v) for v in stmt.values)
        return f"INSERT INTO {stmt.table} VALUES ({values})"
    if isinstance(stmt, CallStmt):
        args = ", ".join(_print_literal(a) for a in stmt.args)
        return f"CALL {stmt.proc}({args})"
    raise TypeError(f"unknown statement type: {type(stmt)!r}")


def print_script(statements: list[SqlStatement]) -> str:
    return "; ".join(print_statement(s) for s in statements)


def is_read_only_statement(stmt: SqlStatement) -> bool:
    """SELECTs are read-only; CALLs are resolved against the procedure registry."""
    return isinstance(stmt, SelectStmt)
