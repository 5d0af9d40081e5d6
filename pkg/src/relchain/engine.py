"""Deterministic in-memory relational engine with block-atomic transactions.

One db-transaction is opened per block. Mutations go through an undo log;
if any statement of the block failed, commit rolls the whole block back by
replaying the log in reverse. Value types are int64, scaled-integer
decimal(12,2), and string; no floats ever enter state.

The state hash is the cross-node determinism witness: per table, a running
sum (mod 2^256) of per-row digests, folded with the schema and row counts
into one SHA-256. Row insertion order cannot affect it.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import sql
from .abci import (
    AbciBackend,
    Admission,
    BackendError,
    ExecStatus,
    LifecycleGuard,
    QueryResult,
    encode_affected,
    encode_rows,
    encode_value,
)
from .chain import BlockHeader, decode_tx, sha256
from .codec import DecodeError, Writer

ACC_MODULUS = 1 << 256

VALUE_KINDS = ("int64", "decimal", "string")
I64_MIN = -(1 << 63)
I64_MAX = (1 << 63) - 1


class NotReadOnly(Exception):
    """A mutating statement reached the read-only query path."""


class DuplicateProcedure(Exception):
    pass


class ProcedureFailure(Exception):
    """Deterministic procedure-level failure; becomes a failed ExecStatus."""


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # one of VALUE_KINDS

    def __post_init__(self) -> None:
        if self.kind not in VALUE_KINDS:
            raise ValueError(f"unknown column type {self.kind!r}")


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[Column, ...]
    pk: tuple[str, ...]

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column in table {self.name}")
        if not self.pk:
            raise ValueError(f"table {self.name} needs a primary key")
        for col in self.pk:
            if col not in names:
                raise ValueError(f"pk column {col} not in table {self.name}")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise KeyError(name)

    def pk_indices(self) -> tuple[int, ...]:
        return tuple(self.column_index(c) for c in self.pk)


Row = tuple[object, ...]
PkTuple = tuple[object, ...]


class _Table:
    __slots__ = ("schema", "rows", "row_digests", "digest_acc", "_pk_idx", "_kinds")

    def __init__(self, schema: TableSchema) -> None:
        self.schema = schema
        self.rows: dict[PkTuple, Row] = {}
        self.row_digests: dict[PkTuple, int] = {}
        self.digest_acc = 0
        self._pk_idx = schema.pk_indices()
        self._kinds = tuple(c.kind for c in schema.columns)

    def pk_of(self, row: Row) -> PkTuple:
        return tuple(row[i] for i in self._pk_idx)

    def row_digest(self, row: Row) -> int:
        w = Writer()
        for value, kind in zip(row, self._kinds):
            encode_value(w, value, kind)
        return int.from_bytes(sha256(w.finish()), "big")

    def put(self, pk: PkTuple, row: Row) -> None:
        digest = self.row_digest(row)
        old = self.row_digests.get(pk)
        if old is not None:
            self.digest_acc = (self.digest_acc - old) % ACC_MODULUS
        self.digest_acc = (self.digest_acc + digest) % ACC_MODULUS
        self.rows[pk] = row
        self.row_digests[pk] = digest

    def remove(self, pk: PkTuple) -> None:
        digest = self.row_digests.pop(pk)
        self.digest_acc = (self.digest_acc - digest) % ACC_MODULUS
        del self.rows[pk]


@dataclass(frozen=True)
class StoredProcedure:
    name: str
    arity: int
    fn: Callable[["ProcedureContext"], None]
    read_only: bool = False


class _DbTransaction:
    __slots__ = ("handle", "height", "block_time", "undo", "first_images", "statements_applied")

    def __init__(self, handle: int, height: int, block_time: int) -> None:
        self.handle = handle
        self.height = height
        self.block_time = block_time
        # (table, pk, before-image) with None marking an insert to delete on undo
        self.undo: list[tuple[str, PkTuple, Row | None]] = []
        # committed image of every touched key, for snapshot readers
        self.first_images: dict[tuple[str, PkTuple], Row | None] = {}
        self.statements_applied = 0


class RelationalEngine(AbciBackend):
    """The builtin relational backend."""

    def __init__(self, schema: Iterable[TableSchema] = ()) -> None:
        self._tables: dict[str, _Table] = {}
        self._procedures: dict[str, StoredProcedure] = {}
        self._guard = LifecycleGuard()
        self._tx: _DbTransaction | None = None
        self._lock = threading.RLock()
        self._committed_hash: bytes | None = None
        self._blocks_committed = 0
        for table_schema in schema:
            self.load_table(table_schema)

    # -- schema and bootstrap ------------------------------------------------

    def load_table(self, schema: TableSchema) -> None:
        with self._lock:
            if schema.name in self._tables:
                raise ValueError(f"table {schema.name} already exists")
            if self._blocks_committed or self._tx is not None:
                raise BackendError("schema is fixed once the chain is running")
            self._tables[schema.name] = _Table(schema)
            self._committed_hash = None

    def bootstrap_rows(self, table: str, rows: Iterable[Row]) -> None:
        """Load initial rows before genesis; not undo-logged."""
        with self._lock:
            if self._blocks_committed or self._tx is not None:
                raise BackendError("bootstrap only before the first block")
            t = self._require_table(table)
            for row in rows:
                self._check_row(t, row)
                pk = t.pk_of(row)
                if pk in t.rows:
                    raise ValueError(f"duplicate pk {pk} in bootstrap of {table}")
                t.put(pk, row)
            self._committed_hash = None

    def register_procedure(self, proc: StoredProcedure) -> None:
        if proc.name in self._procedures:
            raise DuplicateProcedure(proc.name)
        self._procedures[proc.name] = proc

    def procedure(self, name: str) -> StoredProcedure | None:
        return self._procedures.get(name)

    def table_schema(self, name: str) -> TableSchema:
        return self._require_table(name).schema

    def table_names(self) -> tuple[str, ...]:
        return tuple(self._tables)

    def row_count(self, table: str) -> int:
        return len(self._require_table(table).rows)

    def get_row(self, table: str, pk: PkTuple) -> Row | None:
        """Current (possibly in-flight) value; test and procedure plumbing."""
        return self._require_table(table).rows.get(pk)

    def _require_table(self, name: str) -> _Table:
        t = self._tables.get(name)
        if t is None:
            raise KeyError(f"unknown table {name}")
        return t

    def _check_row(self, t: _Table, row: Row) -> None:
        schema = t.schema
        if len(row) != len(schema.columns):
            raise ValueError(
                f"{schema.name} expects {len(schema.columns)} values, got {len(row)}"
            )
        for value, col in zip(row, schema.columns):
            if col.kind in ("int64", "decimal"):
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ValueError(f"{schema.name}.{col.name} expects an integer")
                if not I64_MIN <= value <= I64_MAX:
                    raise ValueError(f"{schema.name}.{col.name} out of int64 range")
            elif not isinstance(value, str):
                raise ValueError(f"{schema.name}.{col.name} expects a string")

    # -- state hash ------------------------------------------------------------

    def state_hash(self) -> bytes:
        """Digest over canonical per-table summaries in schema order."""
        with self._lock:
            w = Writer()
            w.u32(len(self._tables))
            for t in self._tables.values():
                schema = t.schema
                w.str_(schema.name)
                w.u32(len(schema.columns))
                for col in schema.columns:
                    w.str_(col.name)
                    w.str_(col.kind)
                w.u32(len(schema.pk))
                for name in schema.pk:
                    w.str_(name)
                w.u64(len(t.rows))
                w.fixed(t.digest_acc.to_bytes(32, "big"), 32)
            return sha256(w.finish())

    def committed_state_hash(self) -> bytes:
        with self._lock:
            if self._tx is not None:
                raise BackendError("committed hash requested mid-block")
            if self._committed_hash is None:
                self._committed_hash = self.state_hash()
            return self._committed_hash

    # -- ABCI lifecycle ----------------------------------------------------------

    def begin_block(self, header: BlockHeader) -> int:
        with self._lock:
            expected_height = self._blocks_committed + 1
            if header.height != expected_height:
                raise BackendError(
                    f"begin_block height {header.height}, backend at {expected_height}"
                )
            if header.app_hash != self.committed_state_hash():
                raise BackendError(
                    f"header app_hash diverges from backend state at height {header.height}"
                )
            handle = self._guard.on_begin()
            self._tx = _DbTransaction(handle, header.height, header.block_time)
            return handle

    def deliver_tx(self, handle: int, tx_bytes: bytes) -> tuple[ExecStatus, ...]:
        with self._lock:
            self._guard.on_deliver(handle)
            tx = self._tx
            assert tx is not None
            try:
                bc_tx = decode_tx(tx_bytes)
            except DecodeError as exc:
                return (ExecStatus.failure(f"undecodable bc-transaction: {exc}"),)
            return tuple(self._execute_wl(tx, stmt.text) for stmt in bc_tx.statements)

    def end_block(self, handle: int) -> None:
        with self._lock:
            self._guard.on_end(handle)

    def commit(self, handle: int, statuses: Sequence[ExecStatus]) -> bytes:
        with self._lock:
            self._guard.on_commit(handle)
            tx = self._tx
            assert tx is not None
            if any(not s.ok for s in statuses):
                self._rollback(tx)
            self._tx = None
            self._blocks_committed += 1
            self._committed_hash = self.state_hash()
            return self._committed_hash

    def check_tx(self, tx_bytes: bytes) -> Admission:
        try:
            decode_tx(tx_bytes)
        except DecodeError as exc:
            return Admission.reject(f"malformed: {exc}")
        return Admission.ok()

    # -- execution ---------------------------------------------------------------

    def _execute_wl(self, tx: _DbTransaction, text: str) -> ExecStatus:
        """Run one wl-statement (a script); failed scripts leave no effects."""
        try:
            statements = sql.parse_sql(text)
        except sql.ParseError as exc:
            return ExecStatus.failure(str(exc))
        watermark = len(tx.undo)
        status = ExecStatus.success()
        for stmt in statements:
            status = self._apply_statement(tx, stmt)
            if not status.ok:
                self._undo_to(tx, watermark)
                return status
        tx.statements_applied += 1
        return status

    def execute_statement(self, stmt: sql.SqlStatement) -> ExecStatus:
        """Apply one parsed statement to the open db-transaction."""
        with self._lock:
            tx = self._tx
            if tx is None:
                raise BackendError("no open db-transaction")
            watermark = len(tx.undo)
            status = self._apply_statement(tx, stmt)
            if not status.ok:
                self._undo_to(tx, watermark)
            return status

    def _apply_statement(self, tx: _DbTransaction, stmt: sql.SqlStatement) -> ExecStatus:
        try:
            if isinstance(stmt, sql.UpdateStmt):
                return self._exec_update(tx, stmt)
            if isinstance(stmt, sql.SelectStmt):
                columns, kinds, rows = self._exec_select(stmt, snapshot=False)
                return ExecStatus.success(encode_rows(rows, kinds))
            if isinstance(stmt, sql.InsertStmt):
                return self._exec_insert(tx, stmt)
            if isinstance(stmt, sql.CallStmt):
                return self._exec_call(tx, stmt)
        except _ExecFailure as exc:
            return ExecStatus.failure(str(exc))
        raise TypeError(f"unhandled statement {type(stmt)!r}")

    def _set_row(self, tx: _DbTransaction, t: _Table, pk: PkTuple, row: Row) -> None:
        before = t.rows.get(pk)
        tx.undo.append((t.schema.name, pk, before))
        tx.first_images.setdefault((t.schema.name, pk), before)
        t.put(pk, row)

    def _undo_to(self, tx: _DbTransaction, watermark: int) -> None:
        while len(tx.undo) > watermark:
            table_name, pk, before = tx.undo.pop()
            t = self._tables[table_name]
            if before is None:
                t.remove(pk)
            else:
                t.put(pk, before)

    def _rollback(self, tx: _DbTransaction) -> None:
        self._undo_to(tx, 0)

    def _exec_update(self, tx: _DbTransaction, stmt: sql.UpdateStmt) -> ExecStatus:
        t = self._table_or_fail(stmt.table)
        schema = t.schema
        set_indices = []
        for assign in stmt.assignments:
            try:
                set_indices.append(schema.column_index(assign.column))
            except KeyError:
                raise _ExecFailure(f"unknown column {stmt.table}.{assign.column}")
        affected = 0
        for pk, row in self._match_rows(t, stmt.where):
            # all SET expressions see the pre-statement row
            new_row = list(row)
            for assign, index in zip(stmt.assignments, set_indices):
                value = self._eval_expr(t, row, assign.expr)
                new_row[index] = self._coerce_assign(schema.columns[index], value)
            new_pk = t.pk_of(tuple(new_row))
            if new_pk != pk:
                raise _ExecFailure(f"updating primary key columns of {stmt.table}")
            self._set_row(tx, t, pk, tuple(new_row))
            affected += 1
        return ExecStatus.success(encode_affected(affected))

    def _exec_insert(self, tx: _DbTransaction, stmt: sql.InsertStmt) -> ExecStatus:
        t = self._table_or_fail(stmt.table)
        schema = t.schema
        if len(stmt.values) != len(schema.columns):
            raise _ExecFailure(
                f"{stmt.table} expects {len(schema.columns)} values, got {len(stmt.values)}"
            )
        row = tuple(
            self._coerce_assign(col, self._literal_value(lit))
            for col, lit in zip(schema.columns, stmt.values)
        )
        pk = t.pk_of(row)
        if pk in t.rows:
            raise _ExecFailure(f"duplicate key {pk} in {stmt.table}")
        self._set_row(tx, t, pk, row)
        return ExecStatus.success(encode_affected(1))

    def _exec_call(self, tx: _DbTransaction, stmt: sql.CallStmt) -> ExecStatus:
        proc = self._procedures.get(stmt.proc)
        if proc is None:
            raise _ExecFailure(f"unknown procedure {stmt.proc}")
        if len(stmt.args) != proc.arity:
            raise _ExecFailure(
                f"{stmt.proc} expects {proc.arity} arguments, got {len(stmt.args)}"
            )
        ctx = ProcedureContext(self, tx, stmt.args)
        watermark = len(tx.undo)
        try:
            proc.fn(ctx)
        except ProcedureFailure as exc:
            self._undo_to(tx, watermark)
            raise _ExecFailure(f"{stmt.proc}: {exc}")
        if ctx.result_rows is not None:
            return ExecStatus.success(encode_rows(ctx.result_rows, ctx.result_kinds))
        return ExecStatus.success(encode_affected(ctx.rows_touched))

    # -- expression and predicate evaluation ------------------------------------

    def _table_or_fail(self, name: str) -> _Table:
        t = self._tables.get(name)
        if t is None:
            raise _ExecFailure(f"unknown table {name}")
        return t

    def _literal_value(self, lit: sql.Literal) -> tuple[str, object]:
        kind = {"int": "int", "decimal": "decimal", "string": "string"}[lit.kind]
        return kind, lit.value

    def _eval_expr(self, t: _Table, row: Row, expr: sql.Expr) -> tuple[str, object]:
        """Returns (kind, value) where kind is 'int', 'decimal', or 'string'."""
        values: list[tuple[int, str, object]] = []
        for sign, term in expr.terms:
            if isinstance(term, sql.ColumnRef):
                try:
                    index = t.schema.column_index(term.name)
                except KeyError:
                    raise _ExecFailure(f"unknown column {t.schema.name}.{term.name}")
                col = t.schema.columns[index]
                kind = "int" if col.kind == "int64" else col.kind
                values.append((sign, kind, row[index]))
            else:
                kind, value = self._literal_value(term)
                values.append((sign, kind, value))
        if len(values) == 1 and values[0][1] == "string":
            sign, _, value = values[0]
            if sign < 0:
                raise _ExecFailure("cannot negate a string")
            return "string", value
        if any(kind == "string" for _, kind, _ in values):
            raise _ExecFailure("string values cannot appear in arithmetic")
        result_kind = "decimal" if any(k == "decimal" for _, k, _ in values) else "int"
        total = 0
        for sign, kind, value in values:
            scaled = int(value)  # type: ignore[arg-type]
            if result_kind == "decimal" and kind == "int":
                scaled *= sql.DECIMAL_SCALE
            total += sign * scaled
        return result_kind, total

    def _coerce_assign(self, col: Column, value: tuple[str, object]) -> object:
        kind, raw = value
        if col.kind == "string":
            if kind != "string":
                raise _ExecFailure(f"{col.name} expects a string")
            return raw
        if kind == "string":
            raise _ExecFailure(f"{col.name} expects a number")
        number = int(raw)  # type: ignore[arg-type]
        if col.kind == "decimal" and kind == "int":
            number *= sql.DECIMAL_SCALE
        elif col.kind == "int64" and kind == "decimal":
            raise _ExecFailure(f"{col.name} is int64; decimal value would lose precision")
        if not I64_MIN <= number <= I64_MAX:
            raise _ExecFailure(f"{col.name} value out of int64 range")
        return number

    def _coerce_condition(self, col: Column, lit: sql.Literal) -> object:
        return self._coerce_assign(col, self._literal_value(lit))

    def _match_rows(
        self, t: _Table, where: tuple[sql.Condition, ...], snapshot_tx: _DbTransaction | None = None
    ) -> list[tuple[PkTuple, Row]]:
        schema = t.schema
        tests: list[tuple[int, object]] = []
        by_column: dict[str, object] = {}
        for cond in where:
            try:
                index = schema.column_index(cond.column)
            except KeyError:
                raise _ExecFailure(f"unknown column {schema.name}.{cond.column}")
            value = self._coerce_condition(schema.columns[index], cond.value)
            tests.append((index, value))
            by_column[cond.column] = value

        if set(by_column) == set(schema.pk):  # point lookup on the full key
            pk = tuple(by_column[name] for name in schema.pk)
            if snapshot_tx is not None:
                row = self._snapshot_get(t, pk)
            else:
                row = t.rows.get(pk)
            if row is None:
                return []
            return [(pk, row)]

        rows_view = self._rows_view(t, snapshot_tx)
        matches = [
            (pk, row)
            for pk, row in rows_view.items()
            if all(row[i] == v for i, v in tests)
        ]
        matches.sort(key=lambda item: item[0])  # deterministic scan order
        return matches

    def _rows_view(self, t: _Table, snapshot_tx: _DbTransaction | None) -> dict[PkTuple, Row]:
        """Current rows, or the committed image when reading around an open block."""
        if snapshot_tx is None:
            return t.rows
        name = t.schema.name
        view: dict[PkTuple, Row] = {}
        for pk, row in t.rows.items():
            image = snapshot_tx.first_images.get((name, pk), row)
            if image is not None:
                view[pk] = image
        return view

    def _snapshot_get(self, t: _Table, pk: PkTuple) -> Row | None:
        """Committed value of one key, even while a block is in flight."""
        tx = self._tx
        if tx is not None:
            key = (t.schema.name, pk)
            if key in tx.first_images:
                return tx.first_images[key]
        return t.rows.get(pk)

    def _snapshot_count(self, t: _Table) -> int:
        tx = self._tx
        if tx is None:
            return len(t.rows)
        name = t.schema.name
        inserted = sum(
            1
            for (table_name, _), image in tx.first_images.items()
            if table_name == name and image is None
        )
        return len(t.rows) - inserted

    def _exec_select(
        self, stmt: sql.SelectStmt, snapshot: bool
    ) -> tuple[tuple[str, ...], tuple[str, ...], tuple[tuple[object, ...], ...]]:
        t = self._table_or_fail(stmt.table)
        schema = t.schema
        if stmt.columns is None:
            indices = tuple(range(len(schema.columns)))
            names = schema.column_names
        else:
            indices = []
            for name in stmt.columns:
                try:
                    indices.append(schema.column_index(name))
                except KeyError:
                    raise _ExecFailure(f"unknown column {stmt.table}.{name}")
            indices = tuple(indices)
            names = stmt.columns
        kinds = tuple(schema.columns[i].kind for i in indices)
        snapshot_tx = self._tx if snapshot else None
        matches = self._match_rows(t, stmt.where, snapshot_tx=snapshot_tx)
        rows = tuple(tuple(row[i] for i in indices) for _, row in matches)
        return names, kinds, rows

    # -- read-only query path ------------------------------------------------------

    def query(self, sql_text: str) -> QueryResult:
        try:
            statements = sql.parse_sql(sql_text)
        except sql.ParseError as exc:
            return QueryResult(ok=False, reason=str(exc))
        if len(statements) != 1:
            return QueryResult(ok=False, reason="query must be a single statement")
        stmt = statements[0]
        with self._lock:
            try:
                if isinstance(stmt, sql.SelectStmt):
                    columns, kinds, rows = self._exec_select(stmt, snapshot=True)
                    return QueryResult(ok=True, columns=columns, rows=rows)
                if isinstance(stmt, sql.CallStmt):
                    return self._query_call(stmt)
            except _ExecFailure as exc:
                return QueryResult(ok=False, reason=str(exc))
        raise NotReadOnly(f"{type(stmt).__name__} is not a read-only statement")

    def _query_call(self, stmt: sql.CallStmt) -> QueryResult:
        proc = self._procedures.get(stmt.proc)
        if proc is None:
            return QueryResult(ok=False, reason=f"unknown procedure {stmt.proc}")
        if not proc.read_only:
            raise NotReadOnly(f"procedure {stmt.proc} is not read-only")
        if len(stmt.args) != proc.arity:
            return QueryResult(
                ok=False,
                reason=f"{stmt.proc} expects {proc.arity} arguments, got {len(stmt.args)}",
            )
        ctx = ProcedureContext(self, None, stmt.args, read_only=True)
        try:
            proc.fn(ctx)
        except ProcedureFailure as exc:
            return QueryResult(ok=False, reason=f"{stmt.proc}: {exc}")
        if ctx.result_rows is None:
            return QueryResult(ok=True)
        return QueryResult(ok=True, columns=ctx.result_columns, rows=tuple(ctx.result_rows))


class _ExecFailure(Exception):
    """Internal: converted into a failed ExecStatus at the statement boundary."""


class ProcedureContext:
    """What a stored procedure sees: typed args, row access, block time."""

    def __init__(
        self,
        engine: RelationalEngine,
        tx: _DbTransaction | None,
        args: tuple[sql.Literal, ...],
        read_only: bool = False,
    ) -> None:
        self._engine = engine
        self._tx = tx
        self._args = args
        self._read_only = read_only
        self.rows_touched = 0
        self.result_columns: tuple[str, ...] = ()
        self.result_kinds: tuple[str, ...] = ()
        self.result_rows: list[tuple[object, ...]] | None = None

    @property
    def block_time(self) -> int:
        if self._tx is None:
            raise ProcedureFailure("block time is unavailable outside a block")
        return self._tx.block_time

    def int_arg(self, i: int) -> int:
        lit = self._args[i]
        if lit.kind != "int":
            raise ProcedureFailure(f"argument {i} must be an integer")
        return int(lit.value)  # type: ignore[arg-type]

    def money_arg(self, i: int) -> int:
        """Scaled decimal; plain integers are taken as whole currency units."""
        lit = self._args[i]
        if lit.kind == "decimal":
            return int(lit.value)  # type: ignore[arg-type]
        if lit.kind == "int":
            return int(lit.value) * sql.DECIMAL_SCALE  # type: ignore[arg-type]
        raise ProcedureFailure(f"argument {i} must be a number")

    def str_arg(self, i: int) -> str:
        lit = self._args[i]
        if lit.kind != "string":
            raise ProcedureFailure(f"argument {i} must be a string")
        return str(lit.value)

    def get(self, table: str, pk: PkTuple) -> Row | None:
        t = self._engine._require_table(table)
        if self._read_only:
            return self._engine._snapshot_get(t, pk)
        return t.rows.get(pk)

    def require(self, table: str, pk: PkTuple) -> Row:
        row = self.get(table, pk)
        if row is None:
            raise ProcedureFailure(f"no row {pk} in {table}")
        return row

    def update(self, table: str, pk: PkTuple, changes: dict[str, object]) -> None:
        if self._read_only:
            raise ProcedureFailure("read-only procedure attempted an update")
        assert self._tx is not None
        t = self._engine._require_table(table)
        row = t.rows.get(pk)
        if row is None:
            raise ProcedureFailure(f"no row {pk} in {table}")
        new_row = list(row)
        for name, value in changes.items():
            new_row[t.schema.column_index(name)] = value
        self._engine._check_row(t, tuple(new_row))
        if t.pk_of(tuple(new_row)) != pk:
            raise ProcedureFailure(f"update would move primary key in {table}")
        self._engine._set_row(self._tx, t, pk, tuple(new_row))
        self.rows_touched += 1

    def insert(self, table: str, row: Row) -> None:
        if self._read_only:
            raise ProcedureFailure("read-only procedure attempted an insert")
        assert self._tx is not None
        t = self._engine._require_table(table)
        self._engine._check_row(t, row)
        pk = t.pk_of(row)
        if pk in t.rows:
            raise ProcedureFailure(f"duplicate key {pk} in {table}")
        self._engine._set_row(self._tx, t, pk, row)
        self.rows_touched += 1

    def row_count(self, table: str) -> int:
        t = self._engine._require_table(table)
        if self._read_only:
            return self._engine._snapshot_count(t)
        return len(t.rows)

    def set_result(
        self,
        columns: Sequence[str],
        kinds: Sequence[str],
        rows: Sequence[tuple[object, ...]],
    ) -> None:
        self.result_columns = tuple(columns)
        self.result_kinds = tuple(kinds)
        self.result_rows = list(rows)

    def fail(self, reason: str) -> None:
        raise ProcedureFailure(reason)


def parse_schema_text(text: str) -> list[TableSchema]:
    """Parse the bootstrap schema format: 'table NAME' then 'COLUMN TYPE [pk]' lines."""
    tables: list[TableSchema] = []
    name: str | None = None
    columns: list[Column] = []
    pk: list[str] = []

    def flush() -> None:
        nonlocal name, columns, pk
        if name is not None:
            tables.append(TableSchema(name=name, columns=tuple(columns), pk=tuple(pk)))
        name, columns, pk = None, [], []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "table":
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'table NAME'")
            flush()
            name = parts[1]
        else:
            if name is None:
                raise ValueError(f"line {lineno}: column before any 'table' line")
            if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] != "pk"):
                raise ValueError(f"line {lineno}: expected 'COLUMN TYPE [pk]'")
            columns.append(Column(name=parts[0], kind=parts[1]))
            if len(parts) == 3:
                pk.append(parts[0])
    flush()
    return tables
