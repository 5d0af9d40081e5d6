"""The application-blockchain interface between consensus and the backend.

Every committed block is driven through the backend in a fixed order:
``begin_block``, one ``deliver_tx`` per bc-transaction, ``end_block``,
``commit``. ``check_tx`` guards mempool admission and ``query`` serves
read-only statements from the last committed state, bypassing the block
lifecycle entirely.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field
from typing import Sequence

from .chain import BlockHeader
from .codec import Reader, Writer


class AbciContractViolation(Exception):
    """Lifecycle calls arrived out of order."""


class BackendError(Exception):
    """The backend cannot continue; fatal for the node."""


@dataclass(frozen=True)
class Admission:
    accepted: bool
    reason: str = ""

    @classmethod
    def ok(cls) -> "Admission":
        return cls(accepted=True)

    @classmethod
    def reject(cls, reason: str) -> "Admission":
        return cls(accepted=False, reason=reason)


@dataclass(frozen=True)
class ExecStatus:
    ok: bool
    reason: str = ""
    payload: bytes = b""

    def __post_init__(self) -> None:
        if not self.ok and not self.reason:
            raise ValueError("failed status must carry a reason")

    @classmethod
    def success(cls, payload: bytes = b"") -> "ExecStatus":
        return cls(ok=True, payload=payload)

    @classmethod
    def failure(cls, reason: str) -> "ExecStatus":
        return cls(ok=False, reason=reason)


# Query rows are tuples of typed values: int, scaled decimal, or string.
QueryRow = tuple[object, ...]


@dataclass(frozen=True)
class QueryResult:
    ok: bool
    reason: str = ""
    columns: tuple[str, ...] = ()
    rows: tuple[QueryRow, ...] = ()


class AbciBackend(abc.ABC):
    """Contract every backend must satisfy.

    Calls for one block arrive strictly as begin, deliver*, end, commit;
    blocks never interleave. Queries may arrive at any time and must be
    answered from the last committed state.
    """

    @abc.abstractmethod
    def begin_block(self, header: BlockHeader) -> int:
        """Open the db-transaction for this block; returns its handle."""

    @abc.abstractmethod
    def deliver_tx(self, handle: int, tx_bytes: bytes) -> tuple[ExecStatus, ...]:
        """Execute one bc-transaction; one status per wl-statement, in order."""

    @abc.abstractmethod
    def end_block(self, handle: int) -> None:
        """Signal that all transactions of the block have been delivered."""

    @abc.abstractmethod
    def commit(self, handle: int, statuses: Sequence[ExecStatus]) -> bytes:
        """Commit if every status is ok, otherwise roll the whole block back.

        Returns the state hash after this block either way.
        """

    @abc.abstractmethod
    def check_tx(self, tx_bytes: bytes) -> Admission:
        """Admission check: canonical decoding only, no SQL validation."""

    @abc.abstractmethod
    def query(self, sql_text: str) -> QueryResult:
        """Answer a read-only statement from the last committed state."""

    @abc.abstractmethod
    def committed_state_hash(self) -> bytes:
        """Hash of the last committed state (the genesis hash before any block)."""

    def close(self) -> None:
        """Release backend resources; default is a no-op."""


class LifecycleGuard:
    """Tracks the begin/deliver/end/commit sequence and rejects violations."""

    _IDLE, _OPEN, _ENDED = range(3)

    def __init__(self) -> None:
        self._state = self._IDLE
        self._handle = 0

    @property
    def open_handle(self) -> int:
        return self._handle

    def on_begin(self) -> int:
        if self._state != self._IDLE:
            raise AbciContractViolation("begin_block while a block is in flight")
        self._state = self._OPEN
        self._handle += 1
        return self._handle

    def _check_handle(self, handle: int, call: str) -> None:
        if handle != self._handle:
            raise AbciContractViolation(f"{call} with stale handle {handle}")

    def on_deliver(self, handle: int) -> None:
        if self._state != self._OPEN:
            raise AbciContractViolation("deliver_tx outside an open block")
        self._check_handle(handle, "deliver_tx")

    def on_end(self, handle: int) -> None:
        if self._state != self._OPEN:
            raise AbciContractViolation("end_block outside an open block")
        self._check_handle(handle, "end_block")
        self._state = self._ENDED

    def on_commit(self, handle: int) -> None:
        if self._state != self._ENDED:
            raise AbciContractViolation("commit before end_block")
        self._check_handle(handle, "commit")
        self._state = self._IDLE


VALUE_TAG_INT = 1
VALUE_TAG_DECIMAL = 2
VALUE_TAG_STRING = 3


def encode_value(w: Writer, value: object, kind: str) -> None:
    if kind == "int64":
        w.u8(VALUE_TAG_INT)
        w.i64(int(value))  # type: ignore[arg-type]
    elif kind == "decimal":
        w.u8(VALUE_TAG_DECIMAL)
        w.i64(int(value))  # type: ignore[arg-type]
    elif kind == "string":
        w.u8(VALUE_TAG_STRING)
        w.str_(str(value))
    else:
        raise ValueError(f"unknown value kind {kind!r}")


def decode_value(r: Reader) -> object:
    tag = r.u8()
    if tag in (VALUE_TAG_INT, VALUE_TAG_DECIMAL):
        return r.i64()
    if tag == VALUE_TAG_STRING:
        return r.str_()
    raise ValueError(f"unknown value tag {tag}")


def encode_rows(rows: Sequence[QueryRow], kinds: Sequence[str]) -> bytes:
    w = Writer()
    w.u32(len(rows))
    for row in rows:
        w.u32(len(row))
        for value, kind in zip(row, kinds):
            encode_value(w, value, kind)
    return w.finish()


def decode_rows(data: bytes) -> tuple[QueryRow, ...]:
    r = Reader(data)
    n_rows = r.u32()
    rows = []
    for _ in range(n_rows):
        n_values = r.u32()
        rows.append(tuple(decode_value(r) for _ in range(n_values)))
    r.expect_end()
    return tuple(rows)


def encode_affected(count: int) -> bytes:
    w = Writer()
    w.u64(count)
    return w.finish()


def decode_affected(data: bytes) -> int:
    r = Reader(data)
    count = r.u64()
    r.expect_end()
    return count


def encode_status(w: Writer, status: ExecStatus) -> None:
    w.u8(1 if status.ok else 0)
    w.str_(status.reason)
    w.bytes_(status.payload)


def decode_status(r: Reader) -> ExecStatus:
    ok = r.u8() == 1
    reason = r.str_()
    payload = r.bytes_()
    return ExecStatus(ok=ok, reason=reason, payload=payload)


def run_block(
    backend: AbciBackend,
    header: BlockHeader,
    txs_bytes: Sequence[bytes],
) -> tuple[bytes, tuple[tuple[ExecStatus, ...], ...]]:
    """Drive one block through the full ABCI sequence.

    Returns the post-block app hash and per-transaction status tuples.
    """
    handle = backend.begin_block(header)
    per_tx: list[tuple[ExecStatus, ...]] = []
    for raw in txs_bytes:
        per_tx.append(backend.deliver_tx(handle, raw))
    backend.end_block(handle)
    flat = [status for group in per_tx for status in group]
    app_hash = backend.commit(handle, flat)
    return app_hash, tuple(per_tx)
