"""Chain data types, canonical serialization, hashing, and the append-only ledger.

A block carries an ordered batch of bc-transactions; each bc-transaction
carries one or more workload statements. Blocks are hashed over their
canonical encoding and chained through ``prev_block_hash``.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, BinaryIO, Iterator, Sequence

from .codec import DecodeError, Reader, Writer

if TYPE_CHECKING:
    from .abci import ExecStatus

DIGEST_SIZE = 32
ZERO_HASH = b"\x00" * DIGEST_SIZE

DEFAULT_MAX_BLOCK_BYTES = 21 * 1024 * 1024


class ChainMismatch(Exception):
    """A block does not extend the current tip."""


class NotFound(LookupError):
    """Requested height is not in the ledger."""


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


@dataclass(frozen=True)
class WlStatement:
    """One workload transaction: a SQL script or a CALL invocation."""

    text: str
    client_id: str
    seq_no: int

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("statement text must be non-empty")
        if self.seq_no < 0:
            raise ValueError("seq_no must be non-negative")

    def encode_into(self, w: Writer) -> None:
        w.str_(self.text)
        w.str_(self.client_id)
        w.u64(self.seq_no)

    @classmethod
    def decode_from(cls, r: Reader) -> "WlStatement":
        text = r.str_()
        client_id = r.str_()
        seq_no = r.u64()
        if not text:
            raise DecodeError("statement text must be non-empty")
        return cls(text=text, client_id=client_id, seq_no=seq_no)


@dataclass(frozen=True)
class BcTransaction:
    """The unit submitted to the network; batches one or more statements."""

    statements: tuple[WlStatement, ...]
    nonce: int = 0

    def __post_init__(self) -> None:
        if len(self.statements) < 1:
            raise ValueError("a bc-transaction must carry at least one statement")


def encode_tx(tx: BcTransaction) -> bytes:
    w = Writer()
    w.u32(len(tx.statements))
    for stmt in tx.statements:
        stmt.encode_into(w)
    w.i64(tx.nonce)
    return w.finish()


def decode_tx(data: bytes) -> BcTransaction:
    r = Reader(data)
    tx = _decode_tx_from(r)
    r.expect_end()
    return tx


def _decode_tx_from(r: Reader) -> BcTransaction:
    count = r.u32()
    if count < 1:
        raise DecodeError("a bc-transaction must carry at least one statement")
    statements = tuple(WlStatement.decode_from(r) for _ in range(count))
    nonce = r.i64()
    return BcTransaction(statements=statements, nonce=nonce)


def tx_hash(tx: BcTransaction) -> bytes:
    return sha256(encode_tx(tx))


@dataclass(frozen=True)
class BlockHeader:
    height: int
    prev_block_hash: bytes
    app_hash: bytes
    proposer_id: str
    block_time: int  # milliseconds since genesis, assigned by the proposer
    num_txs: int

    def __post_init__(self) -> None:
        if self.height < 1:
            raise ValueError("height must be positive")
        if len(self.prev_block_hash) != DIGEST_SIZE or len(self.app_hash) != DIGEST_SIZE:
            raise ValueError("digests must be 32 bytes")

    def encode_into(self, w: Writer) -> None:
        w.u64(self.height)
        w.fixed(self.prev_block_hash, DIGEST_SIZE)
        w.fixed(self.app_hash, DIGEST_SIZE)
        w.str_(self.proposer_id)
        w.u64(self.block_time)
        w.u32(self.num_txs)

    @classmethod
    def decode_from(cls, r: Reader) -> "BlockHeader":
        return cls(
            height=r.u64(),
            prev_block_hash=r.fixed(DIGEST_SIZE),
            app_hash=r.fixed(DIGEST_SIZE),
            proposer_id=r.str_(),
            block_time=r.u64(),
            num_txs=r.u32(),
        )


@dataclass(frozen=True)
class Block:
    header: BlockHeader
    txs: tuple[BcTransaction, ...]

    def __post_init__(self) -> None:
        if self.header.num_txs != len(self.txs):
            raise ValueError("header.num_txs does not match transaction count")


def encode_block(block: Block) -> bytes:
    w = Writer()
    block.header.encode_into(w)
    w.u32(len(block.txs))
    for tx in block.txs:
        w.bytes_(encode_tx(tx))
    return w.finish()


def decode_block(data: bytes) -> Block:
    r = Reader(data)
    block = _decode_block_from(r)
    r.expect_end()
    return block


def _decode_block_from(r: Reader) -> Block:
    header = BlockHeader.decode_from(r)
    count = r.u32()
    txs = tuple(decode_tx(r.bytes_()) for _ in range(count))
    return Block(header=header, txs=txs)


def hash_block(block: Block) -> bytes:
    return sha256(encode_block(block))


@dataclass
class _LedgerEntry:
    block: Block
    block_id: bytes
    statuses: "tuple[tuple[ExecStatus, ...], ...]"  # one tuple per tx, one status per statement


class Ledger:
    """Append-only per-node block store.

    Single writer (the node's consensus loop), many readers. Readers only
    ever observe fully appended blocks.
    """

    def __init__(self) -> None:
        self._entries: list[_LedgerEntry] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def height(self) -> int:
        return len(self._entries)

    def tip_hash(self) -> bytes:
        entries = self._entries
        return entries[-1].block_id if entries else ZERO_HASH

    def append_block(
        self, block: Block, statuses: Sequence[Sequence["ExecStatus"]]
    ) -> None:
        with self._lock:
            expected_height = len(self._entries) + 1
            if block.header.height != expected_height:
                raise ChainMismatch(
                    f"expected height {expected_height}, got {block.header.height}"
                )
            tip = self._entries[-1].block_id if self._entries else ZERO_HASH
            if block.header.prev_block_hash != tip:
                raise ChainMismatch(
                    f"prev_block_hash does not match tip at height {expected_height}"
                )
            entry = _LedgerEntry(
                block=block,
                block_id=hash_block(block),
                statuses=tuple(tuple(per_tx) for per_tx in statuses),
            )
            self._entries.append(entry)

    def get_block(self, height: int) -> tuple[Block, "tuple[tuple[ExecStatus, ...], ...]"]:
        if not 1 <= height <= len(self._entries):
            raise NotFound(f"no block at height {height} (tip is {len(self._entries)})")
        entry = self._entries[height - 1]
        return entry.block, entry.statuses

    def block_id(self, height: int) -> bytes:
        if not 1 <= height <= len(self._entries):
            raise NotFound(f"no block at height {height} (tip is {len(self._entries)})")
        return self._entries[height - 1].block_id

    def blocks(self) -> Iterator[Block]:
        for entry in list(self._entries):
            yield entry.block

    def verify_chain(self) -> bool:
        """Re-hash every stored block and check the whole chain links up."""
        prev = ZERO_HASH
        for expected_height, entry in enumerate(list(self._entries), start=1):
            header = entry.block.header
            if header.height != expected_height or header.prev_block_hash != prev:
                return False
            if hash_block(entry.block) != entry.block_id:
                return False
            prev = entry.block_id
        return True

    def chain_digest(self) -> bytes:
        """Digest of the full exported chain; equal digests mean byte-equal ledgers."""
        return sha256(self.export_bytes())

    def export_bytes(self) -> bytes:
        out = Writer()
        for entry in list(self._entries):
            out.bytes_(encode_block(entry.block))
        return out.finish()

    def export(self, fh: BinaryIO) -> None:
        fh.write(self.export_bytes())


def read_ledger_file(data: bytes) -> list[Block]:
    """Parse a ledger export (length-prefixed canonical block encodings)."""
    r = Reader(data)
    blocks = []
    while not r.at_end():
        blocks.append(decode_block(r.bytes_()))
    return blocks
