"""Symmetrization transforms over table-driven codes.

All transforms are mechanical re-wirings of an existing code: they permute
server or message roles, or space-share several such variants over a longer
message, with the combined key drawn independently per block.  None of them
change the rate, and the output of every transform is a full code the
verifier can re-check from scratch.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

from .analysis import DEFAULT_CAP, _require_within_cap
from .groups import AnswerVector, CodeParams, Message
from .model import AnswerFunction, ComponentTable, DecomposableCode, digits_label


@dataclass(frozen=True, eq=False)
class SpaceShareCode(DecomposableCode):
    """A product code: each block handles its own slice of a longer message.

    ``blocks`` records the constituent codes with a short descriptor of how
    each was derived; equality stays structural, like the base class.
    """

    blocks: tuple[tuple[DecomposableCode, str], ...] = ()


def _check_permutation(perm, size: int) -> tuple[int, ...]:
    perm = tuple(perm)
    if sorted(perm) != list(range(size)):
        raise ValueError(f"{perm} is not a permutation of 0..{size - 1}")
    return perm


def _inverse(perm: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(perm)
    for i, p in enumerate(perm):
        inv[p] = i
    return tuple(inv)


def server_permute(code: DecomposableCode, perm) -> DecomposableCode:
    """Relabel servers: new server n plays old server perm[n]."""
    N = code.params.n_servers
    perm = _check_permutation(perm, N)
    inv = _inverse(perm)
    varieties = tuple(code.varieties[perm[n]] for n in range(N))
    query_map = {
        entry: tuple(per_server[perm[n]] for n in range(N))
        for entry, per_server in code.query_map.items()
    }
    base_reconstruct = code.reconstruct
    reconstruct: Optional[Callable] = None
    if base_reconstruct is not None:

        def reconstruct(k: int, f: int, answers) -> Message:
            return base_reconstruct(k, f, tuple(answers[inv[j]] for j in range(N)))

    return DecomposableCode(code.params, varieties, code.keys, query_map, reconstruct)


def message_permute(code: DecomposableCode, perm) -> DecomposableCode:
    """Relabel messages: new message t plays old message inv[t].

    Component tables move with their message; requesting t in the new code
    runs the old code's machinery for request inv[t].
    """
    K = code.params.n_messages
    perm = _check_permutation(perm, K)
    inv = _inverse(perm)
    varieties = tuple(
        tuple(
            AnswerFunction(
                v.label,
                tuple(tuple(row[inv[t]] for t in range(K)) for row in v.tables),
            )
            for v in per_server
        )
        for per_server in code.varieties
    )
    query_map = {
        (k, f): code.query_map[(inv[k], f)]
        for k in range(K)
        for f in range(len(code.keys))
    }
    base_reconstruct = code.reconstruct
    reconstruct: Optional[Callable] = None
    if base_reconstruct is not None:

        def reconstruct(k: int, f: int, answers) -> Message:
            return base_reconstruct(inv[k], f, answers)

    return DecomposableCode(code.params, varieties, code.keys, query_map, reconstruct)


def _lift_table(
    table: ComponentTable, prefix_len: int, total_len: int
) -> ComponentTable:
    """View a block's table as a table over the combined message slice."""
    m = table.msg_modulus
    block_size = m**table.msg_len
    step = m ** (total_len - prefix_len - table.msg_len)
    values = tuple(
        table.values[(r // step) % block_size] for r in range(m**total_len)
    )
    return ComponentTable(values, m, total_len, table.ans_modulus)


def space_share(
    blocks, labels=None, cap: int = DEFAULT_CAP
) -> SpaceShareCode:
    """Run several codes side by side over disjoint slices of one message.

    All blocks must agree on servers, message count, and both alphabets.
    The combined key picks one block key per block independently; queries,
    answers, and reconstruction are per-block concatenations.
    """
    blocks = tuple(blocks)
    if not blocks:
        raise ValueError("space sharing needs at least one block")
    if labels is None:
        labels = tuple(f"block{i}" for i in range(len(blocks)))
    labels = tuple(labels)
    if len(labels) != len(blocks):
        raise ValueError("need exactly one label per block")
    first = blocks[0].params
    for b in blocks[1:]:
        p = b.params
        if (
            p.n_servers != first.n_servers
            or p.n_messages != first.n_messages
            or p.msg_modulus != first.msg_modulus
            or p.ans_modulus != first.ans_modulus
        ):
            raise ValueError("blocks must agree on servers, messages, and alphabets")

    N, K, m, y = first.n_servers, first.n_messages, first.msg_modulus, first.ans_modulus
    total_len = sum(b.params.msg_len for b in blocks)
    prefixes = tuple(
        sum(b.params.msg_len for b in blocks[:i]) for i in range(len(blocks))
    )

    key_counts = [len(b.keys) for b in blocks]
    keys_total = math.prod(key_counts)
    table_size = m**total_len
    entries = 0
    for n in range(N):
        q_counts = [b.query_count(n) for b in blocks]
        for i, b in enumerate(blocks):
            sym_sum = sum(b.answer_length(n, qi) for qi in range(q_counts[i]))
            entries += sym_sum * math.prod(q_counts) // q_counts[i] * K
    _require_within_cap(max(keys_total, table_size, entries * table_size), cap)

    lifted: dict[tuple[ComponentTable, int], ComponentTable] = {}

    def lift(table: ComponentTable, block_index: int) -> ComponentTable:
        memo_key = (table, block_index)
        if memo_key not in lifted:
            lifted[memo_key] = _lift_table(table, prefixes[block_index], total_len)
        return lifted[memo_key]

    varieties = []
    index_of: list[dict[tuple[int, ...], int]] = []
    for n in range(N):
        per_server = []
        lookup: dict[tuple[int, ...], int] = {}
        for qi, combo in enumerate(
            itertools.product(*(range(b.query_count(n)) for b in blocks))
        ):
            lookup[combo] = qi
            rows = []
            for i, b in enumerate(blocks):
                for row in b.varieties[n][combo[i]].tables:
                    rows.append(tuple(lift(row[k], i) for k in range(K)))
            label = "|".join(b.query_label(n, combo[i]) for i, b in enumerate(blocks))
            per_server.append(AnswerFunction(label, tuple(rows)))
        varieties.append(tuple(per_server))
        index_of.append(lookup)

    key_combos = list(itertools.product(*(range(c) for c in key_counts)))
    keys = tuple(
        "|".join(blocks[i].keys[fc[i]] for i in range(len(blocks)))
        for fc in key_combos
    )

    query_map: dict[tuple[int, int], tuple[int, ...]] = {}
    for k in range(K):
        for fi, fc in enumerate(key_combos):
            query_map[(k, fi)] = tuple(
                index_of[n][
                    tuple(blocks[i].query_map[(k, fc[i])][n] for i in range(len(blocks)))
                ]
                for n in range(N)
            )

    reconstruct: Optional[Callable] = None
    if all(b.reconstruct is not None for b in blocks):

        def reconstruct(k: int, fi: int, answers) -> Message:
            fc = key_combos[fi]
            symbols = []
            # per-server split points follow the block order of the combo
            combos = [
                tuple(blocks[i].query_map[(k, fc[i])][n] for i in range(len(blocks)))
                for n in range(N)
            ]
            offsets = [0] * N
            for i, b in enumerate(blocks):
                block_answers = []
                for n in range(N):
                    length = b.answer_length(n, combos[n][i])
                    block_answers.append(
                        AnswerVector(
                            answers[n].symbols[offsets[n] : offsets[n] + length]
                        )
                    )
                    offsets[n] += length
                part = b.reconstruct(k, fc[i], tuple(block_answers))
                symbols.extend(part.symbols)
            return Message(tuple(symbols))

    params = CodeParams(N, K, total_len, m, y)
    return SpaceShareCode(
        params,
        tuple(varieties),
        keys,
        query_map,
        reconstruct,
        tuple(zip(blocks, labels)),
    )


def server_symmetrize(code: DecomposableCode, cap: int = DEFAULT_CAP) -> SpaceShareCode:
    """Space-share the N cyclic server rotations of a code.

    Every server ends up with the same query count (the product of all the
    original counts) and the same expected answer length.
    """
    N = code.params.n_servers
    blocks = []
    labels = []
    for i in range(N):
        shift = tuple((n + i) % N for n in range(N))
        blocks.append(server_permute(code, shift))
        labels.append(f"shift{i}")
    return space_share(blocks, labels, cap)


def message_symmetrize(code: DecomposableCode, cap: int = DEFAULT_CAP) -> SpaceShareCode:
    """Space-share all K! message relabelings of a code."""
    K = code.params.n_messages
    _require_within_cap(math.factorial(K), cap)
    blocks = []
    labels = []
    for perm in itertools.permutations(range(K)):
        blocks.append(message_permute(code, perm))
        labels.append(f"perm{digits_label(perm)}")
    return space_share(blocks, labels, cap)


def variety_symmetrize(code: DecomposableCode, cap: int = DEFAULT_CAP) -> DecomposableCode:
    """Equalize per-key answer lengths by running one block per base key.

    The new key orders the base keys uniformly at random (|F|! keys); block i
    encodes slice i of the longer message under base key order[i].  Each
    server then answers every base query a fixed number of times -- however
    the base keys are ordered -- so all its answer lengths coincide.

    Refuses bases whose query distribution depends on the request (the
    block multiset would leak the request).
    """
    p = code.params
    B = len(code.keys)
    K = p.n_messages

    base_seq = []
    for n in range(p.n_servers):
        composition = Counter(code.query_map[(0, f)][n] for f in range(B))
        for k in range(1, K):
            other = Counter(code.query_map[(k, f)][n] for f in range(B))
            if other != composition:
                raise ValueError(
                    f"server {n} query composition depends on the request; "
                    "variety symmetrization needs a private base code"
                )
        base_seq.append(tuple(sorted(composition.elements())))

    fact = math.factorial(B)
    total_len = B * p.msg_len
    table_size = p.msg_modulus**total_len
    entries = 0
    for n in range(p.n_servers):
        composition = Counter(base_seq[n])
        t_n = fact // math.prod(math.factorial(c) for c in composition.values())
        ell_n = sum(c * code.answer_length(n, qi) for qi, c in composition.items())
        entries += t_n * ell_n * K * table_size
    _require_within_cap(max(fact, table_size, entries), cap)

    lifted: dict[tuple[ComponentTable, int], ComponentTable] = {}

    def lift(table: ComponentTable, block_index: int) -> ComponentTable:
        memo_key = (table, block_index)
        if memo_key not in lifted:
            lifted[memo_key] = _lift_table(
                table, block_index * p.msg_len, total_len
            )
        return lifted[memo_key]

    varieties = []
    index_of: list[dict[tuple[int, ...], int]] = []
    for n in range(p.n_servers):
        per_server = []
        lookup: dict[tuple[int, ...], int] = {}
        for qi, seq in enumerate(sorted(set(itertools.permutations(base_seq[n])))):
            lookup[seq] = qi
            rows = []
            for i, base_qi in enumerate(seq):
                for row in code.varieties[n][base_qi].tables:
                    rows.append(tuple(lift(row[k], i) for k in range(K)))
            label = "|".join(code.query_label(n, bq) for bq in seq)
            per_server.append(AnswerFunction(label, tuple(rows)))
        varieties.append(tuple(per_server))
        index_of.append(lookup)

    orders = list(itertools.permutations(range(B)))
    keys = tuple(digits_label(order) for order in orders)

    query_map: dict[tuple[int, int], tuple[int, ...]] = {}
    for k in range(K):
        for fi, order in enumerate(orders):
            query_map[(k, fi)] = tuple(
                index_of[n][
                    tuple(code.query_map[(k, order[i])][n] for i in range(B))
                ]
                for n in range(p.n_servers)
            )

    base_reconstruct = code.reconstruct
    reconstruct: Optional[Callable] = None
    if base_reconstruct is not None:

        def reconstruct(k: int, fi: int, answers) -> Message:
            order = orders[fi]
            seqs = [
                tuple(code.query_map[(k, order[i])][n] for i in range(B))
                for n in range(p.n_servers)
            ]
            offsets = [0] * p.n_servers
            symbols = []
            for i in range(B):
                block_answers = []
                for n in range(p.n_servers):
                    length = code.answer_length(n, seqs[n][i])
                    block_answers.append(
                        AnswerVector(
                            answers[n].symbols[offsets[n] : offsets[n] + length]
                        )
                    )
                    offsets[n] += length
                part = base_reconstruct(k, order[i], tuple(block_answers))
                symbols.extend(part.symbols)
            return Message(tuple(symbols))

    params = CodeParams(p.n_servers, K, total_len, p.msg_modulus, p.ans_modulus)
    return DecomposableCode(params, tuple(varieties), keys, query_map, reconstruct)
