"""NATS-Bench architecture encodings and cell-graph canonicalization.

The topology space (TSS) is a 4-node DAG whose 6 edges each carry one of 5
operations; the size space (SSS) is a 5-layer channel configuration.  Cell
fingerprints identify computationally equivalent cells: zero edges vanish,
skip edges forward their source's value into the target's sum, nodes left
with no input die (transitively), and the surviving operation instances are
canonically labeled by brute force over per-operation relabelings.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import List, Tuple

TSS_OPS = ("none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3",
           "avg_pool_3x3")
OP_ALIASES = {"zero": "none", "skip": "skip_connect",
              "conv1x1": "nor_conv_1x1", "conv3x3": "nor_conv_3x3",
              "avgpool3x3": "avg_pool_3x3"}
REAL_OPS = ("nor_conv_1x1", "nor_conv_3x3", "avg_pool_3x3")

# edges of the complete DAG on nodes 0..3, grouped by target node as they
# appear in the NATS string notation
TSS_EDGES = ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3))

SSS_CHANNELS = (8, 16, 24, 32, 40, 48, 56, 64)
SSS_LAYERS = 5


def _canon_op(op: str) -> str:
    op = OP_ALIASES.get(op, op)
    if op not in TSS_OPS:
        raise ValueError(f"unknown operation {op!r}")
    return op


@dataclass(frozen=True)
class TssArch:
    """A topology-space cell: one operation per DAG edge."""

    ops: Tuple[str, ...]

    def __post_init__(self):
        if len(self.ops) != len(TSS_EDGES):
            raise ValueError(f"expected {len(TSS_EDGES)} operations, "
                             f"got {len(self.ops)}")
        object.__setattr__(self, "ops",
                           tuple(_canon_op(op) for op in self.ops))

    def to_string(self) -> str:
        blocks = []
        i = 0
        for node in (1, 2, 3):
            parts = []
            for src in range(node):
                parts.append(f"|{self.ops[i]}~{src}")
                i += 1
            blocks.append("".join(parts) + "|")
        return "+".join(blocks)


@dataclass(frozen=True)
class SssArch:
    """A size-space configuration: output channels for each of 5 layers."""

    channels: Tuple[int, ...]

    def __post_init__(self):
        if len(self.channels) != SSS_LAYERS:
            raise ValueError(f"expected {SSS_LAYERS} channel values")
        chans = tuple(int(c) for c in self.channels)
        for c in chans:
            if c not in SSS_CHANNELS:
                raise ValueError(f"channel {c} not in {SSS_CHANNELS}")
        object.__setattr__(self, "channels", chans)

    def to_string(self) -> str:
        return ":".join(str(c) for c in self.channels)


def parse_tss(text: str) -> TssArch:
    """Parse the NATS cell notation |op~0|+|op~0|op~1|+|op~0|op~1|op~2|."""
    blocks = text.strip().split("+")
    if len(blocks) != 3:
        raise ValueError(f"expected 3 node blocks, got {len(blocks)}")
    ops = []
    for node, block in enumerate(blocks, start=1):
        parts = [p for p in block.split("|") if p]
        if len(parts) != node:
            raise ValueError(f"node {node} should have {node} incoming "
                             f"edges, got {len(parts)}")
        for src, part in enumerate(parts):
            op, sep, origin = part.partition("~")
            if not sep or origin != str(src):
                raise ValueError(f"malformed edge token {part!r}")
            ops.append(op)
    return TssArch(tuple(ops))


def parse_sss(text: str) -> SssArch:
    """Parse the colon-separated channel notation, e.g. 8:16:24:32:40."""
    parts = text.strip().split(":")
    try:
        chans = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"non-integer channel in {text!r}") from None
    return SssArch(chans)


def parse_arch(text: str):
    """Parse either notation, deciding by shape."""
    return parse_tss(text) if "|" in text else parse_sss(text)


def enumerate_tss() -> List[TssArch]:
    """All 5^6 cells in lexicographic op-index order."""
    return [TssArch(ops)
            for ops in itertools.product(TSS_OPS, repeat=len(TSS_EDGES))]


def enumerate_sss() -> List[SssArch]:
    """All 8^5 channel configurations in lexicographic order."""
    return [SssArch(ch)
            for ch in itertools.product(SSS_CHANNELS, repeat=SSS_LAYERS)]


def model_size(arch: SssArch) -> int:
    """Channel-sum size proxy used for bracketing architectures."""
    return sum(arch.channels)


def _reduced_cell(arch: TssArch):
    """Apply the rewrite rules; return (instances, node value multisets).

    Instances are the surviving parameterized-op edges, keyed by edge index.
    Node values are multisets over instance ids plus "X" for the cell input;
    a skip edge splices its source's multiset into the target's.
    """
    real = {i: (s, d, op) for i, ((s, d), op)
            in enumerate(zip(TSS_EDGES, arch.ops)) if op in REAL_OPS}
    skips = [(s, d) for (s, d), op in zip(TSS_EDGES, arch.ops)
             if op == "skip_connect"]
    live = set(real)
    while True:
        values = {0: Counter({"X": 1}), 1: Counter(), 2: Counter(),
                  3: Counter()}
        for j in (1, 2, 3):
            acc = Counter()
            for i, (s, d, op) in real.items():
                if d == j and i in live:
                    acc[i] += 1
            for s, d in skips:
                if d == j:
                    acc.update(values[s])
            values[j] = acc
        alive = {i for i in live if sum(values[real[i][0]].values()) > 0}
        if alive == live:
            return {i: real[i] for i in live}, values
        live = alive


def canonical_fingerprint(arch: TssArch) -> str:
    """A string equal for two cells iff they denote the same computation.

    The reduced cell is canonically labeled by minimizing its serialized
    form over all per-operation permutations of instance labels (at most
    6 instances, grouped by operation, so the brute force is tiny).
    """
    real, values = _reduced_cell(arch)
    out = values[3]
    if sum(out.values()) == 0:
        return "dead"
    by_op = {}
    for i in sorted(real):
        by_op.setdefault(real[i][2], []).append(i)
    groups = sorted(by_op)
    offsets = {}
    off = 0
    for op in groups:
        offsets[op] = off
        off += len(by_op[op])
    inputs = {i: values[real[i][0]] for i in real}
    best = None
    for perms in itertools.product(*(itertools.permutations(range(len(by_op[g])))
                                     for g in groups)):
        lab = {}
        for op, perm in zip(groups, perms):
            for pos, i in enumerate(by_op[op]):
                lab[i] = offsets[op] + perm[pos]

        def relabel(counter):
            return tuple(sorted((-1 if a == "X" else lab[a], n)
                                for a, n in counter.items()))
        key = (tuple(sorted((real[i][2], lab[i], relabel(inputs[i]))
                            for i in real)), relabel(out))
        if best is None or key < best:
            best = key
    ops_part = ";".join(
        "%s:%d<%s" % (op, lb, ",".join("%s*%d" % ("X" if a < 0 else a, n)
                                       for a, n in ins))
        for op, lb, ins in best[0])
    out_part = ",".join("%s*%d" % ("X" if a < 0 else a, n) for a, n in best[1])
    return "[%s]->[%s]" % (ops_part, out_part)
