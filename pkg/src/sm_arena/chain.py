"""Block tree: the append-only state of a mining run.

Blocks carry (parent, owner, height). The genesis block is owned by nobody
and is never counted in rewards. Ids are sequential insertion indices, so a
fixed event order reproduces the exact same tree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENESIS = 0
NOBODY = -1
NO_PARENT = -1


@dataclass(frozen=True)
class Block:
    id: int
    parent: int
    owner: int
    height: int


@dataclass
class RewardVector:
    """Per-miner block counts on one chain and the induced reward fractions.

    rewards[i] = block_counts[i] / sum(block_counts); all zeros when the
    chain has no non-genesis blocks (a reward is undefined there and the
    runner never measures that state).
    """

    block_counts: np.ndarray
    rewards: np.ndarray

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "RewardVector":
        counts = np.asarray(counts, dtype=np.int64)
        total = int(counts.sum())
        if total == 0:
            return cls(counts, np.zeros(len(counts), dtype=np.float64))
        return cls(counts, counts / float(total))


class BlockTree:
    """Append-only tree of blocks rooted at a single genesis."""

    def __init__(self) -> None:
        self.parent: list[int] = [NO_PARENT]
        self.owner: list[int] = [NOBODY]
        self.height: list[int] = [0]
        self.tips: set[int] = {GENESIS}

    def __len__(self) -> int:
        return len(self.parent)

    def __contains__(self, block_id: int) -> bool:
        return 0 <= block_id < len(self.parent)

    def block(self, block_id: int) -> Block:
        return Block(block_id, self.parent[block_id], self.owner[block_id], self.height[block_id])

    def extend(self, parent: int, owner: int) -> int:
        """Append a new block under `parent`, owned by `owner`; returns its id."""
        if parent not in self:
            raise ValueError(f"unknown parent block {parent}")
        bid = len(self.parent)
        self.parent.append(parent)
        self.owner.append(owner)
        self.height.append(self.height[parent] + 1)
        self.tips.discard(parent)
        self.tips.add(bid)
        return bid

    def longest_tips(self) -> set[int]:
        """All tips of maximal height. Never empty; genesis counts when alone."""
        best = max(self.height[t] for t in self.tips)
        return {t for t in self.tips if self.height[t] == best}

    def path_to_genesis(self, tip: int) -> list[int]:
        """Blocks from `tip` down to (excluding) genesis."""
        if tip not in self:
            raise ValueError(f"unknown block {tip}")
        out = []
        b = tip
        while b != GENESIS:
            out.append(b)
            b = self.parent[b]
        return out

    def reward(self, tip: int, n_miners: int) -> RewardVector:
        """Eq-style reward on the genesis->tip chain: counts per owner, genesis excluded."""
        counts = np.zeros(n_miners, dtype=np.int64)
        for b in self.path_to_genesis(tip):
            counts[self.owner[b]] += 1
        return RewardVector.from_counts(counts)

    def dump(self) -> str:
        """Line-oriented debug dump: `id parent owner height`, genesis first."""
        lines = [
            f"{i} {self.parent[i]} {self.owner[i]} {self.height[i]}"
            for i in range(len(self.parent))
        ]
        return "\n".join(lines)
