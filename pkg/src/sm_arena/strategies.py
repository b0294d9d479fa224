"""Mining strategy automata.

Two deterministic automata react to two event kinds: "you mined a block" and
"a block was delivered to you". Honest mining publishes every block at once
and follows the longest known chain with a first-received tie-break. Selfish
mining withholds a private branch and releases blocks reactively:

  on an external block that deepens the known public chain, with `lead` =
  height(private tip) - height(public tip) taken after the update:
    lead < 0   abandon the private branch, mine on the public head
    lead = 0   publish the withheld block at matching height (a race)
    lead = 1   publish the whole branch, overwriting the public chain
    lead >= 2  publish only the oldest withheld block

  on mining a block while in a race (lead 0 with a live branch), publish and
  win the race; otherwise keep the new block hidden.

Views are per-miner state; handlers mutate the view and return the blocks to
broadcast plus the next mining target. No miner ever broadcasts a block twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .chain import BlockTree


class StrategyKind(Enum):
    HM = "hm"
    SM = "sm"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass
class PublishAction:
    """Blocks to broadcast this timestep (parent before child) and the block
    the miner mines on next."""

    blocks_to_broadcast: list[int]
    new_mining_target: int


@dataclass
class HonestView:
    head: int = 0


@dataclass
class SelfishView:
    """State of one selfish miner.

    branch holds the miner's own fork blocks (oldest first) that are still in
    play: withheld blocks plus any prefix already broadcast during races.
    published counts the broadcast prefix of branch.
    """

    public_head: int = 0
    branch: list[int] = field(default_factory=list)
    published: int = 0

    @property
    def private_head(self) -> int:
        return self.branch[-1] if self.branch else self.public_head

    @property
    def private_blocks(self) -> list[int]:
        return self.branch[self.published:]

    def fork_point(self, tree: BlockTree) -> int:
        return tree.parent[self.branch[0]] if self.branch else self.public_head

    def lead(self, tree: BlockTree) -> int:
        return tree.height[self.private_head] - tree.height[self.public_head]


def hm_on_event(view: HonestView, tree: BlockTree, block: int, mined: bool) -> PublishAction:
    """Honest rule: publish own blocks immediately; adopt strictly deeper
    delivered blocks; keep the current head on an equal-height delivery."""
    if mined:
        view.head = block
        return PublishAction([block], view.head)
    if tree.height[block] > tree.height[view.head]:
        view.head = block
    return PublishAction([], view.head)


def sm_on_self_mined(view: SelfishView, tree: BlockTree, block: int) -> PublishAction:
    in_race = bool(view.branch) and view.lead(tree) == 0
    view.branch.append(block)
    if in_race:
        # Racing at equal height: the fresh block settles it. Everything
        # becomes public and strictly deepest, so the fork state resets.
        out = view.branch[view.published:]
        view.public_head = block
        view.branch = []
        view.published = 0
        return PublishAction(out, block)
    return PublishAction([], block)


def sm_on_external_block(view: SelfishView, tree: BlockTree, block: int) -> PublishAction:
    if tree.height[block] <= tree.height[view.public_head]:
        # Not deeper than what is already known publicly: no state change.
        return PublishAction([], view.private_head)
    view.public_head = block
    if not view.branch:
        return PublishAction([], view.public_head)

    lead = view.lead(tree)
    if lead < 0:
        # A longer public chain wins; drop the branch entirely.
        view.branch = []
        view.published = 0
        return PublishAction([], view.public_head)
    if lead == 0:
        # Height race: reveal the matching-height block, keep the branch alive.
        out = view.branch[view.published:]
        view.published = len(view.branch)
        return PublishAction(out, view.private_head)
    if lead == 1:
        # One ahead: reveal everything, overwrite, and restart from the tip.
        out = view.branch[view.published:]
        tip = view.branch[-1]
        view.public_head = tip
        view.branch = []
        view.published = 0
        return PublishAction(out, tip)
    # Comfortably ahead: match the public progress one old block at a time.
    out = []
    if view.published < len(view.branch):
        out = [view.branch[view.published]]
        view.published += 1
    return PublishAction(out, view.private_head)
