"""Quotient of a pair groupoid by an outcome partition, with averaged weights."""

from __future__ import annotations

from .groupoid import FiniteGroupoid, OutcomePartition, build_pair_groupoid, pair_element
from .lagrangian import QLagrangian


def is_principal(g: FiniteGroupoid) -> bool:
    """True when there is exactly one transition per ordered outcome pair."""
    counts: dict[tuple[str, str], int] = {}
    for e in g.elements:
        key = (g.target[e], g.source[e])
        counts[key] = counts.get(key, 0) + 1
    return all(counts.get((b, a), 0) == 1 for b in g.outcomes for a in g.outcomes)


def coarse_grain(
    g: FiniteGroupoid, partition: OutcomePartition, ell: QLagrangian
) -> tuple[FiniteGroupoid, QLagrangian]:
    """Collapse partition blocks into outcomes and average the weights.

    The block-to-block weight is the arithmetic mean of the fine-grained
    weights over every cross transition, which keeps the result self-adjoint.
    Only pair-structured groupoids are accepted; on those the quotient is
    again a pair groupoid over the block labels.
    """
    if not is_principal(g):
        raise ValueError("coarse graining requires a pair-structured groupoid "
                         "(exactly one transition per ordered outcome pair)")
    if ell.groupoid != g:
        raise ValueError("lagrangian is defined on a different groupoid")
    partition.validate_against(g.outcomes)

    by_pair = {(g.target[e], g.source[e]): e for e in g.elements}
    labels = tuple(partition.block_label(b) for b in partition.blocks)
    quotient = build_pair_groupoid(labels)

    values: dict[str, complex] = {}
    for bt, lt in zip(partition.blocks, labels):
        for bs, ls in zip(partition.blocks, labels):
            total = 0j
            for y in bt:
                for x in bs:
                    total += ell[by_pair[(y, x)]]
            values[pair_element(lt, ls)] = total / (len(bt) * len(bs))
    return quotient, QLagrangian(quotient, values)
