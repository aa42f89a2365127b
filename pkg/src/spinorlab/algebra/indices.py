"""Abstract spinor indices.

An index is a (label, primed, up) triple.  Binding (free vs dummy) is not
stored on the index: it is an occurrence property of the surrounding term.
A label that occurs twice in a term with opposite variance and the same
chirality is a dummy pair; a label that occurs once is free.
"""

from __future__ import annotations

from typing import NamedTuple


class Idx(NamedTuple):
    label: str
    primed: bool
    up: bool

    def flip(self) -> "Idx":
        return Idx(self.label, self.primed, not self.up)

    def key(self):
        # down sorts before up so lowered canonical slots come first
        return (self.primed, self.up, self.label)

    def __str__(self) -> str:
        return self.label + ("'" if self.primed else "")


def dn(label: str, primed: bool = False) -> Idx:
    return Idx(label, primed, False)


def up(label: str, primed: bool = False) -> Idx:
    return Idx(label, primed, True)


class IndexError_(ValueError):
    """Malformed index structure (bad dummies, signature mismatch...)."""


def occurrence_map(indices):
    """Map (label, primed) -> list of variance flags over an index iterable."""
    occ: dict[tuple[str, bool], list[bool]] = {}
    for ix in indices:
        occ.setdefault((ix.label, ix.primed), []).append(ix.up)
    return occ


def classify(indices):
    """Split an index iterable into (free, dummy) label sets.

    Raises IndexError_ when a label occurs more than twice, or twice with
    the same variance.
    """
    free: set[tuple[str, bool]] = set()
    dummy: set[tuple[str, bool]] = set()
    for key, ups in occurrence_map(indices).items():
        if len(ups) == 1:
            free.add(key)
        elif len(ups) == 2:
            if ups[0] == ups[1]:
                raise IndexError_(
                    f"index {key[0]}{'′' if key[1] else ''} repeated with equal variance")
            dummy.add(key)
        else:
            raise IndexError_(
                f"index {key[0]}{'′' if key[1] else ''} occurs {len(ups)} times")
    return free, dummy


def free_signature(indices):
    """Sorted tuple of (label, primed, up) for the free indices."""
    occ = occurrence_map(indices)
    sig = []
    for (label, primed), ups in occ.items():
        if len(ups) == 1:
            sig.append((label, primed, ups[0]))
        elif len(ups) == 2 and ups[0] != ups[1]:
            continue
        else:
            raise IndexError_(f"bad occurrence count for {label}")
    return tuple(sorted(sig))
