"""Field-symbol registry.

Symbols are keyed by (name, #unprimed slots, #primed slots), which is how
the parser disambiguates e.g. tau_{A A' B'} from tau_A, or the frame t^{AA'}
from t_{ABC}.  The registry is frozen after construction; expressions may
only reference registered symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class FieldSymbol:
    name: str
    slots: tuple[bool, ...]            # chirality per slot, True = primed
    sym_groups: tuple[tuple[int, ...], ...] = ()   # totally symmetric slot subsets
    charged: bool = False
    constant: bool = False             # covariant derivative vanishes

    @property
    def n_unprimed(self) -> int:
        return sum(1 for p in self.slots if not p)

    @property
    def n_primed(self) -> int:
        return sum(1 for p in self.slots if p)

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.name, self.n_unprimed, self.n_primed)

    def group_of(self, slot: int):
        for g in self.sym_groups:
            if slot in g:
                return g
        return None


U, P = False, True


class Registry:
    def __init__(self):
        self._by_key: dict[tuple[str, int, int], FieldSymbol] = {}
        self._frozen = False

    def add(self, sym: FieldSymbol) -> FieldSymbol:
        if self._frozen:
            raise RuntimeError("registry is frozen")
        if sym.key in self._by_key:
            raise ValueError(f"duplicate symbol {sym.key}")
        for g in sym.sym_groups:
            chir = {sym.slots[i] for i in g}
            if len(chir) != 1:
                raise ValueError(f"symmetry group mixes chirality in {sym.name}")
        self._by_key[sym.key] = sym
        return sym

    def freeze(self):
        self._frozen = True

    def lookup(self, name: str, n_unprimed: int, n_primed: int) -> FieldSymbol:
        try:
            return self._by_key[(name, n_unprimed, n_primed)]
        except KeyError:
            raise KeyError(
                f"unknown symbol {name} with {n_unprimed} unprimed / "
                f"{n_primed} primed indices") from None

    def __contains__(self, key) -> bool:
        return key in self._by_key

    def symbols(self):
        return list(self._by_key.values())


def builtin_registry() -> Registry:
    """The stock symbol set: spin-3/2 potentials, their irreducible parts,
    space-spinor parts, gauge spinors, curvature, electromagnetic spinor,
    coupling constants and the timelike frame spinor."""
    r = Registry()
    add = r.add
    # covariant potentials and irreducible parts
    add(FieldSymbol("chi", (U, P, P), charged=True))            # chi_{A A' B'}
    add(FieldSymbol("phi", (U, P, U), charged=True))            # phi_{A A' B}
    add(FieldSymbol("tau", (U, P, P), ((1, 2),), charged=True))  # tau_{A A' B'}
    add(FieldSymbol("tau", (U,), charged=True))                  # tau_A
    add(FieldSymbol("sigma", (P, U, U), ((1, 2),), charged=True))  # sigma_{A' A B}
    add(FieldSymbol("sigma", (P,), charged=True))                # sigma_{A'}
    # gauge spinors
    add(FieldSymbol("chi", (P,), charged=True))                  # chi_{B'}
    add(FieldSymbol("phi", (U,), charged=True))                  # phi_B
    add(FieldSymbol("chi", (U,), charged=True))                  # split gauge spinor chi_A
    # space-spinor parts (flat uncharged laboratory)
    add(FieldSymbol("t", (U, U, U), ((0, 1, 2),)))               # t_{ABC}
    add(FieldSymbol("t", (U,)))                                  # t_A
    add(FieldSymbol("s", (U, U, U), ((0, 1, 2),)))               # s_{ABC}
    add(FieldSymbol("s", (U,)))                                  # s_A
    add(FieldSymbol("sigma", (U,), charged=True))                # sigma_A (frame-converted)
    # curvature
    add(FieldSymbol("Psi", (U, U, U, U), ((0, 1, 2, 3),)))
    add(FieldSymbol("Psi", (P, P, P, P), ((0, 1, 2, 3),)))
    add(FieldSymbol("Phi", (U, U, P, P), ((0, 1), (2, 3))))
    add(FieldSymbol("Lambda", ()))
    add(FieldSymbol("F", (U, U), ((0, 1),)))
    add(FieldSymbol("F", (P, P), ((0, 1),)))
    # constants
    add(FieldSymbol("m", (), constant=True))
    add(FieldSymbol("e", (), constant=True))
    # timelike frame spinor (flat mode: covariantly constant)
    add(FieldSymbol("t", (U, P), constant=True))
    r.freeze()
    return r


REGISTRY = builtin_registry()

CURVATURE_KEYS = {("Psi", 4, 0), ("Psi", 0, 4), ("Phi", 2, 2),
                  ("Lambda", 0, 0), ("F", 2, 0), ("F", 0, 2)}
