"""Convention database.

The signs that the verified identities actually pin down are configuration,
not code: gamma-block entries, the gamma5 sign, the volume-form orientation,
the Clifford constant, and the box-action couplings (Phi, Lambda and the
two minimal-coupling charge terms).  A wrong sign anywhere must break at
least one end-to-end check, which is what the fault-injection suite
asserts.  Slot-action pieces that cancel identically in every verified
identity (the Weyl couplings) are hard-coded instead.

Tables load from a plain ``key = value`` text file so alternate conventions
can be tested from the command line.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

SIGN_KEYS = (
    "gamma.ur",        # sign of the upper-right gamma_a block
    "gamma.ll",        # sign of the lower-left gamma_a block
    "gamma5",          # overall sign of gamma5 = diag(-i eps, +i eps)
    "volume",          # orientation of the spinor volume form
    "box.phi",         # cross-sector slot action: Phi coupling
    "box.lambda",      # same-sector slot action: Lambda coupling
    "box.charge_u",    # charge term of the unprimed curvature derivation
    "box.charge_p",    # charge term of the primed curvature derivation
)

_DEFAULT_SIGNS = {
    "gamma.ur": 1, "gamma.ll": 1, "gamma5": 1, "volume": 1,
    "box.phi": -1, "box.lambda": -1, "box.charge_u": -1, "box.charge_p": -1,
}


@dataclass(frozen=True)
class RuleTable:
    signs: dict = field(default_factory=lambda: dict(_DEFAULT_SIGNS))
    clifford_constant: int = -2     # {gamma_a, gamma_b} = c g_ab Id

    @staticmethod
    def default() -> "RuleTable":
        return RuleTable()

    def sign(self, key: str) -> int:
        return self.signs[key]

    def flipped(self, key: str) -> "RuleTable":
        """Copy with one sign entry negated (fault injection)."""
        if key == "clifford.constant":
            return replace(self, clifford_constant=-self.clifford_constant)
        if key not in self.signs:
            raise KeyError(f"unknown rule-table key {key!r}")
        signs = dict(self.signs)
        signs[key] = -signs[key]
        return replace(self, signs=signs)

    @property
    def all_keys(self) -> tuple[str, ...]:
        return SIGN_KEYS + ("clifford.constant",)

    # -- file format -----------------------------------------------------
    def save(self, path: str):
        with open(path, "w") as fh:
            fh.write("# rule table: sign conventions\n")
            for k in SIGN_KEYS:
                fh.write(f"{k} = {self.signs[k]}\n")
            fh.write(f"clifford.constant = {self.clifford_constant}\n")

    @staticmethod
    def load(path: str) -> "RuleTable":
        signs = dict(_DEFAULT_SIGNS)
        cliff = -2
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{ln}: expected 'key = value'")
                k, v = (x.strip() for x in line.split("=", 1))
                try:
                    val = int(v)
                except ValueError:
                    raise ValueError(f"{path}:{ln}: non-integer value {v!r}") from None
                if k == "clifford.constant":
                    if val not in (2, -2):
                        raise ValueError(f"{path}:{ln}: clifford.constant must be +-2")
                    cliff = val
                elif k in signs:
                    if val not in (1, -1):
                        raise ValueError(f"{path}:{ln}: sign must be +-1")
                    signs[k] = val
                else:
                    raise ValueError(f"{path}:{ln}: unknown key {k!r}")
        return RuleTable(signs=signs, clifford_constant=cliff)
