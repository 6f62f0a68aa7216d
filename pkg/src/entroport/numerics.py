"""Compensated floating-point summation helpers.

Per-asset sums go through :func:`math.fsum` (exactly rounded). Running
sums over long tick loops use :class:`RunningSum`, a Kahan-Neumaier
accumulator, so residual ledgers stay at the 1e-12 level over 10^5 steps.
"""

from __future__ import annotations

from math import fsum

__all__ = ["fsum", "RunningSum"]


class RunningSum:
    """Neumaier variant of Kahan summation for incremental totals.

    Unlike ``math.fsum`` this accepts terms one at a time, which is what a
    tick loop needs. The compensation term rescues low-order bits that a
    naive ``+=`` would drop.
    """

    __slots__ = ("_sum", "_comp")

    def __init__(self, initial: float = 0.0):
        self._sum = float(initial)
        self._comp = 0.0

    def add(self, value: float) -> None:
        s = self._sum + value
        if abs(self._sum) >= abs(value):
            self._comp += (self._sum - s) + value
        else:
            self._comp += (value - s) + self._sum
        self._sum = s

    @property
    def value(self) -> float:
        return self._sum + self._comp

    def __repr__(self) -> str:
        return f"RunningSum({self.value!r})"
