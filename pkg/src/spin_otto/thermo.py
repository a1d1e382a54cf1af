"""Zeeman ladder energies and thermodynamic bookkeeping.

Energies are stored as temperatures (E / k_B) in nK, fields in mG, times in
ms, so k_B = 1 throughout and power comes out in nK/ms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .dynamics import as_distribution
from .errors import DomainError

G_F_CS = -0.25
G_F_RB = -0.5

#: |g_F(Cs)| mu_B / k_B in nK/mG, frozen to six significant digits.
LAMBDA_NK_PER_MG = 16.7928
#: |g_F(Rb)| mu_B / k_B; the Rb Lande factor is exactly twice the Cs one.
KAPPA_NK_PER_MG = 2 * LAMBDA_NK_PER_MG

B1_DEFAULT_MG = 346.5
B2_DEFAULT_MG = 31.6


def lambda_from_codata(g_f=G_F_CS):
    """|g_F| mu_B / k_B recomputed from CODATA, in nK/mG."""
    nK_per_T = abs(g_f) * constants.value("Bohr magneton in K/T") * 1e9
    return nK_per_T * 1e-7  # 1 mG = 1e-7 T


def _check_field(B, name="B"):
    if not (math.isfinite(B) and B > 0):
        raise DomainError(f"{name} must be a positive field in mG, got {B}")
    return float(B)


@dataclass(frozen=True, eq=False)
class EnergyLadder:
    energies: np.ndarray
    field: float

    @property
    def N(self):
        return len(self.energies)

    @property
    def spacing(self):
        return LAMBDA_NK_PER_MG * self.field


def zeeman_ladder(B, N) -> EnergyLadder:
    """Energies ``E_n = n * lambda * B`` (nK) of an ``N``-level ladder at field ``B``."""
    B = _check_field(B)
    if N < 2:
        raise DomainError(f"need at least two levels, got N={N}")
    E = np.arange(N) * (LAMBDA_NK_PER_MG * B)
    E.setflags(write=False)
    return EnergyLadder(E, B)


def bath_quantum(B, direction):
    """Energy handed over by one bath atom per collision, nK.

    Negative for heating (the bath gives ``kappa * B``), positive for cooling.
    """
    B = _check_field(B)
    sign = -1.0 if str(getattr(direction, "value", direction)) == "heating" else 1.0
    return sign * KAPPA_NK_PER_MG * B


def mean_energy(p, ladder: EnergyLadder):
    return float(np.asarray(p, dtype=float) @ ladder.energies)


def heat_exchanged(start, end, ladder: EnergyLadder) -> float:
    """Heat absorbed by the engine between two populations at fixed field.

    Positive when the engine takes up energy.
    """
    start = as_distribution(start, ladder.N)
    end = as_distribution(end, ladder.N)
    return float(ladder.energies @ (end - start))


def stroke_work(p, B_from, B_to) -> float:
    """Work done on the engine by an adiabatic field ramp with frozen populations.

    Negative when the engine delivers work (expansion, ``B_to < B_from``).
    """
    p = as_distribution(p)
    B_from, B_to = _check_field(B_from, "B_from"), _check_field(B_to, "B_to")
    levels = np.arange(p.size)
    return float(p @ levels) * LAMBDA_NK_PER_MG * (B_to - B_from)


def cycle_power(Q_H, Q_C, tau_cycle) -> float:
    """Mean power output ``(Q_H - |Q_C|) / tau_cycle`` in nK/ms."""
    if not (math.isfinite(tau_cycle) and tau_cycle > 0):
        raise DomainError(f"cycle time must be positive, got {tau_cycle}")
    return (Q_H - abs(Q_C)) / tau_cycle


def shannon_entropy(p) -> float:
    """``-sum p ln p`` in units of k_B, with ``0 ln 0 = 0``."""
    p = as_distribution(p)
    nz = p[p > 0]
    return float(-(nz * np.log(nz)).sum())


def shannon_entropy_trace(states):
    """Row-wise entropy of a stack of distributions (no validation)."""
    s = np.asarray(states, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(s > 0, s * np.log(np.where(s > 0, s, 1.0)), 0.0)
    return -terms.sum(axis=-1)


def otto_efficiency(B1, B2) -> float:
    """Ideal Otto efficiency ``1 - B2/B1`` of the magnetic ladder engine."""
    B1, B2 = _check_field(B1, "B1"), _check_field(B2, "B2")
    if B2 > B1:
        raise DomainError(f"need B1 >= B2, got B1={B1}, B2={B2}")
    return 1.0 - B2 / B1
