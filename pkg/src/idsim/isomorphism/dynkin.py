"""Coupling identity between chain local times and permanental vectors.

Direct form: adding an independent last-visit-conditioned local-time
vector to a permanental vector is traded for reweighting the permanental
vector by its anchor coordinate over its mean.  The converse recovers the
unweighted law from the translated one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..reports import IdentityReport
from ..representations.markov import (
    MarkovChainModel,
    PermanentalModel,
    sample_local_times_tilde,
    sample_permanental,
)
from ..streams import replicate
from .models import two_arm_report


@dataclass(frozen=True)
class DynkinReport:
    direct: IdentityReport
    converse: IdentityReport

    @property
    def passed(self) -> bool:
        return self.direct.passed and self.converse.passed

    def to_dict(self) -> dict:
        return {"direct": self.direct.to_dict(), "converse": self.converse.to_dict(),
                "pass": self.passed}


def verify_dynkin(chain: MarkovChainModel, anchor, alpha: float, functional,
                  reps: int, seed, z_crit: float = 4.0) -> DynkinReport:
    """Two-arm check of the local-time coupling identity.

    Left arm of the direct form: F of the sum of an independent permanental
    sample (order alpha, kernel the chain potential matrix) and a
    last-visit local-time vector from the anchor.  Right arm: F of the
    permanental sample weighted by Y_anchor / (alpha u(anchor, anchor)).
    The converse weights the translated sum by
    alpha u(a,a) / (Y_a + L_a).
    """
    a = chain.state_index(anchor)
    model = PermanentalModel(green=chain.green, alpha=alpha, states=chain.states)
    uaa = chain.green[a, a]
    if uaa <= 0:
        raise ValueError("anchor potential must be positive")
    scale = alpha * uaa

    def lhs_direct(rng, n):
        y = sample_permanental(model, rng, n)
        lt = sample_local_times_tilde(chain, anchor, rng, n)
        return np.asarray(functional(y + lt), dtype=float)

    def rhs_direct(rng, n):
        y = sample_permanental(model, rng, n)
        return np.asarray(functional(y), dtype=float) * y[:, a] / scale

    lhs = replicate(reps, seed, lhs_direct, lane=0)
    rhs = replicate(reps, seed, rhs_direct, lane=1)
    direct = two_arm_report("dynkin", lhs, rhs, z_crit)

    def lhs_conv(rng, n):
        y = sample_permanental(model, rng, n)
        return np.asarray(functional(y), dtype=float)

    def rhs_conv(rng, n):
        y = sample_permanental(model, rng, n)
        lt = sample_local_times_tilde(chain, anchor, rng, n)
        return (np.asarray(functional(y + lt), dtype=float)
                * scale / (y[:, a] + lt[:, a]))

    lhs2 = replicate(reps, seed, lhs_conv, lane=2)
    rhs2 = replicate(reps, seed, rhs_conv, lane=3)
    converse = two_arm_report("dynkin_converse", lhs2, rhs2, z_crit)
    return DynkinReport(direct=direct, converse=converse)
