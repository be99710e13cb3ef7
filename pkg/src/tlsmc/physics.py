"""Analytic relaxation model for a qubit coupled to up to two lossy defects.

Parameter vectors are length-7 arrays ``(g1, g2, wd1, wd2, t2d1, t2d2, t1q)``.
Couplings ``g_j`` and defect detunings ``wd_j`` are angular frequencies in
rad/us (detunings are offsets from the center of the search window); ``t2d_j``
is the coherence time of defect ``j`` and ``t1q`` the intrinsic qubit lifetime,
both in us.  Configuration inputs in MHz are converted via ``w = 2*pi*f``
before they reach this module.

Absent defects are encoded by exact zeros in all three of their components,
so the defect count is recoverable from the sparsity pattern alone:

    k = 0:  (0,  0,  0,   0,   0,    0,    t1q)
    k = 1:  (g1, 0,  wd1, 0,   t2d1, 0,    t1q)
    k = 2:  all seven components encoded, with g1 >= g2 by convention.

Each defect opens an incoherent relaxation channel with a Lorentzian profile
in the qubit frequency ``wq``:

    Gamma_j(wq) = 2 g_j^2 / (1/t2d_j + t2d_j * (wq - wd_j)^2)

and the total rate is ``1/T1 = 1/t1q + sum_j Gamma_j``.  After preparing the
excited state and waiting a time ``t``, the probability of reading out
"excited" with readout error rate ``gamma`` is

    P_e(wq, t) = (1 - 2*gamma) * exp(-t / T1(wq)) + gamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EncodingError

FIELD_NAMES = ("g1", "g2", "wd1", "wd2", "t2d1", "t2d2", "t1q")
G1, G2, WD1, WD2, T2D1, T2D2, T1Q = range(7)
N_FIELDS = 7

MODEL_CLASSES = (0, 1, 2)

# Column indices that must be nonzero for a particle with k encoded defects.
ENCODED_COORDS = {
    0: (T1Q,),
    1: (G1, WD1, T2D1, T1Q),
    2: (G1, G2, WD1, WD2, T2D1, T2D2, T1Q),
}
# Of those, the ones that must be strictly positive (detunings may be negative).
POSITIVE_COORDS = {
    0: (T1Q,),
    1: (G1, T2D1, T1Q),
    2: (G1, G2, T2D1, T2D2, T1Q),
}


@dataclass(frozen=True)
class MeasurementSetting:
    """One choice of probe frequency (rad/us) and wait time (us)."""

    wq: float
    t: float

    def __post_init__(self):
        if not (self.t >= 0 and np.isfinite(self.t)):
            raise ValueError(f"wait time must be nonnegative and finite, got {self.t}")
        if not np.isfinite(self.wq):
            raise ValueError(f"probe frequency must be finite, got {self.wq}")


@dataclass(frozen=True)
class ParticleVector:
    """A single parameter hypothesis; absent defects are exact zeros."""

    g1: float = 0.0
    g2: float = 0.0
    wd1: float = 0.0
    wd2: float = 0.0
    t2d1: float = 0.0
    t2d2: float = 0.0
    t1q: float = 1.0

    def __post_init__(self):
        validate_positions(self.to_array())

    @property
    def n_defects(self) -> int:
        return stratum_of(self.to_array())

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.g1, self.g2, self.wd1, self.wd2, self.t2d1, self.t2d2, self.t1q]
        )

    @classmethod
    def from_array(cls, x) -> "ParticleVector":
        x = np.asarray(x, dtype=float)
        if x.shape != (N_FIELDS,):
            raise ValueError(f"expected shape ({N_FIELDS},), got {x.shape}")
        return cls(*x.tolist())


def strata_of(positions: np.ndarray) -> np.ndarray:
    """Defect count of each row, derived from the zero pattern.

    Raises EncodingError if any row mixes zero and nonzero entries within one
    defect's (g, wd, t2d) triple, or zeroes defect 1 while defect 2 is present.
    Detuning 0 is a legal interior value, so ``wd_j == 0`` alone does not mark
    a defect absent; a defect is absent iff its g and t2d are both zero.
    """
    positions = np.asarray(positions, dtype=float)
    x = np.atleast_2d(positions)
    present1 = x[:, G1] != 0.0
    present2 = x[:, G2] != 0.0
    # each defect's g and t2d must agree on presence; wd must be 0 when absent
    ok = (
        ((x[:, T2D1] != 0.0) == present1)
        & ((x[:, T2D2] != 0.0) == present2)
        & (present1 | (x[:, WD1] == 0.0))
        & (present2 | (x[:, WD2] == 0.0))
        & (present1 | ~present2)  # defect slots fill in order
    )
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise EncodingError(f"mixed zero pattern in particle {bad}: {x[bad].tolist()}")
    strata = present1.astype(np.uint8) + present2.astype(np.uint8)
    return strata if positions.ndim > 1 else strata[0]


def stratum_of(x) -> int:
    """Defect count (0, 1, or 2) of a single parameter vector."""
    return int(strata_of(np.asarray(x, dtype=float)))


def validate_positions(positions: np.ndarray) -> np.ndarray:
    """Full structural check: zero encoding, positivity, canonical ordering.

    Returns the per-row defect counts on success.
    """
    x = np.atleast_2d(np.asarray(positions, dtype=float))
    strata = np.atleast_1d(strata_of(x))
    if not np.isfinite(x).all():
        raise EncodingError("non-finite entry in parameter vector")
    if (x[:, T1Q] <= 0).any():
        raise EncodingError("t1q must be strictly positive")
    if (x[:, [G1, G2, T2D1, T2D2]] < 0).any():
        raise EncodingError("couplings and coherence times must be nonnegative")
    both = strata == 2
    if (x[both, G1] < x[both, G2]).any():
        raise EncodingError("canonical ordering violated: g1 < g2 with both defects present")
    return strata_of(positions)


def defect_rates(positions: np.ndarray, wq) -> np.ndarray:
    """Relaxation rate contributed by each defect channel, summed (1/us).

    Broadcasts over leading axes of ``positions`` and over ``wq``.  Absent
    defects contribute exactly 0: their ``2 g^2 = 0`` numerator is divided by
    the infinite ``1/t2d`` denominator.
    """
    x = np.asarray(positions, dtype=float)
    total = 0.0
    for gi, wdi, t2di in ((G1, WD1, T2D1), (G2, WD2, T2D2)):
        g = x[..., gi]
        t2d = x[..., t2di]
        delta = wq - x[..., wdi]
        with np.errstate(divide="ignore"):
            total = total + 2.0 * g * g / (1.0 / t2d + t2d * delta * delta)
    return total


def relaxation_rate(positions: np.ndarray, wq) -> np.ndarray:
    """Total decay rate 1/T1 (1/us) at probe frequency ``wq``."""
    x = np.asarray(positions, dtype=float)
    return 1.0 / x[..., T1Q] + defect_rates(x, wq)


def relaxation_time(positions: np.ndarray, wq) -> np.ndarray:
    """Effective T1 (us) at probe frequency ``wq``; never exceeds t1q."""
    x = np.asarray(positions, dtype=float)
    extra = defect_rates(x, wq)
    t1q = x[..., T1Q]
    # where no defect contributes, T1 equals t1q exactly: 1/(1/t) round-trips
    # away from t for about half of all doubles, so don't take the detour
    return np.where(extra == 0.0, t1q, 1.0 / (1.0 / t1q + extra))


def excited_prob(positions: np.ndarray, setting: MeasurementSetting, gamma: float = 0.0):
    """Probability of reading out "excited" after the given setting.

    ``gamma`` is the symmetric readout error rate; gamma = 0 recovers the
    ideal survival probability exp(-t/T1).
    """
    if not 0.0 <= gamma < 0.5:
        raise ValueError(f"readout error rate must lie in [0, 0.5), got {gamma}")
    decay = np.exp(-setting.t * relaxation_rate(positions, setting.wq))
    return (1.0 - 2.0 * gamma) * decay + gamma


@dataclass(frozen=True)
class DefectRegime:
    """Coupling-regime diagnostics for one encoded defect."""

    coupling: float
    rate_window: tuple[float, float]  # (1/t1q, 1/t2d)
    within_rate_window: bool  # 1/t1q < g < 1/t2d
    coupling_to_peak_rate: float  # g / Gamma(0) = 1 / (2 g t2d)
    coupling_coherence_product: float  # g * t2d  (<< 1 for incoherent exchange)


@dataclass(frozen=True)
class RegimeReport:
    defects: tuple[DefectRegime, ...]

    @property
    def all_within_window(self) -> bool:
        # vacuously true when no defects are encoded
        return all(d.within_rate_window for d in self.defects)


def regime_check(x) -> RegimeReport:
    """Report, per encoded defect, where its coupling sits relative to the
    decoherence-rate window (1/t1q, 1/t2d) in which the incoherent-channel
    model is the intended operating regime."""
    if isinstance(x, ParticleVector):
        x = x.to_array()
    x = np.asarray(x, dtype=float)
    k = stratum_of(x)
    defects = []
    for gi, t2di in ((G1, T2D1), (G2, T2D2))[:k]:
        g = float(x[gi])
        t2d = float(x[t2di])
        lo, hi = 1.0 / float(x[T1Q]), 1.0 / t2d
        defects.append(
            DefectRegime(
                coupling=g,
                rate_window=(lo, hi),
                within_rate_window=lo < g < hi,
                coupling_to_peak_rate=1.0 / (2.0 * g * t2d),
                coupling_coherence_product=g * t2d,
            )
        )
    return RegimeReport(defects=tuple(defects))
