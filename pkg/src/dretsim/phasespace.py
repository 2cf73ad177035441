"""Classical phase-space energy surfaces and resonance-contour geometry.

Each occupied site j carries a paraboloid over dimensionless (Q, P):

    E_j(P, Q) = Omega_j + (omega/2) * (P**2 + (Q - Q_j)**2),   Q_j = sqrt(2) f_j / omega

(energies in units of the reference coupling, hbar = 1).  Fixing a total
energy E0 turns every site into a circle in the (Q, P) plane; whether the
circle of the occupied site meets the circles of the other sites decides
whether phonon motion can carry the exciton across.  The module reports
that geometry analytically: intersection points, tangency and containment
cases, and the near-resonance band of Q where two surfaces stay within
the electronic coupling of each other.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import MoleculeChain, SharedMode

__all__ = [
    "ContourRelation",
    "PhaseContour",
    "NearResonanceBand",
    "ContourPair",
    "ResonanceReport",
    "energy_surface",
    "phase_contour",
    "pair_geometry",
    "near_resonance_band",
    "resonance_intersections",
]

# circle-geometry comparisons are exact up to roundoff; tangency within
# this slack still counts as touching
_GEOM_EPS = 1e-12


class ContourRelation(enum.Enum):
    """How two constant-energy circles relate in the (Q, P) plane."""

    INTERSECTING = "intersecting"     # two points (or one, at tangency)
    DISJOINT = "disjoint"             # separated, d > r1 + r2
    CONTAINED = "contained"           # one inside the other, d < |r1 - r2|
    COINCIDENT = "coincident"         # same center and radius, degenerate
    NO_CONTOUR = "no_contour"         # at least one circle is not real

    @property
    def touching(self) -> bool:
        return self is ContourRelation.INTERSECTING


@dataclass
class PhaseContour:
    """Constant-energy circle E_site(P, Q) = E0 for one site.

    The squared radius is kept even when negative (no real contour at
    this energy); `radius` is then NaN.
    """

    site: int                    # 1-based
    center_q: float              # sqrt(2) f_j / omega; center is (Q_j, P=0)
    radius_sq: float             # 2 (E0 - Omega_j) / omega
    energy: float                # the E0 defining the contour

    @property
    def exists(self) -> bool:
        return self.radius_sq >= -_GEOM_EPS

    @property
    def radius(self) -> float:
        if not self.exists:
            return float("nan")
        return math.sqrt(max(self.radius_sq, 0.0))


@dataclass
class NearResonanceBand:
    """Interval of Q where |E_j - E_k| stays below the coupling |J_jk|.

    The energy difference is affine in Q and independent of P, so the
    band is a single interval, possibly empty or the whole axis.
    """

    q_lo: float
    q_hi: float

    @property
    def empty(self) -> bool:
        return not self.q_lo < self.q_hi

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.q_lo) and math.isinf(self.q_hi)

    def contains(self, q: float) -> bool:
        return self.q_lo < q < self.q_hi


EMPTY_BAND = NearResonanceBand(math.inf, -math.inf)


@dataclass
class ContourPair:
    """Geometry between the occupied-site contour and one partner site."""

    site: int
    relation: ContourRelation
    points: list[tuple[float, float]]       # intersection points (Q, P)
    band: NearResonanceBand


@dataclass
class ResonanceReport:
    """Full contour analysis at fixed total energy E0."""

    occupied_site: int
    energy: float
    contours: list[PhaseContour]
    pairs: dict[int, ContourPair] = field(default_factory=dict)

    def contour(self, site: int) -> PhaseContour:
        return self.contours[site - 1]

    def touching_sites(self) -> list[int]:
        return [s for s, p in self.pairs.items() if p.relation.touching]


def energy_surface(chain: MoleculeChain, mode: SharedMode, site: int,
                   q, p):
    """E_site(P, Q) = Omega + (omega/2)(P^2 + (Q - Q_site)^2), site 1-based."""
    if not 1 <= site <= chain.n_sites:
        raise IndexError(f"site {site} outside 1..{chain.n_sites}")
    omega = mode.frequency
    center = mode.equilibrium_position(site)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    val = chain.site_energies[site - 1] + 0.5 * omega * (
        p ** 2 + (q - center) ** 2)
    return float(val) if val.ndim == 0 else val


def phase_contour(chain: MoleculeChain, mode: SharedMode, site: int,
                  energy: float) -> PhaseContour:
    """Circle E_site(P, Q) = energy; radius_sq < 0 means no real contour."""
    omega = mode.frequency
    r_sq = 2.0 * (energy - chain.site_energies[site - 1]) / omega
    return PhaseContour(site=site, center_q=mode.equilibrium_position(site),
                        radius_sq=r_sq, energy=energy)


def pair_geometry(c1: PhaseContour, c2: PhaseContour
                  ) -> tuple[ContourRelation, list[tuple[float, float]]]:
    """Classify two contours and return intersection points as (Q, P).

    Tangency (internal or external, within roundoff slack) counts as
    intersecting with a single reported point; coincident circles are a
    separate degenerate outcome with no discrete points.
    """
    if not (c1.exists and c2.exists):
        return ContourRelation.NO_CONTOUR, []
    r1, r2 = c1.radius, c2.radius
    d = abs(c2.center_q - c1.center_q)
    scale = max(r1, r2, d, 1.0)
    if d <= _GEOM_EPS * scale:
        if abs(r1 - r2) <= _GEOM_EPS * scale:
            return ContourRelation.COINCIDENT, []
        return ContourRelation.CONTAINED, []
    if d > r1 + r2 + _GEOM_EPS * scale:
        return ContourRelation.DISJOINT, []
    if d < abs(r1 - r2) - _GEOM_EPS * scale:
        return ContourRelation.CONTAINED, []
    # centers both sit on the Q axis, so the chord is vertical in (Q, P)
    a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d)
    p_sq = r1 * r1 - a * a
    sign = 1.0 if c2.center_q >= c1.center_q else -1.0
    q_x = c1.center_q + sign * a
    if p_sq <= _GEOM_EPS * scale * scale:
        return ContourRelation.INTERSECTING, [(q_x, 0.0)]
    p_x = math.sqrt(p_sq)
    return ContourRelation.INTERSECTING, [(q_x, p_x), (q_x, -p_x)]


def near_resonance_band(chain: MoleculeChain, mode: SharedMode,
                        site_j: int, site_k: int) -> NearResonanceBand:
    """Q interval where |E_j - E_k| < |J_jk| (independent of P).

    E_j - E_k = a + b Q with a = Omega_j - Omega_k + (omega/2)(Q_j^2 - Q_k^2)
    and b = omega (Q_k - Q_j).  For b = 0 the band is the whole axis or
    empty depending on |a| vs |J_jk|.
    """
    omega = mode.frequency
    qj = mode.equilibrium_position(site_j)
    qk = mode.equilibrium_position(site_k)
    a = (chain.site_energies[site_j - 1] - chain.site_energies[site_k - 1]
         + 0.5 * omega * (qj * qj - qk * qk))
    b = omega * (qk - qj)
    j_abs = abs(chain.couplings[site_j - 1, site_k - 1])
    if b == 0.0:
        if abs(a) < j_abs:
            return NearResonanceBand(-math.inf, math.inf)
        return EMPTY_BAND
    lo, hi = sorted(((-j_abs - a) / b, (j_abs - a) / b))
    return NearResonanceBand(lo, hi)


def resonance_intersections(chain: MoleculeChain, mode: SharedMode,
                            occupied_site: int,
                            energy: float | None = None) -> ResonanceReport:
    """Contour analysis of every site against the occupied one at energy E0.

    When `energy` is omitted it defaults to the classical energy of the
    occupied site with the mode at the phase-space origin, E_j(0, 0),
    which is where a ground-state phonon wavepacket starts.
    """
    if not 1 <= occupied_site <= chain.n_sites:
        raise IndexError(
            f"site {occupied_site} outside 1..{chain.n_sites}")
    if energy is None:
        energy = energy_surface(chain, mode, occupied_site, 0.0, 0.0)
    contours = [phase_contour(chain, mode, s, energy)
                for s in range(1, chain.n_sites + 1)]
    own = contours[occupied_site - 1]
    report = ResonanceReport(occupied_site=occupied_site, energy=energy,
                             contours=contours)
    for other in range(1, chain.n_sites + 1):
        if other == occupied_site:
            continue
        relation, points = pair_geometry(own, contours[other - 1])
        band = near_resonance_band(chain, mode, occupied_site, other)
        report.pairs[other] = ContourPair(site=other, relation=relation,
                                          points=points, band=band)
    return report
