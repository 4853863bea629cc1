"""Action of elementary operators on symmetric basis elements.

Each kernel takes one :class:`~blocklaser.symbasis.BasisElement` and
returns the sparse expansion of (operator . element) or
(element . operator) as a merged list of ``(BasisElement, weight)`` pairs.
Outputs that violate the index bounds do not exist in the truncated space
(the offending operator annihilates them) and are dropped.

Cavity rules. With ``p = n_adag`` and ``q = n_a`` the photon factor is the
normal-ordered product (a^+)^p a^q, so right-multiplying by a and
left-multiplying by a^+ are index shifts. Reordering a (a^+)^p or
(a^+)^p a^q a^+ uses the truncated-space commutator

    [a, a^+] = 1 - ((M+1)/M!) (a^+)^M a^M,

which generates, beyond the harmonic-oscillator terms, a boundary term
with weight (M+1)/(M-q+1)! landing on photon indices (M+1+p-q, M) (and
mirrored for left-multiplication by a). For M = 1 this boundary term is
exactly what encodes a a^+ = 1 - a^+ a of the two-level (blockaded) mode,
so it is always kept.

Collective atomic rules. The collective operators S^{+,-,z} = sum_j s_j^{+,-,z}
act slot-wise on the symmetrized product; resolving each slot with
s^z s^{+-} = +-s^{+-}, s^{+-} s^z = -+s^{+-}, s^+ s^- = (1+s^z)/2,
s^- s^+ = (1-s^z)/2 and recollecting permutations gives closed-form
weights in the content counts and the identity-slot count
``n_i = N - n_plus - n_minus - n_z``.

Recycling rules. The per-atom sandwich sums 2 sum_j s_j^- (.) s_j^+ and
2 sum_j s_j^+ (.) s_j^- cannot be written through collective operators and
get their own kernels.

Dephasing. sum_j s_j^z (.) s_j^z flips the sign of every s^+ or s^- slot
and leaves s^z and identity slots alone, so the dephasing Lindbladian is
diagonal in this basis; see :func:`apply_dephasing_diag`.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Sequence, Tuple

from .symbasis import BasisElement

WeightedElements = List[Tuple[BasisElement, float]]

CAVITY_KINDS = ("a_right", "adag_left", "adag_right", "a_left")
COLLECTIVE_KINDS = ("sp_left", "sp_right", "sm_left", "sm_right",
                    "sz_left", "sz_right")
RECYCLING_KINDS = ("emission_sandwich", "pump_sandwich")


def _merge_photon(terms: WeightedElements, cutoff: int) -> WeightedElements:
    out: Dict[BasisElement, float] = {}
    for e, w in terms:
        if w == 0.0 or not (0 <= e.n_adag <= cutoff and 0 <= e.n_a <= cutoff):
            continue
        out[e] = out.get(e, 0.0) + w
    return [(e, w) for e, w in out.items() if w != 0.0]


def _merge_atomic(terms: WeightedElements, n_atoms: int) -> WeightedElements:
    out: Dict[BasisElement, float] = {}
    for e, w in terms:
        if w == 0.0 or min(e.n_plus, e.n_minus, e.n_z) < 0:
            continue
        if e.n_plus + e.n_minus + e.n_z > n_atoms:
            continue
        out[e] = out.get(e, 0.0) + w
    return [(e, w) for e, w in out.items() if w != 0.0]


def apply_cavity(kind: str, e: BasisElement, cutoff: int) -> WeightedElements:
    """Expand a or a^+ applied on one side of the photon factor of ``e``."""
    M = cutoff
    p, q = e.n_adag, e.n_a
    atom = e[:3]

    def ph(p2, q2):
        return BasisElement(*atom, p2, q2)

    if kind == "a_right":
        terms = [(ph(p, q + 1), 1.0)]
    elif kind == "adag_left":
        terms = [(ph(p + 1, q), 1.0)]
    elif kind == "adag_right":
        terms = [
            (ph(p + 1, q), 1.0),
            (ph(p, q - 1), float(q)),
            (ph(M + 1 + p - q, M), -(M + 1) / math.factorial(M - q + 1)),
        ]
    elif kind == "a_left":
        terms = [
            (ph(p, q + 1), 1.0),
            (ph(p - 1, q), float(p)),
            (ph(M, M + 1 + q - p), -(M + 1) / math.factorial(M - p + 1)),
        ]
    else:
        raise ValueError(f"unknown cavity kind {kind!r}")
    return _merge_photon(terms, M)


def apply_collective(kind: str, e: BasisElement, n_atoms: int) -> WeightedElements:
    """Expand a collective S^+, S^- or S^z applied on one side of ``e``."""
    np_, nm, nz = e.n_plus, e.n_minus, e.n_z
    ni = n_atoms - np_ - nm - nz
    ph = (e.n_adag, e.n_a)

    def el(a, b, c):
        return BasisElement(a, b, c, *ph)

    if kind == "sp_left":
        terms = [
            (el(np_, nm - 1, nz), 0.5 * nm),
            (el(np_, nm - 1, nz + 1), 0.5 * nm),
            (el(np_ + 1, nm, nz - 1), -float(nz)),
            (el(np_ + 1, nm, nz), float(ni)),
        ]
    elif kind == "sp_right":
        terms = [
            (el(np_, nm - 1, nz), 0.5 * nm),
            (el(np_, nm - 1, nz + 1), -0.5 * nm),
            (el(np_ + 1, nm, nz - 1), float(nz)),
            (el(np_ + 1, nm, nz), float(ni)),
        ]
    elif kind == "sm_left":
        terms = [
            (el(np_ - 1, nm, nz), 0.5 * np_),
            (el(np_ - 1, nm, nz + 1), -0.5 * np_),
            (el(np_, nm + 1, nz - 1), float(nz)),
            (el(np_, nm + 1, nz), float(ni)),
        ]
    elif kind == "sm_right":
        terms = [
            (el(np_ - 1, nm, nz), 0.5 * np_),
            (el(np_ - 1, nm, nz + 1), 0.5 * np_),
            (el(np_, nm + 1, nz - 1), -float(nz)),
            (el(np_, nm + 1, nz), float(ni)),
        ]
    elif kind == "sz_left":
        terms = [
            (e, float(np_ - nm)),
            (el(np_, nm, nz - 1), float(nz)),
            (el(np_, nm, nz + 1), float(ni)),
        ]
    elif kind == "sz_right":
        terms = [
            (e, float(nm - np_)),
            (el(np_, nm, nz - 1), float(nz)),
            (el(np_, nm, nz + 1), float(ni)),
        ]
    else:
        raise ValueError(f"unknown collective kind {kind!r}")
    return _merge_atomic(terms, n_atoms)


def apply_recycling(kind: str, e: BasisElement, n_atoms: int) -> WeightedElements:
    """Expand the per-atom sandwich sums 2 sum_j s_j^-+ (.) s_j^+-."""
    np_, nm, nz = e.n_plus, e.n_minus, e.n_z
    ni = n_atoms - np_ - nm - nz
    ph = (e.n_adag, e.n_a)

    def el(c):
        return BasisElement(np_, nm, c, *ph)

    if kind == "emission_sandwich":       # 2 sum_j s_j^- rho s_j^+
        terms = [
            (e, float(ni - nz)),
            (el(nz - 1), float(nz)),
            (el(nz + 1), -float(ni)),
        ]
    elif kind == "pump_sandwich":         # 2 sum_j s_j^+ rho s_j^-
        terms = [
            (e, float(ni - nz)),
            (el(nz - 1), -float(nz)),
            (el(nz + 1), float(ni)),
        ]
    else:
        raise ValueError(f"unknown recycling kind {kind!r}")
    return _merge_atomic(terms, n_atoms)


def apply_dephasing_diag(e: BasisElement) -> float:
    """Diagonal factor of the dephasing Lindbladian on ``e``.

    L_deph = -(gamma_d/4) sum_j (rho - s_j^z rho s_j^z) acts on a basis
    element as -(gamma_d/2) (n_plus + n_minus) times the element: each
    coherence slot flips sign under the s^z sandwich, all other slots are
    invariant. Returns the non-negative factor (n_plus + n_minus).
    """
    return float(e.n_plus + e.n_minus)


Kernel = Callable[[BasisElement], WeightedElements]


def apply_product(kernels: Sequence[Kernel], e: BasisElement) -> WeightedElements:
    """Compose kernels sequentially; atomic and photon factors commute,
    so operator products split into independent single-factor kernels."""
    current: WeightedElements = [(e, 1.0)]
    for kernel in kernels:
        nxt: Dict[BasisElement, float] = {}
        for f, w in current:
            for g, v in kernel(f):
                nxt[g] = nxt.get(g, 0.0) + w * v
        current = [(f, w) for f, w in nxt.items() if w != 0.0]
    return current
