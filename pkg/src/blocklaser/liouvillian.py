"""Sector-restricted sparse superoperator for the driven-dissipative model.

The master equation

    d(rho)/dt = i[rho, H] + L_cav + L_pump + L_spont + L_deph,
    H = (g/2) (S^+ a + S^- a^+),
    L_cav   = -(kappa/2)  (a^+ a rho + rho a^+ a - 2 a rho a^+),
    L_pump  = -(w/2)     sum_j (s_j^- s_j^+ rho + rho s_j^- s_j^+ - 2 s_j^+ rho s_j^-),
    L_spont = -(gamma/2) sum_j (s_j^+ s_j^- rho + rho s_j^+ s_j^- - 2 s_j^- rho s_j^+),
    L_deph  = -(gamma_d/4) sum_j (rho - s_j^z rho s_j^z),

conserves the U(1) charge of the symmetric basis, so it restricts to a
sparse matrix on each fixed-charge sector. Assembly walks the basis
column by column applying the elementary kernels; no operator product is
ever formed in the full 4^N (M+1)^2 space. The one-sided single-atom
sums are lifted to collective operators via
sum_j s_j^- s_j^+ = (N - S^z)/2 and sum_j s_j^+ s_j^- = (N + S^z)/2; the
sandwich parts use the dedicated recycling kernels.

Each Lindblad term is linear in its rate, so unit-rate part matrices are
cached per (N, M, delta_n) and rescaled per parameter set; parameter
sweeps then cost a few sparse additions per point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Optional

import numpy as np
import scipy.sparse as sp

from .model import ModelParams, validate
from .opkernels import (apply_cavity, apply_collective, apply_dephasing_diag,
                        apply_product, apply_recycling)
from .symbasis import SectorBasis, enumerate_sector

#: entries with |value| below this after merging are rounding dust and dropped
DEFAULT_DROP_TOL = 1e-15

PART_NAMES = ("hamiltonian", "cavity_decay", "pump", "spont", "deph")


@dataclass
class Superoperator:
    """Sparse action of the master equation on one charge sector."""

    sector: SectorBasis
    matrix: sp.csr_matrix
    parts: Optional[Dict[str, sp.csr_matrix]] = None


def photon_trace_weights(cutoff: int) -> np.ndarray:
    """Traces P_m = Tr[(a^+)^m a^m] over the (M+1)-dim photon space.

    P_m = sum_{n=m}^{M} n!/(n-m)!; in particular P_0 = M + 1.
    """
    M = cutoff
    return np.array([sum(math.factorial(n) // math.factorial(n - m)
                         for n in range(m, M + 1)) for m in range(M + 1)],
                    dtype=float)


def trace_functional(sector: SectorBasis) -> np.ndarray:
    """Weights t with Tr[rho] = t . c for coefficient vectors c.

    Only elements with no atomic content and equal photon powers have a
    nonzero trace; the weight of (0,0,0,m,m) is P_m. Sectors with
    delta_n != 0 contain no such element and get an all-zero functional.
    """
    weights = np.zeros(len(sector))
    pm = photon_trace_weights(sector.photon_cutoff)
    for k, e in enumerate(sector.elements):
        if e.n_plus == 0 and e.n_minus == 0 and e.n_z == 0 and e.n_adag == e.n_a:
            weights[k] = pm[e.n_adag]
    return weights


def _photon_hs_norm(p: int, q: int, cutoff: int) -> float:
    """Hilbert-Schmidt norm of (a^+)^p a^q on the truncated photon space."""
    total = 0.0
    for n in range(q, cutoff + 1):
        if n - q + p > cutoff:
            continue
        total += (math.factorial(n) / math.factorial(n - q)) * \
                 (math.factorial(n - q + p) / math.factorial(n - q))
    return math.sqrt(total)


@lru_cache(maxsize=64)
def basis_scaling(n_atoms: int, cutoff: int, delta_n: int) -> np.ndarray:
    """Hilbert-Schmidt norms of the sector's basis elements, scaled so the
    contentless element has weight 1.

    Physical coefficient vectors in the raw basis span binomially many
    orders of magnitude (the expansion of a product state carries factors
    C(N, k)), which destroys the conditioning of linear solves and of the
    Krylov propagator beyond N of a few tens. Conjugating the sector
    matrices by this diagonal is an exact similarity that brings all
    physical coefficients to a common scale; solvers apply it internally
    and convert back, so the stored convention never changes. Computed in
    log space to avoid overflow.
    """
    sector = enumerate_sector(n_atoms, cutoff, delta_n)
    N = n_atoms
    ref = math.log(_photon_hs_norm(0, 0, cutoff))
    logs = np.empty(len(sector))
    for k, e in enumerate(sector.elements):
        n_i = N - e.n_plus - e.n_minus - e.n_z
        log_atomic = 0.5 * (
            math.lgamma(e.n_plus + 1) + math.lgamma(e.n_minus + 1)
            + math.lgamma(e.n_z + 1) + math.lgamma(n_i + 1)
            - math.lgamma(N + 1)
        ) + 0.5 * (e.n_z + n_i - N) * math.log(2.0)
        logs[k] = log_atomic + math.log(
            _photon_hs_norm(e.n_adag, e.n_a, cutoff)) - ref
    return np.exp(logs)


def _part_terms(n_atoms: int, cutoff: int):
    """Unit-rate expansion of each master-equation part.

    Returns {part: [(coefficient, kernel chain)]}; an empty chain is the
    identity (pure diagonal term).
    """
    N, M = n_atoms, cutoff

    def cav(kind):
        return lambda e: apply_cavity(kind, e, M)

    def col(kind):
        return lambda e: apply_collective(kind, e, N)

    def rec(kind):
        return lambda e: apply_recycling(kind, e, N)

    a_l, a_r = cav("a_left"), cav("a_right")
    ad_l, ad_r = cav("adag_left"), cav("adag_right")
    sp_l, sp_r = col("sp_left"), col("sp_right")
    sm_l, sm_r = col("sm_left"), col("sm_right")
    sz_l, sz_r = col("sz_left"), col("sz_right")

    deph = lambda e: [(e, -0.5 * apply_dephasing_diag(e))]

    return {
        # i[rho, H], H = (1/2)(S^+ a + S^- a^+) at unit g
        "hamiltonian": [
            (0.5j, [sp_r, a_r]),      # +i rho S^+ a
            (0.5j, [sm_r, ad_r]),     # +i rho S^- a^+
            (-0.5j, [sp_l, a_l]),     # -i S^+ a rho
            (-0.5j, [sm_l, ad_l]),    # -i S^- a^+ rho
        ],
        "cavity_decay": [
            (-0.5, [a_l, ad_l]),      # -1/2 a^+ a rho
            (-0.5, [ad_r, a_r]),      # -1/2 rho a^+ a
            (1.0, [a_l, ad_r]),       # + a rho a^+
        ],
        "pump": [
            (-0.5 * N, []),
            (0.25, [sz_l]),
            (0.25, [sz_r]),
            (0.5, [rec("pump_sandwich")]),
        ],
        "spont": [
            (-0.5 * N, []),
            (-0.25, [sz_l]),
            (-0.25, [sz_r]),
            (0.5, [rec("emission_sandwich")]),
        ],
        "deph": [
            (1.0, [deph]),
        ],
    }


@lru_cache(maxsize=64)
def _unit_parts(n_atoms: int, cutoff: int, delta_n: int,
                drop_tol: float = DEFAULT_DROP_TOL) -> Dict[str, sp.csr_matrix]:
    """Unit-rate part matrices on the given sector, cached."""
    sector = enumerate_sector(n_atoms, cutoff, delta_n)
    dim = len(sector)
    terms = _part_terms(n_atoms, cutoff)
    parts = {}
    for name, chains in terms.items():
        rows, cols, vals = [], [], []
        for j, e in enumerate(sector.elements):
            acc: Dict = {}
            for coef, kernels in chains:
                for f, w in apply_product(kernels, e):
                    acc[f] = acc.get(f, 0.0) + coef * w
            for f, v in acc.items():
                if v == 0.0:
                    continue
                i = sector.index_of(f)
                if i is None:  # kernels preserve the charge; cannot happen
                    raise AssertionError(f"element {f} escaped sector {sector}")
                rows.append(i)
                cols.append(j)
                vals.append(v)
        mat = sp.csr_matrix((np.asarray(vals, dtype=complex), (rows, cols)),
                            shape=(dim, dim))
        if drop_tol > 0:
            mat.data[np.abs(mat.data) < drop_tol] = 0
            mat.eliminate_zeros()
        parts[name] = mat
    return parts


def _rates(params: ModelParams) -> Dict[str, float]:
    return {
        "hamiltonian": params.coupling,
        "cavity_decay": params.cavity_decay,
        "pump": params.pump,
        "spont": params.spont_emission,
        "deph": params.dephasing,
    }


def _scaled_part(rate: float, unit: sp.csr_matrix) -> sp.csr_matrix:
    if rate == 0.0:
        return sp.csr_matrix(unit.shape, dtype=complex)
    return (rate * unit).tocsr()


def build_hamiltonian_action(params: ModelParams, sector: SectorBasis) -> sp.csr_matrix:
    """Sparse matrix of i[rho, H] on the sector."""
    validate(params)
    unit = _unit_parts(sector.n_atoms, sector.photon_cutoff, sector.delta_n)
    return _scaled_part(params.coupling, unit["hamiltonian"])


def build_dissipators(params: ModelParams, sector: SectorBasis) -> Dict[str, sp.csr_matrix]:
    """Sparse matrices of the four dissipative parts on the sector."""
    validate(params)
    unit = _unit_parts(sector.n_atoms, sector.photon_cutoff, sector.delta_n)
    rates = _rates(params)
    return {name: _scaled_part(rates[name], unit[name]) for name in PART_NAMES
            if name != "hamiltonian"}


def build_liouvillian(params: ModelParams, sector: SectorBasis,
                      keep_parts: bool = False,
                      drop_tol: float = DEFAULT_DROP_TOL) -> Superoperator:
    """Assemble the full sector Liouvillian from cached unit parts."""
    validate(params)
    if (sector.n_atoms, sector.photon_cutoff) != (params.n_atoms, params.photon_cutoff):
        raise ValueError("sector was enumerated for different (N, M)")
    unit = _unit_parts(sector.n_atoms, sector.photon_cutoff, sector.delta_n, drop_tol)
    rates = _rates(params)
    dim = len(sector)
    total = sp.csr_matrix((dim, dim), dtype=complex)
    parts = {} if keep_parts else None
    for name in PART_NAMES:
        scaled = _scaled_part(rates[name], unit[name])
        if scaled.nnz:
            total = total + scaled
        if keep_parts:
            parts[name] = scaled
    return Superoperator(sector=sector, matrix=total.tocsr(), parts=parts)


@lru_cache(maxsize=32)
def liouvillian_for(params: ModelParams, delta_n: int) -> Superoperator:
    """Cached Liouvillian on the delta_n sector of ``params``.

    The returned object is shared; treat it as immutable.
    """
    sector = enumerate_sector(params.n_atoms, params.photon_cutoff, delta_n)
    return build_liouvillian(params, sector)


def dump_coo(superop: Superoperator, path) -> None:
    """Write the matrix as 'row col re im' text, sorted, for diffing."""
    coo = superop.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"# dim {coo.shape[0]} nnz {coo.nnz}\n")
        for k in order:
            v = coo.data[k]
            fh.write(f"{coo.row[k]} {coo.col[k]} "
                     f"{float(v.real)!r} {float(v.imag)!r}\n")
