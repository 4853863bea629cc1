"""Brute-force full-Hilbert-space reference implementation.

Everything here works on the unreduced space (C^2)^(x N) (x) C^(M+1)
with explicit per-atom operators and no symmetry assumptions; it defines
ground truth for the symmetry-reduced solver at small N. Density
matrices are flattened row-major, so A rho B maps to (A kron B^T) acting
on the flattened vector.

``lift_element`` expands a symmetric basis element into its explicit
matrix, which lets tests compare kernel and Liouvillian actions entry by
entry against literal operator products.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Dict, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dynamics import DegenerateSteadyStateError, SolverError, propagate_grid
from .model import ModelParams, validate
from .symbasis import BasisElement, is_legal

DEFAULT_HILBERT_CAP = 64

_SP = np.array([[0.0, 1.0], [0.0, 0.0]])   # |e><g|
_SM = _SP.T.copy()
_SZ = np.diag([1.0, -1.0])
_ID2 = np.eye(2)


def hilbert_dim(n_atoms: int, cutoff: int) -> int:
    return 2 ** n_atoms * (cutoff + 1)


def _mode_matrix(cutoff: int) -> np.ndarray:
    a = np.zeros((cutoff + 1, cutoff + 1))
    for n in range(1, cutoff + 1):
        a[n - 1, n] = math.sqrt(n)
    return a


def site_operators(n_atoms: int, cutoff: int) -> Dict[str, object]:
    """Sparse per-atom sigma operators and the truncated mode operators."""
    dim_ph = cutoff + 1
    eye_ph = sp.identity(dim_ph, format="csr")

    def embed(op2, j):
        left = sp.identity(2 ** j, format="csr")
        right = sp.identity(2 ** (n_atoms - 1 - j), format="csr")
        return sp.kron(sp.kron(sp.kron(left, sp.csr_matrix(op2)), right),
                       eye_ph, format="csr")

    a = sp.kron(sp.identity(2 ** n_atoms, format="csr"),
                sp.csr_matrix(_mode_matrix(cutoff)), format="csr")
    return {
        "sp": [embed(_SP, j) for j in range(n_atoms)],
        "sm": [embed(_SM, j) for j in range(n_atoms)],
        "sz": [embed(_SZ, j) for j in range(n_atoms)],
        "a": a,
        "adag": a.conj().T.tocsr(),
    }


def full_hamiltonian(params: ModelParams) -> sp.csr_matrix:
    ops = site_operators(params.n_atoms, params.photon_cutoff)
    g = params.coupling
    H = sp.csr_matrix((hilbert_dim(params.n_atoms, params.photon_cutoff),) * 2,
                      dtype=complex)
    for j in range(params.n_atoms):
        H = H + 0.5 * g * (ops["sp"][j] @ ops["a"] + ops["sm"][j] @ ops["adag"])
    return H.tocsr()


def _dissipator(c: sp.spmatrix, dim: int) -> sp.csr_matrix:
    cdc = (c.conj().T @ c).tocsr()
    eye = sp.identity(dim, format="csr")
    return (sp.kron(c, c.conj(), format="csr")
            - 0.5 * sp.kron(cdc, eye, format="csr")
            - 0.5 * sp.kron(eye, cdc.T, format="csr"))


def build_full_liouvillian(params: ModelParams,
                           cap: int = DEFAULT_HILBERT_CAP) -> sp.csr_matrix:
    """Vectorized master-equation generator on the full space."""
    validate(params)
    dim = hilbert_dim(params.n_atoms, params.photon_cutoff)
    if dim > cap:
        raise ValueError(f"Hilbert dimension {dim} exceeds cap {cap}")
    ops = site_operators(params.n_atoms, params.photon_cutoff)
    eye = sp.identity(dim, format="csr")
    H = full_hamiltonian(params)
    # i[rho, H] = i rho H - i H rho
    L = 1j * (sp.kron(eye, H.T, format="csr") - sp.kron(H, eye, format="csr"))
    L = L + params.cavity_decay * _dissipator(ops["a"], dim)
    for j in range(params.n_atoms):
        if params.pump:
            L = L + params.pump * _dissipator(ops["sp"][j], dim)
        if params.spont_emission:
            L = L + params.spont_emission * _dissipator(ops["sm"][j], dim)
        if params.dephasing:
            L = L + 0.25 * params.dephasing * _dissipator(ops["sz"][j], dim)
    return L.tocsr()


def lift_element(e: BasisElement, n_atoms: int, cutoff: int) -> np.ndarray:
    """Explicit matrix of a symmetric basis element.

    Sums the distinct placements of the (s^+, s^-, s^z, identity) content
    over atom slots, each weighted by the number of permutations that
    realize it, normalized by 1/(2^N N!).
    """
    if not is_legal(e, n_atoms, cutoff):
        raise ValueError(f"{e} is illegal for N={n_atoms}, M={cutoff}")
    N = n_atoms
    dim = hilbert_dim(N, cutoff)
    a = _mode_matrix(cutoff)
    photon = (np.linalg.matrix_power(a.T, e.n_adag)
              @ np.linalg.matrix_power(a, e.n_a))
    n_i = N - e.n_plus - e.n_minus - e.n_z
    multiplicity = (math.factorial(e.n_plus) * math.factorial(e.n_minus)
                    * math.factorial(e.n_z) * math.factorial(n_i))
    total = np.zeros((dim, dim), dtype=complex)
    slots = set(range(N))
    for plus in combinations(range(N), e.n_plus):
        rest1 = slots - set(plus)
        for minus in combinations(sorted(rest1), e.n_minus):
            rest2 = rest1 - set(minus)
            for zpos in combinations(sorted(rest2), e.n_z):
                mats = []
                for j in range(N):
                    if j in plus:
                        mats.append(_SP)
                    elif j in minus:
                        mats.append(_SM)
                    elif j in zpos:
                        mats.append(_SZ)
                    else:
                        mats.append(_ID2)
                atom = np.array([[1.0]])
                for m in mats:
                    atom = np.kron(atom, m)
                total += np.kron(atom, photon) * multiplicity
    return total / (2 ** N * math.factorial(N))


def lift_state(state) -> np.ndarray:
    """Explicit density matrix of a SymmetricState (small N only)."""
    sector = state.sector
    dim = hilbert_dim(sector.n_atoms, sector.photon_cutoff)
    rho = np.zeros((dim, dim), dtype=complex)
    for c, e in zip(state.coeffs, sector.elements):
        if c != 0.0:
            rho += c * lift_element(e, sector.n_atoms, sector.photon_cutoff)
    return rho


def oracle_steady_state(params: ModelParams, cap: int = DEFAULT_HILBERT_CAP,
                        method: str = "solve") -> np.ndarray:
    """Unique steady density matrix of the full master equation.

    ``method='solve'`` replaces one trace-redundant row of the vectorized
    generator with the trace row and solves the sparse system;
    ``method='eig'`` extracts the null vector from a dense
    eigendecomposition instead, asserting that the zero eigenvalue is
    isolated from the rest of the spectrum by a documented gap (used as a
    cross-check at very small dimensions).
    """
    L = build_full_liouvillian(params, cap=cap)
    dim = int(round(math.sqrt(L.shape[0])))
    if method == "eig":
        w, v = np.linalg.eig(L.toarray())
        order = np.argsort(np.abs(w))
        scale = max(np.abs(w).max(), 1e-300)
        if np.abs(w[order[0]]) > 1e-10 * scale:
            raise SolverError(f"no zero mode: |lambda_min| = {np.abs(w[order[0]]):.3e}")
        if np.abs(w[order[1]]) < 1e-6 * scale:
            raise DegenerateSteadyStateError(
                f"zero mode not isolated: |lambda_2| = {np.abs(w[order[1]]):.3e}")
        vec = v[:, order[0]]
    else:
        trace_idx = np.arange(dim) * dim + np.arange(dim)
        coo = L.tocoo()
        keep = coo.row != 0
        rows = np.concatenate([coo.row[keep], np.zeros(dim, dtype=coo.row.dtype)])
        cols = np.concatenate([coo.col[keep], trace_idx])
        vals = np.concatenate([coo.data[keep], np.ones(dim, dtype=complex)])
        bordered = sp.csc_matrix((vals, (rows, cols)), shape=L.shape)
        rhs = np.zeros(L.shape[0], dtype=complex)
        rhs[0] = 1.0
        vec = spla.spsolve(bordered, rhs)
        resid = np.linalg.norm(L @ vec)
        scale = spla.norm(L, 1) * np.linalg.norm(vec)
        if not np.all(np.isfinite(vec)) or resid > 1e-9 * max(scale, 1e-300):
            return oracle_steady_state(params, cap=cap, method="eig")
    rho = vec.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    _check_density_matrix(rho)
    return rho


def _check_density_matrix(rho: np.ndarray) -> None:
    herm = np.linalg.norm(rho - rho.conj().T)
    if herm > 1e-10:
        raise SolverError(f"steady state not Hermitian: {herm:.3e}")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise SolverError(f"steady state trace {np.trace(rho)!r}")
    wmin = np.linalg.eigvalsh(rho).min()
    if wmin < -1e-8:
        raise SolverError(f"steady state not positive: min eigval {wmin:.3e}")


def oracle_expectations(params: ModelParams, rho: np.ndarray) -> Dict[str, float]:
    """<s_1^z>, <s_1^+ s_2^-> (N >= 2 only) and <a^+ a> from a full rho."""
    ops = site_operators(params.n_atoms, params.photon_cutoff)
    out = {
        "sz": float(np.trace(ops["sz"][0] @ rho).real),
        "nb": float(np.trace((ops["adag"] @ ops["a"]) @ rho).real),
    }
    if params.n_atoms >= 2:
        out["spsm"] = float(np.trace((ops["sp"][0] @ ops["sm"][1]) @ rho).real)
    return out


def oracle_two_time(params: ModelParams, a_label: str, b_label: str,
                    times: Sequence[float], sandwich: bool = False,
                    rho_ss: np.ndarray = None,
                    cap: int = DEFAULT_HILBERT_CAP) -> np.ndarray:
    """Tr[A exp(Lt)(B rho_ss)] or, with ``sandwich``, Tr[A exp(Lt)(B rho_ss B^+)].

    Labels name operators of the output mode: 'a', 'adag' or 'n' (= a^+ a).
    """
    ops = site_operators(params.n_atoms, params.photon_cutoff)
    table = {"a": ops["a"], "adag": ops["adag"], "n": ops["adag"] @ ops["a"]}
    A = table[a_label].toarray()
    B = table[b_label].toarray()
    if rho_ss is None:
        rho_ss = oracle_steady_state(params, cap=cap)
    seed = B @ rho_ss @ B.conj().T if sandwich else B @ rho_ss
    L = build_full_liouvillian(params, cap=cap)
    pairing = A.T.reshape(-1)  # Tr[A X] = vec(A^T) . vec(X), row-major
    values = propagate_grid(L, seed.reshape(-1), times,
                            observe=lambda v: pairing @ v)
    return np.asarray(values)


def oracle_g1(params: ModelParams, times: Sequence[float],
              rho_ss: np.ndarray = None, cap: int = DEFAULT_HILBERT_CAP) -> np.ndarray:
    """Normalized <a^+(t) a(0)> / <a^+ a> on the full space."""
    if rho_ss is None:
        rho_ss = oracle_steady_state(params, cap=cap)
    nb = oracle_expectations(params, rho_ss)["nb"]
    raw = oracle_two_time(params, "adag", "a", times, rho_ss=rho_ss, cap=cap)
    return raw / nb


def oracle_g2(params: ModelParams, times: Sequence[float],
              rho_ss: np.ndarray = None, cap: int = DEFAULT_HILBERT_CAP) -> np.ndarray:
    """Normalized <a^+(0) a^+(t) a(t) a(0)> / <a^+ a>^2 on the full space."""
    if rho_ss is None:
        rho_ss = oracle_steady_state(params, cap=cap)
    nb = oracle_expectations(params, rho_ss)["nb"]
    raw = oracle_two_time(params, "n", "a", times, sandwich=True,
                          rho_ss=rho_ss, cap=cap)
    return raw.real / nb ** 2


def atom_swap(n_atoms: int, cutoff: int, i: int, j: int) -> sp.csr_matrix:
    """Unitary permutation exchanging atoms i and j (photon untouched)."""
    dim_at = 2 ** n_atoms
    perm = np.arange(dim_at)
    bi, bj = n_atoms - 1 - i, n_atoms - 1 - j
    for idx in range(dim_at):
        vi, vj = (idx >> bi) & 1, (idx >> bj) & 1
        out = idx & ~(1 << bi) & ~(1 << bj) | (vj << bi) | (vi << bj)
        perm[idx] = out
    P = sp.csr_matrix((np.ones(dim_at), (perm, np.arange(dim_at))),
                      shape=(dim_at, dim_at))
    return sp.kron(P, sp.identity(cutoff + 1), format="csr")
