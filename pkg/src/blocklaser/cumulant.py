"""Second-order cumulant description of the collective emission.

Factorizing third-order moments (e.g. <b^+ s_1^- s_2^z> into
<b^+ s_1^-><s_2^z>) closes the moment hierarchy on four quantities: the
inversion z = <s_1^z>, the cross-atom coherence s = <s_1^+ s_2^->, the
mode occupation n = <b^+ b> and the atom-mode coherence x = <b^+ s_1^->.
Their equations of motion are

    dz/dt = i g (x - x*) - (w + gamma) z + (w - gamma)
    ds/dt = (g z / 2i) (x - x*) - (w + gamma + gamma_d) s
    dn/dt = (N g / 2i) (x - x*) - kappa n
    dx/dt = (i g / 2) { [ (N-1) s + (z+1)/2 ] B + n z }
            - ((w + kappa + gamma + gamma_d)/2) x

where B = <1 - 2 b^+ b> = 1 - 2n for the blockaded (two-level) mode and
B = 1 for a normal bosonic mode; B is the only place the mode statistics
enter, through the commutator [b, b^+] = 1 - 2 b^+ b versus [a, a^+] = 1.
Cross-atom coherence is treated as real, s = <s_1^- s_2^+>, which the
permutation symmetry of the full model guarantees.

In the large-N limit the blockaded steady state has the closed forms

    n      = (1/4) (1 + wt - sqrt((1 - wt)^2 + 4 wt^2 kt^2))
    Gamma  = C gamma sqrt((1 - wt)^2 + 4 wt^2 kt^2)

in terms of wt = w N / kappa and kt = kappa/(N g), with Gamma the decay
rate of the slow (spectrally narrow) component of <b^+(t) b(0)>. The
two-time function itself follows from the regression system

    d/dt (b+(t)b(0), s1+(t)b(0)) =
        ((-kappa/2,        (i N g / 2) B ),
         (-(i g / 2) z,  -(w+gamma+gamma_d)/2)) . (...)

whose slow/fast eigenmodes reproduce the two-exponential form
g1(t) ~ (1-2n) e^{-Gamma t/2} + 2n e^{-kappa t/2} deep in the bad-cavity
regime.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import SolverError
from .model import ModelParams, derive_scales, validate
from .observables import CorrelationTrace


@dataclass
class CumulantState:
    sz: float
    spsm: float
    nb: float
    bdsm: complex

    def as_vector(self) -> np.ndarray:
        return np.array([self.sz, self.spsm, self.nb,
                         self.bdsm.real, self.bdsm.imag])

    @staticmethod
    def from_vector(y: np.ndarray) -> "CumulantState":
        return CumulantState(sz=float(y[0]), spsm=float(y[1]), nb=float(y[2]),
                             bdsm=complex(y[3], y[4]))


def _rhs_vec(y: np.ndarray, params: ModelParams, blockaded: bool) -> np.ndarray:
    N = params.n_atoms
    g, kappa, w = params.coupling, params.cavity_decay, params.pump
    gam, gam_d = params.spont_emission, params.dephasing
    z, s, n, u, v = y
    B = 1.0 - 2.0 * n if blockaded else 1.0
    half = 0.5 * (w + kappa + gam + gam_d)
    X = ((N - 1) * s + 0.5 * (z + 1.0)) * B + n * z
    return np.array([
        -2.0 * g * v - (w + gam) * z + (w - gam),
        g * z * v - (w + gam + gam_d) * s,
        N * g * v - kappa * n,
        -half * u,
        0.5 * g * X - half * v,
    ])


def _jac_vec(y: np.ndarray, params: ModelParams, blockaded: bool) -> np.ndarray:
    N = params.n_atoms
    g, kappa, w = params.coupling, params.cavity_decay, params.pump
    gam, gam_d = params.spont_emission, params.dephasing
    z, s, n, u, v = y
    B = 1.0 - 2.0 * n if blockaded else 1.0
    dB = -2.0 if blockaded else 0.0
    half = 0.5 * (w + kappa + gam + gam_d)
    J = np.zeros((5, 5))
    J[0, 0] = -(w + gam)
    J[0, 4] = -2.0 * g
    J[1, 0] = g * v
    J[1, 1] = -(w + gam + gam_d)
    J[1, 4] = g * z
    J[2, 2] = -kappa
    J[2, 4] = N * g
    J[3, 3] = -half
    J[4, 0] = 0.5 * g * (0.5 * B + n)
    J[4, 1] = 0.5 * g * (N - 1) * B
    J[4, 2] = 0.5 * g * (((N - 1) * s + 0.5 * (z + 1.0)) * dB + z)
    J[4, 4] = -half
    return J


def cumulant_rhs(state: CumulantState, params: ModelParams,
                 blockaded: bool = True) -> CumulantState:
    """Time derivative of the cumulant variables."""
    validate(params)
    return CumulantState.from_vector(_rhs_vec(state.as_vector(), params, blockaded))


def cumulant_jacobian(state: CumulantState, params: ModelParams,
                      blockaded: bool = True) -> np.ndarray:
    """Analytic Jacobian in the (sz, spsm, nb, Re bdsm, Im bdsm) ordering."""
    validate(params)
    return _jac_vec(state.as_vector(), params, blockaded)


def _rate_scale(params: ModelParams) -> float:
    return max(params.cavity_decay,
               params.pump + params.spont_emission + params.dephasing,
               params.n_atoms * params.coupling)


def _newton(y0: np.ndarray, params: ModelParams, blockaded: bool,
            tol: float) -> np.ndarray:
    y = y0.copy()
    fnorm = np.linalg.norm(_rhs_vec(y, params, blockaded), np.inf)
    for _ in range(80):
        if fnorm <= tol:
            return y
        f = _rhs_vec(y, params, blockaded)
        J = _jac_vec(y, params, blockaded)
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular cumulant Jacobian") from exc
        lam = 1.0
        while lam > 2 ** -30:
            ytrial = y + lam * step
            ftrial = np.linalg.norm(_rhs_vec(ytrial, params, blockaded), np.inf)
            if ftrial < fnorm:
                y, fnorm = ytrial, ftrial
                break
            lam *= 0.5
        else:
            break
    if fnorm > tol:
        raise SolverError(f"cumulant fixed point stalled at residual {fnorm:.3e}")
    return y


def cumulant_steady(params: ModelParams, blockaded: bool = True,
                    residual_tol: float = 1e-12) -> CumulantState:
    """Physical fixed point of the cumulant equations.

    Forward integration from the weakly excited state (all atoms down,
    empty mode) selects the physical branch; a damped Newton iteration
    then polishes the root to a scaled residual of ``residual_tol``
    (measured in units of the largest rate). A second Newton run from the
    fully inverted state probes for competing roots and warns if one is
    found.
    """
    validate(params)
    if params.pump + params.spont_emission <= 0:
        raise ValueError("need pump + spont_emission > 0 for a relaxing fixed point")
    scale = _rate_scale(params)
    tol = residual_tol * scale
    slow = min(r for r in (params.pump + params.spont_emission,
                           params.cavity_decay) if r > 0)
    y0 = np.array([-1.0, 0.0, 0.0, 0.0, 0.0])
    sol = solve_ivp(lambda t, y: _rhs_vec(y, params, blockaded),
                    (0.0, 200.0 / slow), y0, method="Radau",
                    jac=lambda t, y: _jac_vec(y, params, blockaded),
                    rtol=1e-10, atol=1e-13)
    if not sol.success:
        raise SolverError(f"cumulant relaxation failed: {sol.message}")
    y = _newton(sol.y[:, -1], params, blockaded, tol)

    try:
        alt = _newton(np.array([1.0, 0.0, 0.0, 0.0, 0.0]), params, blockaded, tol)
        distinct = np.linalg.norm(alt - y, np.inf) > 1e-6 * (1.0 + np.linalg.norm(y, np.inf))
        if distinct and _admissible(alt):
            # the polynomial system always has spurious roots outside the
            # physical ranges; only a competing admissible root is news
            warnings.warn(
                "cumulant equations admit another admissible root "
                f"{CumulantState.from_vector(alt)}; returning the branch "
                "reached by forward integration", stacklevel=2)
    except SolverError:
        pass
    return CumulantState.from_vector(y)


def _admissible(y: np.ndarray, slack: float = 1e-6) -> bool:
    z, s, n = y[0], y[1], y[2]
    return (-1.0 - slack <= z <= 1.0 + slack
            and -slack <= s <= 0.25 + slack
            and n >= -slack)


def closed_form_photon(params: ModelParams) -> float:
    """Large-N blockaded-mode occupation from the dimensionless scales."""
    sc = derive_scales(params)
    wt, kt = sc.w_tilde, sc.kappa_tilde
    return 0.25 * (1.0 + wt - np.sqrt((1.0 - wt) ** 2 + 4.0 * wt ** 2 * kt ** 2))


def closed_form_linewidth(params: ModelParams) -> float:
    """Large-N linewidth of the narrow spectral component.

    Expressed through C*gamma = g^2/kappa, so it remains defined when the
    spontaneous rate is set to zero in the model.
    """
    sc = derive_scales(params)
    wt, kt = sc.w_tilde, sc.kappa_tilde
    return sc.purcell_rate * np.sqrt((1.0 - wt) ** 2 + 4.0 * wt ** 2 * kt ** 2)


def regression_matrix(params: ModelParams, steady: CumulantState,
                      blockaded: bool = True) -> np.ndarray:
    """Coefficient matrix of the closed two-time system
    (<b^+(t)b(0)>, <s_1^+(t)b(0)>)."""
    N, g = params.n_atoms, params.coupling
    B = 1.0 - 2.0 * steady.nb if blockaded else 1.0
    nu = params.pump + params.spont_emission + params.dephasing
    return np.array([
        [-0.5 * params.cavity_decay, 0.5j * N * g * B],
        [-0.5j * g * steady.sz, -0.5 * nu],
    ])


def regression_eigenvalues(params: ModelParams, steady: CumulantState,
                           blockaded: bool = True) -> np.ndarray:
    """Eigenvalues of the regression matrix, slowest first."""
    w = np.linalg.eigvals(regression_matrix(params, steady, blockaded))
    return w[np.argsort(np.abs(w.real))]


def regression_g1(params: ModelParams, steady: CumulantState,
                  times, blockaded: bool = True) -> CorrelationTrace:
    """g1(t) from the regression system, normalized to g1(0) = 1.

    Solved by eigendecomposition of the 2x2 matrix; an (unlikely)
    defective matrix is handled with the degenerate closed form
    exp(lambda t)(1 + t (A - lambda)).
    """
    if steady.nb <= 0:
        raise SolverError("zero mode occupation; g1 normalization undefined")
    A = regression_matrix(params, steady, blockaded)
    x0 = np.array([steady.nb, np.conj(steady.bdsm)])
    t = np.asarray(times, dtype=float)
    lam, V = np.linalg.eig(A)
    if abs(lam[0] - lam[1]) > 1e-12 * max(1.0, np.abs(lam).max()):
        amps = np.linalg.solve(V, x0)
        values = (V[0, :, None] * amps[:, None] *
                  np.exp(np.outer(lam, t))).sum(axis=0)
    else:
        nil = A - lam[0] * np.eye(2)
        values = np.exp(lam[0] * t) * (x0[0] + t * (nil @ x0)[0])
    return CorrelationTrace(times=t, values=values / steady.nb,
                            normalization=steady.nb)


def two_exponential_g1(params: ModelParams, steady: CumulantState,
                       times) -> np.ndarray:
    """Bad-cavity approximant (1-2n) e^{-Gamma t/2} + 2n e^{-kappa t/2}
    for the blockaded mode."""
    t = np.asarray(times, dtype=float)
    gamma_slow = closed_form_linewidth(params)
    n = steady.nb
    return ((1.0 - 2.0 * n) * np.exp(-0.5 * gamma_slow * t)
            + 2.0 * n * np.exp(-0.5 * params.cavity_decay * t))
