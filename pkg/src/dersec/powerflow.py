"""Branch-flow solvers for the three power-flow models.

NPF is the nonlinear DistFlow recursion with loss terms; LPF drops the loss
terms; eps-LPF is LPF with every net load inflated by (1+eps) so that it
brackets the nonlinear solution from the other side. Edge quantities are
keyed by the downstream node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NegativeSquaredVoltage, NonConvergent
from .network import Network

_NPF_TOL = 1e-10
_NPF_MAX_ITER = 200


@dataclass(frozen=True)
class ModelTag:
    kind: str          # "npf" | "lpf" | "eps_lpf"
    eps: float = 0.0

    @property
    def is_linear(self) -> bool:
        return self.kind != "npf"

    @property
    def load_scale(self) -> float:
        return 1.0 + self.eps if self.kind == "eps_lpf" else 1.0

    def __str__(self) -> str:
        if self.kind == "eps_lpf":
            return f"eps-lpf({self.eps:.6g})"
        return self.kind


LPF = ModelTag("lpf")
NPF = ModelTag("npf")


def eps_lpf(eps: float) -> ModelTag:
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    return ModelTag("eps_lpf", eps)


@dataclass(frozen=True)
class Injection:
    """Consumed and generated complex power per node (per-unit)."""

    sc: np.ndarray
    sg: np.ndarray

    @property
    def net_load(self) -> np.ndarray:
        return self.sc - self.sg


def injection(net: Network, gamma: np.ndarray, sg: np.ndarray) -> Injection:
    """Injection with loads scaled by the load-control vector.

    Enforces the demand cap (consumption never above nominal) and the DER
    physical restriction (nonnegative real part, magnitude within capability).
    """
    tol = 1e-9
    sg = np.asarray(sg, dtype=complex)
    sc = gamma * net.sc_nom
    if np.any(np.real(sc) > np.real(net.sc_nom) + tol) or np.any(
        np.imag(sc) > np.imag(net.sc_nom) + tol
    ):
        raise ValueError("consumption above nominal demand")
    if np.any(np.abs(sg) > net.der_cap + tol) or np.any(np.real(sg) < -tol):
        raise ValueError("generation outside the DER capability half-disk")
    return Injection(sc=sc, sg=sg)


def nominal_injection(net: Network) -> Injection:
    """Full nominal demand, zero generation."""
    return Injection(sc=net.sc_nom.copy(), sg=np.zeros(net.n + 1, dtype=complex))


@dataclass(frozen=True)
class State:
    """A power-flow solution tagged with the model that produced it."""

    net: Network
    model: ModelTag
    nu: np.ndarray
    ell: np.ndarray
    S: np.ndarray
    injection: Injection

    def residuals(self) -> tuple[float, float, float]:
        """Max-abs residuals of the three branch-flow equations under this
        state's model (loss terms appear only for NPF)."""
        net = self.net
        par = net.tree.parent
        s = self.injection.net_load * self.model.load_scale
        if self.model.kind == "npf":
            loss_term = net.z * self.ell
            volt_term = np.abs(net.z) ** 2 * self.ell
        else:
            loss_term = np.zeros(net.n + 1, dtype=complex)
            volt_term = np.zeros(net.n + 1)

        child_sum = np.zeros(net.n + 1, dtype=complex)
        for j in net.nodes:
            child_sum[par[j]] += self.S[j]
        r_cons = np.abs(self.S[1:] - (child_sum[1:] + s[1:] + loss_term[1:]))

        nu_par = self.nu[par[1:]]
        r_volt = np.abs(
            self.nu[1:]
            - (
                nu_par
                - 2.0 * np.real(np.conj(net.z[1:]) * self.S[1:])
                + volt_term[1:]
            )
        )
        r_cur = np.abs(self.ell[1:] * nu_par - np.abs(self.S[1:]) ** 2)
        return float(r_cons.max()), float(r_volt.max()), float(r_cur.max())


def _sweep_linear(net: Network, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Leaf-to-root flow accumulation and root-to-leaf voltage recursion."""
    order = net.tree.order
    par = net.tree.parent
    S = s.astype(complex).copy()
    for node in order[:0:-1]:
        S[par[node]] += S[node]
    nu = np.full(net.n + 1, net.nu0)
    for node in order[1:]:
        nu[node] = nu[par[node]] - 2.0 * np.real(np.conj(net.z[node]) * S[node])
    if np.any(nu <= 0.0):
        raise NegativeSquaredVoltage(
            f"nu <= 0 at nodes {list(np.flatnonzero(nu <= 0.0))}"
        )
    ell = np.zeros(net.n + 1)
    ell[1:] = np.abs(S[1:]) ** 2 / nu[par[1:]]
    S[0] = 0.0
    return nu, ell, S


def solve_lpf(net: Network, inj: Injection) -> State:
    """Lossless linear model: flows accumulate net loads exactly."""
    nu, ell, S = _sweep_linear(net, inj.net_load)
    return State(net=net, model=LPF, nu=nu, ell=ell, S=S, injection=inj)


def solve_eps_lpf(net: Network, inj: Injection, eps: float) -> State:
    """LPF with net loads inflated by (1+eps); eps = 0 reproduces LPF."""
    model = eps_lpf(eps)
    nu, ell, S = _sweep_linear(net, inj.net_load * (1.0 + eps))
    return State(net=net, model=model, nu=nu, ell=ell, S=S, injection=inj)


def solve_npf(
    net: Network,
    inj: Injection,
    tol: float = _NPF_TOL,
    max_iter: int = _NPF_MAX_ITER,
) -> State:
    """Backward/forward-sweep fixed point of the nonlinear branch-flow model.

    The current map is a contraction in the small-impedance regime, so the
    fixed point is unique there; outside it the solve fails loudly.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    order = net.tree.order
    par = net.tree.parent
    s = inj.net_load
    z = net.z
    zabs2 = np.abs(z) ** 2

    ell = np.zeros(net.n + 1)
    nu = np.full(net.n + 1, net.nu0)
    S = np.zeros(net.n + 1, dtype=complex)
    residual = np.inf
    for _ in range(max_iter):
        S = (s + z * ell).astype(complex)
        for node in order[:0:-1]:
            S[par[node]] += S[node]
        S[0] = 0.0
        for node in order[1:]:
            nu[node] = (
                nu[par[node]]
                - 2.0 * np.real(np.conj(z[node]) * S[node])
                + zabs2[node] * ell[node]
            )
        if np.any(nu <= 0.0):
            raise NegativeSquaredVoltage(
                f"nu <= 0 at nodes {list(np.flatnonzero(nu <= 0.0))}"
            )
        ell_new = np.zeros_like(ell)
        ell_new[1:] = np.abs(S[1:]) ** 2 / nu[par[1:]]
        residual = float(np.max(np.abs(ell_new - ell)))
        ell = ell_new
        if residual < tol:
            state = State(net=net, model=NPF, nu=nu, ell=ell, S=S, injection=inj)
            if max(state.residuals()) < max(tol, 1e-9):
                return state
    raise NonConvergent(residual, max_iter)


@dataclass(frozen=True)
class EpsilonCalibration:
    """Loss-ratio bound eps0 and the model inflation eps = (1-eps0)^{-H} - 1."""

    eps0: float
    eps: float


def calibrate_epsilon(net: Network, tol: float = _NPF_TOL) -> EpsilonCalibration:
    """Calibrate eps0 from the NPF solution at nominal demand, zero generation.

    Edges with (numerically) zero P or Q are skipped in the max.
    """
    state = solve_npf(net, nominal_injection(net), tol=tol)
    P = np.real(state.S[1:])
    Q = np.imag(state.S[1:])
    ell = state.ell[1:]
    keep = (np.abs(P) > 1e-12) & (np.abs(Q) > 1e-12)
    if not np.any(keep):
        eps0 = 0.0
    else:
        ratios = np.maximum(
            net.r[1:][keep] * ell[keep] / P[keep],
            net.x[1:][keep] * ell[keep] / Q[keep],
        )
        eps0 = float(max(ratios.max(), 0.0))
    if eps0 >= 1.0:
        raise NegativeSquaredVoltage(f"eps0 = {eps0:.3f} >= 1; network outside regime")
    eps = (1.0 - eps0) ** (-net.tree.height) - 1.0
    return EpsilonCalibration(eps0=eps0, eps=eps)


@dataclass(frozen=True)
class A0Report:
    """Pass/fail per assumption sub-check, evaluated on a reference state.

    Diagnostic only: building the report never raises.
    """

    voltage_quality: bool         # soft bounds at the reference state (NPF and LPF)
    safety: bool                  # hard bounds at the reference state
    no_reverse_flow: bool         # S >= 0 componentwise at the reference state
    small_impedance: bool         # r, x <= mu_lo^2/(4 mu_lo + 8); R_ii, X_ii <= 1; |S| < 1
    small_losses: bool            # eps0 below the configured threshold
    eps0: float
    failures: dict[str, str]

    @property
    def all_pass(self) -> bool:
        return (
            self.voltage_quality
            and self.safety
            and self.no_reverse_flow
            and self.small_impedance
            and self.small_losses
        )


def validate_assumptions(
    net: Network,
    nominal: State,
    eps0_max: float = 0.1,
) -> A0Report:
    """Check the standing assumption set against a nominal NPF state."""
    failures: dict[str, str] = {}
    tol = 1e-9

    lpf_state = solve_lpf(net, nominal.injection)
    nu_n = nominal.nu[1:]
    nu_l = lpf_state.nu[1:]
    ok0 = bool(
        np.all(nu_n >= net.nu_lo[1:] - tol)
        and np.all(nu_n <= net.nu_hi[1:] + tol)
        and np.all(nu_l >= net.nu_lo[1:] - tol)
        and np.all(nu_l <= net.nu_hi[1:] + tol)
    )
    if not ok0:
        bad = [int(i) + 1 for i in np.flatnonzero((nu_n < net.nu_lo[1:] - tol) | (nu_n > net.nu_hi[1:] + tol))]
        failures["voltage_quality"] = f"soft bound violated at nodes {bad}"

    ok1 = bool(np.all(nu_n >= net.mu_lo - tol) and np.all(nu_n <= net.mu_hi + tol))
    if not ok1:
        bad = [int(i) + 1 for i in np.flatnonzero((nu_n < net.mu_lo - tol) | (nu_n > net.mu_hi + tol))]
        failures["safety"] = f"hard bound violated at nodes {bad}"

    S = nominal.S[1:]
    rev = np.flatnonzero((np.real(S) < -tol) | (np.imag(S) < -tol))
    ok2 = rev.size == 0
    if not ok2:
        failures["no_reverse_flow"] = f"reverse flow on edges into nodes {[int(i) + 1 for i in rev]}"

    r_cap = net.mu_lo**2 / (4.0 * net.mu_lo + 8.0)
    diag = np.diagonal(net.Z)[1:]
    ok3 = bool(
        np.all(net.r[1:] <= r_cap + tol)
        and np.all(net.x[1:] <= r_cap + tol)
        and np.all(np.real(diag) <= 1.0 + tol)
        and np.all(np.imag(diag) <= 1.0 + tol)
        and abs(net.nu0 - 1.0) <= 1e-6
        and np.all(np.abs(S) < 1.0)
    )
    if not ok3:
        bad = [int(i) + 1 for i in np.flatnonzero((net.r[1:] > r_cap + tol) | (net.x[1:] > r_cap + tol))]
        failures["small_impedance"] = (
            f"impedance cap {r_cap:.5f} exceeded on edges into nodes {bad}"
            if bad
            else "path impedance, nu0, or |S| bound violated"
        )

    P = np.real(S)
    Q = np.imag(S)
    ell = nominal.ell[1:]
    keep = (np.abs(P) > 1e-12) & (np.abs(Q) > 1e-12)
    if np.any(keep):
        eps0 = float(
            np.maximum(
                net.r[1:][keep] * ell[keep] / P[keep],
                net.x[1:][keep] * ell[keep] / Q[keep],
            ).max()
        )
    else:
        eps0 = 0.0
    ok4 = 0.0 <= eps0 < eps0_max
    if not ok4:
        failures["small_losses"] = f"eps0 = {eps0:.4f} not below {eps0_max}"

    return A0Report(
        voltage_quality=ok0,
        safety=ok1,
        no_reverse_flow=ok2,
        small_impedance=ok3,
        small_losses=ok4,
        eps0=eps0,
        failures=failures,
    )
