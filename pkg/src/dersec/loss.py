"""Composite defender loss: voltage-regulation, lost-load, and line-loss terms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GammaOutOfRange
from .network import Network
from .powerflow import State

_GAMMA_TOL = 1e-9


@dataclass(frozen=True)
class CostParams:
    """Weights: W in $/(pu^2 voltage violation), C in $/(pu real power shed)."""

    W: np.ndarray
    C: np.ndarray

    @classmethod
    def from_network(cls, net: Network) -> "CostParams":
        return cls(W=net.W, C=net.C)

    @classmethod
    def from_ratio(cls, net: Network, wc_ratio: float) -> "CostParams":
        """Uniform-weight convenience: W = ratio * C at every node."""
        return cls(W=wc_ratio * net.C, C=net.C)


@dataclass(frozen=True)
class LossBreakdown:
    lovr: float
    voll: float
    ll: float

    @property
    def total(self) -> float:
        return self.lovr + self.voll + self.ll


def check_gamma(net: Network, gamma: np.ndarray) -> None:
    lo = net.gamma_lo
    if np.any(gamma[1:] < lo[1:] - _GAMMA_TOL) or np.any(gamma[1:] > 1.0 + _GAMMA_TOL):
        bad = [
            int(i) + 1
            for i in np.flatnonzero(
                (gamma[1:] < lo[1:] - _GAMMA_TOL) | (gamma[1:] > 1.0 + _GAMMA_TOL)
            )
        ]
        raise GammaOutOfRange(f"gamma outside [gamma_lo, 1] at nodes {bad}")


def evaluate_loss(
    state: State,
    gamma: np.ndarray,
    params: CostParams,
    include_ll: bool | None = None,
) -> LossBreakdown:
    """Monetary loss of a state under a load-control vector.

    ``include_ll`` defaults by model: line losses are part of the nonlinear
    game's loss but not of the linear games' losses.
    """
    net = state.net
    check_gamma(net, gamma)
    if include_ll is None:
        include_ll = state.model.kind == "npf"

    shortfall = np.maximum(net.nu_lo[1:] - state.nu[1:], 0.0)
    lovr = float(np.max(params.W[1:] * shortfall)) if net.n else 0.0
    voll = float(
        np.sum(params.C[1:] * (1.0 - gamma[1:]) * np.real(net.sc_nom[1:]))
    )
    ll = float(np.sum(net.r[1:] * state.ell[1:])) if include_ll else 0.0
    return LossBreakdown(lovr=lovr, voll=voll, ll=ll)


def line_loss_cap(net: Network) -> float:
    """The slack term mu_lo*N/(2*mu_lo + 4) bounding the line-loss cost."""
    return net.mu_lo * net.n / (2.0 * net.mu_lo + 4.0)
