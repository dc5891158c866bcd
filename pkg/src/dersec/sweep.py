"""Sweep driver: evaluate the sub-game over a grid of (M, W/C, gamma_lo).

Rows are computed independently (optionally on a thread pool; the LP and
power-flow kernels release the GIL inside numpy/HiGHS) and always emitted in
sorted grid order, so output is deterministic regardless of scheduling.
"""

from __future__ import annotations

import dataclasses
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DersecError
from .game import solve_ad_iterative, solve_ad_oneshot
from .loss import CostParams
from .network import Network
from .powerflow import LPF, calibrate_epsilon, eps_lpf


@dataclass(frozen=True)
class SweepConfig:
    M_values: tuple[int, ...]
    wc_ratios: tuple[float, ...]
    gamma_lo_values: tuple[float, ...]
    model: str = "lpf"               # "lpf" | "eps-lpf" | "npf"
    engine: str = "oneshot"          # "oneshot" | "iterative"

    def __post_init__(self):
        if not (self.M_values and self.wc_ratios and self.gamma_lo_values):
            raise ValueError("sweep axes must be nonempty")


@dataclass(frozen=True)
class SweepRow:
    M: int
    wc_ratio: float
    gamma_lo: float
    model: str
    lovr: float = 0.0
    voll: float = 0.0
    ll: float = 0.0
    total: float = 0.0
    iterations: int = 0
    converged: bool = False
    delta_star: str = ""
    runtime_ms: float = 0.0
    error: str = ""


def with_gamma_lo(net: Network, gamma_lo: float) -> Network:
    """Copy of the network with a uniform load-control floor."""
    arr = np.full(net.n + 1, gamma_lo)
    arr[0] = 0.0
    arr.setflags(write=False)
    return dataclasses.replace(net, gamma_lo=arr)


def _delta_string(net: Network, delta: np.ndarray) -> str:
    return "".join(str(int(delta[i])) for i in net.nodes)


def run_sweep(net: Network, cfg: SweepConfig, workers: int | None = None) -> list[SweepRow]:
    points = sorted(itertools.product(cfg.M_values, cfg.wc_ratios, cfg.gamma_lo_values))
    eps = calibrate_epsilon(net).eps if cfg.model == "eps-lpf" else 0.0

    def evaluate(point) -> SweepRow:
        M, wc, gl = point
        start = time.perf_counter()
        try:
            net_gl = with_gamma_lo(net, gl)
            params = CostParams.from_ratio(net_gl, wc)
            if cfg.engine == "oneshot":
                model = eps_lpf(eps) if cfg.model == "eps-lpf" else LPF
                if cfg.model == "npf":
                    raise DersecError("one-shot engine does not solve the npf model")
                result = solve_ad_oneshot(net_gl, None, M, params, model)
            else:
                result = solve_ad_iterative(net_gl, None, M, params)
            elapsed = (time.perf_counter() - start) * 1e3
            return SweepRow(
                M=M,
                wc_ratio=wc,
                gamma_lo=gl,
                model=cfg.model,
                lovr=result.loss.lovr,
                voll=result.loss.voll,
                ll=result.loss.ll,
                total=result.loss.total,
                iterations=result.iterations,
                converged=result.converged,
                delta_star=_delta_string(net, result.delta_star),
                runtime_ms=elapsed,
            )
        except DersecError as exc:
            elapsed = (time.perf_counter() - start) * 1e3
            return SweepRow(
                M=M,
                wc_ratio=wc,
                gamma_lo=gl,
                model=cfg.model,
                runtime_ms=elapsed,
                error=f"{type(exc).__name__}: {exc}",
            )

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(evaluate, points))
    else:
        rows = [evaluate(p) for p in points]
    return rows
