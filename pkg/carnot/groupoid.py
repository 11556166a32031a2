# carnot/groupoid.py
"""
Carnot 變形群胚：t ≠ 0 為成對群胚 M×M×ℝ*，t = 0 為密切群叢

箭頭座標採 source 為基準：箭頭 (x, z, u) 的座標 ζ 滿足 x = φ_z(δ_u ζ)
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from errors import NotComposableError, ParameterRangeError, StepLimitError, ZeroScaleError
from settings import BCH_MAX_STEP, DYADIC_U_GRID
from symexpr import make_point
from utils import Scalar, is_exact, to_jsonable, worker_count
from .convergence import estimate_order, order_table, verdict
from .filtration import (AdaptedFrame, FiltrationSpec, adapted_frame, dilation, exp_chart, exp_chart_batch,
                         exp_chart_inverse, levi_constants)
from .newton import newton_solve
from .nilpotent import (DegreeScaling, GradedLieAlgebra, GroupElement, bch, dilation_automorphism,
                        scaled_algebra)

logger = logging.getLogger(__name__)

MATCH_TOL = 1e-12

Vec = Tuple[Scalar, ...]


# ---------------- 箭頭 ----------------
@dataclass(frozen=True)
class PairArrow:
    x: Vec
    y: Vec
    t: Scalar

    def __post_init__(self):
        if self.t == 0:
            raise ZeroScaleError("成對箭頭的 t 不可為 0")


@dataclass(frozen=True)
class OscArrow:
    a: Vec
    xi: GroupElement

    @property
    def t(self) -> Scalar:
        return 0


GroupoidElement = Union[PairArrow, OscArrow]


# ---------------- 上下文 ----------------
class CarnotContext:
    """
    濾過 + 各基點的適配框架 / 密切代數快取
    快取每個基點只寫入一次；寫入由 lock 保護
    """

    def __init__(self, spec: FiltrationSpec):
        self.spec = spec
        self.tolerances = spec.tolerances
        self._cache: Dict[Tuple, Tuple[AdaptedFrame, GradedLieAlgebra]] = {}
        self._lock = threading.Lock()

    def _entry(self, a) -> Tuple[AdaptedFrame, GradedLieAlgebra]:
        point = make_point(a).check_dim(self.spec.dim)
        key = point.coords
        entry = self._cache.get(key)
        if entry is not None:
            return entry
        with self._lock:
            entry = self._cache.get(key)
            if entry is None:
                frame = adapted_frame(self.spec, point)
                algebra = levi_constants(self.spec, point, frame=frame)
                entry = (frame, algebra)
                self._cache[key] = entry
                logger.debug("快取基點 %s：dims=%s", list(key), algebra.dims)
        return entry

    def frame(self, a) -> AdaptedFrame:
        return self._entry(a)[0]

    def algebra(self, a) -> GradedLieAlgebra:
        return self._entry(a)[1]

    def weights(self, a) -> Tuple[int, ...]:
        return self.frame(a).weights

    def element(self, a, coords: Sequence[Scalar]) -> GroupElement:
        return GroupElement(self.algebra(a), tuple(coords))


# ---------------- 結構映射 ----------------
def source(e: GroupoidElement) -> Tuple[Vec, Scalar]:
    if isinstance(e, PairArrow):
        return e.y, e.t
    return e.a, 0


def target(e: GroupoidElement) -> Tuple[Vec, Scalar]:
    if isinstance(e, PairArrow):
        return e.x, e.t
    return e.a, 0


def _same_point(p: Sequence[Scalar], q: Sequence[Scalar]) -> bool:
    if len(p) != len(q):
        return False
    if is_exact(p) and is_exact(q):
        return tuple(p) == tuple(q)
    return all(abs(float(a) - float(b)) <= MATCH_TOL for a, b in zip(p, q))


def compose(e1: GroupoidElement, e2: GroupoidElement) -> GroupoidElement:
    """e1·e2，需要 source(e1) = target(e2)"""
    if isinstance(e1, PairArrow) and isinstance(e2, PairArrow):
        if e1.t != e2.t or not _same_point(e1.y, e2.x):
            raise NotComposableError(f"source(e1)=({e1.y}, {e1.t}) ≠ target(e2)=({e2.x}, {e2.t})")
        return PairArrow(e1.x, e2.y, e1.t)
    if isinstance(e1, OscArrow) and isinstance(e2, OscArrow):
        if not _same_point(e1.a, e2.a) or e1.xi.algebra != e2.xi.algebra:
            raise NotComposableError("兩個 t = 0 箭頭不在同一基點")
        alg = e1.xi.algebra
        return OscArrow(e1.a, GroupElement(alg, bch(alg, e1.xi.coords, e2.xi.coords)))
    raise NotComposableError("不同層（t ≠ 0 與 t = 0）的箭頭不可合成")


def inverse(e: GroupoidElement) -> GroupoidElement:
    if isinstance(e, PairArrow):
        return PairArrow(e.y, e.x, e.t)
    return OscArrow(e.a, GroupElement(e.xi.algebra, tuple(-c for c in e.xi.coords)))


def unit(ctx: CarnotContext, a, t: Scalar) -> GroupoidElement:
    point = tuple(make_point(a).coords)
    if t == 0:
        return OscArrow(point, GroupElement(ctx.algebra(point), ctx.algebra(point).zero()))
    return PairArrow(point, point, t)


def zoom(s: Scalar, e: GroupoidElement) -> GroupoidElement:
    """(x, y, t) ↦ (x, y, st)；(a, ξ, 0) ↦ (a, δ_{1/s} ξ, 0)"""
    if s == 0:
        raise ZeroScaleError("zoom 參數不可為 0")
    if isinstance(e, PairArrow):
        return PairArrow(e.x, e.y, s * e.t)
    r = Fraction(1) / s if isinstance(s, (int, Fraction)) else 1.0 / s
    return OscArrow(e.a, dilation_automorphism(e.xi.algebra, r, e.xi))


# ---------------- 收斂 ----------------
def _check_u(u: float) -> None:
    if not 0 < u <= 0.5:
        raise ParameterRangeError(f"u = {u} 不在 (0, 1/2]")


def _solve_base(ctx: CarnotContext, frame: AdaptedFrame, coeffs: np.ndarray, goal: np.ndarray,
                guess: np.ndarray, steps: int) -> np.ndarray:
    """解 z 使 φ_z(coeffs) = goal"""
    def func(batch):
        return exp_chart_batch(frame, batch, np.repeat(coeffs[None, :], batch.shape[0], axis=0), steps)

    return newton_solve(func, guess, goal, tol=ctx.tolerances.newton,
                        max_iter=ctx.tolerances.groupoid_newton_max_iter, what="groupoid base solve")


def rescaled_product(ctx: CarnotContext, a, xi: Sequence[Scalar], eta: Sequence[Scalar], u: float,
                     target_based: bool = False, steps: Optional[int] = None) -> Tuple[float, ...]:
    """
    source 基準：x = φ_a(δ_u ξ)，由 φ_z(δ_u η) = a 解 z，ζ_u = δ_{1/u} φ_z⁻¹(x) → bch(η, ξ)
    target 基準：z = φ_a(δ_u η)，由 φ_x(δ_u ξ) = a 解 x，ζ_u = δ_{1/u} φ_x⁻¹(z) → bch(ξ, η)
    """
    u = float(u)
    _check_u(u)
    steps = steps or ctx.tolerances.flow_steps
    frame = ctx.frame(a)
    w = frame.weights
    base = frame.base.as_array()
    d_xi = np.array([float(c) for c in dilation(w, u, [float(c) for c in xi])])
    d_eta = np.array([float(c) for c in dilation(w, u, [float(c) for c in eta])])

    if not target_based:
        moved, solved_coeffs = d_xi, d_eta
    else:
        moved, solved_coeffs = d_eta, d_xi

    far = exp_chart(frame, list(moved), steps).as_array()
    guess = exp_chart(frame, list(-solved_coeffs), steps).as_array()
    other = _solve_base(ctx, frame, solved_coeffs, base, guess, steps)
    local = exp_chart_inverse(frame.rebased(other), far, tol=ctx.tolerances.newton,
                              max_iter=ctx.tolerances.groupoid_newton_max_iter, steps=steps)
    return tuple(float(c) for c in dilation(w, 1.0 / u, local))


def limit_product(ctx: CarnotContext, a, xi, eta, target_based: bool = False) -> Tuple[Scalar, ...]:
    alg = ctx.algebra(a)
    return bch(alg, eta, xi) if not target_based else bch(alg, xi, eta)


@dataclass
class SweepResult:
    table: pd.DataFrame
    order: float
    status: str
    limit: Tuple[Scalar, ...]
    target_based: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "order": to_jsonable(self.order),
            "limit": to_jsonable(self.limit),
            "final_error": float(self.table["err"].iloc[-1]) if len(self.table) else None,
            "orientation": "target" if self.target_based else "source",
        }


def convergence_sweep(ctx: CarnotContext, a, xi, eta, u_grid: Sequence[float] = DYADIC_U_GRID,
                      target_based: bool = False, steps: Optional[int] = None) -> SweepResult:
    """
    對每個 u 計算 ‖ζ_u − 極限‖∞，得到 u, err, est_order 表與判定
    """
    limit = limit_product(ctx, a, xi, eta, target_based)
    limit_arr = np.array([float(c) for c in limit])
    ctx.frame(a)  # 先建快取

    def run(u):
        zeta = rescaled_product(ctx, a, xi, eta, u, target_based=target_based, steps=steps)
        return float(np.max(np.abs(np.array(zeta) - limit_arr)))

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        errs = list(pool.map(run, u_grid))

    status = verdict(u_grid, errs, ctx.tolerances)
    return SweepResult(order_table(u_grid, errs, "u"), estimate_order(u_grid, errs), status, limit, target_based)


# ---------------- 多參數群律 ----------------
@dataclass(frozen=True)
class GroupLaw:
    algebra: GradedLieAlgebra

    def __call__(self, g: Sequence[Scalar], h: Sequence[Scalar]) -> Tuple[Scalar, ...]:
        return bch(self.algebra, g, h)


def multiparameter_law(ctx: CarnotContext, a, scaling: DegreeScaling) -> GroupLaw:
    """τ = (τ₂, …, τ_s) 縮放後的 bch 乘法；τ ≡ 1 為密切群律，τ ≡ 0 為交換群"""
    alg = ctx.algebra(a)
    if alg.step > BCH_MAX_STEP:
        raise StepLimitError(f"step {alg.step} 超過上限 {BCH_MAX_STEP}")
    return GroupLaw(scaled_algebra(alg, scaling))
