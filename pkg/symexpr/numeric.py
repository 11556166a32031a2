# symexpr/numeric.py
"""
數值求值與 RK4 流（向量化）

多項式清單先編譯成單項式表：
    E: (m, d) 指數矩陣、C: (m, k) 係數矩陣
對一批點 P (n, d)：M = Π_j P[:, None, j] ** E[None, :, j] → 結果 M @ C (n, k)
"""
import logging
from fractions import Fraction
from typing import List, Sequence, Union

import numpy as np

from errors import DimensionMismatchError, FlowDivergenceError
from settings import FLOW_STEPS
from .expr import Expr
from .point import Point, make_point
from .vector_field import VectorField

logger = logging.getLogger(__name__)


class CompiledExprs:
    """把 k 個同變數的 Expr 編譯成 (n, d) → (n, k) 的向量化求值器"""

    def __init__(self, exprs: Sequence[Expr]):
        exprs = list(exprs)
        if not exprs:
            raise DimensionMismatchError("至少需要一個表示式")
        self.variables = exprs[0].variables
        for e in exprs:
            if e.variables != self.variables:
                raise DimensionMismatchError("所有表示式必須定義在同一組座標上")
        monomials: List[tuple] = sorted({m for e in exprs for m in e.terms})
        index = {m: i for i, m in enumerate(monomials)}
        d = len(self.variables)
        self.exponents = np.array(monomials, dtype=float).reshape(len(monomials), d)
        self.coefficients = np.zeros((len(monomials), len(exprs)))
        for j, e in enumerate(exprs):
            for m, c in e.terms.items():
                self.coefficients[index[m], j] = float(c)
        self.is_constant = all(e.is_constant() for e in exprs)
        self.size = len(exprs)

    @property
    def dim(self) -> int:
        return len(self.variables)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if P.shape[1] != self.dim:
            raise DimensionMismatchError(f"點的維度 {P.shape[1]} 與 {self.dim} 不符")
        if self.exponents.shape[0] == 0:
            return np.zeros((P.shape[0], self.size))
        M = np.prod(P[:, None, :] ** self.exponents[None, :, :], axis=2)
        return M @ self.coefficients


def compile_exprs(exprs: Sequence[Expr]) -> CompiledExprs:
    return CompiledExprs(exprs)


class CompiledFrame:
    """k 個向量場的編譯結果：(n, d) → (n, k, d)"""

    def __init__(self, fields: Sequence[VectorField]):
        fields = list(fields)
        if not fields:
            raise DimensionMismatchError("框架至少需要一個向量場")
        self.k = len(fields)
        self.d = fields[0].dim
        self._compiled = CompiledExprs([c for X in fields for c in X.components])
        self.is_constant = self._compiled.is_constant

    def __call__(self, points: np.ndarray) -> np.ndarray:
        values = self._compiled(points)
        return values.reshape(values.shape[0], self.k, self.d)


def compile_frame(fields: Sequence[VectorField]) -> CompiledFrame:
    return CompiledFrame(fields)


# ---------------- RK4 ----------------
def _rk4(rhs, y0: np.ndarray, time: float, steps: int) -> np.ndarray:
    h = time / steps
    y = y0
    for step in range(1, steps + 1):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise FlowDivergenceError(step)
    return y


def flow(X: VectorField, p: Union[Point, Sequence], time: Union[float, Fraction] = 1.0,
         steps: int = FLOW_STEPS) -> Point:
    """
    X 的時間 time 流，固定 steps 個 RK4 子步
    常數向量場直接取封閉解（有理輸入時結果精確）
    """
    if steps < 1:
        raise ValueError("steps 必須 >= 1")
    point = make_point(p).check_dim(X.dim)
    if time == 0:
        return point
    if X.is_constant():
        direction = [c.constant_term() for c in X.components]
        if point.exact and isinstance(time, (int, Fraction)):
            return Point(tuple(Fraction(x) + Fraction(time) * v for x, v in zip(point.coords, direction)))
        return Point(tuple(float(x) + float(time) * float(v) for x, v in zip(point.coords, direction)))

    compiled = compile_exprs(X.components)
    y = _rk4(lambda y: compiled(y), point.as_array()[None, :], float(time), steps)
    return make_point(y[0])


def frame_flow(frame: CompiledFrame, bases: np.ndarray, coeffs: np.ndarray,
               steps: int = FLOW_STEPS) -> np.ndarray:
    """
    批次計算 exp(Σ_j c_j Y_j) 的時間 1 流
    :param bases: (n, d) 起點
    :param coeffs: (n, k) 係數
    :return: (n, d) 終點
    """
    bases = np.atleast_2d(np.asarray(bases, dtype=float))
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if bases.shape[0] != coeffs.shape[0] or coeffs.shape[1] != frame.k or bases.shape[1] != frame.d:
        raise DimensionMismatchError(f"批次形狀不符: bases {bases.shape}, coeffs {coeffs.shape}")
    if frame.is_constant:
        logger.debug("常數框架，流取封閉解")
        return bases + np.einsum("nk,nkd->nd", coeffs, frame(bases[:1]).repeat(bases.shape[0], axis=0))

    def rhs(y):
        return np.einsum("nk,nkd->nd", coeffs, frame(y))

    return _rk4(rhs, bases, 1.0, steps)
