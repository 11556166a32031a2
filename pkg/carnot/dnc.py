# carnot/dnc.py
"""
法錐變形 dnc(ℝᵈ, V) 的座標圖、函數延拓、函子性映射，
以及帶權重子叢 H 的第二次變形 dnc² 與其兩個 ℝ* 作用

慣例：
  - V 為前 v 個座標；管狀映射 phi 以同一組座標名稱寫成 (x, Y)，x 為 V 座標、Y 為纖維座標
  - phi(x, 0) = (x, 0)，纖維微分在 0 的 V 列為 0、法向區塊 L 為可逆常數矩陣
  - 纖維點一律保存標準法向量 L·X（與所選的管狀資料無關）
"""
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
import sympy

from errors import (CurveMembershipError, DimensionMismatchError, NotComposableError, TubularDataError,
                    VanishingConditionError, ZeroScaleError)
from settings import DYADIC_T_GRID, Tolerances
from symexpr import CompiledExprs, Expr, compile_exprs
from utils import Scalar, is_exact, to_jsonable, worker_count
from .convergence import estimate_order, order_table, verdict
from .filtration import frame_rank
from .groupoid import PairArrow, compose, source, target
from .newton import newton_solve

logger = logging.getLogger(__name__)

Vec = Tuple[Scalar, ...]

# ---------------- 小工具 ----------------
def _inv(s: Scalar) -> Scalar:
    if s == 0:
        raise ZeroScaleError("參數不可為 0")
    return Fraction(1) / s if isinstance(s, (int, Fraction)) else 1.0 / s

def _scale(s: Scalar, v: Sequence[Scalar]) -> Vec:
    return tuple(s * c for c in v)

def _matvec(M: Sequence[Sequence[Scalar]], v: Sequence[Scalar]) -> Vec:
    return tuple(sum((row[j] * v[j] for j in range(len(v))), 0) for row in M)

def _solve(M: Sequence[Sequence[Scalar]], b: Sequence[Scalar]) -> Vec:
    """M x = b；有理輸入精確求解"""
    if all(is_exact(r) for r in M) and is_exact(b):
        A = sympy.Matrix([[sympy.Rational(Fraction(c).numerator, Fraction(c).denominator) for c in row] for row in M])
        rhs = sympy.Matrix([sympy.Rational(Fraction(c).numerator, Fraction(c).denominator) for c in b])
        sol = A.LUsolve(rhs)
        return tuple(Fraction(int(s.p), int(s.q)) for s in sol)
    return tuple(float(x) for x in np.linalg.solve(np.array(M, dtype=float), np.array(b, dtype=float)))

# ---------------- 管狀資料 ----------------
@dataclass(frozen=True)
class TubularData:
    coords: Tuple[str, ...]
    v: int
    phi: Tuple[Expr, ...]
    h: Optional[int] = None
    name: str = ""
    normal_block: Tuple[Tuple[Fraction, ...], ...] = field(default=(), compare=False)
    _compiled: Any = field(default=None, compare=False, repr=False)
    _jacobian: Any = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        d = len(self.coords)
        if not 0 <= self.v <= d:
            raise TubularDataError(f"v = {self.v} 不在 0..{d}")
        if len(self.phi) != d:
            raise TubularDataError(f"phi 需要 {d} 個分量，收到 {len(self.phi)}")
        h = d - self.v if self.h is None else self.h
        if not 0 <= h <= d - self.v:
            raise TubularDataError(f"H 區塊大小 {h} 不在 0..{d - self.v}")
        object.__setattr__(self, "h", h)
        for e in self.phi:
            if e.variables != self.coords:
                raise TubularDataError("phi 的變數必須與 coords 相同")

        # phi(x, 0) = (x, 0)
        zero_fiber = [Expr.coordinate(self.coords, k) if k < self.v else Expr.zero(self.coords) for k in range(d)]
        for k, e in enumerate(self.phi):
            if e.substitute(zero_fiber) != zero_fiber[k]:
                raise TubularDataError(f"phi 的第 {k + 1} 分量在零截面上不等於 {zero_fiber[k]}")

        # 纖維微分：V 列為 0、法向區塊為可逆常數
        block: List[Tuple[Fraction, ...]] = []
        for k, e in enumerate(self.phi):
            row = tuple(e.diff(j).substitute(zero_fiber) for j in range(self.v, d))
            if k < self.v:
                if any(not c.is_zero() for c in row):
                    raise TubularDataError(f"phi 第 {k + 1} 分量的纖維微分在零截面上不為 0")
                continue
            if any(not c.is_constant() for c in row):
                raise TubularDataError("phi 的法向區塊 L 必須為常數矩陣")
            block.append(tuple(c.constant_term() for c in row))
        if self.codim and frame_rank(block) < self.codim:
            raise TubularDataError("phi 的法向區塊 L 不可逆")
        object.__setattr__(self, "normal_block", tuple(block))
        object.__setattr__(self, "_compiled", compile_exprs(self.phi))
        object.__setattr__(self, "_jacobian", compile_exprs([e.diff(j) for e in self.phi for j in range(d)]))

    # ---------------- 建構 ----------------
    @classmethod
    def identity(cls, coords: Sequence[str], v: int, h: Optional[int] = None) -> "TubularData":
        coords = tuple(coords)
        return cls(coords, v, tuple(Expr.coordinate(coords, k) for k in range(len(coords))), h)

    @classmethod
    def parse(cls, coords: Sequence[str], v: int, phi: Sequence[str], h: Optional[int] = None,
              name: str = "") -> "TubularData":
        coords = tuple(coords)
        return cls(coords, v, tuple(Expr.parse(t, coords) for t in phi), h, name)

    # ---------------- 屬性 ----------------
    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def codim(self) -> int:
        return self.dim - self.v

    def apply(self, x: Sequence[Scalar], Y: Sequence[Scalar]) -> Vec:
        """phi(x, Y)；有理輸入時精確"""
        if len(x) != self.v or len(Y) != self.codim:
            raise DimensionMismatchError(f"需要 {self.v} 個 V 座標與 {self.codim} 個纖維座標")
        point = tuple(x) + tuple(Y)
        if is_exact(point):
            return tuple(e.evaluate(point) for e in self.phi)
        return tuple(float(c) for c in self._compiled(np.array([point], dtype=float))[0])

    def to_normal(self, Y: Sequence[Scalar]) -> Vec:
        """纖維座標 → 標準法向量 L·Y"""
        return _matvec(self.normal_block, Y)

    def from_normal(self, X: Sequence[Scalar]) -> Vec:
        if not self.codim:
            return ()
        return _solve(self.normal_block, X)

    def invert(self, m: Sequence[Scalar], guess: Optional[Sequence[float]] = None,
               tol: Optional[float] = None, max_iter: Optional[int] = None) -> Tuple[Vec, Vec]:
        """
        解 phi(x, Y) = m（Newton，解析 Jacobian）
        初值預設為一階近似 (m_V, L⁻¹ m_N)
        """
        tolerances = Tolerances()
        d = self.dim
        m_arr = np.array([float(c) for c in m])
        if guess is None:
            guess = list(m_arr[:self.v]) + [float(c) for c in self.from_normal(list(m_arr[self.v:]))]

        def jac(y):
            return self._jacobian(y[None, :])[0].reshape(d, d)

        sol = newton_solve(self._compiled, np.array(guess, dtype=float), m_arr,
                           tol=tolerances.newton if tol is None else tol,
                           max_iter=tolerances.newton_max_iter if max_iter is None else max_iter,
                           jacobian=jac, what="tubular inverse")
        return tuple(float(c) for c in sol[:self.v]), tuple(float(c) for c in sol[self.v:])

    def to_dict(self) -> Dict[str, Any]:
        return {"coords": list(self.coords), "v": self.v, "h": self.h,
                "phi": [e.to_string() for e in self.phi]}

def product_tubular(tub1: TubularData, tub2: TubularData) -> TubularData:
    """
    直積的管狀資料；座標順序 (x₁, x₂, Y₁, Y₂) 使 V₁×V₂ 仍為前段座標子空間
    纖維中 H 區塊只在兩者皆為全纖維時保留，否則取 H = 0
    """
    if set(tub1.coords) & set(tub2.coords):
        raise TubularDataError("直積的兩個因子座標名稱不可重複")
    coords = (tub1.coords[:tub1.v] + tub2.coords[:tub2.v] + tub1.coords[tub1.v:] + tub2.coords[tub2.v:])

    def embed(tub: TubularData) -> List[Expr]:
        return [Expr.coordinate(coords, name) for name in tub.coords]

    phi1 = [e.substitute(embed(tub1)) for e in tub1.phi]
    phi2 = [e.substitute(embed(tub2)) for e in tub2.phi]
    phi = phi1[:tub1.v] + phi2[:tub2.v] + phi1[tub1.v:] + phi2[tub2.v:]
    full = tub1.h == tub1.codim and tub2.h == tub2.codim
    h = tub1.codim + tub2.codim if full else 0
    return TubularData(coords, tub1.v + tub2.v, tuple(phi), h, name=f"{tub1.name}×{tub2.name}")

# ---------------- dnc 的點 ----------------
@dataclass(frozen=True)
class DncOff:
    m: Vec
    t: Scalar

    def __post_init__(self):
        if self.t == 0:
            raise ZeroScaleError("DncOff 的 t 不可為 0")

@dataclass(frozen=True)
class DncFiber:
    x: Vec
    X: Vec

    @property
    def t(self) -> Scalar:
        return 0

DncPoint = Union[DncOff, DncFiber]

def dnc_chart(tub: TubularData, x: Sequence[Scalar], X: Sequence[Scalar], t: Scalar) -> DncPoint:
    """(x, X, t) ↦ (phi(x, tX), t)；t = 0 ↦ Fiber(x, L X)"""
    if t == 0:
        if len(x) != tub.v or len(X) != tub.codim:
            raise DimensionMismatchError("座標維度與管狀資料不符")
        return DncFiber(tuple(x), tub.to_normal(X))
    return DncOff(tub.apply(x, _scale(t, X)), t)

def dnc_chart_inverse(tub: TubularData, p: DncPoint, guess: Optional[Sequence[float]] = None) -> Tuple[Vec, Vec, Scalar]:
    """座標圖的反函數：DncPoint → (x, X, t)"""
    if isinstance(p, DncFiber):
        return tuple(p.x), tub.from_normal(p.X), 0
    x, Y = tub.invert(p.m, guess=guess)
    return x, _scale(1.0 / float(p.t), Y), p.t

def dnc_lambda(u: Scalar, p: DncPoint) -> DncPoint:
    """λ_u(m, t) = (m, ut)；λ_u(x, X, 0) = (x, X/u, 0)"""
    r = _inv(u)
    if isinstance(p, DncOff):
        return DncOff(p.m, u * p.t)
    return DncFiber(p.x, _scale(r, p.X))

def trivialize_dnc(p: DncPoint, v: int) -> Vec:
    """V 為座標子空間時 dnc(ℝᵈ, V) ≅ ℝ^{d+1}：(m, t) ↦ (m_V, m_N / t, t)，(x, X, 0) ↦ (x, X, 0)"""
    if isinstance(p, DncOff):
        r = _inv(p.t)
        return tuple(p.m[:v]) + _scale(r, p.m[v:]) + (p.t,)
    return tuple(p.x) + tuple(p.X) + (0,)

# ---------------- 延拓函數 dnc(f) ----------------
@dataclass
class LimitReport:
    name: str
    table: Any
    order: float
    status: str
    per_probe: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "status": self.status, "order": to_jsonable(self.order),
                "max_error": float(self.table["err"].max()) if len(self.table) else 0.0}

class DncFunction:
    """
    dnc(f)(m, t) = f(m)/t；dnc(f)(x, X, 0) = df_x(X)
    f 必須在 V 上消失
    """

    def __init__(self, tub: TubularData, f: Expr):
        if f.variables != tub.coords:
            raise DimensionMismatchError("f 的變數必須與管狀資料座標相同")
        zero_fiber = [Expr.coordinate(tub.coords, k) if k < tub.v else Expr.zero(tub.coords)
                      for k in range(tub.dim)]
        if not f.substitute(zero_fiber).is_zero():
            raise VanishingConditionError(f"f = {f} 在 V 上不為 0")
        self.tub = tub
        self.f = f
        self._normal_grad = [f.diff(j) for j in range(tub.v, tub.dim)]

    def differential(self, x: Sequence[Scalar], X: Sequence[Scalar]) -> Scalar:
        """df_x 作用在標準法向量 X 上（V 方向的導數在 V 上為 0）"""
        point = tuple(x) + tuple(0 for _ in range(self.tub.codim))
        return sum((g.evaluate(point) * c for g, c in zip(self._normal_grad, X)), 0)

    def __call__(self, p: DncPoint) -> Scalar:
        if isinstance(p, DncFiber):
            return self.differential(p.x, p.X)
        value = self.f.evaluate(p.m)
        return value * _inv(p.t)

    def limit_test(self, probes: Sequence[Tuple[Sequence[Scalar], Sequence[Scalar]]],
                   t_grid: Sequence[float] = DYADIC_T_GRID, tolerances: Optional[Tolerances] = None) -> LimitReport:
        """
        max_probe |f(phi(x, tX))/t − df_x(L X)| 對 t 的衰減階
        """
        errs = []
        for t in t_grid:
            worst = 0.0
            for x, X in probes:
                limit = self(dnc_chart(self.tub, x, X, 0))
                value = self(dnc_chart(self.tub, x, X, t))
                worst = max(worst, abs(float(value) - float(limit)))
            errs.append(worst)
        order = estimate_order(t_grid, errs)
        return LimitReport(f"dnc({self.f})", order_table(t_grid, errs, "t"), order,
                           verdict(t_grid, errs, tolerances))

def dnc_smooth_fn(tub: TubularData, f: Union[Expr, str]) -> DncFunction:
    if isinstance(f, str):
        f = Expr.parse(f, tub.coords)
    return DncFunction(tub, f)

# ---------------- 座標變換 ----------------
@dataclass
class TransitionReport:
    table: Any                       # probe, t, err
    order: float
    status: str
    per_probe: List[Dict[str, Any]]

    def to_dict(self) -> Dict[str, Any]:
        return {"status": self.status, "order": to_jsonable(self.order), "per_probe": self.per_probe}

def transition_limit(tub1: TubularData, tub2: TubularData, x: Sequence[Scalar], X: Sequence[Scalar]) -> Tuple[Vec, Vec]:
    """ψ_0(x, X) = (x, L₂⁻¹ L₁ X)"""
    return tuple(x), tub2.from_normal(tub1.to_normal(X))

def chart_transition(tub1: TubularData, tub2: TubularData, x, X, t) -> Tuple[Vec, Vec]:
    """ψ_t = φ̃₂⁻¹ ∘ φ̃₁；Newton 初值 (x, tX)"""
    if t == 0:
        return transition_limit(tub1, tub2, x, X)
    p = dnc_chart(tub1, x, X, t)
    guess = [float(c) for c in x] + [float(t) * float(c) for c in X]
    x2, X2, _ = dnc_chart_inverse(tub2, p, guess=guess)
    return x2, X2

def chart_transition_test(tub1: TubularData, tub2: TubularData,
                          probes: Sequence[Tuple[Sequence[Scalar], Sequence[Scalar]]],
                          t_grid: Sequence[float] = DYADIC_T_GRID,
                          tolerances: Optional[Tolerances] = None) -> TransitionReport:
    """
    ψ_t(x, X) → (x, L₂⁻¹L₁X) 的收斂階；每個 probe 各自一張誤差表
    """
    if (tub1.dim, tub1.v) != (tub2.dim, tub2.v):
        raise TubularDataError("兩組管狀資料的 (d, v) 不同")

    def run_probe(item):
        index, (x, X) = item
        lx, lX = transition_limit(tub1, tub2, x, X)
        limit = np.array([float(c) for c in lx + lX])
        errs = []
        for t in t_grid:
            x2, X2 = chart_transition(tub1, tub2, x, X, t)
            errs.append(float(np.max(np.abs(np.array([float(c) for c in x2 + X2]) - limit))))
        return index, errs

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(run_probe, enumerate(probes)))

    rows = []
    per_probe = []
    worst = [0.0] * len(t_grid)
    for index, errs in results:
        for k, (t, e) in enumerate(zip(t_grid, errs)):
            rows.append({"probe": index, "t": float(t), "err": e})
            worst[k] = max(worst[k], e)
        per_probe.append({"probe": index, "order": to_jsonable(estimate_order(t_grid, errs)),
                          "status": verdict(t_grid, errs, tolerances), "max_error": max(errs)})
    table = pd.DataFrame(rows, columns=["probe", "t", "err"])
    return TransitionReport(table, estimate_order(t_grid, worst), verdict(t_grid, worst, tolerances), per_probe)

# ---------------- 函子性 ----------------
class DncMap:
    """
    f: ℝᵈ → ℝ^{d'}，f(V) ⊆ V' 時的 dnc(f)：
    (m, t) ↦ (f(m), t)；(x, X, 0) ↦ (f(x), df_x X, 0)
    """

    def __init__(self, f: Sequence[Expr], source: TubularData, target: TubularData):
        f = tuple(f)
        if len(f) != target.dim or any(e.variables != source.coords for e in f):
            raise DimensionMismatchError("f 的分量數或變數與管狀資料不符")
        zero_fiber = [Expr.coordinate(source.coords, k) if k < source.v else Expr.zero(source.coords)
                      for k in range(source.dim)]
        for k in range(target.v, target.dim):
            if not f[k].substitute(zero_fiber).is_zero():
                raise VanishingConditionError(f"f 未把 V 映入 V'：第 {k + 1} 分量在 V 上不為 0")
        self.f = f
        self.source = source
        self.target = target
        self._jac = [[e.diff(j) for j in range(source.dim)] for e in f]
        self._compiled: CompiledExprs = compile_exprs(f)

    @classmethod
    def parse(cls, texts: Sequence[str], source: TubularData, target: TubularData) -> "DncMap":
        return cls([Expr.parse(t, source.coords) for t in texts], source, target)

    def jacobian(self, point: Sequence[Scalar]) -> List[List[Scalar]]:
        return [[e.evaluate(point) for e in row] for row in self._jac]

    def _eval(self, point: Sequence[Scalar]) -> Vec:
        if is_exact(point):
            return tuple(e.evaluate(point) for e in self.f)
        return tuple(float(c) for c in self._compiled(np.array([point], dtype=float))[0])

    def __call__(self, p: DncPoint) -> DncPoint:
        if isinstance(p, DncOff):
            return DncOff(self._eval(p.m), p.t)
        base = tuple(p.x) + tuple(0 for _ in range(self.source.codim))
        image = self._eval(base)
        J = self.jacobian(base)
        normal_rows = [row[self.source.v:] for row in J[self.target.v:]]
        return DncFiber(image[:self.target.v], _matvec(normal_rows, p.X))

    def continuity_test(self, probes, t_grid: Sequence[float] = DYADIC_T_GRID,
                        tolerances: Optional[Tolerances] = None) -> LimitReport:
        """φ̃'⁻¹(dnc(f)(φ̃(x, X, t))) → φ̃'⁻¹(dnc(f)(x, LX, 0))"""
        errs = []
        for t in t_grid:
            worst = 0.0
            for x, X in probes:
                lx, lX, _ = dnc_chart_inverse(self.target, self(dnc_chart(self.source, x, X, 0)))
                limit = [float(c) for c in lx + lX]
                q = self(dnc_chart(self.source, x, X, t))
                guess = limit[:self.target.v] + [float(t) * c for c in limit[self.target.v:]]
                qx, qX, _ = dnc_chart_inverse(self.target, q, guess=guess)
                worst = max(worst, max(abs(float(a) - b) for a, b in zip(qx + qX, limit)))
            errs.append(worst)
        return LimitReport("dnc(f) continuity", order_table(t_grid, errs, "t"),
                           estimate_order(t_grid, errs), verdict(t_grid, errs, tolerances))

    def classify(self, x: Sequence[Scalar]) -> Dict[str, bool]:
        """
        在 (x, 0) 處：
          submersion ⇔ df_x 與 d(f|V)_x 皆為滿射
          immersion  ⇔ df_x 單射且 df_x⁻¹(TV') = TV
        """
        base = tuple(x) + tuple(0 for _ in range(self.source.codim))
        J = self.jacobian(base)
        d, d2 = self.source.dim, self.target.dim
        v, v2 = self.source.v, self.target.v
        rank_full = frame_rank(J) if J else 0
        rank_v = frame_rank([row[:v] for row in J[:v2]]) if v and v2 else 0
        normal = [row for row in J[v2:]]
        rank_n = frame_rank(normal) if normal and d else 0
        return {
            "submersion": rank_full == d2 and rank_v == v2,
            "immersion": rank_full == d and rank_n == d - v,
        }

def dnc_map(f, source: TubularData, target: TubularData) -> DncMap:
    if f and isinstance(f[0], str):
        return DncMap.parse(f, source, target)
    return DncMap(f, source, target)

# ---------------- dnc² ----------------
@dataclass(frozen=True)
class Dnc2Off:
    """(m, τ, u)，τ = ut ≠ 0，u ≠ 0"""
    m: Vec
    tau: Scalar
    u: Scalar

@dataclass(frozen=True)
class Dnc2Normal:
    """(x, X, u)：X 為標準法向量，t = 0，u ≠ 0"""
    x: Vec
    X: Vec
    u: Scalar

@dataclass(frozen=True)
class Dnc2Cone:
    """(x, h, n, t)，u = 0"""
    x: Vec
    h: Vec
    n: Vec
    t: Scalar

Dnc2Point = Union[Dnc2Off, Dnc2Normal, Dnc2Cone]

def _split_fiber(tub: TubularData, h: Sequence[Scalar], n: Sequence[Scalar]) -> None:
    if len(h) != tub.h or len(n) != tub.codim - tub.h:
        raise DimensionMismatchError(f"h 需要 {tub.h} 個、n 需要 {tub.codim - tub.h} 個座標")

def dnc2_chart(tub: TubularData, x, h, n, t: Scalar, u: Scalar) -> Dnc2Point:
    """
    (x, h, n, t, u) ↦ (phi(x, (uth, u²tn)), ut, u)   tu ≠ 0
                    ↦ (x, L(h, un), u)                t = 0, u ≠ 0
                    ↦ (x, h, n, t)                    u = 0
    """
    _split_fiber(tub, h, n)
    if u == 0:
        return Dnc2Cone(tuple(x), tuple(h), tuple(n), t)
    if t == 0:
        return Dnc2Normal(tuple(x), tub.to_normal(tuple(h) + _scale(u, n)), u)
    fiber = _scale(u * t, h) + _scale(u * u * t, n)
    return Dnc2Off(tub.apply(x, fiber), u * t, u)

def lambda1(v: Scalar, p: Dnc2Point) -> Dnc2Point:
    """作用在第二個參數 u 上"""
    r = _inv(v)
    if isinstance(p, Dnc2Off):
        return Dnc2Off(p.m, p.tau, v * p.u)
    if isinstance(p, Dnc2Normal):
        return Dnc2Normal(p.x, p.X, v * p.u)
    return Dnc2Cone(p.x, p.h, _scale(r, p.n), p.t * r)

def lambda0(v: Scalar, p: Dnc2Point) -> Dnc2Point:
    """作用在第一個參數上（dnc(M, V) 的 ℝ* 作用）"""
    r = _inv(v)
    if isinstance(p, Dnc2Off):
        return Dnc2Off(p.m, v * p.tau, p.u)
    if isinstance(p, Dnc2Normal):
        return Dnc2Normal(p.x, _scale(r, p.X), p.u)
    return Dnc2Cone(p.x, _scale(r, p.h), _scale(r, p.n), v * p.t)

def pi01(p: Dnc2Point) -> Tuple[Scalar, Scalar]:
    """投影到 (π⁰, π¹) ∈ ℝ²"""
    if isinstance(p, Dnc2Off):
        return p.tau * _inv(p.u), p.u
    if isinstance(p, Dnc2Normal):
        return 0, p.u
    return p.t, 0

@dataclass
class RelationReport:
    checks: Dict[str, Dict[str, Any]]

    @property
    def ok(self) -> bool:
        return all(c["failures"] == 0 for c in self.checks.values())

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "checks": self.checks}

DEFAULT_RELATION_GRID = (Fraction(-3), Fraction(1, 3), Fraction(1, 2), Fraction(1), Fraction(2))

def lambda_relation_test(t_grid: Sequence[Scalar] = DEFAULT_RELATION_GRID,
                         u_grid: Sequence[Scalar] = DEFAULT_RELATION_GRID,
                         s_grid: Sequence[Scalar] = DEFAULT_RELATION_GRID,
                         tub: Optional[TubularData] = None) -> RelationReport:
    """
    在 dnc² 的每個格點上精確驗證：
      π⁰¹ λ¹_s = (π⁰/s, s π¹)、π⁰¹ λ⁰_s = (s π⁰, π¹)
      對角作用 λ¹_s λ⁰_s 保持 π⁰；λ⁰、λ¹ 交換
      座標圖的等變性與 dnc(ℝᵈ, V) 的 ℝ^{d+1} 表示
    """
    tub = tub or TubularData.identity(("x", "y"), 1, 1)
    x = tuple(Fraction(1, 3) for _ in range(tub.v))
    h = tuple(Fraction(2, 5) for _ in range(tub.h))
    n = tuple(Fraction(-1, 7) for _ in range(tub.codim - tub.h))
    names = ["pi_lambda1", "pi_lambda0", "diagonal_pi0", "commute", "chart_lambda1", "chart_lambda0",
             "dnc_trivialization"]
    checks = {k: {"checked": 0, "failures": 0} for k in names}

    def record(name: str, ok: bool) -> None:
        checks[name]["checked"] += 1
        if not ok:
            checks[name]["failures"] += 1

    t_values = list(t_grid) + [0]
    u_values = list(u_grid) + [0]
    for t in t_values:
        for u in u_values:
            p = dnc2_chart(tub, x, h, n, t, u)
            p0, p1 = pi01(p)
            for s in s_grid:
                r = Fraction(1) / s
                record("pi_lambda1", pi01(lambda1(s, p)) == (p0 * r, s * p1))
                record("pi_lambda0", pi01(lambda0(s, p)) == (s * p0, p1))
                record("diagonal_pi0", pi01(lambda1(s, lambda0(s, p)))[0] == p0)
                record("commute", lambda1(s, lambda0(s, p)) == lambda0(s, lambda1(s, p)))
                # 座標圖：λ¹ ↔ (h, n/s, t/s, su)，λ⁰ ↔ (h/s, n/s, st, u)
                record("chart_lambda1", lambda1(s, p) == dnc2_chart(tub, x, h, _scale(r, n), t * r, s * u))
                record("chart_lambda0", lambda0(s, p) == dnc2_chart(tub, x, _scale(r, h), _scale(r, n), s * t, u))
            if u != 0:
                q = dnc_chart(tub, x, h + _scale(u, n), t)
                for s in s_grid:
                    lhs = trivialize_dnc(dnc_lambda(s, q), tub.v)
                    base = trivialize_dnc(q, tub.v)
                    rhs = base[:tub.v] + _scale(Fraction(1) / s, base[tub.v:-1]) + (s * base[-1],)
                    record("dnc_trivialization", lhs == rhs)
    return RelationReport(checks)

# ---------------- 曲線模型 ----------------
@dataclass(frozen=True)
class CurveClass:
    x: Vec
    h: Vec
    n: Vec

    def to_dict(self):
        return {"x": to_jsonable(self.x), "h": to_jsonable(self.h), "n": to_jsonable(self.n)}

CURVE_VAR = ("s",)

def _as_curve(curve: Sequence[Union[Expr, str]]) -> List[Expr]:
    out = []
    for c in curve:
        e = Expr.parse(c, CURVE_VAR) if isinstance(c, str) else c
        if e.dim != 1:
            raise DimensionMismatchError("曲線分量必須是單變數表示式")
        out.append(e)
    return out

def _jet(e: Expr, order: int) -> Scalar:
    for _ in range(order):
        e = e.diff(0)
    return e.evaluate((Fraction(0),))

def curve_class(curve: Sequence[Union[Expr, str]], tub: TubularData) -> CurveClass:
    """
    由 2-jet 讀出類別 (x, h, n)：
      x = f(0)；h = L⁻¹f'(0) 的 H 區塊（其餘區塊須為 0）；
      (x₂, Y₂) = Dφ⁻¹(f''(0) − D²φ[w₁, w₁])，n = ½·Y₂ 的非 H 區塊
    """
    f = _as_curve(curve)
    if len(f) != tub.dim:
        raise DimensionMismatchError(f"曲線需要 {tub.dim} 個分量")
    f0 = [_jet(e, 0) for e in f]
    f1 = [_jet(e, 1) for e in f]
    f2 = [_jet(e, 2) for e in f]
    if any(c != 0 for c in f0[tub.v:]):
        raise CurveMembershipError("f(0) 不在 V 上")
    x0 = tuple(f0[:tub.v])
    Y1 = tub.from_normal(f1[tub.v:])
    if any(c != 0 for c in Y1[tub.h:]):
        raise CurveMembershipError("f'(0) 不在 TV ⊕ H 中")
    w1 = tuple(f1[:tub.v]) + tuple(Y1)
    base = x0 + tuple(Fraction(0) for _ in range(tub.codim))

    d = tub.dim
    D = [[e.diff(j).evaluate(base) for j in range(d)] for e in tub.phi]
    second = []
    for e in tub.phi:
        total = Fraction(0)
        for a in range(d):
            if w1[a] == 0:
                continue
            da = e.diff(a)
            for b in range(d):
                if w1[b] != 0:
                    total += da.diff(b).evaluate(base) * w1[a] * w1[b]
        second.append(total)
    w2 = _solve(D, [a - b for a, b in zip(f2, second)])
    Y2 = w2[tub.v:]
    half = Fraction(1, 2)
    return CurveClass(x0, tuple(Y1[:tub.h]), tuple(half * c for c in Y2[tub.h:]))

def chart_curve(tub: TubularData, x: Sequence[Scalar], h: Sequence[Scalar], n: Sequence[Scalar]) -> List[Expr]:
    """s ↦ phi(x, (s h, s² n))（精確代入）"""
    _split_fiber(tub, h, n)
    s = Expr.coordinate(CURVE_VAR, 0)
    args = [Expr.constant(CURVE_VAR, Fraction(c)) for c in x]
    args += [s * Fraction(c) for c in h] + [s * s * Fraction(c) for c in n]
    return [e.substitute(args) for e in tub.phi]

def curve_pushforward(g: Sequence[Expr], curve: Sequence[Union[Expr, str]], target: TubularData) -> CurveClass:
    """[f] ↦ [g∘f]，以目標管狀資料讀出類別"""
    f = _as_curve(curve)
    composed = [e.substitute(f) for e in g]
    return curve_class(composed, target)

def weighted_chart(tub: TubularData, x, h, n, u: Scalar) -> Union[DncOff, CurveClass]:
    """(x, h, n, u) ↦ (phi(x, (uh, u²n)), u)；u = 0 ↦ 曲線類別 (x, h, n)"""
    _split_fiber(tub, h, n)
    if u == 0:
        return CurveClass(tuple(x), tuple(h), tuple(n))
    return DncOff(tub.apply(x, _scale(u, h) + _scale(u * u, n)), u)

# ---------------- 商空間 ----------------
def _pair_orbit(start, V_sample: Sequence[Vec], t: Scalar) -> set:
    """start 在右平移 (w, w', t)（w, w' ∈ V 樣本）下的軌道，逐層合成到封閉"""
    orbit = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for arrow in frontier:
            y, _ = source(arrow)
            for w in V_sample:
                image = compose(arrow, PairArrow(y, w, t))
                if image not in orbit:
                    orbit.add(image)
                    nxt.append(image)
        frontier = nxt
    return orbit

def quotient_fiber_check(d: int, v: int, samples: int = 3, seed: int = 0,
                         other: Optional[Sequence[Scalar]] = None) -> Dict[str, Any]:
    """
    dnc(ℝᵈ×ℝᵈ, ℝᵈ)/dnc(V×V, V) 與 dnc(ℝᵈ, V) 的比較：
      t ≠ 0：(x, w, t) 在右平移 (w, w', t) 下的軌道為 {(x, ·, t)}，x ≠ x' 的軌道互不相交
      t = 0：(ℝ^{2d} / (Δ + V×V)) → ℝᵈ/V 的典範映射為同構
    :param other: 第二個起點 x'（預設為與 x 不同的隨機點）
    """
    if not 0 <= v <= d:
        raise DimensionMismatchError(f"v = {v} 不在 0..{d}")
    rng = random.Random(seed)
    V_sample = []
    while len(V_sample) < samples:
        w = tuple(Fraction(len(V_sample) + 1) if k == 0 else Fraction(rng.randint(-9, 9), 4) for k in range(v))
        V_sample.append(w + tuple(Fraction(0) for _ in range(d - v)))
    x = tuple(Fraction(rng.randint(-9, 9), 5) for _ in range(d))
    x2 = tuple(other) if other is not None else tuple(c + 1 for c in x)
    if len(x2) != d:
        raise DimensionMismatchError(f"other 需要 {d} 個座標")
    t = Fraction(1, 2)

    start = PairArrow(x, V_sample[0], t)
    orbit = _pair_orbit(start, V_sample, t)
    orbit_ok = (len(orbit) == len(set(V_sample))
                and all(target(o) == (x, t) for o in orbit)
                and {source(o)[0] for o in orbit} == set(V_sample))
    # 來源不符的平移不可合成
    if len(set(V_sample)) > 1:
        try:
            compose(start, PairArrow(V_sample[1], V_sample[0], t))
            orbit_ok = False
        except NotComposableError:
            pass
    orbit2 = _pair_orbit(PairArrow(x2, V_sample[0], t), V_sample, t)
    separated = orbit.isdisjoint(orbit2) and target(next(iter(orbit2))) != (x, t)

    # t = 0：W = ℝ^{2d}，S = Δ + (V × V)
    basis_W = [tuple(1 if k == i else 0 for k in range(2 * d)) for i in range(2 * d)]
    S = [tuple(1 if k in (i, d + i) else 0 for k in range(2 * d)) for i in range(d)]
    S += [tuple(1 if k == i else 0 for k in range(2 * d)) for i in range(v)]
    S += [tuple(1 if k == d + i else 0 for k in range(2 * d)) for i in range(v)]
    dim_quotient = 2 * d - frame_rank(S)

    def canonical(w: Sequence[int]) -> Tuple[int, ...]:
        # (a, b) ↦ (a − b) 的法向分量
        return tuple(w[i] - w[d + i] for i in range(v, d))

    kills_S = all(not any(canonical(s)) for s in S)
    images = [canonical(w) for w in basis_W]
    image_rank = frame_rank(images) if d - v else 0
    return {
        "d": d, "v": v,
        "quotient_dim": dim_quotient,
        "normal_dim": d - v,
        "orbit_size": len(orbit),
        "orbit_ok": orbit_ok,
        "point": x,
        "other": x2,
        "orbits_disjoint": separated,
        "canonical_map_well_defined": kills_S,
        "canonical_map_onto": image_rank == d - v,
        "ok": orbit_ok and separated and kills_S and image_rank == d - v and dim_quotient == d - v,
    }
