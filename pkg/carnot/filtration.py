# carnot/filtration.py
"""
濾過 H¹ ⊆ … ⊆ H^{k+1} = TM 的驗證、Levi 結構常數與適配指數座標
"""
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from errors import (DimensionMismatchError, LeviBracketError, RankDeficiencyError,
                    SpecFormatError, ZeroScaleError)
from settings import RANK_TOL, Tolerances
from symexpr import CompiledFrame, Point, VectorField, compile_frame, frame_flow, lie_bracket, make_point, vf_eval
from utils import Scalar, is_exact, to_jsonable, worker_count
from .newton import newton_solve
from .nilpotent import GradedLieAlgebra

logger = logging.getLogger(__name__)


# ---------------- 資料結構 ----------------
@dataclass(frozen=True)
class Layer:
    weight: int
    fields: Tuple[VectorField, ...]


@dataclass(frozen=True)
class FiltrationSpec:
    dim: int
    coords: Tuple[str, ...]
    layers: Tuple[Layer, ...]
    samples: Tuple[Point, ...]
    tolerances: Tolerances = field(default_factory=Tolerances)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1 or len(self.coords) != self.dim:
            raise SpecFormatError(f"dim={self.dim} 與座標名稱 {list(self.coords)} 不符")
        if not self.layers:
            raise SpecFormatError("至少需要一層")
        weights = [layer.weight for layer in self.layers]
        if weights[0] < 1 or any(b <= a for a, b in zip(weights, weights[1:])):
            raise SpecFormatError(f"權重必須為正且嚴格遞增：{weights}")
        for layer in self.layers:
            if not layer.fields:
                raise SpecFormatError(f"權重 {layer.weight} 的層沒有向量場")
            for X in layer.fields:
                if X.variables != self.coords:
                    raise SpecFormatError("向量場的座標與 coords 不符")
        if not self.samples:
            raise SpecFormatError("至少需要一個樣本點")
        for p in self.samples:
            if p.dim != self.dim:
                raise SpecFormatError(f"樣本點 {p.to_list()} 的維度不是 {self.dim}")

    @property
    def depth(self) -> int:
        """k + 1"""
        return self.layers[-1].weight

    def labelled_fields(self) -> List[Tuple[str, int, VectorField]]:
        """("L{weight}.{序號}", weight, X)，序號 1 起算"""
        out = []
        for layer in self.layers:
            for n, X in enumerate(layer.fields, start=1):
                out.append((f"L{layer.weight}.{n}", layer.weight, X))
        return out

    def cumulative(self, weight: int) -> List[VectorField]:
        """權重 <= weight 的所有場"""
        return [X for layer in self.layers if layer.weight <= weight for X in layer.fields]


@dataclass(frozen=True)
class AdaptedFrame:
    base: Point
    fields: Tuple[VectorField, ...]
    weights: Tuple[int, ...]
    labels: Tuple[str, ...] = ()
    compiled: Optional[CompiledFrame] = field(default=None, compare=False, repr=False)
    tolerances: Tolerances = field(default_factory=Tolerances, compare=False, repr=False)

    def __post_init__(self):
        if len(self.fields) != len(self.weights):
            raise DimensionMismatchError("fields 與 weights 長度不符")
        if self.compiled is None:
            object.__setattr__(self, "compiled", compile_frame(self.fields))

    @property
    def dim(self) -> int:
        return len(self.fields)

    @property
    def degree_dims(self) -> Tuple[int, ...]:
        top = max(self.weights)
        return tuple(sum(1 for w in self.weights if w == k) for k in range(1, top + 1))

    def rebased(self, z) -> "AdaptedFrame":
        """保留所選的場，只移動基點（共用編譯結果）"""
        return replace(self, base=make_point(z).check_dim(self.dim))

    def matrix_at(self, p=None) -> np.ndarray:
        """列 j 為 Y_j(p)"""
        p = self.base if p is None else make_point(p)
        return self.compiled(p.as_array()[None, :])[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base": to_jsonable(self.base.coords),
            "labels": list(self.labels),
            "weights": list(self.weights),
            "fields": [X.to_strings() for X in self.fields],
        }


@dataclass
class Violation:
    point_index: int
    point: Tuple
    pair: Tuple[str, str]
    target_weight: int
    residual: Scalar

    def to_dict(self):
        return {
            "point_index": self.point_index,
            "point": to_jsonable(self.point),
            "pair": list(self.pair),
            "target_weight": self.target_weight,
            "residual": to_jsonable(self.residual),
        }


@dataclass
class ValidationReport:
    ranks: List[Dict[int, int]] = field(default_factory=list)   # 每點：weight → rank
    fatal: List[str] = field(default_factory=list)
    violations: List[Violation] = field(default_factory=list)
    max_residual: Scalar = 0
    points_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.fatal and not self.violations

    def require_valid(self) -> None:
        if self.fatal:
            raise RankDeficiencyError("; ".join(self.fatal))
        if self.violations:
            v = self.violations[0]
            raise LeviBracketError(f"括號條件不成立：{v.pair} 於點 {v.point_index}，殘差 {float(v.residual):.3e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "points_checked": self.points_checked,
            "ranks": [{str(w): r for w, r in row.items()} for row in self.ranks],
            "fatal": list(self.fatal),
            "violations": [v.to_dict() for v in self.violations],
            "max_residual": to_jsonable(self.max_residual),
        }


# ---------------- 線性代數（精確 / 浮點兩條路徑）----------------
def _sympy_matrix(rows: Sequence[Sequence[Scalar]]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(c.numerator, c.denominator) for c in map(Fraction, row)] for row in rows])


def _to_fraction(x) -> Fraction:
    x = sympy.Rational(x)
    return Fraction(int(x.p), int(x.q))


def frame_rank(vectors: Sequence[Sequence[Scalar]], tol: float = RANK_TOL) -> int:
    """有理向量用 sympy 精確秩；否則 numpy（相對門檻）"""
    if not vectors:
        return 0
    if all(is_exact(v) for v in vectors):
        return _sympy_matrix(vectors).rank()
    M = np.array([[float(c) for c in v] for v in vectors])
    scale = max(1.0, float(np.abs(M).max()))
    return int(np.linalg.matrix_rank(M, tol=tol * scale))


def span_residual(vectors: Sequence[Sequence[Scalar]], target: Sequence[Scalar]) -> Scalar:
    """target 到 span(vectors) 的最小平方殘差；精確輸入且屬於張成空間時回傳 Fraction(0)"""
    if not any(target):
        return Fraction(0) if is_exact(target) else 0.0
    if not vectors:
        return float(np.linalg.norm([float(c) for c in target]))
    if all(is_exact(v) for v in vectors) and is_exact(target):
        A = _sympy_matrix(vectors)
        if A.rank() == _sympy_matrix(list(vectors) + [target]).rank():
            return Fraction(0)
    A = np.array([[float(c) for c in v] for v in vectors]).T
    b = np.array([float(c) for c in target])
    coeffs = np.linalg.lstsq(A, b, rcond=None)[0]
    return float(np.linalg.norm(A @ coeffs - b))


def solve_in_frame(rows: Sequence[Sequence[Scalar]], target: Sequence[Scalar]) -> Tuple[Scalar, ...]:
    """解 Σ_j c_j rows[j] = target"""
    if all(is_exact(r) for r in rows) and is_exact(target):
        A = _sympy_matrix(rows).T
        b = _sympy_matrix([target]).T
        sol = A.LUsolve(b)
        return tuple(_to_fraction(v) for v in sol)
    A = np.array([[float(c) for c in r] for r in rows]).T
    return tuple(float(v) for v in np.linalg.solve(A, np.array([float(c) for c in target])))


# ---------------- 驗證 ----------------
def _bracket_pairs(spec: FiltrationSpec):
    labelled = spec.labelled_fields()
    pairs = []
    for a in range(len(labelled)):
        for b in range(a + 1, len(labelled)):
            la, wa, Xa = labelled[a]
            lb, wb, Xb = labelled[b]
            target = min(wa + wb, spec.depth)
            pairs.append((la, lb, target, lie_bracket(Xa, Xb)))
    return pairs


def _check_point(spec: FiltrationSpec, pairs, index: int, point: Point, tol: float):
    ranks: Dict[int, int] = {}
    values: Dict[int, List[Tuple]] = {}
    for layer in spec.layers:
        vecs = [vf_eval(X, point.coords) for X in spec.cumulative(layer.weight)]
        values[layer.weight] = vecs
        ranks[layer.weight] = frame_rank(vecs, spec.tolerances.rank)

    violations: List[Violation] = []
    worst: Scalar = 0
    for la, lb, target, B in pairs:
        # H^w 取權重 <= target 的最後一層
        w = max(layer.weight for layer in spec.layers if layer.weight <= target)
        residual = span_residual(values[w], vf_eval(B, point.coords))
        worst = max(worst, residual)
        if residual > tol:
            violations.append(Violation(index, point.coords, (la, lb), target, residual))
    return ranks, violations, worst


def _extra_points(spec: FiltrationSpec, count: int, seed: int) -> List[Point]:
    rng = random.Random(seed)
    out = []
    for k in range(count):
        base = spec.samples[k % len(spec.samples)]
        out.append(Point(tuple(Fraction(c) + Fraction(rng.randint(-8, 8), 64) if isinstance(c, (int, Fraction))
                               else float(c) + rng.randint(-8, 8) / 64.0 for c in base.coords)))
    return out


def check_filtration(spec: FiltrationSpec, tol: Optional[float] = None, extra_points: int = 0,
                     seed: int = 0) -> ValidationReport:
    """
    每個樣本點：各累積框架的秩、以及每對場的括號是否落在 H^{min(wi+wj, k+1)}

    :param extra_points: 另外在樣本點附近取的隨機有理點數（以 seed 固定）
    :return: ValidationReport；秩不足列為 fatal
    """
    tol = spec.tolerances.bracket if tol is None else tol
    pairs = _bracket_pairs(spec)
    points = list(spec.samples) + _extra_points(spec, extra_points, seed)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(lambda ip: _check_point(spec, pairs, ip[0], ip[1], tol), enumerate(points)))

    report = ValidationReport(points_checked=len(points))
    reference: Optional[Dict[int, int]] = None
    for index, (ranks, violations, worst) in enumerate(results):
        report.ranks.append(ranks)
        report.violations.extend(violations)
        report.max_residual = max(report.max_residual, worst)
        if ranks[spec.depth] != spec.dim:
            report.fatal.append(f"點 {index}：H^{spec.depth} 的秩 {ranks[spec.depth]} < 維度 {spec.dim}")
        if reference is None:
            reference = ranks
        elif ranks != reference:
            report.fatal.append(f"點 {index}：秩 {ranks} 與點 0 的 {reference} 不同（秩非常數）")
    for v in report.violations:
        logger.warning("括號條件不成立：%s 於點 %d，殘差 %s", v.pair, v.point_index, v.residual)
    return report


# ---------------- 適配框架 ----------------
def adapted_frame(spec: FiltrationSpec, a) -> AdaptedFrame:
    """
    依層序貪婪挑選：某場在 a 的值能擴大目前獨立集時才收入
    """
    a = make_point(a).check_dim(spec.dim)
    chosen: List[VectorField] = []
    weights: List[int] = []
    labels: List[str] = []
    values: List[Tuple] = []
    rank = 0
    for label, weight, X in spec.labelled_fields():
        v = vf_eval(X, a.coords)
        new_rank = frame_rank(values + [v], spec.tolerances.rank)
        if new_rank > rank:
            chosen.append(X)
            weights.append(weight)
            labels.append(label)
            values.append(v)
            rank = new_rank
        if rank == spec.dim:
            break
    if rank < spec.dim:
        raise RankDeficiencyError(f"在點 {a.to_list()} 只能選出 {rank} 個獨立場（需要 {spec.dim}）")
    return AdaptedFrame(a, tuple(chosen), tuple(weights), tuple(labels), tolerances=spec.tolerances)


def levi_constants(spec: FiltrationSpec, a, tol: Optional[float] = None,
                   frame: Optional[AdaptedFrame] = None) -> GradedLieAlgebra:
    """
    把 [Y_i, Y_j](a) 展開在適配框架上：
    權重 = w_i + w_j 的係數為結構常數、較低權重捨棄（商）、較高權重必須在 tol 內為 0
    """
    tol = spec.tolerances.bracket if tol is None else tol
    frame = frame or adapted_frame(spec, a)
    point = frame.base
    rows = [vf_eval(Y, point.coords) for Y in frame.fields]
    constants: Dict[Tuple[int, int, int], Scalar] = {}
    for i in range(frame.dim):
        for j in range(i + 1, frame.dim):
            target = frame.weights[i] + frame.weights[j]
            value = vf_eval(lie_bracket(frame.fields[i], frame.fields[j]), point.coords)
            if not any(value):
                continue
            coeffs = solve_in_frame(rows, value)
            for m, c in enumerate(coeffs):
                w = frame.weights[m]
                if w == target:
                    if c != 0:
                        constants[(i, j, m)] = c
                elif w > target and abs(c) > tol:
                    raise LeviBracketError(
                        f"[{frame.labels[i]}, {frame.labels[j]}] 在權重 {w} > {target} 的分量 {float(c):.3e}")
    return GradedLieAlgebra.from_constants(frame.degree_dims, constants)


# ---------------- 指數座標 ----------------
def exp_chart(frame: AdaptedFrame, xi: Sequence[Scalar], steps: Optional[int] = None) -> Point:
    """φ_a(ξ) = exp(Σ ξ_j Y_j)(a)，時間 1 的流；steps 預設取框架所屬 spec 的 flow_steps"""
    steps = steps or frame.tolerances.flow_steps
    if len(xi) != frame.dim:
        raise DimensionMismatchError(f"ξ 長度 {len(xi)} 與維度 {frame.dim} 不符")
    if not any(xi):
        return frame.base
    if frame.compiled.is_constant and frame.base.exact and is_exact(xi):
        rows = [vf_eval(Y, frame.base.coords) for Y in frame.fields]
        return Point(tuple(Fraction(frame.base.coords[k]) + sum(Fraction(x) * r[k] for x, r in zip(xi, rows))
                           for k in range(frame.dim)))
    out = frame_flow(frame.compiled, frame.base.as_array()[None, :], np.array([[float(x) for x in xi]]), steps)
    return make_point(out[0])


def exp_chart_batch(frame: AdaptedFrame, bases: np.ndarray, xis: np.ndarray,
                    steps: Optional[int] = None) -> np.ndarray:
    """φ_z(ξ) 的批次版本：每列各自的基點與係數，共用所選的場"""
    return frame_flow(frame.compiled, bases, xis, steps or frame.tolerances.flow_steps)


def exp_chart_inverse(frame: AdaptedFrame, p, tol: Optional[float] = None, max_iter: Optional[int] = None,
                      steps: Optional[int] = None) -> Tuple[float, ...]:
    """
    以阻尼 Newton 解 φ_a(ξ) = p；初值為 a 處的一階近似
    未指定的 tol / max_iter / steps 取自框架所屬 spec 的 tolerances
    """
    tolerances = frame.tolerances
    steps = steps or tolerances.flow_steps
    tol = tolerances.newton if tol is None else tol
    max_iter = tolerances.newton_max_iter if max_iter is None else max_iter
    target = make_point(p).check_dim(frame.dim).as_array()
    base = frame.base.as_array()
    A = frame.matrix_at()
    guess = np.linalg.solve(A.T, target - base)
    if frame.compiled.is_constant:
        return tuple(float(v) for v in guess)

    def func(batch):
        return frame_flow(frame.compiled, np.repeat(base[None, :], batch.shape[0], axis=0), batch, steps)

    xi = newton_solve(func, guess, target, tol=tol, max_iter=max_iter, what="exp_chart_inverse")
    return tuple(float(v) for v in xi)


def dilation(weights: Sequence[int], u: Scalar, xi: Sequence[Scalar]) -> Tuple[Scalar, ...]:
    """δ_u：權重 w 的座標乘上 u^w"""
    if u == 0:
        raise ZeroScaleError("伸縮參數 u 不可為 0")
    if len(weights) != len(xi):
        raise DimensionMismatchError("權重向量與 ξ 長度不符")
    return tuple(x * u ** w for x, w in zip(xi, weights))
