# carnot/nilpotent.py
"""
分級冪零李代數：結構常數、截斷 BCH、指數座標群運算、分級伸縮

基底依度數分塊：前 dims[0] 個為度數 1，接著 dims[1] 個為度數 2，依此類推。
結構常數只存 i < j 的 (i, j, m) → c^m_{ij}，反對稱性由存法保證。
係數可為 Fraction（精確路徑）或 float。
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Dict, Iterable, List, Mapping, Sequence, Tuple

from errors import (AlgebraMismatchError, DimensionMismatchError, StepLimitError,
                    ZeroScaleError)
from settings import BCH_MAX_STEP
from utils import Scalar, to_jsonable

logger = logging.getLogger(__name__)

Coords = Tuple[Scalar, ...]
Key = Tuple[int, int, int]


@dataclass(frozen=True)
class GradedLieAlgebra:
    dims: Tuple[int, ...]
    structure: Tuple[Tuple[Key, Scalar], ...] = ()

    def __post_init__(self):
        if not self.dims or any(n < 0 for n in self.dims):
            raise DimensionMismatchError(f"無效的分級維度: {self.dims}")
        size = sum(self.dims)
        for (i, j, m), c in self.structure:
            if not (0 <= i < j < size and 0 <= m < size):
                raise DimensionMismatchError(f"結構常數索引無效: {(i, j, m)}")
            if self.degrees[m] != self.degrees[i] + self.degrees[j]:
                raise AlgebraMismatchError(
                    f"c[{i},{j}→{m}] 違反分級：{self.degrees[i]} + {self.degrees[j]} ≠ {self.degrees[m]}")

    # ---------------- 建構 ----------------
    @classmethod
    def from_constants(cls, dims: Sequence[int], constants: Mapping[Key, Scalar]) -> "GradedLieAlgebra":
        """
        由 {(i, j, m): c} 建立；i > j 的項自動翻成 -c，零係數捨棄
        """
        merged: Dict[Key, Scalar] = {}
        for (i, j, m), c in constants.items():
            if i == j:
                continue
            if i > j:
                i, j, c = j, i, -c
            merged[(i, j, m)] = merged.get((i, j, m), 0) + c
        items = tuple(sorted((k, v) for k, v in merged.items() if v != 0))
        return cls(tuple(int(n) for n in dims), items)

    @classmethod
    def abelian(cls, dims: Sequence[int]) -> "GradedLieAlgebra":
        return cls(tuple(int(n) for n in dims), ())

    # ---------------- 屬性 ----------------
    @property
    def step(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return sum(self.dims)

    @cached_property
    def degrees(self) -> Tuple[int, ...]:
        return tuple(w + 1 for w, n in enumerate(self.dims) for _ in range(n))

    @cached_property
    def offsets(self) -> Tuple[int, ...]:
        out, acc = [], 0
        for n in self.dims:
            out.append(acc)
            acc += n
        return tuple(out)

    @cached_property
    def constants(self) -> Dict[Key, Scalar]:
        return dict(self.structure)

    @cached_property
    def _pairs(self) -> Dict[Tuple[int, int], List[Tuple[int, Scalar]]]:
        table: Dict[Tuple[int, int], List[Tuple[int, Scalar]]] = {}
        for (i, j, m), c in self.structure:
            table.setdefault((i, j), []).append((m, c))
        return table

    def constant(self, i: int, j: int, m: int) -> Scalar:
        if i == j:
            return 0
        if i > j:
            return -self.constants.get((j, i, m), 0)
        return self.constants.get((i, j, m), 0)

    def block(self, degree: int) -> slice:
        """度數 degree（1 起算）在座標中的範圍"""
        return slice(self.offsets[degree - 1], self.offsets[degree - 1] + self.dims[degree - 1])

    def is_abelian(self) -> bool:
        return not self.structure

    def basis(self, index: int) -> Coords:
        return tuple(Fraction(1) if k == index else Fraction(0) for k in range(self.size))

    def zero(self) -> Coords:
        return tuple(Fraction(0) for _ in range(self.size))

    # ---------------- 檢查 ----------------
    def jacobi_residual(self) -> Scalar:
        """基底三元組上 Jacobi 恆等式的最大分量殘差（有理常數時為精確 0）"""
        worst: Scalar = 0
        n = self.size
        for i, j, k in itertools.combinations(range(n), 3):
            ei, ej, ek = self.basis(i), self.basis(j), self.basis(k)
            total = vec_add(vec_add(bracket(self, ei, bracket(self, ej, ek)),
                                    bracket(self, ej, bracket(self, ek, ei))),
                            bracket(self, ek, bracket(self, ei, ej)))
            worst = max([worst] + [abs(v) for v in total])
        return worst

    def levi_table(self, di: int, dj: int) -> List[List[List[Scalar]]]:
        """
        度數 di × dj → di+dj 的常數區塊
        回傳 T[m][i][j]（各自在所屬度數區塊內 0 起算），已補齊反對稱
        """
        dm = di + dj
        rows = self.dims[dm - 1] if dm <= self.step else 0
        bi, bj = self.block(di), self.block(dj)
        table = [[[0 for _ in range(self.dims[dj - 1])] for _ in range(self.dims[di - 1])] for _ in range(rows)]
        if not rows:
            return table
        bm = self.block(dm)
        for m in range(rows):
            for i in range(self.dims[di - 1]):
                for j in range(self.dims[dj - 1]):
                    table[m][i][j] = self.constant(bi.start + i, bj.start + j, bm.start + m)
        return table

    def to_dict(self) -> Dict:
        """報告用：索引 1 起算"""
        return {
            "dims": list(self.dims),
            "step": self.step,
            "constants": [
                {"i": i + 1, "j": j + 1, "m": m + 1, "c": to_jsonable(c)}
                for (i, j, m), c in self.structure
            ],
        }


@dataclass(frozen=True)
class GroupElement:
    algebra: GradedLieAlgebra
    coords: Coords

    def __post_init__(self):
        if len(self.coords) != self.algebra.size:
            raise DimensionMismatchError(f"群元素座標長度 {len(self.coords)} 與代數維度 {self.algebra.size} 不符")

    def block(self, degree: int) -> Coords:
        return self.coords[self.algebra.block(degree)]


@dataclass(frozen=True)
class DegreeScaling:
    """τ = (τ₂, …, τ_s)：落在度數 m 的常數乘上 τ_m"""
    taus: Tuple[Scalar, ...] = field(default_factory=tuple)

    def tau(self, degree: int) -> Scalar:
        return self.taus[degree - 2]


# ---------------- 向量工具 ----------------
def vec_add(x: Sequence[Scalar], y: Sequence[Scalar]) -> Coords:
    return tuple(a + b for a, b in zip(x, y))


def vec_sub(x: Sequence[Scalar], y: Sequence[Scalar]) -> Coords:
    return tuple(a - b for a, b in zip(x, y))


def vec_scale(s: Scalar, x: Sequence[Scalar]) -> Coords:
    return tuple(s * a for a in x)


def _check_len(alg: GradedLieAlgebra, *vectors: Sequence[Scalar]) -> None:
    for v in vectors:
        if len(v) != alg.size:
            raise DimensionMismatchError(f"向量長度 {len(v)} 與代數維度 {alg.size} 不符")


def _coords_of(alg: GradedLieAlgebra, g) -> Coords:
    if isinstance(g, GroupElement):
        if g.algebra != alg:
            raise AlgebraMismatchError("群元素不屬於此代數")
        return g.coords
    return tuple(g)


# ---------------- 括號 ----------------
def bracket(alg: GradedLieAlgebra, X: Sequence[Scalar], Y: Sequence[Scalar]) -> Coords:
    _check_len(alg, X, Y)
    out: List[Scalar] = [0] * alg.size
    for (i, j), targets in alg._pairs.items():
        w = X[i] * Y[j] - X[j] * Y[i]
        if w == 0:
            continue
        for m, c in targets:
            out[m] += c * w
    return tuple(out)


# ---------------- BCH（Dynkin 字詞和）----------------
@lru_cache(maxsize=None)
def dynkin_coefficients(length: int) -> Tuple[Tuple[Tuple[int, ...], Fraction], ...]:
    """
    長度 length 的字詞 w ∈ {0=X, 1=Y}^length 的 Dynkin 係數
    log(e^X e^Y) 中 w 的係數為 Σ_n (-1)^{n-1}/n Σ Π 1/(r_i! s_i!)，
    其中 w 切成 n 段 X^{r_i} Y^{s_i}；李元素形式再除以 |w| 並取右巢括號
    """
    result = []
    for word in itertools.product((0, 1), repeat=length):
        # ways[pos][n]：w[:pos] 切成 n 段的權重和
        ways: List[Dict[int, Fraction]] = [dict() for _ in range(length + 1)]
        ways[0][0] = Fraction(1)
        for pos in range(length):
            if not ways[pos]:
                continue
            # 區段 w[pos:stop] = X^r Y^s，總長 >= 1
            zeros = 0
            while pos + zeros < length and word[pos + zeros] == 0:
                zeros += 1
            ones = 0
            while pos + zeros + ones < length and word[pos + zeros + ones] == 1:
                ones += 1
            candidates = [(pos + r, r, 0) for r in range(1, zeros)]
            candidates += [(pos + zeros + s, zeros, s) for s in range(ones + 1) if zeros + s >= 1]
            for stop, r, s in candidates:
                w = Fraction(1, math.factorial(r) * math.factorial(s))
                for n, val in ways[pos].items():
                    ways[stop][n + 1] = ways[stop].get(n + 1, Fraction(0)) + val * w
        total = sum((Fraction((-1) ** (n - 1), n) * val for n, val in ways[length].items() if n), Fraction(0))
        coeff = total / length
        if coeff:
            result.append((word, coeff))
    return tuple(result)


def bch(alg: GradedLieAlgebra, X: Sequence[Scalar], Y: Sequence[Scalar]) -> Coords:
    """
    Z = log(exp X · exp Y)，對長度 <= step 的字詞求 Dynkin 和（冪零故截斷精確）
    """
    if alg.step > BCH_MAX_STEP:
        raise StepLimitError(f"step {alg.step} 超過 BCH 係數表上限 {BCH_MAX_STEP}")
    _check_len(alg, X, Y)
    X, Y = tuple(X), tuple(Y)
    result: List[Scalar] = list(vec_add(X, Y))
    if alg.is_abelian():
        return tuple(result)

    letters = (X, Y)
    nested: Dict[Tuple[int, ...], Coords] = {}

    def right_nested(word: Tuple[int, ...]) -> Coords:
        if len(word) == 1:
            return letters[word[0]]
        if word not in nested:
            inner = right_nested(word[1:])
            nested[word] = bracket(alg, letters[word[0]], inner) if any(inner) else inner
        return nested[word]

    for length in range(2, alg.step + 1):
        for word, coeff in dynkin_coefficients(length):
            value = right_nested(word)
            if not any(value):
                continue
            for m, v in enumerate(value):
                if v:
                    result[m] += coeff * v
    return tuple(result)


# ---------------- 群運算 ----------------
def identity(alg: GradedLieAlgebra) -> GroupElement:
    return GroupElement(alg, alg.zero())


def group_mul(alg: GradedLieAlgebra, g, h) -> GroupElement:
    return GroupElement(alg, bch(alg, _coords_of(alg, g), _coords_of(alg, h)))


def group_inv(alg: GradedLieAlgebra, g) -> GroupElement:
    return GroupElement(alg, tuple(-c for c in _coords_of(alg, g)))


# ---------------- 伸縮 / 變形 ----------------
def dilation_automorphism(alg: GradedLieAlgebra, s: Scalar, g) -> GroupElement:
    """δ_s：度數 w 的區塊乘上 s^w"""
    if s == 0:
        raise ZeroScaleError("伸縮參數不可為 0")
    coords = _coords_of(alg, g)
    _check_len(alg, coords)
    return GroupElement(alg, tuple(c * s ** w for c, w in zip(coords, alg.degrees)))


def scaled_algebra(alg: GradedLieAlgebra, scaling: DegreeScaling) -> GradedLieAlgebra:
    if len(scaling.taus) != alg.step - 1:
        raise DimensionMismatchError(f"需要 {alg.step - 1} 個 τ，收到 {len(scaling.taus)}")
    items = []
    for (i, j, m), c in alg.structure:
        scaled = c * scaling.tau(alg.degrees[m])
        if scaled != 0:
            items.append(((i, j, m), scaled))
    return GradedLieAlgebra(alg.dims, tuple(items))


def scaling_from_parameters(params: Sequence[Scalar], step: int) -> DegreeScaling:
    """
    (t₁, t₂, …) → τ_m = t₁⋯t_{m-1}（m = 2..step）；未給的參數視為 1
    """
    params = list(params)
    taus: List[Scalar] = []
    acc: Scalar = Fraction(1)
    for m in range(2, step + 1):
        acc = acc * (params[m - 2] if m - 2 < len(params) else 1)
        taus.append(acc)
    return DegreeScaling(tuple(taus))


# ---------------- 封閉形式 ----------------
def levi_apply(levi: Sequence[Sequence[Sequence[Scalar]]], h: Sequence[Scalar], k: Sequence[Scalar]) -> Coords:
    """ℒ(h, k)_m = Σ_{i,j} T[m][i][j] h_i k_j"""
    out = []
    for row in levi:
        if len(row) != len(h) or any(len(r) != len(k) for r in row):
            raise DimensionMismatchError("ℒ 表與 h 區塊維度不符")
        out.append(sum((row[i][j] * h[i] * k[j] for i in range(len(h)) for j in range(len(k))), 0))
    return tuple(out)


def law_k1(h, n, h2, n2, t: Scalar, levi) -> Tuple[Coords, Coords]:
    """
    (h, n, t)·(h', n', t) = (h + h', n + n' + (t/2) ℒ(h, h'))
    """
    if len(h) != len(h2) or len(n) != len(n2) or len(levi) != len(n):
        raise DimensionMismatchError("h / n 區塊維度不一致")
    L = levi_apply(levi, h, h2)
    half = Fraction(1, 2) if isinstance(t, (int, Fraction)) else 0.5
    return vec_add(h, h2), tuple(a + b + half * t * c for a, b, c in zip(n, n2, L))


def law_k2(h: Sequence[Sequence[Scalar]], k: Sequence[Sequence[Scalar]], t: Scalar, u: Scalar,
           alg: GradedLieAlgebra) -> Tuple[Coords, Coords, Coords]:
    """
    三層（step 3）的雙參數乘法：
      度數 1: h₁ + k₁
      度數 2: h₂ + k₂ + (t/2)[h₁,k₁]
      度數 3: h₃ + k₃ + (tu/2)([h₁,k₂] + [h₂,k₁]) + (t²u/12)([h₁,[h₁,k₁]] + [k₁,[k₁,h₁]])
    """
    if alg.step != 3:
        raise AlgebraMismatchError(f"law_k2 需要 step 3 的代數，收到 step {alg.step}")
    if len(h) != 3 or len(k) != 3:
        raise DimensionMismatchError("h, k 需要三個度數區塊")
    for blocks in (h, k):
        for w, b in enumerate(blocks):
            if len(b) != alg.dims[w]:
                raise DimensionMismatchError(f"度數 {w + 1} 區塊長度應為 {alg.dims[w]}")

    def embed(degree: int, block: Sequence[Scalar]) -> Coords:
        out = [0] * alg.size
        out[alg.block(degree)] = list(block)
        return tuple(out)

    def proj(degree: int, v: Sequence[Scalar]) -> Coords:
        return tuple(v[alg.block(degree)])

    exact = all(isinstance(x, (int, Fraction)) for x in (t, u))
    half = Fraction(1, 2) if exact else 0.5
    twelfth = Fraction(1, 12) if exact else 1.0 / 12.0

    h1, h2, k1, k2 = embed(1, h[0]), embed(2, h[1]), embed(1, k[0]), embed(2, k[1])
    b11 = bracket(alg, h1, k1)
    deg1 = vec_add(h[0], k[0])
    deg2 = vec_add(vec_add(h[1], k[1]), vec_scale(half * t, proj(2, b11)))
    mixed = vec_add(bracket(alg, h1, k2), bracket(alg, h2, k1))
    triple = vec_add(bracket(alg, h1, b11), bracket(alg, k1, bracket(alg, k1, h1)))
    deg3 = vec_add(vec_add(vec_add(h[2], k[2]), vec_scale(half * t * u, proj(3, mixed))),
                   vec_scale(twelfth * t * t * u, proj(3, triple)))
    return tuple(deg1), tuple(deg2), tuple(deg3)


def section_cocycle(levi, h1: Sequence[Scalar], h2: Sequence[Scalar], t: Scalar) -> Coords:
    """
    自然截面 S(h) = (h, 0) 的缺陷：S(h₁)·S(h₂)·S(-h₁-h₂) 的 n 分量 = (t/2)ℒ(h₁, h₂)
    """
    zero_n = tuple(0 for _ in levi)
    a, b = law_k1(h1, zero_n, h2, zero_n, t, levi)
    neg = tuple(-x for x in vec_add(h1, h2))
    _, n = law_k1(a, b, neg, zero_n, t, levi)
    return n


# ---------------- λ 作用（k = 1 的 (h, n, t) 座標）----------------
Triple = Tuple[Coords, Coords, Scalar]


def _inv(s: Scalar) -> Scalar:
    if s == 0:
        raise ZeroScaleError("作用參數不可為 0")
    return Fraction(1) / s if isinstance(s, (int, Fraction)) else 1.0 / s


def lambda_displayed(action: str, s: Scalar, h, n, t) -> Triple:
    """另一種常見寫法：λ¹_s = (h/s, n/s, t/s)，λ⁰_s = (h, n/s, ts)；s² ≠ 1 時兩者都不保持群律"""
    r = _inv(s)
    if action == "lambda1":
        return vec_scale(r, h), vec_scale(r, n), t * r
    if action == "lambda0":
        return tuple(h), vec_scale(r, n), t * s
    raise ValueError(f"未知的作用: {action}")


def lambda_corrected(action: str, s: Scalar, h, n, t) -> Triple:
    """與群律相容的形式：λ⁰_s = (h/s, n/s, st)，λ¹_s = (h, n/s, t/s)"""
    r = _inv(s)
    if action == "lambda0":
        return vec_scale(r, h), vec_scale(r, n), s * t
    if action == "lambda1":
        return tuple(h), vec_scale(r, n), t * r
    raise ValueError(f"未知的作用: {action}")


def check_action_multiplicative(action: Callable[..., Triple], levi, s: Scalar,
                                samples: Iterable[Tuple[Coords, Coords, Coords, Coords, Scalar]],
                                tol: float = 0.0) -> Dict:
    """
    檢查 λ(g·g') = λ(g)·λ(g')（同一 t 纖維上的乘法）
    :param action: 形如 action(s, h, n, t) 的函數
    :param samples: (h, n, h', n', t) 清單
    :param tol: 浮點常數時允許的缺陷；有理資料用 0
    """
    worst: Scalar = 0
    failures = 0
    count = 0
    for h, n, h2, n2, t in samples:
        count += 1
        ph, pn = law_k1(h, n, h2, n2, t, levi)
        lhs = action(s, ph, pn, t)
        ah, an, at = action(s, h, n, t)
        bh, bn, bt = action(s, h2, n2, t)
        rh, rn = law_k1(ah, an, bh, bn, at, levi)
        defect = max([abs(a - b) for a, b in zip(lhs[0] + lhs[1], rh + rn)] + [abs(lhs[2] - at), abs(at - bt)])
        worst = max(worst, defect)
        if defect > tol:
            failures += 1
    return {"samples": count, "failures": failures, "max_defect": worst, "ok": failures == 0}
