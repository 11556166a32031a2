# symexpr/vector_field.py
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

from errors import DimensionMismatchError
from .expr import Expr


class VectorField:
    """
    座標圖上的多項式向量場 X = Σ X^i ∂/∂x_i
    components[i] 即 ∂/∂x_i 的係數
    """

    __slots__ = ("components",)

    def __init__(self, components: Sequence[Expr]):
        comps = tuple(components)
        if not comps:
            raise DimensionMismatchError("向量場至少需要一個分量")
        variables = comps[0].variables
        if len(comps) != len(variables):
            raise DimensionMismatchError(f"分量數 {len(comps)} 與座標維度 {len(variables)} 不符")
        for c in comps:
            if c.variables != variables:
                raise DimensionMismatchError("所有分量必須定義在同一組座標上")
        self.components: Tuple[Expr, ...] = comps

    # ---------------- 建構 ----------------
    @classmethod
    def parse(cls, texts: Sequence[str], variables: Sequence[str]) -> "VectorField":
        """["1", "0", "-y/2"] → ∂x − (y/2)∂z"""
        if len(texts) != len(variables):
            raise DimensionMismatchError(f"向量場需要 {len(variables)} 個分量，收到 {len(texts)}")
        return cls([Expr.parse(t, variables) for t in texts])

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "VectorField":
        return cls([Expr.zero(variables) for _ in variables])

    @classmethod
    def coordinate(cls, variables: Sequence[str], index: int) -> "VectorField":
        """∂/∂x_index（0 起算）"""
        variables = tuple(variables)
        if not 0 <= index < len(variables):
            raise DimensionMismatchError(f"座標索引 {index} 超出範圍")
        return cls([Expr.constant(variables, 1 if k == index else 0) for k in range(len(variables))])

    # ---------------- 屬性 ----------------
    @property
    def variables(self) -> Tuple[str, ...]:
        return self.components[0].variables

    @property
    def dim(self) -> int:
        return len(self.components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def is_constant(self) -> bool:
        return all(c.is_constant() for c in self.components)

    # ---------------- 作用 ----------------
    def apply(self, f: Expr) -> Expr:
        """X(f) = Σ X^i ∂_i f"""
        self._check_expr(f)
        total = Expr.zero(self.variables)
        for i, c in enumerate(self.components):
            if not c.is_zero():
                total = total + c * f.diff(i)
        return total

    def scale(self, f: Union[Expr, int, Fraction]) -> "VectorField":
        """fX"""
        return VectorField([f * c for c in self.components])

    def _check_expr(self, f: Expr) -> None:
        if f.variables != self.variables:
            raise DimensionMismatchError(f"函數變數 {f.variables} 與向量場 {self.variables} 不符")

    def _check_field(self, other: "VectorField") -> None:
        if not isinstance(other, VectorField) or other.variables != self.variables:
            raise DimensionMismatchError("兩個向量場不在同一座標圖上")

    # ---------------- 算術 ----------------
    def __add__(self, other: "VectorField") -> "VectorField":
        self._check_field(other)
        return VectorField([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: "VectorField") -> "VectorField":
        self._check_field(other)
        return VectorField([a - b for a, b in zip(self.components, other.components)])

    def __neg__(self) -> "VectorField":
        return VectorField([-c for c in self.components])

    def __mul__(self, other):
        if isinstance(other, (Expr, int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def to_strings(self) -> List[str]:
        return [c.to_string() for c in self.components]

    def __repr__(self):
        return f"VectorField({self.to_strings()})"


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """
    [X,Y]^k = Σ_i (X^i ∂_i Y^k − Y^i ∂_i X^k)，精確計算
    """
    X._check_field(Y)
    return VectorField([X.apply(yk) - Y.apply(xk) for xk, yk in zip(X.components, Y.components)])


def vf_eval(X: VectorField, point: Sequence) -> Tuple:
    """逐分量求值；有理點得到精確結果"""
    coords = getattr(point, "coords", point)
    if len(coords) != X.dim:
        raise DimensionMismatchError(f"點的維度 {len(coords)} 與向量場維度 {X.dim} 不符")
    return tuple(c.evaluate(coords) for c in X.components)
