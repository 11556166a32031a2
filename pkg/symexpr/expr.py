# symexpr/expr.py
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from sympy import Poly, QQ, Symbol

from errors import DimensionMismatchError, UnknownVariableError

Monomial = Tuple[int, ...]
Number = Union[int, Fraction]


@lru_cache(maxsize=None)
def _gens(variables: Tuple[str, ...]) -> Tuple[Symbol, ...]:
    return tuple(Symbol(v) for v in variables)


def _to_fraction(c) -> Fraction:
    # QQ 元素可能是 PythonMPQ 或 gmpy2.mpq，兩者都有 numerator / denominator
    return Fraction(int(c.numerator), int(c.denominator))


class Expr:
    """
    有理係數多元多項式（座標圖上的係數函數）

    內部以 sympy.Poly（domain=QQ）保存；canonical form 由 Poly 保證：
    不存零係數、單項式唯一。相等即結構相等。
    """

    __slots__ = ("variables", "_poly", "_terms")

    def __init__(self, variables: Sequence[str], terms: Optional[Mapping[Monomial, Number]] = None,
                 _poly: Optional[Poly] = None):
        self.variables: Tuple[str, ...] = tuple(variables)
        if not self.variables:
            raise DimensionMismatchError("Expr 至少需要一個座標變數")
        if _poly is None:
            data = {}
            for mono, c in (terms or {}).items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != len(self.variables) or any(e < 0 for e in mono):
                    raise DimensionMismatchError(f"單項式 {mono} 與變數 {self.variables} 不符")
                c = Fraction(c)
                if c:
                    data[mono] = QQ(c.numerator, c.denominator)
            if not data:
                data = {(0,) * len(self.variables): QQ(0)}
            _poly = Poly.from_dict(data, *_gens(self.variables), domain=QQ)
        self._poly = _poly
        self._terms: Optional[Dict[Monomial, Fraction]] = None

    # ---------------- 建構 ----------------
    @classmethod
    def constant(cls, variables: Sequence[str], value: Number) -> "Expr":
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def zero(cls, variables: Sequence[str]) -> "Expr":
        return cls(variables)

    @classmethod
    def coordinate(cls, variables: Sequence[str], name: Union[str, int]) -> "Expr":
        variables = tuple(variables)
        if isinstance(name, int):
            index = name
            if not 0 <= index < len(variables):
                raise DimensionMismatchError(f"座標索引 {index} 超出範圍 0..{len(variables) - 1}")
        else:
            if name not in variables:
                raise UnknownVariableError(name)
            index = variables.index(name)
        mono = tuple(1 if k == index else 0 for k in range(len(variables)))
        return cls(variables, {mono: 1})

    @classmethod
    def parse(cls, text: str, variables: Sequence[str]) -> "Expr":
        from .parser import parse_expr
        return parse_expr(text, variables)

    def _wrap(self, poly: Poly) -> "Expr":
        return Expr(self.variables, _poly=poly)

    # ---------------- 屬性 ----------------
    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        if self._terms is None:
            self._terms = {
                tuple(m): _to_fraction(c)
                for m, c in self._poly.as_dict(native=True).items() if c
            }
        return self._terms

    @property
    def dim(self) -> int:
        return len(self.variables)

    def is_zero(self) -> bool:
        return self._poly.is_zero

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.dim, Fraction(0))

    # ---------------- 算術 ----------------
    def _coerce(self, other) -> Optional["Expr"]:
        if isinstance(other, Expr):
            if other.variables != self.variables:
                raise DimensionMismatchError(f"變數不一致: {self.variables} vs {other.variables}")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Expr.constant(self.variables, other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._wrap(self._poly + o._poly)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._wrap(self._poly - o._poly)

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._wrap(o._poly - self._poly)

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is None else self._wrap(self._poly * o._poly)

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self._poly)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("只支援非負整數次方")
        return self._wrap(self._poly ** n)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                raise ZeroDivisionError("除以 0")
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.is_constant() and self.constant_term() == other
        if not isinstance(other, Expr):
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    # ---------------- 微分 / 代入 ----------------
    def diff(self, index: int) -> "Expr":
        """對第 index 個座標（0 起算）的精確偏導數"""
        if not isinstance(index, int) or not 0 <= index < self.dim:
            raise DimensionMismatchError(f"座標索引 {index} 超出範圍 0..{self.dim - 1}")
        return self._wrap(self._poly.diff(_gens(self.variables)[index]))

    def substitute(self, values: Sequence["Expr"]) -> "Expr":
        """
        以 values[i] 代入第 i 個座標（精確複合）；values 可在另一組變數上
        """
        if len(values) != self.dim:
            raise DimensionMismatchError(f"代入需要 {self.dim} 個表示式，收到 {len(values)}")
        target_vars = values[0].variables
        result = Expr.zero(target_vars)
        powers: Dict[Tuple[int, int], Expr] = {}
        for mono, c in self.terms.items():
            term = Expr.constant(target_vars, c)
            for i, e in enumerate(mono):
                if e:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = values[i] ** e
                    term = term * powers[key]
            result = result + term
        return result

    def evaluate(self, point: Sequence) -> Union[Fraction, float]:
        """在一點求值；點全為有理數時結果精確"""
        if len(point) != self.dim:
            raise DimensionMismatchError(f"點的維度 {len(point)} 與 {self.dim} 不符")
        exact = all(isinstance(p, (int, Fraction)) for p in point)
        total = Fraction(0) if exact else 0.0
        for mono, c in self.terms.items():
            term = c if exact else float(c)
            for p, e in zip(point, mono):
                if e:
                    term = term * (p ** e)
            total += term
        return total

    # ---------------- 輸出 ----------------
    def to_string(self) -> str:
        """graded-lex 由高到低的標準輸出，可再被 parse 回相同的 Expr"""
        if self.is_zero():
            return "0"
        ordered = sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0]), reverse=True)
        pieces: List[str] = []
        for mono, c in ordered:
            factors = []
            for name, e in zip(self.variables, mono):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            if not pieces:
                pieces.append(f"-{body}" if c < 0 else body)
            else:
                pieces.append(f" - {body}" if c < 0 else f" + {body}")
        return "".join(pieces)

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"Expr({self.to_string()!r}, vars={list(self.variables)})"


def exprs_equal(a: Iterable[Expr], b: Iterable[Expr]) -> bool:
    a, b = list(a), list(b)
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))
