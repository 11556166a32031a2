# symexpr/point.py
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Tuple, Union

import numpy as np

from errors import DimensionMismatchError, SpecFormatError
from utils import is_exact, parse_scalar

Coord = Union[Fraction, float]


@dataclass(frozen=True)
class Point:
    """座標圖中的一點；全為有理數時為精確點"""
    coords: Tuple[Coord, ...]

    def __post_init__(self):
        for c in self.coords:
            if isinstance(c, float) and not math.isfinite(c):
                raise SpecFormatError(f"點座標必須有限: {self.coords}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def exact(self) -> bool:
        return is_exact(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords], dtype=float)

    def check_dim(self, d: int) -> "Point":
        if self.dim != d:
            raise DimensionMismatchError(f"點的維度 {self.dim} 與 {d} 不符")
        return self

    def to_list(self):
        return list(self.coords)


def make_point(values: Union[Point, Sequence, np.ndarray]) -> Point:
    if isinstance(values, Point):
        return values
    if isinstance(values, np.ndarray):
        return Point(tuple(float(v) for v in values.ravel()))
    return Point(tuple(parse_scalar(v) if not isinstance(v, float) else v for v in values))
