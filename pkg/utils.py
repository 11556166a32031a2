# utils.py
import hashlib
import json
import math
import os
from fractions import Fraction
from typing import Any, Iterable, Sequence, Tuple, Union

from errors import SpecFormatError
from settings import ENV_THREADS, env_int

Scalar = Union[int, Fraction, float]


# ---------------- 數值處理 ----------------
def parse_scalar(value: Any) -> Scalar:
    """
    "1/2"、"-3"、2、0.25 → Fraction 或 float
    字串與整數一律走精確有理數；只有 JSON 浮點數保留為 float
    """
    if isinstance(value, bool):
        raise SpecFormatError(f"無效的數值: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise SpecFormatError(f"數值必須有限: {value!r}")
        return value
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError):
            try:
                f = float(text)
            except ValueError:
                raise SpecFormatError(f"無效的數值: {value!r}")
            if not math.isfinite(f):
                raise SpecFormatError(f"數值必須有限: {value!r}")
            return f
    raise SpecFormatError(f"無效的數值: {value!r}")


def parse_vector(text: Union[str, Sequence[Any]]) -> Tuple[Scalar, ...]:
    """'1,0,1/2' 或 [1, 0, "1/2"] → tuple"""
    if isinstance(text, str):
        parts = [p for p in text.replace(" ", "").split(",") if p != ""]
    else:
        parts = list(text)
    return tuple(parse_scalar(p) for p in parts)


def is_exact(values: Iterable[Any]) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def to_jsonable(value: Any) -> Any:
    """Fraction → "p/q"，tuple → list；其餘原樣（供 json.dumps）"""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return str(value) if value.denominator != 1 else int(value)
    if isinstance(value, float):
        return value if math.isfinite(value) else str(value)
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    try:
        import numpy as np
        if isinstance(value, np.generic):
            return to_jsonable(value.item())
    except ImportError:  # pragma: no cover
        pass
    return value


# ---------------- JSON / 雜湊 ----------------
def normalize_json(data: Any) -> str:
    """確保 JSON 內容一致性（排序鍵、無空白），報告才會逐位元組相同"""
    return json.dumps(to_jsonable(data), ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def spec_hash(data: Any) -> str:
    return hashlib.sha256(normalize_json(data).encode("utf-8")).hexdigest()[:16]


# ---------------- 檔案處理 ----------------
def allowed_file(filename: str, allowed_exts: set) -> bool:
    """
    檢查檔案副檔名是否允許
    :param filename: 檔案名稱
    :param allowed_exts: 允許的副檔名集合，例如 {".json"}
    """
    if not filename:
        return False
    ext = os.path.splitext(filename)[1].lower()
    return ext in allowed_exts


# ---------------- 平行度 ----------------
def worker_count() -> int:
    """CARNOT_LAB_THREADS 上限；未設定時使用 CPU 數"""
    return max(1, env_int(ENV_THREADS, os.cpu_count() or 1))
