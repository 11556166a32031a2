# settings.py
import os
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Mapping, Optional

from errors import SpecFormatError

# ---------------- 數值門檻 ----------------
RANK_TOL = 1e-9            # 框架秩判定（pivot 門檻）
BRACKET_TOL = 1e-8         # 括號條件最小平方殘差
NEWTON_TOL = 1e-12         # Newton 殘差（相對 max(1, |target|)）
NEWTON_MAX_ITER = 50       # exp_chart_inverse / dnc 反解
GROUPOID_NEWTON_MAX_ITER = 60
NEWTON_DAMPING = 0.5       # 殘差變大時步長減半
FD_STEP = 1e-6             # 中央差分 Jacobian 步長
FLOW_STEPS = 512           # RK4 子步數
BCH_MAX_STEP = 6           # Dynkin 係數表上限
EXACT_LEVEL = 1e-6         # 收斂誤差低於此值視為「精確」
MIN_ORDER = 0.9            # 收斂階門檻
FINAL_ERROR_MAX = 1e-2     # u 最小時的誤差上限

# 極限測試的二進位 t 網格 2^-3 ... 2^-10
DYADIC_T_GRID = tuple(2.0 ** -k for k in range(3, 11))
# 收斂測試的 u 網格 2^-1 ... 2^-7
DYADIC_U_GRID = tuple(2.0 ** -k for k in range(1, 8))

# ---------------- 環境變數 ----------------
ENV_THREADS = "CARNOT_LAB_THREADS"
ENV_LOG_LEVEL = "CARNOT_LAB_LOG_LEVEL"
ENV_MAX_UPLOAD_MB = "CARNOT_LAB_MAX_UPLOAD_MB"


@dataclass(frozen=True)
class Tolerances:
    """一次執行所使用的容許誤差，可由 SpecFile 的 "tolerances" 覆寫"""
    rank: float = RANK_TOL
    bracket: float = BRACKET_TOL
    newton: float = NEWTON_TOL
    newton_max_iter: int = NEWTON_MAX_ITER
    groupoid_newton_max_iter: int = GROUPOID_NEWTON_MAX_ITER
    flow_steps: int = FLOW_STEPS
    exact_level: float = EXACT_LEVEL
    min_order: float = MIN_ORDER
    final_error_max: float = FINAL_ERROR_MAX

    @classmethod
    def from_mapping(cls, data: Optional[Mapping[str, Any]]) -> "Tolerances":
        """
        合併 SpecFile 的 tolerances 物件
        :param data: 例如 {"bracket": 1e-10, "flow_steps": 1024}
        """
        base = cls()
        if not data:
            return base
        known = {f.name: f.type for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise SpecFormatError(f"未知的 tolerances 欄位: {', '.join(unknown)}")

        updates: Dict[str, Any] = {}
        for key, value in data.items():
            try:
                if key in ("newton_max_iter", "groupoid_newton_max_iter", "flow_steps"):
                    updates[key] = int(value)
                    if updates[key] < 1:
                        raise ValueError("必須 >= 1")
                else:
                    updates[key] = float(value)
                    if not updates[key] > 0:
                        raise ValueError("必須 > 0")
            except (TypeError, ValueError) as e:
                raise SpecFormatError(f"tolerances.{key} 無效：{value!r}（{e}）")
        return replace(base, **updates)


def env_int(name: str, default: int) -> int:
    raw = (os.environ.get(name) or "").strip()
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError:
        return default
