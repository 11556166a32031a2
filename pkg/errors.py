# errors.py
from typing import Optional


class CarnotLabError(Exception):
    """所有本專案例外的共同基底"""


# ---------------- 輸入 / 格式 ----------------
class SpecFormatError(CarnotLabError, ValueError):
    """SpecFile / 管狀資料的結構錯誤（CLI exit 2）"""


class ExprSyntaxError(CarnotLabError, ValueError):
    """position：text 中出錯字元的索引（0 起算）"""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message}（位置 {position}）")


class UnknownVariableError(CarnotLabError, ValueError):
    def __init__(self, name: str, position: Optional[int] = None):
        self.name = name
        self.position = position
        where = f"（位置 {position}）" if position is not None else ""
        super().__init__(f"未宣告的座標變數: {name}{where}")


class DimensionMismatchError(CarnotLabError, ValueError):
    pass


class ZeroScaleError(CarnotLabError, ValueError):
    """伸縮 / 作用參數為 0"""


class ParameterRangeError(CarnotLabError, ValueError):
    """數值參數超出允許範圍（例如收斂測試的 u）"""


# ---------------- 幾何條件 ----------------
class RankDeficiencyError(CarnotLabError, ValueError):
    """框架無法張成所宣告的層（致命）"""


class LeviBracketError(CarnotLabError, ValueError):
    """括號在權重大於 w_i + w_j 的分量不為 0"""


class TubularDataError(CarnotLabError, ValueError):
    pass


class VanishingConditionError(CarnotLabError, ValueError):
    """函數未在 V 上消失，或映射不保持 V"""


class CurveMembershipError(CarnotLabError, ValueError):
    pass


# ---------------- 代數 ----------------
class StepLimitError(CarnotLabError, ValueError):
    pass


class AlgebraMismatchError(CarnotLabError, ValueError):
    pass


class NotComposableError(CarnotLabError, ValueError):
    pass


# ---------------- 數值 ----------------
class FlowDivergenceError(CarnotLabError, ArithmeticError):
    def __init__(self, substep: int, message: str = "流出現非有限值"):
        self.substep = substep
        super().__init__(f"{message}（子步 {substep}）")


class NewtonConvergenceError(CarnotLabError, RuntimeError):
    def __init__(self, residual: float, iterations: int, what: str = "Newton"):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{what} 未收斂：{iterations} 次迭代後殘差 {residual:.3e}")
