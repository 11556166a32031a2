# carnot/convergence.py
"""
收斂階估計：log(err) 對 log(h) 的最小平方斜率
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from settings import Tolerances

logger = logging.getLogger(__name__)

EXACT = "exact"
PASS = "pass"
FAIL = "fail"


def estimate_order(hs: Sequence[float], errs: Sequence[float]) -> float:
    """
    np.polyfit(log h, log err, 1) 的斜率；只用 err > 0 的點
    少於兩個正誤差時回傳 inf（誤差在浮點上為 0）
    """
    pairs = [(float(h), float(e)) for h, e in zip(hs, errs) if float(e) > 0.0]
    if len(pairs) < 2:
        return math.inf
    logh = np.log([p[0] for p in pairs])
    loge = np.log([p[1] for p in pairs])
    return float(np.polyfit(logh, loge, 1)[0])


def order_table(hs: Sequence[float], errs: Sequence[float], param: str = "u") -> pd.DataFrame:
    """
    欄位 param, err, est_order；est_order 為相鄰兩列的局部斜率（第一列為 NaN）
    """
    hs = [float(h) for h in hs]
    errs = [float(e) for e in errs]
    local = [math.nan]
    for k in range(1, len(hs)):
        if errs[k] > 0 and errs[k - 1] > 0 and hs[k] != hs[k - 1]:
            local.append(math.log(errs[k] / errs[k - 1]) / math.log(hs[k] / hs[k - 1]))
        else:
            local.append(math.nan)
    return pd.DataFrame({param: hs, "err": errs, "est_order": local})


def verdict(hs: Sequence[float], errs: Sequence[float], tolerances: Optional[Tolerances] = None) -> str:
    """
    全部誤差 <= exact_level → exact；
    斜率 >= min_order 且最小 h 的誤差 < final_error_max → pass；否則 fail
    """
    tolerances = tolerances or Tolerances()
    errs = [float(e) for e in errs]
    if not errs:
        return FAIL
    if max(errs) <= tolerances.exact_level:
        return EXACT
    slope = estimate_order(hs, errs)
    final = errs[int(np.argmin([float(h) for h in hs]))]
    if slope >= tolerances.min_order and final < tolerances.final_error_max:
        return PASS
    logger.warning("收斂檢查未通過：斜率 %.3f，最終誤差 %.3e", slope, final)
    return FAIL


def is_passing(status: str) -> bool:
    return status in (EXACT, PASS)
