# carnot/newton.py
import logging
from typing import Callable, Optional

import numpy as np

from errors import NewtonConvergenceError
from settings import FD_STEP, NEWTON_DAMPING, NEWTON_MAX_ITER, NEWTON_TOL

logger = logging.getLogger(__name__)

# 浮點殘差的下限倍數：步長已停滯且殘差在 tol 的此倍數內視為收斂
ROUNDOFF_SLACK = 100.0
MAX_HALVINGS = 30

BatchFn = Callable[[np.ndarray], np.ndarray]


def fd_jacobian(func: BatchFn, x: np.ndarray, h: float = FD_STEP):
    """
    中央差分 Jacobian，一次批次求值 [x, x + h e_j, x - h e_j]
    :return: (f(x), J)
    """
    n = x.shape[0]
    eye = np.eye(n) * h
    batch = np.vstack([x[None, :], x[None, :] + eye, x[None, :] - eye])
    values = func(batch)
    fx = values[0]
    J = (values[1:n + 1] - values[n + 1:]).T / (2.0 * h)
    return fx, J


def newton_solve(func: BatchFn, x0, target, tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER,
                 jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 what: str = "Newton") -> np.ndarray:
    """
    以阻尼 Newton 解 func(x) = target

    :param func: 批次函數 (n, d) → (n, d)
    :param jacobian: 可選的解析 Jacobian；未給時用中央差分
    :raises NewtonConvergenceError: 超過 max_iter 仍未達到 tol·max(1, |target|)
    """
    x = np.asarray(x0, dtype=float).copy()
    target = np.asarray(target, dtype=float)
    scale = max(1.0, float(np.linalg.norm(target)))

    def residual_at(y):
        return func(y[None, :])[0] - target

    r = residual_at(x)
    norm = float(np.linalg.norm(r))
    for it in range(max_iter):
        if norm <= tol * scale:
            logger.debug("%s 收斂：%d 次迭代，殘差 %.3e", what, it, norm)
            return x
        if jacobian is None:
            _, J = fd_jacobian(func, x)
        else:
            J = jacobian(x)
        try:
            delta = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(J, -r, rcond=None)[0]

        step = 1.0
        for _ in range(MAX_HALVINGS):
            candidate = x + step * delta
            r_new = residual_at(candidate)
            norm_new = float(np.linalg.norm(r_new))
            if np.isfinite(norm_new) and norm_new < norm:
                break
            step *= NEWTON_DAMPING
        else:
            # 沒有任何步長能再降低殘差：已到浮點下限
            if norm <= ROUNDOFF_SLACK * tol * scale:
                logger.debug("%s 於浮點下限停止，殘差 %.3e", what, norm)
                return x
            raise NewtonConvergenceError(norm, it + 1, what)
        x, r, norm = candidate, r_new, norm_new

    if norm <= tol * scale:
        return x
    raise NewtonConvergenceError(norm, max_iter, what)
