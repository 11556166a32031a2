# commands.py
"""
CLI 與 HTTP 共用的報告建構器；每個回傳 CommandResult(report, exit_code, table)
exit code：0 全部通過、1 檢查失敗、2 輸入錯誤（輸入錯誤以例外往上丟，由呼叫端對應）
"""
import logging
import random
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from carnot.convergence import is_passing
from carnot.dnc import dnc_smooth_fn, chart_transition_test, lambda_relation_test
from carnot.filtration import FiltrationSpec, adapted_frame, check_filtration, levi_constants
from carnot.groupoid import CarnotContext, convergence_sweep
from carnot.nilpotent import (GradedLieAlgebra, bch, check_action_multiplicative, lambda_corrected,
                              lambda_displayed, law_k1, law_k2, scaled_algebra, scaling_from_parameters)
from errors import (LeviBracketError, NewtonConvergenceError, FlowDivergenceError, RankDeficiencyError,
                    SpecFormatError, StepLimitError)
from settings import DYADIC_T_GRID, DYADIC_U_GRID
from spec_loader import TubularSpec
from utils import Scalar, spec_hash, to_jsonable

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"

# 數值或幾何條件失敗：報告為檢查失敗（exit 1），不是輸入錯誤
CHECK_FAILURES = (RankDeficiencyError, LeviBracketError, NewtonConvergenceError, FlowDivergenceError,
                  StepLimitError)


@dataclass
class CommandResult:
    report: Dict[str, Any]
    exit_code: int
    table: Optional[pd.DataFrame] = None


# ---------------- 共用 ----------------
def spec_digest(spec: FiltrationSpec) -> str:
    return spec_hash({
        "coords": list(spec.coords),
        "layers": [{"weight": layer.weight, "fields": [X.to_strings() for X in layer.fields]}
                   for layer in spec.layers],
        "samples": [list(p.coords) for p in spec.samples],
        "tolerances": asdict(spec.tolerances),
    })


def _check(name: str, ok: bool, **details) -> Dict[str, Any]:
    return {"name": name, "status": PASS if ok else FAIL, **{k: to_jsonable(v) for k, v in details.items()}}


def _finish(command: str, spec_name: str, digest: str, checks: List[Dict[str, Any]],
            extra: Optional[Dict[str, Any]] = None, table: Optional[pd.DataFrame] = None) -> CommandResult:
    ok = all(c["status"] == PASS for c in checks)
    report = {
        "command": command,
        "spec": spec_name,
        "spec_hash": digest,
        "checks": checks,
        "status": PASS if ok else FAIL,
    }
    if extra:
        report.update(to_jsonable(extra))
    return CommandResult(report, 0 if ok else 1, table)


def _sample(spec: FiltrationSpec, index: int):
    if not 0 <= index < len(spec.samples):
        raise SpecFormatError(f"--point {index} 超出範圍 0..{len(spec.samples) - 1}")
    return spec.samples[index]


def _failed(command: str, spec: FiltrationSpec, name: str, error: Exception) -> CommandResult:
    logger.warning("%s 失敗：%s", command, error)
    return _finish(command, spec.name, spec_digest(spec),
                   [_check(name, False, error=f"{type(error).__name__}: {error}")])


def _equal(a: Sequence[Scalar], b: Sequence[Scalar]) -> bool:
    if all(isinstance(x, (int, Fraction)) for x in list(a) + list(b)):
        return tuple(a) == tuple(b)
    return all(abs(float(x) - float(y)) <= 1e-12 for x, y in zip(a, b))


# ---------------- validate ----------------
def build_validate(spec: FiltrationSpec, extra_points: int = 0, seed: int = 0) -> CommandResult:
    result = check_filtration(spec, extra_points=extra_points, seed=seed)
    checks = [
        _check("rank", not result.fatal, fatal=result.fatal, ranks=result.to_dict()["ranks"]),
        _check("bracket_condition", not result.violations, residual=result.max_residual,
               violations=[v.to_dict() for v in result.violations]),
    ]
    return _finish("validate", spec.name, spec_digest(spec), checks, {"points_checked": result.points_checked})


# ---------------- levi ----------------
def constants_table(alg: GradedLieAlgebra) -> pd.DataFrame:
    rows = [{"i": i + 1, "j": j + 1, "m": m + 1, "c": str(c)} for (i, j, m), c in alg.structure]
    return pd.DataFrame(rows, columns=["i", "j", "m", "c"])


def build_levi(spec: FiltrationSpec, point: int = 0) -> CommandResult:
    a = _sample(spec, point)
    try:
        frame = adapted_frame(spec, a)
        alg = levi_constants(spec, a, frame=frame)
    except CHECK_FAILURES as e:
        return _failed("levi", spec, "levi_constants", e)
    jacobi = alg.jacobi_residual()
    checks = [_check("jacobi", jacobi <= 1e-9, residual=jacobi)]
    extra = {"point": list(a.coords), "frame": frame.to_dict(), "algebra": alg.to_dict()}
    return _finish("levi", spec.name, spec_digest(spec), checks, extra, constants_table(alg))


# ---------------- bch-table ----------------
def _closed_form_agrees(alg: GradedLieAlgebra, X, Y, product, t: Scalar, u: Scalar) -> Optional[bool]:
    """step 2 對 law_k1、step 3 對 law_k2 比對；其他 step 回傳 None"""
    if alg.step == 2:
        b1, b2 = alg.block(1), alg.block(2)
        h, n = law_k1(X[b1], X[b2], Y[b1], Y[b2], t, alg.levi_table(1, 1))
        return _equal(product, h + n)
    if alg.step == 3:
        blocks = [alg.block(k) for k in (1, 2, 3)]
        out = law_k2([X[b] for b in blocks], [Y[b] for b in blocks], t, u, alg)
        return _equal(product, out[0] + out[1] + out[2])
    return None


def build_bch_table(spec: FiltrationSpec, point: int = 0, t: Scalar = Fraction(1),
                    u: Scalar = Fraction(1)) -> CommandResult:
    """
    τ₂ = t、τ_m = t·u（m >= 3）縮放後，所有基底對 e_i·e_j 的乘積
    """
    a = _sample(spec, point)
    try:
        alg = levi_constants(spec, a)
        scaled = scaled_algebra(alg, scaling_from_parameters((t, u), alg.step))
    except CHECK_FAILURES as e:
        return _failed("bch-table", spec, "levi_constants", e)

    rows = []
    agreement: List[bool] = []
    for i in range(alg.size):
        for j in range(i + 1, alg.size):
            X, Y = alg.basis(i), alg.basis(j)
            try:
                product = bch(scaled, X, Y)
            except StepLimitError as e:
                return _failed("bch-table", spec, "bch", e)
            rows.append({"left": f"e{i + 1}", "right": f"e{j + 1}",
                         "product": ",".join(str(c) for c in product)})
            same = _closed_form_agrees(alg, X, Y, product, t, u)
            if same is not None:
                agreement.append(same)

    checks = []
    if agreement:
        name = "law_k1_agreement" if alg.step == 2 else "law_k2_agreement"
        checks.append(_check(name, all(agreement), compared=len(agreement)))
    extra = {"point": list(a.coords), "t": t, "u": u, "algebra": scaled.to_dict()}
    table = pd.DataFrame(rows, columns=["left", "right", "product"])
    extra["products"] = rows
    return _finish("bch-table", spec.name, spec_digest(spec), checks, extra, table)


# ---------------- converge ----------------
def build_converge(spec: FiltrationSpec, point: int = 0, xi: Optional[Sequence[Scalar]] = None,
                   eta: Optional[Sequence[Scalar]] = None, u_grid: Sequence[float] = DYADIC_U_GRID,
                   target_based: bool = False) -> CommandResult:
    a = _sample(spec, point)
    xi = tuple(xi) if xi is not None else tuple(Fraction(1 if k == 0 else 0) for k in range(spec.dim))
    eta = tuple(eta) if eta is not None else tuple(Fraction(1 if k == 1 else 0) for k in range(spec.dim))
    if len(xi) != spec.dim or len(eta) != spec.dim:
        raise SpecFormatError(f"--xi / --eta 需要 {spec.dim} 個分量")
    ctx = CarnotContext(spec)
    try:
        sweep = convergence_sweep(ctx, a, xi, eta, u_grid, target_based=target_based)
    except CHECK_FAILURES as e:
        return _failed("converge", spec, "rescaled_product", e)
    checks = [_check("rescaled_product", is_passing(sweep.status), verdict=sweep.status, order=sweep.order,
                     final_error=float(sweep.table["err"].iloc[-1]))]
    extra = {"point": list(a.coords), "xi": xi, "eta": eta, "sweep": sweep.to_dict()}
    return _finish("converge", spec.name, spec_digest(spec), checks, extra, sweep.table)


# ---------------- actions ----------------
def _k1_levi(alg: GradedLieAlgebra) -> List[List[List[Scalar]]]:
    """
    H = 度數 1、n = 度數 2，ℒ 為度數 1×1 → 2 的常數
    λ 作用所依附的 (h, n, t) 群律只在 step <= 2 時等於密切群律
    """
    if alg.step > 2:
        raise SpecFormatError(f"actions 只適用 step <= 2 的濾過（此點的密切代數 step = {alg.step}）")
    return alg.levi_table(1, 1) if alg.step == 2 else []


def _action_samples(n1: int, rest: int, count: int, seed: int):
    rng = random.Random(seed)

    def rat():
        return Fraction(rng.randint(-9, 9), rng.randint(1, 5))

    out = []
    for _ in range(count):
        t = rat() or Fraction(1)
        out.append((tuple(rat() for _ in range(n1)), tuple(rat() for _ in range(rest)),
                    tuple(rat() for _ in range(n1)), tuple(rat() for _ in range(rest)), t))
    return out


def build_actions(spec: FiltrationSpec, point: int = 0, scales: Sequence[Scalar] = (Fraction(2), Fraction(1)),
                  seed: int = 0, count: int = 20) -> CommandResult:
    """
    兩種 λ⁰ / λ¹ 寫法的乘法性：另一種常見寫法（s² ≠ 1 時預期不成立）與相容寫法
    相容寫法與 dnc² 的投影關係必須成立；該寫法的結果只列出，不影響 exit code
    """
    a = _sample(spec, point)
    try:
        alg = levi_constants(spec, a)
    except CHECK_FAILURES as e:
        return _failed("actions", spec, "levi_constants", e)
    levi = _k1_levi(alg)
    samples = _action_samples(alg.dims[0], alg.size - alg.dims[0], count, seed)
    tol = 0.0 if all(isinstance(c, (int, Fraction)) for _, c in alg.structure) else 1e-12

    checks = []
    forms = []
    for form, fn in (("displayed", lambda_displayed), ("corrected", lambda_corrected)):
        for action in ("lambda0", "lambda1"):
            for s in scales:
                result = check_action_multiplicative(lambda s_, h, n, t, _a=action, _f=fn: _f(_a, s_, h, n, t),
                                                     levi, s, samples, tol)
                entry = {"form": form, "action": action, "s": s, **result}
                forms.append(entry)
                if form == "corrected":
                    checks.append(_check(f"{action}_corrected_s={s}", result["ok"], max_defect=result["max_defect"]))
    relation = lambda_relation_test()
    checks.append(_check("projection_relations", relation.ok, details=relation.checks))
    extra = {"point": list(a.coords), "forms": forms}
    return _finish("actions", spec.name, spec_digest(spec), checks, extra)


# ---------------- transition ----------------
def build_transition(tubular: TubularSpec, t_grid: Sequence[float] = DYADIC_T_GRID) -> CommandResult:
    """座標變換收斂 + 每個函數的 dnc(f) 極限測試"""
    checks = []
    table = None
    name = tubular.tub.name
    digest = spec_hash({"tub": tubular.tub.to_dict(),
                        "alt": tubular.tub_alt.to_dict() if tubular.tub_alt else None,
                        "functions": tubular.functions,
                        "probes": [[list(x), list(X)] for x, X in tubular.probes]})
    if not tubular.probes:
        raise SpecFormatError("transition 需要至少一個 probe")
    extra: Dict[str, Any] = {}
    if tubular.tub_alt is not None:
        try:
            rep = chart_transition_test(tubular.tub, tubular.tub_alt, tubular.probes, t_grid)
            checks.append(_check("chart_transition", is_passing(rep.status), verdict=rep.status, order=rep.order,
                                 per_probe=rep.per_probe))
            table = rep.table
        except CHECK_FAILURES as e:
            checks.append(_check("chart_transition", False, error=f"{type(e).__name__}: {e}"))
    for text in tubular.functions:
        fn = dnc_smooth_fn(tubular.tub, text)
        rep = fn.limit_test(tubular.probes, t_grid)
        checks.append(_check(f"limit:{text}", is_passing(rep.status), verdict=rep.status, order=rep.order,
                             max_error=float(np.max(rep.table["err"]))))
    extra["t_grid"] = [float(t) for t in t_grid]
    return _finish("transition", name, digest, checks, extra, table)
