# cli.py
import logging
import os
import sys
from fractions import Fraction
from typing import Callable, Optional, Tuple

import click
import numpy as np

import commands
from errors import CarnotLabError
from report_store import ReportStore
from settings import ENV_LOG_LEVEL
from spec_loader import SpecLoader
from utils import parse_scalar, parse_vector

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

DEFAULT_U_GRID = "0.5:0.0078125:7"

loader = SpecLoader()
store = ReportStore()


# ---------------- 參數解析 ----------------
def parse_u_grid(text: str) -> Tuple[float, ...]:
    """'a:b:n' → n 個 a 到 b 的等比值"""
    parts = text.split(":")
    if len(parts) != 3:
        raise click.BadParameter(f"--u-grid 格式為 a:b:n，收到 {text!r}")
    try:
        a, b = float(parse_scalar(parts[0])), float(parse_scalar(parts[1]))
        n = int(parts[2])
    except (CarnotLabError, ValueError):
        raise click.BadParameter(f"--u-grid 無法解析：{text!r}")
    if a <= 0 or b <= 0 or n < 2:
        raise click.BadParameter("--u-grid 需要 a, b > 0 且 n >= 2")
    return tuple(float(u) for u in np.geomspace(a, b, n))


def parse_exact(text: Optional[str], default: Fraction) -> Fraction:
    if text is None:
        return default
    value = parse_scalar(text)
    if isinstance(value, float):
        # 浮點字串也轉成有理數，bch 表才能精確
        value = Fraction(value).limit_denominator(10 ** 12)
    return value


def setup_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, os.environ.get(ENV_LOG_LEVEL, "WARNING").upper(),
                                                   logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def run_command(build: Callable[[], commands.CommandResult], json_path: Optional[str],
                csv_path: Optional[str]) -> None:
    """執行報告建構器並對應 exit code；輸入錯誤 → 2"""
    try:
        result = build()
    except (CarnotLabError, click.BadParameter) as e:
        click.echo(f"輸入錯誤：{e}", err=True)
        sys.exit(EXIT_INPUT)
    click.echo(store.render(result.report), nl=False)
    if json_path:
        store.write_json(json_path, result.report)
    if csv_path and result.table is not None:
        store.write_csv(csv_path, result.table)
    sys.exit(result.exit_code)


spec_option = click.option("--spec", "spec_path", required=True, type=click.Path(dir_okay=False),
                           help="SpecFile（JSON）路徑")
point_option = click.option("--point", default=0, show_default=True, help="樣本點索引（0 起算）")
json_option = click.option("--json", "json_path", default=None, help="另存報告 JSON")
csv_option = click.option("--csv", "csv_path", default=None, help="另存數值表 CSV")


# ---------------- 指令 ----------------
@click.group()
@click.option("--verbose", is_flag=True, help="DEBUG 等級的日誌（輸出到 stderr）")
def cli(verbose: bool):
    """Carnot 群、切群胚變形與 BCH 的驗證工具"""
    setup_logging(verbose)


@cli.command()
@spec_option
@click.option("--seed", default=0, show_default=True, help="額外隨機點的種子")
@click.option("--extra-points", default=0, show_default=True, help="在樣本點附近額外檢查的隨機有理點數")
@json_option
def validate(spec_path, seed, extra_points, json_path):
    """驗證濾過：秩與括號條件"""
    run_command(lambda: commands.build_validate(loader.load_spec(spec_path), extra_points, seed), json_path, None)


@cli.command()
@spec_option
@point_option
@json_option
@csv_option
def levi(spec_path, point, json_path, csv_path):
    """密切分級李代數的結構常數"""
    run_command(lambda: commands.build_levi(loader.load_spec(spec_path), point), json_path, csv_path)


@cli.command("bch-table")
@spec_option
@point_option
@click.option("--t", "t_text", default=None, help="第一個變形參數（預設 1）")
@click.option("--u", "u_text", default=None, help="第二個變形參數（預設 1）")
@json_option
@csv_option
def bch_table(spec_path, point, t_text, u_text, json_path, csv_path):
    """縮放後群律下基底兩兩的乘積"""
    def build():
        t = parse_exact(t_text, Fraction(1))
        u = parse_exact(u_text, Fraction(1))
        return commands.build_bch_table(loader.load_spec(spec_path), point, t, u)

    run_command(build, json_path, csv_path)


@cli.command()
@spec_option
@point_option
@click.option("--xi", default=None, help="ξ，逗號分隔的有理數（預設 e₁）")
@click.option("--eta", default=None, help="η，逗號分隔的有理數（預設 e₂）")
@click.option("--u-grid", "u_grid", default=DEFAULT_U_GRID, show_default=True, help="a:b:n 等比網格")
@click.option("--target-based", is_flag=True, help="改用 target 基準座標（極限為 bch(ξ, η)）")
@json_option
@csv_option
def converge(spec_path, point, xi, eta, u_grid, target_based, json_path, csv_path):
    """成對群胚乘積收斂到密切群律"""
    def build():
        grid = parse_u_grid(u_grid)
        return commands.build_converge(loader.load_spec(spec_path), point,
                                       parse_vector(xi) if xi else None,
                                       parse_vector(eta) if eta else None,
                                       grid, target_based)

    run_command(build, json_path, csv_path)


@cli.command()
@spec_option
@point_option
@click.option("--seed", default=0, show_default=True, help="隨機樣本的種子")
@json_option
def actions(spec_path, point, seed, json_path):
    """λ⁰ / λ¹ 兩種寫法的乘法性與投影關係"""
    run_command(lambda: commands.build_actions(loader.load_spec(spec_path), point, seed=seed), json_path, None)


@cli.command()
@click.option("--tubular", "tubular_path", required=True, type=click.Path(dir_okay=False),
              help="管狀資料 JSON 路徑")
@json_option
@csv_option
def transition(tubular_path, json_path, csv_path):
    """座標變換與 dnc(f) 延拓的收斂測試"""
    run_command(lambda: commands.build_transition(loader.load_tubular(tubular_path)), json_path, csv_path)


def main():
    cli(prog_name="carnot-lab")


if __name__ == "__main__":
    main()
