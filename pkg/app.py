# app.py
import json
import os

import click
from flask import Flask, request, abort
from werkzeug.exceptions import RequestEntityTooLarge
from werkzeug.utils import secure_filename

import commands
from cli import cli as carnot_cli, parse_exact, parse_u_grid
from errors import CarnotLabError
from settings import ENV_MAX_UPLOAD_MB, env_int
from spec_loader import SpecLoader
from utils import allowed_file, parse_vector, to_jsonable

# ---------------- Flask 基本設定 ----------------
app = Flask(__name__)
ALLOWED_SPEC_EXTS = {".json"}
MAX_CONTENT_LENGTH_MB = env_int(ENV_MAX_UPLOAD_MB, 2)

app.config["MAX_CONTENT_LENGTH"] = MAX_CONTENT_LENGTH_MB * 1024 * 1024
app.cli.add_command(carnot_cli, name="carnot")

# ---------------- 模組初始化 ----------------
spec_loader = SpecLoader()


# ---------------- 錯誤處理 ----------------
@app.errorhandler(RequestEntityTooLarge)
def handle_file_too_large(e):
    return {"ok": False, "error": f"上傳檔案超過 {MAX_CONTENT_LENGTH_MB} MB"}, 413


@app.errorhandler(400)
def handle_bad_request(e):
    msg = getattr(e, "description", "Bad Request")
    return {"ok": False, "error": msg}, 400


# ---------------- 輸入 ----------------
def read_spec_payload():
    """SpecFile：上傳檔（file 欄位）或 JSON 本文"""
    file = request.files.get("file")
    if file and file.filename:
        filename = secure_filename(file.filename)
        if not allowed_file(filename, ALLOWED_SPEC_EXTS):
            abort(400, f"不支援的檔案格式：{filename}")
        try:
            data = json.loads(file.read().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            abort(400, f"無法解析上傳的 JSON：{e}")
        return data, os.path.splitext(filename)[0]

    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        abort(400, "請以 JSON 本文或 file 欄位提供 SpecFile")
    spec = data.get("spec", data)
    if not isinstance(spec, dict):
        abort(400, "spec 必須是 JSON 物件")
    return spec, str(data.get("name", "request"))


def options() -> dict:
    """查詢參數與 JSON 本文中的 options 物件合併"""
    merged = dict(request.args.items())
    body = request.get_json(silent=True)
    if isinstance(body, dict) and isinstance(body.get("options"), dict):
        merged.update(body["options"])
    return merged


def respond(build):
    try:
        result = build()
    except CarnotLabError as e:
        abort(400, f"{type(e).__name__}: {e}")
    return {"ok": result.exit_code == 0, "report": to_jsonable(result.report)}


def load_spec():
    data, name = read_spec_payload()
    try:
        return spec_loader.parse_spec(data, name=name)
    except CarnotLabError as e:
        abort(400, f"{type(e).__name__}: {e}")


def _int_option(opts: dict, key: str, default: int) -> int:
    try:
        return int(opts.get(key, default))
    except (TypeError, ValueError):
        abort(400, f"{key} 必須是整數")


# ---------------- 路由 ----------------
@app.route("/health")
def health():
    return {"ok": True}


@app.route("/api/validate", methods=["POST"])
def api_validate():
    spec = load_spec()
    opts = options()
    return respond(lambda: commands.build_validate(spec, _int_option(opts, "extra_points", 0),
                                                   _int_option(opts, "seed", 0)))


@app.route("/api/levi", methods=["POST"])
def api_levi():
    spec = load_spec()
    return respond(lambda: commands.build_levi(spec, _int_option(options(), "point", 0)))


@app.route("/api/bch_table", methods=["POST"])
def api_bch_table():
    spec = load_spec()
    opts = options()

    def build():
        t = parse_exact(opts.get("t"), 1)
        u = parse_exact(opts.get("u"), 1)
        return commands.build_bch_table(spec, _int_option(opts, "point", 0), t, u)

    return respond(build)


@app.route("/api/converge", methods=["POST"])
def api_converge():
    spec = load_spec()
    opts = options()

    def build():
        grid = parse_u_grid(opts.get("u_grid", "0.5:0.0078125:7"))
        xi = parse_vector(opts["xi"]) if opts.get("xi") else None
        eta = parse_vector(opts["eta"]) if opts.get("eta") else None
        target_based = str(opts.get("target_based", "")).lower() in ("1", "true", "yes")
        return commands.build_converge(spec, _int_option(opts, "point", 0), xi, eta, grid, target_based)

    try:
        return respond(build)
    except click.BadParameter as e:
        abort(400, e.format_message())


@app.route("/api/actions", methods=["POST"])
def api_actions():
    spec = load_spec()
    opts = options()
    return respond(lambda: commands.build_actions(spec, _int_option(opts, "point", 0),
                                                  seed=_int_option(opts, "seed", 0)))


if __name__ == "__main__":
    app.run(debug=False)
