# spec_loader.py
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from carnot.dnc import TubularData
from carnot.filtration import FiltrationSpec, Layer
from errors import SpecFormatError
from settings import Tolerances
from symexpr import Point, VectorField
from utils import Scalar, parse_vector, spec_hash

logger = logging.getLogger(__name__)


@dataclass
class TubularSpec:
    tub: TubularData
    tub_alt: Optional[TubularData]
    functions: List[str] = field(default_factory=list)
    probes: List[Tuple[Tuple[Scalar, ...], Tuple[Scalar, ...]]] = field(default_factory=list)


class SpecLoader:
    def __init__(self):
        # 欄位別名（可擴充）
        self.col_map = {
            "coordinates": "coords",
            "variables": "coords",
            "frames": "layers",
            "points": "samples",
            "sample_points": "samples",
            "vectors": "fields",
            "frame": "fields",
            "tolerance": "tolerances",
            "phi2": "phi_alt",
            "tests": "functions",
        }

    # ---------------- 讀檔 ----------------
    def read_json(self, path: str) -> Dict[str, Any]:
        if not os.path.exists(path):
            raise SpecFormatError(f"找不到檔案：{path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SpecFormatError(f"無法解析 {os.path.basename(path)}：{e.msg}（第 {e.lineno} 行）")
        except OSError as e:
            raise SpecFormatError(f"無法讀取 {os.path.basename(path)}：{type(e).__name__} {e}")
        if not isinstance(data, dict):
            raise SpecFormatError("最外層必須是 JSON 物件")
        return data

    def normalize(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """標準化欄位名稱（去空白、別名 → 正式名稱）"""
        out: Dict[str, Any] = {}
        for key, value in data.items():
            k = str(key).strip()
            k = self.col_map.get(k, k)
            if isinstance(value, list):
                value = [self.normalize(v) if isinstance(v, dict) else v for v in value]
            out[k] = value
        return out

    # ---------------- SpecFile ----------------
    def load_spec(self, path: str) -> FiltrationSpec:
        data = self.read_json(path)
        return self.parse_spec(data, name=os.path.splitext(os.path.basename(path))[0])

    def parse_spec(self, data: Dict[str, Any], name: str = "") -> FiltrationSpec:
        data = self.normalize(data)
        required = {"dim", "coords", "layers", "samples"}
        missing = required - set(data)
        if missing:
            raise SpecFormatError(f"缺少欄位: {', '.join(sorted(missing))}")

        dim = self._int(data["dim"], "dim")
        coords = self._names(data["coords"], dim)
        if not isinstance(data["layers"], list) or not data["layers"]:
            raise SpecFormatError("layers 必須是非空陣列")

        layers: List[Layer] = []
        for n, raw in enumerate(data["layers"], start=1):
            if not isinstance(raw, dict) or "weight" not in raw or "fields" not in raw:
                raise SpecFormatError(f"layers[{n}] 需要 weight 與 fields")
            weight = self._int(raw["weight"], f"layers[{n}].weight")
            fields = []
            for m, comps in enumerate(raw["fields"], start=1):
                if not isinstance(comps, list):
                    raise SpecFormatError(f"layers[{n}].fields[{m}] 必須是字串陣列")
                if len(comps) != dim:
                    raise SpecFormatError(f"layers[{n}].fields[{m}] 需要 {dim} 個分量")
                fields.append(VectorField.parse([str(c) for c in comps], coords))
            layers.append(Layer(weight, tuple(fields)))

        samples = []
        if not isinstance(data["samples"], list):
            raise SpecFormatError("samples 必須是陣列")
        for n, raw in enumerate(data["samples"], start=1):
            if not isinstance(raw, (list, str)):
                raise SpecFormatError(f"samples[{n}] 必須是數值陣列")
            samples.append(Point(parse_vector(raw)))

        tolerances = Tolerances.from_mapping(data.get("tolerances"))
        spec = FiltrationSpec(dim, coords, tuple(layers), tuple(samples), tolerances, name=name)
        logger.debug("載入 spec %s（hash %s）", name, spec_hash(data))
        return spec

    # ---------------- 管狀資料 ----------------
    def load_tubular(self, path: str) -> TubularSpec:
        data = self.read_json(path)
        return self.parse_tubular(data, name=os.path.splitext(os.path.basename(path))[0])

    def parse_tubular(self, data: Dict[str, Any], name: str = "") -> TubularSpec:
        """{"dim","coords","v","h","phi","phi_alt","functions","probes"}"""
        data = self.normalize(data)
        required = {"dim", "coords", "v", "phi"}
        missing = required - set(data)
        if missing:
            raise SpecFormatError(f"缺少欄位: {', '.join(sorted(missing))}")
        dim = self._int(data["dim"], "dim")
        coords = self._names(data["coords"], dim)
        v = self._int(data["v"], "v")
        h = self._int(data["h"], "h") if data.get("h") is not None else None
        tub = TubularData.parse(coords, v, [str(e) for e in data["phi"]], h, name=name)
        tub_alt = None
        if data.get("phi_alt") is not None:
            tub_alt = TubularData.parse(coords, v, [str(e) for e in data["phi_alt"]], h, name=f"{name}_alt")

        probes = []
        for n, raw in enumerate(data.get("probes") or [], start=1):
            if not isinstance(raw, dict) or "x" not in raw or "X" not in raw:
                raise SpecFormatError(f"probes[{n}] 需要 x 與 X")
            x, X = parse_vector(raw["x"]), parse_vector(raw["X"])
            if len(x) != v or len(X) != dim - v:
                raise SpecFormatError(f"probes[{n}] 維度錯誤（x 需 {v} 個、X 需 {dim - v} 個）")
            probes.append((x, X))
        functions = [str(f) for f in data.get("functions") or []]
        return TubularSpec(tub, tub_alt, functions, probes)

    # ---------------- 小工具 ----------------
    @staticmethod
    def _int(value: Any, what: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SpecFormatError(f"{what} 必須是整數，收到 {value!r}")
        return value

    @staticmethod
    def _names(value: Any, dim: int) -> Tuple[str, ...]:
        if not isinstance(value, list) or not all(isinstance(v, str) and v.strip() for v in value):
            raise SpecFormatError("coords 必須是字串陣列")
        names = tuple(v.strip() for v in value)
        if len(names) != dim:
            raise SpecFormatError(f"coords 有 {len(names)} 個名稱，但 dim = {dim}")
        if len(set(names)) != len(names):
            raise SpecFormatError("coords 名稱重複")
        return names
