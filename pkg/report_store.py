# report_store.py
import json
import os
from typing import Any, Dict, Optional

import pandas as pd
from filelock import FileLock  # pip install filelock

from utils import to_jsonable


class ReportStore:
    """
    報告（JSON）與數值表（CSV）的寫出
    同一路徑的寫入以 FileLock 序列化，避免併發執行交錯輸出
    """

    def __init__(self, lock_timeout: float = 30.0):
        self.lock_timeout = lock_timeout

    @staticmethod
    def _lock_path(path: str) -> str:
        return f"{path}.lock"

    @staticmethod
    def render(report: Dict[str, Any]) -> str:
        """排序鍵、固定縮排：同一輸入得到逐位元組相同的輸出"""
        return json.dumps(to_jsonable(report), ensure_ascii=False, sort_keys=True, indent=2) + "\n"

    def write_json(self, path: str, report: Dict[str, Any]) -> str:
        """
        :param path: 輸出檔路徑
        :param report: 報告內容
        :return: 實際寫入的路徑
        """
        self._ensure_dir(path)
        with FileLock(self._lock_path(path), timeout=self.lock_timeout):
            with open(path, "w", encoding="utf-8") as f:
                f.write(self.render(report))
        return path

    def write_csv(self, path: str, table: pd.DataFrame) -> str:
        self._ensure_dir(path)
        with FileLock(self._lock_path(path), timeout=self.lock_timeout):
            table.to_csv(path, index=False, float_format="%.12g")
        return path

    def read_csv(self, path: str) -> Optional[pd.DataFrame]:
        if not os.path.exists(path):
            return None
        with FileLock(self._lock_path(path), timeout=self.lock_timeout):
            return pd.read_csv(path)

    @staticmethod
    def _ensure_dir(path: str) -> None:
        folder = os.path.dirname(os.path.abspath(path))
        os.makedirs(folder, exist_ok=True)
