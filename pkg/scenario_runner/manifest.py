#!/usr/bin/env python3

import logging
import os
import platform
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

import psutil

from ring_dynamics import __version__
from scenario_runner.export import write_json

logger = logging.getLogger(__name__)


def host_facts() -> Dict[str, Any]:
    memory = psutil.virtual_memory()
    return {
        "operating_system": platform.system(),
        "platform": platform.platform(),
        "architecture": platform.architecture()[0],
        "python_version": platform.python_version(),
        "cpu_cores": psutil.cpu_count(),
        "memory_total_gb": round(memory.total / (1024 ** 3), 2),
        "user": os.getenv('USER') or os.getenv('USERNAME', 'unknown'),
    }


class RunManifest:
    """Record of one run: resolved config, code version, timing, step results and artifacts"""

    def __init__(self, config: Dict[str, Any], run_id: Optional[str] = None):
        self.run_id = run_id or f"run_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
        self.config = config
        self.code_version = __version__
        self.start_time = datetime.now()
        self.end_time: Optional[datetime] = None
        self.steps: List[Dict[str, Any]] = []
        self.artifacts: List[Dict[str, Any]] = []
        self.validation: Dict[str, Any] = {}

    def add_artifact(self, path: Path):
        path = Path(path)
        size = path.stat().st_size if path.exists() else 0
        self.artifacts.append({"path": path.name, "bytes": size})

    def record_plan(self, plan: Dict[str, Any]):
        self.steps = [
            {
                "name": step["name"],
                "status": step["status"],
                "wall_time": step["wall_time"],
                "error": step["error"],
                "output": step["output"],
            }
            for step in plan.get("steps", [])
        ]

    def finish(self):
        self.end_time = datetime.now()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "code_version": self.code_version,
            "config": self.config,
            "start_time": self.start_time.isoformat(),
            "end_time": self.end_time.isoformat() if self.end_time else None,
            "wall_clock_seconds": (self.end_time - self.start_time).total_seconds() if self.end_time else None,
            "validation": self.validation,
            "steps": self.steps,
            "artifacts": sorted(self.artifacts, key=lambda item: item["path"]),
            "host": host_facts(),
        }

    def write(self, output_dir: Path, name: str = "manifest.json") -> Path:
        path = write_json(Path(output_dir) / name, self.to_dict())
        logger.info(f"Wrote manifest {path} ({len(self.artifacts)} artifacts)")
        return path
