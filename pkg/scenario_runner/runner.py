#!/usr/bin/env python3

import logging
from pathlib import Path
from typing import Any, Dict, Optional

from ring_dynamics.errors import CrqError
from scenario_runner.config import RunSettings, ScenarioConfig, get_settings, validate_config
from scenario_runner.export import ensure_dir
from scenario_runner.manifest import RunManifest
from scenario_runner.planner import PlanExecutor, ScenarioPlanner
from scenario_runner.scenarios import build_context

logger = logging.getLogger(__name__)


class ScenarioRunner:
    """Validates a config, executes its plan and writes the run manifest"""

    def __init__(self, settings: Optional[RunSettings] = None):
        self.settings = settings or get_settings()
        self.planner = ScenarioPlanner()
        self.executor = PlanExecutor()
        logger.debug(f"Scenario runner ready (csv digits {self.settings.csv_digits})")

    def run(self, config: ScenarioConfig) -> Dict[str, Any]:
        """
        Execute one scenario.

        Returns:
            exit report: success, exit_code, message, output_dir, manifest path, plan
        """
        output_dir = Path(config.output_dir)
        manifest = RunManifest(config.to_manifest_dict())

        is_valid, message, metadata = validate_config(config)
        manifest.validation = {"valid": is_valid, "message": message, "metadata": metadata}
        if not is_valid:
            logger.error(f"Config rejected: {message}")
            return {"success": False, "exit_code": 2, "message": message,
                    "output_dir": str(output_dir), "manifest": None, "plan": None}

        ensure_dir(output_dir)
        context = build_context(config, self.settings.csv_digits, output_dir)
        plan = self.planner.create_plan(config)
        result = self.executor.execute(plan, config, context)

        for path in context["artifacts"]:
            manifest.add_artifact(path)
        manifest.record_plan(result["plan"])
        manifest.finish()
        try:
            manifest_path = manifest.write(output_dir, self.settings.manifest_name)
        except CrqError as e:
            logger.error(f"Manifest not written: {e}")
            return {**result, "exit_code": e.exit_code, "message": str(e),
                    "output_dir": str(output_dir), "manifest": None}

        return {
            "success": result["success"],
            "exit_code": result["exit_code"],
            "message": result["message"],
            "output_dir": str(output_dir),
            "manifest": str(manifest_path),
            "plan": result["plan"],
            "metadata": metadata,
        }


def run(config: ScenarioConfig, settings: Optional[RunSettings] = None) -> Dict[str, Any]:
    return ScenarioRunner(settings).run(config)
