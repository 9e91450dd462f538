#!/usr/bin/env python3

import logging
import time
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

from ring_dynamics.errors import CrqError
from scenario_runner.config import Scenario, ScenarioConfig

logger = logging.getLogger(__name__)

StepAction = Callable[[ScenarioConfig, Dict[str, Any]], Dict[str, Any]]


class PlanStatus(Enum):
    """Status of a scenario plan"""
    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    COMPLETED = "completed"
    FAILED = "failed"


class StepStatus(Enum):
    """Status of a single plan step"""
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"
    SKIPPED = "skipped"


class ScenarioStep:
    """One unit of work in a plan; action receives the config and the shared context"""

    def __init__(self, step_id: str, name: str, description: str, action: StepAction,
                 dependencies: List[str] = None):
        self.step_id = step_id
        self.name = name
        self.description = description
        self.action = action
        self.dependencies = dependencies or []
        self.status = StepStatus.PENDING
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None
        self.wall_time: float = 0.0
        self.output: Dict[str, Any] = {}
        self.error: str = ""
        self.exit_code: int = 0

    def to_dict(self) -> Dict[str, Any]:
        """Manifest entry for this step"""
        return {
            "step_id": self.step_id,
            "name": self.name,
            "description": self.description,
            "dependencies": self.dependencies,
            "status": self.status.value,
            "start_time": self.start_time.isoformat() if self.start_time else None,
            "end_time": self.end_time.isoformat() if self.end_time else None,
            "wall_time": self.wall_time,
            "output": self.output,
            "error": self.error,
        }


class ScenarioPlan:
    """Ordered steps of one scenario with dependency tracking"""

    def __init__(self, plan_id: str, scenario: Scenario, description: str):
        self.plan_id = plan_id
        self.scenario = scenario
        self.description = description
        self.steps: List[ScenarioStep] = []
        self.status = PlanStatus.PENDING
        self.created_time = datetime.now()
        self.start_time: Optional[datetime] = None
        self.end_time: Optional[datetime] = None

    def add_step(self, step: ScenarioStep):
        """Append a step; execution order follows dependencies, not insertion"""
        self.steps.append(step)

    def get_step_by_id(self, step_id: str) -> Optional[ScenarioStep]:
        """Step with the given id, or None"""
        for step in self.steps:
            if step.step_id == step_id:
                return step
        return None

    def get_ready_steps(self) -> List[ScenarioStep]:
        """Pending steps whose dependencies have all completed"""
        ready = []
        for step in self.steps:
            if step.status != StepStatus.PENDING:
                continue
            deps = [self.get_step_by_id(dep_id) for dep_id in step.dependencies]
            if all(dep is not None and dep.status == StepStatus.COMPLETED for dep in deps):
                ready.append(step)
        return ready

    def skip_blocked_steps(self) -> int:
        """Mark pending steps with a failed or skipped dependency as skipped"""
        skipped = 0
        changed = True
        while changed:
            changed = False
            for step in self.steps:
                if step.status != StepStatus.PENDING:
                    continue
                for dep_id in step.dependencies:
                    dep = self.get_step_by_id(dep_id)
                    if dep is None or dep.status in (StepStatus.FAILED, StepStatus.SKIPPED):
                        step.status = StepStatus.SKIPPED
                        step.error = f"dependency {dep_id} did not complete"
                        skipped += 1
                        changed = True
                        break
        return skipped

    def is_complete(self) -> bool:
        """True once no step is pending or running"""
        return all(step.status in (StepStatus.COMPLETED, StepStatus.SKIPPED, StepStatus.FAILED)
                   for step in self.steps)

    def has_failed_steps(self) -> bool:
        """True if any step failed"""
        return any(step.status == StepStatus.FAILED for step in self.steps)

    def exit_code(self) -> int:
        """Exit code of the first failed step, 0 when none failed"""
        for step in self.steps:
            if step.status == StepStatus.FAILED:
                return step.exit_code
        return 0

    def get_progress(self) -> Dict[str, Any]:
        """Step counts and completion percentage"""
        total = len(self.steps)
        completed = len([s for s in self.steps if s.status == StepStatus.COMPLETED])
        failed = len([s for s in self.steps if s.status == StepStatus.FAILED])
        return {
            "total_steps": total,
            "completed_steps": completed,
            "failed_steps": failed,
            "progress_percentage": (completed / total * 100) if total > 0 else 0,
            "status": self.status.value,
        }

    def to_dict(self) -> Dict[str, Any]:
        """Plan with its steps and progress, as written to the manifest"""
        return {
            "plan_id": self.plan_id,
            "scenario": self.scenario.value,
            "description": self.description,
            "status": self.status.value,
            "created_time": self.created_time.isoformat(),
            "start_time": self.start_time.isoformat() if self.start_time else None,
            "end_time": self.end_time.isoformat() if self.end_time else None,
            "steps": [step.to_dict() for step in self.steps],
            "progress": self.get_progress(),
        }


class ScenarioPlanner:
    """Decomposes a scenario into dependent steps"""

    def __init__(self):
        self.plan_counter = 0

    def generate_plan_id(self, scenario: Scenario) -> str:
        """Unique id from scenario, wall-clock time and a per-planner counter"""
        self.plan_counter += 1
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        return f"{scenario.value}_{timestamp}_{self.plan_counter}"

    def create_plan(self, config: ScenarioConfig) -> ScenarioPlan:
        """Build the step layout for config.scenario; every solver step depends on bands"""
        # imported here: step actions depend on this module's config types
        from scenario_runner import figures, scenarios

        layouts = {
            Scenario.BANDS: [("bands", scenarios.step_bands, "Band structure and crossing rates", [])],
            Scenario.EVOLVE_EXACT: [
                ("bands", scenarios.step_bands, "Band structure and crossing rates", []),
                ("exact", scenarios.step_exact, f"Exact {config.method} propagation", ["bands"]),
            ],
            Scenario.EVOLVE_KERNEL: [
                ("bands", scenarios.step_bands, "Band structure and crossing rates", []),
                ("kernel", scenarios.step_kernel, "Memory kernel and Volterra solve", ["bands"]),
            ],
            Scenario.EVOLVE_DDE: [
                ("bands", scenarios.step_bands, "Band structure and crossing rates", []),
                ("dde", scenarios.step_dde, "Delay equation by the method of steps", ["bands"]),
            ],
            Scenario.ANALYTIC: [
                ("bands", scenarios.step_bands, "Band structure and crossing rates", []),
                ("analytic", scenarios.step_analytic, "Hypergeometric series and density map", ["bands"]),
            ],
            Scenario.STAIRCASE: [
                ("bands", scenarios.step_bands, "Band structure and crossing rates", []),
                ("staircase", scenarios.step_staircase, "Piecewise staircase approximants", ["bands"]),
            ],
            Scenario.SPECTRUM: [("spectrum", scenarios.step_spectrum, "Eigenproblem and dark-state search", [])],
            Scenario.CROSSCHECK: [
                ("bands", scenarios.step_bands, "Band structure and crossing rates", []),
                ("exact", scenarios.step_exact, "Exact propagation (oracle)", ["bands"]),
                ("kernel", scenarios.step_kernel, "Memory kernel and Volterra solve", ["bands"]),
                ("dde", scenarios.step_dde, "Delay equation by the method of steps", ["bands"]),
                ("compare", scenarios.step_compare, "Pairwise solver deviations", ["exact", "kernel", "dde"]),
            ],
            Scenario.FIGURES: [
                ("bands", scenarios.step_bands, "Band structure and crossing rates", []),
                ("figures", figures.emit_figure_data, "Plot-ready figure datasets", ["bands"]),
            ],
        }

        plan_id = self.generate_plan_id(config.scenario)
        plan = ScenarioPlan(plan_id, config.scenario, config.label or f"{config.scenario.value} run")
        for name, action, description, deps in layouts[config.scenario]:
            plan.add_step(ScenarioStep(
                step_id=f"{plan_id}_{name}",
                name=name,
                description=description,
                action=action,
                dependencies=[f"{plan_id}_{dep}" for dep in deps],
            ))
        logger.info(f"Created plan {plan_id} with {len(plan.steps)} steps")
        return plan


class PlanExecutor:
    """Runs plan steps in dependency order, sharing outputs through a context dict"""

    def execute(self, plan: ScenarioPlan, config: ScenarioConfig,
                context: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Run ready steps until the plan completes; a failed step skips its dependents"""
        logger.info(f"Starting execution of plan {plan.plan_id}")
        context = {} if context is None else context
        context.setdefault("artifacts", [])

        plan.status = PlanStatus.IN_PROGRESS
        plan.start_time = datetime.now()

        while not plan.is_complete():
            plan.skip_blocked_steps()
            ready_steps = plan.get_ready_steps()
            if not ready_steps:
                break
            for step in ready_steps:
                self._execute_step(step, config, context)

        plan.status = PlanStatus.FAILED if plan.has_failed_steps() else PlanStatus.COMPLETED
        plan.end_time = datetime.now()
        if plan.status == PlanStatus.COMPLETED:
            logger.info(f"Plan {plan.plan_id} completed successfully")
        else:
            logger.error(f"Plan {plan.plan_id} failed")

        return {
            "success": plan.status == PlanStatus.COMPLETED,
            "message": f"Plan {plan.status.value}",
            "exit_code": plan.exit_code(),
            "plan": plan.to_dict(),
        }

    def _execute_step(self, step: ScenarioStep, config: ScenarioConfig, context: Dict[str, Any]):
        """Run one action; CrqError fails the step with its exit code, anything else propagates"""
        logger.info(f"Executing step {step.step_id}: {step.description}")
        step.status = StepStatus.RUNNING
        step.start_time = datetime.now()
        started = time.perf_counter()
        try:
            step.output = step.action(config, context) or {}
            context[step.name] = step.output
            step.status = StepStatus.COMPLETED
            logger.info(f"Step {step.step_id} completed")
        except CrqError as e:
            step.status = StepStatus.FAILED
            step.error = str(e)
            step.exit_code = e.exit_code
            logger.error(f"Step {step.step_id} failed: {type(e).__name__}: {e}")
        except Exception as e:
            step.status = StepStatus.FAILED
            step.error = str(e)
            logger.error(f"Unexpected error in step {step.step_id}: {e}")
            raise
        finally:
            step.wall_time = time.perf_counter() - started
            step.end_time = datetime.now()
