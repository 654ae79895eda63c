"""Export solver and simulator results to CSV, JSON summaries and run manifests."""

import json
import logging
from datetime import datetime
from pathlib import Path

import pandas as pd

from mfoffload import __version__
from mfoffload.models.configuration import Policy
from mfoffload.models.results import (
    ComparisonReport, FictitiousPlayReport, FiniteEvalResult, OptimizationResult, TrajectoryEnsemble,
)
from mfoffload.models.scenario import Scenario
from mfoffload.services.scenario_service import scenario_to_dict

logger = logging.getLogger(__name__)

# Bump the version when a column changes
SCHEMAS = {
    "solve-mfg": 1,
    "solve-mfc": 1,
    "mfc-lattice": 1,
    "simulate": 1,
    "finite-eval": 1,
}


def _policy_columns(k: int) -> list[str]:
    return [f"pi_{j + 1}" for j in range(k)]


class ExportService:

    def write_csv(self, frame: pd.DataFrame, path: str | Path, schema: str) -> Path:
        """CSV with a `# schema: name/vN` line above the column header."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(f"# schema: {schema}/v{SCHEMAS[schema]}\n")
            frame.to_csv(fh, index=False, float_format="%.17g")
        logger.info("Wrote %d rows to %s", len(frame), path)
        return path

    def write_json(self, data: dict, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        return path

    # ------------------------------------------------------------ frames

    def fp_history_frame(self, report: FictitiousPlayReport) -> pd.DataFrame:
        k = report.final_policy.K
        rows = []
        for entry, policy in zip(report.exploitability_history, report.policy_history):
            rows.append([entry.iteration, entry.exploitability, *policy.probs])
        return pd.DataFrame(rows, columns=["iteration", "exploitability", *_policy_columns(k)])

    def fp_summary(self, report: FictitiousPlayReport, tol: float) -> dict:
        return {
            "method": report.method,
            "policy": list(report.final_policy.probs),
            "exploitability": report.final_exploitability,
            "iterations": report.iterations_run,
            "converged": report.final_exploitability < tol,
            "cycle_detected": report.cycle_detected,
            "runtime_seconds": report.exploitability_history[-1].seconds if report.exploitability_history else 0.0,
        }

    def mfc_frame(self, result: OptimizationResult) -> pd.DataFrame:
        k = result.argmin.K
        row = [*result.argmin.probs, result.value, result.evaluations, result.refined]
        return pd.DataFrame([row], columns=[*_policy_columns(k), "value", "evaluations", "refined"])

    def mfc_summary(self, result: OptimizationResult) -> dict:
        return {
            "policy": list(result.argmin.probs),
            "value": result.value,
            "evaluations": result.evaluations,
            "refined": result.refined,
        }

    def lattice_frame(self, points, values) -> pd.DataFrame:
        frame = pd.DataFrame(points, columns=_policy_columns(points.shape[1]))
        frame["value"] = values
        return frame

    def ensemble_frame(self, ensembles: list[TrajectoryEnsemble], prediction: float) -> pd.DataFrame:
        frames = []
        for e in ensembles:
            frames.append(pd.DataFrame({
                "N": e.N,
                "time": e.time_grid,
                "mean_ntot_over_N": e.mean_ntot_over_N,
                "ci68_halfwidth": e.ci68_halfwidth,
                "trajectories": e.trajectories,
                "mean_field": prediction,
            }))
        return pd.concat(frames, ignore_index=True)

    def finite_frame(self, results: list[FiniteEvalResult]) -> pd.DataFrame:
        return pd.DataFrame(
            [[r.N, r.mode, r.estimate, r.standard_error, r.samples, r.seed] for r in results],
            columns=["N", "mode", "estimate", "standard_error", "samples", "seed"],
        )

    def comparison_summary(self, report: ComparisonReport) -> dict:
        return {
            "equilibrium_policy": list(report.equilibrium.probs),
            "equilibrium_cost": report.equilibrium_cost,
            "equilibrium_exploitability": report.equilibrium_exploitability,
            "optimum_policy": list(report.optimum.probs),
            "optimum_cost": report.optimum_cost,
            "cost_ratio": report.cost_ratio,
        }

    # ------------------------------------------------------------ manifest

    def write_manifest(
        self,
        out: str | Path,
        command: str,
        argv: list[str],
        parameters: dict,
        scenario: Scenario,
        outputs: list[Path],
        duration: float,
        seed: int | None = None,
        policy: Policy | None = None,
    ) -> Path:
        manifest = {
            "command": command,
            "argv": argv,
            "parameters": parameters,
            "scenario": scenario_to_dict(scenario),
            "policy": list(policy.probs) if policy else None,
            "seed": seed,
            "version": __version__,
            "outputs": [str(p) for p in outputs],
            "created_at": datetime.now().isoformat(),
            "duration_seconds": duration,
        }
        path = Path(f"{out}.manifest.json")
        self.write_json(manifest, path)
        logger.info("Manifest: %s", path)
        return path

    def load_manifest(self, path: str | Path) -> dict:
        return json.loads(Path(path).read_text(encoding="utf-8"))
