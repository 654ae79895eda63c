"""Scenario files and policy arguments.

Scenario file format (plain text, `#` starts a comment):

    mode = stationary
    f_per = 0.5
    lambda = 0.225

    [support]
    p    W   L   f   R
    0.2  1   1   5   10
    0.4  3   2   5   10
    0.4  5   3   5   10

Numbers are parsed as exact decimals, so the probability check is exact.
"""

import json
import logging
from decimal import Decimal, InvalidOperation
from pathlib import Path

from mfoffload.errors import ScenarioFileError, ValidationError
from mfoffload.models.configuration import PROB_SUM_TOL, Configuration, Policy, SupportDistribution
from mfoffload.models.scenario import GameMode, OneShotScenario, Scenario, StationaryScenario

logger = logging.getLogger(__name__)

HEADER_KEYS = ("mode", "f_per", "lambda")
SUPPORT_COLUMNS = ("p", "W", "L", "f", "R")


def _decimal(text: str, field: str, line: int) -> Decimal:
    try:
        value = Decimal(text)
    except InvalidOperation:
        raise ScenarioFileError(f"'{text}' is not a number", field, line) from None
    if not value.is_finite():
        raise ScenarioFileError(f"'{text}' is not finite", field, line)
    return value


def _positive(value: Decimal, field: str, line: int) -> Decimal:
    if value <= 0:
        raise ScenarioFileError(f"must be positive, got {value}", field, line)
    return value


def parse_scenario_text(text: str) -> Scenario:
    header: dict[str, tuple[str, int]] = {}
    columns: list[str] | None = None
    support_line: int | None = None
    rows: list[tuple[int, dict[str, Decimal]]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        if line.startswith("["):
            if line != "[support]":
                raise ScenarioFileError(f"unknown section {line}", line=lineno)
            if support_line is not None:
                raise ScenarioFileError("duplicate [support] section", line=lineno)
            support_line = lineno
            continue

        if support_line is None:
            if "=" not in line:
                raise ScenarioFileError("expected 'key = value'", line=lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in HEADER_KEYS:
                raise ScenarioFileError("unknown field", key, lineno)
            if key in header:
                raise ScenarioFileError("given twice", key, lineno)
            header[key] = (value, lineno)
            continue

        tokens = line.split()
        if columns is None:
            unknown = [t for t in tokens if t not in SUPPORT_COLUMNS]
            if unknown:
                raise ScenarioFileError(f"unknown column(s) {', '.join(unknown)}", unknown[0], lineno)
            missing = [c for c in SUPPORT_COLUMNS if c not in tokens]
            if missing or len(tokens) != len(SUPPORT_COLUMNS):
                raise ScenarioFileError(
                    f"support header must name each of {' '.join(SUPPORT_COLUMNS)} once", "support", lineno,
                )
            columns = tokens
            continue
        if len(tokens) != len(columns):
            raise ScenarioFileError(f"expected {len(columns)} values, got {len(tokens)}", "support", lineno)
        rows.append((lineno, {c: _decimal(t, c, lineno) for c, t in zip(columns, tokens)}))

    if "mode" not in header:
        raise ScenarioFileError("missing", "mode")
    mode_text, mode_line = header["mode"]
    try:
        mode = GameMode(mode_text)
    except ValueError:
        raise ScenarioFileError(f"must be 'oneshot' or 'stationary', got '{mode_text}'", "mode", mode_line) from None

    if "f_per" not in header:
        raise ScenarioFileError("missing", "f_per")
    value, lineno = header["f_per"]
    f_per = _positive(_decimal(value, "f_per", lineno), "f_per", lineno)

    lam = None
    if mode is GameMode.STATIONARY:
        if "lambda" not in header:
            raise ScenarioFileError("required in stationary mode", "lambda")
        value, lineno = header["lambda"]
        lam = _positive(_decimal(value, "lambda", lineno), "lambda", lineno)
    elif "lambda" in header:
        raise ScenarioFileError("only allowed in stationary mode", "lambda", header["lambda"][1])

    if support_line is None or not rows:
        raise ScenarioFileError("at least one support row is required", "support", support_line)

    for lineno, row in rows:
        if row["p"] < 0:
            raise ScenarioFileError(f"must be >= 0, got {row['p']}", "p", lineno)
        for c in ("W", "L", "f", "R"):
            _positive(row[c], c, lineno)
    total = sum(row["p"] for _, row in rows)
    if abs(total - 1) > Decimal(str(PROB_SUM_TOL)):
        raise ScenarioFileError(f"probabilities sum to {total}, expected 1", "p", support_line)

    try:
        dist = SupportDistribution.from_lists(
            [float(row["p"]) for _, row in rows],
            [Configuration(*(float(row[c]) for c in ("W", "L", "f", "R"))) for _, row in rows],
        )
        if mode is GameMode.STATIONARY:
            return StationaryScenario(dist, float(f_per), float(lam))
        return OneShotScenario(dist, float(f_per))
    except ValidationError as e:
        raise ScenarioFileError(str(e)) from e


def parse_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ScenarioFileError(f"scenario file {path} does not exist")
    scenario = parse_scenario_text(path.read_text(encoding="utf-8"))
    logger.info("Loaded %s scenario with K=%d from %s", scenario.mode.value, scenario.K, path)
    return scenario


def scenario_to_dict(scenario: Scenario) -> dict:
    data = {
        "mode": scenario.mode.value,
        "f_per": scenario.f_per,
        "support": [
            {"p": p, "W": c.W, "L": c.L, "f": c.f, "R": c.R} for p, c in scenario.dist.points
        ],
    }
    if isinstance(scenario, StationaryScenario):
        data["lambda"] = scenario.lam
    return data


def parse_policy(value: str, k: int) -> Policy:
    """Comma-separated decimals, or a path to a solver summary JSON with a 'policy' list."""
    path = Path(value)
    if path.suffix == ".json" or path.is_file():
        try:
            summary = json.loads(path.read_text(encoding="utf-8"))
            probs = summary["policy"]
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise ValidationError(f"cannot read a policy from {path}: {e}") from e
    else:
        try:
            probs = [float(Decimal(x.strip())) for x in value.split(",")]
        except InvalidOperation:
            raise ValidationError(f"policy '{value}' is not a comma-separated list of numbers") from None
    policy = Policy(tuple(float(x) for x in probs))
    if policy.K != k:
        raise ValidationError(f"policy has {policy.K} entries but the scenario has {k} types")
    return policy
