"""
Validation stage.
Checks a scenario file and its sweep plan without simulating anything.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Union

from pydantic import ValidationError

from ..config import ConfigError, build_chains, build_pulse_params, build_scenario, load_config
from ..receiver import validate_sweep_plan
from ..schemas import InvalidArgumentError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2


def run(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Validate a scenario.

    Args:
        config_path: YAML scenario file

    Returns:
        Dictionary with statusCode, violations and the sweep check
    """
    logger.info(f"Validating scenario {config_path}")
    try:
        config, digest = load_config(config_path)
    except ConfigError as e:
        for violation in e.violations:
            logger.error(f"{e.path}: {violation}")
        return {'statusCode': EXIT_INVALID, 'violations': e.violations}

    violations = []
    try:
        params = build_pulse_params(config)
        build_scenario(config)
        chains = build_chains(config)
    except (ValidationError, InvalidArgumentError) as e:
        logger.error(f"Scenario objects rejected: {e}")
        return {'statusCode': EXIT_INVALID, 'violations': [str(e)]}

    sweep = validate_sweep_plan(chains.plan, params.pri_s)
    if not sweep.valid:
        violations.append(sweep.message)
    if chains.plan.ramp_period_s > config.pass_.pass_duration_s:
        violations.append("pass.pass_duration_s is shorter than nsr.ramp_period_s")

    status = EXIT_INVALID if violations else EXIT_OK
    logger.info(f"Validation {'failed' if violations else 'passed'}: {sweep.message}")
    return {
        'statusCode': status,
        'violations': violations,
        'config_digest': digest,
        'sweep': sweep.model_dump(),
    }
