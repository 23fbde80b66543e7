#! /usr/bin/env python3
# Copyright 2023 Google LLC
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Beta-plane thin-layer laboratory.

Builds the stationary wind-driven solution of a fast rotating thin layer
near the equator, measures how well it solves the stationary system, and
runs the Rossby, Poincare and thermocline experiments that go with it.
"""

import json
import logging
import os
from typing import Any, Dict, List, Sequence
import sys

import jsonschema
import yaml

import betaplane_options
from errors import BetaPlaneError, ConfigError
import experiments
import utilities


logger = logging.getLogger("betaplane")

SCHEMA_FILE = os.path.join(os.path.dirname(os.path.abspath(__file__)),
                           os.pardir, "config", "run.schema.json")


def schema_validator() -> jsonschema.protocols.Validator:
    with open(SCHEMA_FILE, "r", encoding="ascii") as schema_file:
        run_schema = json.load(schema_file)

    # Check that the schema is valid
    vcls = jsonschema.validators.validator_for(run_schema)
    try:
        vcls.check_schema(run_schema)
    except jsonschema.exceptions.SchemaError as e:
        raise ConfigError(f"in '{SCHEMA_FILE}': {e.message}") from e

    return vcls(run_schema)


def validate_config(validator: jsonschema.protocols.Validator,
                    config: Dict[str, Any]) -> None:
    errors = sorted(validator.iter_errors(config),
                    key=lambda e: [str(p) for p in e.path])
    if errors:
        errs = []
        for err in errors:
            if err.path:
                errs.append("/".join(str(p) for p in err.path) + ": "
                            + err.message)
            else:
                errs.append(err.message)
        logger.error("Found %d errors in the run configuration:\n%s",
                     len(errors), "\n".join(errs))
        raise ConfigError(f"{len(errors)} error(s) in the run configuration",
                          errors=errs)


def load_config_file(name: str) -> Dict[str, Any]:
    try:
        with open(name, "r", encoding="ascii") as file:
            if name.endswith(".json"):
                return json.load(file)

            if not name.endswith(".yaml"):
                logger.warning("The file '%s' has an unrecognized suffix"
                               " (expected .json or .yaml). Trying to load it"
                               " as YAML.", name)

            return yaml.safe_load(file)
    except (OSError, json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot load '{name}': {e}", file=name) from e


def load_run_config() -> Dict[str, Any]:
    """Read the run configuration and apply the command line changes."""
    args = betaplane_options.args

    config = load_config_file(args.config)

    validator = schema_validator()

    # Check that the original (un-patched) configuration is valid.
    validate_config(validator, config)

    # Read additional modifications from files.
    for fl in args.extend:
        logger.info("Applying modifications from file '%s'", fl)

        data = load_config_file(fl)

        merge_config(config, data)

    # Apply command line modifications.
    for cl_set in args.set:
        logger.info("Applying setting '%s'", cl_set)

        path, sep, value = cl_set.partition("=")
        if not sep:
            raise ConfigError(f"setting '{cl_set}' is not of the form"
                              " PATH=VALUE")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError as e:
            raise ConfigError(f"value of setting '{cl_set}' is not JSON")\
                from e

        apply_setting(config, path.split("."), parsed)

    # Check that the patched configuration is valid
    if args.extend or args.set:
        validate_config(validator, config)

    remove_comments(config)

    logger.debug("Configuration:\n%s", json.dumps(config, indent=2))

    return config


def apply_setting(config: Dict[str, Any], path: Sequence[str],
                  value: Any) -> None:
    """Modify an element of the run configuration.

    Args:
      config: run configuration to be modified
      path: path through tree of dictionaries
      value: value to be set
    """
    # We expect path to be non-empty
    assert path

    for idx, seg in enumerate(path):
        if not isinstance(config, dict) or seg not in config:
            raise ConfigError(f"attempt to override non-existent element:"
                              f" {'.'.join(path[:idx+1])}",
                              path=".".join(path))

        # Traverse down `path` to update config until the last element.
        if idx < len(path) - 1:
            config = config[seg]
        else:
            # Last element
            logger.info("Changing '%s' to '%s'", seg, value)
            config[seg] = value


def merge_config(config: Dict[str, Any],
                 modification: Dict[str, Any]) -> None:
    """Merge modification tree into the run configuration.

    Modification is performed by recursing down to leaves
    replacing old entries with entries from modification.

    Args:
      config: run configuration to be modified
      modification: configuration to be merged into config
    """

    for key, val in modification.items():
        if (key in config and isinstance(val, dict) and not val.pop("replace",
                                                                    False)):
            merge_config(config[key], val)
        else:
            logger.info("  Replacing '%s' with '%s'", key, val)
            config[key] = val


def remove_comments(desc: Dict[str, Any]) -> None:
    comments = [
        k for k in desc if k == "description" or k.startswith("__comment__")
    ]

    for k in comments:
        del desc[k]

    for _, val in desc.items():
        if isinstance(val, dict):
            remove_comments(val)


def run(out_dir: str) -> List[str]:
    args = betaplane_options.args
    config = load_run_config()
    experiment = experiments.create_experiment(args.experiment, config,
                                               args.threads)
    experiment.log("starting, output in '%s'", out_dir)
    try:
        return experiment.run(out_dir)
    except BetaPlaneError as e:
        e.emitted = getattr(experiment, "emitted", [])
        raise


def main(argv: Sequence[str]) -> int:
    betaplane_options.parse_args(argv, description=__doc__)
    # This assert convinces pytype that args is not None.
    assert betaplane_options.args is not None
    args = betaplane_options.args

    log_level = logging.WARNING
    if args.verbose == 1:
        log_level = logging.INFO
    elif args.verbose > 1:
        log_level = logging.DEBUG

    utilities.logging_config(log_level)
    utilities.fft_workers = max(1, args.threads)

    os.makedirs(args.out, exist_ok=True)
    extra = {"experiment": args.experiment}

    try:
        files = run(args.out)
    except BetaPlaneError as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        error_file = utilities.write_json(
            os.path.join(args.out, "error.json"), "error", e.to_json())
        utilities.write_manifest(
            args.out, list(getattr(e, "emitted", [])) + [error_file],
            dict(extra, exit_code=e.exit_code))
        return e.exit_code

    utilities.write_manifest(args.out, files, dict(extra, exit_code=0))
    return 0


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
