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

""" Store command-line options for global access. """

import argparse
from typing import Sequence

args = None

SUBCOMMANDS = ("validate", "stationary", "residual-study", "rossby",
               "poincare-rays", "thermocline", "scales")


def parse_args(argv: Sequence[str], description: str) -> None:
    parser = argparse.ArgumentParser(
        description=description,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    parser.add_argument("experiment",
                        choices=SUBCOMMANDS,
                        help="Experiment to run")

    parser.add_argument("-c",
                        "--config",
                        required=True,
                        help="Run configuration file",
                        metavar="JSON")

    parser.add_argument("-o",
                        "--out",
                        default="out",
                        help="Directory that receives every emitted file",
                        metavar="DIR")

    parser.add_argument("--threads",
                        type=int,
                        default=1,
                        help="Worker threads for independent sub-tasks and"
                        " FFTs. Reported numbers do not depend on N.",
                        metavar="N")

    parser.add_argument("-e",
                        "--extend",
                        action="append",
                        default=[],
                        help="Partial configuration merged into the run"
                        " configuration. This option can be used multiple"
                        " times.",
                        metavar="JSON")

    parser.add_argument("-s",
                        "--set",
                        action="append",
                        default=[],
                        help="Modify individual parts of the configuration"
                        " (VALUE is JSON). This option can be used multiple"
                        " times.",
                        metavar="PATH=VALUE")

    # verbose holds the number of times the flag was used: warning (the
    # default), info (-v) and debug (-vv).
    parser.add_argument("-v",
                        "--verbose",
                        default=0,
                        action="count",
                        help="Increase the verbosity level. By default only"
                        " errors and warnings will show. Use '-v' to also show"
                        " information messages and '-vv' for debugging.")

    global args  # pylint: disable=global-statement
    args = parser.parse_args(argv)
