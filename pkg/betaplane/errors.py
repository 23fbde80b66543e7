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

"""Exceptions raised by the laboratory.

Every error knows the exit code the command line front-end should return and
how to describe itself as JSON.
"""

from typing import Any, Dict, Optional


class BetaPlaneError(Exception):
    """Root of all errors raised by the betaplane modules."""

    exit_code = 1
    kind = "error"

    def __init__(self, message: str, hypothesis: Optional[str] = None,
                 **details: Any):
        super().__init__(message)
        self.message = message
        self.hypothesis = hypothesis
        self.details = details

    def to_json(self) -> Dict[str, Any]:
        return {
            "error": self.kind,
            "hypothesis": self.hypothesis,
            "message": self.message,
            "details": self.details,
        }


class ValidationError(BetaPlaneError):
    """A precondition or modeling hypothesis does not hold."""

    exit_code = 2
    kind = "validation"


class ConfigError(ValidationError):
    kind = "config"


class SingularPointError(ValidationError):
    """A closed formula was asked to evaluate at the equator y = 0."""

    kind = "singular-point"

    def __init__(self, message: str, **details: Any):
        super().__init__(message, hypothesis="y != 0", **details)


class CompatibilityError(ValidationError):
    """The zonal mean of sigma_1 (equivalently of w) does not vanish."""

    kind = "compatibility"

    def __init__(self, message: str, **details: Any):
        super().__init__(message, hypothesis="compatibility", **details)


class HypothesisError(ValidationError):
    kind = "hypothesis"


class DegenerateRayError(ValidationError):
    kind = "degenerate-ray"

    def __init__(self, message: str, **details: Any):
        super().__init__(message, hypothesis="degenerate-ray", **details)


class NumericalError(BetaPlaneError):
    """A numerical procedure failed to meet its tolerance."""

    exit_code = 3
    kind = "numerical"


class IntegrationError(NumericalError):
    kind = "integration"


class ConvergenceError(NumericalError):
    kind = "convergence"


class ConsistencyError(NumericalError):
    kind = "consistency"
