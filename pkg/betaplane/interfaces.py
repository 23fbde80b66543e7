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

import abc
import logging
import os
from typing import Any, Dict, List


class Experiment(abc.ABC):
    """One CLI subcommand: reads its configuration sections and writes its
    output files into `out_dir`."""

    def __init__(self, name: str, config: Dict[str, Any], threads: int = 1):
        self._name = name
        self.config = config
        self.threads = threads
        self.logger = logging.getLogger(name)

    @property
    def name(self) -> str:
        return self._name

    def log(self, message: str, *args: Any) -> None:
        self.logger.info("[%s] " + message, self.name, *args)

    def path(self, out_dir: str, file_name: str) -> str:
        return os.path.join(out_dir, file_name)

    @abc.abstractmethod
    def run(self, out_dir: str) -> List[str]:
        """Run the experiment and return the paths of the emitted files."""
