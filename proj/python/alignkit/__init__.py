# python/alignkit/__init__.py

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
# WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
# MERCHANTABLITY OR NON-INFRINGEMENT.
# See the Apache 2 License for the specific language governing permissions and
# limitations under the License.

from ._alignkit import (
    BackendError,
    CapabilityError,
    ConfigError,
    Error,
    FitError,
    LexiconModel,
    MalformedInput,
    TimeoutError,
    TrainingError,
    UndefinedMetric,
    __version__,
    emit_pharaoh,
    evaluate,
    extract,
    parse_pharaoh,
    run_cli,
    synthetic_corpus,
    train_ibm,
)

__all__ = [
    "BackendError",
    "CapabilityError",
    "ConfigError",
    "Error",
    "FitError",
    "LexiconModel",
    "MalformedInput",
    "TimeoutError",
    "TrainingError",
    "UndefinedMetric",
    "__version__",
    "emit_pharaoh",
    "evaluate",
    "extract",
    "parse_pharaoh",
    "run_cli",
    "synthetic_corpus",
    "train_ibm",
]
