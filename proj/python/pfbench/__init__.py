#
# Copyright 2026 The pfbench Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Image restoration benchmark toolkit.

Thin wrappers over the compiled core. Images are float32 numpy arrays
shaped (H, W) or (H, W, C) with values in [0, 1].
"""

import json

from . import _core
from ._core import (
    PfError,
    adversarial,
    blur,
    bootstrap_ci,
    ddim_sample_gaussian,
    extract_tiles,
    gaussian_kernel,
    info_nce,
    mae,
    psnr,
    rank_csv,
    resample,
    ssim,
    stitch_tiles,
)

__all__ = [
    "PfError",
    "adversarial",
    "blur",
    "bootstrap_ci",
    "ddim_sample_gaussian",
    "degrade",
    "evaluate",
    "extract_tiles",
    "gaussian_kernel",
    "generate_benchmark",
    "info_nce",
    "mae",
    "psnr",
    "rank_csv",
    "resample",
    "ssim",
    "stitch_tiles",
    "task_key",
]


def degrade(image, spec):
    """Applies a degradation spec (dict with "steps" and "seed").

    Returns the degraded image and its provenance record as a dict.
    """
    out, provenance = _core.degrade_json(image, json.dumps(spec))
    return out, json.loads(provenance)


def task_key(task):
    """Canonical key of a task dict such as {"kind": "sr", "scale": 4}."""
    return _core.task_key(json.dumps(task))


def generate_benchmark(clean_dir, tasks, seed, out_dir, threads=1):
    """Writes degraded pairs and manifests; returns the task keys."""
    return _core.generate_benchmark(
        str(clean_dir), json.dumps({"tasks": list(tasks)}), seed, str(out_dir), threads
    )


def evaluate(manifest, restorer="identity", threads=1):
    """Runs one restorer over a manifest and returns the report as a dict."""
    return json.loads(_core.evaluate_json(str(manifest), restorer, threads))
