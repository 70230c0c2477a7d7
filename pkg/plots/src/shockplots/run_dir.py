"""Typed access to one run directory's artifact contract.

A run directory is whatever the solver CLI emitted: a manifest plus CSV
(header row, UTF-8, '.' decimal) and JSON artifacts. Loaders here parse
those files and nothing else.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["RunDirectory", "RunDirectoryError"]

#: Keys every manifest carries regardless of pipeline mode.
MANIFEST_KEYS = ("mode", "config", "versions", "artifacts", "warnings")

MODES = ("datagen", "evolve", "burgers", "sweep-r0", "sweep-delta")


class RunDirectoryError(Exception):
    """Missing or schema-invalid manifest, or an unreadable artifact."""


class RunDirectory:
    """One CLI output directory, validated on construction.

    The manifest must exist and carry the documented keys; individual
    artifacts are loaded lazily so a directory missing optional files is
    still usable for the figures its files do support.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        mf = self.path / "manifest.json"
        if not mf.is_file():
            raise RunDirectoryError(f"no manifest.json in {self.path}")
        try:
            manifest = json.loads(mf.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise RunDirectoryError(f"manifest.json is not valid JSON: {exc}") from exc
        missing = [k for k in MANIFEST_KEYS if k not in manifest]
        if missing:
            raise RunDirectoryError(f"manifest.json lacks keys {missing}")
        if manifest["mode"] not in MODES:
            raise RunDirectoryError(f"unknown run mode {manifest['mode']!r}")
        self.manifest: dict = manifest

    @property
    def mode(self) -> str:
        return self.manifest["mode"]

    def has(self, name: str) -> bool:
        return (self.path / name).is_file()

    def csv(self, name: str) -> dict[str, np.ndarray]:
        """Load a header-row CSV as {column: 1-d float array}.

        Any non-numeric cell comes back as NaN; figures only consume the
        numeric columns.
        """
        f = self.path / name
        if not f.is_file():
            raise RunDirectoryError(f"{name} not present in {self.path}")
        with f.open(encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
        data = np.genfromtxt(f, delimiter=",", skip_header=1, ndmin=2)
        if data.shape[0] and data.shape[1] != len(header):
            raise RunDirectoryError(
                f"{name}: {data.shape[1]} columns under a {len(header)}-name header"
            )
        return {h: data[:, i] for i, h in enumerate(header)}

    def json(self, name: str) -> dict:
        f = self.path / name
        if not f.is_file():
            raise RunDirectoryError(f"{name} not present in {self.path}")
        return json.loads(f.read_text(encoding="utf-8"))
