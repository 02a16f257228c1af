"""Device configuration files (YAML) <-> DeviceModel."""

from __future__ import annotations

from pathlib import Path

import yaml

from .model import BusModeSpec, DeviceModel, TransmonSpec, validate_model

__all__ = ["ConfigError", "load_device_config", "dump_device_config"]

DEFAULT_TRANSMON_LEVELS = 5
DEFAULT_BUS_LEVELS = 3


class ConfigError(ValueError):
    """Raised for unparseable or invalid device configuration files."""


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key '{key}'")
    return mapping[key]


def load_device_config(path: str | Path) -> DeviceModel:
    """Parse a device config file and validate the resulting model.

    Schema::

        qubits:                      # exactly two entries
          - frequency_ghz: <float>
            anharmonicity_ghz: <float>
            levels: <int>            # optional, default 5
        buses:                       # optional list
          - frequency_ghz: <float>
            g_ghz: [<float>, <float>]
            levels: <int>            # optional, default 3
        j0_ghz: <float>              # optional, default 0
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:  # carries line/column context
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    qubits = _require(raw, "qubits", str(path))
    if not isinstance(qubits, list) or len(qubits) != 2:
        raise ConfigError(f"{path}: 'qubits' must list exactly two entries")
    transmons = []
    for i, q in enumerate(qubits):
        where = f"{path}: qubits[{i}]"
        transmons.append(
            TransmonSpec(
                frequency_ghz=float(_require(q, "frequency_ghz", where)),
                anharmonicity_ghz=float(_require(q, "anharmonicity_ghz", where)),
                levels=int(q.get("levels", DEFAULT_TRANSMON_LEVELS)),
            )
        )
    buses = []
    for j, b in enumerate(raw.get("buses") or []):
        where = f"{path}: buses[{j}]"
        g = _require(b, "g_ghz", where)
        if not isinstance(g, (list, tuple)) or len(g) != 2:
            raise ConfigError(f"{where}: g_ghz must be a pair [g0, g1]")
        buses.append(
            BusModeSpec(
                frequency_ghz=float(_require(b, "frequency_ghz", where)),
                g_ghz=(float(g[0]), float(g[1])),
                levels=int(b.get("levels", DEFAULT_BUS_LEVELS)),
            )
        )
    model = DeviceModel(
        transmons=(transmons[0], transmons[1]),
        j0_ghz=float(raw.get("j0_ghz", 0.0)),
        buses=tuple(buses),
    )
    violations = validate_model(model)
    if violations:
        raise ConfigError(f"{path}: " + "; ".join(violations))
    return model


def dump_device_config(model: DeviceModel) -> str:
    """Render a model back to the YAML schema (round-trips load_device_config)."""
    doc = {
        "qubits": [
            {
                "frequency_ghz": q.frequency_ghz,
                "anharmonicity_ghz": q.anharmonicity_ghz,
                "levels": q.levels,
            }
            for q in model.transmons
        ],
        "j0_ghz": model.j0_ghz,
    }
    if model.buses:
        doc["buses"] = [
            {
                "frequency_ghz": b.frequency_ghz,
                "g_ghz": list(b.g_ghz),
                "levels": b.levels,
            }
            for b in model.buses
        ]
    return yaml.safe_dump(doc, sort_keys=False)
