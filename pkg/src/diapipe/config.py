"""Flat ``key = value`` run configuration with named scoring presets.

Resolution order: built-in defaults, then the preset, then the config
file, then explicit overrides. Unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Optional

from .pipeline import PipelineConfig
from .scoring import PRESETS, ScoreConfig
from .spectral_cluster import ClusterConfig
from .vad_segmenter import HysteresisConfig, WindowConfig

DEFAULT_SEED = 0


def _bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in {"1", "true", "yes", "on"}:
        return True
    if value in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if text is None or str(text).strip().lower() in {"", "none"} else int(text)


def _opt_float(text):
    return None if text is None or str(text).strip().lower() in {"", "none"} else float(text)


def _opt_str(text):
    return None if text is None or str(text).strip() == "" else str(text).strip()


# key -> (parser, default)
KEYS: dict[str, tuple[Any, Any]] = {
    "preset": (_opt_str, None),
    "seed": (int, DEFAULT_SEED),
    "window.width_s": (float, 2.0),
    "window.step_s": (float, 1.0),
    "hysteresis.theta_on": (_opt_float, None),
    "hysteresis.theta_off": (_opt_float, None),
    "hysteresis.min_dur_s": (float, 0.2),
    "hysteresis.max_gap_s": (float, 0.3),
    "cluster.top_k": (int, 10),
    "cluster.max_speakers": (int, 20),
    "cluster.kmeans_restarts": (int, 10),
    "cluster.kmeans_iters": (int, 300),
    "cluster.row_normalize": (_bool, False),
    "pipeline.oracle_n": (_opt_int, None),
    "pipeline.oracle_vad": (_opt_str, None),
    "score.collar_s": (float, 0.25),
    "score.skip_overlap": (_bool, False),
    "input.features": (_opt_str, None),
    "input.params": (_opt_str, None),
    "output.path": (_opt_str, None),
}


def preset_values(name: str) -> dict[str, Any]:
    try:
        cfg = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return {"score.collar_s": cfg.collar_s, "score.skip_overlap": cfg.skip_overlap}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ValueError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @classmethod
    def resolve(cls, preset: Optional[str] = None,
                file_values: Optional[Mapping[str, Any]] = None,
                overrides: Optional[Mapping[str, Any]] = None) -> "RunConfig":
        """Expand defaults, preset, file values and overrides, in that order.

        A preset named inside the config file (or overrides) is honoured when
        ``preset`` is not given explicitly.
        """
        layers = [dict(file_values or {}), dict(overrides or {})]
        for layer in layers:
            for key in layer:
                if key not in KEYS:
                    raise ValueError(f"unknown config key {key!r}")
        if preset is None:
            for layer in layers:
                preset = layer.get("preset", preset)
        merged = {key: default for key, (_, default) in KEYS.items()}
        if preset:
            merged["preset"] = preset
            merged.update(preset_values(preset))
        for layer in layers:
            for key, value in layer.items():
                if key == "preset":
                    continue
                parser = KEYS[key][0]
                try:
                    merged[key] = parser(value) if isinstance(value, str) else value
                except ValueError as err:
                    raise ValueError(f"bad value for {key}: {err}") from None
        return cls(values=merged)

    def score_config(self) -> ScoreConfig:
        return ScoreConfig(collar_s=self["score.collar_s"],
                           skip_overlap=self["score.skip_overlap"])

    def cluster_config(self) -> ClusterConfig:
        return ClusterConfig(
            top_k=self["cluster.top_k"],
            max_speakers=self["cluster.max_speakers"],
            kmeans_restarts=self["cluster.kmeans_restarts"],
            kmeans_iters=self["cluster.kmeans_iters"],
            seed=self["seed"],
            row_normalize=self["cluster.row_normalize"],
        )

    def hysteresis_config(self) -> HysteresisConfig:
        on, off = self["hysteresis.theta_on"], self["hysteresis.theta_off"]
        if on is None or off is None:
            raise ValueError(
                "hysteresis.theta_on and hysteresis.theta_off must be set "
                "(tune them on development data)"
            )
        return HysteresisConfig(theta_on=on, theta_off=off,
                                min_dur_s=self["hysteresis.min_dur_s"],
                                max_gap_s=self["hysteresis.max_gap_s"])

    def window_config(self) -> WindowConfig:
        return WindowConfig(width_s=self["window.width_s"], step_s=self["window.step_s"])

    def pipeline_config(self, oracle_vad=None) -> PipelineConfig:
        return PipelineConfig(
            hysteresis=self.hysteresis_config(),
            window=self.window_config(),
            cluster=self.cluster_config(),
            oracle_vad=tuple(oracle_vad) if oracle_vad is not None else None,
            oracle_n=self["pipeline.oracle_n"],
        )
