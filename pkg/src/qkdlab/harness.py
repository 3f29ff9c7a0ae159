"""Experiment runner, report persistence and report comparison.

A run writes four files next to each other::

    <out>.json               report (schema_version, config, results, validation, batches)
    <out>.alice.txt          Alice's sifted key, ASCII bits
    <out>.bob.txt            Bob's sifted key, ASCII bits
    <out>.transcript.json    per-round columns and the classical messages

The report is canonical JSON (sorted keys, two-space indent). Everything but
the top-level ``header`` object is a pure function of the configuration.
"""
from __future__ import annotations

import datetime
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from . import __version__
from .bb84 import ProtocolTranscript, bb84_run
from .channel import EveConfig, NoiseConfig, get_family, qber
from .e91 import e91_run
from .randtest import BitSample, Thresholds, ValidationReport, read_bits, validate

SCHEMA_VERSION = 1
DEFAULT_BATCH_SIZE = 128  # qubits per hardware job
HEADER_KEY = "header"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str
    family: str
    rounds: int
    output_path: str
    batch_size: int = DEFAULT_BATCH_SIZE
    readout_epsilon: float = 0.0
    depolarizing_p: float = 0.0
    eve: bool = False
    master_seed: int = 0

    def __post_init__(self):
        if self.protocol not in ("bb84", "e91"):
            raise ConfigError(f"protocol must be 'bb84' or 'e91', got {self.protocol!r}")
        try:
            get_family(self.family)
            NoiseConfig(self.readout_epsilon, self.depolarizing_p)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.rounds < 1:
            raise ConfigError(f"rounds must be at least 1, got {self.rounds}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.eve and self.protocol == "e91":
            raise ConfigError("the intercept-resend attacker is only modeled for bb84")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be non-negative")

    @property
    def noise(self) -> NoiseConfig:
        return NoiseConfig(self.readout_epsilon, self.depolarizing_p)

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["output_path"]
        return d


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    transcript: ProtocolTranscript
    qber: Optional[float]
    validation: ValidationReport
    batches: list[dict]

    @property
    def sift_fraction(self) -> float:
        return self.transcript.sift_fraction

    @property
    def key_length(self) -> int:
        return len(self.transcript.alice_key)

    def to_dict(self, artifacts: Optional[dict] = None) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "config": self.config.to_dict(),
            "results": {
                "protocol": self.config.protocol,
                "family": self.config.family,
                "rounds": self.transcript.n_rounds,
                "sifted": self.key_length,
                "sift_fraction": self.sift_fraction,
                "key_length": self.key_length,
                "qber": self.qber,
            },
            "validation": self.validation.to_dict(),
            "batches": self.batches,
        }
        if artifacts is not None:
            d["artifacts"] = artifacts
        return d


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def strip_header(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != HEADER_KEY}


def _header() -> dict:
    now = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)
    return {"generated_at": now.isoformat(), "tool": f"qkdlab {__version__}"}


def batch_summaries(transcript: ProtocolTranscript, batch_size: int) -> list[dict]:
    """Group rounds into fixed-size jobs; bookkeeping only, keys are unaffected."""
    out = []
    rounds = transcript.rounds
    for b, start in enumerate(range(0, len(rounds), batch_size)):
        chunk = rounds[start:start + batch_size]
        sifted = [r for r in chunk if r.sifted]
        out.append({
            "batch": b,
            "first_round": start,
            "n_rounds": len(chunk),
            "sifted": len(sifted),
            "errors": sum(r.alice_bit != r.bob_bit for r in sifted),
        })
    return out


def artifact_paths(output_path: Union[str, Path]) -> dict[str, Path]:
    out = Path(output_path)
    stem = out.with_suffix("") if out.suffix == ".json" else out
    return {
        "report": out,
        "alice_key": stem.with_name(stem.name + ".alice.txt"),
        "bob_key": stem.with_name(stem.name + ".bob.txt"),
        "transcript": stem.with_name(stem.name + ".transcript.json"),
    }


def simulate(config: ExperimentConfig) -> ExperimentReport:
    """Run the protocol and the validation without touching the filesystem."""
    family = get_family(config.family)
    if config.protocol == "bb84":
        transcript = bb84_run(config.rounds, family, config.noise, EveConfig(config.eve), config.master_seed)
    else:
        transcript = e91_run(config.rounds, family, config.noise, config.master_seed)
    rate = qber(transcript.alice_key, transcript.bob_key) if transcript.alice_key else None
    if transcript.alice_key:
        label = f"{config.protocol}/{config.family}"
        validation = validate(BitSample(transcript.alice_key, label))
    else:
        validation = ValidationReport(0, f"{config.protocol}/{config.family}", Thresholds(),
                                      verdicts={t: "not run" for t in ("binomial", "ind", "gof", "lrs")})
    return ExperimentReport(config, transcript, rate, validation, batch_summaries(transcript, config.batch_size))


def run_experiment(config: ExperimentConfig, timestamp: bool = True) -> ExperimentReport:
    report = simulate(config)
    paths = artifact_paths(config.output_path)
    paths["report"].parent.mkdir(parents=True, exist_ok=True)
    artifacts = {k: p.name for k, p in paths.items() if k != "report"}
    doc = report.to_dict(artifacts)
    if timestamp:
        doc[HEADER_KEY] = _header()
    paths["alice_key"].write_text(report.transcript.alice_key + "\n")
    paths["bob_key"].write_text(report.transcript.bob_key + "\n")
    paths["transcript"].write_text(dumps(report.transcript.to_dict()))
    paths["report"].write_text(dumps(doc))
    return report


def load_report(path: Union[str, Path]) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if "schema_version" not in doc:
        raise ValueError(f"{path}: not a qkdlab report (no schema_version)")
    return doc


def load_transcript(path: Union[str, Path]) -> ProtocolTranscript:
    with open(path) as fh:
        return ProtocolTranscript.from_dict(json.load(fh))


def validate_file(path: Union[str, Path], fmt: str = "ascii", thresholds: Thresholds = Thresholds()) -> ValidationReport:
    bits = read_bits(path, fmt)
    return validate(BitSample(bits, str(path)), thresholds)


def fmt_num(x) -> str:
    """At least six significant digits; ``n/a`` for missing values."""
    if x is None:
        return "n/a"
    if isinstance(x, int):
        return str(x)
    return format(x, "#.6g")


COMPARE_COLUMNS = (
    ("entropy", "Entropy"),
    ("binomial_p", "Binomial p"),
    ("ind_p", "IND p"),
    ("gof_p", "GOF p"),
    ("lrs_p", "LRS p"),
    ("error_rate", "Error rate"),
)


def compare_report(paths: Sequence[Union[str, Path]]) -> tuple[str, dict]:
    """Side-by-side table of several run reports, one row per report."""
    if len(paths) < 2:
        raise ValueError("compare needs at least two reports")
    docs = [load_report(p) for p in paths]
    versions = {d["schema_version"] for d in docs}
    if len(versions) != 1:
        raise ValueError(f"reports have mixed schema versions: {sorted(versions)}")
    rows = []
    for path, d in zip(paths, docs):
        v, res = d["validation"], d["results"]
        rows.append({
            "report": str(path),
            "variant": f"{res['protocol'].upper()} / {res['family']}",
            "entropy": v["entropy_per_bit"],
            "binomial_p": v["binomial_p"],
            "ind_p": v["ind_p"],
            "gof_p": v["gof_p"],
            "lrs_p": v["lrs_p"],
            "error_rate": res["qber"],
            "verdicts": v["verdicts"],
        })
    header = ["Variant"] + [title for _, title in COMPARE_COLUMNS]
    body = [[r["variant"]] + [fmt_num(r[key]) for key, _ in COMPARE_COLUMNS] for r in rows]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w) for i, (cell, w) in enumerate(zip(line, widths)))
             for line in [header] + body]
    lines.insert(1, "  ".join("-" * w for w in widths))
    aggregate = {"schema_version": versions.pop(), "rows": rows}
    return "\n".join(lines) + "\n", aggregate
