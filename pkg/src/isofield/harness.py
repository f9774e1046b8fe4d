"""Configuration-driven experiment runner behind the ``isofield`` CLI.

Every command takes an :class:`ExperimentConfig`, writes its payload files
into the output directory together with a ``manifest.json`` (config
snapshot, version, timing, per-test outcomes, sha256 digests) and returns a
process exit code:

    0  success / all tests pass
    1  at least one test failed
    2  configuration error
    3  numerical-validity error (quadrature aliasing)

Payload files contain no timestamps, so identical configs give
byte-identical payloads.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import math
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, analysis, irreps
from . import io as fio
from .groups import CyclicGroup, RotationGroup, Space, Sphere, make_space
from .spectral import (
    FieldCoefficients,
    Layout,
    PowerSpectrum,
    analyze,
    evaluate_on_rule,
    l2_norm_squared,
    parseval_energy,
    sample_ensemble,
    sample_gaussian,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

GROUP_SUITES = ("orthonormality", "round_trip", "uncorrelatedness", "convergence", "isotropy")
SPHERE_SUITES = ("orthonormality", "round_trip", "lift")
EXTRA_SUITES = ("variance", "sampler_isotropy")
STATISTICAL = {"uncorrelatedness", "convergence", "isotropy", "variance", "sampler_isotropy"}


class ConfigError(ValueError):
    pass


class NumericalValidityError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    group: str = "so3"
    N: int | None = None
    band: int = 6
    quadrature_band: int | None = None
    spectrum: Any = "geometric 0.5"
    replicates: int = 10_000
    seed: int = 0
    out: str = "out"
    suites: list[str] | None = None
    real: bool = False
    workers: int = 1
    deltas: list[float] = field(default_factory=lambda: [0.01, 0.1, 0.5])
    nugget: dict = field(default_factory=lambda: {"variance": 1.0, "off_diagonal": 0.0})
    coefficients_file: str | None = None
    base_dir: str = "."

    @property
    def space(self) -> Space:
        return make_space(self.group, self.N)

    @property
    def rule_band(self) -> int:
        return self.band if self.quadrature_band is None else self.quadrature_band

    def snapshot(self) -> dict:
        doc = dataclasses.asdict(self)
        doc.pop("base_dir")
        doc["schema_version"] = fio.SCHEMA_VERSION
        return doc

    def selected_suites(self) -> list[str]:
        default = SPHERE_SUITES if self.group == "sphere" else GROUP_SUITES
        return list(default if self.suites is None else self.suites)


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"base_dir"}


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    try:
        doc = fio.read_json(path)
    except fio.FormatError as exc:
        raise ConfigError(str(exc)) from None
    return config_from_dict(doc, overrides, base_dir=str(Path(path).parent))


def config_from_dict(doc: dict, overrides: dict | None = None, base_dir: str = ".") -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    doc = dict(doc)
    version = doc.pop("schema_version", fio.SCHEMA_VERSION)
    if version != fio.SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    unknown = set(doc) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    doc.update({k: v for k, v in (overrides or {}).items() if v is not None})
    cfg = ExperimentConfig(**doc, base_dir=base_dir)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    try:
        space = cfg.space
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.band < 1:
        raise ConfigError("band must be >= 1")
    if cfg.rule_band < (0 if isinstance(space, Sphere) else 1):
        raise ConfigError("quadrature_band too small")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    suites = cfg.selected_suites()
    allowed = set(SPHERE_SUITES if isinstance(space, Sphere) else GROUP_SUITES + EXTRA_SUITES)
    bad = [s for s in suites if s not in allowed]
    if bad:
        raise ConfigError(f"unknown or inapplicable suites for {cfg.group}: {bad}")
    if STATISTICAL & set(suites) and cfg.replicates < analysis.MIN_REPLICATES:
        raise ConfigError(f"statistical suites need replicates >= {analysis.MIN_REPLICATES}")
    spec = build_spectrum(cfg)
    if spec.band > cfg.band:
        raise ConfigError(f"spectrum reaches band {spec.band} beyond configured band {cfg.band}")


def build_spectrum(cfg: ExperimentConfig) -> PowerSpectrum:
    """Spectrum from a file or from a named family (geometric r, delta l0, polynomial p, zero)."""
    space = cfg.space
    src = cfg.spectrum
    if isinstance(src, dict) and "file" in src:
        try:
            spec = fio.load_spectrum(Path(cfg.base_dir) / src["file"])
        except fio.FormatError as exc:
            raise ConfigError(f"invalid spectrum file: {exc}") from None
        if spec.space != space:
            raise ConfigError(f"spectrum file is for {spec.space!r}, config says {space!r}")
        return spec
    if isinstance(src, str):
        parts = src.split()
        family, param = parts[0], (parts[1] if len(parts) > 1 else None)
    elif isinstance(src, dict):
        family, param = src.get("family"), src.get("param")
    else:
        raise ConfigError(f"bad spectrum source {src!r}")
    try:
        if family == "geometric":
            return PowerSpectrum.geometric(space, float(param), cfg.band)
        if family == "delta":
            return PowerSpectrum.delta(space, int(param), cfg.band)
        if family == "polynomial":
            return PowerSpectrum.polynomial(space, float(param), cfg.band)
        if family == "zero":
            return PowerSpectrum.zero(space, cfg.band)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad spectrum family parameters: {exc}") from None
    raise ConfigError(f"unknown spectrum family {family!r}")


# --------------------------------------------------------------------------
# outputs
# --------------------------------------------------------------------------

class RunWriter:
    """Collects payload files and writes the manifest."""

    def __init__(self, cfg: ExperimentConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self.tests: dict[str, bool] = {}
        self.started = time.perf_counter()
        self.started_at = datetime.now(timezone.utc).isoformat()

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.write_text(text)
        self.files.append(path)
        return path

    def finish(self, exit_code: int) -> int:
        manifest = {
            "schema_version": fio.SCHEMA_VERSION,
            "command": self.command,
            "tool_version": __version__,
            "config": self.cfg.snapshot(),
            "started_at": self.started_at,
            "wall_clock_seconds": time.perf_counter() - self.started,
            "tests": self.tests,
            "exit_code": exit_code,
            "files": [
                {"name": p.name, "sha256": hashlib.sha256(p.read_bytes()).hexdigest()} for p in self.files
            ],
        }
        (self.dir / "manifest.json").write_text(fio.dumps(manifest))
        return exit_code


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class ToleranceCheck:
    """A deterministic check: pass iff ``error < tolerance``."""

    test: str
    error: float
    tolerance: float
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.error < self.tolerance)

    def to_dict(self) -> dict:
        return {
            "test": self.test,
            "statistic": self.error,
            "se": None,
            "z": None,
            "pass": self.passed,
            "seed": None,
            "replicates": None,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


# --------------------------------------------------------------------------
# deterministic suites
# --------------------------------------------------------------------------

def orthonormality_check(space: Space, band: int, rule_band: int | None = None) -> ToleranceCheck:
    """Gram matrix of ``sqrt(d) pi_ij`` (or ``Y_lm``) and of the characters against the identity."""
    rule = space.quadrature(band if rule_band is None else rule_band)
    labels = irreps.labels_up_to(space, band)
    lay = Layout(space, labels)
    B = irreps.coefficient_basis(space, labels, rule.params)
    if not isinstance(space, Sphere):
        B = B * np.sqrt(lay.synthesis_weights())
    gram = B.conj().T @ (B * rule.weights[:, None])
    err = float(np.abs(gram - np.eye(lay.size)).max()) if lay.size else 0.0
    detail = {"labels": len(labels), "functions": lay.size, "nodes": len(rule)}
    if space.is_group:
        chi = irreps.character_table(space, labels, rule.params)
        cg = chi.conj().T @ (chi * rule.weights[:, None])
        cerr = float(np.abs(cg - np.eye(len(labels))).max())
        detail["character_error"] = cerr
        err = max(err, cerr)
    return ToleranceCheck("orthonormality", err, 1e-8, detail)


def round_trip_check(spec: PowerSpectrum, rule_band: int, seed: int) -> ToleranceCheck:
    """evaluate-then-analyze on a random field over the spectrum's labels, plus Parseval."""
    space = spec.space
    rule = space.quadrature(rule_band)
    labels = irreps.labels_up_to(space, max(spec.band, 1)) if not isinstance(space, CyclicGroup) else spec.labels
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2**31 - 2,)))
    lay = Layout(space, labels)
    vec = rng.standard_normal(lay.size) + 1j * rng.standard_normal(lay.size)
    coeffs = FieldCoefficients.from_flat(space, labels, vec)
    values = evaluate_on_rule(coeffs, rule)
    back = analyze(values, rule, labels)
    err = float(np.abs(back.flat() - vec).max()) if lay.size else 0.0
    parseval = abs(parseval_energy(coeffs) - l2_norm_squared(values, rule))
    detail = {"coefficient_error": err, "parseval_error": parseval, "aliased": back.aliased}
    if back.warnings:
        detail["diagnostic"] = list(back.warnings)
    # Parseval tolerance is 1e-8 and the coefficient tolerance 1e-9; report the worse ratio
    stat = max(err, parseval / 10.0)
    return ToleranceCheck("round_trip", stat, 1e-9, detail)


def lift_check(spec: PowerSpectrum, deltas) -> ToleranceCheck:
    a = analysis.sphere_modulus(spec, deltas)
    b = analysis.lifted_modulus(spec, deltas)
    err = float(np.abs(a.modulus - b.modulus).max()) if len(a.modulus) else 0.0
    return ToleranceCheck("lift", err, 1e-9, {"sphere": a.modulus.tolist(), "lifted": b.modulus.tolist()})


def _test_function_label(space: Space) -> int:
    if isinstance(space, CyclicGroup):
        return 1 % space.N
    return 1


def run_suite(name: str, cfg: ExperimentConfig, spec: PowerSpectrum):
    space = spec.space
    seed, reps, workers, real = cfg.seed, cfg.replicates, cfg.workers, cfg.real
    if name == "orthonormality":
        return orthonormality_check(space, cfg.band, cfg.rule_band)
    if name == "round_trip":
        return round_trip_check(spec, cfg.rule_band, seed)
    if name == "lift":
        return lift_check(spec, cfg.deltas)
    if name == "variance":
        return analysis.variance_check(spec, reps, seed, real=real, workers=workers)
    if name == "sampler_isotropy":
        return analysis.sampler_isotropy_test(spec, reps, seed, real=real, workers=workers)
    if name == "uncorrelatedness":
        labels = irreps.enumerate_dual(space, min(5, len(irreps.labels_up_to(space, cfg.band))))
        pairs = [(a, b) for i, a in enumerate(labels) for b in labels[i + 1 :]]
        if not pairs:
            return ToleranceCheck("uncorrelatedness", 0.0, 1.0, {"note": "fewer than two labels"})
        return analysis.uncorrelatedness_test(spec, pairs, reps, seed, real=real, workers=workers)
    if name == "convergence":
        return analysis.convergence_curve(spec, replicates=reps, seed=seed, real=real, workers=workers).report()
    if name == "isotropy":
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2**31 - 3,)))
        h = space.random(rng, 1)[0]
        fs = [
            analysis.character_function(space, _test_function_label(space)),
            analysis.random_function(space, min(2, cfg.band), rng) if not isinstance(space, CyclicGroup)
            else FieldCoefficients(space, {l: rng.standard_normal((1, 1)) + 0j for l in range(space.N)}),
        ]
        return analysis.isotropy_functional_test(spec, reps, h, fs, seed, real=real, workers=workers)
    raise ConfigError(f"unknown suite {name!r}")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _evaluation_points(space: Space, seed: int, k: int = 8) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(2**31 - 4,)))
    if isinstance(space, Sphere):
        origin = np.array([[0.0, 0.0]])
    else:
        origin = space.params([space.identity()])
    return np.concatenate([origin, space.random(rng, k)])


def _params_text(p) -> str:
    return " ".join(_fmt(float(v)) for v in np.atleast_1d(p))


def cmd_simulate(cfg: ExperimentConfig) -> int:
    """Sample the ensemble; write per-replicate coefficient power, covariance
    against the exact one, and replicate 0 on the quadrature grid."""
    spec = build_spectrum(cfg)
    space = spec.space
    out = RunWriter(cfg, "simulate")
    rule = space.quadrature(cfg.rule_band)
    first = sample_gaussian(spec, cfg.seed, 0, real=cfg.real)
    grid = evaluate_on_rule(first, rule)
    back = analyze(grid, rule, spec.labels)
    if back.aliased:
        out.write("diagnostic.txt", "\n".join(back.warnings) + "\n")
        return out.finish(EXIT_NUMERIC)

    layout, C = sample_ensemble(spec, cfg.seed, cfg.replicates, real=cfg.real, workers=cfg.workers)
    rows = []
    for r in range(cfg.replicates):
        for k, l in enumerate(layout.labels):
            rows.append([r, l, _fmt(float(np.sum(np.abs(C[r, layout.slice(k)]) ** 2)))])
    out.write("coefficients_summary.csv", _csv(rows, ["replicate", "label", "power"]))

    pts = _evaluation_points(space, cfg.seed)
    out.write("points.csv", _csv([[k, _params_text(p)] for k, p in enumerate(pts)], ["index", "params"]))
    if cfg.replicates >= 2:
        cov = analysis.empirical_covariance(spec, pts, max(cfg.replicates, 2), cfg.seed, real=cfg.real, workers=cfg.workers) \
            if cfg.replicates >= analysis.MIN_REPLICATES else None
        if cov is not None:
            out.write("covariance.csv", cov.to_csv())
            z = cov.z
            out.tests["covariance_within_4se"] = bool(np.all(np.abs(z.real) < 4) and np.all(np.abs(z.imag) < 4))

    fio_doc = fio.coefficients_to_dict(first.coefficients)
    out.write("replicate0_coefficients.json", fio.dumps(fio_doc))
    out.write(
        "replicate0_grid.csv",
        _csv([[_params_text(p), _fmt(w), _fmt(v.real), _fmt(v.imag)] for p, w, v in zip(rule.params, rule.weights, grid)],
             ["params", "weight", "re", "im"]),
    )
    return out.finish(EXIT_OK)


def verify_report(cfg: ExperimentConfig) -> dict:
    """The verification report document (deterministic given the config)."""
    spec = build_spectrum(cfg)
    results = [run_suite(name, cfg, spec) for name in cfg.selected_suites()]
    tests = [r.to_dict() for r in results]
    return {
        "schema_version": fio.SCHEMA_VERSION,
        "group": cfg.group,
        "band": cfg.band,
        "quadrature_band": cfg.rule_band,
        "spectrum": fio.spectrum_to_dict(spec)["entries"],
        "seed": cfg.seed,
        "replicates": cfg.replicates,
        "tests": tests,
        "pass": all(t["pass"] for t in tests),
    }


def cmd_verify(cfg: ExperimentConfig) -> int:
    out = RunWriter(cfg, "verify")
    report = verify_report(cfg)
    out.write("report.json", fio.dumps(report))
    out.tests = {t["test"]: t["pass"] for t in report["tests"]}
    return out.finish(EXIT_OK if report["pass"] else EXIT_FAIL)


def cmd_modulus(cfg: ExperimentConfig) -> int:
    spec = build_spectrum(cfg)
    out = RunWriter(cfg, "modulus")
    deltas = sorted(cfg.deltas)
    summary: dict[str, Any] = {"schema_version": fio.SCHEMA_VERSION, "deltas": deltas}
    if isinstance(spec.space, Sphere):
        sphere_spec = spec
    else:
        curve = analysis.continuity_modulus(spec, deltas)
        out.write("modulus.csv", curve.to_csv())
        summary["group_modulus"] = curve.modulus.tolist()
        summary["bound_at_smallest"] = analysis.modulus_bound(spec, deltas[0]) if deltas else None
        summary["nondecreasing"] = bool(np.all(np.diff(curve.modulus) >= 0))
        summary["within_4_variance"] = bool(np.all(curve.modulus <= 4 * spec.total_variance + 1e-12))
        out.tests["nondecreasing"] = summary["nondecreasing"]
        sphere_spec = None
        if isinstance(spec.space, RotationGroup):
            sphere_spec = PowerSpectrum(Sphere(), spec.alphas)
    if sphere_spec is not None:
        a = analysis.sphere_modulus(sphere_spec, deltas)
        b = analysis.lifted_modulus(sphere_spec, deltas)
        out.write("sphere_modulus.csv", a.to_csv())
        out.write("lifted_modulus.csv", b.to_csv())
        agree = float(np.abs(a.modulus - b.modulus).max()) if deltas else 0.0
        summary["sphere_modulus"] = a.modulus.tolist()
        summary["lifted_modulus"] = b.modulus.tolist()
        summary["sphere_lift_max_difference"] = agree
        out.tests["sphere_lift_agreement"] = agree < 1e-9
    out.write("summary.json", fio.dumps(summary))
    return out.finish(EXIT_OK if all(out.tests.values()) else EXIT_FAIL)


def cmd_nugget(cfg: ExperimentConfig) -> int:
    try:
        variance = float(cfg.nugget["variance"])
        off = float(cfg.nugget["off_diagonal"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("nugget needs numeric 'variance' and 'off_diagonal'") from None
    out = RunWriter(cfg, "nugget")
    verdict = analysis.nugget_analysis(variance, off, cfg.space, max(cfg.rule_band, 1))
    doc = {"schema_version": fio.SCHEMA_VERSION, "group": cfg.group, "band": max(cfg.rule_band, 1)}
    doc.update(verdict.to_dict())
    out.write("nugget.json", fio.dumps(doc))
    return out.finish(EXIT_OK)


def cmd_transform(cfg: ExperimentConfig) -> int:
    """Synthesise a coefficient set (file, or replicate 0 of the spectrum) on the
    quadrature grid and analyse it back."""
    space = cfg.space
    if cfg.coefficients_file:
        try:
            coeffs = fio.load_coefficients(Path(cfg.base_dir) / cfg.coefficients_file)
        except fio.FormatError as exc:
            raise ConfigError(f"invalid coefficients file: {exc}") from None
        if coeffs.space != space:
            raise ConfigError("coefficients file and config disagree on the group")
    else:
        coeffs = sample_gaussian(build_spectrum(cfg), cfg.seed, 0, real=cfg.real).coefficients
    out = RunWriter(cfg, "transform")
    rule = space.quadrature(cfg.rule_band)
    values = evaluate_on_rule(coeffs, rule)
    back = analyze(values, rule, coeffs.labels)
    out.write(
        "grid.csv",
        _csv([[_params_text(p), _fmt(w), _fmt(v.real), _fmt(v.imag)] for p, w, v in zip(rule.params, rule.weights, values)],
             ["params", "weight", "re", "im"]),
    )
    out.write("coefficients.json", fio.dumps(fio.coefficients_to_dict(back)))
    err = float(np.abs(back.flat() - coeffs.flat()).max()) if coeffs.labels else 0.0
    summary = {
        "schema_version": fio.SCHEMA_VERSION,
        "round_trip_error": err,
        "parseval_error": abs(parseval_energy(coeffs) - l2_norm_squared(values, rule)),
        "aliased": back.aliased,
        "warnings": list(back.warnings),
    }
    out.write("summary.json", fio.dumps(summary))
    if back.aliased:
        return out.finish(EXIT_NUMERIC)
    out.tests["round_trip"] = err < 1e-9
    return out.finish(EXIT_OK if err < 1e-9 else EXIT_FAIL)


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "modulus": cmd_modulus,
    "nugget": cmd_nugget,
    "transform": cmd_transform,
}
