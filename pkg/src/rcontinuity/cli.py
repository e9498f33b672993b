"""Experiment harness.

A single JSON document describes an experiment; command-line flags may
override scalar fields with ``--set path.to.field=value``.  Each run writes
its artifacts into one output directory and reruns of the same configuration
produce byte-identical files (timings are reported on stderr only).

Exit codes: 0 success, 2 validation error, 3 runtime error, 4 a requested
certificate or verdict failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import analysis, catalog, certify, serialize, solvers
from .geometry import Window
from .setmap import OperatorEntry

_KINDS = ("modulus", "lojasiewicz", "plk", "solve", "certify", "full-pipeline")
_ALGORITHMS = ("ppa", "gdm", "qpower", "dca", "shifted-ppa")
_HYPOTHESES = ("H1", "H2", "H3", "H4", "RCLASS")


class ConfigError(ValueError):
    """Configuration rejected before any computation; carries the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _positive(value, path: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), path, "must be a number")
    _require(float(value) > 0, path, "must be positive")
    return float(value)


def _radii_list(spec, path: str) -> List[float]:
    if isinstance(spec, dict):
        for key in ("start", "stop", "count"):
            _require(key in spec, f"{path}.{key}", "missing")
        start = _positive(spec["start"], f"{path}.start")
        stop = _positive(spec["stop"], f"{path}.stop")
        count = int(spec["count"])
        _require(count >= 2 and stop > start, path, "needs count >= 2 and stop > start")
        return [float(r) for r in np.geomspace(start, stop, count)]
    _require(isinstance(spec, list) and len(spec) >= 1, path, "must be a list or {start, stop, count}")
    radii = [_positive(r, f"{path}[{i}]") for i, r in enumerate(spec)]
    _require(all(b > a for a, b in zip(radii[:-1], radii[1:])), path, "must be strictly increasing")
    return radii


@dataclass
class ExperimentConfig:
    """Validated experiment description with all defaults resolved."""

    kind: str
    operator: str
    seed: int
    tolerance: float
    out_dir: Optional[str]
    algorithm: dict
    analysis: dict
    stop: dict
    certificates: List[dict]
    resolved: dict = field(repr=False, default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        _require(isinstance(raw, dict), "", "configuration must be a JSON object")
        kind = raw.get("kind")
        _require(kind in _KINDS, "kind", f"must be one of {', '.join(_KINDS)}")
        operator = raw.get("operator")
        _require(isinstance(operator, str) and operator, "operator", "must name a catalog entry")
        try:
            entry = catalog.catalog_lookup(operator)
        except catalog.CatalogError as exc:
            raise ConfigError("operator", str(exc)) from None
        seed = int(raw.get("seed", 0))
        tolerance = _positive(raw.get("tolerance", 1e-6), "tolerance")
        out_dir = raw.get("out_dir")

        stop_raw = dict(raw.get("stop", {}))
        stop = {
            "step_tol": _positive(stop_raw.get("step_tol", 1e-10), "stop.step_tol"),
            "max_iter": int(stop_raw.get("max_iter", 100_000)),
            "divergence_guard": _positive(stop_raw.get("divergence_guard", 1e12), "stop.divergence_guard"),
        }
        _require(stop["max_iter"] >= 1, "stop.max_iter", "must be >= 1")

        algorithm = dict(raw.get("algorithm", {}))
        analysis_cfg = dict(raw.get("analysis", {}))
        certificates = [dict(c) for c in raw.get("certificates", [])]

        cfg = cls(
            kind=kind,
            operator=operator,
            seed=seed,
            tolerance=tolerance,
            out_dir=out_dir,
            algorithm=algorithm,
            analysis=analysis_cfg,
            stop=stop,
            certificates=certificates,
        )
        cfg._validate(entry)
        cfg.resolved = cfg._echo()
        return cfg

    # -- validation ---------------------------------------------------------

    def _validate(self, entry: OperatorEntry) -> None:
        needs_solver = self.kind in ("solve", "certify", "full-pipeline")
        needs_modulus = self.kind in ("modulus", "full-pipeline")
        if needs_solver:
            self._validate_algorithm(entry)
        if needs_modulus:
            self._validate_modulus(entry)
        if self.kind == "lojasiewicz":
            _require(entry.f is not None, "operator", "needs a scalar function for this experiment")
            self._window("analysis.window", required=True)
            self.analysis.setdefault("grid_count", 2001)
        if self.kind == "plk":
            _require(entry.f is not None, "operator", "needs a scalar function for this experiment")
            plk = self.analysis.get("plk")
            _require(isinstance(plk, dict), "analysis.plk", "missing PLK parameters")
            for key in ("M", "eta", "neighborhood_radius"):
                _positive(plk.get(key, 0), f"analysis.plk.{key}")
            q = plk.get("q_exp")
            _require(isinstance(q, (int, float)) and 0 <= float(q) < 1, "analysis.plk.q_exp", "must lie in [0, 1)")
            self.analysis.setdefault("xbar", [0.0] * entry.dim_in)
            self.analysis.setdefault("grid_count", 257)
        if self.kind == "certify":
            _require(bool(self.certificates), "certificates", "at least one certificate is required")
        for i, cert in enumerate(self.certificates):
            hyp = cert.get("hypothesis")
            _require(hyp in _HYPOTHESES, f"certificates[{i}].hypothesis", f"must be one of {', '.join(_HYPOTHESES)}")
            if hyp in ("H1",):
                _positive(cert.get("alpha", 0), f"certificates[{i}].alpha")
            if hyp in ("H2", "H3"):
                _positive(cert.get("beta", 0), f"certificates[{i}].beta")
            if hyp == "RCLASS":
                _positive(cert.get("alpha", 0), f"certificates[{i}].alpha")
                _positive(cert.get("beta", 0), f"certificates[{i}].beta")

    def _validate_algorithm(self, entry: OperatorEntry) -> None:
        name = self.algorithm.get("name")
        _require(name in _ALGORITHMS, "algorithm.name", f"must be one of {', '.join(_ALGORITHMS)}")
        x0 = self.algorithm.get("x0")
        _require(x0 is not None, "algorithm.x0", "missing starting point")
        x0 = [float(v) for v in (x0 if isinstance(x0, list) else [x0])]
        _require(len(x0) == entry.dim_in, "algorithm.x0", f"must have dimension {entry.dim_in}")
        self.algorithm["x0"] = x0
        if name in ("ppa", "shifted-ppa"):
            _require(entry.prox is not None, "algorithm.name", f"entry {entry.name!r} has no prox oracle")
            gamma = _positive(self.algorithm.get("gamma", 0), "algorithm.gamma")
            _require(entry.prox.valid_gamma(gamma), "algorithm.gamma", f"outside the resolvent's range ({entry.prox.note})")
        if name == "gdm":
            _require(entry.grad is not None, "algorithm.name", f"entry {entry.name!r} has no gradient oracle")
            _positive(self.algorithm.get("step", 0), "algorithm.step")
        if name == "qpower":
            _positive(self.algorithm.get("gamma", 0), "algorithm.gamma")
            q = self.algorithm.get("q")
            _require(isinstance(q, (int, float)) and float(q) > 1, "algorithm.q", "must exceed 1")
        if name == "dca":
            _require(entry.dc is not None, "algorithm.name", f"entry {entry.name!r} has no dc split")
            _positive(self.algorithm.get("gamma", 0), "algorithm.gamma")
        if name == "shifted-ppa":
            kappa = _positive(self.algorithm.get("kappa", 0), "algorithm.kappa")
            gamma = float(self.algorithm["gamma"])
            mode = self.algorithm.setdefault("step_condition", "derived")
            _require(mode in ("derived", "reciprocal"), "algorithm.step_condition", "must be 'derived' or 'reciprocal'")
            if mode == "derived":
                _require(gamma > 2 * kappa, "algorithm.gamma", "derived step condition needs gamma > 2 * kappa")
            else:
                _require(gamma < 1 / (2 * kappa), "algorithm.gamma", "reciprocal step condition needs gamma < 1 / (2 * kappa)")

    def _modulus_map(self, entry: OperatorEntry):
        target = self.analysis.setdefault("target", "forward" if self.kind == "modulus" else "auto")
        if self.kind == "full-pipeline":
            # The curve must bound distances via the witnesses the solver
            # records, so it is estimated on the inverse of the witness map.
            side = "forward" if self.algorithm.get("name") in ("ppa", "shifted-ppa") else "subgrad"
            m = entry.inverse if side == "forward" else entry.grad_inverse
            _require(m is not None, "operator", "no closed-form inverse of the witness map is registered")
            return m
        if target == "inverse":
            _require(entry.inverse is not None, "analysis.target", f"entry {entry.name!r} has no inverse")
            return entry.inverse
        _require(target == "forward", "analysis.target", "must be 'forward' or 'inverse'")
        return entry.forward

    def _validate_modulus(self, entry: OperatorEntry) -> None:
        m = self._modulus_map(entry)
        self.analysis.setdefault("xbar", [0.0] * m.dim_in)
        radii = self.analysis.get("radii", {"start": 1e-4, "stop": 1e-1, "count": 13})
        self.analysis["radii"] = _radii_list(radii, "analysis.radii")
        count = int(self.analysis.setdefault("samples_per_radius", 64))
        _require(count >= 1, "analysis.samples_per_radius", "must be >= 1")
        scheme = self.analysis.setdefault("scheme", "grid")
        _require(scheme in ("grid", "halton"), "analysis.scheme", "must be 'grid' or 'halton'")
        window = self._window("analysis.window", required=m.window_required)
        if m.window_required:
            _require(window is not None, "analysis.window",
                     f"map {m.name!r} has unbounded values and needs a compact window")

    def _window(self, path: str, required: bool) -> Optional[Window]:
        raw = self.analysis.get("window")
        if raw is None:
            _require(not required, path, "a compact window is required for this experiment")
            return None
        try:
            return Window.from_dict(raw)
        except Exception as exc:
            raise ConfigError(path, str(exc)) from None

    # -- echo ---------------------------------------------------------------

    def _echo(self) -> dict:
        return {
            "kind": self.kind,
            "operator": self.operator,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "out_dir": self.out_dir,
            "algorithm": self.algorithm,
            "analysis": self.analysis,
            "stop": self.stop,
            "certificates": self.certificates,
        }


@dataclass
class RunReport:
    config: dict
    manifest: dict
    verdicts: dict
    timings: dict  # informational only; never written to artifacts

    @property
    def any_verdict_failed(self) -> bool:
        return bool(self.verdicts.get("failed"))


def _stop_rule(cfg: ExperimentConfig) -> solvers.StopRule:
    return solvers.StopRule(
        step_tol=cfg.stop["step_tol"],
        max_iter=cfg.stop["max_iter"],
        divergence_guard=cfg.stop["divergence_guard"],
    )


def _run_algorithm(entry: OperatorEntry, cfg: ExperimentConfig) -> solvers.IterateTrace:
    alg = cfg.algorithm
    stop = _stop_rule(cfg)
    name = alg["name"]
    x0 = alg["x0"]
    if name == "ppa":
        return solvers.run_ppa(entry, alg["gamma"], x0, stop)
    if name == "gdm":
        return solvers.run_gdm(entry, alg["step"], x0, stop)
    if name == "qpower":
        return solvers.run_qpower_prox(entry, alg["gamma"], alg["q"], x0, stop)
    if name == "dca":
        return solvers.run_dca(entry, alg["gamma"], x0, stop)
    return solvers.run_shifted_ppa(
        entry, alg["kappa"], alg["gamma"], x0, stop, alg.get("step_condition", "derived")
    )


def _run_certificates(trace, entry, requests: List[dict]) -> List[certify.Certificate]:
    out = []
    for req in requests:
        hyp = req["hypothesis"]
        if hyp == "H1":
            out.append(certify.check_h1(trace, req["alpha"]))
        elif hyp == "H2":
            out.append(certify.check_h2(trace, req["beta"]))
        elif hyp == "H3":
            out.append(certify.check_h3(trace, req["beta"]))
        elif hyp == "H4":
            out.append(certify.check_h4(trace, entry))
        else:
            out.append(certify.check_rclass(trace, req["alpha"], req["beta"]))
    return out


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> RunReport:
    """Execute the configured experiment and write its artifacts.

    Every produced file is listed in the report manifest with its content
    digest; rerunning an identical configuration reproduces identical bytes.
    """
    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "out"))
    out.mkdir(parents=True, exist_ok=True)
    entry = catalog.catalog_lookup(cfg.operator)
    manifest: dict = {}
    verdicts: dict = {"failed": False}
    timings: dict = {}
    t0 = time.perf_counter()

    def emit(name: str, writer) -> None:
        path = out / name
        writer(path)
        manifest[name] = serialize.sha256_file(path)

    window = None
    if cfg.analysis.get("window") is not None:
        window = Window.from_dict(cfg.analysis["window"])

    if cfg.kind in ("modulus", "full-pipeline"):
        m = cfg._modulus_map(entry)
        curve = analysis.estimate_modulus(
            m,
            cfg.analysis["xbar"],
            window,
            cfg.analysis["radii"],
            samples_per_radius=cfg.analysis["samples_per_radius"],
            seed=cfg.seed,
            scheme=cfg.analysis["scheme"],
        )
        emit("modulus.csv", lambda p: serialize.modulus_to_csv(curve, p))
        if curve.divergent:
            fit_dict = {"L_hat": None, "theta_hat": None, "residual": None,
                        "degenerate": None, "divergent": True}
        else:
            fit_dict = analysis.fit_holder(curve).to_json_dict()
            fit_dict["divergent"] = False
        emit("holder_fit.json", lambda p: serialize.write_json(p, fit_dict))
        verdicts["holder_fit"] = fit_dict
    else:
        curve = None

    if cfg.kind == "lojasiewicz":
        fit = analysis.lojasiewicz_fit(entry, window, grid_count=cfg.analysis["grid_count"])
        emit("loja_fit.json", lambda p: serialize.write_json(p, fit.to_json_dict()))
        verdicts["lojasiewicz"] = fit.to_json_dict()

    if cfg.kind == "plk":
        plk = cfg.analysis["plk"]
        result = analysis.check_plk_exponent(
            entry,
            cfg.analysis["xbar"],
            analysis.PlkConfig(plk["M"], plk["q_exp"], plk["eta"], plk["neighborhood_radius"]),
            grid_count=cfg.analysis["grid_count"],
            seed=cfg.seed,
        )
        emit("plk.json", lambda p: serialize.write_json(p, result.to_json_dict()))
        verdicts["plk"] = result.verdict
        if result.verdict == "fail":
            verdicts["failed"] = True

    if cfg.kind in ("solve", "certify", "full-pipeline"):
        trace = _run_algorithm(entry, cfg)
        distances = [float(entry.solution_set.distance(x)) for x in trace.iterates]
        emit("trace.csv", lambda p: serialize.trace_to_csv(trace, p, distances=distances))
        verdicts["termination"] = trace.termination
        if trace.diverged:
            verdicts["diverged"] = True

        if cfg.certificates:
            certs = _run_certificates(trace, entry, cfg.certificates)
            records = [c.to_json_dict() for c in certs]
            emit("certificates.json", lambda p: serialize.write_json(p, records))
            verdicts["certificates"] = records
            if any(not c.passed for c in certs):
                verdicts["failed"] = True

        if cfg.kind == "full-pipeline":
            dv = certify.distance_trace(trace, entry.solution_set, cfg.tolerance, modulus=curve)
            emit("distance.json", lambda p: serialize.write_json(p, dv.to_json_dict()))
            verdicts["distance"] = dv.to_json_dict()
            if not dv.converged and not trace.diverged:
                verdicts["failed"] = True
            if not dv.link_ok:
                verdicts["failed"] = True

    timings["total_s"] = time.perf_counter() - t0
    report = RunReport(config=cfg.resolved, manifest=manifest, verdicts=verdicts, timings=timings)
    serialize.write_json(out / "report.json", {
        "config": report.config,
        "manifest": report.manifest,
        "verdicts": report.verdicts,
    })
    return report


def list_catalog() -> List[dict]:
    """Machine-readable catalog listing."""
    return catalog.catalog_listing()


# -- command line -------------------------------------------------------------

def _apply_override(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError("--set", f"expected path=value, got {assignment!r}")
    path, _, raw = assignment.partition("=")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = path.split(".")
    node = config
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(path, "path runs through a non-object value")
    node[keys[-1]] = value


_SUBCOMMAND_KIND = {
    "modulus": "modulus",
    "loja": "lojasiewicz",
    "plk": "plk",
    "solve": "solve",
    "certify": "certify",
    "pipeline": "full-pipeline",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rcontinuity", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(_SUBCOMMAND_KIND) + ["catalog"]:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON configuration file")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="seed override")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="PATH=VALUE", help="override a config field")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "catalog":
            listing = list_catalog()
            if args.out:
                args.out.mkdir(parents=True, exist_ok=True)
                serialize.write_json(args.out / "catalog.json", listing)
            print(json.dumps(listing, indent=2, sort_keys=True))
            return 0
        raw: dict = {}
        if args.config:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        raw["kind"] = _SUBCOMMAND_KIND[args.command]
        if args.seed is not None:
            raw["seed"] = args.seed
        for assignment in args.overrides:
            _apply_override(raw, assignment)
        cfg = ExperimentConfig.from_dict(raw)
        report = run_experiment(cfg, out_dir=args.out)
        print(json.dumps({"manifest": report.manifest, "verdicts": report.verdicts},
                         indent=2, sort_keys=True))
        print(f"elapsed: {report.timings['total_s']:.3f}s", file=sys.stderr)
        return 4 if report.any_verdict_failed else 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to a dedicated code
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
