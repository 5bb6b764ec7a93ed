#!/usr/bin/env python3
"""
parlame - experiment runner for the parabolic Lamé toolkit.

Every subcommand runs one reproducible check, writes its CSV table and JSON
report under the output directory and prints a one-line PASS/FAIL summary.
Exit codes: 0 PASS, 2 FAIL, 1 usage or configuration error.
"""

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

try:
    import numpy as np
    from rich.console import Console
    from rich.table import Table
except ImportError as e:
    print(f"Missing required dependency: {e}")
    print("Install with: pip install -r requirements.txt")
    sys.exit(1)

from dotenv import load_dotenv

from artifacts import write_csv, write_json
from caloric import (CaloricPolynomial, PolynomialField, PolynomialSolution, caloric_monomial, caloric_w,
                     double_orthogonality_gram, harmonic_count, heat_polynomial, poly_cauchy_solve,
                     solve_polynomial_problem, heat_basis)
from cauchy import (DEFAULT_ALPHAS, CauchyData, CauchyReconstructor, ReconstructionConfig, interior_grid,
                    write_reconstruction_report, write_sweep_csv)
from errors import CaloricIdentityError, ParLameError, UsageError
from geometry import CylinderDomain, gauss_legendre, tensor_product
from illposed import (COMPATIBILITY_TOLERANCE, IllPosedFamily, amplification_table, family_data, family_solution,
                      write_amplification_csv)
from kernels import LameCoefficients, heat_kernel, lame_kernel, lame_pde_residual_batch
from potentials import Density, PotentialEngine, QuadratureSettings, green_identity, jump_probe, write_potential_csv

load_dotenv()

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
DEFAULT_CONFIG_FILE = "config.json"
DEFAULT_LOG_FILE = "parlame.log"
DEFAULT_OUTPUT = "results"

SUBCOMMANDS = ("kernel-check", "green-check", "jump-check", "poly-verify", "ortho-gram",
               "illposed-table", "reconstruct", "uniqueness-probe")

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_FAIL = 2

# Acceptance tolerances
KERNEL_TOLERANCE = 1e-4
KERNEL_STEP = 1e-3
NORMALIZATION_TOLERANCE = 1e-8
GREEN_TOLERANCE = 2e-3
JUMP_TOLERANCE = 1e-2
GRAM_TOLERANCE = 1e-8
GRAM_DECAY = 10.0
# Entries below this fraction of the largest diagonal are at the roundoff floor
GRAM_FLOOR = 1e-12
RECONSTRUCTION_TOLERANCE = 5e-2
ZERO_DATA_TOLERANCE = 1e-6
PROBE_RATIO_RANGE = (5.0, 20.0)
COMPATIBILITY_POINTS = 100

KERNEL_CASES = ((1.0, -1.0), (1.0, 0.0), (2.0, 0.5))
UNIT_SQUARE = {"kind": "box", "bounds": [[0.0, 1.0], [0.0, 1.0]], "T": 1.0}

PARAM_FLAGS = ("k", "N", "xn", "max_degree", "degree", "alphas", "source", "n")


@dataclass
class ExperimentConfig:
    """Everything a subcommand needs; round-trips through to_dict/from_dict."""
    subcommand: str = ""
    geometry: Dict[str, Any] = field(default_factory=lambda: json.loads(json.dumps(UNIT_SQUARE)))
    mu: float = 1.0
    lam: float = -1.0
    theta: float = 0.5
    space_order: int = 12
    time_order: int = 16
    panel_order: int = 8
    adaptive: bool = True
    params: Dict[str, Any] = field(default_factory=dict)
    output: str = DEFAULT_OUTPUT
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise UsageError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**json.loads(json.dumps(doc)))

    @property
    def coeffs(self) -> LameCoefficients:
        return LameCoefficients(float(self.mu), float(self.lam), float(self.theta))

    @property
    def settings(self) -> QuadratureSettings:
        return QuadratureSettings(space_order=int(self.space_order), time_order=int(self.time_order),
                                  panel_order=int(self.panel_order), adaptive=bool(self.adaptive))

    @property
    def domain(self) -> CylinderDomain:
        return CylinderDomain.from_dict(self.geometry)

    def param(self, name: str, default: Any) -> Any:
        value = self.params.get(name)
        return default if value is None else value


def _read_config_file(path: Path) -> Dict[str, Any]:
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logging.getLogger(__name__).error(f"Failed to load experiment config {path}: {e}")
        raise UsageError(f"Cannot read config file {path}: {e}")
    if not isinstance(doc, dict):
        raise UsageError(f"Config file {path} must hold a JSON object")
    return doc.get("defaults", doc)


def load_experiment_config(path: Optional[str] = None, config: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Layer a JSON config file over `config` (or the defaults); PARLAME_CONFIG names a fallback file."""
    config = config or ExperimentConfig()
    path = path or os.getenv("PARLAME_CONFIG")
    if not path:
        return config
    file_config = _read_config_file(Path(path))
    merged = config.to_dict()
    for key in merged:
        if key == "params":
            merged["params"].update(file_config.get("params", {}))
        else:
            merged[key] = file_config.get(key, merged[key])
    unknown = set(file_config) - set(merged)
    if unknown:
        raise UsageError(f"Unknown keys in {path}: {', '.join(sorted(unknown))}")
    return ExperimentConfig.from_dict(merged)


def load_logging_settings(path: str = DEFAULT_CONFIG_FILE) -> Tuple[str, int]:
    """Log file and stderr level from the 'logging' section of config.json; PARLAME_LOG_LEVEL wins."""
    section: Dict[str, Any] = {}
    if Path(path).exists():
        try:
            with open(path) as f:
                section = json.load(f).get("logging", {})
        except (OSError, json.JSONDecodeError, AttributeError) as e:
            raise UsageError(f"Cannot read logging settings from {path}: {e}")
    level_name = os.getenv("PARLAME_LOG_LEVEL") or section.get("level", "WARNING")
    level = logging.getLevelName(str(level_name).upper())
    if not isinstance(level, int):
        raise UsageError(f"Unknown log level {level_name!r}")
    return section.get("file", DEFAULT_LOG_FILE), level


def parse_k_range(text: str) -> List[int]:
    """'a..b' (inclusive) or a comma list of positive integers."""
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split("..", 1))
            values = list(range(lo, hi + 1))
        else:
            values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Bad k range {text!r}; use 'a..b' or 'k1,k2,...'")
    if not values or min(values) < 1:
        raise UsageError(f"k range {text!r} must contain positive integers")
    return values


def parse_floats(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"Bad number list {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment config (overrides config.json, overridden by flags)")
    common.add_argument("--seed", type=int, help="Seed for random probe points")
    common.add_argument("--output", help="Directory for CSV/JSON artifacts")
    common.add_argument("--mu", type=float, help="Lamé coefficient mu")
    common.add_argument("--lam", type=float, help="Lamé coefficient lambda")
    common.add_argument("--theta", type=float, help="Parabolicity margin")
    common.add_argument("--order", type=int, help="Spatial quadrature order (Gram order for ortho-gram)")
    common.add_argument("--time-order", type=int, help="Time quadrature order")
    common.add_argument("--n", type=int, help="Spatial dimension")
    common.add_argument("-v", "--verbose", action="store_true", help="Log INFO to stderr")
    common.add_argument("-d", "--debug", action="store_true", help="Log DEBUG to stderr")

    parser = _Parser(prog="parlame", description="Parabolic Lamé potentials, caloric bases and Cauchy reconstruction")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("kernel-check", parents=[common], help="Finite-difference residual of the fundamental solution")
    sub.add_parser("green-check", parents=[common], help="Green identity for a manufactured field")
    sub.add_parser("jump-check", parents=[common], help="Jump relations of W, σV and σW")
    p = sub.add_parser("poly-verify", parents=[common], help="Exact caloric identities")
    p.add_argument("--max-degree", type=int)
    p = sub.add_parser("ortho-gram", parents=[common], help="Double orthogonality of heat polynomials")
    p.add_argument("--degree", type=int, help="Largest parabolic degree 2N+nu")
    p = sub.add_parser("illposed-table", parents=[common], help="Amplification table of the exponential family")
    p.add_argument("--k", help="k range a..b or list")
    p.add_argument("--N", type=int)
    p.add_argument("--xn", type=float)
    for name in ("reconstruct", "uniqueness-probe"):
        p = sub.add_parser(name, parents=[common], help="Cauchy reconstruction" if name == "reconstruct"
                           else "Zero and small-data reconstructions")
        p.add_argument("--max-degree", type=int)
        p.add_argument("--alphas", help="Comma list of Tikhonov parameters")
        p.add_argument("--source", choices=("manufactured", "family"))
        p.add_argument("--k", help="k range for --source family")
        p.add_argument("--N", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults < config.json < --config < flags."""
    config = ExperimentConfig(subcommand=args.command)
    if Path(DEFAULT_CONFIG_FILE).exists():
        config = load_experiment_config(DEFAULT_CONFIG_FILE, config)
    if args.config:
        config = load_experiment_config(args.config, config)
    config.subcommand = args.command
    for flag, key in (("seed", "seed"), ("output", "output"), ("mu", "mu"), ("lam", "lam"), ("theta", "theta"),
                      ("time_order", "time_order")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, key, value)
    if getattr(args, "order", None) is not None:
        if args.command == "ortho-gram":
            config.params["order"] = args.order
        else:
            config.space_order = args.order
    explicit_coeffs = getattr(args, "mu", None) is not None or getattr(args, "lam", None) is not None
    if args.command == "kernel-check" and explicit_coeffs:
        config.params["cases"] = [[config.mu, config.lam]]
    for name in PARAM_FLAGS:
        value = getattr(args, name, None)
        if value is None:
            continue
        if name == "k":
            value = parse_k_range(value)
        elif name == "alphas":
            value = parse_floats(value)
        config.params[name] = value
    return config


def manufactured_solution(coeffs: LameCoefficients, n: int, sourced: bool = False) -> PolynomialSolution:
    """
    A caloric polynomial field with both components non-trivial.

    With `sourced` the field gains (x1² t, x1 x2), which L does not annihilate,
    so the volume potential carries part of the representation.
    """
    alphas = ((2, 1), (1, 2)) if n == 2 else ((2, 1, 0), (0, 1, 2))
    field_ = caloric_monomial(alphas[0], 0, coeffs) + caloric_monomial(alphas[1], 1, coeffs)
    if sourced:
        x1 = CaloricPolynomial.variable(n, 0)
        x2 = CaloricPolynomial.variable(n, 1)
        extra = [x1 * x1 * CaloricPolynomial.time(n), x1 * x2] + [CaloricPolynomial.zero(n)] * (n - 2)
        field_ = field_ + PolynomialField(extra)
    return PolynomialSolution(field_, coeffs)


class ExperimentRunner:
    """Runs one subcommand: console summary, log file, artifacts."""

    def __init__(self, config: ExperimentConfig, verbose: bool = False, debug: bool = False,
                 log_file: str = DEFAULT_LOG_FILE, log_level: int = logging.WARNING):
        self.config = config
        self.console = Console()
        self.output = Path(config.output)
        self.rng = np.random.default_rng(config.seed)

        root = logging.getLogger()
        for handler in list(root.handlers):
            if getattr(handler, "parlame", False):
                root.removeHandler(handler)
                handler.close()
        file_handler = logging.FileHandler(log_file, mode='a')
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(logging.DEBUG if debug else min(logging.INFO, log_level) if verbose else log_level)
        console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        for handler in (file_handler, console_handler):
            handler.parlame = True
            root.addHandler(handler)
        root.setLevel(logging.DEBUG)
        self.logger = logging.getLogger(__name__)

    def run(self) -> int:
        name = self.config.subcommand
        method = getattr(self, "_run_" + name.replace("-", "_"), None)
        if method is None:
            raise UsageError(f"Unknown subcommand {name!r}")
        self.logger.info(f"Running {name} with config {self.config.to_dict()}")
        passed, message = method()
        status = "[green]PASS[/green]" if passed else "[red]FAIL[/red]"
        self.console.print(f"{status} {name}: {message}")
        self.logger.info(f"{name}: {'PASS' if passed else 'FAIL'} - {message}")
        return EXIT_PASS if passed else EXIT_FAIL

    # -- helpers ---------------------------------------------------------------

    def _artifact(self, suffix: str) -> Path:
        return self.output / f"{self.config.subcommand}{suffix}"

    def _report(self, passed: bool, metrics: Dict[str, Any]) -> Path:
        return write_json(self._artifact(".json"), {
            "subcommand": self.config.subcommand,
            "status": "PASS" if passed else "FAIL",
            "config": self.config.to_dict(),
            "metrics": metrics,
        })

    def _reconstruction_setup(self) -> Tuple[CauchyReconstructor, Any, Any]:
        c = self.config
        coeffs = c.coeffs
        domain = c.domain
        n = domain.dim
        patch = domain.face(2 * (n - 1))
        recon_config = ReconstructionConfig(max_degree=int(c.param("max_degree", 8)),
                                            alphas=tuple(c.param("alphas", DEFAULT_ALPHAS)), settings=c.settings,
                                            normalise_columns=bool(c.param("normalise_columns", False)))
        reconstructor = CauchyReconstructor(domain, patch, coeffs, recon_config)
        if coeffs.is_heat and n == 2:
            mu, _ = coeffs.exact()
            h = heat_polynomial(1, 1, 1, n).scale_time(mu)
            solution = PolynomialSolution(PolynomialField([h, h]), coeffs)
        else:
            solution = manufactured_solution(coeffs, n)
        return reconstructor, patch, solution

    # -- subcommands -----------------------------------------------------------

    def _run_kernel_check(self) -> Tuple[bool, str]:
        cases = [tuple(case) for case in self.config.param("cases", KERNEL_CASES)]
        dims = (int(self.config.params["n"]),) if self.config.params.get("n") else (2, 3)
        rows = []
        for mu, lam in cases:
            coeffs = LameCoefficients(mu, lam, self.config.theta)
            for n in dims:
                points = self.rng.uniform(-1.0, 1.0, size=(50, n))
                times = self.rng.uniform(0.2, 1.0, size=50)
                residual = float(np.max(np.abs(lame_pde_residual_batch(points, times, coeffs, KERNEL_STEP))))
                reduction = 0.0
                if coeffs.is_heat:
                    phi = lame_kernel(points, times, coeffs)
                    expected = heat_kernel(points, mu * times)[:, None, None] * np.eye(n)
                    reduction = float(np.max(np.abs(phi - expected)))
                rows.append(["residual", mu, lam, n, residual, reduction])
                self.logger.info(f"mu={mu}, lam={lam}, n={n}: residual {residual:.3e}")
        normalization = 0.0
        for n in (1, 2, 3):
            for t in self.rng.uniform(0.05, 1.0, size=3):
                half = 12.0 * math.sqrt(t)
                x, w = gauss_legendre(40, -half, half)
                nodes, weights = tensor_product([x] * n, [w] * n)
                error = abs(float(np.sum(weights * heat_kernel(nodes, t))) - 1.0)
                rows.append(["normalization", 1.0, -1.0, n, error, 0.0])
                normalization = max(normalization, error)
        write_csv(self._artifact(".csv"), ["check", "mu", "lam", "n", "max_error", "heat_reduction"], rows)
        max_residual = max(r[4] for r in rows if r[0] == "residual")
        max_reduction = max(r[5] for r in rows if r[0] == "residual")
        passed = (max_residual <= KERNEL_TOLERANCE and normalization <= NORMALIZATION_TOLERANCE
                  and max_reduction <= 1e-14)
        self._report(passed, {"max_residual": max_residual, "normalization_error": normalization,
                              "heat_reduction": max_reduction})
        return passed, (f"max residual {max_residual:.2e} <= {KERNEL_TOLERANCE:.0e}, "
                        f"normalization {normalization:.2e}")

    def _run_green_check(self) -> Tuple[bool, str]:
        c = self.config
        domain = c.domain
        n = domain.dim
        engine = PotentialEngine(c.coeffs, c.settings)
        solution = manufactured_solution(c.coeffs, n, sourced=True)
        base = domain.base
        targets = []
        for _ in range(10):
            x = base.lower + (0.1 + 0.8 * self.rng.random(n)) * base.widths
            targets.append(("interior", x, float(self.rng.uniform(0.25, 1.0) * domain.T)))
        while len(targets) < 20:
            x = base.lower + (-0.5 + 2.0 * self.rng.random(n)) * base.widths
            if base.distance(x) >= 0.1 * float(np.min(base.widths)):
                targets.append(("exterior", x, float(self.rng.uniform(0.25, 1.0) * domain.T)))
        rows = []
        for region, x, t in targets:
            result = green_identity(engine, solution, domain, x, t)
            volume = float(np.max(np.abs(result.terms["G"])))
            rows.append(list(x) + [t, region, volume, result.error])
        write_csv(self._artifact(".csv"), [f"x_{i + 1}" for i in range(n)] + ["t", "region", "volume_term", "error"],
                  rows)
        worst = max(r[-1] for r in rows)
        # G must take part
        volume = max(r[-2] for r in rows)
        passed = worst <= GREEN_TOLERANCE and volume > 0.0
        self._report(passed, {"max_error": worst, "targets": len(rows), "max_volume_term": volume})
        return passed, f"max error {worst:.2e} <= {GREEN_TOLERANCE:.0e}"

    def _run_jump_check(self) -> Tuple[bool, str]:
        c = self.config
        domain = c.domain
        n = domain.dim
        engine = PotentialEngine(c.coeffs, c.settings)
        patch = domain.face(2 * (n - 1))
        solution = manufactured_solution(c.coeffs, n)
        w = Density.from_field("value", solution)
        v = Density.traction(solution, patch, c.coeffs)
        base = domain.base
        rows = []
        for fraction in np.linspace(0.2, 0.8, 5):
            x0 = base.lower + fraction * base.widths
            x0[patch.axis] = patch.offset
            t0 = 0.5 * domain.T
            for kind, density in (("W", w), ("sigmaV", v), ("sigmaW", w)):
                report = jump_probe(engine, kind, density, patch, x0, t0)
                rows.append([kind] + list(report.point) + [t0, report.error, report.spread])
        write_csv(self._artifact(".csv"), ["kind"] + [f"x_{i + 1}" for i in range(n)] + ["t", "error", "spread"],
                  rows)
        worst = max(r[-2] for r in rows)
        passed = worst <= JUMP_TOLERANCE
        self._report(passed, {"max_error": worst, "probes": len(rows)})
        return passed, f"max jump error {worst:.2e} <= {JUMP_TOLERANCE:.0e}"

    def _run_poly_verify(self) -> Tuple[bool, str]:
        c = self.config
        degree = int(c.param("max_degree", 6))
        n = int(c.param("n", 2))
        coeffs = c.coeffs
        rows = []

        def check(name: str, params: str, action):
            try:
                action()
                rows.append([name, params, "exact"])
            except CaloricIdentityError as e:
                self.logger.error(f"{name} {params}: {e}")
                rows.append([name, params, "failed"])

        for j in range(degree + 1):
            for k in range(degree + 1):
                check("caloric_w", f"j={j};k={k}", lambda: caloric_w(j, k))
        for j in range(degree + 1):
            for alpha in _multi_indices(n, degree - j):
                for component in range(n):
                    check("poly_cauchy_solve", f"j={j};alpha={alpha};i={component}",
                          lambda: poly_cauchy_solve(j, alpha, coeffs, component))
        for dim in (2, 3):
            for element in _small_heat_polynomials(dim):
                def annihilated(e=element):
                    if not e.heat_residual().is_zero():
                        raise CaloricIdentityError(f"{e.label} is not caloric")
                check("heat_polynomial", f"n={dim};{element.label}", annihilated)
        u1 = PolynomialField(_face_data(n))
        u2 = PolynomialField(list(reversed(_face_data(n))))
        check("solve_polynomial_problem", f"n={n}",
              lambda: solve_polynomial_problem(PolynomialField.zero(n), u1, u2, coeffs))
        family = IllPosedFamily(3, 2, coeffs, 1.0, n)
        check("family_residual", "k=3;N=2",
              lambda: _require(all(r == 0 for r in family.symbolic_residual()), "family residual is not zero"))
        write_csv(self._artifact(".csv"), ["check", "params", "status"], rows)
        failed = sum(1 for r in rows if r[2] != "exact")
        passed = failed == 0
        self._report(passed, {"identities": len(rows), "failed": failed})
        return passed, f"{len(rows) - failed}/{len(rows)} identities exact"

    def _run_ortho_gram(self) -> Tuple[bool, str]:
        c = self.config
        n = int(c.param("n", 2))
        degree = int(c.param("degree", 6))
        order = int(c.param("order", 16))
        elements = heat_basis(n, degree)
        low = double_orthogonality_gram(elements, 1.0, 1.0, order)
        high = double_orthogonality_gram(elements, 1.0, 1.0, 2 * order)
        floor = GRAM_FLOOR * float(np.max(np.abs(np.diag(high.matrix))))
        decayed = high.off_block_max * GRAM_DECAY <= low.off_block_max or high.off_block_max <= floor
        passed = low.off_block_max <= GRAM_TOLERANCE and decayed
        write_csv(self._artifact(".csv"), ["row"] + low.labels,
                  ([label] + list(row) for label, row in zip(low.labels, low.matrix)))
        self._report(passed, {"order": order, "off_block_max": low.off_block_max,
                              "off_block_max_doubled": high.off_block_max, "roundoff_floor": floor,
                              "axis_cross_max": low.axis_cross_max, "elements": len(elements)})
        return passed, (f"off-block {low.off_block_max:.2e} <= {GRAM_TOLERANCE:.0e} at order {order}, "
                        f"{high.off_block_max:.2e} at order {2 * order}")

    def _run_illposed_table(self) -> Tuple[bool, str]:
        c = self.config
        ks = c.param("k", list(range(1, 21)))
        N = int(c.param("N", 3))
        xn = float(c.param("xn", 1.0))
        n = int(c.param("n", 2))
        coeffs = c.coeffs
        rows = amplification_table(ks, N, coeffs, xn, 1.0, n)
        write_amplification_csv(self._artifact(".csv"), rows)
        bound = max(1.0, coeffs.longitudinal)
        within = all(r.data_norm <= bound / float(r.k) ** (N - 1) * (1 + 1e-12) for r in rows)
        point = np.zeros((1, n))
        point[0, -1] = xn
        closed_form = 0.0
        for r in rows:
            value = float(family_solution(IllPosedFamily(r.k, N, coeffs, 1.0, n), point, 1.0)[0, -1])
            closed_form = max(closed_form, abs(r.solution_sup - value) / r.solution_sup)
        exact = closed_form <= 1e-12
        tail = [r.ratio for r in rows if r.k >= 5]
        monotone = all(b > a for a, b in zip(tail, tail[1:]))
        face = self.rng.random((COMPATIBILITY_POINTS, n))
        face[:, -1] = 0.0
        compatibility = [0.0, 0.0]
        for r in rows:
            first, second = family_data(IllPosedFamily(r.k, N, coeffs, 1.0, n)).compatibility(face)
            compatibility = [max(compatibility[0], first), max(compatibility[1], second)]
        compatible = max(compatibility) <= COMPATIBILITY_TOLERANCE
        passed = within and exact and monotone and compatible
        self._report(passed, {"rows": len(rows), "data_bound_ok": within, "closed_form_error": closed_form,
                              "ratio_monotone": monotone, "compatibility": compatibility,
                              "compatibility_points": COMPATIBILITY_POINTS})
        return passed, f"{len(rows)} rows, ratio at k={rows[-1].k}: {rows[-1].ratio:.3e}"

    def _run_reconstruct(self) -> Tuple[bool, str]:
        c = self.config
        reconstructor, patch, solution = self._reconstruction_setup()
        domain = reconstructor.domain
        if c.param("source", "manufactured") == "family":
            ks = c.param("k", [1, 2, 3, 4])
            rows = reconstructor.family_amplification(ks, int(c.param("N", 3)))
            write_csv(self._artifact(".csv"), ["k", "data_norm", "relative_error", "fit_residual"],
                      ([r.k, r.data_norm, r.relative_error, r.fit_residual] for r in rows))
            passed = rows[-1].relative_error >= rows[0].relative_error
            self._report(passed, {"errors": {str(r.k): r.relative_error for r in rows}})
            return passed, f"error grows from {rows[0].relative_error:.2e} to {rows[-1].relative_error:.2e}"

        data = CauchyData.from_field(solution, domain, patch, c.coeffs, label="manufactured")
        result = reconstructor.fit(data)
        errors = [report.relative_l2 for report in reconstructor.sweep_errors(result, solution)]
        best = int(np.argmin(errors))
        write_sweep_csv(self._artifact(".csv"), result, errors)
        targets = interior_grid(domain)
        values = reconstructor.reconstruct_many(result.with_alpha(result.fits[best].alpha), targets)
        write_potential_csv(self.output / "reconstruct_field.csv", targets, values)

        zero = reconstructor.fit(CauchyData.zero(domain, patch), [result.fits[best].alpha])
        zero_values = reconstructor.reconstruct_many(zero, targets)
        zero_sup = float(np.max(np.abs(zero_values)))
        passed = errors[best] <= RECONSTRUCTION_TOLERANCE and zero_sup <= ZERO_DATA_TOLERANCE
        write_reconstruction_report(self._artifact(".json"), reconstructor, result, {
            "status": "PASS" if passed else "FAIL",
            "relative_errors": errors,
            "best_alpha": result.fits[best].alpha,
            "zero_data_sup": zero_sup,
            "experiment": c.to_dict(),
        })
        self._print_sweep(result, errors)
        return passed, (f"best relative error {errors[best]:.2e} <= {RECONSTRUCTION_TOLERANCE:.0e} "
                        f"(alpha={result.fits[best].alpha:.0e}), zero-data sup {zero_sup:.1e}")

    def _run_uniqueness_probe(self) -> Tuple[bool, str]:
        reconstructor, patch, solution = self._reconstruction_setup()
        perturbation = CauchyData.from_field(solution, reconstructor.domain, patch, self.config.coeffs,
                                             label="perturbation")
        report = reconstructor.uniqueness_probe(perturbation)
        write_csv(self._artifact(".csv"), ["delta", "interior_sup", "fit_residual"],
                  ([r.delta, r.interior_sup, r.fit_residual] for r in report.rows))
        ratio = report.ratio(1e-2, 1e-3)
        low, high = PROBE_RATIO_RANGE
        passed = report.zero_sup <= ZERO_DATA_TOLERANCE and low <= ratio <= high
        self._report(passed, {"zero_sup": report.zero_sup, "ratio": ratio,
                              "rows": [asdict(r) for r in report.rows]})
        return passed, f"zero-data sup {report.zero_sup:.1e}, ratio {ratio:.2f} in [{low:.0f}, {high:.0f}]"

    def _print_sweep(self, result, errors: Sequence[float]):
        table = Table(title="Tikhonov sweep")
        for column in ("alpha", "residual", "norm", "error"):
            table.add_column(column, justify="right")
        for fit, error in zip(result.fits, errors):
            table.add_row(f"{fit.alpha:.0e}", f"{fit.residual:.2e}", f"{fit.solution_norm:.2e}", f"{error:.2e}")
        self.console.print(table)


def _multi_indices(n: int, degree: int) -> List[Tuple[int, ...]]:
    if degree < 0:
        return []
    return [a for a in np.ndindex(*([degree + 1] * n)) if sum(a) <= degree]


def _face_data(n: int) -> List[Any]:
    """Tangential polynomial face data (no x_n dependence) for the exact solvability check."""
    x1 = CaloricPolynomial.variable(n, 0)
    t = CaloricPolynomial.time(n)
    comps = [x1 * x1 + t, x1 * t] + [CaloricPolynomial.constant(n, 1)] * (n - 2)
    return comps[:n]


def _small_heat_polynomials(n: int, top: int = 3) -> List[Any]:
    """Heat polynomials with N <= top and nu <= top, axis variants included; built lazily so failures are caught."""
    labels = []
    for nu in range(top + 1):
        for s in range(1, harmonic_count(n, nu) + 1):
            for N in range(top + 1):
                if nu == 0 and N >= 1:
                    labels.extend((N, 0, 1, axis) for axis in range(1, n + 1))
                else:
                    labels.append((N, nu, s, None))
    return [_LazyHeatPolynomial(n, *label) for label in labels]


class _LazyHeatPolynomial:
    def __init__(self, n: int, N: int, nu: int, s: int, axis: Optional[int]):
        self.n, self.N, self.nu, self.s, self.axis = n, N, nu, s, axis
        self.label = f"H[N={N},axis={axis}]" if axis else f"H[N={N},nu={nu},s={s}]"

    def heat_residual(self):
        return heat_polynomial(self.N, self.nu, self.s, self.n, self.axis).heat_residual()


def _require(condition: bool, message: str):
    if not condition:
        raise CaloricIdentityError(message)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run the subcommand and return the exit code."""
    console = Console(stderr=True)
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError(f"A subcommand is required: {', '.join(SUBCOMMANDS)}")
        config = config_from_args(args)
        log_file, log_level = load_logging_settings()
        runner = ExperimentRunner(config, verbose=args.verbose, debug=args.debug, log_file=log_file,
                                  log_level=log_level)
    except UsageError as e:
        console.print(f"[red]Usage error: {e}[/red]")
        return EXIT_USAGE
    except ParLameError as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_USAGE
    try:
        return runner.run()
    except UsageError as e:
        console.print(f"[red]Usage error: {e}[/red]")
        return EXIT_USAGE
    except ParLameError as e:
        runner.logger.error(f"{config.subcommand} failed: {e}")
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_FAIL


def main():
    """Main entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
