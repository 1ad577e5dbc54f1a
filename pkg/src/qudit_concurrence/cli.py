"""Command-line driver.

Single runs (``ideal``, ``pulse``, ``sample``) print a RunResult as JSON;
``sweep`` and ``bias`` print CSV tables.  All floats carry 12 significant
digits.  Exit status: 0 on success, 1 when the run completed but was flagged
invalid (phonon leakage), 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gate_model as gm
from .estimator import Method, estimate_bloch, estimate_concurrence, ShotRecord
from .ion import IonLevelScheme, compile_protocol, compile_readout, execute
from .ion.readout import cascade_distribution, sample_cascade

log = logging.getLogger("qudit_concurrence")

MODES = ("ideal", "pulse", "sample", "sweep", "bias")
PRESETS = {
    "bell": [[2**-0.5, 0], [0, 0], [0, 0], [2**-0.5, 0]],
    "gg": [[1, 0], [0, 0], [0, 0], [0, 0]],
}
BIAS_LAMBDAS = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)


class ConfigError(ValueError):
    pass


def sig12(x):
    """Round to 12 significant digits (recursively through dicts and lists)."""
    if isinstance(x, bool) or x is None or isinstance(x, (str, int)):
        return x
    if isinstance(x, float):
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: sig12(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [sig12(v) for v in x]
    if isinstance(x, np.generic):
        return sig12(x.item())
    raise TypeError(f"cannot serialise {type(x).__name__}")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    state: tuple | None = None
    alpha_points: int = 33
    shots: int = 10_000
    seed: int = 0
    fock_cutoff: int = 2
    output_path: str | None = None
    method: Method = Method.unbiased_sum_of_squares

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"field 'mode': expected one of {MODES}, got {self.mode!r}")
        if self.mode in ("ideal", "pulse", "sample", "bias") and self.state is None:
            raise ConfigError(f"field 'state': required in {self.mode} mode")
        if self.alpha_points < 2:
            raise ConfigError(f"field 'alpha_points': need at least 2, got {self.alpha_points}")
        if self.shots < 1:
            raise ConfigError(f"field 'shots': need at least 1, got {self.shots}")
        if self.mode == "sample" and self.method is Method.unbiased_sum_of_squares and self.shots < 2:
            raise ConfigError("field 'shots': the unbiased estimator needs at least 2")
        if self.fock_cutoff < 2:
            raise ConfigError(f"field 'fock_cutoff': need at least 2, got {self.fock_cutoff}")

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.state])


@dataclass
class RunResult:
    probabilities: gm.ProbVector
    bloch: gm.BlochVector
    concurrence_protocol: float
    concurrence_oracle: float
    estimates: dict | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        p, b = self.probabilities, self.bloch
        return sig12(
            {
                "probabilities": {"p_g": p.p_g, "p_gp": p.p_gp, "p_e": p.p_e, "p_ep": p.p_ep},
                "bloch": {"sx": b.sx, "sy": b.sy, "sz": b.sz},
                "concurrence_protocol": self.concurrence_protocol,
                "concurrence_oracle": self.concurrence_oracle,
                "estimates": self.estimates,
                "diagnostics": self.diagnostics,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        return cls(
            gm.ProbVector(**d["probabilities"]),
            gm.BlochVector(**d["bloch"]),
            d["concurrence_protocol"],
            d["concurrence_oracle"],
            d["estimates"],
            d["diagnostics"],
        )

    @property
    def invalid(self) -> bool:
        leak = self.diagnostics.get("leakage")
        return leak is not None and leak > 1e-10


def parse_state(value: str) -> tuple:
    """Amplitudes as ``[re, im]`` pairs in order (gg, ge, eg, ee).

    ``value`` is a preset name, a path to a JSON file, or inline JSON.  The JSON
    is either the list of pairs or an object with an ``amplitudes`` key.
    """
    if value in PRESETS:
        raw = PRESETS[value]
    else:
        text, source = value, "inline state"
        if os.path.exists(value):
            text, source = Path(value).read_text(), value
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        if isinstance(raw, dict):
            if "amplitudes" not in raw:
                raise ConfigError(f"{source}: missing field 'amplitudes'")
            raw = raw["amplitudes"]
    if not isinstance(raw, list) or len(raw) != 4:
        raise ConfigError("field 'state': expected 4 amplitudes as [re, im] pairs in order gg, ge, eg, ee")
    pairs = []
    for i, pair in enumerate(raw):
        if not isinstance(pair, (list, tuple)) or len(pair) != 2 or not all(isinstance(x, (int, float)) for x in pair):
            raise ConfigError(f"field 'state': amplitude {i} must be a [re, im] pair of numbers, got {pair!r}")
        pairs.append((float(pair[0]), float(pair[1])))
    amps = np.array([complex(*p) for p in pairs])
    norm = float(np.linalg.norm(amps))
    if norm == 0.0 or not np.isfinite(norm):
        raise ConfigError("field 'state': amplitudes cannot be normalised")
    if abs(norm - 1.0) > 1e-6:
        raise ConfigError(f"field 'state': norm {norm:.12g} differs from 1 by more than 1e-6")
    if abs(norm - 1.0) > 1e-12:
        log.warning("state norm %.12g renormalised to 1", norm)
        amps = amps / norm
        pairs = [(a.real, a.imag) for a in amps]
    return tuple(pairs)


def _ideal(cfg: RunConfig) -> RunResult:
    chi = cfg.amplitudes
    probs = gm.ancilla_probabilities(gm.run_protocol(chi))
    c2 = gm.squared_concurrence_from_probabilities(probs)
    bloch = gm.bloch_from_probabilities(probs)
    return RunResult(
        probs,
        bloch,
        gm.concurrence_from_probabilities(probs),
        gm.concurrence_oracle(chi),
        None,
        {"leakage": 0.0, "clamped": c2 < 0.0, "physicality_flag": not bloch.is_physical, "pulse_fidelity": None},
    )


def _pulse_pipeline(cfg: RunConfig):
    chi = cfg.amplitudes
    scheme = IonLevelScheme(cfg.fock_cutoff)
    run = execute(compile_protocol(scheme), scheme.embed(chi), scheme)
    gate_state = gm.run_protocol(chi).state.amplitudes
    fidelity = abs(np.vdot(gate_state, scheme.gate_projection(run.state))) ** 2
    plan = compile_readout(scheme)
    mapped = execute(plan.mapping, run.state, scheme)
    leakage = max(run.leakage, mapped.leakage)
    return scheme, plan, mapped.state, leakage, float(fidelity)


def _pulse(cfg: RunConfig) -> RunResult:
    scheme, plan, mapped, leakage, fidelity = _pulse_pipeline(cfg)
    probs = cascade_distribution(mapped, plan, scheme)
    c2 = gm.squared_concurrence_from_probabilities(probs)
    bloch = gm.bloch_from_probabilities(probs)
    return RunResult(
        probs,
        bloch,
        gm.concurrence_from_probabilities(probs),
        gm.concurrence_oracle(cfg.amplitudes),
        None,
        {"leakage": leakage, "clamped": c2 < 0.0, "physicality_flag": not bloch.is_physical, "pulse_fidelity": fidelity},
    )


def _sample(cfg: RunConfig) -> RunResult:
    scheme, plan, mapped, leakage, fidelity = _pulse_pipeline(cfg)
    counts = sample_cascade(mapped, cfg.shots, cfg.seed, plan, scheme)
    rec = ShotRecord(tuple(int(c) for c in counts), cfg.shots, cfg.seed)
    est = estimate_concurrence(rec, cfg.method)
    bl = estimate_bloch(rec)
    c = min(est.value, 1.0)
    estimates = {
        "counts": list(rec.counts),
        "shots": rec.shots,
        "seed": rec.seed,
        "concurrence": est.to_dict(),
        "bloch_std_errors": list(bl.std_errors),
    }
    return RunResult(
        gm.ProbVector.from_array(rec.frequencies),
        bl.bloch,
        c,
        gm.concurrence_oracle(cfg.amplitudes),
        estimates,
        {
            "leakage": leakage,
            "clamped": est.clamped or est.value > 1.0,
            "physicality_flag": not bl.physical,
            "pulse_fidelity": fidelity,
        },
    )


def sweep_rows(points: int):
    """(α, C_protocol, C_oracle) for cos α |gg> + sin α |ee> on an even grid over [0, π/2]."""
    rows = []
    for alpha in np.linspace(0.0, np.pi / 2, points):
        chi = np.array([np.cos(alpha), 0.0, 0.0, np.sin(alpha)], dtype=complex)
        probs = gm.ancilla_probabilities(gm.run_protocol(chi))
        rows.append((float(alpha), gm.concurrence_from_probabilities(probs), gm.concurrence_oracle(chi)))
    return sorted(rows)


def random_product_state(rng) -> np.ndarray:
    """Density matrix of a Haar-random pure product state of two qubits."""
    vecs = []
    for _ in range(2):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        vecs.append(v / np.linalg.norm(v))
    psi = np.kron(*vecs)
    return np.outer(psi, psi.conj())


def bias_rows(chi, seed: int, lambdas=BIAS_LAMBDAS):
    """(λ, predicted, actual, residual) for the mixture with a seeded pure product state."""
    rho_prime = random_product_state(np.random.default_rng(seed))
    rows = []
    for lam in lambdas:
        pred = gm.mixed_state_bias(rho_prime, chi, lam)
        actual = gm.mixed_state_difference(rho_prime, chi, lam)
        rows.append((float(lam), pred, actual, actual - pred))
    return rows


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{x:.12g}" for x in row])
    return buf.getvalue()


def run(config: RunConfig):
    """Execute one configuration; returns a RunResult or CSV text for table modes."""
    if config.mode == "ideal":
        return _ideal(config)
    if config.mode == "pulse":
        return _pulse(config)
    if config.mode == "sample":
        return _sample(config)
    if config.mode == "sweep":
        return _csv(("alpha", "c_protocol", "c_oracle"), sweep_rows(config.alpha_points))
    return _csv(("lambda", "predicted", "actual", "residual"), bias_rows(config.amplitudes, config.seed))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qudit-concurrence", description=__doc__.split("\n\n")[0])
    ap.add_argument("--mode", choices=MODES, required=True)
    ap.add_argument("--state", help="preset (bell, gg), JSON file, or inline JSON of [re, im] pairs (gg, ge, eg, ee)")
    ap.add_argument("--alpha-points", type=int, default=33)
    ap.add_argument("--shots", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--method", choices=[m.value for m in Method], default=Method.unbiased_sum_of_squares.value)
    ap.add_argument("--fock-cutoff", type=int, default=2)
    ap.add_argument("--out", help="write output here instead of stdout")
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        mode=args.mode,
        state=parse_state(args.state) if args.state is not None else None,
        alpha_points=args.alpha_points,
        shots=args.shots,
        seed=args.seed,
        fock_cutoff=args.fock_cutoff,
        output_path=args.out,
        method=Method(args.method),
    )


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        result = run(config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = result if isinstance(result, str) else result.to_json() + "\n"
    if config.output_path:
        Path(config.output_path).write_text(text)
    else:
        sys.stdout.write(text)
    if isinstance(result, RunResult) and result.invalid:
        print("error: run flagged invalid (phonon leakage)", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
