"""Run configuration: TOML parsing, object construction, canonical hashing.

A run file has [lattice], [measure], [law] and [process] tables plus
optional [[experiment]] blocks.  parse_config applies the cross-field
checks (alpha range, envelope summability, scaling-limit admissibility)
and the canonical hash of the parsed content names the run.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:      # pragma: no cover - 3.10 fallback
    import tomli as tomllib

from .environment import (ConstantLaw, FiniteMixtureLaw, FourAtomLaw,
                          ConductanceField, validate_moment_exponents)
from .lattice import LatticeSpec, VertexMeasure, full_lattice, gasket, half_space


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _plain(obj):
    """Strip containers down to JSON-stable primitives."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item"):     # numpy scalar
        return obj.item()
    if isinstance(obj, float) and math.isnan(obj):
        return "nan"
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def build_lattice(block: dict | None) -> LatticeSpec:
    block = dict(block or {})
    kind = block.get("kind", "full")
    if kind == "full":
        return full_lattice(int(block.get("d", 1)))
    if kind == "half":
        return half_space(int(block.get("d1", 1)), int(block.get("d2", 0)))
    if kind == "gasket":
        return gasket(int(block.get("n_ambient", 2)),
                      int(block.get("levels", 6)))
    raise ValueError("unknown lattice kind %r" % (kind,))


def build_measure(block: dict | None) -> VertexMeasure:
    block = dict(block or {})
    return VertexMeasure(kind=block.get("kind", "counting"),
                         c_m=float(block.get("c_m", 1.0)),
                         seed=int(block.get("seed", 0)))


def build_law(block: dict | None, alpha: float | None = None):
    block = dict(block or {})
    # the [environment] spelling uses "variant" for the law kind
    kind = block.get("kind", block.get("variant", "constant"))
    if kind == "constant":
        return ConstantLaw()
    if kind == "four_atom":
        law = FourAtomLaw(eps=float(block["eps"]), delta=float(block["delta"]),
                          p=float(block["p"]), q=float(block["q"]))
        if alpha is not None and law.eps >= alpha:
            raise ValueError("envelope not summable: eps >= alpha")
        zp = block.get("zero_prob")
        if zp is not None and abs(float(zp) - 2.0 ** -5) > 1e-12:
            raise ValueError("four-atom closed-edge probability is fixed"
                             " at 2^-5")
        return law
    if kind == "mixture":
        atoms = [(float(v), float(pr)) for v, pr in block["atoms"]]
        return FiniteMixtureLaw(atoms, block.get("envelope_bound"))
    raise ValueError("unknown law kind %r" % (kind,))


def law_block(raw: dict) -> dict:
    return raw.get("law") or raw.get("environment") or {}


def check_admissible(law, d: int, alpha: float, scaling_limit: bool = True):
    """Moment and dimension gates for the four-atom law; no-op otherwise.

    scaling_limit adds the dimension gate needed for marginal convergence;
    exit campaigns only need the moment thresholds.
    """
    if not isinstance(law, FourAtomLaw):
        return None
    low = alpha < 1.0
    gate = validate_moment_exponents(d, alpha, law.p, law.q,
                                    low_alpha_rule=low)
    if law.p <= gate.p_threshold or law.q <= gate.q_threshold:
        raise ValueError(
            "inadmissible moment exponents: need p > %.6g and q > %.6g"
            % (gate.p_threshold, gate.q_threshold))
    if scaling_limit and not gate.dimension_ok:
        raise ValueError(
            "dimension %d too low for the scaling limit at alpha=%.3g:"
            " need d > %.6g" % (d, alpha, gate.dimension_threshold))
    return gate


@dataclass
class RunConfig:
    """Validated run description; hash of the canonical form names the run."""

    raw: dict
    lattice: LatticeSpec
    measure: VertexMeasure
    law: object
    alpha: float
    seed: int
    out: Path | None
    experiments: list
    threads: int = 1

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def field(self, seed_offset: int = 0) -> ConductanceField:
        from .seeds import mix
        seed = self.seed if seed_offset == 0 else mix(self.seed, seed_offset)
        return ConductanceField(seed=seed, law=self.law,
                                lattice=self.lattice, measure=self.measure)


def parse_config(path) -> RunConfig:
    raw = load_toml(path)
    return parse_config_dict(raw)


def parse_config_dict(raw: dict) -> RunConfig:
    process = dict(raw.get("process", {}))
    alpha = float(process.get("alpha", raw.get("alpha", 1.0)))
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha outside (0,2)")
    lattice = build_lattice(raw.get("lattice"))
    measure = build_measure(raw.get("measure"))
    env = law_block(raw)
    law = build_law(env, alpha=alpha)
    out = raw.get("out")
    return RunConfig(raw=raw, lattice=lattice, measure=measure, law=law,
                     alpha=alpha, seed=int(env.get("seed", raw.get("seed", 0))),
                     out=Path(out) if out else None,
                     experiments=list(raw.get("experiment", [])),
                     threads=int(raw.get("threads", 1)))
