"""Strict, versioned run configurations for the optimize and sweep commands.

A run config is a JSON object::

    {
      "version": "robinshape-run/1",
      "seed": 0,
      "problem": {
        "functional": {"kind": "lambda_k", "k": 2},
        "m": 3.141592653589793,
        "beta": 1.0,
        "family": {"type": "balls", "max_balls": null, "dimension": 2},
        "eigensolver": {"type": "analytic"},
        "budget": 2000,
        "mode": "dilation",
        "restarts": 5
      },
      "betas": [0.1, 1.0, 10.0]
    }

``betas`` is read by the sweep command only; ``out`` may name an output
directory. Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .optimize import Analytic, BallFamily, Fem, MixedFamily, OptProblem, StarFamily
from .spectral import FunctionalSpec

__all__ = ["FORMAT_VERSION", "ConfigError", "RunConfig", "parse_run_config", "problem_to_dict", "config_to_dict"]

FORMAT_VERSION = "robinshape-run/1"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: OptProblem
    seed: int = 0
    betas: tuple[float, ...] | None = None
    out: str | None = None


def _check_keys(obj, where: str, required: set, optional: set = frozenset()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a JSON object")
    unknown = set(obj) - required - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    return x


def _functional(d) -> FunctionalSpec:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("functional: expected an object with a 'kind'")
    kind = d["kind"]
    if kind == "fp":
        _check_keys(d, "functional", {"kind", "k", "p"})
        return FunctionalSpec.Fp(_num(d["p"], "functional.p"), _int(d["k"], "functional.k"))
    if kind == "lambda_k":
        _check_keys(d, "functional", {"kind", "k"})
        return FunctionalSpec.LambdaK(_int(d["k"], "functional.k"))
    if kind == "weighted":
        _check_keys(d, "functional", {"kind", "weights"})
        if not isinstance(d["weights"], list):
            raise ConfigError("functional.weights: expected a list")
        return FunctionalSpec.Weighted([_num(w, "functional.weights") for w in d["weights"]])
    raise ConfigError(f"functional.kind: unknown kind {kind!r}")


def _balls(d, where: str) -> BallFamily:
    _check_keys(d, where, {"type"}, {"max_balls", "dimension"})
    mb = d.get("max_balls")
    return BallFamily(None if mb is None else _int(mb, f"{where}.max_balls"), _int(d.get("dimension", 2), f"{where}.dimension"))


def _stars(d, where: str) -> StarFamily:
    _check_keys(d, where, {"type"}, {"fourier_order", "n_components"})
    return StarFamily(
        _int(d.get("fourier_order", 4), f"{where}.fourier_order"),
        _int(d.get("n_components", 1), f"{where}.n_components"),
    )


def _family(d):
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError("family: expected an object with a 'type'")
    kind = d["type"]
    if kind == "balls":
        return _balls(d, "family")
    if kind == "stars":
        return _stars(d, "family")
    if kind == "mixed":
        _check_keys(d, "family", {"type"}, {"balls", "stars"})
        balls = _balls({"type": "balls", **d.get("balls", {})}, "family.balls")
        stars = _stars({"type": "stars", **d.get("stars", {})}, "family.stars")
        return MixedFamily(balls, stars)
    raise ConfigError(f"family.type: unknown family {kind!r}")


def _eigensolver(d):
    if d is None:
        return None
    if not isinstance(d, dict) or "type" not in d:
        raise ConfigError("eigensolver: expected an object with a 'type'")
    if d["type"] == "analytic":
        _check_keys(d, "eigensolver", {"type"})
        return Analytic()
    if d["type"] == "fem":
        _check_keys(d, "eigensolver", {"type"}, {"resolution", "final_resolution"})
        return Fem(
            _int(d.get("resolution", 16), "eigensolver.resolution"),
            _int(d.get("final_resolution", 32), "eigensolver.final_resolution"),
        )
    raise ConfigError(f"eigensolver.type: unknown solver {d['type']!r}")


def _problem(d, seed: int) -> OptProblem:
    _check_keys(d, "problem", {"functional", "m", "beta", "family"}, {"eigensolver", "budget", "mode", "restarts"})
    mode = d.get("mode", "dilation")
    if not isinstance(mode, str):
        raise ConfigError("problem.mode: expected a string")
    return OptProblem(
        _functional(d["functional"]),
        _num(d["m"], "problem.m"),
        _num(d["beta"], "problem.beta"),
        _family(d["family"]),
        _eigensolver(d.get("eigensolver")),
        seed,
        _int(d.get("budget", 2000), "problem.budget"),
        mode,
        _int(d.get("restarts", 5), "problem.restarts"),
    )


def parse_run_config(text: str, seed: int | None = None) -> RunConfig:
    """Parse a run config; ``seed`` overrides the file's seed when given.

    Raises ``json.JSONDecodeError`` for malformed JSON and :class:`ConfigError`
    (or another ``ValueError`` from the domain types) for invalid content.
    """
    data = json.loads(text)
    _check_keys(data, "config", {"version", "problem"}, {"seed", "betas", "out"})
    if data["version"] != FORMAT_VERSION:
        raise ConfigError(f"version: expected {FORMAT_VERSION!r}, got {data['version']!r}")
    s = _int(data.get("seed", 0), "seed") if seed is None else seed
    betas = data.get("betas")
    if betas is not None:
        if not isinstance(betas, list):
            raise ConfigError("betas: expected a list")
        betas = tuple(_num(b, "betas") for b in betas)
    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("out: expected a string")
    return RunConfig(_problem(data["problem"], s), s, betas, out)


def _functional_to_dict(f: FunctionalSpec) -> dict:
    if f.kind == "fp":
        return {"kind": "fp", "k": f.k, "p": f.p}
    if f.kind == "lambda_k":
        return {"kind": "lambda_k", "k": f.k}
    return {"kind": "weighted", "weights": list(f.weights)}


def _family_to_dict(fam) -> dict:
    if isinstance(fam, BallFamily):
        return {"type": "balls", "max_balls": fam.max_balls, "dimension": fam.dimension}
    if isinstance(fam, StarFamily):
        return {"type": "stars", "fourier_order": fam.fourier_order, "n_components": fam.n_components}
    b, s = _family_to_dict(fam.balls), _family_to_dict(fam.stars)
    del b["type"], s["type"]
    return {"type": "mixed", "balls": b, "stars": s}


def problem_to_dict(p: OptProblem) -> dict:
    if isinstance(p.eigensolver, Fem):
        solver = {"type": "fem", "resolution": p.eigensolver.resolution, "final_resolution": p.eigensolver.final_resolution}
    else:
        solver = {"type": "analytic"}
    return {
        "functional": _functional_to_dict(p.functional),
        "m": p.m,
        "beta": p.beta,
        "family": _family_to_dict(p.family),
        "eigensolver": solver,
        "budget": p.budget,
        "mode": p.mode,
        "restarts": p.restarts,
    }


def config_to_dict(cfg: RunConfig) -> dict:
    out = {"version": FORMAT_VERSION, "seed": cfg.seed, "problem": problem_to_dict(cfg.problem)}
    if cfg.betas is not None:
        out["betas"] = list(cfg.betas)
    if cfg.out is not None:
        out["out"] = cfg.out
    return out
