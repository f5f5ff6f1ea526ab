"""Command-line front end: ``qkdaudit {criteria,audit,simulate,report}``.

Exit codes: 0 success, 2 input error, 3 runtime error. All randomness comes
from seeds stored in the input files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .dist_core import (
    KeyDistribution,
    SubsetSpec,
    distance_to_uniform,
    eve_information,
    guessing_probability,
    index_to_bits,
    shannon_entropy,
    subset_security_gap,
)
from .extremal import kpa_break_length, kpa_witness_family, max_guess_given_information, max_guess_given_vd
from .loss_sim import (
    AttackStrategy,
    ConfigError,
    ProtocolConfig,
    breach_threshold,
    loss_sweep,
    perceived_vs_real_rates,
    run_protocol,
    tallies_to_csv,
)
from .pa_pipeline import LinearHash, extractable_bits, pa_invariance_check, pushforward
from .quantum import CqEnsemble, cq_distance, interpretation_gap_report

SCHEMA_VERSION = 1
log = logging.getLogger("qkdaudit")

TABLE_ASPECTS = (
    "raw security of K during key generation",
    "composition security of K against known-plaintext attack",
    "privacy amplification",
    "key generation rate",
    "determination of security",
    "effect of transmission loss on security",
    "modeling of cryptosystem photon detector",
)


class InputError(Exception):
    """Bad or missing input; maps to exit code 2."""


def _load_json(path) -> object:
    if path is None:
        raise InputError("missing --input")
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _parse(kind, fn, obj):
    try:
        return fn(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"invalid {kind}: {exc}") from None


# commands


def criteria(dist: KeyDistribution) -> dict:
    p1, argmax = guessing_probability(dist)
    l, r = extractable_bits(dist)
    gaps = []
    for i in range(dist.n_bits):
        gap, p1_sub = subset_security_gap(dist, SubsetSpec((i,)))
        gaps.append({"positions": [i], "p1": p1_sub, "epsilon": gap})
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "criteria",
        "n_bits": dist.n_bits,
        "entropy": shannon_entropy(dist),
        "eve_information": eve_information(dist),
        "vd_to_uniform": distance_to_uniform(dist),
        "p1": p1,
        "argmax": index_to_bits(argmax, dist.n_bits),
        "l": l,
        "r": r,
        "subset_gaps": gaps,
    }


def audit(claim: dict) -> dict:
    try:
        criterion = claim["criterion"]
        n_bits = int(claim.get("n_bits", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid claim: {exc}") from None
    out = {"schema_version": SCHEMA_VERSION, "command": "audit", "criterion": criterion}
    if criterion == "trace" and "ensemble" in claim:
        ensemble = _parse("ensemble", CqEnsemble.from_json, claim["ensemble"])
        n_keys = len(ensemble.states)
        n_bits = int(round(math.log2(n_keys)))
        if n_keys < 2 or (1 << n_bits) != n_keys:
            raise InputError("ensemble must list 2^n probe states")
        value = cq_distance(ensemble)
        out["computed_d"] = value
        if "value" in claim:
            out["claimed_d"] = float(claim["value"])
            out["claim_holds"] = bool(value <= float(claim["value"]) + 1e-12)
    else:
        try:
            value = float(claim["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"invalid claim value: {exc}") from None
    if not 1 <= n_bits <= 20:
        raise InputError("n_bits must lie in [1, 20]")
    out["n_bits"] = n_bits
    out["value"] = value
    uniform_p1 = 2.0**-n_bits
    try:
        if criterion == "info":
            result = max_guess_given_information(n_bits, value)
        elif criterion in ("vd", "trace"):
            if criterion == "trace":
                # any measurement on the probe leaves the key within d of uniform
                out["delta_e_bound"] = value
            result = max_guess_given_vd(n_bits, min(value, 1.0 - uniform_p1))
            out["interpretation"] = interpretation_gap_report(result.constraint, n_bits)
        else:
            raise InputError(f"unknown criterion {criterion!r}; use info, vd or trace")
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out["perceived_p1"] = uniform_p1
    out["real_p1"] = result.p1_star
    out["l_exponent"] = result.l_exponent
    out["vd_to_uniform"] = distance_to_uniform(result.witness)
    out["eve_information"] = eve_information(result.witness)
    out["kpa_break_length"] = kpa_break_length(n_bits, result.l_exponent)
    if criterion == "info" and value > 0:
        out["p1_n_over_info"] = result.p1_star * n_bits / value
    return out


def simulate(config: ProtocolConfig, attack: AttackStrategy, grid=None):
    if grid is None:
        return [run_protocol(config, attack)]
    return loss_sweep(config, attack, grid)


def report(bundle: dict) -> list[dict]:
    """Seven rows contrasting the perceived reading of a claim with computed numbers."""
    for member in ("claim", "distribution", "hash", "protocol"):
        if member not in bundle:
            raise InputError(f"instance bundle is missing '{member}'")
    claim = bundle["claim"]
    audited = audit(claim)
    n = audited["n_bits"]
    p_x = _parse("distribution", KeyDistribution.from_json, bundle["distribution"])
    hash_ = _parse("hash", LinearHash.from_json, bundle["hash"])
    proto = bundle["protocol"]
    if "config" not in proto or "attack" not in proto:
        raise InputError("protocol must hold 'config' and 'attack'")
    config = _parse("protocol config", ProtocolConfig.from_json, proto["config"])
    attack = _parse("attack", AttackStrategy.from_json, proto["attack"])
    _parse("attack", attack.validate, config)

    l = audited["l_exponent"]
    l_prime = min(n, math.ceil(kpa_break_length(n, l) - 1e-9))
    kpa = kpa_witness_family(n, max(l_prime, 1), seed=int(claim.get("seed", 0)))

    if p_x.n_bits != hash_.m:
        raise InputError(f"distribution has {p_x.n_bits} bits but hash expects {hash_.m}")
    pa = pa_invariance_check(p_x, hash_)
    p_k = pushforward(p_x, hash_)

    attacked = run_protocol(config, attack)
    honest = run_protocol(config, AttackStrategy("none"))
    rates = perceived_vs_real_rates(attacked)
    loss_params = {
        "protocol": config.protocol,
        "attack": attack.kind,
        "eta": config.transmittance_eta,
        "qber": attacked.qber,
        "honest_detection_rate": honest.detection_rate,
        "attacked_detection_rate": attacked.detection_rate,
    }
    if config.protocol == "B92":
        loss_params["breach_threshold"] = breach_threshold(config.overlap_s, config)

    rows = [
        (
            audited["perceived_p1"],
            audited["real_p1"],
            {"criterion": audited["criterion"], "value": audited["value"], "n_bits": n},
        ),
        (
            2.0 ** -(n - kpa.l_prime) if kpa.l_prime < n else 1.0,
            kpa.p1_after,
            {"l": l, "l_prime": kpa.l_prime, "p1_before": kpa.p1_before},
        ),
        (
            2.0**-hash_.n,
            pa["p1"],
            {"q1": pa["q1"], "vd_before": distance_to_uniform(p_x), "vd_after": distance_to_uniform(p_k),
             "m": hash_.m, "n": hash_.n},
        ),
        (
            rates["perceived_rate"],
            rates["real_rate_exponent"],
            {"informed_rate": rates["informed_rate"], "sifted_bits": attacked.sifted_bits},
        ),
        (
            audited["value"],
            audited["real_p1"],
            {"criterion": audited["criterion"], "uniform_p1": audited["perceived_p1"]},
        ),
        (0.0, attacked.eve_known_fraction, loss_params),
        ("side channel", "completeness of system model (not modelled)", {}),
    ]
    return [
        {"aspect": aspect, "perceived": perceived, "real": real, "instance_params": params}
        for aspect, (perceived, real, params) in zip(TABLE_ASPECTS, rows)
    ]


# rendering


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _params(params: dict) -> str:
    return "; ".join(f"{k}={_fmt(v)}" for k, v in params.items())


def render_report(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return _dump({"schema_version": SCHEMA_VERSION, "command": "report", "rows": rows})
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["aspect", "perceived", "real", "instance_params"])
        for r in rows:
            writer.writerow([r["aspect"], _fmt(r["perceived"]), _fmt(r["real"]), _params(r["instance_params"])])
        return buf.getvalue()
    lines = ["| aspect | perceived | real | instance |", "|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r['aspect']} | {_fmt(r['perceived'])} | {_fmt(r['real'])} | {_params(r['instance_params'])} |")
    return "\n".join(lines) + "\n"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _criteria_csv(out: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keys = [k for k in out if k not in ("subset_gaps", "command")]
    writer.writerow(keys)
    writer.writerow([_fmt(out[k]) for k in keys])
    return buf.getvalue()


# argument handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkdaudit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats, default):
        p.add_argument("--input", help="input JSON file")
        p.add_argument("--output", help="write here instead of stdout")
        p.add_argument("--format", choices=formats, default=default)
        p.add_argument("--quiet", action="store_true", help="suppress log messages")

    common(sub.add_parser("criteria", help="security functionals of a key distribution"), ("json", "csv"), "json")
    common(sub.add_parser("audit", help="worst case consistent with a claimed bound"), ("json",), "json")
    p = sub.add_parser("simulate", help="lossy-channel protocol simulation")
    common(p, ("json", "csv"), "json")
    p.add_argument("--attack", help="attack JSON file (default: no attack)")
    p.add_argument("--grid", help="JSON list of transmittances, or {\"eta_grid\": [...]}")
    common(sub.add_parser("report", help="perceived-versus-real table for an instance bundle"), ("md", "csv", "json"), "md")
    return parser


def _run(args) -> str:
    if args.command == "criteria":
        out = criteria(_parse("distribution", KeyDistribution.from_json, _load_json(args.input)))
        return _criteria_csv(out) if args.format == "csv" else _dump(out)
    if args.command == "audit":
        claim = _load_json(args.input)
        if not isinstance(claim, dict):
            raise InputError("claim must be a JSON object")
        return _dump(audit(claim))
    if args.command == "simulate":
        config = _parse("config", ProtocolConfig.from_json, _load_json(args.input))
        attack = AttackStrategy()
        if args.attack:
            attack = _parse("attack", AttackStrategy.from_json, _load_json(args.attack))
        _parse("attack", attack.validate, config)
        grid = None
        if args.grid:
            grid = _load_json(args.grid)
            grid = grid.get("eta_grid") if isinstance(grid, dict) else grid
            if not isinstance(grid, list) or not all(isinstance(x, (int, float)) for x in grid):
                raise InputError("grid must be a list of numbers")
            if any(not 0.0 < x <= 1.0 for x in grid):
                raise InputError("grid values must lie in (0, 1]")
        rows = simulate(config, attack, grid)
        if args.format == "csv":
            return tallies_to_csv(rows)
        return _dump({"schema_version": SCHEMA_VERSION, "command": "simulate", "runs": [t.to_json() for t in rows]})
    bundle = _load_json(args.input)
    if not isinstance(bundle, dict):
        raise InputError("instance bundle must be a JSON object")
    return render_report(report(bundle), args.format)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    try:
        text = _run(args)
    except (InputError, ConfigError) as exc:
        log.error("%s", exc)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.error("runtime failure: %s", exc)
        return 3
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
