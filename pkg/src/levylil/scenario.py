"""Scenario-driven orchestration: declarative JSON in, tables and reports out.

A scenario names a measure and/or process, a grid, a master seed and a list
of analyses.  Analyses execute in the fixed dependency order

    symbol -> norming -> classify -> simulate -> verify

(verification analyses read the ensembles produced by the simulate stage and
nothing else; no analysis reads another's output files).  Each run writes one
JSON report plus one CSV per analysis, every file embedding the scenario hash
and the master seed.  Runs are idempotent: identical scenario and seed give
byte-identical outputs under --canonical-output (timestamps omitted).

Exit codes (CLI): 0 success, 1 numeric failure, 2 schema/usage error.
"""

from __future__ import annotations

import datetime
import json
import math
import os
from typing import Optional

import numpy as np
from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from . import classifiers, mc, norming, symbols
from .measures import LevyTriplet, measure_from_dict, profile_from_dict
from .simulate import (PathGrid, process_from_dict, process_from_triplet,
                       save_ensemble_csv_dir, save_ensemble_jsonl,
                       simulate_ensemble, spec_hash)


class SchemaError(ValueError):
    """Scenario violates the published schema (CLI exit code 2)."""


_PROFILE_SCHEMA = {
    "oneOf": [
        {"type": "number"},
        {"type": "object",
         "properties": {"kind": {"const": "constant"}, "value": {"type": "number"}},
         "required": ["kind", "value"], "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "affine_clamped"}, "intercept": {"type": "number"},
                        "slope": {"type": "number"}, "lo": {"type": "number"},
                        "hi": {"type": "number"}},
         "required": ["kind", "intercept", "slope", "lo", "hi"], "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "sinusoidal"}, "center": {"type": "number"},
                        "amplitude": {"type": "number"}, "frequency": {"type": "number"},
                        "phase": {"type": "number"}},
         "required": ["kind", "center", "amplitude"], "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "tanh_ramp"}, "center": {"type": "number"},
                        "amplitude": {"type": "number"}, "rate": {"type": "number"},
                        "x0": {"type": "number"}},
         "required": ["kind", "center", "amplitude"], "additionalProperties": False},
    ]
}

_MEASURE_SCHEMA = {
    "oneOf": [
        {"type": "object",
         "properties": {"variant": {"const": "power_law"}, "alpha": _PROFILE_SCHEMA,
                        "coefficient": {"oneOf": [{"const": "normalized"}, _PROFILE_SCHEMA]},
                        "truncation_radius": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["variant", "alpha"], "additionalProperties": False},
        {"type": "object",
         "properties": {"variant": {"const": "atomic"},
                        "atoms": {"type": "array", "minItems": 1,
                                  "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                            "items": {"type": "number"}}}},
         "required": ["variant", "atoms"], "additionalProperties": False},
        {"type": "object",
         "properties": {"variant": {"const": "tabulated"},
                        "grid": {"type": "array", "items": {"type": "number"}},
                        "density": {"type": "array", "items": {"type": "number"}},
                        "density_neg": {"type": "array", "items": {"type": "number"}}},
         "required": ["variant", "grid", "density"], "additionalProperties": False},
    ]
}

_PROCESS_SCHEMA = {
    "oneOf": [
        {"type": "object",
         "properties": {"kind": {"const": "stable"},
                        "alpha": {"type": "number"}, "scale": {"type": "number"}},
         "required": ["kind", "alpha"], "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "stable_like"}, "alpha": _PROFILE_SCHEMA,
                        "scale": _PROFILE_SCHEMA},
         "required": ["kind", "alpha"], "additionalProperties": False},
        {"type": "object",
         "properties": {"kind": {"const": "compound_poisson"},
                        "atoms": {"type": "array", "minItems": 1,
                                  "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                            "items": {"type": "number"}}},
                        "path_drift": {"type": "number"}},
         "required": ["kind", "atoms"], "additionalProperties": False},
    ]
}

_GRID_SCHEMA = {
    "type": "object",
    "properties": {"t_max": {"type": "number", "exclusiveMinimum": 0},
                   "steps": {"type": "integer", "minimum": 1},
                   "layout": {"enum": ["uniform", "geometric"]},
                   "levels": {"type": "integer", "minimum": 1},
                   "points_per_level": {"type": "integer", "minimum": 1}},
    "required": ["t_max", "steps"],
    "additionalProperties": False,
}


def _analysis(name, properties, required=()):
    props = {"name": {"const": name}, "label": {"type": "string"}}
    props.update(properties)
    return {"type": "object", "properties": props,
            "required": ["name", *required], "additionalProperties": False}


_NUM_LIST = {"type": "array", "minItems": 1, "items": {"type": "number"}}

_ANALYSIS_SCHEMAS = [
    _analysis("pu_grid", {"x_values": _NUM_LIST, "xi_values": _NUM_LIST,
                          "method": {"enum": ["auto", "closed", "quadrature"]}},
              required=["x_values", "xi_values"]),
    _analysis("exponent_grid", {"x_values": _NUM_LIST, "xi_values": _NUM_LIST},
              required=["x_values", "xi_values"]),
    _analysis("tail_mass_grid", {"r_values": _NUM_LIST}, required=["r_values"]),
    _analysis("sector", {"x_window": _NUM_LIST, "xi_grid": _NUM_LIST},
              required=["x_window", "xi_grid"]),
    _analysis("norming_table", {"kind": {"enum": ["u", "u_inverse", "chung_rate", "upper_v"]},
                                "arguments": _NUM_LIST, "epsilon": {"type": "number"},
                                "n": {"type": "integer", "minimum": 1}},
              required=["kind", "arguments"]),
    _analysis("kappa", {"R_grid": _NUM_LIST}, required=["R_grid"]),
    _analysis("upper_function_test", {"epsilon": {"type": "number"},
                                      "n": {"type": "integer", "minimum": 1},
                                      "t_max": {"type": "number"},
                                      "levels": {"type": "integer", "minimum": 8},
                                      "ell_one": {"type": "boolean"}},
              required=["epsilon", "t_max", "levels"]),
    _analysis("lower_tail_test", {"v_exponent": {"type": "number"},
                                  "v_log_exponent": {"type": "number"},
                                  "C": {"type": "number"}, "t_max": {"type": "number"},
                                  "levels": {"type": "integer", "minimum": 8}},
              required=["v_exponent", "C", "t_max", "levels"]),
    _analysis("symbol_liminf_test", {"g_exponent": {"type": "number"},
                                     "g_scale": {"type": "number"},
                                     "w_exponent": {"type": "number"},
                                     "w_log_exponent": {"type": "number"},
                                     "w_loglog_exponent": {"type": "number"},
                                     "t_max": {"type": "number"},
                                     "levels": {"type": "integer", "minimum": 8}},
              required=["g_exponent", "w_exponent", "t_max", "levels"]),
    _analysis("simulate", {"record_times": _NUM_LIST, "save": {"enum": ["jsonl", "csv"]},
                           "ensemble_id": {"type": "string"}}),
    _analysis("sup_probability", {"t": {"type": "number"}, "R": {"type": "number"},
                                  "direction": {"enum": ["ge", "lt"]},
                                  "ensemble_id": {"type": "string"}},
              required=["t", "R"]),
    _analysis("maximal_inequality", {"t_list": _NUM_LIST, "R_list": _NUM_LIST,
                                     "ensemble_id": {"type": "string"}},
              required=["t_list", "R_list"]),
    _analysis("multi_interval_decay", {"R": {"type": "number"},
                                       "m_max": {"type": "integer", "minimum": 1},
                                       "ensemble_id": {"type": "string"}},
              required=["R", "m_max"]),
    _analysis("spitzer", {"t_list": _NUM_LIST, "ensemble_id": {"type": "string"}},
              required=["t_list"]),
    _analysis("etemadi", {"C": {"type": "number"}, "v_exponent": {"type": "number"},
                          "v_log_exponent": {"type": "number"}, "t_list": _NUM_LIST,
                          "ensemble_id": {"type": "string"}},
              required=["C", "v_exponent", "t_list"]),
    _analysis("charfn_bound", {"xi_list": _NUM_LIST, "t_list": _NUM_LIST,
                               "epsilon": {"type": "number"},
                               "ensemble_id": {"type": "string"}},
              required=["xi_list", "t_list"]),
    _analysis("chung_statistic", {"t_lo": {"type": "number"}, "t_hi": {"type": "number"},
                                  "rate_exponent": {"type": "number"},
                                  "ensemble_id": {"type": "string"}},
              required=["t_lo", "t_hi"]),
]

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "levylil scenario",
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "x": {"type": "number"},
        "drift": _PROFILE_SCHEMA,
        "measure": _MEASURE_SCHEMA,
        "process": _PROCESS_SCHEMA,
        "grid": _GRID_SCHEMA,
        "paths": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "analyses": {"type": "array", "minItems": 1, "items": {"oneOf": _ANALYSIS_SCHEMAS}},
    },
    "required": ["seed", "analyses"],
    "additionalProperties": False,
}

_STAGE_OF = {
    "pu_grid": 0, "exponent_grid": 0, "tail_mass_grid": 0, "sector": 0,
    "norming_table": 1, "kappa": 1,
    "upper_function_test": 2, "lower_tail_test": 2, "symbol_liminf_test": 2,
    "simulate": 3,
    "sup_probability": 4, "maximal_inequality": 4, "multi_interval_decay": 4,
    "spitzer": 4, "etemadi": 4, "charfn_bound": 4, "chung_statistic": 4,
}

STAGES = ("symbol", "norming", "classify", "simulate", "verify")


def _refine_error(err):
    """Descend oneOf failures into the branch whose discriminator matched so
    the message names the offending field instead of the whole instance."""
    for _ in range(8):
        if not err.context:
            return err
        by_branch = {}
        for sub in err.context:
            by_branch.setdefault(sub.schema_path[0], []).append(sub)
        viable = {i: errs for i, errs in by_branch.items()
                  if not any(s.validator == "const" for s in errs)}
        pool = [e for errs in (viable or by_branch).values() for e in errs]
        for kind in ("additionalProperties", "required"):
            picked = [e for e in pool if e.validator == kind]
            if picked:
                err = picked[0]
                break
        else:
            err = best_match(pool) or pool[0]
    return err


def validate_scenario(doc):
    validator = Draft202012Validator(SCENARIO_SCHEMA)
    err = best_match(validator.iter_errors(doc))
    if err is not None:
        err = _refine_error(err)
        raise SchemaError(f"schema violation at {err.json_path}: {err.message}")


def load_scenario(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario is not valid JSON: {exc}") from exc
    validate_scenario(doc)
    return doc


def _power_log_family(a, b=0.0, c=0.0):
    def f(t):
        out = t ** a
        if b:
            out *= abs(math.log(t)) ** b
        if c:
            out *= math.log(abs(math.log(t))) ** c
        return out
    return f


class _Context:
    def __init__(self, doc):
        self.doc = doc
        self.x = float(doc.get("x", 0.0))
        self.seed = int(doc["seed"])
        self.paths = int(doc.get("paths", 1000))
        self.measure = measure_from_dict(doc["measure"]) if "measure" in doc else None
        self.process = process_from_dict(doc["process"]) if "process" in doc else None
        self.drift = profile_from_dict(doc["drift"]) if "drift" in doc else 0.0
        self.grid = PathGrid.from_dict(doc["grid"]) if "grid" in doc else None
        self.ensembles = {}

    def need_measure(self):
        if self.measure is not None:
            return self.measure
        if self.process is not None:
            return self.process.levy_measure
        raise SchemaError("analysis needs a 'measure' (or a 'process' to derive one)")

    def need_process(self):
        if self.process is not None:
            return self.process
        if self.measure is not None:
            return process_from_triplet(LevyTriplet(measure=self.measure, drift=self.drift))
        raise SchemaError("analysis needs a 'process' (or an exactly simulatable 'measure')")

    def triplet(self):
        return LevyTriplet(measure=self.need_measure(), drift=self.drift)

    def need_ensemble(self, spec):
        eid = spec.get("ensemble_id", "main")
        if eid not in self.ensembles:
            if self.grid is None:
                raise SchemaError("verification analyses need a 'grid' and a simulate analysis")
            self.ensembles[eid] = simulate_ensemble(self.need_process(), self.x, self.grid,
                                                    self.seed, self.paths)
        return self.ensembles[eid]


def _run_analysis(ctx: _Context, spec: dict, outdir: str, tag: str, hash_header: str,
                  scen_hash: str):
    name = spec["name"]
    csv_path = os.path.join(outdir, f"{tag}.csv")

    def write_csv(header, rows):
        _atomic_write(csv_path, hash_header + header + "\n"
                      + "\n".join(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                                           for v in row) for row in rows)
                      + ("\n" if rows else ""))

    if name == "pu_grid":
        m = ctx.need_measure()
        rows = [(float(xv), float(xiv),
                 symbols.eval_pU(m, float(xv), float(xiv), method=spec.get("method", "auto")))
                for xv in spec["x_values"] for xiv in spec["xi_values"]]
        write_csv("x,xi,pu", rows)
        return {"rows": len(rows), "csv": os.path.basename(csv_path)}
    if name == "exponent_grid":
        trip = ctx.triplet()
        rows = []
        for xv in spec["x_values"]:
            for xiv in spec["xi_values"]:
                p = symbols.eval_exponent(trip, float(xv), float(xiv))
                rows.append((float(xv), float(xiv), p.real, p.imag))
        write_csv("x,xi,re,im", rows)
        return {"rows": len(rows), "csv": os.path.basename(csv_path)}
    if name == "tail_mass_grid":
        m = ctx.need_measure()
        rows = [(float(r), symbols.tail_mass(m, ctx.x, float(r))) for r in spec["r_values"]]
        write_csv("r,tail_mass", rows)
        return {"rows": len(rows), "csv": os.path.basename(csv_path)}
    if name == "sector":
        est = symbols.sector_estimate(ctx.triplet(), tuple(spec["x_window"]), spec["xi_grid"])
        write_csv("refinement,sup_ratio", list(enumerate(est.history)))
        return {"value": est.value, "flag": est.flag, "history": list(est.history)}
    if name == "norming_table":
        nf = norming.build_norming_function(ctx.need_measure(), ctx.x, spec["kind"],
                                            spec["arguments"], epsilon=spec.get("epsilon", 0.5),
                                            n=spec.get("n", 1))
        args, vals = nf.table()
        write_csv("argument,value", list(zip(args.tolist(), vals.tolist())))
        return {"kind": spec["kind"], "form": nf.form, "csv": os.path.basename(csv_path)}
    if name == "kappa":
        est = norming.kappa_estimate(ctx.need_measure(), ctx.x, spec["R_grid"])
        write_csv("R,kappa", list(zip(est.R_grid, est.kappa_values)))
        return {"kappa": est.kappa, "values": list(est.kappa_values)}
    if name == "upper_function_test":
        verdict = classifiers.upper_function_test(
            ctx.need_measure(), ctx.x, spec["epsilon"], spec.get("n", 1),
            spec["t_max"], spec["levels"], ell_one=spec.get("ell_one", False))
        write_csv("index,block", list(enumerate(verdict.block_values)))
        return verdict.to_dict()
    if name == "lower_tail_test":
        v = _power_log_family(spec["v_exponent"], spec.get("v_log_exponent", 0.0))
        verdict = classifiers.lower_tail_test(ctx.need_measure(), v, spec["C"],
                                              spec["t_max"], spec["levels"])
        write_csv("index,block", list(enumerate(verdict.block_values)))
        return verdict.to_dict()
    if name == "symbol_liminf_test":
        scale = spec.get("g_scale", 1.0)
        expo = spec["g_exponent"]
        w = _power_log_family(spec["w_exponent"], spec.get("w_log_exponent", 0.0),
                              spec.get("w_loglog_exponent", 0.0))
        verdict = classifiers.symbol_liminf_test(lambda xi: scale * xi ** expo, w,
                                                 spec["t_max"], spec["levels"])
        write_csv("index,level", list(enumerate(verdict.block_values)))
        return verdict.to_dict()
    if name == "simulate":
        if ctx.grid is None:
            raise SchemaError("simulate needs a 'grid'")
        ens = simulate_ensemble(ctx.need_process(), ctx.x, ctx.grid, ctx.seed, ctx.paths,
                                record_times=spec.get("record_times"))
        ctx.ensembles[spec.get("ensemble_id", "main")] = ens
        extra = {"scenario_hash": scen_hash}
        if spec.get("save") == "jsonl":
            save_ensemble_jsonl(ens, os.path.join(outdir, f"{tag}_paths.jsonl"), extra)
        elif spec.get("save") == "csv":
            save_ensemble_csv_dir(ens, os.path.join(outdir, f"{tag}_paths"), extra)
        final = ens.running_sup[:, -1]
        rows = list(zip(ens.times.tolist(),
                        np.mean(ens.positions - ens.x0, axis=0).tolist(),
                        np.median(ens.running_sup, axis=0).tolist()))
        write_csv("t,mean_displacement,median_running_sup", rows)
        return {"paths": ens.n_paths, "grid_points": int(ens.times.size),
                "final_median_running_sup": float(np.median(final)),
                "spec_hash": ens.metadata()["spec_hash"]}
    if name == "sup_probability":
        ens = ctx.need_ensemble(spec)
        est = mc.estimate_sup_probability(ens, ens.nearest_time(spec["t"]), spec["R"],
                                          spec.get("direction", "ge"))
        write_csv("t,R,p_hat,standard_error",
                  [(spec["t"], spec["R"], est.p_hat, est.standard_error)])
        return est.to_dict()
    if name == "maximal_inequality":
        ens = ctx.need_ensemble(spec)
        rep = mc.maximal_inequality_check(ens, ctx.need_measure(), ctx.x,
                                          spec["t_list"], spec["R_list"])
        write_csv("t,R,c1_candidate,c2_candidate",
                  [(r["t"], r["R"], r["c1_candidate"], r["c2_candidate"]) for r in rep["rows"]])
        rep.pop("rows")
        return rep
    if name == "multi_interval_decay":
        ens = ctx.need_ensemble(spec)
        rep = mc.multi_interval_decay(ens, ctx.need_measure(), ctx.x, spec["R"], spec["m_max"])
        write_csv("m,q", list(zip(rep["m"], rep["q"])))
        return rep
    if name == "spitzer":
        ens = ctx.need_ensemble(spec)
        rows = mc.spitzer_estimate(ens, ctx.x, spec["t_list"])
        write_csv("t,p_hat,standard_error",
                  [(r["t"], r["p_hat"], r["standard_error"]) for r in rows])
        return {"rows": rows}
    if name == "etemadi":
        ens = ctx.need_ensemble(spec)
        v = _power_log_family(spec["v_exponent"], spec.get("v_log_exponent", 0.0))
        rep = mc.etemadi_check(ens, v, spec["C"], spec["t_list"])
        write_csv("t,v,p_marginal,p_sup,tail_lower_bound",
                  [(r["t"], r["v"], r["marginal"]["p_hat"], r["sup"]["p_hat"],
                    r["tail_lower_bound"]) for r in rep["rows"]])
        return rep
    if name == "charfn_bound":
        ens = ctx.need_ensemble(spec)
        proc = ens.process
        if not hasattr(proc, "alpha") or not isinstance(getattr(proc, "alpha"), float):
            raise SchemaError("charfn_bound is available for stable processes")
        family = symbols.SymbolFamily.from_stable(proc.alpha, proc.scale)
        rep = mc.empirical_charfn_bound(ens, family, spec["xi_list"], spec["t_list"],
                                        epsilon=spec.get("epsilon"))
        write_csv("t,xi,modulus,bound,violated",
                  [(r["t"], r["xi"], r["modulus"], r["bound"], int(r["violated"]))
                   for r in rep["rows"]])
        rep.pop("rows")
        return rep
    if name == "chung_statistic":
        ens = ctx.need_ensemble(spec)
        stat = mc.chung_statistic(ens, ctx.need_measure(), ctx.x, spec["t_lo"], spec["t_hi"],
                                  rate_exponent=spec.get("rate_exponent"))
        write_csv("probe_time,rate", list(zip(stat.probe_times, stat.rates)))
        return stat.summary()
    raise SchemaError(f"unknown analysis {name!r}")


def _atomic_write(path, text):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_scenario(scenario, *, stages=None, seed: Optional[int] = None,
                 paths: Optional[int] = None, steps: Optional[int] = None,
                 out: Optional[str] = None, canonical: bool = False) -> dict:
    """Execute a scenario (path or dict); returns the report dict."""
    if isinstance(scenario, (str, os.PathLike)):
        doc = load_scenario(scenario)
    else:
        doc = json.loads(json.dumps(scenario))
        validate_scenario(doc)
    if seed is not None:
        doc["seed"] = int(seed)
    if paths is not None:
        doc["paths"] = int(paths)
    if steps is not None:
        doc.setdefault("grid", {})["steps"] = int(steps)
    if out is not None:
        doc["output_dir"] = out
    validate_scenario(doc)

    scen_hash = spec_hash(doc)
    outdir = doc.get("output_dir", "out")
    os.makedirs(outdir, exist_ok=True)
    ctx = _Context(doc)
    hash_header = f"# scenario_hash={scen_hash}\n# seed={ctx.seed}\n"

    wanted = set(range(len(STAGES))) if stages is None else {STAGES.index(s) for s in stages}
    indexed = [(i, spec) for i, spec in enumerate(doc["analyses"])
               if _STAGE_OF[spec["name"]] in wanted]
    indexed.sort(key=lambda pair: (_STAGE_OF[pair[1]["name"]], pair[0]))

    results = {}
    for i, spec in indexed:
        tag = f"{i:02d}_{spec.get('label', spec['name'])}"
        results[tag] = _run_analysis(ctx, spec, outdir, tag, hash_header, scen_hash)

    report = {"scenario_hash": scen_hash, "seed": ctx.seed, "scenario": doc,
              "results": results}
    if not canonical:
        report["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _atomic_write(os.path.join(outdir, "report.json"),
                  json.dumps(report, sort_keys=True, indent=2) + "\n")
    return report


def write_schema(path):
    """Ship the published scenario schema as a JSON document."""
    _atomic_write(path, json.dumps(SCENARIO_SCHEMA, sort_keys=True, indent=2) + "\n")
