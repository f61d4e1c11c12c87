"""File formats: system JSON, scenario CSV, model and report JSON.

Loader errors are ``ParseError`` (file does not parse), ``SchemaError``
(missing/mistyped field, with its JSON path) or ``InvariantViolation``
(parsed fine but physically inconsistent).
"""
from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from sedpce.errors import InvariantViolation, ParseError, SchemaError
from sedpce.gas import Compressor, GasLoad, GasNode, GasSystem, GasWell, GenCoupling, Pipeline
from sedpce.grid import Bus, Generator, Line, Load, PowerSystem, WindFarm
from sedpce.surrogate import SurrogateModel
from sedpce.uq import UqReport


def bundled(name: str) -> Path:
    """Path of a fixture shipped in ``sedpce/data``."""
    return Path(str(resources.files("sedpce") / "data" / name))


def _get(d: dict, key: str, where: str, kind=None, default=...):
    if not isinstance(d, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in d:
        if default is not ...:
            return default
        raise SchemaError(f"{where}.{key}: missing")
    val = d[key]
    if kind is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise SchemaError(f"{where}.{key}: expected a number, got {val!r}")
        return float(val)
    if kind is list and not isinstance(val, list):
        raise SchemaError(f"{where}.{key}: expected a list")
    return val


def _limit(d, key, where, default):
    v = d.get(key, None)
    if v is None:
        return default
    return _get(d, key, where, float)


def system_from_dict(doc: dict) -> PowerSystem:
    T = _get(doc, "periods", "$")
    if not isinstance(T, int):
        raise SchemaError("$.periods: expected an integer")
    buses = tuple(
        Bus(_get(b, "id", f"$.buses[{i}]"), bool(b.get("slack", False)))
        for i, b in enumerate(_get(doc, "buses", "$", list))
    )
    lines = []
    for i, ln in enumerate(_get(doc, "lines", "$", list)):
        w = f"$.lines[{i}]"
        lim = ln.get("limit")
        lines.append(Line(
            id=_get(ln, "id", w),
            from_bus=_get(ln, "from", w),
            to_bus=_get(ln, "to", w),
            reactance=_get(ln, "reactance", w, float),
            flow_min=_limit(ln, "flow_min", w, -lim if lim is not None else -math.inf),
            flow_max=_limit(ln, "flow_max", w, lim if lim is not None else math.inf),
        ))
    schedule = _get(doc, "uc_schedule", "$", default={})
    gens = []
    for i, g in enumerate(_get(doc, "generators", "$", list)):
        w = f"$.generators[{i}]"
        gid = _get(g, "id", w)
        uc = schedule.get(str(gid), schedule.get(gid))
        if uc is None:
            raise SchemaError(f"$.uc_schedule.{gid}: missing commitment for generator")
        segs = _get(g, "cost_segments", w, list)
        try:
            segments = tuple((float(a), float(b)) for a, b in segs)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{w}.cost_segments: expected [[width, marginal_cost], ...]") from exc
        status = _get(uc, "status", f"$.uc_schedule.{gid}", list)
        gens.append(Generator(
            id=gid,
            bus=_get(g, "bus", w),
            p_min=_get(g, "p_min", w, float),
            p_max=_get(g, "p_max", w, float),
            cost_segments=segments,
            commitment=tuple(int(x) for x in status),
            initial_status=int(uc.get("initial", status[0] if status else 1)),
            ramp_up=_limit(g, "ramp_up", w, None),
            ramp_down=_limit(g, "ramp_down", w, None),
            startup_ramp=_limit(g, "startup_ramp", w, None),
            shutdown_ramp=_limit(g, "shutdown_ramp", w, None),
            initial_output=_limit(uc, "initial_output", f"$.uc_schedule.{gid}", None),
        ))
    loads = tuple(
        Load(_get(d, "id", f"$.loads[{i}]"), _get(d, "bus", f"$.loads[{i}]"),
             tuple(float(v) for v in _get(d, "profile", f"$.loads[{i}]", list)))
        for i, d in enumerate(_get(doc, "loads", "$", list))
    )
    farms = tuple(
        WindFarm(_get(w, "id", f"$.wind_farms[{i}]"), _get(w, "bus", f"$.wind_farms[{i}]"))
        for i, w in enumerate(_get(doc, "wind_farms", "$", list))
    )
    gas = gas_from_dict(doc["gas"]) if doc.get("gas") is not None else None
    meta = {k: doc[k] for k in ("description",) if k in doc}
    meta["wind_capacity"] = {str(w["id"]): w["capacity"] for w in doc["wind_farms"] if "capacity" in w}
    return PowerSystem(
        periods=T,
        buses=buses,
        lines=tuple(lines),
        generators=tuple(gens),
        loads=loads,
        wind_farms=farms,
        gas=gas,
        name=doc.get("name", "system"),
        cost_model=doc.get("cost_model", "piecewise_linear"),
        metadata=meta,
    )


def gas_from_dict(doc: dict) -> GasSystem:
    w = "$.gas"
    nodes = tuple(
        GasNode(_get(n, "id", f"{w}.nodes[{i}]"), _get(n, "p_min", f"{w}.nodes[{i}]", float),
                _get(n, "p_max", f"{w}.nodes[{i}]", float))
        for i, n in enumerate(doc.get("nodes", []))
    )
    wells = tuple(
        GasWell(_get(s, "id", f"{w}.wells[{i}]"), _get(s, "node", f"{w}.wells[{i}]"),
                _get(s, "cost", f"{w}.wells[{i}]", float),
                _get(s, "g_min", f"{w}.wells[{i}]", float, 0.0),
                _get(s, "g_max", f"{w}.wells[{i}]", float))
        for i, s in enumerate(doc.get("wells", []))
    )
    pipes = tuple(
        Pipeline(_get(p, "id", f"{w}.pipelines[{i}]"), _get(p, "from", f"{w}.pipelines[{i}]"),
                 _get(p, "to", f"{w}.pipelines[{i}]"), _get(p, "weymouth", f"{w}.pipelines[{i}]", float),
                 _get(p, "capacity", f"{w}.pipelines[{i}]", float, math.inf))
        for i, p in enumerate(doc.get("pipelines", []))
    )
    comps = tuple(
        Compressor(_get(c, "id", f"{w}.compressors[{i}]"), _get(c, "from", f"{w}.compressors[{i}]"),
                   _get(c, "to", f"{w}.compressors[{i}]"), _get(c, "ratio", f"{w}.compressors[{i}]", float),
                   _get(c, "capacity", f"{w}.compressors[{i}]", float, math.inf))
        for i, c in enumerate(doc.get("compressors", []))
    )
    loads = tuple(
        GasLoad(_get(d, "node", f"{w}.gas_loads[{i}]"),
                tuple(float(v) for v in _get(d, "profile", f"{w}.gas_loads[{i}]", list)))
        for i, d in enumerate(doc.get("gas_loads", []))
    )
    couplings = []
    for gid, entry in (doc.get("gen_coupling") or {}).items():
        where = f"{w}.gen_coupling.{gid}"
        couplings.append(GenCoupling(_coerce_id(gid), _get(entry, "node", where), _get(entry, "theta", where, float)))
    return GasSystem(nodes, wells, pipes, comps, loads, tuple(couplings))


def _coerce_id(key: str):
    try:
        return int(key)
    except ValueError:
        return key


def _num(v: float):
    return None if math.isinf(v) else v


def system_to_dict(system: PowerSystem) -> dict:
    doc = {
        "name": system.name,
        "periods": system.periods,
        "cost_model": system.cost_model,
        "buses": [{"id": b.id, "slack": b.slack} for b in system.buses],
        "lines": [
            {"id": ln.id, "from": ln.from_bus, "to": ln.to_bus, "reactance": ln.reactance,
             "flow_min": _num(ln.flow_min), "flow_max": _num(ln.flow_max)}
            for ln in system.lines
        ],
        "generators": [
            {"id": g.id, "bus": g.bus, "p_min": g.p_min, "p_max": g.p_max,
             "cost_segments": [list(s) for s in g.cost_segments],
             "ramp_up": g.ramp_up, "ramp_down": g.ramp_down,
             "startup_ramp": g.startup_ramp, "shutdown_ramp": g.shutdown_ramp}
            for g in system.generators
        ],
        "uc_schedule": {
            str(g.id): {"initial": g.initial_status, "status": list(g.commitment),
                        "initial_output": g.initial_output}
            for g in system.generators
        },
        "loads": [{"id": d.id, "bus": d.bus, "profile": list(d.profile)} for d in system.loads],
        "wind_farms": [{"id": w.id, "bus": w.bus} for w in system.wind_farms],
    }
    if "description" in system.metadata:
        doc["description"] = system.metadata["description"]
    caps = system.metadata.get("wind_capacity", {})
    for w in doc["wind_farms"]:
        if str(w["id"]) in caps:
            w["capacity"] = caps[str(w["id"])]
    if system.gas is not None:
        g: GasSystem = system.gas
        doc["gas"] = {
            "nodes": [{"id": n.id, "p_min": n.p_min, "p_max": n.p_max} for n in g.nodes],
            "wells": [{"id": s.id, "node": s.node, "cost": s.cost, "g_min": s.g_min, "g_max": s.g_max}
                      for s in g.wells],
            "pipelines": [{"id": p.id, "from": p.from_node, "to": p.to_node, "weymouth": p.weymouth,
                           "capacity": _num(p.capacity)} for p in g.pipelines],
            "compressors": [{"id": c.id, "from": c.from_node, "to": c.to_node, "ratio": c.ratio,
                             "capacity": _num(c.capacity)} for c in g.compressors],
            "gas_loads": [{"node": d.node, "profile": list(d.profile)} for d in g.loads],
            "gen_coupling": {str(k.generator): {"node": k.node, "theta": k.theta} for k in g.couplings},
        }
        for p in doc["gas"]["pipelines"] + doc["gas"]["compressors"]:
            if p["capacity"] is None:
                del p["capacity"]
    return doc


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_system(path) -> PowerSystem:
    doc = _read_json(path)
    try:
        return system_from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def save_system(system: PowerSystem, path) -> None:
    with open(path, "w") as fh:
        json.dump(system_to_dict(system), fh, indent=2)


def load_scenarios(path, system: PowerSystem | None = None) -> np.ndarray:
    """Read a scenario CSV; header labels must match ``system.wind_labels`` when given."""
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(header):
                    raise ParseError(f"{path}:{lineno}: {len(rec)} fields, header has {len(header)}")
                try:
                    rows.append([float(v) for v in rec])
                except ValueError as exc:
                    raise ParseError(f"{path}:{lineno}: {exc}") from exc
    except StopIteration:
        raise ParseError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if system is not None and header != system.wind_labels:
        raise SchemaError(
            f"{path}: header {header[:3]}... does not match expected {system.wind_labels[:3]}..."
        )
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    bad = np.argwhere(~np.isfinite(data) | (data < 0))
    if bad.size:
        r, c = bad[0]
        raise InvariantViolation(
            f"{path}: row {r + 1} (line {r + 2}), column {header[c]}: wind value {data[r, c]} must be finite and >= 0"
        )
    return data


def save_scenarios(data, path, labels) -> None:
    data = np.asarray(data, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(labels)
        for row in data:
            w.writerow([repr(float(v)) for v in row])


def read_column(path, column: str | None = None) -> np.ndarray:
    """One numeric column of a CSV (the last column by default)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        pos = header.index(column) if column else len(header) - 1
        return np.array([float(r[pos]) for r in reader if r], dtype=float)


def write_json(obj: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)


def save_model(model: SurrogateModel, path) -> None:
    write_json(model.to_dict(), path)


def load_model(path) -> SurrogateModel:
    doc = _read_json(path)
    try:
        return SurrogateModel.from_dict(doc)
    except KeyError as exc:
        raise SchemaError(f"{path}: missing field {exc}") from exc


def save_report(report: UqReport, path) -> None:
    write_json(report.to_dict(), path)


def load_report(path) -> UqReport:
    doc = _read_json(path)
    try:
        return UqReport.from_dict(doc)
    except KeyError as exc:
        raise SchemaError(f"{path}: missing field {exc}") from exc
