"""Operator-facing surfaces: REPL, scenario runner, figure export, and the
session API used by the browser companion.

The REPL and the API drive the same engine path, so identical phrase
sequences produce identical outcomes either way.
"""

from __future__ import annotations

import json
import threading
import time
import urllib.parse
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

import numpy as np

from .regions import (
    Region, RegionError, evaluate, nodes, region_stats, write_pgm,
)
from .operators import Parametric, Projection
from .lexicon import LexiconStore, load_or_seed
from .comprehension import ComprehensionConfig
from .interpreter import (
    InterpretationOutcome, Session, interpret, reinterpret_window,
)
from .abstraction import FailureCandidate, describe_failure

ASCII_RAMP = " .:-=+*#%@"


@dataclass
class SessionRecord:
    session: Session
    created_at: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


class Engine:
    """Shared store + config; owns all sessions in this process."""

    def __init__(self, store: Optional[LexiconStore] = None,
                 config: Optional[ComprehensionConfig] = None):
        self.store = store if store is not None else load_or_seed()
        self.config = config or ComprehensionConfig()
        self.records: dict[str, SessionRecord] = {}
        self._lock = threading.Lock()

    def new_session(self) -> Session:
        session = Session(self.store, self.config)
        with self._lock:
            self.records[session.id] = SessionRecord(session)
        return session

    def record(self, session_id: str) -> Optional[SessionRecord]:
        return self.records.get(session_id)

    def submit(self, session_id: str, text: str) -> InterpretationOutcome:
        rec = self.records[session_id]
        with rec.lock:
            return interpret(rec.session, text)


# ---------------------------------------------------------------------------
# outcome rendering shared by REPL / scenario / API
# ---------------------------------------------------------------------------

def outcome_to_doc(outcome: InterpretationOutcome) -> dict:
    doc = {
        "action": outcome.action,
        "flags": sorted(outcome.flags),
        "clarification": outcome.clarification,
        "alternatives_kept": outcome.alternatives_kept,
        "version": outcome.version,
        "candidates": [t for t in outcome.trace if "structure" in t],
        "trace": outcome.trace,
    }
    if outcome.chosen is not None:
        chosen = outcome.chosen
        doc["chosen"] = {
            "structure": chosen.candidate.describe() if chosen.candidate else "reset",
            "context": chosen.context_id,
            "score": round(chosen.score, 6),
            "scores": {k: round(v, 6)
                       for k, v in chosen.report.per_check_scores.items()},
        }
        eff = chosen.report.effector
        if eff.kind == "command":
            doc["effector"] = {"kind": "command", "axis": eff.axis,
                               "value": round(eff.value, 6)}
        elif eff.kind == "clarification":
            doc["effector"] = {"kind": "clarification", "axis": eff.axis,
                               "runs": eff.runs}
        else:
            doc["effector"] = {"kind": "none"}
    else:
        doc["chosen"] = None
        doc["effector"] = {"kind": "none"}
    return doc


def outcome_lines(text: str, outcome: InterpretationOutcome) -> list[str]:
    lines = [f"> {text}", f"  action: {outcome.action}"]
    if outcome.chosen is not None:
        chosen = outcome.chosen
        name = chosen.candidate.describe() if chosen.candidate else "reset"
        lines.append(f"  chosen: {name} (score {chosen.score:.3f}, "
                     f"context {chosen.context_id})")
        flags = sorted(outcome.flags)
        if flags:
            lines.append("  flags: " + ", ".join(flags))
        eff = chosen.report.effector
        if eff.kind == "command":
            lines.append(f"  effector: apply {eff.value:.3f} on {eff.axis}")
        elif eff.kind == "clarification":
            lines.append(f"  effector: clarification needed on {eff.axis} "
                         f"({eff.runs} candidate spots)")
        if isinstance(chosen.plan.line[0] if chosen.plan and chosen.plan.line
                      else None, Parametric):
            block = chosen.plan.line[0]
            params = {a: round(_param_echo(block, a), 3)
                      for a in block.internal.axis_ids}
            lines.append(f"  parameters: {params}")
    if outcome.clarification:
        lines.append(f"  clarification: {outcome.clarification}")
    return lines


def _param_echo(block: Parametric, axis: str) -> float:
    from .operators import centroid
    return centroid(block.parameter_region, axis)


def ascii_heatmap(region: Region, width: int = 64) -> list[str]:
    axes = [a for a in region.context.axis_ids if a in region.covered_axes]
    if not axes:
        return ["(unspecified region: membership 1 everywhere)"]
    if len(axes) > 2:
        return [f"(cannot draw {len(axes)}-axis region)"]
    _, vals = evaluate(region, axes=axes,
                       resolutions={a: width for a in axes})
    grid = np.atleast_2d(vals)
    out = []
    for row in grid.T[::-1] if len(axes) == 2 else grid:
        idx = np.minimum((row * len(ASCII_RAMP)).astype(int),
                         len(ASCII_RAMP) - 1)
        out.append("".join(ASCII_RAMP[i] for i in idx))
    return out


# ---------------------------------------------------------------------------
# REPL
# ---------------------------------------------------------------------------

REPL_HELP = """commands:
  :show <context|word>   draw an ASCII heatmap
  :spare                 list spare-context snapshots
  :replay N              reinterpret the last N phrases with a larger buffer
  :save PATH             save session regions + config
  :quit                  leave the loop
anything else is interpreted as a phrase."""


def repl_loop(store: LexiconStore, config: Optional[ComprehensionConfig] = None,
              input_fn=input, print_fn=print) -> Session:
    """Interactive dialog loop; errors are printed, never fatal."""
    engine = Engine(store, config)
    session = engine.new_session()
    print_fn(f"meaningspace repl ({len(store.entries)} words loaded); "
             ":help for commands")
    while True:
        try:
            raw = input_fn("] ")
        except (EOFError, KeyboardInterrupt):
            break
        if raw is None:
            break
        line = raw.strip()
        if not line:
            continue
        if line in (":quit", ":q"):
            break
        try:
            if line == ":help":
                print_fn(REPL_HELP)
            elif line.startswith(":show"):
                _repl_show(session, line[5:].strip(), print_fn)
            elif line == ":spare":
                if not session.state.spare:
                    print_fn("(no spare contexts)")
                for ctx_id, region in session.state.spare:
                    st = region_stats(region)
                    print_fn(f"{ctx_id}: max {st.max_membership:.2f} "
                             f"mean {st.mean_membership:.2f}")
            elif line.startswith(":replay"):
                n = int(line.split()[1])
                out = reinterpret_window(
                    session, session.config.spare_limit + 2, n)
                if out is not None:
                    for msg in outcome_lines(f"(replay {n})", out):
                        print_fn(msg)
            elif line.startswith(":save"):
                path = line[5:].strip() or "session.json"
                save_session(session, path)
                print_fn(f"saved {path}")
            else:
                outcome = interpret(session, line)
                for msg in outcome_lines(line, outcome):
                    print_fn(msg)
                if outcome.action == "clarification_requested":
                    _print_failure_report(session, print_fn)
        except Exception as exc:          # REPL survives everything
            print_fn(f"error: {exc}")
    return session


def _repl_show(session: Session, name: str, print_fn) -> None:
    region = session.region(name)
    if region is None and session.store.entry(name) is not None:
        sense = session.store.lookup(name)[0]
        op = sense.operator
        if isinstance(op, Parametric):
            region = op.parameter_region
        elif isinstance(op, Projection):
            from .regions import Context
            region = Region(
                session.store.context_for(op.target_axes, f"{name}-view"),
                ((op.replacement, 1.0),), name)
    if region is None:
        print_fn(f"nothing to show for {name!r}")
        return
    for row in ascii_heatmap(region):
        print_fn(row)


def _print_failure_report(session: Session, print_fn) -> None:
    outcome = session.last_outcome
    if outcome is None:
        return
    cands = []
    for t in outcome.trace:
        if t.get("stage") != "current" or "flags" not in t:
            continue
        failing = sorted(t["flags"])
        if not failing:
            continue
        ctx_id = t.get("context")
        region = session.region(ctx_id) if ctx_id else None
        if region is None:
            continue
        cands.append(FailureCandidate(
            label=t["structure"], failing_check=failing[0],
            passing_region=session.active_region(), failing_region=region))
    for entry in describe_failure(cands, session.store):
        print_fn(f"  {entry['candidate']}: fails {entry['failing_check']}; "
                 f"so far I understood "
                 f"{' '.join(entry['passing_description'])}; the failing "
                 f"part reads like {' '.join(entry['failing_description'])}")


def save_session(session: Session, path: str) -> None:
    from .regions import region_to_doc
    doc = {
        "id": session.id,
        "version": session.version,
        "config": session.config.to_doc(),
        "active": session.state.active,
        "history": [{"phrase": p, **d} for p, d in session.history],
        "regions": {cid: region_to_doc(r)
                    for cid, r in session.state.regions.items()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_session_doc(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# scenario runner
# ---------------------------------------------------------------------------

def run_scenario(path: str, store: Optional[LexiconStore] = None,
                 print_fn=print) -> int:
    """Replay a scenario file; exit status 0 iff every expectation holds.

    Scenario document: {"config": {...}?, "phrases": [{"text": ...,
    "expect": {"action": ..., "flags": [...], "flags_absent": [...],
    "effector": "command"|"clarification"|"none"}?}, ...]}
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        print_fn(f"scenario parse error at line {exc.lineno}: {exc.msg}")
        return 2
    store = store if store is not None else load_or_seed()
    config = ComprehensionConfig.from_doc(doc.get("config", {}))
    session = Session(store, config)
    failures = 0
    for i, step in enumerate(doc.get("phrases", [])):
        text = step.get("text")
        if text is None:
            print_fn(f"step {i:02d}: missing 'text'")
            failures += 1
            continue
        outcome = interpret(session, text)
        flags = sorted(outcome.flags)
        eff = outcome.effector.kind if outcome.effector else "none"
        line = (f"step {i:02d} {text!r}: action={outcome.action} "
                f"flags={','.join(flags) or '-'} effector={eff}")
        problems = _check_expectations(step.get("expect") or {}, outcome)
        if problems:
            failures += 1
            print_fn(line + "  MISMATCH")
            for p in problems:
                print_fn(f"    expected {p}")
        else:
            print_fn(line + "  ok")
    print_fn(f"{failures} mismatching step(s)")
    return 0 if failures == 0 else 1


def _check_expectations(expect: dict, outcome: InterpretationOutcome) -> list:
    problems = []
    if "action" in expect and outcome.action != expect["action"]:
        problems.append(f"action={expect['action']!r}, got {outcome.action!r}")
    for flag in expect.get("flags", []):
        if flag not in outcome.flags:
            problems.append(f"flag {flag!r} present, got {sorted(outcome.flags)}")
    for flag in expect.get("flags_absent", []):
        if flag in outcome.flags:
            problems.append(f"flag {flag!r} absent, got {sorted(outcome.flags)}")
    if "effector" in expect:
        kind = outcome.effector.kind if outcome.effector else "none"
        if kind != expect["effector"]:
            problems.append(f"effector={expect['effector']!r}, got {kind!r}")
    if "clarification" in expect:
        has = outcome.clarification is not None
        if has != bool(expect["clarification"]):
            problems.append(f"clarification={expect['clarification']}, got {has}")
    return problems


# ---------------------------------------------------------------------------
# figure export
# ---------------------------------------------------------------------------

def export_figure(target: str, path: str,
                  store: Optional[LexiconStore] = None) -> dict:
    """Export a word's region or a derived axis's reference as a P2 graymap
    plus a JSON sidecar with axes and statistics."""
    store = store if store is not None else load_or_seed()
    region = _resolve_target(target, store)
    axes = [a for a in region.context.axis_ids if a in region.covered_axes]
    if len(axes) > 2:
        raise RegionError(f"{target!r} spans {len(axes)} axes; graymap "
                          "export is limited to 1D/2D")
    _, vals = evaluate(region, axes=axes)
    write_pgm(vals, path, comment=f"meaningspace {target}")
    st = region_stats(region)
    sidecar = {
        "target": target,
        "axes": axes,
        "resolution": list(np.atleast_2d(vals).shape),
        "max_membership": st.max_membership,
        "mean_membership": st.mean_membership,
        "coverage_0.5": st.coverage,
    }
    with open(path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=1)
    return sidecar


def _resolve_target(target: str, store: LexiconStore) -> Region:
    if target.startswith("axis:"):
        axis = store.axis(target[5:])
        if axis.reference is None:
            raise RegionError(f"axis {axis.id!r} has no reference region")
        return axis.reference
    name = target[5:] if target.startswith("word:") else target
    entry = store.entry(name)
    if entry is not None:
        op = entry.senses[0].operator
        if isinstance(op, Parametric):
            return op.parameter_region
        if isinstance(op, Projection):
            return Region(store.context_for(op.target_axes, f"{name}-view"),
                          ((op.replacement, 1.0),), name)
        raise RegionError(f"{name!r} has no drawable region")
    if name in store.axes:
        return _resolve_target(f"axis:{name}", store)
    raise RegionError(f"unknown export target {target!r}")


# ---------------------------------------------------------------------------
# session API (plain HTTP with JSON bodies)
# ---------------------------------------------------------------------------

class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(message)


def heatmap_doc(session: Session, ctx_id: str, axes=None) -> dict:
    region = session.region(ctx_id)
    if region is None:
        raise ApiError(404, f"unknown context {ctx_id!r}")
    covered = [a for a in region.context.axis_ids if a in region.covered_axes]
    if axes:
        covered = [a for a in covered if a in axes]
    if len(covered) > 2:
        covered = covered[:2]
    if not covered:
        return {"context": ctx_id, "axes": [], "matrix": [[1.0]],
                "version": session.version, "unspecified": True}
    _, vals = evaluate(region, axes=covered,
                       resolutions={a: 64 for a in covered})
    matrix = np.atleast_2d(vals)
    return {
        "context": ctx_id,
        "axes": [{"id": a, "name": region.context.axis(a).name or a}
                 for a in covered],
        "matrix": [[float(v) for v in row] for row in matrix],
        "version": session.version,
    }


class _Handler(BaseHTTPRequestHandler):
    engine: Engine = None

    def log_message(self, *args):           # silent server
        pass

    def _send(self, status: int, doc: dict):
        body = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods",
                         "GET, POST, PUT, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            return json.loads(self.rfile.read(length))
        except json.JSONDecodeError as exc:
            raise ApiError(400, f"malformed JSON body at offset {exc.pos}")

    def _session(self, session_id: str) -> SessionRecord:
        rec = self.engine.record(session_id)
        if rec is None:
            raise ApiError(404, f"unknown session {session_id!r}")
        return rec

    def do_OPTIONS(self):
        self._send(204, {})

    def do_POST(self):
        try:
            parts = [urllib.parse.unquote(p)
                     for p in self.path.split("?")[0].split("/") if p]
            if parts == ["sessions"]:
                session = self.engine.new_session()
                self._send(201, {"session_id": session.id,
                                 "version": session.version})
            elif len(parts) == 3 and parts[0] == "sessions" \
                    and parts[2] == "phrases":
                rec = self._session(parts[1])
                body = self._body()
                if "text" not in body:
                    raise ApiError(400, "body.text: missing phrase text")
                outcome = self.engine.submit(parts[1], body["text"])
                doc = outcome_to_doc(outcome)
                doc["session_id"] = parts[1]
                self._send(200, doc)
            elif len(parts) == 3 and parts[0] == "sessions" \
                    and parts[2] == "replay":
                rec = self._session(parts[1])
                body = self._body()
                with rec.lock:
                    out = reinterpret_window(
                        rec.session, int(body.get("spare_limit", 4)),
                        int(body.get("window", 1)))
                self._send(200, outcome_to_doc(out) if out else {})
            else:
                raise ApiError(404, f"no such endpoint {self.path!r}")
        except ApiError as exc:
            self._send(exc.status, {"error": exc.message})
        except Exception as exc:
            self._send(500, {"error": str(exc)})

    def do_GET(self):
        try:
            path, _, query = self.path.partition("?")
            parts = [urllib.parse.unquote(p) for p in path.split("/") if p]
            if len(parts) == 2 and parts[0] == "sessions":
                rec = self._session(parts[1])
                s = rec.session
                self._send(200, {
                    "session_id": s.id,
                    "version": s.version,
                    "active_context": s.state.active,
                    "contexts": sorted(s.state.regions),
                    "history": [{"phrase": p, **d} for p, d in s.history],
                })
            elif len(parts) == 4 and parts[0] == "sessions" \
                    and parts[2] == "heatmap":
                rec = self._session(parts[1])
                axes = None
                for kv in query.split("&"):
                    if kv.startswith("axes="):
                        axes = kv[5:].split(",")
                self._send(200, heatmap_doc(rec.session, parts[3], axes))
            elif len(parts) == 3 and parts[0] == "sessions" \
                    and parts[2] == "trace":
                rec = self._session(parts[1])
                out = rec.session.last_outcome
                self._send(200, {"trace": out.trace if out else [],
                                 "version": rec.session.version})
            elif len(parts) == 3 and parts[0] == "sessions" \
                    and parts[2] == "config":
                rec = self._session(parts[1])
                self._send(200, rec.session.config.to_doc())
            else:
                raise ApiError(404, f"no such endpoint {self.path!r}")
        except ApiError as exc:
            self._send(exc.status, {"error": exc.message})
        except Exception as exc:
            self._send(500, {"error": str(exc)})

    def do_PUT(self):
        try:
            parts = [urllib.parse.unquote(p)
                     for p in self.path.split("?")[0].split("/") if p]
            if len(parts) == 3 and parts[0] == "sessions" \
                    and parts[2] == "config":
                rec = self._session(parts[1])
                body = self._body()
                bad = [k for k in body
                       if k not in ComprehensionConfig.__dataclass_fields__]
                if bad:
                    raise ApiError(400, f"config.{bad[0]}: unknown field")
                merged = {**rec.session.config.to_doc(), **body}
                with rec.lock:
                    rec.session.config = ComprehensionConfig.from_doc(merged)
                self._send(200, rec.session.config.to_doc())
            else:
                raise ApiError(404, f"no such endpoint {self.path!r}")
        except ApiError as exc:
            self._send(exc.status, {"error": exc.message})
        except Exception as exc:
            self._send(500, {"error": str(exc)})


def serve(bind: str = "127.0.0.1:8377", engine: Optional[Engine] = None,
          block: bool = True) -> ThreadingHTTPServer:
    """Serve the session API over a local socket."""
    host, _, port = bind.partition(":")
    engine = engine or Engine()
    handler = type("BoundHandler", (_Handler,), {"engine": engine})
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port or 8377)),
                                 handler)
    if block:
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
    return server
