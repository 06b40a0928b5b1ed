"""Mission configs, mission runs, and their artifacts.

A mission file is INI-style: a [mission] section (mode and integration
settings), a [network] section, an [agents] section, and optional
[params] and [maneuvers] sections. Runs write CSV trajectories plus a
report.json into an output directory; a failed run leaves a FAILED
marker file next to whatever partial outputs were flushed.
"""

import configparser
import json
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .consensus import ConsensusTrajectory, consensus_point, integrate_protocol
from .errors import (DimensionError, DomainError, GimbalLockError, IoError,
                     ParseError, SwarmError, ValidationError)
from .network import (DistanceWeighted, Network, StaticWeights, Unweighted,
                      fully_connected_vertices)
from .numerics import sym_eigen
from .planner import ManeuverSpec, chain_schedules, rendezvous_leg, schedule_for
from .quad import (QuadParams, QuadState, QuadTrajectory, default_params,
                   simulate)

_MODES = ("particle", "quad", "compare")

_MISSION_KEYS = {"mode", "T", "dt", "stride", "stop_tol", "out"}
_NETWORK_KEYS = {"n", "edges", "weights", "threshold"}
_PARAM_KEYS = {"m", "J", "Jr_bar", "d", "Kr", "Kd", "CD", "Ctau", "g"}
_SECTIONS = {"mission", "network", "agents", "params", "maneuvers"}


@dataclass(frozen=True)
class MissionConfig:
    """Validated mission description.

    agents is an (n, 6) array: position then (roll, pitch, yaw); files
    may give 3 values per agent, in which case the angles are zero.
    T may be None only for scripted-maneuver missions, which integrate
    for exactly the schedule's duration.
    """

    mode: str
    agents: np.ndarray
    network: Network
    T: float
    dt: float
    stride: int
    stop_tol: float
    params: QuadParams
    out: str
    maneuvers: tuple = None


@dataclass(frozen=True)
class AgentReport:
    """Per-agent outcome. Fields that do not apply to the run mode are
    None and serialize as JSON null."""

    agent: int
    particle_final_error: float = None
    quad_final_error: float = None
    max_cross_track: float = None
    flight_time: float = None
    final_position: tuple = None

    def to_dict(self):
        return {
            "agent": self.agent,
            "particle_final_error": self.particle_final_error,
            "quad_final_error": self.quad_final_error,
            "max_cross_track": self.max_cross_track,
            "flight_time": self.flight_time,
            "final_position": list(self.final_position)
            if self.final_position is not None else None,
        }


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of a mission run.

    rendezvous_point is the agreement point of the initial positions
    (None for scripted-maneuver runs, which have no rendezvous).
    eigenvalues logs (time, sorted Laplacian spectrum) at t=0 and at
    every proximity edge addition.
    """

    mode: str
    rendezvous_point: tuple
    agents: tuple
    eigenvalues: tuple

    def to_dict(self):
        return {
            "mode": self.mode,
            "rendezvous_point": list(self.rendezvous_point)
            if self.rendezvous_point is not None else None,
            "agents": [a.to_dict() for a in self.agents],
            "eigenvalues": [
                {"t": t, "values": list(vals)} for t, vals in self.eigenvalues
            ],
        }


def _floats(text, key):
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as e:
        raise ParseError(f"key '{key}': {e}") from None


def _one_float(cp, section, key, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return float(raw)
    except ValueError:
        raise ParseError(
            f"key '{key}' in [{section}]: not a number: {raw!r}") from None


def _one_int(cp, section, key, default=None):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key)
    try:
        return int(raw)
    except ValueError:
        raise ParseError(
            f"key '{key}' in [{section}]: not an integer: {raw!r}") from None


def _parse_edges(text):
    edges = []
    text = text.strip()
    if not text:
        return edges
    for tok in text.split(","):
        parts = tok.strip().split("-")
        if len(parts) != 2:
            raise ParseError(f"key 'edges': bad edge {tok.strip()!r}, "
                             "expected 'i-j'")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ParseError(
                f"key 'edges': bad edge {tok.strip()!r}") from None
    return edges


def load_config(path):
    """Parse and validate a mission file.

    Raises:
        IoError: unreadable file.
        ParseError: syntax errors, unknown sections or keys, non-numeric
            values (the message names the offending key).
        ValidationError: structurally invalid missions (bad mode,
            nonpositive dt, agent count mismatch, ...).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"cannot read config {path}: {e}") from e

    cp = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ParseError(str(e)) from None

    for section in cp.sections():
        if section not in _SECTIONS:
            raise ParseError(f"unknown section [{section}]")
    for section, allowed in (("mission", _MISSION_KEYS),
                             ("params", _PARAM_KEYS)):
        if cp.has_section(section):
            for key in cp.options(section):
                if key not in allowed:
                    raise ParseError(f"unknown key '{key}' in [{section}]")
    if cp.has_section("network"):
        for key in cp.options("network"):
            if key not in _NETWORK_KEYS and not key.startswith("weight_"):
                raise ParseError(f"unknown key '{key}' in [network]")
    if cp.has_section("agents"):
        for key in cp.options("agents"):
            if not key.startswith("agent"):
                raise ParseError(f"unknown key '{key}' in [agents]")
    if cp.has_section("maneuvers"):
        for key in cp.options("maneuvers"):
            if not key.startswith("leg"):
                raise ParseError(f"unknown key '{key}' in [maneuvers]")

    for required in ("mission", "network", "agents"):
        if not cp.has_section(required):
            raise ValidationError(f"missing [{required}] section")

    mode = cp.get("mission", "mode", fallback=None)
    if mode not in _MODES:
        raise ValidationError(
            f"mode must be one of {', '.join(_MODES)}, got {mode!r}")

    n = _one_int(cp, "network", "n")
    if n is None or n < 1:
        raise ValidationError(f"network needs n >= 1, got {n!r}")

    agents = []
    for i in range(1, n + 1):
        key = f"agent{i}"
        if not cp.has_option("agents", key):
            raise ValidationError(f"missing agent entry '{key}'")
        vals = _floats(cp.get("agents", key), key)
        if len(vals) == 3:
            vals = vals + [0.0, 0.0, 0.0]
        if len(vals) != 6:
            raise ValidationError(
                f"'{key}' needs 3 or 6 numbers, got {len(vals)}")
        agents.append(vals)
    for key in cp.options("agents"):
        idx = key[len("agent"):]
        if not idx.isdigit() or not 1 <= int(idx) <= n:
            raise ParseError(f"unknown key '{key}' in [agents]")
    agents = np.array(agents)

    edges = _parse_edges(cp.get("network", "edges", fallback=""))
    weights = cp.get("network", "weights", fallback="none")
    threshold = _one_float(cp, "network", "threshold", 10.0)
    static_map = {}
    for key in cp.options("network"):
        if key.startswith("weight_"):
            parts = key.split("_")
            if len(parts) != 3 or not (parts[1].isdigit()
                                       and parts[2].isdigit()):
                raise ParseError(f"unknown key '{key}' in [network]")
            i, j = int(parts[1]), int(parts[2])
            static_map[(min(i, j), max(i, j))] = _one_float(
                cp, "network", key)

    if weights == "none":
        policy = Unweighted()
    elif weights == "static":
        policy = StaticWeights(static_map)
    elif weights == "distance":
        policy = DistanceWeighted(threshold)
    elif weights == "initial-distance":
        pos = agents[:, :3]
        auto = {}
        for i, j in edges:
            a, b = min(i, j), max(i, j)
            auto[(a, b)] = float(np.linalg.norm(pos[a - 1] - pos[b - 1]))
        policy = StaticWeights(auto)
    else:
        raise ValidationError(
            f"weights must be none, static, distance or initial-distance, "
            f"got {weights!r}")
    if static_map and weights != "static":
        raise ValidationError(
            "weight_i_j keys are only valid with weights = static")

    try:
        network = Network(n, edges, policy)
    except DomainError as e:
        raise ValidationError(f"bad network: {e}") from e

    maneuvers = None
    if cp.has_section("maneuvers") and cp.options("maneuvers"):
        if mode != "quad":
            raise ValidationError("[maneuvers] requires mode = quad")
        if n != 1:
            raise ValidationError("[maneuvers] requires a single agent")
        legs = []
        for key in sorted(cp.options("maneuvers"),
                          key=lambda k: (len(k), k)):
            vals = cp.get("maneuvers", key).split(",")
            if len(vals) != 3:
                raise ParseError(
                    f"key '{key}': expected 'kind, amount, duration'")
            kind = vals[0].strip()
            if kind not in ("hover", "yaw", "vertical", "bodyX", "bodyY"):
                raise ValidationError(f"'{key}': unknown maneuver {kind!r}")
            try:
                amount, duration = float(vals[1]), float(vals[2])
            except ValueError:
                raise ParseError(f"key '{key}': bad numbers") from None
            if not duration > 0.0:
                raise ValidationError(f"'{key}': duration must be positive")
            legs.append(ManeuverSpec(kind, amount, duration))
        maneuvers = tuple(legs)

    T = _one_float(cp, "mission", "T")
    if T is None and maneuvers is None:
        raise ValidationError("missing T in [mission]")
    if T is not None and not T > 0.0:
        raise ValidationError(f"T must be positive, got {T}")
    dt = _one_float(cp, "mission", "dt", 1e-3)
    if not dt > 0.0:
        raise ValidationError(f"dt must be positive, got {dt}")
    stride = _one_int(cp, "mission", "stride", 10)
    if stride < 1:
        raise ValidationError(f"stride must be >= 1, got {stride}")
    stop_tol = _one_float(cp, "mission", "stop_tol", 1e-4)
    if not stop_tol > 0.0:
        raise ValidationError(f"stop_tol must be positive, got {stop_tol}")
    out = cp.get("mission", "out", fallback=path.stem)

    params = default_params()
    if cp.has_section("params"):
        kw = {}
        for key in cp.options("params"):
            if key in ("J", "CD", "Ctau"):
                vals = _floats(cp.get("params", key), key)
                if len(vals) != 3:
                    raise ValidationError(f"'{key}' needs 3 numbers")
                kw[key] = np.array(vals)
            else:
                kw[key] = _one_float(cp, "params", key)
        try:
            params = replace(params, **kw)
        except DomainError as e:
            raise ValidationError(f"bad params: {e}") from e

    if mode in ("quad", "compare"):
        for i in range(n):
            try:
                QuadState(b=agents[i, :3], angles=agents[i, 3:6],
                          v=np.zeros(3), Omega=np.zeros(3))
            except (DomainError, GimbalLockError) as e:
                raise ValidationError(f"agent{i + 1}: {e}") from e

    return MissionConfig(
        mode=mode, agents=agents, network=network, T=T, dt=dt,
        stride=stride, stop_tol=stop_tol, params=params, out=out,
        maneuvers=maneuvers)


def _fmt(x):
    return format(float(x), ".17g")


def export_csv(traj, path):
    """Write a trajectory as UTF-8 CSV with LF line endings.

    Consensus runs get columns t, x1, y1, z1, x2, ... per agent; quad
    runs get t, b1, b2, b3, phi, theta, psi, v1..v3, O1..O3, w1..w4,
    thrust. Floats are rendered with 17 significant digits, so equal
    runs produce byte-identical files.
    """
    path = Path(path)
    if isinstance(traj, ConsensusTrajectory):
        k, n, r = traj.states.shape
        if r == 3:
            cols = [f"{axis}{i + 1}" for i in range(n) for axis in "xyz"]
        else:
            cols = [f"q{i + 1}c{j + 1}" for i in range(n) for j in range(r)]
        header = "t," + ",".join(cols)
        rows = traj.states.reshape(k, n * r)
        times = traj.times
    elif isinstance(traj, QuadTrajectory):
        header = ("t,b1,b2,b3,phi,theta,psi,"
                  "v1,v2,v3,O1,O2,O3,w1,w2,w3,w4,thrust")
        rows = np.hstack([traj.states, traj.omegas,
                          traj.thrust[:, None]])
        times = traj.times
    else:
        raise DomainError(f"cannot export {type(traj).__name__}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(header + "\n")
            for t, row in zip(times, rows):
                f.write(_fmt(t) + "," + ",".join(_fmt(v) for v in row) + "\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def _max_cross_track(points, a, b):
    """Largest distance from any point to the segment a -> b."""
    d = b - a
    span = float(np.dot(d, d))
    offs = points - a
    if span < 1e-24:
        return float(np.max(np.linalg.norm(offs, axis=1), initial=0.0))
    s = np.clip(offs @ d / span, 0.0, 1.0)
    closest = a + s[:, None] * d
    return float(np.max(np.linalg.norm(points - closest, axis=1),
                        initial=0.0))


def _spectrum_log(laplacian_log):
    out = []
    for t, lap in laplacian_log:
        w, _ = sym_eigen(lap.matrix)
        out.append((float(t), tuple(float(x) for x in w)))
    return tuple(out)


def compare_trajectories(particle, quads):
    """Build the comparison report for one rendezvous.

    Args:
        particle: ConsensusTrajectory of the point-mass protocol.
        quads: list of QuadTrajectory, one per agent, same order.

    Raises:
        DimensionError: if the counts disagree.
    """
    k, n, r = particle.states.shape
    if len(quads) != n:
        raise DimensionError(
            f"{len(quads)} quad runs for {n} agents")
    alpha = consensus_point(particle.states[0])
    agents = []
    for i, run in enumerate(quads):
        endpoint = run.states[-1][:3]
        start = run.states[0][:3]
        agents.append(AgentReport(
            agent=i + 1,
            particle_final_error=float(
                np.linalg.norm(particle.states[-1][i] - alpha)),
            quad_final_error=float(np.linalg.norm(endpoint - alpha)),
            max_cross_track=_max_cross_track(run.states[:, :3], start, alpha),
            flight_time=float(run.times[-1]),
            final_position=tuple(float(x) for x in endpoint),
        ))
    return ComparisonReport(
        mode="compare",
        rendezvous_point=tuple(float(x) for x in alpha),
        agents=tuple(agents),
        eigenvalues=_spectrum_log(particle.laplacian_log),
    )


def _resolve_out(config, out_dir):
    root = out_dir if out_dir is not None else os.environ.get(
        "SWARM_OUT_DIR", ".")
    dest = Path(root) / config.out
    try:
        dest.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IoError(f"cannot create output directory {dest}: {e}") from e
    return dest


def _quad_start(config, i):
    return QuadState(
        b=config.agents[i, :3], angles=config.agents[i, 3:6],
        v=np.zeros(3), Omega=np.zeros(3))


def _run_quads(config, targets, dest):
    runs = []
    for i in range(config.network.n):
        start = _quad_start(config, i)
        sched = rendezvous_leg(config.params, start, targets[i],
                               dt=config.dt)
        run = simulate(start, sched, config.params, sched.total_duration,
                       config.dt, config.stride)
        export_csv(run, dest / f"quad_agent{i + 1}.csv")
        runs.append(run)
    return runs


def run_mission(config, out_dir=None):
    """Execute a mission and write its artifacts.

    Output goes to <root>/<config.out> where root is the out_dir
    argument, else $SWARM_OUT_DIR, else the working directory. On
    failure, whatever artifacts were already produced stay on disk next
    to a FAILED marker holding the error text, and the error re-raises.

    Returns:
        ComparisonReport.
    """
    dest = _resolve_out(config, out_dir)
    try:
        return _run_mission(config, dest)
    except SwarmError as e:
        try:
            (dest / "FAILED").write_text(
                f"{type(e).__name__}: {e}\n", encoding="utf-8")
        except OSError:
            pass
        raise


def _run_mission(config, dest):
    net = config.network
    n = net.n
    positions = config.agents[:, :3]
    alpha = consensus_point(positions)

    if config.mode == "quad" and config.maneuvers:
        parts = [schedule_for(config.params, spec, dt=config.dt)
                 for spec in config.maneuvers]
        sched = chain_schedules(parts)
        start = _quad_start(config, 0)
        run = simulate(start, sched, config.params, sched.total_duration,
                       config.dt, config.stride)
        export_csv(run, dest / "quad_agent1.csv")
        endpoint = run.states[-1][:3]
        report = ComparisonReport(
            mode="quad", rendezvous_point=None,
            agents=(AgentReport(
                agent=1, flight_time=float(run.times[-1]),
                final_position=tuple(float(x) for x in endpoint)),),
            eigenvalues=(),
        )
        _write_report(report, dest)
        return report

    particle = None
    complete = len(fully_connected_vertices(net)) == n
    need_particle = config.mode in ("particle", "compare") or not complete
    if need_particle:
        particle = integrate_protocol(
            net, positions, config.T, config.dt, config.stride,
            config.stop_tol)
    if config.mode in ("particle", "compare"):
        export_csv(particle, dest / "particle.csv")

    if config.mode == "particle":
        agents = tuple(
            AgentReport(
                agent=i + 1,
                particle_final_error=float(
                    np.linalg.norm(particle.states[-1][i] - alpha)),
                final_position=tuple(
                    float(x) for x in particle.states[-1][i]),
            ) for i in range(n))
        report = ComparisonReport(
            mode="particle",
            rendezvous_point=tuple(float(x) for x in alpha),
            agents=agents,
            eigenvalues=_spectrum_log(particle.laplacian_log),
        )
        _write_report(report, dest)
        return report

    # Complete graphs rendezvous exactly at the agreement point; other
    # connected graphs get each drone's own protocol endpoint as its
    # flight target.
    if complete:
        targets = [alpha] * n
    else:
        targets = [particle.states[-1][i] for i in range(n)]
    quads = _run_quads(config, targets, dest)

    if config.mode == "compare":
        report = compare_trajectories(particle, quads)
    else:
        agents = tuple(
            AgentReport(
                agent=i + 1,
                quad_final_error=float(
                    np.linalg.norm(quads[i].states[-1][:3] - alpha)),
                max_cross_track=_max_cross_track(
                    quads[i].states[:, :3], quads[i].states[0][:3], alpha),
                flight_time=float(quads[i].times[-1]),
                final_position=tuple(
                    float(x) for x in quads[i].states[-1][:3]),
            ) for i in range(n))
        report = ComparisonReport(
            mode="quad",
            rendezvous_point=tuple(float(x) for x in alpha),
            agents=agents,
            eigenvalues=(),
        )
    _write_report(report, dest)
    return report


def _write_report(report, dest):
    try:
        with open(dest / "report.json", "w", encoding="utf-8",
                  newline="") as f:
            json.dump(report.to_dict(), f, indent=2)
            f.write("\n")
    except OSError as e:
        raise IoError(f"cannot write report: {e}") from e
