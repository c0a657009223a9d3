"""Scenario definition language: parsing, validation, canonical text output.

A scenario bundles everything one experiment needs: the hierarchical state
machines the robot runs, the grid world it moves in, its energy profile, and
seed weights for the choice nodes. The format is line oriented; `#` starts a
comment and sections open with a bracketed header:

    [machine top entry]
    initial -> seek_charge_source
    state seek_charge_source -> seek on power_low, seek on auto if powerLow
    choice seek : find_wireless_power | find_station
    submachine find_station = find_charging_station -> recharge on located, seek_charge_source on lost_signal_track
    state recharge -> final on waitTimer_expired
    exit located (success)
    final Final

    [world]
    grid = 24 16

    [weights]
    seek.find_wireless_power = 0.8 0.2

Numbers are plain decimals with at most nine fractional digits and no
exponent form, so canonical text round-trips exactly. `auto` is the reserved
completion trigger; guards come from the fixed built-in registry.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .energy import DischargeProfile, EnergyProfile, Thresholds
from .world import BeaconSpec, StationSpec, WorldMap

RESERVED_EVENT = "auto"
TARGET_FINAL = "final"
EXIT_PREFIX = "exit."

GUARD_NAMES = ("isSignalSufficient", "batteryFull", "powerLow", "powerLower")

KIND_SIMPLE = "simple"
KIND_COMPOSITE = "composite"
KIND_CHOICE = "choice"
KIND_FINAL = "final"

TAG_SUCCESS = "success"
TAG_FAILURE = "failure"

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER_RE = re.compile(r"-?\d+(?:\.(\d+))?$")

_RESERVED_WORDS = frozenset(
    {
        "initial", "state", "submachine", "choice", "exit", "final",
        "on", "if", "entry", "machine", "world", "energy", "weights",
        "success", "failure",
    }
)

_WORLD_KEYS = (
    "grid", "robot.start",
    "station.pos", "station.ir_radius", "station.charge_rate", "station.track",
    "track.gap",
    "beacon.pos", "beacon.tx_power", "beacon.d0", "beacon.resonance_radius",
    "beacon.poll_radius", "beacon.i_min",
)

_ENERGY_KEYS = (
    "battery_capacity", "capacitor_capacity",
    "battery_initial", "capacitor_initial",
    "rate.idle", "rate.move", "rate.sense", "rate.process",
    "threshold.low", "threshold.lower",
    "gain_min", "max_charge_ticks",
)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


def _error(line: int, message: str, column: int = 1) -> Diagnostic:
    return Diagnostic("error", line, column, message)


def _warning(line: int, message: str, column: int = 1) -> Diagnostic:
    return Diagnostic("warning", line, column, message)


class ScenarioError(Exception):
    """Parse or validation failure; carries the sorted diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        summary = "; ".join(str(d) for d in self.diagnostics[:5])
        if len(self.diagnostics) > 5:
            summary += f"; ... {len(self.diagnostics) - 5} more"
        super().__init__(summary)


@dataclass
class TransitionDef:
    event: str
    target: str  # state name, "exit.NAME", or "final"
    guard: str | None = None
    line: int = field(default=0, compare=False)


@dataclass
class StateDef:
    name: str
    kind: str = KIND_SIMPLE
    machine: str | None = None  # composite only
    options: tuple[str, ...] = ()  # choice only
    transitions: tuple[TransitionDef, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class MachineDef:
    name: str
    initial: str
    states: tuple[StateDef, ...] = ()
    exits: tuple[tuple[str, str], ...] = ()  # (exit name, success|failure)
    is_entry: bool = False
    line: int = field(default=0, compare=False)

    def state(self, name: str) -> StateDef | None:
        for st in self.states:
            if st.name == name:
                return st
        return None

    def exit_tag(self, name: str) -> str | None:
        for exit_name, tag in self.exits:
            if exit_name == name:
                return tag
        return None

    def final_state_names(self) -> list[str]:
        return [st.name for st in self.states if st.kind == KIND_FINAL]


@dataclass
class ScenarioDef:
    machines: tuple[MachineDef, ...]
    world: WorldMap
    energy_profile: EnergyProfile
    seed_weights: dict[tuple[str, str], tuple[float, float]]
    name: str = field(default="scenario", compare=False)

    def machine(self, name: str) -> MachineDef | None:
        for m in self.machines:
            if m.name == name:
                return m
        return None

    def entry_machine(self) -> MachineDef:
        for m in self.machines:
            if m.is_entry:
                return m
        raise ValueError("no entry machine declared")

    def event_vocabulary(self) -> frozenset[str]:
        events: set[str] = set()
        for m in self.machines:
            for st in m.states:
                for tr in st.transitions:
                    if tr.event != RESERVED_EVENT:
                        events.add(tr.event)
        return frozenset(events)


# ---------------------------------------------------------------------------
# parsing


def _strip_comment(line: str) -> str:
    idx = line.find("#")
    return line if idx < 0 else line[:idx]


def _parse_number(token: str, lineno: int, diags: list[Diagnostic]) -> float | None:
    m = _NUMBER_RE.match(token)
    if m is None:
        diags.append(_error(lineno, f"bad number {token!r}"))
        return None
    frac = m.group(1)
    if frac is not None and len(frac) > 9:
        diags.append(_error(lineno, f"more than 9 fractional digits in {token!r}"))
        return None
    return float(token)


def _check_ident(token: str, lineno: int, diags: list[Diagnostic]) -> bool:
    if not _IDENT_RE.match(token):
        diags.append(_error(lineno, f"bad identifier {token!r}"))
        return False
    if token in _RESERVED_WORDS:
        diags.append(_error(lineno, f"reserved word {token!r} used as a name"))
        return False
    return True


_ARM_RE = re.compile(
    r"^(?P<target>exit\.[A-Za-z_][A-Za-z0-9_]*|[A-Za-z_][A-Za-z0-9_]*)"
    r"\s+on\s+(?P<event>[A-Za-z_][A-Za-z0-9_]*)"
    r"(?:\s+if\s+(?P<guard>[A-Za-z_][A-Za-z0-9_]*))?$"
)


def _parse_arms(text: str, lineno: int, diags: list[Diagnostic]) -> tuple[TransitionDef, ...]:
    arms: list[TransitionDef] = []
    for part in text.split(","):
        part = part.strip()
        m = _ARM_RE.match(part)
        if m is None:
            diags.append(_error(lineno, f"bad transition arm {part!r}"))
            continue
        target = m.group("target")
        if target != TARGET_FINAL and not target.startswith(EXIT_PREFIX):
            if not _check_ident(target, lineno, diags):
                continue
        event = m.group("event")
        guard = m.group("guard")
        if event != RESERVED_EVENT and not _check_ident(event, lineno, diags):
            continue
        if guard is not None and not _check_ident(guard, lineno, diags):
            continue
        arms.append(TransitionDef(event=event, target=target, guard=guard, line=lineno))
    return tuple(arms)


class _MachineBuilder:
    def __init__(self, name: str, is_entry: bool, line: int):
        self.name = name
        self.is_entry = is_entry
        self.line = line
        self.initial: str | None = None
        self.states: list[StateDef] = []
        self.exits: list[tuple[str, str]] = []

    def build(self, diags: list[Diagnostic]) -> MachineDef | None:
        if self.initial is None:
            diags.append(_error(self.line, f"machine '{self.name}' has no initial"))
            return None
        return MachineDef(
            name=self.name,
            initial=self.initial,
            states=tuple(self.states),
            exits=tuple(self.exits),
            is_entry=self.is_entry,
            line=self.line,
        )


_HEADER_MACHINE_RE = re.compile(
    r"^\[\s*machine\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?P<entry>\s+entry)?\s*\]$"
)
_HEADER_PLAIN_RE = re.compile(r"^\[\s*(?P<name>world|energy|weights)\s*\]$")
_EXIT_RE = re.compile(
    r"^exit\s+(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\(\s*(?P<tag>success|failure)\s*\)$"
)
_KV_RE = re.compile(
    r"^(?P<key>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)\s*=\s*(?P<values>.+)$"
)
_WLINE_RE = re.compile(
    r"^(?P<node>[A-Za-z_][A-Za-z0-9_]*)\.(?P<option>[A-Za-z_][A-Za-z0-9_]*)"
    r"\s*=\s*(?P<values>.+)$"
)


def parse_scenario(text: str, name: str = "scenario") -> ScenarioDef:
    """Parse and validate DSL source; raises ScenarioError on any error."""
    scenario, diagnostics = parse_scenario_checked(text, name=name)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors or scenario is None:
        raise ScenarioError(errors or diagnostics)
    return scenario


def parse_scenario_checked(
    text: str, name: str = "scenario"
) -> tuple[ScenarioDef | None, list[Diagnostic]]:
    """Parse DSL source, returning the scenario (if buildable) and all diagnostics."""
    diags: list[Diagnostic] = []
    machines: list[_MachineBuilder] = []
    world_kv: dict[str, tuple[list[float], int]] = {}
    energy_kv: dict[str, tuple[list[float], int]] = {}
    weights: dict[tuple[str, str], tuple[float, float]] = {}
    weight_lines: dict[tuple[str, str], int] = {}
    section: str | None = None  # "machine" | "world" | "energy" | "weights"
    current: _MachineBuilder | None = None
    seen_sections: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue

        if line.startswith("["):
            m = _HEADER_MACHINE_RE.match(line)
            if m:
                mname = m.group("name")
                if _check_ident(mname, lineno, diags):
                    current = _MachineBuilder(mname, m.group("entry") is not None, lineno)
                    machines.append(current)
                    section = "machine"
                else:
                    current = None
                    section = None
                continue
            m = _HEADER_PLAIN_RE.match(line)
            if m:
                section = m.group("name")
                if section in seen_sections:
                    diags.append(_error(lineno, f"duplicate [{section}] section"))
                seen_sections.add(section)
                current = None
                continue
            diags.append(_error(lineno, f"bad section header {line!r}"))
            section = None
            current = None
            continue

        if section is None:
            diags.append(_error(lineno, "statement outside any section"))
            continue

        if section == "machine":
            _parse_machine_stmt(line, lineno, current, diags)
        elif section in ("world", "energy"):
            m = _KV_RE.match(line)
            if m is None:
                diags.append(_error(lineno, f"bad key/value line {line!r}"))
                continue
            key = m.group("key")
            values: list[float] = []
            ok = True
            for tok in m.group("values").split():
                v = _parse_number(tok, lineno, diags)
                if v is None:
                    ok = False
                    break
                values.append(v)
            if not ok:
                continue
            store = world_kv if section == "world" else energy_kv
            known = _WORLD_KEYS if section == "world" else _ENERGY_KEYS
            if key not in known:
                diags.append(_error(lineno, f"unknown {section} key {key!r}"))
                continue
            if key in store:
                diags.append(_error(lineno, f"duplicate key {key!r}"))
                continue
            store[key] = (values, lineno)
        elif section == "weights":
            m = _WLINE_RE.match(line)
            if m is None:
                diags.append(_error(lineno, f"bad weight line {line!r}"))
                continue
            toks = m.group("values").split()
            if len(toks) != 2:
                diags.append(_error(lineno, "weight line needs exactly two numbers"))
                continue
            pair = [_parse_number(t, lineno, diags) for t in toks]
            if None in pair:
                continue
            node, option = m.group("node"), m.group("option")
            key = (node, option)
            if key in weights:
                diags.append(_error(lineno, f"duplicate weight entry {node}.{option}"))
                continue
            weights[key] = (pair[0], pair[1])
            weight_lines[key] = lineno

    built = [b.build(diags) for b in machines]
    machine_defs = tuple(m for m in built if m is not None)
    world, world_ok = _build_world(world_kv, diags)
    energy, energy_ok = _build_energy(energy_kv, diags)

    if any(m is None for m in built) or not world_ok or not energy_ok:
        return None, _sorted(diags)

    scenario = ScenarioDef(
        machines=machine_defs,
        world=world,
        energy_profile=energy,
        seed_weights=weights,
        name=name,
    )
    diags.extend(_validate(scenario, weight_lines))
    return scenario, _sorted(diags)


def _parse_machine_stmt(
    line: str, lineno: int, builder: _MachineBuilder | None, diags: list[Diagnostic]
) -> None:
    if builder is None:
        return
    word, _, rest = line.partition(" ")
    rest = rest.strip()

    if word == "initial":
        m = re.match(r"^->\s*([A-Za-z_][A-Za-z0-9_]*)$", rest)
        if m is None:
            diags.append(_error(lineno, f"bad initial statement {line!r}"))
            return
        if builder.initial is not None:
            diags.append(_error(lineno, f"machine '{builder.name}' has multiple initials"))
            return
        if _check_ident(m.group(1), lineno, diags):
            builder.initial = m.group(1)
        return

    if word == "state":
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:->\s*(.+))?$", rest)
        if m is None or not rest:
            diags.append(_error(lineno, f"bad state statement {line!r}"))
            return
        name = m.group(1)
        if not _check_ident(name, lineno, diags):
            return
        arms = _parse_arms(m.group(2), lineno, diags) if m.group(2) else ()
        builder.states.append(StateDef(name=name, transitions=arms, line=lineno))
        return

    if word == "submachine":
        m = re.match(
            r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([A-Za-z_][A-Za-z0-9_]*)\s*->\s*(.+)$",
            rest,
        )
        if m is None:
            diags.append(_error(lineno, f"bad submachine statement {line!r}"))
            return
        name, ref = m.group(1), m.group(2)
        if not (_check_ident(name, lineno, diags) and _check_ident(ref, lineno, diags)):
            return
        arms = _parse_arms(m.group(3), lineno, diags)
        builder.states.append(
            StateDef(name=name, kind=KIND_COMPOSITE, machine=ref, transitions=arms, line=lineno)
        )
        return

    if word == "choice":
        m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.+)$", rest)
        if m is None:
            diags.append(_error(lineno, f"bad choice statement {line!r}"))
            return
        name = m.group(1)
        if not _check_ident(name, lineno, diags):
            return
        options = [o.strip() for o in m.group(2).split("|")]
        if any(not _check_ident(o, lineno, diags) for o in options):
            return
        builder.states.append(
            StateDef(name=name, kind=KIND_CHOICE, options=tuple(options), line=lineno)
        )
        return

    if word == "exit":
        m = _EXIT_RE.match(line)
        if m is None:
            diags.append(_error(lineno, f"bad exit statement {line!r}"))
            return
        if _check_ident(m.group("name"), lineno, diags):
            builder.exits.append((m.group("name"), m.group("tag")))
        return

    if word == "final":
        m = re.match(r"^([A-Za-z][A-Za-z0-9_]*)$", rest)
        if m is None:
            diags.append(_error(lineno, f"bad final statement {line!r}"))
            return
        name = m.group(1)
        if name in _RESERVED_WORDS:
            diags.append(_error(lineno, f"reserved word {name!r} used as a name"))
            return
        builder.states.append(StateDef(name=name, kind=KIND_FINAL, line=lineno))
        return

    diags.append(_error(lineno, f"unknown statement {word!r}"))


def _as_cell(values: list[float], lineno: int, key: str, diags: list[Diagnostic]) -> tuple[int, int] | None:
    if len(values) != 2 or any(v != int(v) for v in values):
        diags.append(_error(lineno, f"{key} needs two integer coordinates"))
        return None
    return (int(values[0]), int(values[1]))


def _as_scalar(values: list[float], lineno: int, key: str, diags: list[Diagnostic]) -> float | None:
    if len(values) != 1:
        diags.append(_error(lineno, f"{key} needs exactly one number"))
        return None
    return values[0]


def _as_cells(values: list[float], lineno: int, key: str, diags: list[Diagnostic]) -> tuple | None:
    if not values or len(values) % 2 != 0 or any(v != int(v) for v in values):
        diags.append(_error(lineno, f"{key} needs an even list of integer coordinates"))
        return None
    it = iter(int(v) for v in values)
    return tuple(zip(it, it))


def _build_world(
    kv: dict[str, tuple[list[float], int]], diags: list[Diagnostic]
) -> tuple[WorldMap | None, bool]:
    if not kv:
        return WorldMap(width=8, height=8), True

    before = len(diags)

    def take(key):
        return kv.get(key)

    grid = take("grid")
    if grid is None:
        line = min(line for _, line in kv.values())
        diags.append(_error(line, "world section is missing 'grid'"))
        return None, False
    cell = _as_cell(grid[0], grid[1], "grid", diags)
    if cell is None:
        return None, False
    width, height = cell
    if width <= 0 or height <= 0:
        diags.append(_error(grid[1], "grid dimensions must be positive"))
        return None, False

    robot_start = (0, 0)
    if take("robot.start"):
        values, line = kv["robot.start"]
        cell = _as_cell(values, line, "robot.start", diags)
        if cell is not None:
            robot_start = cell

    station = None
    station_keys = [k for k in kv if k.startswith("station.") or k == "track.gap"]
    if station_keys:
        if "station.pos" not in kv:
            diags.append(
                _error(kv[station_keys[0]][1], "station keys given without station.pos")
            )
        else:
            values, line = kv["station.pos"]
            pos = _as_cell(values, line, "station.pos", diags)
            ir_radius = 8.0
            charge_rate = 5.0
            track: tuple = ()
            gaps: frozenset = frozenset()
            if take("station.ir_radius"):
                v = _as_scalar(*kv["station.ir_radius"], "station.ir_radius", diags)
                if v is not None:
                    ir_radius = v
            if take("station.charge_rate"):
                v = _as_scalar(*kv["station.charge_rate"], "station.charge_rate", diags)
                if v is not None:
                    charge_rate = v
            if take("station.track"):
                cells = _as_cells(*kv["station.track"], "station.track", diags)
                if cells is not None:
                    track = cells
            if take("track.gap"):
                cells = _as_cells(*kv["track.gap"], "track.gap", diags)
                if cells is not None:
                    gaps = frozenset(cells)
            if pos is not None:
                station = StationSpec(
                    pos=pos,
                    ir_radius=ir_radius,
                    track=track,
                    charge_rate=charge_rate,
                    gaps=gaps,
                )

    beacon = None
    beacon_keys = [k for k in kv if k.startswith("beacon.")]
    if beacon_keys:
        if "beacon.pos" not in kv:
            diags.append(
                _error(kv[beacon_keys[0]][1], "beacon keys given without beacon.pos")
            )
        else:
            values, line = kv["beacon.pos"]
            pos = _as_cell(values, line, "beacon.pos", diags)
            params = {}
            for key, attr in (
                ("beacon.tx_power", "tx_power"),
                ("beacon.d0", "d0"),
                ("beacon.resonance_radius", "resonance_radius"),
                ("beacon.poll_radius", "poll_radius"),
                ("beacon.i_min", "i_min"),
            ):
                if take(key):
                    v = _as_scalar(*kv[key], key, diags)
                    if v is not None:
                        params[attr] = v
            if pos is not None:
                beacon = BeaconSpec(pos=pos, **params)

    if len(diags) > before:
        return None, False
    return (
        WorldMap(
            width=width, height=height, robot_start=robot_start,
            station=station, beacon=beacon,
        ),
        True,
    )


def _build_energy(
    kv: dict[str, tuple[list[float], int]], diags: list[Diagnostic]
) -> tuple[EnergyProfile | None, bool]:
    before = len(diags)
    scalars: dict[str, float] = {}
    for key, (values, line) in kv.items():
        v = _as_scalar(values, line, key, diags)
        if v is not None:
            scalars[key] = v
    if len(diags) > before:
        return None, False

    first_line = min((line for _, line in kv.values()), default=1)
    kwargs: dict = {}
    if "battery_capacity" in scalars:
        kwargs["battery_capacity"] = scalars["battery_capacity"]
    if "capacitor_capacity" in scalars:
        kwargs["capacitor_capacity"] = scalars["capacitor_capacity"]
    if "battery_initial" in scalars:
        kwargs["battery_initial"] = scalars["battery_initial"]
    if "capacitor_initial" in scalars:
        kwargs["capacitor_initial"] = scalars["capacitor_initial"]
    if "gain_min" in scalars:
        kwargs["gain_min"] = scalars["gain_min"]
    if "max_charge_ticks" in scalars:
        v = scalars["max_charge_ticks"]
        if v != int(v) or v < 0:
            diags.append(_error(kv["max_charge_ticks"][1], "max_charge_ticks must be a non-negative integer"))
            return None, False
        kwargs["max_charge_ticks"] = int(v)

    rate_kwargs = {}
    for key, attr in (
        ("rate.idle", "idle"), ("rate.move", "move"),
        ("rate.sense", "sense"), ("rate.process", "process"),
    ):
        if key in scalars:
            if scalars[key] < 0:
                diags.append(_error(kv[key][1], f"{key} must be non-negative"))
                return None, False
            rate_kwargs[attr] = scalars[key]
    kwargs["rates"] = DischargeProfile(**rate_kwargs)

    th_kwargs = {}
    if "threshold.low" in scalars:
        th_kwargs["low_frac"] = scalars["threshold.low"]
    if "threshold.lower" in scalars:
        th_kwargs["lower_frac"] = scalars["threshold.lower"]
    try:
        kwargs["thresholds"] = Thresholds(**th_kwargs)
        profile = EnergyProfile(**kwargs)
    except ValueError as exc:
        diags.append(_error(first_line, str(exc)))
        return None, False
    return profile, True


def _sorted(diags: list[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=lambda d: (d.line, d.column, d.severity, d.message))


# ---------------------------------------------------------------------------
# validation


def validate_scenario(scenario: ScenarioDef) -> list[Diagnostic]:
    """Structural checks; an empty list means the scenario is sound."""
    return _sorted(_validate(scenario, {}))


def _validate(
    scenario: ScenarioDef, weight_lines: dict[tuple[str, str], int]
) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    machines = scenario.machines

    entries = [m for m in machines if m.is_entry]
    if not entries:
        diags.append(_error(1, "no entry machine declared"))
    elif len(entries) > 1:
        for m in entries[1:]:
            diags.append(_error(m.line, f"multiple entry machines: '{m.name}'"))

    seen: dict[str, int] = {}
    for m in machines:
        if m.name in seen:
            diags.append(_error(m.line, f"duplicate machine name '{m.name}'"))
        seen[m.name] = m.line

    by_name = {m.name: m for m in machines}
    referenced: set[str] = set()

    for m in machines:
        state_names: dict[str, int] = {}
        for st in m.states:
            if st.name in state_names:
                diags.append(_error(st.line, f"duplicate state name '{st.name}'"))
            state_names[st.name] = st.line
        exit_names: dict[str, int] = {}
        for exit_name, _tag in m.exits:
            if exit_name in exit_names:
                diags.append(_error(m.line, f"duplicate exit name '{exit_name}'"))
            if exit_name in state_names:
                diags.append(_error(m.line, f"exit '{exit_name}' clashes with a state name"))
            exit_names[exit_name] = m.line

        finals = m.final_state_names()
        if m.state(m.initial) is None:
            diags.append(_error(m.line, f"unresolved reference '{m.initial}'"))

        for st in m.states:
            if st.kind == KIND_CHOICE:
                if len(st.options) < 2:
                    diags.append(_error(st.line, "choice requires >=2 options"))
                dup = {o for o in st.options if st.options.count(o) > 1}
                for o in sorted(dup):
                    diags.append(_error(st.line, f"duplicate choice option '{o}'"))
                for o in st.options:
                    if o not in state_names:
                        diags.append(_error(st.line, f"unresolved reference '{o}'"))
            if st.kind == KIND_COMPOSITE:
                referenced.add(st.machine)
                inner = by_name.get(st.machine)
                if inner is None:
                    diags.append(_error(st.line, f"unresolved reference '{st.machine}'"))
                else:
                    handled = {tr.event for tr in st.transitions}
                    unconditional = {tr.event for tr in st.transitions if tr.guard is None}
                    inner_exits = {name for name, _ in inner.exits}
                    for tr in st.transitions:
                        if tr.event not in inner_exits:
                            diags.append(
                                _error(
                                    tr.line,
                                    f"arm event '{tr.event}' is not an exit of machine '{inner.name}'",
                                )
                            )
                    for exit_name in sorted(inner_exits - handled):
                        diags.append(
                            _error(
                                st.line,
                                f"exit '{exit_name}' of machine '{inner.name}' is not handled",
                            )
                        )
                    for exit_name in sorted((inner_exits & handled) - unconditional):
                        diags.append(
                            _warning(
                                st.line,
                                f"exit '{exit_name}' of machine '{inner.name}' is handled only conditionally",
                            )
                        )
                    if not inner.exits:
                        diags.append(
                            _error(st.line, f"machine '{inner.name}' is used as a sub-machine but declares no exit")
                        )
            for tr in st.transitions:
                if tr.guard is not None and tr.guard not in GUARD_NAMES:
                    diags.append(_error(tr.line, f"unknown guard '{tr.guard}'"))
                if tr.target.startswith(EXIT_PREFIX):
                    if tr.target[len(EXIT_PREFIX):] not in exit_names:
                        diags.append(
                            _error(tr.line, f"unresolved reference '{tr.target}'")
                        )
                elif tr.target == TARGET_FINAL:
                    if not finals:
                        diags.append(
                            _error(tr.line, f"machine '{m.name}' has no final state")
                        )
                    elif len(finals) > 1:
                        diags.append(
                            _error(tr.line, "ambiguous 'final' target; name the final state")
                        )
                else:
                    if tr.target not in state_names:
                        diags.append(
                            _error(tr.line, f"unresolved reference '{tr.target}'")
                        )

        # reachability inside this machine
        if m.state(m.initial) is not None:
            reached = {m.initial}
            frontier = [m.initial]
            while frontier:
                st = m.state(frontier.pop())
                if st is None:
                    continue
                nexts: list[str] = list(st.options)
                for tr in st.transitions:
                    if tr.target == TARGET_FINAL:
                        nexts.extend(m.final_state_names()[:1])
                    elif not tr.target.startswith(EXIT_PREFIX):
                        nexts.append(tr.target)
                for nxt in nexts:
                    if nxt in state_names and nxt not in reached:
                        reached.add(nxt)
                        frontier.append(nxt)
            for st in m.states:
                if st.name not in reached:
                    diags.append(_warning(st.line, f"unreachable state '{st.name}'"))

    # composition must be acyclic
    colors: dict[str, int] = {}

    def visit(name: str, stack: list[str]) -> None:
        colors[name] = 1
        m = by_name.get(name)
        if m is not None:
            for st in m.states:
                if st.kind == KIND_COMPOSITE and st.machine in by_name:
                    if colors.get(st.machine, 0) == 1:
                        cycle = " -> ".join(stack + [name, st.machine])
                        diags.append(
                            _error(st.line, f"machine composition cycle: {cycle}")
                        )
                    elif colors.get(st.machine, 0) == 0:
                        visit(st.machine, stack + [name])
        colors[name] = 2

    for m in machines:
        if colors.get(m.name, 0) == 0:
            visit(m.name, [])

    for m in machines:
        if not m.is_entry and m.name not in referenced:
            diags.append(_warning(m.line, f"machine '{m.name}' is never used"))

    for (node, option), (w_pos, w_neg) in scenario.seed_weights.items():
        line = weight_lines.get((node, option), 1)
        if not (0.0 <= w_pos <= 1.0 and 0.0 <= w_neg <= 1.0):
            diags.append(_error(line, f"weight out of [0,1] for {node}.{option}"))

    diags.extend(_validate_world(scenario.world))
    return diags


def _validate_world(world: WorldMap) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    def check_pos(cell, label):
        if not world.in_grid(cell):
            diags.append(_error(1, f"{label} {cell} is outside the grid"))

    check_pos(world.robot_start, "robot.start")
    st = world.station
    if st is not None:
        check_pos(st.pos, "station.pos")
        if st.ir_radius <= 0:
            diags.append(_error(1, "station.ir_radius must be positive"))
        if st.charge_rate < 0:
            diags.append(_error(1, "station.charge_rate must be non-negative"))
        for cell in st.track:
            check_pos(cell, "station.track cell")
        if st.track:
            if st.track[-1] != st.pos:
                diags.append(_error(1, "station.track must end at station.pos"))
            for a, b in zip(st.track, st.track[1:]):
                if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
                    diags.append(
                        _error(1, f"station.track cells {a} and {b} are not adjacent")
                    )
        for cell in st.gaps:
            if cell not in st.track:
                diags.append(_error(1, f"track.gap cell {cell} is not on the track"))
    b = world.beacon
    if b is not None:
        check_pos(b.pos, "beacon.pos")
        for label, v in (
            ("beacon.d0", b.d0),
            ("beacon.resonance_radius", b.resonance_radius),
            ("beacon.poll_radius", b.poll_radius),
        ):
            if v <= 0:
                diags.append(_error(1, f"{label} must be positive"))
        if b.tx_power < 0:
            diags.append(_error(1, "beacon.tx_power must be non-negative"))
        if b.i_min < 0:
            diags.append(_error(1, "beacon.i_min must be non-negative"))
    return diags


# ---------------------------------------------------------------------------
# serialization


def _fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    text = f"{v:.9f}".rstrip("0").rstrip(".")
    return text if text else "0"


def _fmt_cell(cell) -> str:
    return f"{cell[0]} {cell[1]}"


def _fmt_arm(tr: TransitionDef) -> str:
    arm = f"{tr.target} on {tr.event}"
    if tr.guard is not None:
        arm += f" if {tr.guard}"
    return arm


def serialize_scenario(scenario: ScenarioDef) -> str:
    """Render canonical DSL text; parsing it back yields an equal scenario."""
    lines: list[str] = []
    for m in scenario.machines:
        header = f"[machine {m.name} entry]" if m.is_entry else f"[machine {m.name}]"
        lines.append(header)
        lines.append(f"initial -> {m.initial}")
        for st in m.states:
            if st.kind == KIND_FINAL:
                lines.append(f"final {st.name}")
            elif st.kind == KIND_CHOICE:
                lines.append(f"choice {st.name} : " + " | ".join(st.options))
            elif st.kind == KIND_COMPOSITE:
                arms = ", ".join(_fmt_arm(tr) for tr in st.transitions)
                lines.append(f"submachine {st.name} = {st.machine} -> {arms}")
            else:
                if st.transitions:
                    arms = ", ".join(_fmt_arm(tr) for tr in st.transitions)
                    lines.append(f"state {st.name} -> {arms}")
                else:
                    lines.append(f"state {st.name}")
        for exit_name, tag in m.exits:
            lines.append(f"exit {exit_name} ({tag})")
        lines.append("")

    w = scenario.world
    lines.append("[world]")
    lines.append(f"grid = {w.width} {w.height}")
    lines.append(f"robot.start = {_fmt_cell(w.robot_start)}")
    if w.station is not None:
        st = w.station
        lines.append(f"station.pos = {_fmt_cell(st.pos)}")
        lines.append(f"station.ir_radius = {_fmt_num(st.ir_radius)}")
        lines.append(f"station.charge_rate = {_fmt_num(st.charge_rate)}")
        if st.track:
            flat = " ".join(_fmt_cell(c) for c in st.track)
            lines.append(f"station.track = {flat}")
        if st.gaps:
            flat = " ".join(_fmt_cell(c) for c in sorted(st.gaps))
            lines.append(f"track.gap = {flat}")
    if w.beacon is not None:
        b = w.beacon
        lines.append(f"beacon.pos = {_fmt_cell(b.pos)}")
        lines.append(f"beacon.tx_power = {_fmt_num(b.tx_power)}")
        lines.append(f"beacon.d0 = {_fmt_num(b.d0)}")
        lines.append(f"beacon.resonance_radius = {_fmt_num(b.resonance_radius)}")
        lines.append(f"beacon.poll_radius = {_fmt_num(b.poll_radius)}")
        lines.append(f"beacon.i_min = {_fmt_num(b.i_min)}")
    lines.append("")

    e = scenario.energy_profile
    lines.append("[energy]")
    lines.append(f"battery_capacity = {_fmt_num(e.battery_capacity)}")
    lines.append(f"capacitor_capacity = {_fmt_num(e.capacitor_capacity)}")
    lines.append(f"battery_initial = {_fmt_num(e.battery_initial)}")
    lines.append(f"capacitor_initial = {_fmt_num(e.capacitor_initial)}")
    lines.append(f"rate.idle = {_fmt_num(e.rates.idle)}")
    lines.append(f"rate.move = {_fmt_num(e.rates.move)}")
    lines.append(f"rate.sense = {_fmt_num(e.rates.sense)}")
    lines.append(f"rate.process = {_fmt_num(e.rates.process)}")
    lines.append(f"threshold.low = {_fmt_num(e.thresholds.low_frac)}")
    lines.append(f"threshold.lower = {_fmt_num(e.thresholds.lower_frac)}")
    lines.append(f"gain_min = {_fmt_num(e.gain_min)}")
    lines.append(f"max_charge_ticks = {e.max_charge_ticks}")

    if scenario.seed_weights:
        lines.append("")
        lines.append("[weights]")
        for (node, option) in sorted(scenario.seed_weights):
            w_pos, w_neg = scenario.seed_weights[(node, option)]
            lines.append(f"{node}.{option} = {_fmt_num(w_pos)} {_fmt_num(w_neg)}")

    return "\n".join(lines) + "\n"
