"""Episode simulation: ticks the world, machines, weights and energy together.

Each tick dispatches pending events into the entry machine (run to
completion), lets the active leaf state sense and move the robot, drains
energy by the tick's activity set, applies charging, and fires threshold and
charge-timer events for the next tick. The loop stops at the step horizon or
when battery and capacitor are both flat. Everything downstream of the seed
is deterministic, so identical configurations always produce byte-identical
traces.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import weights as weights_mod
from .energy import (
    SOURCE_NONE,
    SOURCE_STATION,
    SOURCE_WIRELESS,
    EnergyState,
    ThresholdWatcher,
    apply_charge,
    mood_of,
    sensor_gain,
    tick_discharge,
)
from .scenario import ScenarioDef
from .statemachine import (
    AUTO,
    STATUS_RUNNING,
    TRIGGER_CHOICE,
    MachineInstance,
    dispatch,
    start_instance,
)
from .weights import WeightTable, record_outcome, save_weights, select_option
from .world import (
    CUE_IR,
    CUE_TRACK,
    FOLLOW_ARRIVED,
    FOLLOW_LOST,
    RobotPose,
    coupling_efficiency,
    detect_station_cues,
    intensity_at,
    poll_beacon,
    step_follow,
    step_seek_intensity,
)

MEMORY_VOLATILE = "volatile"
MEMORY_NONVOLATILE = "nonvolatile"

OUTCOME_SURVIVED = "survived_to_horizon"
OUTCOME_DIED = "died"

EVENT_WAIT_TIMER = "waitTimer_expired"
EVENT_LOCATED = "located"
EVENT_LOST = "lost"
EVENT_FOUND = "found"
EVENT_NO_SIGNAL = "no_signal"

# state name -> charging source while the robot sits in it
CHARGING_STATES = {"recharge": SOURCE_STATION, "charge": SOURCE_WIRELESS}

STATS_CSV_HEADER = ("episode", "outcome", "lifetime", "recharges_station", "recharges_wireless")

_TRACE_KEY_ORDER = (
    "step", "state", "event", "node", "option",
    "w_pos_before", "w_pos_after", "w_neg_before", "w_neg_after",
    "battery", "capacitor", "mood", "x", "y",
)


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioDef
    seed: int = 0
    memory_mode: str = MEMORY_VOLATILE
    max_steps: int = 10_000
    weights_path: str | Path | None = None

    def __post_init__(self) -> None:
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.memory_mode not in (MEMORY_VOLATILE, MEMORY_NONVOLATILE):
            raise ValueError(f"unknown memory mode {self.memory_mode!r}")
        if self.memory_mode == MEMORY_NONVOLATILE and self.weights_path is None:
            raise ValueError("nonvolatile memory requires weights_path")
        if self.memory_mode == MEMORY_VOLATILE and self.weights_path is not None:
            raise ValueError("volatile memory must not set weights_path")


@dataclass(frozen=True)
class TraceEvent:
    step: int
    state: str
    event: str | None = None
    node: str | None = None
    option: str | None = None
    w_pos_before: float | None = None
    w_pos_after: float | None = None
    w_neg_before: float | None = None
    w_neg_after: float | None = None
    battery: float | None = None
    capacitor: float | None = None
    mood: str | None = None
    x: int | None = None
    y: int | None = None

    def to_dict(self) -> dict:
        out = {}
        for key in _TRACE_KEY_ORDER:
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass
class EpisodeResult:
    outcome: str
    lifetime: int
    death_step: int | None
    choices_made: dict[tuple[str, str], int]
    first_choices: dict[str, str]
    final_weights: dict[tuple[str, str], weights_mod.WeightEntry]
    recharges: dict[str, int]


@dataclass
class SurvivalStats:
    episodes: int
    survival_fraction: float
    mean_lifetime: float
    behavioral_entropy: float
    results: list[EpisodeResult]


@dataclass(frozen=True)
class _BehaviorResult:
    pose: RobotPose
    activities: frozenset[str]
    events: tuple[str, ...] = ()


def _behave_follow(cue: str):
    def run(ep: "_Episode") -> _BehaviorResult:
        gain = sensor_gain(ep.energy, ep.profile.gain_min)
        acts = {"sense", "process"}
        cues = detect_station_cues(ep.world, ep.pose, gain)
        detected = cues.ir_detected if cue == CUE_IR else cues.track_detected
        if not detected:
            return _BehaviorResult(ep.pose, frozenset(acts), (EVENT_LOST,))
        new_pose, status = step_follow(ep.world, ep.pose, cue, gain)
        if new_pose.pos != ep.pose.pos:
            acts.add("move")
        if status == FOLLOW_ARRIVED:
            events: tuple[str, ...] = (EVENT_LOCATED,)
        elif status == FOLLOW_LOST:
            events = (EVENT_LOST,)
        else:
            events = ()
        return _BehaviorResult(new_pose, frozenset(acts), events)

    return run


def _behave_poll(ep: "_Episode") -> _BehaviorResult:
    gain = sensor_gain(ep.energy, ep.profile.gain_min)
    acts = {"sense", "process"}
    signal = poll_beacon(ep.world, ep.pose, gain)
    if signal is None:
        return _BehaviorResult(ep.pose, frozenset(acts), (EVENT_NO_SIGNAL,))
    beacon = ep.world.beacon
    if math.dist(ep.pose.pos, beacon.pos) <= beacon.resonance_radius:
        return _BehaviorResult(ep.pose, frozenset(acts), (EVENT_FOUND,))
    new_pose = step_seek_intensity(ep.world, ep.pose)
    if new_pose.pos != ep.pose.pos:
        acts.add("move")
    return _BehaviorResult(new_pose, frozenset(acts))


def _behave_engage(ep: "_Episode") -> _BehaviorResult:
    acts = frozenset({"process"})
    if coupling_efficiency(ep.world, ep.pose.pos) > 0.0:
        return _BehaviorResult(ep.pose, acts, (EVENT_LOCATED,))
    return _BehaviorResult(ep.pose, acts, (EVENT_NO_SIGNAL,))


def _behave_navigate(ep: "_Episode") -> _BehaviorResult:
    acts = {"sense", "process"}
    beacon = ep.world.beacon
    if beacon is not None and intensity_at(ep.world, ep.pose.pos) >= beacon.i_min:
        return _BehaviorResult(ep.pose, frozenset(acts))
    new_pose = step_seek_intensity(ep.world, ep.pose)
    if new_pose.pos != ep.pose.pos:
        acts.add("move")
    return _BehaviorResult(new_pose, frozenset(acts))


def _behave_idle(ep: "_Episode") -> _BehaviorResult:
    return _BehaviorResult(ep.pose, frozenset())


# behaviour is bound by state name; anything unnamed here just idles
BEHAVIORS = {
    "follow_ir_signal": _behave_follow(CUE_IR),
    "follow_track_path": _behave_follow(CUE_TRACK),
    "poll_power_beacon": _behave_poll,
    "engage_resonance": _behave_engage,
    "navigate_proximity": _behave_navigate,
    "seek_intensity": _behave_navigate,
}


class _EpisodeContext:
    """Dispatch context wired to the live episode: guards, chooser, outcomes."""

    def __init__(self, episode: "_Episode"):
        self.ep = episode
        self.step = 0
        self.choice_rows: list[TraceEvent] = []
        self.outcome_rows: list[TraceEvent] = []

    def guard(self, name: str) -> bool:
        ep = self.ep
        if name == "isSignalSufficient":
            beacon = ep.world.beacon
            return beacon is not None and intensity_at(ep.world, ep.pose.pos) >= beacon.i_min
        if name == "batteryFull":
            return ep.energy.battery >= ep.energy.battery_capacity
        if name == "powerLow":
            return ep.energy.battery_frac < ep.profile.thresholds.low_frac
        if name == "powerLower":
            return ep.energy.battery_frac < ep.profile.thresholds.lower_frac
        raise ValueError(f"unknown guard '{name}'")

    def choose(self, node: str, options: list[str]) -> str:
        ep = self.ep
        chosen = select_option(ep.table, node, options, ep.rng)
        ep.choice_fired = True
        ep.choices_made[(node, chosen)] += 1
        ep.first_choices.setdefault(node, chosen)
        entry = ep.table.get(node, chosen)
        self.choice_rows.append(
            TraceEvent(
                step=self.step,
                state="/".join(ep.instance.active_path()),
                event=TRIGGER_CHOICE,
                node=node,
                option=chosen,
                w_pos_before=entry.w_pos,
                w_neg_before=entry.w_neg,
            )
        )
        return chosen

    def outcome(self, node: str, option: str, success: bool) -> None:
        ep = self.ep
        before = ep.table.get(node, option)
        after = record_outcome(ep.table, node, option, success)
        self.outcome_rows.append(
            TraceEvent(
                step=self.step,
                state="/".join(ep.instance.active_path()),
                event="outcome_success" if success else "outcome_failure",
                node=node,
                option=option,
                w_pos_before=before.w_pos,
                w_pos_after=after.w_pos,
                w_neg_before=before.w_neg,
                w_neg_after=after.w_neg,
            )
        )


class _Episode:
    def __init__(self, cfg: SimConfig, table: WeightTable):
        self.cfg = cfg
        self.scenario = cfg.scenario
        self.world = cfg.scenario.world
        self.profile = cfg.scenario.energy_profile
        self.table = table
        self.rng = random.Random(cfg.seed)
        self.energy: EnergyState = self.profile.initial_state()
        self.pose = RobotPose(pos=self.world.robot_start)
        self.instance: MachineInstance = start_instance(self.scenario)
        self.vocabulary = self.scenario.event_vocabulary()
        self.watcher = ThresholdWatcher(self.profile.thresholds)
        self.queue: deque[str] = deque()
        self.trace: list[TraceEvent] = []
        self.choices_made: Counter = Counter()
        self.first_choices: dict[str, str] = {}
        self.recharges = {SOURCE_STATION: 0, SOURCE_WIRELESS: 0}
        self.choice_fired = False
        self.charge_ticks = 0
        self.wait_sent = False
        self.ctx = _EpisodeContext(self)

    # -- plumbing ------------------------------------------------------------

    def _enqueue(self, events) -> None:
        for event in events:
            if event in self.vocabulary:
                self.queue.append(event)

    def _dispatch(self, event: str) -> None:
        ctx = self.ctx
        ctx.choice_rows.clear()
        ctx.outcome_rows.clear()
        records = dispatch(self.instance, event, ctx)
        choice_rows = deque(ctx.choice_rows)
        for rec in records:
            if rec.note is not None:
                continue
            if rec.trigger == TRIGGER_CHOICE and choice_rows:
                self.trace.append(choice_rows.popleft())
            else:
                self.trace.append(
                    TraceEvent(
                        step=ctx.step,
                        state="/".join(rec.to_path),
                        event=rec.trigger,
                    )
                )
        self.trace.extend(ctx.outcome_rows)
        if self.instance.status != STATUS_RUNNING:
            self.instance = start_instance(self.scenario)

    def _charging_source(self) -> str:
        leaf = self.instance.leaf_state_name()
        source = CHARGING_STATES.get(leaf or "", SOURCE_NONE)
        if source == SOURCE_STATION and self.world.station is None:
            return SOURCE_NONE
        if source == SOURCE_WIRELESS and self.world.beacon is None:
            return SOURCE_NONE
        return source

    def _tick_summary(self, step: int) -> None:
        mood = mood_of(self.energy, self.profile.thresholds)
        self.trace.append(
            TraceEvent(
                step=step,
                state="/".join(self.instance.active_path()),
                battery=self.energy.battery,
                capacitor=self.energy.capacitor,
                mood=mood,
                x=self.pose.pos[0],
                y=self.pose.pos[1],
            )
        )

    # -- main loop -----------------------------------------------------------

    def run(self) -> EpisodeResult:
        self._enqueue(self.watcher.update(self.energy))
        death_step: int | None = None

        for step in range(1, self.cfg.max_steps + 1):
            self.ctx.step = step
            self.choice_fired = False

            while self.queue:
                self._dispatch(self.queue.popleft())
            self._dispatch(AUTO)

            leaf = self.instance.leaf_state_name() or ""
            behavior = BEHAVIORS.get(leaf, _behave_idle)
            result = behavior(self)
            self.pose = result.pose
            activities = set(result.activities)
            self._enqueue(result.events)
            while self.queue:
                self._dispatch(self.queue.popleft())

            if self.choice_fired:
                activities.add("process")

            self.energy = tick_discharge(self.energy, activities, self.profile.rates)
            source = self._charging_source()
            if source == SOURCE_STATION:
                self.energy = apply_charge(
                    self.energy, SOURCE_STATION, self.world.station.charge_rate
                )
            elif source == SOURCE_WIRELESS:
                power = coupling_efficiency(self.world, self.pose.pos) * self.world.beacon.tx_power
                self.energy = apply_charge(self.energy, SOURCE_WIRELESS, power)
            else:
                self.energy = replace(self.energy, charging_source=SOURCE_NONE)

            self._enqueue(self.watcher.update(self.energy))
            if source != SOURCE_NONE:
                self.charge_ticks += 1
                full = self.energy.battery >= self.energy.battery_capacity
                timed_out = (
                    0 < self.profile.max_charge_ticks <= self.charge_ticks
                )
                if (full or timed_out) and not self.wait_sent:
                    if EVENT_WAIT_TIMER in self.vocabulary:
                        self.queue.append(EVENT_WAIT_TIMER)
                        self.wait_sent = True
                        self.recharges[source] += 1
            else:
                self.charge_ticks = 0
                self.wait_sent = False

            if self.energy.depleted:
                death_step = step
                self._tick_summary(step)
                break

            self._tick_summary(step)

        if death_step is not None:
            outcome = OUTCOME_DIED
            lifetime = death_step
        else:
            outcome = OUTCOME_SURVIVED
            lifetime = self.cfg.max_steps

        return EpisodeResult(
            outcome=outcome,
            lifetime=lifetime,
            death_step=death_step,
            choices_made=dict(self.choices_made),
            first_choices=dict(self.first_choices),
            final_weights=self.table.snapshot(),
            recharges=dict(self.recharges),
        )


def _initial_table(cfg: SimConfig) -> WeightTable:
    if cfg.memory_mode == MEMORY_NONVOLATILE:
        path = Path(cfg.weights_path)
        if path.exists():
            return weights_mod.load_weights(path)
    return WeightTable(cfg.scenario.seed_weights)


def run_episode(
    cfg: SimConfig, table: WeightTable | None = None
) -> tuple[EpisodeResult, list[TraceEvent]]:
    """Run one life and return its result plus the full trace.

    When `table` is omitted, volatile mode starts from the scenario's seed
    weights and nonvolatile mode loads the weights file (falling back to the
    seeds on a cold start). On death the memory-mode consequence is applied
    before the result snapshot is taken.
    """
    if table is None:
        table = _initial_table(cfg)
    episode = _Episode(cfg, table)
    result = episode.run()
    if result.outcome == OUTCOME_DIED:
        table = apply_death_consequence(table, cfg.memory_mode, cfg.weights_path)
        result.final_weights = table.snapshot()
    elif cfg.memory_mode == MEMORY_NONVOLATILE:
        save_weights(table, cfg.weights_path)
    return result, episode.trace


def apply_death_consequence(
    table: WeightTable, mode: str, path: str | Path | None = None
) -> WeightTable:
    """Apply the memory consequence of a death.

    Volatile memory erases everything (a fresh zero table is returned);
    nonvolatile memory persists the table to `path` and returns it intact.
    """
    if mode == MEMORY_VOLATILE:
        return WeightTable()
    if mode == MEMORY_NONVOLATILE:
        if path is None:
            raise ValueError("nonvolatile consequence requires a weights path")
        save_weights(table, path)
        return table
    raise ValueError(f"unknown memory mode {mode!r}")


def run_monte_carlo(cfg: SimConfig, episodes: int) -> SurvivalStats:
    """Run `episodes` lives with seeds cfg.seed, cfg.seed+1, ...

    In nonvolatile mode the weight table threads through the whole batch
    (learning across lives); volatile lives each start from the scenario
    seeds again.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    results: list[EpisodeResult] = []
    table: WeightTable | None = None
    if cfg.memory_mode == MEMORY_NONVOLATILE:
        table = _initial_table(cfg)
    for i in range(episodes):
        epi_cfg = replace(cfg, seed=cfg.seed + i)
        result, _ = run_episode(epi_cfg, table=table)
        results.append(result)
    survived = sum(1 for r in results if r.outcome == OUTCOME_SURVIVED)
    pooled: Counter = Counter()
    for r in results:
        pooled.update(r.choices_made)
    return SurvivalStats(
        episodes=episodes,
        survival_fraction=survived / episodes,
        mean_lifetime=sum(r.lifetime for r in results) / episodes,
        behavioral_entropy=_shannon_bits(pooled),
        results=results,
    )


def _shannon_bits(histogram: Counter) -> float:
    total = sum(histogram.values())
    if total == 0:
        return 0.0
    entropy = 0.0
    for count in histogram.values():
        if count:
            p = count / total
            entropy -= p * math.log2(p)
    return entropy


def trace_lines(trace: list[TraceEvent]) -> list[str]:
    return [json.dumps(event.to_dict()) for event in trace]


def write_trace_jsonl(trace: list[TraceEvent], path: str | Path) -> None:
    Path(path).write_text("\n".join(trace_lines(trace)) + "\n")


def write_stats_csv(stats: SurvivalStats, path: str | Path) -> None:
    lines = [",".join(STATS_CSV_HEADER)]
    for i, r in enumerate(stats.results, start=1):
        lines.append(
            f"{i},{r.outcome},{r.lifetime},"
            f"{r.recharges.get(SOURCE_STATION, 0)},{r.recharges.get(SOURCE_WIRELESS, 0)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
