"""Fixed-rate time-series record of a drive, with JSONL and CSV export.

Exports are byte-stable: floats are written with repr (shortest round-trip
form), keys in a fixed order, and parsing an export then re-exporting it
reproduces the bytes exactly. Log hashes are computed over the JSONL form.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterator

from .arbitration import AutomationMode
from .dynamics import ControlInput
from .errors import ValidationError

_MODES = (AutomationMode.AUTO, AutomationMode.SHARED, AutomationMode.MANUAL)
_MODE_CODE = {m: i for i, m in enumerate(_MODES)}


@dataclass
class DriveLog:
    """Columnar per-tick record plus drive metadata.

    Column lists all have equal length. events maps tick index to a tuple of
    event names; match_idx (expert sample matched per tick) is kept for
    in-memory analysis but is not part of the serialized form.
    """

    meta: dict[str, Any]
    t: list[float] = field(default_factory=list)
    ego_s: list[float] = field(default_factory=list)
    ego_lat: list[float] = field(default_factory=list)
    ego_v: list[float] = field(default_factory=list)
    ego_a: list[float] = field(default_factory=list)
    lead_s: list[float] = field(default_factory=list)
    lead_v: list[float] = field(default_factory=list)
    lead_a: list[float] = field(default_factory=list)
    mode: list[int] = field(default_factory=list)
    ud_throttle: list[float] = field(default_factory=list)
    ud_brake: list[float] = field(default_factory=list)
    ud_steering: list[float] = field(default_factory=list)
    ue_throttle: list[float] = field(default_factory=list)
    ue_brake: list[float] = field(default_factory=list)
    ue_steering: list[float] = field(default_factory=list)
    ua_throttle: list[float] = field(default_factory=list)
    ua_brake: list[float] = field(default_factory=list)
    ua_steering: list[float] = field(default_factory=list)
    tor_flag: list[bool] = field(default_factory=list)
    events: dict[int, tuple[str, ...]] = field(default_factory=dict)
    match_idx: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.meta["dt"])

    def mode_at(self, k: int) -> AutomationMode:
        return _MODES[self.mode[k]]

    def gap_at(self, k: int) -> float:
        return (self.lead_s[k] - self.ego_s[k]) - float(self.meta["lead_length"])

    def driver_controls(self) -> list[ControlInput]:
        """Recorded driver inputs, replayable tick-for-tick through the engine."""
        return [ControlInput(th, br, st) for th, br, st in
                zip(self.ud_throttle, self.ud_brake, self.ud_steering)]

    def tick_events(self, k: int) -> tuple[str, ...]:
        return self.events.get(k, ())

    def iter_event_names(self) -> Iterator[tuple[int, str]]:
        for k in sorted(self.events):
            for name in self.events[k]:
                yield k, name


def _meta_line(meta: dict[str, Any]) -> str:
    return json.dumps({"meta": meta}, sort_keys=True, separators=(",", ":"))


def to_jsonl(log: DriveLog) -> str:
    """One meta line, then one tick per line with fixed field order."""
    lines = [_meta_line(log.meta)]
    ev = log.events
    for k in range(len(log.t)):
        events = json.dumps(list(ev[k]), separators=(",", ":")) if k in ev else "[]"
        flag = "true" if log.tor_flag[k] else "false"
        lines.append(
            f'{{"t":{log.t[k]!r},'
            f'"ego":{{"s":{log.ego_s[k]!r},"lat":{log.ego_lat[k]!r},'
            f'"v":{log.ego_v[k]!r},"a":{log.ego_a[k]!r}}},'
            f'"lead":{{"s":{log.lead_s[k]!r},"v":{log.lead_v[k]!r},"a":{log.lead_a[k]!r}}},'
            f'"mode":"{_MODES[log.mode[k]].value}",'
            f'"u_driver":{{"throttle":{log.ud_throttle[k]!r},"brake":{log.ud_brake[k]!r},'
            f'"steering":{log.ud_steering[k]!r}}},'
            f'"u_expert":{{"throttle":{log.ue_throttle[k]!r},"brake":{log.ue_brake[k]!r},'
            f'"steering":{log.ue_steering[k]!r}}},'
            f'"u_applied":{{"throttle":{log.ua_throttle[k]!r},"brake":{log.ua_brake[k]!r},'
            f'"steering":{log.ua_steering[k]!r}}},'
            f'"tor_flag":{flag},"events":{events}}}'
        )
    return "\n".join(lines) + "\n"


def from_jsonl(text: str) -> DriveLog:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ValidationError("empty drive log")
    head = json.loads(lines[0])
    if "meta" not in head:
        raise ValidationError("drive log must start with a meta line")
    log = DriveLog(meta=head["meta"])
    mode_code = {m.value: i for i, m in enumerate(_MODES)}
    for k, line in enumerate(lines[1:]):
        rec = json.loads(line)
        log.t.append(rec["t"])
        ego, lead = rec["ego"], rec["lead"]
        log.ego_s.append(ego["s"])
        log.ego_lat.append(ego["lat"])
        log.ego_v.append(ego["v"])
        log.ego_a.append(ego["a"])
        log.lead_s.append(lead["s"])
        log.lead_v.append(lead["v"])
        log.lead_a.append(lead["a"])
        log.mode.append(mode_code[rec["mode"]])
        for key, th, br, st in (("u_driver", log.ud_throttle, log.ud_brake, log.ud_steering),
                                ("u_expert", log.ue_throttle, log.ue_brake, log.ue_steering),
                                ("u_applied", log.ua_throttle, log.ua_brake, log.ua_steering)):
            u = rec[key]
            th.append(u["throttle"])
            br.append(u["brake"])
            st.append(u["steering"])
        log.tor_flag.append(bool(rec["tor_flag"]))
        if rec["events"]:
            log.events[k] = tuple(rec["events"])
    return log


CSV_HEADER = ("t,ego_s,ego_lat,ego_v,ego_a,lead_s,lead_v,lead_a,mode,"
              "u_driver_throttle,u_driver_brake,u_driver_steering,"
              "u_expert_throttle,u_expert_brake,u_expert_steering,"
              "u_applied_throttle,u_applied_brake,u_applied_steering,tor_flag,events")


def to_csv(log: DriveLog) -> str:
    """Flat CSV form; the meta object rides along as a leading comment line."""
    lines = ["#meta " + json.dumps(log.meta, sort_keys=True, separators=(",", ":")),
             CSV_HEADER]
    ev = log.events
    for k in range(len(log.t)):
        events = ";".join(ev[k]) if k in ev else ""
        lines.append(
            f"{log.t[k]!r},{log.ego_s[k]!r},{log.ego_lat[k]!r},{log.ego_v[k]!r},"
            f"{log.ego_a[k]!r},{log.lead_s[k]!r},{log.lead_v[k]!r},{log.lead_a[k]!r},"
            f"{_MODES[log.mode[k]].value},"
            f"{log.ud_throttle[k]!r},{log.ud_brake[k]!r},{log.ud_steering[k]!r},"
            f"{log.ue_throttle[k]!r},{log.ue_brake[k]!r},{log.ue_steering[k]!r},"
            f"{log.ua_throttle[k]!r},{log.ua_brake[k]!r},{log.ua_steering[k]!r},"
            f"{int(log.tor_flag[k])},{events}"
        )
    return "\n".join(lines) + "\n"


def from_csv(text: str) -> DriveLog:
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if len(lines) < 2 or not lines[0].startswith("#meta "):
        raise ValidationError("drive log CSV must start with a #meta line and header")
    meta = json.loads(lines[0][len("#meta "):])
    if lines[1] != CSV_HEADER:
        raise ValidationError("unexpected drive log CSV header")
    log = DriveLog(meta=meta)
    mode_code = {m.value: i for i, m in enumerate(_MODES)}
    for k, line in enumerate(lines[2:]):
        parts = line.split(",")
        if len(parts) != 20:
            raise ValidationError(f"malformed CSV row {k + 1}")
        (t, ego_s, ego_lat, ego_v, ego_a, lead_s, lead_v, lead_a, mode,
         udt, udb, uds, uet, ueb, ues, uat, uab, uas, flag, events) = parts
        log.t.append(float(t))
        log.ego_s.append(float(ego_s))
        log.ego_lat.append(float(ego_lat))
        log.ego_v.append(float(ego_v))
        log.ego_a.append(float(ego_a))
        log.lead_s.append(float(lead_s))
        log.lead_v.append(float(lead_v))
        log.lead_a.append(float(lead_a))
        log.mode.append(mode_code[mode])
        log.ud_throttle.append(float(udt))
        log.ud_brake.append(float(udb))
        log.ud_steering.append(float(uds))
        log.ue_throttle.append(float(uet))
        log.ue_brake.append(float(ueb))
        log.ue_steering.append(float(ues))
        log.ua_throttle.append(float(uat))
        log.ua_brake.append(float(uab))
        log.ua_steering.append(float(uas))
        log.tor_flag.append(flag == "1")
        if events:
            log.events[k] = tuple(events.split(";"))
    return log


def log_hash(log: DriveLog) -> str:
    return hashlib.sha256(to_jsonl(log).encode()).hexdigest()
