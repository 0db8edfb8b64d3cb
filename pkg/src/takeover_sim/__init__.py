"""Deterministic human-in-the-loop driving simulation harness.

Expert-trace replay automation, driver/automation input blending with a
takeover-request state machine, scripted disengagement scenarios, and the full
surrogate-safety metrics pipeline (reaction time, minTTC, TET, TIT, NASA-TLX,
grouping and t-tests). Runs headless with simulated drivers or live with a
human at the browser cockpit.
"""

from .arbitration import (ArbiterConfig, ArbiterSignal, AutomationMode, Disengagement,
                          TorEvent, blend, steady_following, transition)
from .driver import DEFAULT_RT_GRID, DriverParams, SimulatedDriver, driver_input
from .drivelog import DriveLog, from_csv, from_jsonl, log_hash, to_csv, to_jsonl
from .dynamics import (ControlInput, DynamicsParams, LeadProfile, VehicleState,
                       gap, step_lead, step_vehicle)
from .engine import Simulation, generate_trace, replay_drive, run_drive
from .errors import ConfigError, TraceParseError, ValidationError
from .experiment import ExperimentConfig, load_experiment, run_experiment
from .expert import ExpertTrace, ExpertTraceSample, MatchConfig, dump_trace, expert_input, load_trace
from .follower import FollowerParams
from .session import SessionServer, serve_session
from .metrics import (GroupAssignment, SafetyReport, TlxRating, TTestResult, build_report,
                      group_assign, min_ttc, reaction_time, tet, tit, tlx_overall,
                      ttc_series, welch_t)
from .scenario import (AmbientSpec, InitState, LeadBrakeSpec, ScenarioSpec, TorSpec,
                       counterbalance, load_scenario, make_routes, oracle_scenario)

__version__ = "0.1.0"
