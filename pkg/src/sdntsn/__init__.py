"""Discrete-event simulation of software-defined real-time Ethernet with
802.1Qbv gate control, OpenFlow-style forwarding and NetConf reconfiguration."""
from .engine import MS, NS, S, US, Event, RngStream, SimulationFault, Simulator, gaussian
from .ethernet import Frame, Link, PortRef, serialization_time
from .qbv import (GATE_OPEN_AT_START, LENGTH_AWARE, GateControlEntry, GateControlList, GclError,
                  QbvPort, gate_state)
from .scenario import Network, RunResult, ScenarioConfig, ScenarioError, run
from .schedule import InfeasibleSchedule, PhaseSet, gcl_calc
from .switch import FlowAction, FlowEntry, FlowMatch, Switch, SwitchConfig
from .trace import report

__version__ = "0.1.0"
