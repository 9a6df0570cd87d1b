"""Markov model, exact joint chain, and slotted simulator for a simplified
RTS/CTS 802.11 DCF over arbitrary neighbor graphs."""

from .equilibrium import (EquilibriumSystem, SolveReport, build_system,
                          initial_distribution, solve)
from .fixtures import fixture, fixture_symmetry, hidden_terminal, triangle, \
    two_node
from .jointchain import JointChain, build_joint_chain, export_edges, \
    stationary
from .kernel import (Kernel, OmegaPredicate, TransitionLabel,
                     evaluate_transition, omega_filter, specialize_example)
from .params import ProtocolParams, Timing, default_params, discretize_times
from .reporting import compare, emit_distribution, load_distribution
from .simulate import SimConfig, SimResult, averaged_occupancy, run
from .states import Act, Distribution, NodeState, SATURATED
from .statespace import StateSpace, build_spaces, enumerate_states
from .topology import QueueMode, QueueSpec, Topology, from_positions

__all__ = [
    "Act", "Distribution", "EquilibriumSystem", "JointChain", "Kernel",
    "NodeState", "OmegaPredicate", "ProtocolParams", "QueueMode",
    "QueueSpec", "SATURATED", "SimConfig", "SimResult", "SolveReport",
    "StateSpace", "Timing", "Topology", "TransitionLabel",
    "averaged_occupancy", "build_joint_chain", "build_spaces",
    "build_system", "compare", "default_params", "discretize_times",
    "emit_distribution", "enumerate_states", "evaluate_transition",
    "export_edges", "fixture", "fixture_symmetry", "from_positions",
    "hidden_terminal", "initial_distribution", "load_distribution",
    "omega_filter", "run", "solve", "specialize_example", "stationary",
    "triangle", "two_node",
]

__version__ = "0.1.0"
