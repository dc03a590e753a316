"""Phase-space tools for real quantum states (rebits): Wigner functions, CSS
stabilizer states and circuits, contextuality witnesses, and universal
computation by state injection."""

__version__ = "0.1.0"

from .contextuality import Verdict, WitnessSpec, classify, witness_value
from .css import AffineSymplectic, CSSGroup, StabilizerGroup, gate_to_affine, hudson_verify
from .dense import DenseDensity, DenseState, GateOp
from .gf2 import GF2Subspace, GF2Vector, PhasePoint
from .injection import LogicalCircuit, decode, encode, run_encoded
from .pauli import PauliOp, parse_pauli
from .sim import SimCircuit, parse_circuit, run
from .wigner import WignerTable, wigner_of

__all__ = [
    "AffineSymplectic", "CSSGroup", "DenseDensity", "DenseState", "GF2Subspace", "GF2Vector", "GateOp",
    "LogicalCircuit", "PauliOp", "PhasePoint", "SimCircuit", "StabilizerGroup", "Verdict", "WignerTable",
    "WitnessSpec", "classify", "decode", "encode", "gate_to_affine", "hudson_verify", "parse_circuit",
    "parse_pauli", "run", "run_encoded", "witness_value", "wigner_of",
]
