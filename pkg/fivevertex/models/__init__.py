"""Data models for fivevertex."""

from .lattice_data import (
    AmoebaFlag,
    AmoebaSample,
    AmoebaTrace,
    ConformalState,
    DomainFile,
    EnvelopePoint,
    FieldPoint,
    FrozenBoundary,
    FundamentalDomain,
    HarmonicBoundaryData,
    HeightMap,
    HeightProfile,
    InvariantResult,
    MeshFlag,
    MNLPConfig,
    Phase,
    PhaseClassification,
    Regime,
    Region,
    SampleRun,
    SlopePoint,
    TangencyPoint,
    Tentacle,
    Topology,
    TransferMatrix,
    VertexType,
)

__all__ = [
    "AmoebaFlag",
    "AmoebaSample",
    "AmoebaTrace",
    "ConformalState",
    "DomainFile",
    "EnvelopePoint",
    "FieldPoint",
    "FrozenBoundary",
    "FundamentalDomain",
    "HarmonicBoundaryData",
    "HeightMap",
    "HeightProfile",
    "InvariantResult",
    "MeshFlag",
    "MNLPConfig",
    "Phase",
    "PhaseClassification",
    "Regime",
    "Region",
    "SampleRun",
    "SlopePoint",
    "TangencyPoint",
    "Tentacle",
    "Topology",
    "TransferMatrix",
    "VertexType",
]
