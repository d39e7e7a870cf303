from .space import (  # noqa:F401
    RYDBERG,
    DriveTone,
    LevelScheme,
    QuditGate,
    QuditSpace,
    StateTrajectory,
    StateVector,
    TwoAtomConfig,
)
from .pulses import (  # noqa:F401
    ControlBasis,
    FourierParams,
    GrapeProblem,
    OptimizationResult,
    PropagationRecord,
    PulseSchedule,
    TimeGrid,
    TimeScan,
)
from .sequences import (  # noqa:F401
    CRPulse,
    GateSequence,
    NoGoVerdict,
    PhaseMatrix,
    SingleQuditGate,
    VirtualPhase,
)
from .noise import (  # noqa:F401
    JumpRecord,
    NoiseModel,
    PulseLibrary,
    PulseLibraryEntry,
    ScalingPrediction,
    SimResult,
    TrajectoryConfig,
    TrajectoryResult,
)
from .manifest import RunManifest  # noqa:F401
