from .checkpoint import (
    Checkpoint,
    check_architecture,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
)
from .errors import (
    ArchitectureMismatchError,
    CheckpointError,
    CheckpointFormatError,
    CheckpointVersionError,
    PolicyError,
)
from .network import (
    AUX_PREFIXES,
    POLICY_PREFIXES,
    HiddenState,
    ObservationState,
    Policy,
    PolicyArch,
    PolicyParams,
    predict_crossing,
    predict_traversability,
    probability,
    reset_hidden,
)
