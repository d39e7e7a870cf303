from dataclasses import dataclass, field
from typing import Dict, Tuple


@dataclass
class RunManifest:
    """
    What a command was asked to do and what it wrote.  Feeding the manifest
    back through ``--config`` replays the run.
    """

    command: str
    options: Dict[str, object]
    seeds: Dict[str, int] = field(default_factory=dict)
    version: str = ''
    started_at: str = ''
    finished_at: str = ''
    outputs: Tuple[str, ...] = ()
