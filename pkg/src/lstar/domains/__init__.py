from .encoding import N_CHANNELS, domain_of, encode_batch, encode_state
from .maze import (
    MazeGenerationError,
    MazeGrid,
    manhattan_heuristic,
    maze_generate,
    maze_rotate,
    maze_successors,
)
from .sokoban import (
    SokobanGenerationError,
    SokobanLevel,
    SokobanState,
    box_distance_heuristic,
    sokoban_generate,
    sokoban_successors,
)
from .textio import (
    InconsistentDimensions,
    InstanceFormatError,
    MalformedCharacter,
    UnpairedTeleport,
    deserialize_state,
    parse_instance,
    read_instance,
    render_instance,
    serialize_state,
    write_instance,
)


def base_heuristic(instance):
    """Classical heuristic used to generate training searches."""
    if isinstance(instance, MazeGrid):
        return manhattan_heuristic(instance)
    return box_distance_heuristic(instance)
