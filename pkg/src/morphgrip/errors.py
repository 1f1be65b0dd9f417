"""Exception types shared across the toolkit."""


class MorphgripError(Exception):
    """Base class for all toolkit errors."""


class InvalidSdfError(MorphgripError):
    """Signed distance field is malformed (e.g. zero-resolution grid)."""


class DegenerateGradientError(MorphgripError):
    """Raw SDF gradient has zero magnitude; caller may resample."""


class OpenMeshError(MorphgripError):
    """Mesh is not watertight; carries the offending edge count."""

    def __init__(self, open_edge_count: int):
        self.open_edge_count = open_edge_count
        super().__init__(f"mesh is not watertight: {open_edge_count} open edges")


class EmptyMeshError(MorphgripError):
    """Operation requires a mesh with at least one face."""


class EmptyCloudError(MorphgripError):
    """Operation requires a non-empty point cloud."""


class FlowDivergenceError(MorphgripError):
    """Flow integration produced a non-finite position."""

    def __init__(self, point_index: int):
        self.point_index = point_index
        super().__init__(f"flow integration diverged at point {point_index}")


class FitFailureError(MorphgripError):
    """Deformation fitting could not make progress."""


class RankDeficientError(MorphgripError):
    """Requested latent dimension exceeds the data rank."""

    def __init__(self, rank: int, requested: int):
        self.rank = rank
        self.requested = requested
        super().__init__(f"data rank {rank} < requested latent dimension {requested}")


class PoseSearchFailureError(MorphgripError):
    """Every evaluated pre-contact pose was invalid."""


class SimulationBlowupError(MorphgripError):
    """Simulation state became non-finite."""

    def __init__(self, step_index: int):
        self.step_index = step_index
        super().__init__(f"simulation state non-finite at substep {step_index}")
