"""Exception types shared across the package."""


class SkidError(Exception):
    """Base class for all package errors."""


class DegenerateRotation(SkidError):
    """Rotation angle too close to pi for a well-defined logarithm."""


class InvalidLeaf(SkidError):
    """Voxel leaf size must be positive."""


class TooFewPoints(SkidError):
    """Not enough points for the requested operation."""


class MalformedRecord(SkidError):
    """A scan or trajectory file does not match its wire format."""


class ParamsMismatch(SkidError):
    """Descriptors built with different parameter sets cannot be compared."""


class DuplicateId(SkidError):
    """Keyframe id already present in the database."""


class NoCorrespondences(SkidError):
    """Feature matching produced an empty correspondence set."""


class InsufficientInliers(SkidError):
    """Too few geometrically consistent correspondences survived."""


class DegenerateGeometry(SkidError):
    """Point configuration is rank deficient (e.g. collinear)."""


class NoOverlap(SkidError):
    """Clouds share too few close-by points to align."""


class EmptyCloud(SkidError):
    """Operation requires a non-empty point cloud."""


class MismatchedRobots(SkidError):
    """Loop pair does not connect the same pair of robots."""


class LengthMismatch(SkidError):
    """Paired sequences differ in length."""


class DisconnectedGraph(SkidError):
    """Pose graph has nodes unreachable from the gauge anchor."""


class NotAnchored(SkidError):
    """Pose graph has no fixed gauge node."""


class MissingNeighborPose(SkidError):
    """An inter-robot loop references a pose absent from neighbor reports."""


class ConfigError(SkidError):
    """Session configuration is invalid; message names the offending field."""


class RegistrationError(SkidError):
    """Registration pipeline failure; carries the stage that failed."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"registration failed at stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
