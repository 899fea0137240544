"""Classical dynamics of a condensate side-mode coupled to a moving cavity mirror."""
from becmirror.model import DimensionlessModel, PhysicalParams, derive_model, reference_params

__version__ = "0.1.0"

__all__ = ["DimensionlessModel", "PhysicalParams", "derive_model", "reference_params", "__version__"]
