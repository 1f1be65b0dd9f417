"""Latent deformation design space: RBF velocity fields, flow integration,
Chamfer fitting, PCA latent space, and primitive baseline shapes."""

from .dataset import (
    augment_dataset,
    fit_target_corpus,
    generate_target_corpus,
    procedural_target,
    synthetic_raw_dataset,
)
from .field import (
    DEFAULT_FLOW_STEPS,
    SIGMA_MIN,
    FreezeMask,
    RbfField,
    default_centers,
    default_mask,
    deform_mesh,
    integrate_flow,
    pack_params,
    raw_dimension,
    rbf_velocity,
    unpack_params,
)
from .fitting import (
    FitResult,
    chamfer_gradient,
    chamfer_objective,
    fit_deformation,
    fitted_chamfer,
)
from .latent import (
    LatentModel,
    build_latent,
    decode,
    encode,
    load_latent_model,
    load_raw_params,
    reconstruction_error,
    save_latent_model,
    save_raw_params,
)
from .primitives import (
    FINGER_LENGTH,
    FINGER_THICKNESS,
    FINGER_WIDTH,
    MOUNT_Z,
    base_finger_mesh,
    load_base_finger,
    primitive_design,
)

__all__ = [
    "RbfField", "FreezeMask", "rbf_velocity", "integrate_flow", "deform_mesh",
    "unpack_params", "pack_params", "default_centers", "default_mask",
    "raw_dimension", "DEFAULT_FLOW_STEPS", "SIGMA_MIN",
    "chamfer_objective", "chamfer_gradient", "fit_deformation", "fitted_chamfer",
    "FitResult",
    "LatentModel", "build_latent", "decode", "encode", "reconstruction_error",
    "save_latent_model", "load_latent_model", "save_raw_params", "load_raw_params",
    "base_finger_mesh", "load_base_finger", "primitive_design",
    "FINGER_LENGTH", "FINGER_WIDTH", "FINGER_THICKNESS", "MOUNT_Z",
    "augment_dataset", "generate_target_corpus", "fit_target_corpus",
    "procedural_target", "synthetic_raw_dataset",
]
