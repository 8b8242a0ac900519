"""Flexible-count 3D visual grounding evaluation toolkit."""

from ._vg3d import (
    __version__,
    aabb_from_points,
    assign_training_targets,
    bce_reference_loss,
    build_cost_matrix,
    contrastive_grad,
    contrastive_loss,
    crop,
    evaluate_boxes,
    hungarian,
    iou,
    load_ply,
    make_cameras,
    multiclass_reference_loss,
    render_proposal,
    volume,
)

__all__ = [
    "__version__",
    "aabb_from_points",
    "assign_training_targets",
    "bce_reference_loss",
    "build_cost_matrix",
    "contrastive_grad",
    "contrastive_loss",
    "crop",
    "evaluate_boxes",
    "hungarian",
    "iou",
    "load_ply",
    "make_cameras",
    "multiclass_reference_loss",
    "render_proposal",
    "volume",
]
