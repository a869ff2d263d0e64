"""Jet constituents -> boosted Gram-Schmidt images -> 4 PCA features."""
from .images import IMAGE_SIZE, PrepReport, preprocess, process_jet, render_image, write_pgm
from .io import parse_jets, read_features, read_images, write_features, write_images
from .kinematics import (
    FourMomentum,
    GSBasis,
    Jet,
    gram_schmidt,
    gram_schmidt_basis,
    invariant_mass,
    project_constituent,
    rescale_and_boost,
)
from .pca import PCAModel, features, fit_feature_range, normalize_features, pca_fit, split_train_test

__all__ = [
    "IMAGE_SIZE", "PrepReport", "preprocess", "process_jet", "render_image", "write_pgm",
    "parse_jets", "read_features", "read_images", "write_features", "write_images",
    "FourMomentum", "GSBasis", "Jet", "gram_schmidt", "gram_schmidt_basis", "invariant_mass",
    "project_constituent", "rescale_and_boost",
    "PCAModel", "features", "fit_feature_range", "normalize_features", "pca_fit",
    "split_train_test",
]
