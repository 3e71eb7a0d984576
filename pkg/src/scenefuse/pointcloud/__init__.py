"""LiDAR preprocessing: neighbourhoods, covariance normals, 6-D point augmentation."""
from .cloud import (
    NeighborhoodQuery,
    PointCloud,
    augment,
    decode_binary,
    encode_binary,
    parse_ascii,
    read_cloud,
    write_cloud,
)
from .eigen import canonical_sign, closed_form_eigenvalues, eigen3, jacobi_eigh, smallest_eigenvector
from .kdtree import KDTree
from .normals import build_index, covariance, estimate_normals, neighborhood, neighborhood_mean
from .oracle import exhaustive_neighborhood, oracle_normals
