"""Depth point-cloud preprocessing: distance, voxel and outlier filters plus the
body-to-Earth rigid transform.

All functions are pure and order-stable; the runtime's filter loop chains them
and publishes the result as an immutable snapshot.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


@dataclass(frozen=True)
class FilterParams:
    d_pass: float = 4.5
    voxel_size: float = 0.2
    outlier_radius: float = 0.4   # 2 * voxel_size
    outlier_min_neighbors: int = 3

    def __post_init__(self):
        if self.d_pass <= 0 or self.voxel_size <= 0 or self.outlier_radius <= 0:
            raise ValueError("filter distances must be strictly positive")
        if self.outlier_min_neighbors < 1:
            raise ValueError("outlier_min_neighbors must be >= 1")


@dataclass(frozen=True)
class Pose:
    """Position plus (yaw, pitch, roll) attitude in radians."""

    position: tuple
    yaw: float = 0.0
    pitch: float = 0.0
    roll: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite([self.yaw, self.pitch, self.roll])):
            raise ValueError("attitude angles must be finite")
        if abs(self.pitch) >= np.pi / 2:
            raise ValueError("|pitch| must be < pi/2")


def earth_to_body_matrix(pose: Pose) -> np.ndarray:
    """Rotation taking Earth-frame vectors into the body frame (ZYX Euler)."""
    cy, sy = np.cos(pose.yaw), np.sin(pose.yaw)
    cp, sp = np.cos(pose.pitch), np.sin(pose.pitch)
    cr, sr = np.cos(pose.roll), np.sin(pose.roll)
    return np.array([
        [cy * cp, sy * cp, -sp],
        [cy * sp * sr - sy * cr, sy * sp * sr + cy * cr, cp * sr],
        [cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr],
    ])


def body_to_earth_matrix(pose: Pose) -> np.ndarray:
    # rotation matrices are orthonormal, so the inverse is the transpose
    return earth_to_body_matrix(pose).T


def distance_filter(cloud: np.ndarray, d_pass: float) -> np.ndarray:
    """Keep points with Euclidean norm <= d_pass, preserving order."""
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(cloud) == 0:
        return cloud
    keep = np.linalg.norm(cloud, axis=1) <= d_pass
    return cloud[keep]


def voxel_downsample(cloud: np.ndarray, voxel_size: float) -> np.ndarray:
    """Replace the points of each voxel by their centroid.

    Output order follows the first occurrence of each voxel in the input.
    """
    if voxel_size <= 0:
        raise ValueError("voxel_size must be > 0")
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(cloud) == 0:
        return cloud
    keys = np.floor(cloud / voxel_size).astype(np.int64)
    _, first, inverse = np.unique(
        keys, axis=0, return_index=True, return_inverse=True
    )
    sums = np.zeros((first.size, 3))
    np.add.at(sums, inverse, cloud)
    counts = np.bincount(inverse, minlength=first.size).astype(float)
    centroids = sums / counts[:, None]
    order = np.argsort(first, kind="stable")
    return centroids[order]


def outlier_filter(cloud: np.ndarray, radius: float, min_neighbors: int) -> np.ndarray:
    """Keep points with at least min_neighbors other points within radius."""
    if radius <= 0:
        raise ValueError("radius must be > 0")
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    if len(cloud) == 0:
        return cloud
    tree = cKDTree(cloud)
    counts = tree.query_ball_point(cloud, radius, return_length=True)
    # query counts the point itself
    keep = (np.asarray(counts) - 1) >= min_neighbors
    return cloud[keep]


def body_to_earth(cloud: np.ndarray, pose: Pose) -> np.ndarray:
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    R = body_to_earth_matrix(pose)
    return cloud @ R.T + np.asarray(pose.position, dtype=float)


def earth_to_body(cloud: np.ndarray, pose: Pose) -> np.ndarray:
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 3)
    R = earth_to_body_matrix(pose)
    return (cloud - np.asarray(pose.position, dtype=float)) @ R.T


def filter_pipeline(cloud_body: np.ndarray, pose: Pose, params: FilterParams,
                    ground_z: float | None = None) -> np.ndarray:
    """Full chain: distance -> voxel -> outlier -> Earth frame.

    ground_z, when given, drops Earth-frame points at or below that height so
    the floor never enters the occupancy map.
    """
    pcl_1 = distance_filter(cloud_body, params.d_pass)
    pcl_2 = voxel_downsample(pcl_1, params.voxel_size)
    pcl_3 = outlier_filter(pcl_2, params.outlier_radius, params.outlier_min_neighbors)
    pcl_4 = body_to_earth(pcl_3, pose)
    if ground_z is not None and len(pcl_4):
        pcl_4 = pcl_4[pcl_4[:, 2] > ground_z]
    return pcl_4
