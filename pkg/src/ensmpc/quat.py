"""Unit-quaternion helpers for orientation goals.

Convention: scalar-first (w, x, y, z). All functions accept plain numpy
arrays; batched variants take quaternions in the last axis.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q):
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    return q / n


def multiply(q1, q2):
    """Hamilton product q1 * q2 (scalar-first)."""
    w1, x1, y1, z1 = q1[..., 0], q1[..., 1], q1[..., 2], q1[..., 3]
    w2, x2, y2, z2 = q2[..., 0], q2[..., 1], q2[..., 2], q2[..., 3]
    return np.stack(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ],
        axis=-1,
    )


def exp_map(v):
    """Quaternion exponential of a pure-imaginary argument.

    exp([0, v]) = [cos|v|, sin|v| * v/|v|], safe at |v| = 0.
    """
    v = np.asarray(v, dtype=float)
    angle = np.linalg.norm(v, axis=-1, keepdims=True)
    # sinc form avoids the 0/0 at angle = 0
    s = np.sinc(angle / np.pi)
    return np.concatenate([np.cos(angle), s * v], axis=-1)


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def geodesic_angle(q1, q2):
    """Rotation angle between two unit quaternions: 2*arccos(|<q1, q2>|).

    Invariant to the q -> -q double cover. The inner product is clamped
    before arccos so values like 1 + 1e-16 stay finite. Range [0, pi].
    """
    dot = np.abs(np.sum(np.asarray(q1) * np.asarray(q2), axis=-1))
    return 2.0 * np.arccos(np.clip(dot, 0.0, 1.0))


def to_matrix(q):
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def from_matrix(m):
    """Unit quaternion of a rotation matrix (Shepperd's method)."""
    m = np.asarray(m, dtype=float)
    tr = np.trace(m)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = np.array(q)
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def random_unit(rng, n=None):
    """Uniform random unit quaternion(s): normalized 4-d Gaussian draws.

    Uniform on S^3, hence uniform over SO(3) through the double cover.
    """
    shape = (4,) if n is None else (n, 4)
    q = rng.standard_normal(shape)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def cube_rotations():
    """The 24 rotations of the proper octahedral group, as unit quaternions.

    Generated from all right-handed orthogonal matrices with entries in
    {-1, 0, 1}; the first entry is the identity.
    """
    mats = []
    axes = []
    for i in range(3):
        for sign in (1, -1):
            v = np.zeros(3)
            v[i] = sign
            axes.append(v)
    for ex in axes:
        for ey in axes:
            if abs(np.dot(ex, ey)) > 0.5:
                continue
            ez = np.cross(ex, ey)
            mats.append(np.stack([ex, ey, ez], axis=1))
    quats = [from_matrix(m) for m in mats]
    quats.sort(key=lambda q: (-round(q[0], 9), tuple(np.round(q[1:], 9))))
    return np.array(quats)
