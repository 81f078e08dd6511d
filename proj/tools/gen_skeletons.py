#!/usr/bin/env python3
"""Generates the shipped skeleton files from nominal stick-figure geometry.

Each child joint is parameterized as Rz(yaw) Ry(pitch) Rx(twist) [extra] in the
parent link frame; nominal yaw/pitch are solved so the child points along the
desired world direction, and limits are nominal +/- a per-joint spread.
"""
import json
import math
import sys

import numpy as np


def rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def ry(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def frame_along(d):
    x = d / np.linalg.norm(d)
    up = np.array([0.0, 0.0, 1.0]) if abs(x[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    y = np.cross(up, x)
    y /= np.linalg.norm(y)
    z = np.cross(x, y)
    return np.column_stack([x, y, z])


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


EXTRA_AXIS = [0.0, math.sqrt(0.5), math.sqrt(0.5)]


def quat_from_matrix(m):
    w = math.sqrt(max(0.0, 1.0 + m[0, 0] + m[1, 1] + m[2, 2])) / 2
    x = math.copysign(math.sqrt(max(0.0, 1.0 + m[0, 0] - m[1, 1] - m[2, 2])) / 2, m[2, 1] - m[1, 2])
    y = math.copysign(math.sqrt(max(0.0, 1.0 - m[0, 0] + m[1, 1] - m[2, 2])) / 2, m[0, 2] - m[2, 0])
    z = math.copysign(math.sqrt(max(0.0, 1.0 - m[0, 0] - m[1, 1] + m[2, 2])) / 2, m[1, 0] - m[0, 1])
    q = np.array([w, x, y, z])
    return q / np.linalg.norm(q)


def build(name, links, root_spread, symmetry):
    """links: list of (id, parent, world_dir, length, radius, spread, twist, extra)."""
    rot = {}
    out = []
    for lid, parent, d, length, radius, spread, twist, extra in links:
        d = unit(d)
        if parent is None:
            base = frame_along(d)
            yaw = pitch = 0.0
            spread = root_spread
        else:
            base = rot[parent]
            local = base.T @ d
            yaw = math.atan2(local[1], local[0])
            pitch = math.atan2(-local[2], math.hypot(local[0], local[1]))
        rot[lid] = base @ rz(yaw) @ ry(pitch)
        axes = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]
        limits = [[yaw - spread, yaw + spread], [pitch - spread, pitch + spread], [-twist, twist]]
        if extra:
            axes.append(EXTRA_AXIS)
            limits.append([-extra, extra])
        out.append({
            "id": lid,
            "parent": parent,
            "axes": axes,
            "angle_limits": [[round(lo, 6), round(hi, 6)] for lo, hi in limits],
            "length_free": True,
            "length_limits": [round(length * 0.85, 6), round(length * 1.15, 6)],
            "default_length": length,
            "radius": radius,
        })
    root = next(l for l in links if l[1] is None)
    rest = quat_from_matrix(frame_along(unit(root[2])))
    return {"name": name, "rest_orientation": [round(v, 12) for v in rest],
            "links": out, "symmetry": symmetry}


def dump(skel, f):
    f.write("{\n")
    f.write(f'  "name": {json.dumps(skel["name"])},\n')
    f.write(f'  "rest_orientation": {json.dumps(skel["rest_orientation"])},\n')
    f.write('  "links": [\n')
    f.write(",\n".join("    " + json.dumps(l) for l in skel["links"]))
    f.write("\n  ],\n")
    f.write(f'  "symmetry": {json.dumps(skel["symmetry"])}\n')
    f.write("}\n")


def spider():
    legs = [math.radians(45 + 90 * j) for j in range(4)]
    up = [unit([math.cos(a), math.sin(a), 0.4]) for a in legs]
    low = [unit([0.35 * math.cos(a), 0.35 * math.sin(a), -1.0]) for a in legs]
    s, t = 0.35, 0.25
    links = [
        # leg 0 is walked foot -> hub so the tree is rooted at its foot
        (0, None, -low[0], 0.18, 0.018, s, t, 0),
        (1, 0, -up[0], 0.15, 0.022, s, t, 0),
        (2, 1, up[1], 0.15, 0.022, s, t, 0),
        (3, 1, up[2], 0.15, 0.022, s, t, 0),
        (4, 1, up[3], 0.15, 0.022, s, t, 0),
        (5, 2, low[1], 0.18, 0.018, s, t, 0),
        (6, 3, low[2], 0.18, 0.018, s, t, 0),
        (7, 4, low[3], 0.18, 0.018, s, t, 0),
    ]
    return build("spider", links, 0.2, [[[1, 0], [2, 5], [3, 6], [4, 7]]])


def humanoid():
    U = [0, 0, 1]
    links = [
        (0, None, U, 0.10, 0.11, 0.2, 0.2, 0),            # pelvis
        (1, 0, U, 0.22, 0.12, 0.35, 0.35, 0.2),           # abdomen
        (2, 1, U, 0.24, 0.13, 0.25, 0.3, 0),              # chest
        (3, 2, U, 0.08, 0.05, 0.4, 0.4, 0),               # neck
        (4, 3, U, 0.20, 0.09, 0.4, 0.4, 0),               # head
        (5, 2, [1, 0, -0.1], 0.17, 0.05, 0.3, 0.3, 0),    # left clavicle
        (6, 5, [0.5, 0, -1], 0.28, 0.045, 0.9, 0.4, 0.3), # left upper arm
        (7, 6, [0.2, -0.3, -1], 0.26, 0.04, 0.9, 0.4, 0), # left forearm
        (8, 2, [-1, 0, -0.1], 0.17, 0.05, 0.3, 0.3, 0),
        (9, 8, [-0.5, 0, -1], 0.28, 0.045, 0.9, 0.4, 0.3),
        (10, 9, [-0.2, -0.3, -1], 0.26, 0.04, 0.9, 0.4, 0),
        (11, 0, [1, 0, 0], 0.09, 0.08, 0.2, 0.2, 0),      # left hip
        (12, 11, [0.05, 0, -1], 0.42, 0.07, 0.6, 0.3, 0), # left thigh
        (13, 12, [0, 0, -1], 0.42, 0.05, 0.6, 0.3, 0),    # left shin
        (14, 0, [-1, 0, 0], 0.09, 0.08, 0.2, 0.2, 0),
        (15, 14, [-0.05, 0, -1], 0.42, 0.07, 0.6, 0.3, 0),
        (16, 15, [0, 0, -1], 0.42, 0.05, 0.6, 0.3, 0),
    ]
    sym = [[[5, 6, 7], [8, 9, 10]], [[11, 12, 13], [14, 15, 16]]]
    return build("humanoid", links, 0.2, sym)


if __name__ == "__main__":
    outdir = sys.argv[1] if len(sys.argv) > 1 else "."
    for skel in (spider(), humanoid()):
        with open(f"{outdir}/{skel['name']}.skel", "w") as f:
            dump(skel, f)
