"""Pose trajectory persistence: one JSON object per line."""

from __future__ import annotations

import json

import numpy as np

from ..geometry.pose import Pose


def save_trajectory(path, poses: list[Pose], frame_ids=None) -> None:
    frame_ids = range(len(poses)) if frame_ids is None else frame_ids
    with open(path, "w", encoding="utf-8") as fh:
        for fid, pose in zip(frame_ids, poses):
            rec = {
                "frame": int(fid),
                "R": pose.R.reshape(-1).tolist(),
                "t": pose.t.tolist(),
            }
            fh.write(json.dumps(rec) + "\n")


def load_trajectory(path) -> tuple[list[int], list[Pose]]:
    frame_ids = []
    poses = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            frame_ids.append(int(rec["frame"]))
            poses.append(Pose(np.asarray(rec["R"]).reshape(3, 3), np.asarray(rec["t"])))
    return frame_ids, poses
