"""3D dense captioning core: box geometry, point sampling, set matching,
caption metrics, decoding, and the m@kIoU evaluation protocol."""

import json as _json

from ._core import (  # noqa: F401
    __version__,
    ball_query,
    beam_search,
    bleu4,
    box_corners,
    cider_d,
    fourier_pe,
    fps,
    giou3d,
    greedy_decode,
    hungarian,
    iou3d,
    meteor_lite,
    mle_loss,
    nms,
    pair_cost,
    porter_stem,
    rougel,
    scst_loss,
    tokenize,
    total_loss,
    vote_loss,
)
from ._core import evaluate_files as _evaluate_files_json


def evaluate_files(gt_path, pred_path, **kwargs):
    """Run the evaluation protocol over JSONL files; returns a dict report."""
    return _json.loads(_evaluate_files_json(str(gt_path), str(pred_path), **kwargs))
