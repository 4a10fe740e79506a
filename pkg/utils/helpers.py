import dataclasses
import json
import math
from pathlib import Path

import numpy as np


def convert_to_serializable(obj):
    """Convert numpy types to native Python types for JSON serialization"""
    if isinstance(obj, np.floating):
        obj = float(obj)
    elif isinstance(obj, np.integer):
        return int(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.ndarray):
        return [convert_to_serializable(item) for item in obj.tolist()]
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return convert_to_serializable(dataclasses.asdict(obj))
    elif isinstance(obj, Path):
        return str(obj)
    elif isinstance(obj, dict):
        return {str(key): convert_to_serializable(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [convert_to_serializable(item) for item in obj]

    # NaN and inf are not valid JSON
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def ensure_output_directory(path):
    """Create the output directory if it doesn't exist"""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def results_basename(matrix_label, seed, l_max):
    """File stem embedding the matrix, master seed and iteration cap"""
    return f"ipa_{matrix_label}_seed{seed}_lmax{l_max}"


def write_json(payload, path):
    with open(path, 'w') as f:
        json.dump(convert_to_serializable(payload), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def read_json(path):
    try:
        with open(path, 'r') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"{path} is not valid JSON: {e}") from e
