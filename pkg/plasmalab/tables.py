from __future__ import annotations

import io
from typing import Sequence, Union

import numpy as np
import numpy.typing as npt

# 17 significant digits round-trip every double
FLOAT_FORMAT = "%.17g"

Rows = Union[npt.ArrayLike, Sequence[Sequence[float]]]


def render_table(
    columns: Sequence[str],
    rows: Rows,
    header: Sequence[str] = (),
) -> str:
    """Render `# key = value` comment lines, a column line and the rows as CSV.

    Missing values are written as `nan`.
    """
    data = np.asarray(rows, dtype=np.float64)
    if data.size == 0:
        data = data.reshape(0, len(columns))
    if data.ndim != 2 or data.shape[1] != len(columns):
        raise ValueError(
            f"Rows have shape {data.shape}, expected {len(columns)} columns"
        )
    head = [f"# {line}" for line in header]
    head.append(",".join(columns))
    buffer = io.StringIO()
    np.savetxt(
        buffer,
        data,
        fmt=FLOAT_FORMAT,
        delimiter=",",
        header="\n".join(head),
        comments="",
    )
    return buffer.getvalue()


__all__ = ["FLOAT_FORMAT", "render_table"]
