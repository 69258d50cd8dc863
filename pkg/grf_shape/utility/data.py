import logging
from os import path

import numpy as np
import pandas as pd
import matplotlib.pyplot as plt

from grf_shape.learning.potentials import TRACE_COLUMNS, APPEARANCE_TRACE_COLUMNS
from grf_shape.learning.structure import STRUCTURE_TRACE_COLUMNS
from grf_shape.errors import UnknownTrace

log = logging.getLogger(__name__)

# kind -> (columns, x column, plotted columns)
TRACE_LAYOUTS = {
    "learning": (TRACE_COLUMNS, "iteration", ["gradient max-norm", "moment residual"]),
    "appearance": (APPEARANCE_TRACE_COLUMNS, "iteration", ["log-likelihood"]),
    "structure": (STRUCTURE_TRACE_COLUMNS, "step", ["score", "likelihood proxy"]),
}
LOG_SCALE = {"gradient max-norm", "moment residual"}


def trace_kind(df: pd.DataFrame) -> str:
    """
    @returns 'learning', 'appearance' or 'structure'
    @throws UnknownTrace if the columns match none of the trace layouts
    """
    columns = list(df.columns)
    for kind, (expected, _, _) in TRACE_LAYOUTS.items():
        if columns == expected:
            return kind
    raise UnknownTrace(f"Columns {columns} are not those of a learning, appearance or structure trace")


def save_dataframe(df: pd.DataFrame, p: str):
    """
    Save a dataframe. If p has 'csv' extension, DataFrame.to_csv is used, DataFrame.to_pickle otherwise
    """
    if p.endswith(".csv"):
        df.to_csv(p, index=False)
    else:
        df.to_pickle(p)
    log.info(f"save_dataframe: saved to '{p}'")


def load_trace(p: str) -> pd.DataFrame:
    """
    Load a trace written by save_dataframe and check its layout.
    @param p : path of the file. If it has 'csv' extension, pandas.read_csv is used, pandas.read_pickle otherwise
    """
    if not path.isfile(p):
        raise FileNotFoundError(f"load_trace: File does not exist: '{p}'")
    df = pd.read_csv(p) if p.endswith(".csv") else pd.read_pickle(p)
    log.debug(f"load_trace: {trace_kind(df)} trace with {len(df)} rows from '{p}'")
    return df


def plot_trace(data: str | pd.DataFrame, title=""):
    """
    Plot a learning, appearance or structure trace, one axis per value column
    @param data: filepath or dataframe
    """
    df = load_trace(data) if isinstance(data, str) else data
    _, x, columns = TRACE_LAYOUTS[trace_kind(df)]
    fig, axs = plt.subplots(len(columns), 1, sharex=True, squeeze=False)
    axs[0, 0].set_title(title)
    for ax, column in zip(axs[:, 0], columns):
        ax.plot(df[x], df[column], marker="." if x == "step" else None)
        ax.set_ylabel(column)
        if column in LOG_SCALE:
            ax.set_yscale("log")
        ax.grid(True)
    axs[-1, 0].set_xlabel(x)
    if x == "step":
        # label every structure step with its offset
        for step, action, dx, dy, score in df[["step", "action", "dx", "dy", "score"]].itertuples(index=False):
            axs[0, 0].annotate(f"{'+' if action == 'add' else '-'}({dx},{dy})", (step, score), fontsize="x-small")
    return fig


def plot_structure_histogram(hist: np.ndarray, title=""):
    """
    Grey coded histogram of selected offsets, as returned by structure.structure_histogram
    """
    d = (hist.shape[0] - 1) // 2
    fig, ax = plt.subplots()
    ax.set_title(title)
    im = ax.imshow(hist, cmap="Greys", extent=(-d - 0.5, d + 0.5, d + 0.5, -d - 0.5))
    ax.set_xlabel("dx")
    ax.set_ylabel("dy")
    fig.colorbar(im, ax=ax, label="selections")
    return fig


def plot_labelling(y: np.ndarray, confidence: np.ndarray | None = None, title=""):
    """Label map, next to the per pixel confidence if given"""
    n = 1 if confidence is None else 2
    fig, axs = plt.subplots(1, n, squeeze=False)
    axs[0, 0].set_title(title)
    axs[0, 0].imshow(y, cmap="tab20", interpolation="nearest")
    if confidence is not None:
        im = axs[0, 1].imshow(confidence, cmap="viridis", vmin=0, vmax=1)
        axs[0, 1].set_title("confidence")
        fig.colorbar(im, ax=axs[0, 1])
    return fig
