"""
Progress callbacks for the learning loops, called as update_func(i, step, **values).
The values are those of one trace row:
    potential learning:  grad_norm, residual
    appearance learning: loglik
"""
import numpy as np
import matplotlib.pyplot as plt

# keyword -> trace column
LABELS = {
    "grad_norm": "gradient max-norm",
    "residual": "moment residual",
    "loglik": "log-likelihood",
}
LOG_SCALE = {"grad_norm", "residual"}


def _update_print(i, step, **values):
    text = ", ".join(f"{LABELS.get(key, key)} = {value:.5f}" for key, value in values.items())
    print(f"n = {i:6d}, step = {step:.3e}, {text}" + " "*10, end='\r')


class _Monitor:
    """
    Live plot of the trace values, one axis per value.
    The axes are created at the first update from the keywords passed by the learning loop.
    """
    def __init__(self, max_points_shown=None, use_print=False, every=10):
        self.max_points_shown = max_points_shown
        self.use_print = use_print
        self.every = every
        self.index = []
        self.data = {}
        self.axes = {}
        self.lines = {}
        self.fig1 = None
        plt.ion()

    def _create_axes(self, keys: list):
        self.fig1, axs = plt.subplots(len(keys), 1, figsize=(8, 2.5 * len(keys)), sharex=True, squeeze=False)
        for ax, key in zip(axs[:, 0], keys):
            ax.set_ylabel(LABELS.get(key, key))
            if key in LOG_SCALE:
                ax.set_yscale("log")
            ax.grid(True)
            self.axes[key] = ax
            self.lines[key], = ax.plot([], [])
            self.data[key] = []
        axs[-1, 0].set_xlabel("iteration")

    def update(self, i, step, **values):
        if self.use_print:
            _update_print(i, step, **values)
        if self.fig1 is None:
            self._create_axes(list(values))
        self.index.append(i)
        for key in self.lines:
            self.data[key].append(values.get(key, np.nan))
        if i % self.every != 0:
            return
        for key, line in self.lines.items():
            line.set_data(self.index, self.data[key])
            ax = self.axes[key]
            ax.relim()
            if self.max_points_shown and i > self.max_points_shown:
                ax.set_xlim(i - self.max_points_shown, i)
            ax.autoscale_view()
        self.fig1.canvas.draw()
        self.fig1.canvas.flush_events()

    def __del__(self):
        if self.fig1 is not None:
            plt.close(self.fig1)
