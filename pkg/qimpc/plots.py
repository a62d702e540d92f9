"""
Static SVG figures of control signals, state trajectories and losses,
averaged over seeds with a one-standard-deviation band.
"""
import io
import logging
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import PreconditionError  # noqa: E402

log = logging.getLogger(__name__)

# fixed ids and no date stamp, so identical input gives identical bytes
matplotlib.rcParams["svg.hashsalt"] = "qimpc"
matplotlib.rcParams["svg.fonttype"] = "none"

PLOT_FILES = ("controls.svg", "states.svg", "loss.svg")


def series_bands(per_seed):
    """
    Mean over seeds and population standard deviation, truncated to the
    shortest run. The deviation is None for a single seed.
    """
    length = min(len(s) for s in per_seed)
    stacked = np.array([np.asarray(s, dtype=float)[:length] for s in per_seed])
    mean = stacked.mean(axis=0)
    if len(per_seed) < 2:
        return mean, None
    return mean, stacked.std(axis=0)


def series_comment(series):
    """
    XML comment holding every plotted series, one "<label> mean|std <values>"
    line each, values with 17 significant digits.
    """
    lines = ["qimpc series"]
    for label, mean, std in series:
        label = str(label).replace("-", "_").replace(" ", "_")
        lines.append("{} mean {}".format(label, " ".join("{:.17g}".format(v) for v in mean)))
        if std is not None:
            lines.append("{} std {}".format(label, " ".join("{:.17g}".format(v) for v in std)))
    return "<!-- {}\n-->\n".format("\n".join(lines))


def parse_series_comment(text):
    """
    Series embedded by series_comment, as {(label, "mean" or "std"): array}.
    """
    start = text.find("<!-- qimpc series\n")
    if start < 0:
        raise PreconditionError("no embedded series found")
    end = text.index("-->", start)
    series = {}
    for line in text[start:end].splitlines()[1:]:
        label, kind, *values = line.split(" ")
        series[(label, kind)] = np.array([float(v) for v in values])
    return series


def _draw(ax, per_seed, label, series):
    mean, std = series_bands(per_seed)
    steps = np.arange(mean.shape[0])
    line, = ax.plot(steps, mean, label=label)
    if std is not None:
        ax.fill_between(steps, mean - std, mean + std, color=line.get_color(), alpha=0.2, linewidth=0)
    series.append((label, mean, std))


def _figure(title, ylabel):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.set_title(title)
    ax.set_xlabel("iteration")
    ax.set_ylabel(ylabel)
    return fig, ax


def _save(fig, path, series):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    svg = buf.getvalue()
    closing = svg.rindex("</svg>")
    svg = svg[:closing] + series_comment(series) + svg[closing:]
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(svg)
    os.replace(tmp, path)


def emit_plots(logs, out_dir, state_labels=None, control_labels=None, log_scale=False, title=""):
    """
    Write controls.svg, states.svg and loss.svg for one experiment.
    """
    logs = [lg for lg in logs if len(lg)]
    if not logs:
        raise PreconditionError("plots need at least one non-empty log")
    os.makedirs(out_dir, exist_ok=True)
    state_labels = state_labels or ["x_{}".format(i) for i in range(logs[0].states().shape[1])]
    control_labels = control_labels or ["u_{}".format(i) for i in range(logs[0].controls().shape[1])]

    series = []
    fig, ax = _figure("{} controls".format(title).strip(), "clipped control")
    for i, label in enumerate(control_labels):
        _draw(ax, [lg.controls()[:, i] for lg in logs], label, series)
    ax.legend()
    _save(fig, os.path.join(out_dir, "controls.svg"), series)

    series = []
    fig, ax = _figure("{} states".format(title).strip(), "state")
    for i, label in enumerate(state_labels):
        _draw(ax, [lg.states()[:, i] for lg in logs], label, series)
    ax.legend()
    _save(fig, os.path.join(out_dir, "states.svg"), series)

    series = []
    fig, ax = _figure("{} loss".format(title).strip(), "stage loss")
    _draw(ax, [lg.losses() for lg in logs], "loss", series)
    if log_scale:
        ax.set_yscale("log")
    _save(fig, os.path.join(out_dir, "loss.svg"), series)
    log.info("wrote %d plots to %s", len(PLOT_FILES), out_dir)
    return [os.path.join(out_dir, name) for name in PLOT_FILES]
