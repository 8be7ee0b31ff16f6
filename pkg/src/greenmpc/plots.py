"""Standalone SVG figures with their plotted data embedded as a CSV comment."""
import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "greenmpc"
plt.rcParams["svg.fonttype"] = "none"


def _data_comment(columns):
    names = list(columns)
    rows = zip(*[np.asarray(columns[k]).tolist() for k in names])
    body = "\n".join(",".join(repr(v) if isinstance(v, float) else str(v) for v in r) for r in rows)
    text = ",".join(names) + "\n" + body
    return "<!-- data\n" + text.replace("--", "- -") + "\n-->\n"


def save_svg(fig, path, columns):
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    svg = buf.getvalue()
    i = svg.index("<svg")
    svg = svg[:i] + _data_comment(columns) + svg[i:]
    with open(path, "w", newline="\n") as fh:
        fh.write(svg)


def plot_day_forecast(path, hours, actual, predicted, ylabel, title):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(hours, actual, "-", label="actual")
    ax.plot(hours, predicted, "--", label="predicted")
    ax.set_xlabel("hour")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    save_svg(fig, path, {"hour": hours, "actual": actual, "predicted": predicted})


def plot_recipes(path, hours, solar, optimized, baseline, title):
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(hours, solar, "-", label="natural light")
    ax.step(hours, optimized, "--", where="post", label="optimized artificial")
    ax.step(hours, baseline, ":", where="post", label="baseline artificial")
    ax.set_xlabel("hour")
    ax.set_ylabel("PPFD (umol m-2 s-1)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    save_svg(fig, path, {"hour": hours, "solar": solar, "optimized": optimized,
                         "baseline": baseline})


def plot_energy_profile(path, hours, baseline_kwh, optimized_kwh, title):
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.plot(hours, np.asarray(baseline_kwh) / 1000, "-", lw=0.8, label="baseline")
    ax.plot(hours, np.asarray(optimized_kwh) / 1000, "-", lw=0.8, label="optimized")
    ax.set_xlabel("hour")
    ax.set_ylabel("energy (MWh per h)")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    save_svg(fig, path, {"hour": hours, "baseline_kwh": baseline_kwh,
                         "optimized_kwh": optimized_kwh})
