""" Line charts of sweep CSVs, one line per selected series """

import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import pandas as pd
from matplotlib import pyplot as plt

from guardband.helper_functions import ChartError
from guardband.report_scripts.sweep import CSV_COLUMNS, series_name

METRIC_LABELS = {"p_block": "new-call blocking probability", "p_drop": "handoff dropping probability"}


def read_sweep_csv(csv_path):
    """
    Read a CSV written by ``sweep`` or ``alpha-scan`` and attach series names

    :param csv_path: path to the CSV
    :type csv_path: str
    :raises ChartError: if the file is not a sweep CSV
    :return: table with an extra 'series' column
    :rtype: pandas DataFrame
    """
    try:
        frame = pd.read_csv(csv_path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as err:
        raise ChartError(f"cannot read {csv_path}: {err}")

    missing = [col for col in CSV_COLUMNS if col not in frame.columns]
    if missing:
        raise ChartError(f"{csv_path} is not a sweep CSV, missing columns: {', '.join(missing)}")
    frame["series"] = [series_name(p, a) for p, a in zip(frame["policy"], frame["alpha"])]
    return frame


def list_series(csv_path):
    """series names available in a sweep CSV, in order of first appearance"""
    return list(dict.fromkeys(read_sweep_csv(csv_path)["series"]))


def render_chart(csv_path, series, chart_path, logger, metrics=("p_block",), log_scale=True):
    """
    Plot the selected series against the new-call arrival rate

    The chart is written to a temporary file next to ``chart_path`` and moved
    into place only after rendering succeeded; the CSV is never touched.

    :param csv_path: sweep CSV
    :type csv_path: str
    :param series: series names to plot, see :func:`list_series`
    :type series: list
    :param chart_path: output file, the extension selects the format (svg, pdf)
    :type chart_path: str
    :param metrics: columns to plot, any of p_block, p_drop
    :type metrics: tuple
    :param log_scale: logarithmic probability axis
    :type log_scale: bool
    :raises ChartError: on an empty selection, unknown series or metric, or a malformed CSV
    :return: None
    :rtype: None
    """
    series = list(series)
    if not series:
        raise ChartError("no series selected")
    unknown_metrics = [m for m in metrics if m not in METRIC_LABELS]
    if unknown_metrics or not metrics:
        raise ChartError(f"unknown metric(s) {unknown_metrics}, choose from {', '.join(METRIC_LABELS)}")

    frame = read_sweep_csv(csv_path)
    available = list(dict.fromkeys(frame["series"]))
    unknown = [s for s in series if s not in available]
    if unknown:
        raise ChartError(f"unknown series {', '.join(unknown)}; available: {', '.join(available)}")

    logger.info(f"Rendering {len(series)} series to {chart_path}")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        for name in series:
            data = frame[frame["series"] == name].sort_values("lambda_n")
            for metric in metrics:
                label = name if len(metrics) == 1 else f"{name} ({metric})"
                linestyle = "-" if metric == "p_block" else "--"
                ax.plot(data["lambda_n"], data[metric], marker="o", markersize=3, linestyle=linestyle, label=label)

        if log_scale:
            ax.set_yscale("log")
        ax.set_xlabel("new-call arrival rate (calls/s)")
        ax.set_ylabel(METRIC_LABELS[metrics[0]] if len(metrics) == 1 else "probability")
        ax.grid(True, which="both", linewidth=0.3)
        ax.legend(fontsize="small")
        fig.tight_layout()

        _, extension = os.path.splitext(chart_path)
        directory = os.path.dirname(os.path.abspath(chart_path))
        os.makedirs(directory, exist_ok=True)
        handle, tmp_path = tempfile.mkstemp(suffix=extension or ".svg", dir=directory)
        os.close(handle)
        try:
            fig.savefig(tmp_path, format=(extension.lstrip(".") or "svg"))
            os.replace(tmp_path, chart_path)
        except Exception:
            os.remove(tmp_path)
            raise
    finally:
        plt.close(fig)
