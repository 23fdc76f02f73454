"""Figure rendering for experiment reports.

The CLI's report path writes one PNG per run next to the CSV/JSON output:
the empirical P(error after n) decay curve for trajectory runs, or a
stopping-time histogram for stopping-rule runs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_report_figure(report, path) -> None:
    stops = [s for s in report.stopping_times() if s is not None]
    trajectory_run = any(r.last_error is not None for r in report.results) or not stops

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    if trajectory_run:
        xs = [n for n, _ in report.curve]
        ys = [p for _, p in report.curve]
        ax.step(xs, ys, where="post", color="#1f6f8b", lw=1.8)
        ax.set_xscale("log")
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("step n")
        ax.set_ylabel("empirical P(error at some step ≥ n)")
        ax.set_title(f"{report.label}: decay of late errors over {report.trials} trials")
    else:
        ax.hist(stops, bins=min(40, max(10, len(set(stops)))), color="#1f6f8b")
        ax.set_xlabel("stopping step")
        ax.set_ylabel("trials")
        ax.set_title(f"{report.label}: stopping times over {report.trials} trials")
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
