"""Monte Carlo comparison study against six standard benchmarks.

The design: a complete five-vertex graph (ten edges), one dominant edge,
a strong single-stage network effect, and compound Poisson noise.  Each
replication fits all models on the head of a simulated path and scores
one-step forecasts on the reserved tail.  A misspecification scenario
removes an edge from everything the models see while the data still comes
from the full network.
"""

from grou import monte_carlo_study, predictive_study_config


def show(rows, title):
    print(f"\n{title}")
    na_rmse = next(r["rmse_mean"] for r in rows if r["model"] == "NA")
    print(f"{'model':6s} {'RMSE':>16s} {'DirAcc':>16s} {'vs naive':>9s}")
    for r in rows:
        print(
            f"{r['model']:6s} {r['rmse_mean']:8.4f}({r['rmse_sd']:.4f}) "
            f"{r['diracc_mean']:8.4f}({r['diracc_sd']:.4f}) "
            f"{100 * (r['rmse_mean'] / na_rmse - 1):+8.2f}%"
        )


# 40 replications keep this demo quick; the acceptance suite runs 200.
config = predictive_study_config(sigma2=10.0, scenario="correct", n_paths=40, seed=1)
show(monte_carlo_study(config), "correct specification, jump variance 10")

config = predictive_study_config(
    sigma2=10.0, scenario=("missing_edge", (0, 1)), n_paths=40, seed=1
)
show(monte_carlo_study(config), "dominant edge removed from the fitted network")

print(
    "\nReading: RMSE barely separates the models (jump outliers dominate),\n"
    "directional accuracy favors the network-aware fits, and removing an\n"
    "edge from the fitted network costs only a little accuracy."
)
